// expect address_taken: as_int as_ptr
// expect structs: value_ops
// expect functions: as_int as_ptr choose_ops
// expect assignments: as_int as_ptr
union value_ops {
    int (*as_int)(long);
    void *(*as_ptr)(long);
};

static int as_int(long v) { return (int)v; }
static void *as_ptr(long v) { return (void *)v; }

void choose_ops(union value_ops *u, int want_ptr) {
    if (want_ptr) u->as_ptr = as_ptr;
    else u->as_int = as_int;
}
