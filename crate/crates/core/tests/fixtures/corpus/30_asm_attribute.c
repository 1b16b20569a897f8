// expect address_taken: ctor_hook
// expect globals: init_array_entry
// expect functions: ctor_hook unused_fn
// expect declarations: ctor_hook
__attribute__((unused)) static void unused_fn(void) {}

static void ctor_hook(void) {}

void (*init_array_entry)(void) __attribute__((used)) = ctor_hook;
