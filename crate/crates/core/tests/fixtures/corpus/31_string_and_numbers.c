// expect address_taken: print_fn
// expect structs: cmd
// expect globals: commands
// expect functions: print_fn
// expect declarations: print_fn
struct cmd {
    const char *name;
    int argc;
    int (*fn)(int, char **);
};

static int print_fn(int argc, char **argv) { (void)argv; return argc; }

static struct cmd commands[] = {
    { "print", 1, print_fn },
    { "noop", 0, 0 },
};
