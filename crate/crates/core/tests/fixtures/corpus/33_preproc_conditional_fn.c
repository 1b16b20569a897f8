// expect address_taken: backend_a backend_b
// expect globals: backend
// expect functions: backend_a backend_b
// expect declarations: backend_a backend_b
static int backend_a(void) { return 1; }
static int backend_b(void) { return 2; }

#ifdef USE_A
int (*backend)(void) = backend_a;
#else
int (*backend)(void) = backend_b;
#endif
