// expect address_taken: raw_handler
// expect aliases: generic_fn
// expect globals: slot
// expect functions: raw_handler install
// expect assignments: raw_handler
typedef void (*generic_fn)(void);

generic_fn slot;

static int raw_handler(int sig) { return sig; }

void install(void) { slot = (generic_fn)raw_handler; }
