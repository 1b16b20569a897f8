// expect address_taken: start
// expect globals: state_fn
// expect functions: start step
// expect assignments: start
enum state { IDLE, RUNNING };

void (*state_fn)(void);

static void start(void) {}

void step(int s) {
    int cur = RUNNING;
    if (s == IDLE) state_fn = start;
    (void)cur;
}
