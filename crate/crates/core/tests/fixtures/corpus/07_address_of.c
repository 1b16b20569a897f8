// expect address_taken: tick
// expect globals: timer_cb
// expect functions: tick arm
// expect assignments: tick
void (*timer_cb)(unsigned);

static void tick(unsigned n) { (void)n; }

void arm(void) { timer_cb = &tick; }
