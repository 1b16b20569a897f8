// expect address_taken: pick_fast pick_slow
// expect aliases: strategy_t
// expect functions: pick_fast pick_slow choose
typedef int (*strategy_t)(int);

static int pick_fast(int n) { return n; }
static int pick_slow(int n) { return n * n; }

strategy_t choose(int fast) { return fast ? pick_fast : pick_slow; }
