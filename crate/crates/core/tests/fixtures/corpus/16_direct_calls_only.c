// expect address_taken:
// expect functions: leaf middle top
static int leaf(int x) { return x * 2; }
static int middle(int x) { return leaf(x) + 1; }
int top(void) { return middle(leaf(3)); }
