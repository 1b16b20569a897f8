// expect address_taken:
// expect functions: helper use
// expect icalls: 1
static int helper(int x) { return x + 1; }

int use(int (*helper)(int), int v) {
    int (*g)(int) = helper;
    return g(v);
}
