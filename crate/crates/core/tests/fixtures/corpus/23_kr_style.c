// expect address_taken: kr_visit
// expect globals: hook
// expect functions: kr_visit kr_walk
// expect assignments: kr_visit
int (*hook)();

int kr_visit(n)
    int n;
{
    return n;
}

void kr_walk(a, b)
    int a;
    char *b;
{
    hook = kr_visit;
}
