static int scale_double(int x) { return 2 * x; }
static int scale_triple(int x) { return 3 * x; }

int scale(int x)
{
    int (*fp)(int) = scale_double;
    return fp(x);
}

int scale_other(int x)
{
    int (*g)(int) = scale_triple;
    return g(x) + 1;
}
