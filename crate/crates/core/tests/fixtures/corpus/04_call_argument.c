// expect address_taken: cmp_int
// expect functions: cmp_int sort_ints
// expect calls: cmp_int
void qsort(void *base, unsigned long n, unsigned long size, int (*cmp)(const void *, const void *));

static int cmp_int(const void *a, const void *b) { return *(const int *)a - *(const int *)b; }

void sort_ints(int *v, unsigned long n) { qsort(v, n, sizeof *v, cmp_int); }
