// expect address_taken: op_add op_sub op_mul
// expect aliases: binop_t
// expect globals: ops
// expect functions: op_add op_sub op_mul apply
// expect declarations: op_add op_sub op_mul
// expect icalls: 1
typedef int (*binop_t)(int, int);

static int op_add(int a, int b) { return a + b; }
static int op_sub(int a, int b) { return a - b; }
static int op_mul(int a, int b) { return a * b; }

static const binop_t ops[] = { op_add, op_sub, op_mul };

int apply(int which, int a, int b) { return ops[which](a, b); }
