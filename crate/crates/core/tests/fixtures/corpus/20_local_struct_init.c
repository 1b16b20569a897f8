// expect address_taken: visit_node visit_leaf
// expect structs: visitor
// expect functions: visit_node visit_leaf walk
// expect declarations: visit_node visit_leaf
// expect icalls: 1
struct visitor {
    int (*node)(void *);
    int (*leaf)(void *);
};

static int visit_node(void *n) { return n != 0; }
static int visit_leaf(void *n) { return n == 0; }

int walk(void *root) {
    struct visitor v = { visit_node, visit_leaf };
    return v.node(root);
}
