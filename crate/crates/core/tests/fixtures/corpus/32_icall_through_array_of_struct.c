// expect address_taken: h_get h_put
// expect structs: route
// expect globals: routes
// expect functions: h_get h_put dispatch
// expect declarations: h_get h_put
// expect icalls: 1
struct route {
    const char *verb;
    int (*handle)(void *req);
};

static int h_get(void *req) { return req != 0; }
static int h_put(void *req) { return req == 0; }

static struct route routes[] = {
    { .verb = "GET", .handle = h_get },
    { .verb = "PUT", .handle = h_put },
};

int dispatch(int i, void *req) { return routes[i].handle(req); }
