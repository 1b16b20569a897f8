// expect address_taken: on_read
// expect globals: handler
// expect functions: on_read setup fire
// expect assignments: on_read
// expect icalls: 1
void (*handler)(int);

static void on_read(int fd) { (void)fd; }

void setup(void) { handler = on_read; }

void fire(int fd);
void fire(int fd) { handler(fd); }
