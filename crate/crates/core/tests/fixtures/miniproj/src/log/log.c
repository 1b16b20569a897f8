#include <stdio.h>

int log_error_write(void *logger, const char *message)
{
    return fprintf(stderr, "error: %s\n", message) > 0 && logger != NULL;
}

int log_error_flush(void *logger, const char *message)
{
    (void)message;
    return fflush(logger);
}
