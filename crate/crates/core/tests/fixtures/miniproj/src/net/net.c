#include <sys/socket.h>
#include <string.h>

int net_send_packet(void *sock, const char *packet)
{
    return send(*(int *)sock, packet, strlen(packet), 0);
}

int net_recv_packet(void *sock, const char *packet)
{
    return recv(*(int *)sock, (void *)packet, 512, 0);
}
