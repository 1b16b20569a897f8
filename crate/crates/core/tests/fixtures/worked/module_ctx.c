typedef long ngx_int_t;
typedef struct ngx_conf_s ngx_conf_t;

typedef struct {
    ngx_int_t (*preconfiguration)(ngx_conf_t *cf);
    ngx_int_t (*postconfiguration)(ngx_conf_t *cf);
    void *(*create_main_conf)(ngx_conf_t *cf);
    char *(*init_main_conf)(ngx_conf_t *cf, void *conf);
    void *(*create_srv_conf)(ngx_conf_t *cf);
    char *(*merge_srv_conf)(ngx_conf_t *cf, void *prev, void *conf);
    void *(*create_loc_conf)(ngx_conf_t *cf);
    char *(*merge_loc_conf)(ngx_conf_t *cf, void *prev, void *conf);
} ngx_http_module_t;

static ngx_int_t ngx_http_log_init(ngx_conf_t *cf);
static void *ngx_http_log_create_main_conf(ngx_conf_t *cf);
static void *ngx_http_log_create_loc_conf(ngx_conf_t *cf);
static char *ngx_http_log_merge_loc_conf(ngx_conf_t *cf, void *parent, void *child);

static ngx_http_module_t ngx_http_log_module_ctx = {
    NULL,
    ngx_http_log_init,
    ngx_http_log_create_main_conf,
    NULL,
    NULL,
    NULL,
    ngx_http_log_create_loc_conf,
    ngx_http_log_merge_loc_conf
};

static ngx_int_t ngx_http_log_init(ngx_conf_t *cf) { return cf != NULL; }
static void *ngx_http_log_create_main_conf(ngx_conf_t *cf) { return cf; }
static void *ngx_http_log_create_loc_conf(ngx_conf_t *cf) { return cf; }
static char *ngx_http_log_merge_loc_conf(ngx_conf_t *cf, void *parent, void *child) { (void)cf; (void)parent; return child; }

void *ngx_http_block(ngx_http_module_t *module, ngx_conf_t *cf)
{
    return module->create_main_conf(cf);
}
