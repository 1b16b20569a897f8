struct config_parser {
    int (*parse_line)(void *config, const char *line);
};

int parse_config_line(void *config, const char *line)
{
    return config != 0 && line[0] != '#';
}

static struct config_parser default_config_parser = { parse_config_line };

int parse_config_file(struct config_parser *parser, void *config, const char *line)
{
    return parser->parse_line(config, line);
}

int parse_default(void *config, const char *line)
{
    return parse_config_file(&default_config_parser, config, line);
}
