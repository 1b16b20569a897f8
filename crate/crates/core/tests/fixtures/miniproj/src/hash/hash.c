unsigned long hash_string_key(void *table, const char *key)
{
    unsigned long h = 5381;
    (void)table;
    while (*key)
        h = h * 33 + (unsigned char)*key++;
    return h;
}

unsigned long hash_table_insert(void *table, const char *key)
{
    unsigned long (*hasher)(void *, const char *) = hash_string_key;
    return hasher(table, key);
}
