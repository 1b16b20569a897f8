use std::collections::BTreeMap;

/// Hand-written (argument, parameter, should-match) cases. `?` is an unknown type.
pub const PAIRS: &[(&str, &str, bool)] = &[
    // identical bases and depths
    ("int", "int", true),
    ("int", "long", false),
    ("long", "long", true),
    ("char", "char", true),
    ("double", "double", true),
    ("double", "float", false),
    ("unsigned int", "unsigned int", true),
    ("unsigned int", "int", false),
    ("struct foo", "struct foo", true),
    ("struct foo", "struct foo *", false),
    ("int *", "int", false),
    ("int **", "int *", false),
    ("int *", "int *", true),
    ("struct foo *", "struct bar *", false),
    ("struct foo *", "struct foo *", true),
    // qualifiers are ignored
    ("const int", "int", true),
    ("volatile long", "long", true),
    ("const char *", "char *", true),
    ("int * const", "int *", true),
    ("const struct foo *", "struct foo *", true),
    // void* and char* stand for any pointer
    ("void *", "struct foo *", true),
    ("struct foo *", "void *", true),
    ("char *", "int *", true),
    ("int *", "char *", true),
    ("void *", "int **", true),
    ("char *", "struct foo **", true),
    ("const void *", "struct foo *", true),
    ("const char *", "double *", true),
    ("void *", "int", false),
    ("char *", "long", false),
    ("void **", "int **", false),
    ("unsigned char *", "struct foo *", false),
    // unknown matches anything
    ("?", "int", true),
    ("int", "?", true),
    ("?", "struct foo *", true),
    ("?", "?", true),
    // arrays decay, functions decay, function pointers match each other
    ("int []", "int *", true),
    ("char [16]", "char *", true),
    ("void (*)(int)", "int (*)(void)", true),
    ("void (int)", "void (*)(int)", true),
    ("void (*)(int)", "int", false),
    ("void (*)(void)", "void *", true),
    // enums are ints
    ("enum color", "int", true),
    ("enum color", "long", false),
    // aliases resolve through the alias table
    ("u32", "unsigned int", true),
    ("handle_t", "struct handle *", true),
    ("handle_t", "struct other *", false),
    ("cb_t", "int (*)(char *)", true),
    ("size_t", "size_t", true),
    ("size_t", "int", false),
];

pub fn aliases() -> BTreeMap<String, String> {
    [("u32", "unsigned int"), ("handle_t", "struct handle *"), ("cb_t", "void (*)(int)")]
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

/// (arguments, parameters, variadic, should-accept)
pub const ARITY: &[(&[&str], &[&str], bool, bool)] = &[
    (&["int"], &["int"], false, true),
    (&["int", "int"], &["int"], false, false),
    (&["int"], &["int", "int"], false, false),
    (&["int", "int"], &["int"], true, true),
    (&[], &["int"], true, false),
    (&["char *", "int", "double"], &["char *"], true, true),
    (&["long", "int"], &["int"], true, false),
    (&[], &[], false, true),
];
