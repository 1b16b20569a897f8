//! Random small C programs exercising every resolver.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use std::fmt::Write as _;

const SIGS: &[&[&str]] = &[
    &["int"],
    &["int", "int"],
    &["void *"],
    &["char *", "int"],
    &["struct obj *"],
    &["long"],
    &["double", "int"],
];

fn params(sig: &[&str]) -> String {
    sig.iter().enumerate().map(|(i, t)| format!("{t} a{i}")).collect::<Vec<_>>().join(", ")
}

fn fnptr(name: &str, sig: &[&str]) -> String {
    format!("int (*{name})({})", sig.join(", "))
}

fn args(sig: &[&str]) -> String {
    (0..sig.len()).map(|i| format!("a{i}")).collect::<Vec<_>>().join(", ")
}

pub struct Program {
    pub source: String,
    pub icalls: usize,
}

pub fn program(seed: u64) -> Program {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut s = String::from("struct obj { int id; };\n");
    let n_funcs = rng.gen_range(2..7);
    let fsig: Vec<usize> = (0..n_funcs).map(|_| rng.gen_range(0..SIGS.len())).collect();
    for (i, &k) in fsig.iter().enumerate() {
        let _ = writeln!(s, "static int cb{i}({}) {{ return {}; }}", params(SIGS[k]), i);
    }
    let n_fields = rng.gen_range(1..4);
    let field_sig: Vec<usize> = (0..n_fields).map(|_| fsig[rng.gen_range(0..n_funcs)]).collect();
    s.push_str("struct ops {\n");
    for (j, &k) in field_sig.iter().enumerate() {
        let _ = writeln!(s, "    {};", fnptr(&format!("f{j}"), SIGS[k]));
    }
    s.push_str("};\n");
    let pick = |rng: &mut StdRng| -> String {
        if rng.gen_bool(0.2) {
            "0".into()
        } else {
            format!("cb{}", rng.gen_range(0..n_funcs))
        }
    };
    let init: Vec<String> = (0..n_fields).map(|_| pick(&mut rng)).collect();
    let _ = writeln!(s, "struct ops g_ops = {{ {} }};", init.join(", "));
    let mut setters = String::new();
    for j in 0..n_fields {
        if rng.gen_bool(0.4) {
            let _ = writeln!(setters, "    o->f{j} = {};", pick(&mut rng));
        }
        if rng.gen_bool(0.15) {
            let _ = writeln!(setters, "    o->f{j} = (void *)p;");
        }
    }
    let _ = writeln!(s, "void setup(struct ops *o, void *p) {{\n{setters}    (void)p;\n}}");
    let _ = writeln!(s, "void register_any(void *f);");
    let mut reg = String::new();
    for _ in 0..rng.gen_range(0..3) {
        let _ = writeln!(reg, "    register_any((void *)cb{});", rng.gen_range(0..n_funcs));
    }
    let _ = writeln!(s, "void registry(void) {{\n{reg}}}");
    let mut icalls = 0;
    for j in 0..n_fields {
        if rng.gen_bool(0.7) {
            let sig = SIGS[field_sig[j]];
            let _ = writeln!(
                s,
                "int via_field{j}(struct ops *o, {}) {{ return o->f{j}({}); }}",
                params(sig),
                args(sig)
            );
            icalls += 1;
        }
    }
    for l in 0..rng.gen_range(0..3) {
        let k = fsig[rng.gen_range(0..n_funcs)];
        let sig = SIGS[k];
        let same: Vec<usize> = (0..n_funcs).filter(|&i| fsig[i] == k).collect();
        let first = same.choose(&mut rng).unwrap();
        let mut body = format!("    {} = cb{first};\n", fnptr("fp", sig));
        match rng.gen_range(0..4) {
            0 => {
                let _ = writeln!(body, "    if (a0) fp = cb{};", same.choose(&mut rng).unwrap());
            }
            1 => body.push_str("    fp = 0;\n"),
            2 => body.push_str("    register_any(&fp);\n"),
            _ => {}
        }
        let _ = writeln!(s, "int via_local{l}({}) {{\n{body}    return fp({});\n}}", params(sig), args(sig));
        icalls += 1;
    }
    if rng.gen_bool(0.5) {
        let sig = SIGS[fsig[0]];
        let _ = writeln!(s, "int via_param({}, {}) {{ return p({}); }}", fnptr("p", sig), params(sig), args(sig));
        icalls += 1;
    }
    Program { source: s, icalls }
}
