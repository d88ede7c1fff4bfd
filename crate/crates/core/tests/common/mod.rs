//! Seeded model generators shared by the integration tests. Every generator
//! returns DSL text together with whatever oracle data it knows by
//! construction.

#![allow(dead_code)]

use automode::frontend::parse_str;
use automode::model::Project;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::PathBuf;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn models_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../models"))
}

pub fn read_model(name: &str) -> String {
    std::fs::read_to_string(models_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn parse_ok(src: &str) -> Project {
    parse_str(src).unwrap_or_else(|d| panic!("{}\n{src}", automode::diag::render(&d)))
}

const MTD_INPUTS: [&str; 3] = ["a", "b", "e"];

fn int_expr(r: &mut ChaCha8Rng, ins: &[&str]) -> String {
    let nums: Vec<&&str> = ins.iter().filter(|i| **i != "e").collect();
    let k = r.gen_range(-3..=3);
    match (nums.choose(r), r.gen_range(0..4)) {
        (None, _) => k.to_string(),
        (Some(v), 0) => format!("{v} + {k}"),
        (Some(v), 1) => format!("{v} * {}", r.gen_range(-2..=2)),
        (Some(v), 2) if ins.contains(&"e") => format!("if e then {v} else {k}"),
        (Some(v), _) => format!("{v} - {}", nums.choose(r).unwrap()),
    }
}

fn bool_expr(r: &mut ChaCha8Rng, ins: &[&str]) -> String {
    let nums: Vec<&&str> = ins.iter().filter(|i| **i != "e").collect();
    match (nums.choose(r), r.gen_range(0..3)) {
        (Some(v), 0) => format!("{v} > {}", r.gen_range(-3..=3)),
        (Some(v), 1) if ins.contains(&"e") => format!("e || {v} == 0"),
        _ if ins.contains(&"e") => "!e".into(),
        _ => "true".into(),
    }
}

fn guard(r: &mut ChaCha8Rng) -> String {
    match r.gen_range(0..6) {
        0 => format!("a > {}", r.gen_range(-4..=4)),
        1 => format!("b <= {}", r.gen_range(-4..=4)),
        2 => "e".into(),
        3 => "!e".into(),
        4 => format!("a + b > {}", r.gen_range(-6..=6)),
        _ => format!("e && a < {}", r.gen_range(-4..=4)),
    }
}

/// A random MTD component `M` with up to `max_modes` modes. Mode behaviors
/// mix functions, stateful dataflow and STDs over subsets of the ports.
pub fn random_mtd(r: &mut ChaCha8Rng, max_modes: usize) -> String {
    let n = r.gen_range(1..=max_modes);
    let mut s = String::from("project R;\nlevel FDA;\nbase_tick 10;\nsystem M;\n\n");
    for i in 0..n {
        let ins: Vec<&str> = MTD_INPUTS.iter().copied().filter(|_| r.gen_bool(0.6)).collect();
        // Every mode produces every output of the MTD.
        let z = " out z : bool;";
        let _ = write!(s, "component B{i} {{");
        match r.gen_range(0..3) {
            0 => {
                for x in &ins {
                    let _ = write!(s, " in {x} : {};", if *x == "e" { "bool" } else { "int" });
                }
                let _ = writeln!(
                    s,
                    " out y : int;{z} function {{ y = {}; z = {}; }} }}",
                    int_expr(r, &ins),
                    bool_expr(r, &ins)
                );
            }
            1 => {
                // Previous input sample: state frozen while the mode is inactive.
                let k = r.gen_range(-2..=2);
                let _ = writeln!(
                    s,
                    " in a : int; out y : int;{z} dfd {{ block d : delay({k}); block w : Pos; \
                     channel a -> d.x, w.a; channel d.y -> y; channel w.z -> z; }} }}"
                );
            }
            _ => {
                let k = r.gen_range(1..=3);
                let _ = writeln!(
                    s,
                    " in a : int; out y : int;{z} std {{ initial S; state S; var n : int = 0; \
                     transition S -> S priority 1 do {{ n := n + {k}; y := n + a; z := n > 4; }}; }} }}"
                );
            }
        }
    }
    s.push_str("component Pos { in a : int; out z : bool; function { z = a > 0; } }\n");
    s.push_str("component M {\n  in a : int range [-5, 5];\n  in b : int range [-5, 5];\n  in e : bool;\n  out y : int;\n  out z : bool;\n  mtd {\n    initial M0;\n");
    for i in 0..n {
        let _ = writeln!(s, "    mode M{i} : B{i};");
    }
    // Each mode gets an entry from an earlier one, then random extras.
    let mut next_prio = vec![1; n];
    let mut add = |s: &mut String, r: &mut ChaCha8Rng, from: usize, to: usize| {
        let _ = writeln!(s, "    transition M{from} -> M{to} priority {} on {};", next_prio[from], guard(r));
        next_prio[from] += 1;
    };
    for i in 1..n {
        let from = r.gen_range(0..i);
        add(&mut s, r, from, i);
    }
    for _ in 0..r.gen_range(0..=n + 1) {
        let (from, to) = (r.gen_range(0..n), r.gen_range(0..n));
        add(&mut s, r, from, to);
    }
    s.push_str("  }\n}\n");
    s
}

/// A random DFD `N` of `F2` blocks, some inputs fed through delay blocks.
/// Returns the text and, as oracle, the instantaneous block edges.
pub fn random_dfd(r: &mut ChaCha8Rng) -> (String, usize, Vec<(usize, usize)>) {
    let n = r.gen_range(2..=7);
    let mut s = String::from(
        "project C;\nlevel FDA;\nsystem N;\ncomponent F2 { in a : int; in b : int; out y : int; function { y = a + b; } }\n\
         component N {\n  in x : int;\n  out y : int;\n  dfd {\n",
    );
    let mut edges = Vec::new();
    for i in 0..n {
        let _ = writeln!(s, "    block f{i} : F2;");
    }
    let mut delays = 0;
    for i in 0..n {
        for port in ["a", "b"] {
            // Mostly forward edges so that both outcomes are common.
            let source = match r.gen_range(0..10) {
                0 | 1 => None,
                2 | 3 => Some(r.gen_range(0..n)),
                _ if i > 0 => Some(r.gen_range(0..i)),
                _ => None,
            };
            let src = source.map_or("x".to_string(), |j| format!("f{j}.y"));
            if source.is_some() && r.gen_bool(0.3) {
                let _ = writeln!(s, "    block d{delays} : delay(0);\n    channel {src} -> d{delays}.x;\n    channel d{delays}.y -> f{i}.{port};");
                delays += 1;
            } else {
                let _ = writeln!(s, "    channel {src} -> f{i}.{port};");
                if let Some(j) = source {
                    edges.push((j, i));
                }
            }
        }
    }
    s.push_str("    channel f0.y -> y;\n  }\n}\n");
    (s, n, edges)
}

/// Brute-force cycle detection by transitive closure.
pub fn has_cycle(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut reach = vec![vec![false; n]; n];
    for &(a, b) in edges {
        reach[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                reach[i][j] |= reach[i][k] && reach[k][j];
            }
        }
    }
    (0..n).any(|i| reach[i][i])
}

/// A random FAA model: `k` actuator ports, each written by a random number
/// of producers. Returns the text and the number of ports with two or more
/// writers.
pub fn random_faa(r: &mut ChaCha8Rng) -> (String, usize) {
    let k = r.gen_range(1..=4);
    let mut s = String::from("project F;\nlevel FAA;\nsystem Car;\n");
    let _ = write!(s, "component Plant {{");
    for a in 0..k {
        let _ = write!(s, " in act{a} : int actuator;");
    }
    s.push_str(" }\n");
    let mut writers = Vec::new();
    for _ in 0..k {
        writers.push(r.gen_range(0..=4));
    }
    let total: usize = writers.iter().sum();
    for w in 0..total.max(1) {
        let _ = writeln!(s, "component W{w} {{ out cmd : int; }}");
    }
    s.push_str("component Car {\n  ssd {\n    sub plant : Plant;\n");
    for w in 0..total.max(1) {
        let _ = writeln!(s, "    sub w{w} : W{w};");
    }
    let mut next = 0;
    for (a, &n) in writers.iter().enumerate() {
        for _ in 0..n {
            let _ = writeln!(s, "    channel w{next}.cmd -> plant.act{a};");
            next += 1;
        }
    }
    s.push_str("  }\n}\n");
    (s, writers.iter().filter(|&&n| n >= 2).count())
}

/// Two clusters at the given periods connected with or without a delay.
/// All flows run every 100 ms, a multiple of every cluster period.
pub fn ccd_pair(prod_ms: u32, cons_ms: u32, delayed: bool) -> String {
    let path =
        if delayed { "block d : delay(0); channel p.y -> d.x; channel d.y -> c.x;" } else { "channel p.y -> c.x;" };
    format!(
        "project G; level LA; base_tick 10; system Top;
         component PB {{ in a : int; out y : int; function {{ y = a; }} }}
         component CB {{ in x : int; out z : int; function {{ z = x; }} }}
         cluster P {{ period {prod_ms}; in a : int @ every(10); out y : int @ every(10); behavior PB; }}
         cluster C {{ period {cons_ms}; in x : int @ every(10); out z : int @ every(10); behavior CB; }}
         component Top {{ in a : int @ every(10); out z : int @ every(10); dfd {{ block p : P; block c : C; channel a -> p.a; {path} channel c.z -> z; }} }}"
    )
}

fn abstract_type(r: &mut ChaCha8Rng, enums: usize) -> String {
    match r.gen_range(0..4) {
        0 => "int".into(),
        1 => "real".into(),
        2 if enums > 0 => format!("E{}", r.gen_range(0..enums)),
        _ => "bool".into(),
    }
}

fn impl_type(r: &mut ChaCha8Rng) -> String {
    match r.gen_range(0..2) {
        0 => ["int8", "int16", "int32"].choose(r).unwrap().to_string(),
        _ => format!("fixed(int16, 0.{}, {})", r.gen_range(1..=5), r.gen_range(-2..=2)),
    }
}

/// A random well-formed project covering every definition kind: enums,
/// functions, STDs, DFDs, SSDs, MTDs, unspecified components, clusters,
/// technical architecture and deployment.
pub fn random_project(r: &mut ChaCha8Rng) -> String {
    let level = ["FAA", "FDA", "LA"].choose(r).unwrap();
    let base = *[1, 5, 10].choose(r).unwrap();
    let mut s = format!("project P{};\nlevel {level};\nbase_tick {base};\n", r.gen_range(0..100));
    let enums = r.gen_range(0..3);
    for e in 0..enums {
        let labels: Vec<String> = (0..r.gen_range(1..4)).map(|l| format!("L{e}_{l}")).collect();
        let _ = writeln!(s, "enum E{e} {{ {} }}", labels.join(", "));
    }
    let parts = r.gen_range(1..5);
    for i in 0..parts {
        match r.gen_range(0..5) {
            0 if *level == "FAA" => {
                let ty = abstract_type(r, enums);
                let range = if r.gen_bool(0.3) { " range [-4, 4.5]" } else { "" };
                let clock = ["", " @ every(2)", " @ every(3, true)", " @ present(u)", " @ every(2) and not every(4)"]
                    .choose(r)
                    .unwrap();
                let _ = writeln!(s, "component U{i} {{ in u : {ty}{range}{clock}; out v; }}");
            }
            1 => {
                let _ = writeln!(
                    s,
                    "component S{i} {{ in a : int; out y : int; std {{ initial A; state A; state B; var n : int = {}; \
                     transition A -> B priority 1 on a > {} do {{ n := n + 1; y := n; }}; transition B -> A priority 1 on true do {{ y := -n; }}; }} }}",
                    r.gen_range(-3..3),
                    r.gen_range(-3..3)
                );
            }
            2 => {
                let init = ["0", "-", "7", "-3"].choose(r).unwrap();
                let _ = writeln!(
                    s,
                    "component D{i} {{ in a : int; out y : int @ every(2); dfd {{ block h : hold({}); block w : when(every(2, true)); block d : delay({init}); \
                     block m : merge(2); channel a -> h.x; channel h.y -> w.x; channel w.y -> d.x, m.x1; channel d.y -> m.x2 delay(0) @ every(2); channel m.y -> y; }} }}",
                    r.gen_range(0..9)
                );
            }
            0 if *level == "LA" => {
                let ty = impl_type(r);
                let _ = writeln!(
                    s,
                    "component I{i} {{ in u : {ty} range [-4, 4.5]; out v : {ty}; function {{ v = u; }} }}"
                );
            }
            0 | 3 => {
                let _ = writeln!(
                    s,
                    "component G{i} {{ in a : int; out y : int; function {{ y = a + 1; }} }}\n\
                     component H{i} {{ in a : int; out y : int; ssd {{ sub g : G{i}; sub k : G{i}; channel a -> g.a init {}; channel g.y -> k.a; channel k.y -> y; }} }}",
                    r.gen_range(-5..5)
                );
            }
            _ => {
                s.push_str(
                    random_mtd(r, 3)
                        .split_once("system M;\n\n")
                        .unwrap()
                        .1
                        .replace("component B", &format!("component X{i}B"))
                        .replace(": B", &format!(": X{i}B"))
                        .replace("component Pos", &format!("component X{i}Pos"))
                        .replace(": Pos", &format!(": X{i}Pos"))
                        .replace("component M ", &format!("component X{i}M "))
                        .as_str(),
                );
            }
        }
    }
    if *level == "LA" && r.gen_bool(0.7) {
        let period = 2 * base;
        let _ = writeln!(
            s,
            "component CB {{ in x : int; out z : int; function {{ z = x * 2; }} }}\n\
             cluster K {{ period {}; in x : int @ every(2); out z : int @ every(2); behavior CB; }}\n\
             ecu E1; ecu E2; bus CAN connects E1, E2;\n\
             task T on E1 period {period} priority {};\n\
             frame F on CAN {{ slot s0; slot s1; }}\n\
             deploy K -> T;\n\
             signal K.z -> F.s1;",
            period,
            r.gen_range(0..5)
        );
    }
    s
}
