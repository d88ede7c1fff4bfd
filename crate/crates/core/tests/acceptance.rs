//! Acceptance suite: one pass/fail line per criterion. Runs without the
//! libtest harness so the summary lines always reach the output.

mod common;

use automode::analysis::{analyze, causality_check, ccd_welldefined, check, faa_conflict_check, TargetProfile};
use automode::diag::{code, has_errors, render, Severity};
use automode::frontend::{import_comm_matrix, parse_comm_matrix, serialize};
use automode::model::{Definition, Project};
use automode::sim::{compare_traces, random_inputs, Comparison, InputProfile, SimOptions, Simulator, Trace, Value};
use automode::transform::{
    cluster_by_clock, export_manifest, flatten_to_ccd, insert_coordinator, mtd_to_dataflow, parse_refinement_map,
    refine_types, ClusterOptions,
};
use common::*;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use std::panic::catch_unwind;
use std::process::Command;
use std::time::Instant;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

thread_local! {
    static PANIC: std::cell::RefCell<String> = const { std::cell::RefCell::new(String::new()) };
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(p: &Project, input: &Trace, n: usize) -> Trace {
    let an = analyze(p).unwrap_or_else(|d| panic!("{}", render(&d)));
    let mut sim = Simulator::new(p, &an, None, SimOptions::default()).unwrap();
    sim.run(input, n).unwrap()
}

fn run_csv(p: &Project, csv: &str, n: usize) -> Trace {
    let an = analyze(p).unwrap_or_else(|d| panic!("{}", render(&d)));
    let mut sim = Simulator::new(p, &an, None, SimOptions::default()).unwrap();
    let input = sim.parse_inputs(csv).unwrap();
    sim.run(&input, n).unwrap()
}

fn sampling() -> Outcome {
    let p = parse_ok(
        "project S; level FDA; base_tick 10; system Top;
         component Top { in a : int; out b : int @ every(2);
           dfd { block w : when(every(2, true)); channel a -> w.x; channel w.y -> b; } }",
    );
    let out = run_csv(&p, "tick,a\n1,1\n2,2\n3,3\n4,4\n5,5\n6,6\n", 6).to_csv();
    let golden = "tick,b\n1,-\n2,2\n3,-\n4,4\n5,-\n6,6\n";
    ensure(out == golden, || format!("got {out:?}"))?;
    Ok("b = (-,2,-,4,-,6)".into())
}

fn equivalent(p: &Project, mtd: &str, traces: u64, seed0: u64) -> Result<(), String> {
    let q = mtd_to_dataflow(p, mtd, false).map_err(|e| e.to_string())?;
    for seed in seed0..seed0 + traces {
        let absent = if seed % 2 == 0 { 0.0 } else { 0.2 };
        let input = random_inputs(p, None, 50, seed, InputProfile { absent, ..Default::default() }).unwrap();
        let (a, b) = (run(p, &input, 50), run(&q, &input, 50));
        let cmp = compare_traces(&a, &b).map_err(|e| e.to_string())?;
        ensure(cmp == Comparison::Equal, || format!("seed {seed}: {cmp:?}"))?;
    }
    Ok(())
}

fn mtd_equivalence() -> Outcome {
    let engine = parse_ok(&read_model("engine.amd"));
    equivalent(&engine, "ThrottleRateOfChange", 1000, 0).map_err(|e| format!("engine: {e}"))?;
    let mut modes = [0usize; 5];
    for i in 0..100 {
        let src = random_mtd(&mut rng(1_000 + i), 4);
        let p = parse_ok(&src);
        if let Some(Definition::Mtd(m)) = p.component("M").map(|c| &c.def) {
            modes[m.modes.len()] += 1;
        }
        equivalent(&p, "M", 10, i * 10).map_err(|e| format!("random MTD {i}: {e}\n{src}"))?;
    }
    Ok(format!("engine 1000 traces, 100 random MTDs x 10 traces (modes 1..4: {:?})", &modes[1..]))
}

fn causality() -> Outcome {
    let (mut cyclic, mut acyclic) = (0, 0);
    for seed in 0..60 {
        let (src, n, edges) = random_dfd(&mut rng(2_000 + seed));
        let p = parse_ok(&src);
        let net = p.component("N").and_then(|c| c.def.network()).unwrap();
        let expected = has_cycle(n, &edges);
        let got = causality_check("N", net).is_err();
        ensure(got == expected, || format!("seed {seed}: checker {got}, brute force {expected}\n{src}"))?;
        if expected {
            cyclic += 1;
        } else {
            acyclic += 1;
        }
    }
    ensure(cyclic > 5 && acyclic > 5, || format!("unbalanced sample: {cyclic} cyclic, {acyclic} acyclic"))?;
    Ok(format!("60 DFDs agree ({cyclic} cyclic, {acyclic} acyclic)"))
}

fn ccd_grid() -> Outcome {
    let periods = [10, 20, 50, 100];
    let mut cases = 0;
    for prod in periods {
        for cons in periods {
            for delayed in [false, true] {
                let p = parse_ok(&ccd_pair(prod, cons, delayed));
                // The full check: the missing delay must be the only error.
                let diags = check(&p, &TargetProfile::osek());
                let errors: Vec<_> = diags.iter().filter(|d| d.severity == Severity::Error).collect();
                let expected = usize::from(prod > cons && !delayed);
                ensure(errors.len() == expected && errors.iter().all(|d| d.code == code::MISSING_DELAY), || {
                    format!("{prod}->{cons} delayed={delayed}: {}", render(&diags))
                })?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} cases"))
}

fn round_trip_one(src: &str) -> Result<(), String> {
    let p = parse_ok(src);
    let text = serialize(&p).map_err(|e| render(&e.0))?;
    let q = parse_ok(&text);
    ensure(p == q, || format!("structure changed:\n{text}"))?;
    let again = serialize(&q).map_err(|e| render(&e.0))?;
    ensure(again == text, || "serialize not idempotent".into())
}

fn bundled_models() -> Vec<(String, String)> {
    let engine = read_model("engine.amd");
    let la = serialize(&engine_la()).unwrap();
    let deployed = format!("{la}{}{}", read_model("engine_ta.amd"), read_model("engine_deploy.amd"));
    let rows = parse_comm_matrix(&read_model("comm_matrix.csv")).unwrap();
    let faa = serialize(&import_comm_matrix(&rows).unwrap().0).unwrap();
    vec![
        ("engine.amd".into(), engine),
        ("engine LA".into(), la),
        ("engine deployed".into(), deployed),
        ("import".into(), faa),
    ]
}

fn round_trip() -> Outcome {
    let bundled = bundled_models();
    for (name, src) in &bundled {
        round_trip_one(src).map_err(|e| format!("{name}: {e}"))?;
    }
    for seed in 0..200 {
        let src = random_project(&mut rng(3_000 + seed));
        round_trip_one(&src).map_err(|e| format!("random {seed}: {e}\n{src}"))?;
    }
    Ok(format!("{} bundled + 200 random models", bundled.len()))
}

fn ints_csv(name: &str, xs: &[i64]) -> String {
    let mut s = format!("tick,{name}\n");
    for (i, x) in xs.iter().enumerate() {
        s.push_str(&format!("{},{x}\n", i + 1));
    }
    s
}

fn series(t: &Trace, flow: &str) -> Vec<Option<i64>> {
    t.series(flow)
        .unwrap()
        .into_iter()
        .map(|m| match m {
            Some(Value::Int(i)) => Some(i),
            None => None,
            other => panic!("unexpected {other:?}"),
        })
        .collect()
}

fn delay_shift() -> Outcome {
    let mut runner = TestRunner::new(Config { cases: 128, failure_persistence: None, ..Config::default() });
    let strategy = (proptest::collection::vec(-1000i64..1000, 1..40), proptest::option::of(-50i64..50));
    runner
        .run(&strategy, |(xs, init)| {
            let lit = init.map_or("-".to_string(), |k| k.to_string());
            let dfd = parse_ok(&format!(
                "project D; level FDA; system Top;
                 component Top {{ in a : int; out y : int; dfd {{ block d : delay({lit}); channel a -> d.x; channel d.y -> y; }} }}"
            ));
            let out = series(&run_csv(&dfd, &ints_csv("a", &xs), xs.len()), "y");
            let mut expected = vec![init];
            expected.extend(xs[..xs.len() - 1].iter().map(|&x| Some(x)));
            prop_assert_eq!(&out, &expected);

            // Every structure channel delays: input channel with init, output channel without.
            let init_clause = init.map_or(String::new(), |k| format!(" init {k}"));
            let ssd = parse_ok(&format!(
                "project D; level FDA; system Top;
                 component Id {{ in a : int; out y : int; function {{ y = a; }} }}
                 component Top {{ in a : int; out y : int; ssd {{ sub g : Id; channel a -> g.a{init_clause}; channel g.y -> y; }} }}"
            ));
            let out = series(&run_csv(&ssd, &ints_csv("a", &xs), xs.len()), "y");
            let mut expected = vec![None, init];
            expected.extend(xs.iter().map(|&x| Some(x)));
            expected.truncate(xs.len());
            prop_assert_eq!(&out, &expected);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("128 cases, delay block and structure channel".into())
}

const QUANT_MODEL: &str = "project Q; level FDA; base_tick 10; system S;
component S {
  in x : real range [-100, 100];
  in n : int range [-1000, 1000];
  out y : real;
  out m : int;
  function { y = x * 0.37 + 1.5; m = n * 3 - 7; }
}";

fn refinement() -> Outcome {
    let p = parse_ok(QUANT_MODEL);
    let map = parse_refinement_map("real -> fixed(int16, 0.1, 0)\nint -> int16\n").unwrap();
    let (q, _) = refine_types(&p, &map).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for seed in 0..200 {
        let csv = random_inputs(&p, None, 50, 4_000 + seed, InputProfile::default()).unwrap().to_csv();
        let (a, b) = (run_csv(&p, &csv, 50), run_csv(&q, &csv, 50));
        for t in 1..=50 {
            let (ya, yb) = (a.get(t, "y").unwrap(), b.get(t, "y").unwrap());
            let (fa, fb) = (ya.as_ref().and_then(Value::as_f64).unwrap(), yb.as_ref().and_then(Value::as_f64).unwrap());
            ensure(matches!(yb, Some(Value::Fixed { .. })), || format!("y not fixed-point: {yb:?}"))?;
            worst = worst.max((fa - fb).abs());
            ensure((fa - fb).abs() <= 0.05 + 1e-9, || format!("seed {seed} tick {t}: {fa} vs {fb}"))?;
            let (ma, mb) = (a.get(t, "m").unwrap(), b.get(t, "m").unwrap());
            ensure(ma == mb, || format!("seed {seed} tick {t}: m {ma:?} vs {mb:?}"))?;
        }
    }
    Ok(format!("200 traces, max |fixed - real| = {worst:.4}, int flows bit-equal"))
}

fn faa_conflicts() -> Outcome {
    let mut total = 0;
    for seed in 0..100 {
        let (src, expected) = random_faa(&mut rng(5_000 + seed));
        let p = parse_ok(&src);
        let conflicts = faa_conflict_check(&p);
        ensure(conflicts.len() == expected, || {
            format!("seed {seed}: {} conflicts, expected {expected}", conflicts.len())
        })?;
        if let Some(first) = conflicts.first() {
            let q = insert_coordinator(&p, first).map_err(|e| e.to_string())?;
            let after = faa_conflict_check(&q).len();
            ensure(after + 1 == expected, || format!("seed {seed}: {after} conflicts after coordination"))?;
            ensure(!has_errors(&check(&q, &TargetProfile::osek())), || {
                format!("seed {seed}: coordinated model invalid")
            })?;
        }
        total += expected;
    }
    Ok(format!("100 models, {total} conflicts"))
}

fn cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_automode")).args(args).output().expect("run automode");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = |f: &str| dir.path().join(f).to_string_lossy().into_owned();
    let m = |f: &str| models_dir().join(f).to_string_lossy().into_owned();
    std::fs::write(path("la.amd"), serialize(&engine_la()).unwrap()).unwrap();
    let mut first: Option<Vec<Vec<u8>>> = None;
    for _ in 0..10 {
        cli(&["simulate", &m("engine.amd"), "--inputs", &m("engine_inputs.csv"), "-o", &path("s.csv")]);
        cli(&["simulate", &m("engine.amd"), "--ticks", "200", "--seed", "9", "--absent", "0.1", "-o", &path("r.csv")]);
        cli(&[
            "deploy",
            &path("la.amd"),
            "--ta",
            &m("engine_ta.amd"),
            "--map",
            &m("engine_deploy.amd"),
            "-o",
            &path("m.txt"),
        ]);
        let now: Vec<Vec<u8>> = ["s.csv", "r.csv", "m.txt"].iter().map(|f| std::fs::read(path(f)).unwrap()).collect();
        match &first {
            None => first = Some(now),
            Some(f) => ensure(*f == now, || "outputs differ between runs".into())?,
        }
    }
    Ok("10 runs byte-identical (scripted, seeded, deploy)".into())
}

fn engine_la() -> Project {
    let fda = parse_ok(&read_model("engine.amd"));
    let ccd = flatten_to_ccd(&fda, 1).unwrap();
    let map = parse_refinement_map(&read_model("engine.map")).unwrap();
    let (refined, _) = refine_types(&ccd, &map).unwrap();
    cluster_by_clock(&refined, ClusterOptions { insert_delays: true }).unwrap().0
}

fn pipeline() -> Outcome {
    let rows = parse_comm_matrix(&read_model("comm_matrix.csv")).map_err(|e| e.to_string())?;
    let (faa, _) = import_comm_matrix(&rows).map_err(|e| e.to_string())?;
    let d = check(&faa, &TargetProfile::osek());
    ensure(!has_errors(&d), || format!("imported FAA: {}", render(&d)))?;

    let la = engine_la();
    let d = ccd_welldefined(&la, &TargetProfile::osek());
    ensure(d.is_empty(), || format!("ccd: {}", render(&d)))?;
    let d = check(&la, &TargetProfile::osek());
    ensure(!has_errors(&d), || format!("LA check: {}", render(&d)))?;
    let deployed = parse_ok(&format!(
        "{}{}{}",
        serialize(&la).unwrap(),
        read_model("engine_ta.amd"),
        read_model("engine_deploy.amd")
    ));
    let manifest = export_manifest(&deployed).map_err(|e| e.to_string())?.render();
    ensure(manifest == read_model("engine.manifest"), || format!("manifest differs:\n{manifest}"))?;
    Ok(format!("{} clusters, manifest matches golden", la.clusters.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("sampling when every(2, true)", sampling),
        ("MTD vs dataflow equivalence", mtd_equivalence),
        ("causality vs brute force", causality),
        ("CCD rate rules grid", ccd_grid),
        ("parse/serialize round trip", round_trip),
        ("delay shift", delay_shift),
        ("fixed-point refinement", refinement),
        ("FAA conflicts and coordinator", faa_conflicts),
        ("deterministic simulate and deploy", determinism),
        ("end-to-end pipeline", pipeline),
    ];
    // Report panics as failure lines instead of backtraces.
    std::panic::set_hook(Box::new(|info| {
        let msg = info
            .payload()
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| info.payload().downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        let at = info.location().map(|l| format!(" at {}:{}", l.file(), l.line())).unwrap_or_default();
        PANIC.with(|p| *p.borrow_mut() = format!("panic: {msg}{at}"));
    }));
    let started = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(f).unwrap_or_else(|_| Err(PANIC.with(|p| p.borrow().clone())));
        let ms = t.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{ms} ms]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{ms} ms]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        criteria.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
