mod common;

use automode::analysis::{analyze, check, TargetProfile};
use automode::diag::{has_errors, render};
use common::*;

#[test]
fn random_mtds_are_valid() {
    for seed in 0..200 {
        let src = random_mtd(&mut rng(seed), 4);
        let p = parse_ok(&src);
        if let Err(d) = analyze(&p) {
            panic!("seed {seed}: {}\n{src}", render(&d));
        }
    }
}

#[test]
fn random_projects_are_valid() {
    for seed in 0..300 {
        let src = random_project(&mut rng(seed));
        let p = parse_ok(&src);
        let d = check(&p, &TargetProfile::osek());
        assert!(!has_errors(&d), "seed {seed}: {}\n{src}", render(&d));
    }
}

#[test]
fn random_faa_models_parse() {
    for seed in 0..100 {
        let (src, _) = random_faa(&mut rng(seed));
        parse_ok(&src);
    }
}
