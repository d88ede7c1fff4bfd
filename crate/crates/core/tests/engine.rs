mod common;

use automode::analysis::{check, TargetProfile};
use automode::sim::{simulate, SimOptions, Value};
use common::*;

/// Hand-stepped run of the two-mode component on its own, where no
/// structure channels delay the inputs.
#[test]
fn mode_switch_takes_effect_in_the_same_tick() {
    let p = parse_ok(&read_model("engine.amd"));
    let input = "tick,pedal,corr,cut\n1,10,1,false\n2,20,1,true\n3,3,1,false\n4,30,1,false\n5,40,-,false\n";
    let t = simulate(&p, Some("ThrottleRateOfChange"), input, 5, SimOptions::default()).unwrap();
    let throttle: Vec<Option<f64>> =
        t.series("throttle").unwrap().iter().map(|m| m.as_ref().and_then(Value::as_f64)).collect();
    // 1: FuelEnabled, 10 * 0.8 + 1.
    // 2: cut set, CrankingOverrun produces this tick's output.
    // 3: pedal 3 does not release the cut.
    // 4: pedal 30 releases it, FuelEnabled again: 30 * 0.8 + 1.
    // 5: corr absent, so the sum is absent.
    let expected = [Some(9.0), Some(2.5), Some(2.5), Some(25.0), None];
    assert_eq!(throttle.len(), expected.len());
    for (got, want) in throttle.iter().zip(expected) {
        match (got, want) {
            (Some(g), Some(w)) => assert!((g - w).abs() < 1e-9, "{throttle:?}"),
            (g, w) => assert_eq!(*g, w, "{throttle:?}"),
        }
    }
}

#[test]
fn bundled_model_is_clean_under_every_profile() {
    let p = parse_ok(&read_model("engine.amd"));
    for name in ["osek", "strict", "permissive"] {
        let d = check(&p, &TargetProfile::by_name(name).unwrap());
        assert!(d.is_empty(), "{name}: {}", automode::diag::render(&d));
    }
}
