use automode_ffi::*;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

const MODEL: &str = "project P; level FDA; base_tick 10; system S;
component S { in a : int; out b : int @ every(2); dfd { block w : when(every(2, true)); channel a -> w.x; channel w.y -> b; } }";

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    am_string_free(s);
    out
}

unsafe fn last_error() -> String {
    CStr::from_ptr(am_last_error()).to_str().unwrap().to_string()
}

unsafe fn parse(src: &str) -> *mut AmProject {
    let mut p = ptr::null_mut();
    assert_eq!(am_project_parse(c(src).as_ptr(), &mut p), AmStatus::Ok);
    p
}

#[test]
fn parse_simulate_serialize() {
    unsafe {
        let p = parse(MODEL);
        let mut out = ptr::null_mut();
        let inputs = c("tick,a\n1,1\n2,2\n3,3\n4,4\n5,5\n6,6\n");
        assert_eq!(am_project_simulate(p, inputs.as_ptr(), 0, &mut out), AmStatus::Ok);
        assert_eq!(take(out), "tick,b\n1,-\n2,2\n3,-\n4,4\n5,-\n6,6\n");
        assert_eq!(am_project_serialize(p, &mut out), AmStatus::Ok);
        let text = take(out);
        let q = parse(&text);
        assert_eq!(am_project_serialize(q, &mut out), AmStatus::Ok);
        assert_eq!(take(out), text);
        am_project_free(q);
        am_project_free(p);
    }
}

#[test]
fn errors_carry_status_and_message() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(am_project_parse(c("project ; nonsense").as_ptr(), &mut p), AmStatus::ModelError);
        assert!(p.is_null());
        assert!(last_error().starts_with("error "), "{}", last_error());
        assert_eq!(am_project_parse(ptr::null(), &mut p), AmStatus::NullArgument);
        let bad = [0xffu8, 0];
        assert_eq!(am_project_parse(bad.as_ptr().cast(), &mut p), AmStatus::InvalidUtf8);

        let p = parse(MODEL);
        let mut out = ptr::null_mut();
        assert_eq!(am_project_check(p, c("nope").as_ptr(), &mut out), AmStatus::InvalidArgument);
        assert_eq!(am_project_check(p, ptr::null(), &mut out), AmStatus::Ok);
        assert_eq!(take(out), "");
        assert_eq!(last_error(), "");
        let mut q = ptr::null_mut();
        assert_eq!(am_transform_mtd_to_dataflow(p, c("Nope").as_ptr(), false, &mut q), AmStatus::TransformError);
        assert!(last_error().contains("Nope"));
        assert_eq!(
            am_transform_refine(p, c("string -> int8").as_ptr(), ptr::null_mut(), &mut q),
            AmStatus::InvalidArgument
        );
        assert_eq!(am_project_manifest(ptr::null(), &mut out), AmStatus::NullArgument);
        am_project_free(p);
        am_project_free(ptr::null_mut());
        am_string_free(ptr::null_mut());
    }
}

#[test]
fn engine_pipeline_matches_golden_manifest() {
    let models = concat!(env!("CARGO_MANIFEST_DIR"), "/../../models/");
    let read = |f: &str| std::fs::read_to_string(format!("{models}{f}")).unwrap();
    unsafe {
        let fda = parse(&read("engine.amd"));
        let (mut ccd, mut refined, mut la) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        let mut report = ptr::null_mut();
        assert_eq!(am_transform_flatten(fda, 1, &mut ccd), AmStatus::Ok);
        assert_eq!(am_transform_refine(ccd, c(&read("engine.map")).as_ptr(), &mut report, &mut refined), AmStatus::Ok);
        take(report);
        assert_eq!(am_transform_cluster(refined, true, ptr::null_mut(), &mut la), AmStatus::Ok);
        let mut text = ptr::null_mut();
        assert_eq!(am_project_serialize(la, &mut text), AmStatus::Ok);
        let deployed = parse(&(take(text) + &read("engine_ta.amd") + &read("engine_deploy.amd")));
        let mut out = ptr::null_mut();
        assert_eq!(am_project_manifest(deployed, &mut out), AmStatus::Ok, "{}", last_error());
        assert_eq!(take(out), read("engine.manifest"));
        for h in [fda, ccd, refined, la, deployed] {
            am_project_free(h);
        }
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(am_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
