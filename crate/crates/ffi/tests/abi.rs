use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use rescov_ffi::*;

fn last_error() -> String {
    let p = rescov_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn framework_round_trip() {
    let xy = [0.0, 0.0, 1.0, 0.0, 0.3, 0.8, 1.2, 1.1];
    let edges = [0usize, 1, 0, 2, 1, 2, 1, 3, 2, 3];
    let mut fw = ptr::null_mut();
    unsafe {
        assert_eq!(
            rescov_framework_new(xy.as_ptr(), 4, edges.as_ptr(), 5, &mut fw),
            RescovStatus::Ok
        );
        let (mut rigid, mut rank) = (false, 0usize);
        assert_eq!(
            rescov_framework_is_ibr(fw, 1e-8, &mut rigid, &mut rank),
            RescovStatus::Ok
        );
        assert!(rigid);
        assert_eq!(rank, 5);
        rescov_framework_free(fw);
    }

    // Dropping an edge leaves it flexible.
    unsafe {
        assert_eq!(
            rescov_framework_new(xy.as_ptr(), 4, edges.as_ptr(), 4, &mut fw),
            RescovStatus::Ok
        );
        let mut rigid = true;
        assert_eq!(
            rescov_framework_is_ibr(fw, 1e-8, &mut rigid, ptr::null_mut()),
            RescovStatus::Ok
        );
        assert!(!rigid);
        rescov_framework_free(fw);
    }
}

#[test]
fn bad_framework_input() {
    let xy = [0.0, 0.0, 1.0, 0.0];
    let edges = [0usize, 5];
    let mut fw = ptr::null_mut();
    unsafe {
        assert_eq!(
            rescov_framework_new(xy.as_ptr(), 2, edges.as_ptr(), 1, &mut fw),
            RescovStatus::InvalidArgument
        );
        assert!(fw.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(
            rescov_framework_new(ptr::null(), 2, edges.as_ptr(), 1, &mut fw),
            RescovStatus::NullPointer
        );
        assert_eq!(
            rescov_framework_is_ibr(ptr::null(), 1e-8, ptr::null_mut(), ptr::null_mut()),
            RescovStatus::NullPointer
        );
        rescov_framework_free(ptr::null_mut());
    }
}

#[test]
fn energy_levels() {
    let mut level = 0u8;
    for (soc, want) in [(1.0, 1), (0.75, 1), (0.5, 2), (0.25, 3), (0.0, 4)] {
        assert_eq!(
            unsafe { rescov_energy_level(soc, &mut level) },
            RescovStatus::Ok
        );
        assert_eq!(level, want, "soc {soc}");
    }
    assert_eq!(
        unsafe { rescov_energy_level(f64::NAN, &mut level) },
        RescovStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { rescov_energy_level(0.5, ptr::null_mut()) },
        RescovStatus::NullPointer
    );
}

#[test]
fn simulation_lifecycle() {
    let json = CString::new(r#"{"n_robots": 3, "steps": 15, "seed": 4}"#).unwrap();
    let mut sim = ptr::null_mut();
    unsafe {
        assert_eq!(
            rescov_simulation_from_json(json.as_ptr(), &mut sim),
            RescovStatus::Ok
        );
        let mut soc = 0.0;
        assert_eq!(
            rescov_simulation_min_soc(sim, &mut soc),
            RescovStatus::NotRun
        );
        assert_eq!(rescov_simulation_run(sim), RescovStatus::Ok);
        assert_eq!(rescov_simulation_min_soc(sim, &mut soc), RescovStatus::Ok);
        assert!((0.0..=1.0).contains(&soc));

        let mut text = ptr::null_mut();
        assert_eq!(
            rescov_simulation_summary_json(sim, &mut text),
            RescovStatus::Ok
        );
        let summary: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(text).to_str().unwrap()).unwrap();
        assert_eq!(summary["steps_run"], 15);
        rescov_string_free(text);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(
            rescov_simulation_write_outputs(sim, path.as_ptr()),
            RescovStatus::Ok
        );
        assert!(dir.path().join("trace.csv").exists());
        rescov_simulation_free(sim);
    }
}

#[test]
fn aborted_simulation_reports_failure() {
    let json = CString::new(
        r#"{"n_robots":3,"steps":50,"seed":7,
            "initial_positions":[[1.0,1.0],[4.0,2.0],[2.0,3.0]],
            "initial_socs":[0.95,0.9,0.05]}"#,
    )
    .unwrap();
    let mut sim = ptr::null_mut();
    unsafe {
        assert_eq!(
            rescov_simulation_from_json(json.as_ptr(), &mut sim),
            RescovStatus::Ok
        );
        assert_eq!(rescov_simulation_run(sim), RescovStatus::Failed);
        assert!(last_error().contains("state of charge"));
        let mut soc = 1.0;
        assert_eq!(rescov_simulation_min_soc(sim, &mut soc), RescovStatus::Ok);
        rescov_simulation_free(sim);
    }
}

#[test]
fn malformed_scenario() {
    let json = CString::new(r#"{"n_robots": "three"}"#).unwrap();
    let mut sim = ptr::null_mut();
    assert_eq!(
        unsafe { rescov_simulation_from_json(json.as_ptr(), &mut sim) },
        RescovStatus::ParseError
    );
    assert!(sim.is_null());
    let invalid = [0xffu8, 0];
    assert_eq!(
        unsafe { rescov_simulation_from_json(invalid.as_ptr().cast(), &mut sim) },
        RescovStatus::InvalidUtf8
    );
}

#[test]
fn plan_return() {
    let json = CString::new(r#"{"state":{"pos":[2.0,2.0],"vel":[0.0,0.0]}}"#).unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(
            rescov_plan_return_json(json.as_ptr(), &mut out),
            RescovStatus::Ok
        );
        let plan: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
        rescov_string_free(out);
        let tau = plan["tau_star"].as_u64().unwrap() as usize;
        assert!(tau > 0);
        assert_eq!(plan["inputs"].as_array().unwrap().len(), tau);
    }
}

/// Compiles a C program against the generated header and the static library.
#[test]
fn c_program_links_against_the_header() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<this test> -> target/<profile>
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("librescov_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(&cc)
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe)
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
    assert!(dir.path().join("out/summary.json").exists());
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
        {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
