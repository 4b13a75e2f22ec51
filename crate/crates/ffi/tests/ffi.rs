use std::ffi::{CStr, CString};
use std::ptr;

use qsearch_ffi::*;

fn prior(weights: &[f64]) -> *mut QsPrior {
    let mut out = ptr::null_mut();
    let status = unsafe { qs_prior_new(weights.as_ptr(), weights.len(), &mut out) };
    assert_eq!(status, QsStatus::Ok);
    assert!(!out.is_null());
    out
}

fn last_error() -> String {
    let p = qs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn prior_roundtrip_normalizes() {
    let p = prior(&[2.0, 1.0, 1.0]);
    unsafe {
        assert_eq!(qs_prior_len(p), 3);
        let mut buf = [0.0; 3];
        assert_eq!(qs_prior_weights(p, buf.as_mut_ptr(), 3), QsStatus::Ok);
        assert_eq!(buf, [0.5, 0.25, 0.25]);
        let mut small = [0.0; 2];
        assert_eq!(
            qs_prior_weights(p, small.as_mut_ptr(), 2),
            QsStatus::BufferTooSmall
        );
        qs_prior_free(p);
    }
}

#[test]
fn invalid_prior_sets_error() {
    let w = [-1.0, 2.0];
    let mut out = ptr::null_mut();
    let status = unsafe { qs_prior_new(w.as_ptr(), w.len(), &mut out) };
    assert_eq!(status, QsStatus::InvalidInput);
    assert!(out.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_pointers_are_rejected() {
    unsafe {
        assert_eq!(
            qs_prior_new(ptr::null(), 3, &mut ptr::null_mut()),
            QsStatus::NullPointer
        );
        assert_eq!(qs_prior_len(ptr::null()), 0);
        let mut v = 0.0;
        assert_eq!(
            qs_esp(ptr::null(), ptr::null(), &mut v),
            QsStatus::NullPointer
        );
        qs_prior_free(ptr::null_mut());
        qs_plan_free(ptr::null_mut());
        qs_circuit_free(ptr::null_mut());
        qs_string_free(ptr::null_mut());
        assert!(qs_plan_kkt_residual(ptr::null()).is_nan());
    }
}

#[test]
fn cap_and_single_item() {
    assert_eq!(qs_cap(0), 1.0);
    assert_eq!(qs_cap(1), 0.25);
    let mut v = 0.0;
    assert_eq!(
        unsafe { qs_success_prob_single(0.25, 1, &mut v) },
        QsStatus::Ok
    );
    assert!((v - 1.0).abs() < 1e-12);
    assert_eq!(
        unsafe { qs_success_prob_single(1.5, 1, &mut v) },
        QsStatus::InvalidInput
    );
}

#[test]
fn optimize_and_evaluate() {
    let p = prior(&[0.4, 0.3, 0.2, 0.1, 0.0]);
    unsafe {
        let mut plan = ptr::null_mut();
        assert_eq!(
            qs_optimize(p, 1, QsSolver::Waterfill, &mut plan),
            QsStatus::Ok
        );
        assert_eq!(qs_plan_len(plan), 5);
        assert_eq!(qs_plan_queries(plan), 1);
        assert!(qs_plan_kkt_residual(plan) <= 1e-9);
        let mut q = [0.0; 5];
        assert_eq!(qs_plan_amplitudes(plan, q.as_mut_ptr(), 5), QsStatus::Ok);
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(q[4], 0.0);

        let mut closed = ptr::null_mut();
        assert_eq!(
            qs_optimize(p, 1, QsSolver::ClosedT1, &mut closed),
            QsStatus::Ok
        );
        let (mut a, mut b) = (0.0, 0.0);
        assert_eq!(qs_esp(p, plan, &mut a), QsStatus::Ok);
        assert_eq!(qs_esp(p, closed, &mut b), QsStatus::Ok);
        assert!((a - b).abs() < 1e-9);

        let (mut r, mut m) = (0.0, 0usize);
        assert_eq!(qs_ranking_baseline(p, 1, &mut r, &mut m), QsStatus::Ok);
        assert!((1..=5).contains(&m));
        assert!(r <= a + 1e-12);

        let mut sim = 0.0;
        assert_eq!(qs_run_iterations(plan, 1, &mut sim), QsStatus::Ok);
        let mut single = 0.0;
        qs_success_prob_single(q[0], 1, &mut single);
        assert!((sim - single).abs() < 1e-10);
        assert_eq!(qs_run_iterations(plan, 0, &mut sim), QsStatus::InvalidInput);

        let mut bad = ptr::null_mut();
        assert_eq!(
            qs_optimize(p, 2, QsSolver::ClosedT1, &mut bad),
            QsStatus::InvalidInput
        );
        assert!(bad.is_null());

        qs_plan_free(plan);
        qs_plan_free(closed);
        qs_prior_free(p);
    }
}

#[test]
fn raw_plan_has_no_residual() {
    let q = [0.5, 0.5];
    let mut plan = ptr::null_mut();
    unsafe {
        assert_eq!(qs_plan_new(q.as_ptr(), 2, 0, &mut plan), QsStatus::Ok);
        assert!(qs_plan_kkt_residual(plan).is_nan());
        qs_plan_free(plan);
        let over = [0.8, 0.8];
        assert_eq!(
            qs_plan_new(over.as_ptr(), 2, 0, &mut plan),
            QsStatus::InvalidInput
        );
    }
}

#[test]
fn sampled_prior_is_deterministic() {
    let mut a = ptr::null_mut();
    let mut b = ptr::null_mut();
    unsafe {
        assert_eq!(qs_prior_sample(16, 7, &mut a), QsStatus::Ok);
        assert_eq!(qs_prior_sample(16, 7, &mut b), QsStatus::Ok);
        let mut wa = [0.0; 16];
        let mut wb = [0.0; 16];
        qs_prior_weights(a, wa.as_mut_ptr(), 16);
        qs_prior_weights(b, wb.as_mut_ptr(), 16);
        assert_eq!(wa, wb);
        qs_prior_free(a);
        qs_prior_free(b);
    }
}

#[test]
fn halfhalf_circuit_matches_prediction() {
    let mut theta = 0.0;
    assert_eq!(
        unsafe { qs_theta_for_sigma(1.0 / 80.0, &mut theta) },
        QsStatus::Ok
    );
    assert!((theta - 1.48725065).abs() < 1e-3);

    let label = CString::new("010").unwrap();
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(
            qs_halfhalf_circuit(1.0 / 80.0, label.as_ptr(), &mut c),
            QsStatus::Ok
        );
        assert_eq!(qs_circuit_outcomes(c), 8);
        let mut probs = [0.0; 8];
        assert_eq!(
            qs_circuit_probabilities(c, probs.as_mut_ptr(), 8),
            QsStatus::Ok
        );
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let best = (0..8)
            .max_by(|&i, &j| probs[i].total_cmp(&probs[j]))
            .unwrap();
        assert_eq!(best, 0b010);

        let text = qs_circuit_qasm(c);
        assert!(!text.is_null());
        let s = CStr::from_ptr(text).to_str().unwrap().to_owned();
        qs_string_free(text);
        assert!(s.starts_with("OPENQASM 2.0;"));
        assert!(s.contains("// solution 010"));
        qs_circuit_free(c);

        let bad = CString::new("01").unwrap();
        assert_eq!(
            qs_halfhalf_circuit(0.01, bad.as_ptr(), &mut c),
            QsStatus::InvalidInput
        );
    }
}

#[test]
fn header_declares_the_api() {
    let header = include_str!("../include/qsearch.h");
    for name in [
        "qs_last_error",
        "qs_prior_new",
        "qs_prior_sample",
        "qs_optimize",
        "qs_esp",
        "qs_run_iterations",
        "qs_halfhalf_circuit",
        "qs_circuit_qasm",
        "qs_string_free",
        "typedef struct QsPrior QsPrior",
        "QS_STATUS_BUFFER_TOO_SMALL = 5",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = std::env::temp_dir().join(format!("qsearch-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("use.c");
    std::fs::write(
        &src,
        "#include \"qsearch.h\"\nint main(void) { QsPrior *p = 0; double w[2] = {1, 1};\n\
         return qs_prior_new(w, 2, &p) == QS_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .status();
    let _ = std::fs::remove_dir_all(&dir);
    match status {
        Ok(s) => assert!(s.success(), "header failed to compile"),
        Err(e) => eprintln!("skipping: no C compiler ({e})"),
    }
}
