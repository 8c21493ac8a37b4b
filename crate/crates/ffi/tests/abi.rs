use std::ffi::{c_char, CStr, CString};
use std::ptr;

use cvqkd_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        cvqkd_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn closed_forms() {
    let (mut ch, mut w) = (0.0, 0.0);
    assert_eq!(
        unsafe { cvqkd_threshold_closed_form(&mut ch, &mut w) },
        CvqkdStatus::Ok
    );
    assert!((ch - (3.0 + 5f64.sqrt()) / 4.0).abs() < 1e-15);
    assert!((w - (1.0 + 5f64.sqrt()) / 4.0).abs() < 1e-15);

    let mut num = 0.0;
    assert_eq!(
        unsafe { cvqkd_threshold_numeric(1e-12, &mut num) },
        CvqkdStatus::Ok
    );
    assert!((num - ch).abs() < 1e-10);

    let (mut b, mut e) = (0.0, 0.0);
    unsafe {
        assert_eq!(cvqkd_sigma_b_sq(0.5, &mut b), CvqkdStatus::Ok);
        assert_eq!(cvqkd_sigma_e_sq(0.5, &mut e), CvqkdStatus::Ok);
    }
    assert_eq!((b, e), (2.0, 2.5));

    let mut r = CvqkdReport::default();
    assert_eq!(
        unsafe { cvqkd_build_report(100.0, 0.5, &mut r) },
        CvqkdStatus::Ok
    );
    assert!(r.secure && r.key_rate_gap > 0.0);
    assert_eq!(r.one_way_threshold, 0.5);
}

#[test]
fn errors_are_reported() {
    let mut out = 0.0;
    assert_eq!(
        unsafe { cvqkd_sigma_b_sq(-1.0, &mut out) },
        CvqkdStatus::Domain
    );
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { cvqkd_sigma_b_sq(1.0, ptr::null_mut()) },
        CvqkdStatus::NullPointer
    );
    assert!(last_error().contains("null"));
    assert_eq!(unsafe { cvqkd_sigma_b_sq(1.0, &mut out) }, CvqkdStatus::Ok);
    assert_eq!(unsafe { cvqkd_last_error_message(ptr::null_mut(), 0) }, 0);

    // truncation keeps the terminator and reports the full length
    unsafe { cvqkd_sigma_e_sq(f64::NAN, &mut out) };
    let mut small = [1 as c_char; 4];
    let full = unsafe { cvqkd_last_error_message(small.as_mut_ptr(), small.len()) };
    assert!(full > 3);
    assert_eq!(small[3], 0);
}

#[test]
fn cloner_covariance_and_ppt() {
    let mut cov = [0.0; 16];
    assert_eq!(
        unsafe { cvqkd_cloner_covariance(0.5, cov.as_mut_ptr()) },
        CvqkdStatus::Ok
    );
    assert_eq!(cov[0], 1.0);
    assert_eq!(cov[2], 0.5);
    let mut nu = 0.0;
    assert_eq!(
        unsafe { cvqkd_pt_min_symplectic_eigenvalue(cov.as_ptr(), &mut nu) },
        CvqkdStatus::Ok
    );
    assert!((nu - 3f64.sqrt() / 2.0).abs() < 1e-10);

    let bad = [
        0.1, 0.0, 0.0, 0.0, 0.0, 0.1, 0.0, 0.0, 0.0, 0.0, 0.1, 0.0, 0.0, 0.0, 0.0, 0.1,
    ];
    assert_eq!(
        unsafe { cvqkd_pt_min_symplectic_eigenvalue(bad.as_ptr(), &mut nu) },
        CvqkdStatus::Domain
    );
    assert_eq!(
        unsafe { cvqkd_cloner_covariance(0.0, cov.as_mut_ptr()) },
        CvqkdStatus::Domain
    );
}

#[test]
fn session_lifecycle() {
    let mut cfg = unsafe {
        let mut c = std::mem::MaybeUninit::<CvqkdSimConfig>::uninit();
        assert_eq!(cvqkd_sim_config_default(c.as_mut_ptr()), CvqkdStatus::Ok);
        c.assume_init()
    };
    cfg.rounds = 20_000;
    cfg.seed = 7;
    cfg.workers = 2;

    let mut s: *mut CvqkdSession = ptr::null_mut();
    assert_eq!(unsafe { cvqkd_session_run(&cfg, &mut s) }, CvqkdStatus::Ok);
    assert!(!s.is_null());

    let (mut on, mut off) = (0u64, 0u64);
    assert_eq!(
        unsafe { cvqkd_session_counts(s, &mut on, &mut off) },
        CvqkdStatus::Ok
    );
    assert_eq!(on + off, 20_000);
    assert!(off > 1500 && off < 2500);

    let (mut f, mut b, mut t) = (0.0, 0.0, 0.0);
    assert_eq!(
        unsafe { cvqkd_session_noise(s, &mut f, &mut b, &mut t) },
        CvqkdStatus::Ok
    );
    assert!((f - 0.5).abs() < 0.15 && (b - 0.5).abs() < 0.15);

    let mut e = CvqkdEmpirical::default();
    assert_eq!(
        unsafe { cvqkd_session_empirical(s, &mut e) },
        CvqkdStatus::Ok
    );
    assert!(e.has_eve && e.has_noise);
    assert_eq!(e.on_rounds, on);
    assert!((e.sigma_b_sq - 2.0).abs() < 0.1);
    assert!((e.sigma_e_sq - 2.5).abs() < 0.15);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("t.csv").to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { cvqkd_session_write_csv(s, path.as_ptr()) },
        CvqkdStatus::Ok
    );
    let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 20_001);

    let missing = CString::new(dir.path().join("no/such/dir.csv").to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { cvqkd_session_write_csv(s, missing.as_ptr()) },
        CvqkdStatus::Io
    );

    unsafe { cvqkd_session_free(s) };
    unsafe { cvqkd_session_free(ptr::null_mut()) };
}

#[test]
fn plain_channel_has_no_eve() {
    let mut cfg = unsafe {
        let mut c = std::mem::MaybeUninit::<CvqkdSimConfig>::uninit();
        cvqkd_sim_config_default(c.as_mut_ptr());
        c.assume_init()
    };
    cfg.rounds = 5_000;
    cfg.no_attack = true;
    cfg.forward_noise = 0.2;
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { cvqkd_session_run(&cfg, &mut s) }, CvqkdStatus::Ok);
    let mut e = CvqkdEmpirical::default();
    assert_eq!(
        unsafe { cvqkd_session_empirical(s, &mut e) },
        CvqkdStatus::Ok
    );
    assert!(!e.has_eve);
    unsafe { cvqkd_session_free(s) };

    cfg.off_probability = 2.0;
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { cvqkd_session_run(&cfg, &mut s) },
        CvqkdStatus::Domain
    );
    assert!(s.is_null());
    assert_eq!(
        unsafe { cvqkd_session_run(ptr::null(), &mut s) },
        CvqkdStatus::NullPointer
    );
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(cvqkd_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
