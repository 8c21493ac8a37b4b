//! C ABI over `cvqkd-core`.
//!
//! Every fallible function returns a [`CvqkdStatus`] and writes its result
//! through an out-pointer. On failure a message is kept per thread and can be
//! copied out with [`cvqkd_last_error_message`]. Sessions are opaque handles
//! created by [`cvqkd_session_run`] and released with [`cvqkd_session_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufWriter;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use cvqkd_core::attack::Strategy;
use cvqkd_core::cli::{write_transcript_csv, RunManifest, SimulateArgs};
use cvqkd_core::cloner::gqcm_joint_cm;
use cvqkd_core::phase_space::pt_min_symplectic_eigenvalue;
use cvqkd_core::protocol::{estimate_channel_noise, run_session_parallel, Transcript};
use cvqkd_core::security::{self, EmpiricalSecurity};
use cvqkd_core::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvqkdStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    InsufficientData = 3,
    UncertaintyViolation = 4,
    State = 5,
    Inconsistent = 6,
    Io = 7,
    InvalidString = 8,
    Panic = 9,
}

/// Eve's measurement on the two kept clones.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvqkdStrategy {
    /// Beam splitter, then heterodyne of both ports.
    BsCombine = 0,
    /// Heterodyne of each clone.
    DirectHeterodyne = 1,
}

/// Closed-form security figures for one `(Σ², ω²)` point.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CvqkdReport {
    pub signal_var: f64,
    pub omega_sq: f64,
    pub sigma_ch_sq: f64,
    pub sigma_b_sq: f64,
    pub sigma_e_sq: f64,
    pub gamma_ab: f64,
    pub gamma_ae: f64,
    pub i_ab: f64,
    pub i_ae: f64,
    pub key_rate_gap: f64,
    pub secure: bool,
    pub threshold_sigma_ch_sq: f64,
    pub one_way_threshold: f64,
}

/// Simulation parameters. Fill with [`cvqkd_sim_config_default`] first.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvqkdSimConfig {
    pub rounds: u64,
    pub signal_var: f64,
    pub reference_var: f64,
    pub omega_sq: f64,
    pub off_probability: f64,
    pub seed: u64,
    /// Worker threads; 0 is treated as 1.
    pub workers: usize,
    pub strategy: CvqkdStrategy,
    /// Power transmissivity of Eve's beam splitter.
    pub transmissivity: f64,
    /// Replace the attack by a plain channel with the two noises below.
    pub no_attack: bool,
    pub forward_noise: f64,
    pub backward_noise: f64,
}

/// Statistics measured on a finished session. Fields guarded by a `has_`
/// flag are meaningful only when the flag is set.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CvqkdEmpirical {
    pub on_rounds: u64,
    pub off_rounds: u64,
    pub sigma_b_sq: f64,
    pub i_ab: f64,
    pub has_eve: bool,
    pub sigma_e_sq: f64,
    pub i_ae: f64,
    pub key_rate_gap: f64,
    pub has_noise: bool,
    pub forward_noise: f64,
    pub backward_noise: f64,
    pub total_noise: f64,
}

/// Opaque simulation result.
pub struct CvqkdSession {
    manifest: RunManifest,
    transcript: Transcript,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> CvqkdStatus {
    match err {
        Error::Domain(_) => CvqkdStatus::Domain,
        Error::InsufficientData { .. } => CvqkdStatus::InsufficientData,
        Error::UncertaintyViolation { .. } => CvqkdStatus::UncertaintyViolation,
        Error::State(_) => CvqkdStatus::State,
        Error::Inconsistent(_) => CvqkdStatus::Inconsistent,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => CvqkdStatus::Io,
    }
}

struct Failure(CvqkdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CvqkdStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, records any error or panic, and maps it to a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CvqkdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CvqkdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CvqkdStatus::Panic
        }
    }
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cvqkd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// always NUL-terminated when `len > 0`). Returns the full message length
/// without the terminator, or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cvqkd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Bob's per-quadrature estimation noise `σ_B²` under the attack.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvqkd_sigma_b_sq(omega_sq: f64, out: *mut f64) -> CvqkdStatus {
    guard(|| write_out(out, security::sigma_b_sq(omega_sq)?, "out"))
}

/// Eve's per-quadrature estimation noise `σ_E²` under the attack.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvqkd_sigma_e_sq(omega_sq: f64, out: *mut f64) -> CvqkdStatus {
    guard(|| write_out(out, security::sigma_e_sq(omega_sq)?, "out"))
}

/// Closed-form security threshold: channel noise `(3 + √5)/4` and the
/// matching `ω² = (1 + √5)/4`.
///
/// # Safety
/// Both pointers must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvqkd_threshold_closed_form(
    sigma_ch_sq: *mut f64,
    omega_sq: *mut f64,
) -> CvqkdStatus {
    guard(|| {
        let (ch, w) = security::threshold_closed_form();
        if sigma_ch_sq.is_null() || omega_sq.is_null() {
            return Err(null("output"));
        }
        sigma_ch_sq.write(ch);
        omega_sq.write(w);
        Ok(())
    })
}

/// Threshold channel noise found by bisection to `tolerance` in `ω²`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvqkd_threshold_numeric(tolerance: f64, out: *mut f64) -> CvqkdStatus {
    guard(|| write_out(out, security::threshold_numeric(tolerance)?, "out"))
}

/// Fills a [`CvqkdReport`] for modulation variance `signal_var` and attack
/// noise `omega_sq`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvqkd_build_report(
    signal_var: f64,
    omega_sq: f64,
    out: *mut CvqkdReport,
) -> CvqkdStatus {
    guard(|| {
        let r = security::build_report(signal_var, omega_sq)?;
        let report = CvqkdReport {
            signal_var: r.signal_var,
            omega_sq: r.omega_sq,
            sigma_ch_sq: r.sigma_ch_sq,
            sigma_b_sq: r.sigma_b_sq,
            sigma_e_sq: r.sigma_e_sq,
            gamma_ab: r.gamma_ab,
            gamma_ae: r.gamma_ae,
            i_ab: r.i_ab,
            i_ae: r.i_ae,
            key_rate_gap: r.key_rate_gap,
            secure: r.secure,
            threshold_sigma_ch_sq: r.threshold_sigma_ch_sq,
            one_way_threshold: r.one_way_threshold,
        };
        write_out(out, report, "out")
    })
}

/// Smallest symplectic eigenvalue of the partial transpose of a two-mode
/// covariance matrix given as 16 row-major values in `(x₁, p₁, x₂, p₂)`
/// order.
///
/// # Safety
/// `cov` must point to 16 readable doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvqkd_pt_min_symplectic_eigenvalue(
    cov: *const f64,
    out: *mut f64,
) -> CvqkdStatus {
    guard(|| {
        if cov.is_null() {
            return Err(null("cov"));
        }
        let m = cvqkd_core::nalgebra::DMatrix::from_row_slice(
            4,
            4,
            std::slice::from_raw_parts(cov, 16),
        );
        write_out(out, pt_min_symplectic_eigenvalue(&m)?, "out")
    })
}

/// Writes the 16 row-major entries of the cloner's two-output covariance
/// matrix for cloning noise `sigma_sq`.
///
/// # Safety
/// `out` must point to 16 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cvqkd_cloner_covariance(sigma_sq: f64, out: *mut f64) -> CvqkdStatus {
    guard(|| {
        let m = gqcm_joint_cm(sigma_sq)?;
        if out.is_null() {
            return Err(null("out"));
        }
        for r in 0..4 {
            for c in 0..4 {
                out.add(4 * r + c).write(m[(r, c)]);
            }
        }
        Ok(())
    })
}

/// Writes the default simulation parameters into `out`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvqkd_sim_config_default(out: *mut CvqkdSimConfig) -> CvqkdStatus {
    guard(|| {
        let d = SimulateArgs::default();
        let cfg = CvqkdSimConfig {
            rounds: d.rounds,
            signal_var: d.signal_var,
            reference_var: d.reference_var,
            omega_sq: d.omega_sq,
            off_probability: d.off_probability,
            seed: d.seed,
            workers: d.workers,
            strategy: CvqkdStrategy::BsCombine,
            transmissivity: d.transmissivity,
            no_attack: d.no_attack,
            forward_noise: d.forward_noise,
            backward_noise: d.backward_noise,
        };
        write_out(out, cfg, "out")
    })
}

fn to_args(c: &CvqkdSimConfig) -> SimulateArgs {
    SimulateArgs {
        rounds: c.rounds,
        signal_var: c.signal_var,
        reference_var: c.reference_var,
        omega_sq: c.omega_sq,
        off_probability: c.off_probability,
        seed: c.seed,
        workers: c.workers.max(1),
        strategy: match c.strategy {
            CvqkdStrategy::BsCombine => Strategy::BsCombine,
            CvqkdStrategy::DirectHeterodyne => Strategy::DirectHeterodyne,
        },
        transmissivity: c.transmissivity,
        no_attack: c.no_attack,
        forward_noise: c.forward_noise,
        backward_noise: c.backward_noise,
        ..SimulateArgs::default()
    }
}

/// Runs a full session and stores the handle in `*out`.
///
/// # Safety
/// `config` must point to a valid [`CvqkdSimConfig`]; `out` must be valid
/// for writes. The handle must be released with [`cvqkd_session_free`].
#[no_mangle]
pub unsafe extern "C" fn cvqkd_session_run(
    config: *const CvqkdSimConfig,
    out: *mut *mut CvqkdSession,
) -> CvqkdStatus {
    guard(|| {
        if config.is_null() {
            return Err(null("config"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(ptr::null_mut());
        let args = to_args(&*config);
        let manifest = RunManifest::new("simulate", &args, args.seed)?;
        let transcript = run_session_parallel(&args.protocol(), &args.channel()?, args.workers)?;
        out.write(Box::into_raw(Box::new(CvqkdSession {
            manifest,
            transcript,
        })));
        Ok(())
    })
}

/// Releases a session. Null is ignored.
///
/// # Safety
/// `session` must be null or a handle from [`cvqkd_session_run`] that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn cvqkd_session_free(session: *mut CvqkdSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

unsafe fn session_ref<'a>(s: *const CvqkdSession) -> Result<&'a CvqkdSession, Failure> {
    s.as_ref().ok_or_else(|| null("session"))
}

/// Number of ON and OFF rounds.
///
/// # Safety
/// `session` must be a live handle; the out-pointers must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn cvqkd_session_counts(
    session: *const CvqkdSession,
    on: *mut u64,
    off: *mut u64,
) -> CvqkdStatus {
    guard(|| {
        let s = session_ref(session)?;
        write_out(on, s.transcript.on_count() as u64, "on")?;
        write_out(off, s.transcript.off_count() as u64, "off")
    })
}

/// Forward, backward and total channel noise estimated from OFF rounds.
///
/// # Safety
/// `session` must be a live handle; the out-pointers must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn cvqkd_session_noise(
    session: *const CvqkdSession,
    forward: *mut f64,
    backward: *mut f64,
    total: *mut f64,
) -> CvqkdStatus {
    guard(|| {
        let n = estimate_channel_noise(&session_ref(session)?.transcript)?;
        write_out(forward, n.forward, "forward")?;
        write_out(backward, n.backward, "backward")?;
        write_out(total, n.total, "total")
    })
}

/// Measured variances and mutual informations.
///
/// # Safety
/// `session` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvqkd_session_empirical(
    session: *const CvqkdSession,
    out: *mut CvqkdEmpirical,
) -> CvqkdStatus {
    guard(|| {
        let e = EmpiricalSecurity::from_transcript(&session_ref(session)?.transcript)?;
        let mut r = CvqkdEmpirical {
            on_rounds: e.on_rounds as u64,
            off_rounds: e.off_rounds as u64,
            sigma_b_sq: e.sigma_b_sq,
            i_ab: e.i_ab,
            ..Default::default()
        };
        if let (Some(se), Some(iae), Some(gap)) = (e.sigma_e_sq, e.i_ae, e.key_rate_gap) {
            r.has_eve = true;
            r.sigma_e_sq = se;
            r.i_ae = iae;
            r.key_rate_gap = gap;
        }
        if let Some(n) = e.noise {
            r.has_noise = true;
            r.forward_noise = n.forward;
            r.backward_noise = n.backward;
            r.total_noise = n.total;
        }
        write_out(out, r, "out")
    })
}

/// Writes the per-round transcript as CSV to `path` (UTF-8).
///
/// # Safety
/// `session` must be a live handle; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cvqkd_session_write_csv(
    session: *const CvqkdSession,
    path: *const c_char,
) -> CvqkdStatus {
    guard(|| {
        let s = session_ref(session)?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure(CvqkdStatus::InvalidString, "path is not valid UTF-8".into()))?;
        let f = File::create(PathBuf::from(path)).map_err(Error::from)?;
        write_transcript_csv(BufWriter::new(f), &s.transcript, &s.manifest)?;
        Ok(())
    })
}
