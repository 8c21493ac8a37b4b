//! Closed-form security analysis of the cloner attack, plus the empirical
//! counterparts measured from a simulated transcript.
//!
//! With the symmetric forward cloner and an asymmetric backward cloner of
//! noise `ω²`:
//!
//! ```text
//! σ_ch² = ½ + ω²          σ_B² = 1 + σ_ch²          σ_E² = 2 + 1/(4ω²)
//! ```
//!
//! Direct reconciliation is secure iff `σ_B² ≤ σ_E²`, which gives the
//! threshold `σ̃_ch² = (3 + √5)/4` on the total channel noise.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::math::{empirical_error_variance, empirical_mi, mi_two_quadratures};
use crate::protocol::{
    estimate_channel_noise, extract_eve_pairs, extract_on_pairs, NoiseEstimate, QuadraturePairs,
    Transcript,
};

/// Threshold on `σ_ch²` of one-way coherent-state protocols against
/// individual cloner attacks.
pub const ONE_WAY_THRESHOLD: f64 = 0.5;

const BISECTION_BRACKET: (f64, f64) = (1e-6, 10.0);

fn check_omega(omega_sq: f64) -> Result<()> {
    if !(omega_sq > 0.0) || !omega_sq.is_finite() {
        return Err(domain(format!(
            "omega_sq must be finite and > 0, got {omega_sq}"
        )));
    }
    Ok(())
}

/// Total channel noise Bob and Alice see, `½ + ω²`.
pub fn sigma_ch_sq(omega_sq: f64) -> Result<f64> {
    check_omega(omega_sq)?;
    Ok(0.5 + omega_sq)
}

/// Bob's total noise per quadrature, `1 + σ_ch² = 3/2 + ω²`.
pub fn sigma_b_sq(omega_sq: f64) -> Result<f64> {
    Ok(1.0 + sigma_ch_sq(omega_sq)?)
}

/// Eve's estimation noise per quadrature, `2 + 1/(4ω²)`.
pub fn sigma_e_sq(omega_sq: f64) -> Result<f64> {
    check_omega(omega_sq)?;
    Ok(2.0 + 0.25 / omega_sq)
}

/// `σ_B² ≤ σ_E²`. Independent of the signal variance.
pub fn is_secure_direct(omega_sq: f64) -> Result<bool> {
    Ok(sigma_b_sq(omega_sq)? <= sigma_e_sq(omega_sq)?)
}

/// `((3 + √5)/4, (1 + √5)/4)`: the threshold on `σ_ch²` and the `ω²` at
/// which it is reached.
pub fn threshold_closed_form() -> (f64, f64) {
    let s5 = 5f64.sqrt();
    ((3.0 + s5) / 4.0, (1.0 + s5) / 4.0)
}

fn security_margin(omega_sq: f64) -> f64 {
    // σ_E² − σ_B², strictly decreasing in ω²
    2.0 + 0.25 / omega_sq - 1.5 - omega_sq
}

/// Bisection for the root of `σ_E² − σ_B²` in `ω²`, reported as `σ_ch²`.
pub fn threshold_numeric(tolerance: f64) -> Result<f64> {
    if !(tolerance > 0.0) {
        return Err(domain(format!("tolerance must be > 0, got {tolerance}")));
    }
    let (mut lo, mut hi) = BISECTION_BRACKET;
    let (flo, fhi) = (security_margin(lo), security_margin(hi));
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::Inconsistent(format!(
            "bisection bracket invalid: f(lo)={flo}, f(hi)={fhi}"
        )));
    }
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if security_margin(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 + 0.5 * (lo + hi))
}

/// `(I_AB, I_AE)` in bits, both quadratures.
pub fn mutual_informations(signal_var: f64, omega_sq: f64) -> Result<(f64, f64)> {
    if !(signal_var > 0.0) {
        return Err(domain(format!("signal_var must be > 0, got {signal_var}")));
    }
    Ok((
        mi_two_quadratures(signal_var, sigma_b_sq(omega_sq)?)?,
        mi_two_quadratures(signal_var, sigma_e_sq(omega_sq)?)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub signal_var: f64,
    pub omega_sq: f64,
    pub sigma_ch_sq: f64,
    pub sigma_b_sq: f64,
    pub sigma_e_sq: f64,
    pub gamma_ab: f64,
    pub gamma_ae: f64,
    pub i_ab: f64,
    pub i_ae: f64,
    /// `I_AB − I_AE` in bits.
    pub key_rate_gap: f64,
    pub secure: bool,
    pub threshold_sigma_ch_sq: f64,
    pub one_way_threshold: f64,
}

/// Populates every field and checks that the noise, SNR, and information
/// forms of the security condition agree.
pub fn build_report(signal_var: f64, omega_sq: f64) -> Result<SecurityReport> {
    let sb = sigma_b_sq(omega_sq)?;
    let se = sigma_e_sq(omega_sq)?;
    let (i_ab, i_ae) = mutual_informations(signal_var, omega_sq)?;
    let gamma_ab = signal_var / sb;
    let gamma_ae = signal_var / se;
    let key_rate_gap = i_ab - i_ae;

    let by_noise = sb <= se;
    let by_snr = gamma_ab >= gamma_ae;
    let by_info = i_ab >= i_ae;
    if by_noise != by_snr || by_noise != by_info || by_info != (key_rate_gap >= 0.0) {
        return Err(Error::Inconsistent(format!(
            "security predicates disagree at Σ²={signal_var}, ω²={omega_sq}: noise={by_noise} snr={by_snr} info={by_info}"
        )));
    }
    Ok(SecurityReport {
        signal_var,
        omega_sq,
        sigma_ch_sq: sb - 1.0,
        sigma_b_sq: sb,
        sigma_e_sq: se,
        gamma_ab,
        gamma_ae,
        i_ab,
        i_ae,
        key_rate_gap,
        secure: by_noise,
        threshold_sigma_ch_sq: threshold_closed_form().0,
        one_way_threshold: ONE_WAY_THRESHOLD,
    })
}

/// Quantities measured from a transcript.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSecurity {
    pub on_rounds: usize,
    pub off_rounds: usize,
    /// Pooled per-quadrature `Var(α′ − α)`.
    pub sigma_b_sq: f64,
    /// Pooled per-quadrature `Var(α̂_E − α)`; absent without an eavesdropper.
    pub sigma_e_sq: Option<f64>,
    pub i_ab: f64,
    pub i_ae: Option<f64>,
    pub key_rate_gap: Option<f64>,
    pub noise: Option<NoiseEstimate>,
}

fn pooled_variance(p: &QuadraturePairs) -> Result<f64> {
    Ok(0.5 * (empirical_error_variance(&p.x)? + empirical_error_variance(&p.p)?))
}

fn two_quadrature_mi(p: &QuadraturePairs, signal_var: f64) -> Result<f64> {
    Ok(empirical_mi(&p.x, signal_var)? + empirical_mi(&p.p, signal_var)?)
}

impl EmpiricalSecurity {
    pub fn from_transcript(t: &Transcript) -> Result<Self> {
        let sv = t.config.signal_var;
        let bob = extract_on_pairs(t)?;
        let eve = extract_eve_pairs(t).ok();
        let i_ab = two_quadrature_mi(&bob, sv)?;
        let i_ae = eve.as_ref().map(|e| two_quadrature_mi(e, sv)).transpose()?;
        Ok(Self {
            on_rounds: bob.len(),
            off_rounds: t.off_count(),
            sigma_b_sq: pooled_variance(&bob)?,
            sigma_e_sq: eve.as_ref().map(pooled_variance).transpose()?,
            i_ab,
            i_ae,
            key_rate_gap: i_ae.map(|e| i_ab - e),
            noise: estimate_channel_noise(t).ok(),
        })
    }
}

/// Standard error of a pooled per-quadrature variance estimate from `n`
/// rounds (2n samples) under a Gaussian model.
pub fn pooled_variance_std_error(variance: f64, rounds: usize) -> f64 {
    variance * (1.0 / rounds.max(1) as f64).sqrt()
}
