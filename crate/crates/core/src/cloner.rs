//! Universal 1→2 Gaussian quantum cloning machines that clone symmetrically
//! in the two quadratures.
//!
//! Two representations are provided. [`gqcm_joint_cm`] and
//! [`joint_output_state`] give the joint covariance matrix of the two clones.
//! The `sample_*` functions draw trajectory labels: each output is the
//! amplitude of a coherent state, and the vacuum/heterodyne noise is added
//! only when the clone is measured.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::math::ComplexModulation;
use crate::phase_space::{ComplexAmplitude, GaussianState};

const OPTIMAL_TOL: f64 = 1e-12;

/// Per-quadrature cloning noises of the two outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GqcmParams {
    sigma1_sq: f64,
    sigma2_sq: f64,
}

impl GqcmParams {
    /// Checks positivity and the uncertainty bound `σ₁²·σ₂² ≥ 1/4`.
    pub fn new(sigma1_sq: f64, sigma2_sq: f64) -> Result<Self> {
        for v in [sigma1_sq, sigma2_sq] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(domain(format!(
                    "cloning noise must be finite and > 0, got {v}"
                )));
            }
        }
        let product = sigma1_sq * sigma2_sq;
        if product < 0.25 - OPTIMAL_TOL {
            return Err(Error::UncertaintyViolation { product });
        }
        Ok(Self {
            sigma1_sq,
            sigma2_sq,
        })
    }

    /// Optimal cloner with clone-1 noise `sigma1_sq`, clone-2 noise `1/(4σ₁²)`.
    pub fn optimal(sigma1_sq: f64) -> Result<Self> {
        if !(sigma1_sq > 0.0) {
            return Err(domain(format!(
                "cloning noise must be > 0, got {sigma1_sq}"
            )));
        }
        Self::new(sigma1_sq, 0.25 / sigma1_sq)
    }

    /// The symmetric optimal cloner, `σ₁² = σ₂² = 1/2`.
    pub fn symmetric_optimal() -> Self {
        Self {
            sigma1_sq: 0.5,
            sigma2_sq: 0.5,
        }
    }

    pub fn sigma1_sq(&self) -> f64 {
        self.sigma1_sq
    }

    pub fn sigma2_sq(&self) -> f64 {
        self.sigma2_sq
    }

    pub fn is_optimal(&self) -> bool {
        (self.sigma1_sq * self.sigma2_sq - 0.25).abs() < OPTIMAL_TOL
    }

    pub fn is_symmetric(&self) -> bool {
        self.sigma1_sq == self.sigma2_sq
    }
}

/// Labels drawn for one use of a cloner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClonePairSample {
    pub clone1: ComplexAmplitude,
    pub clone2: ComplexAmplitude,
    /// Common shift `μ` for the symmetric decomposition.
    pub shared_shift: ComplexAmplitude,
}

/// Joint covariance of the two outputs of the optimal cloner with clone-1
/// noise `sigma_sq`:
///
/// ```text
/// V = ½ [ (1 + 2σ²) I        I           ]
///       [ I                  (1 + 1/(2σ²)) I ]
/// ```
pub fn gqcm_joint_cm(sigma_sq: f64) -> Result<DMatrix<f64>> {
    if !(sigma_sq > 0.0) || !sigma_sq.is_finite() {
        return Err(domain(format!(
            "cloning noise must be finite and > 0, got {sigma_sq}"
        )));
    }
    let a = 0.5 * (1.0 + 2.0 * sigma_sq);
    let b = 0.5 * (1.0 + 1.0 / (2.0 * sigma_sq));
    let c = 0.5;
    let mut v = DMatrix::zeros(4, 4);
    for q in 0..2 {
        v[(q, q)] = a;
        v[(2 + q, 2 + q)] = b;
        v[(q, 2 + q)] = c;
        v[(2 + q, q)] = c;
    }
    Ok(v)
}

/// Two-mode output state for a coherent input: both clones carry the input
/// mean, the covariance is [`gqcm_joint_cm`].
pub fn joint_output_state(input: ComplexAmplitude, sigma_sq: f64) -> Result<GaussianState> {
    let cov = gqcm_joint_cm(sigma_sq)?;
    let mean = DVector::from_vec(vec![input.x, input.p, input.x, input.p]);
    GaussianState::new(mean, cov)
}

/// Symmetric optimal cloner as a classical mixture: both clones are the
/// coherent label `input + μ` with `μ ~ Ω_{1/2}`.
pub fn sample_symmetric_pair<R: Rng + ?Sized>(
    input: ComplexAmplitude,
    rng: &mut R,
) -> ClonePairSample {
    let mu = half_kernel().sample(rng);
    ClonePairSample {
        clone1: input + mu,
        clone2: input + mu,
        shared_shift: mu,
    }
}

fn half_kernel() -> ComplexModulation {
    ComplexModulation::new(0.5).expect("constant variance")
}

/// Clone 2′ of the asymmetric optimal cloner (noise `1/(4ω²)`).
pub fn sample_asymmetric_kept_clone<R: Rng + ?Sized>(
    input: ComplexAmplitude,
    omega_sq: f64,
    rng: &mut R,
) -> Result<ComplexAmplitude> {
    let params = GqcmParams::optimal(omega_sq)?;
    Ok(input + ComplexModulation::new(params.sigma2_sq())?.sample(rng))
}

/// Clone 1′ of the asymmetric optimal cloner (noise `ω²`).
///
/// Drawn independently of [`sample_asymmetric_kept_clone`]; only the clone
/// marginals enter the attack analysis.
pub fn sample_asymmetric_sent_clone<R: Rng + ?Sized>(
    input: ComplexAmplitude,
    omega_sq: f64,
    rng: &mut R,
) -> Result<ComplexAmplitude> {
    let params = GqcmParams::optimal(omega_sq)?;
    Ok(input + ComplexModulation::new(params.sigma1_sq())?.sample(rng))
}
