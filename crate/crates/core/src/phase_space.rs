//! Dense multi-mode Gaussian states.
//!
//! A state is a mean vector and covariance matrix in the ordering
//! `(x₁, p₁, x₂, p₂, …)`, with vacuum covariance `½·I`. All operations are
//! value-returning; nothing mutates a state in place.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Tolerance on symplectic eigenvalues for the physicality test.
pub const PHYSICAL_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-12;

/// Phase-space point `μ = (x + ip)/√2`, stored as its quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComplexAmplitude {
    pub x: f64,
    pub p: f64,
}

impl ComplexAmplitude {
    pub const ZERO: ComplexAmplitude = ComplexAmplitude { x: 0.0, p: 0.0 };

    pub const fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }

    /// From the real and imaginary parts of `μ`.
    pub fn from_complex(re: f64, im: f64) -> Self {
        let s = std::f64::consts::SQRT_2;
        Self {
            x: s * re,
            p: s * im,
        }
    }

    pub fn re(&self) -> f64 {
        self.x / std::f64::consts::SQRT_2
    }

    pub fn im(&self) -> f64 {
        self.p / std::f64::consts::SQRT_2
    }

    /// `|μ|² = (x² + p²)/2`.
    pub fn norm_sqr(&self) -> f64 {
        0.5 * (self.x * self.x + self.p * self.p)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.p.is_finite()
    }
}

impl Add for ComplexAmplitude {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.p + o.p)
    }
}

impl AddAssign for ComplexAmplitude {
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.p += o.p;
    }
}

impl Sub for ComplexAmplitude {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.p - o.p)
    }
}

impl Neg for ComplexAmplitude {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.p)
    }
}

impl Mul<f64> for ComplexAmplitude {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(k * self.x, k * self.p)
    }
}

impl Mul<ComplexAmplitude> for f64 {
    type Output = ComplexAmplitude;
    fn mul(self, a: ComplexAmplitude) -> ComplexAmplitude {
        a * self
    }
}

/// Real beam splitter with transmission `t` and reflection `r`.
///
/// Acting on input modes `(i, j)` it produces the `+` port
/// `r·a_i + t·a_j` and the `−` port `t·a_i − r·a_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitter {
    t: f64,
    r: f64,
}

impl BeamSplitter {
    pub fn new(t: f64, r: f64) -> Result<Self> {
        if !(t >= 0.0 && r >= 0.0) || !t.is_finite() || !r.is_finite() {
            return Err(domain(format!(
                "beam splitter needs t, r >= 0, got t={t}, r={r}"
            )));
        }
        if (t * t + r * r - 1.0).abs() > 1e-12 {
            return Err(domain(format!(
                "beam splitter needs t² + r² = 1, got {}",
                t * t + r * r
            )));
        }
        Ok(Self { t, r })
    }

    /// Beam splitter with the given power transmissivity `t²`.
    pub fn from_transmissivity(tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(domain(format!(
                "transmissivity must be in [0, 1], got {tau}"
            )));
        }
        Self::new(tau.sqrt(), (1.0 - tau).sqrt())
    }

    pub fn balanced() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { t: h, r: h }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `(plus, minus)` output labels for input labels `(a_i, a_j)`.
    pub fn apply(
        &self,
        a_i: ComplexAmplitude,
        a_j: ComplexAmplitude,
    ) -> (ComplexAmplitude, ComplexAmplitude) {
        (self.r * a_i + self.t * a_j, self.t * a_i - self.r * a_j)
    }
}

impl Default for BeamSplitter {
    fn default() -> Self {
        Self::balanced()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state after checking shape, symmetry, and physicality.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(domain(format!(
                "mean length must be a positive even number, got {dim}"
            )));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(domain("covariance shape does not match mean"));
        }
        let nu = symplectic_eigenvalues(&cov)?;
        if nu[0] < 0.5 - PHYSICAL_TOL {
            return Err(domain(format!(
                "unphysical covariance: smallest symplectic eigenvalue {}",
                nu[0]
            )));
        }
        Ok(Self { mean, cov })
    }

    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes < 1 {
            return Err(domain("vacuum needs at least one mode"));
        }
        Ok(Self {
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes) * 0.5,
        })
    }

    pub fn coherent(amp: ComplexAmplitude) -> Self {
        Self {
            mean: DVector::from_vec(vec![amp.x, amp.p]),
            cov: DMatrix::identity(2, 2) * 0.5,
        }
    }

    /// Tensor product: block-diagonal covariance, concatenated means.
    pub fn product(&self, other: &GaussianState) -> GaussianState {
        let (a, b) = (self.mean.len(), other.mean.len());
        let mut mean = DVector::zeros(a + b);
        mean.rows_mut(0, a).copy_from(&self.mean);
        mean.rows_mut(a, b).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(a + b, a + b);
        cov.view_mut((0, 0), (a, a)).copy_from(&self.cov);
        cov.view_mut((a, a), (b, b)).copy_from(&other.cov);
        GaussianState { mean, cov }
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn mode_mean(&self, mode: usize) -> Result<ComplexAmplitude> {
        self.check_mode(mode)?;
        Ok(ComplexAmplitude::new(
            self.mean[2 * mode],
            self.mean[2 * mode + 1],
        ))
    }

    pub fn mode_cov(&self, mode: usize) -> Result<Matrix2<f64>> {
        self.check_mode(mode)?;
        let k = 2 * mode;
        Ok(Matrix2::new(
            self.cov[(k, k)],
            self.cov[(k, k + 1)],
            self.cov[(k + 1, k)],
            self.cov[(k + 1, k + 1)],
        ))
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            return Err(domain(format!(
                "mode {mode} out of range for {} modes",
                self.n_modes()
            )));
        }
        Ok(())
    }

    pub fn displace(&self, mode: usize, amp: ComplexAmplitude) -> Result<Self> {
        self.check_mode(mode)?;
        let mut out = self.clone();
        out.mean[2 * mode] += amp.x;
        out.mean[2 * mode + 1] += amp.p;
        Ok(out)
    }

    /// Classical Gaussian modulation of one mode: adds `sigma2` to the
    /// variance of both of its quadratures.
    pub fn add_modulation_noise(&self, mode: usize, sigma2: f64) -> Result<Self> {
        self.check_mode(mode)?;
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(domain(format!(
                "modulation variance must be >= 0, got {sigma2}"
            )));
        }
        let mut out = self.clone();
        out.cov[(2 * mode, 2 * mode)] += sigma2;
        out.cov[(2 * mode + 1, 2 * mode + 1)] += sigma2;
        Ok(out)
    }

    /// Mixes `mode_i` and `mode_j`; afterwards `mode_i` holds the `+` port
    /// and `mode_j` the `−` port (see [`BeamSplitter`]).
    pub fn beam_splitter(&self, mode_i: usize, mode_j: usize, bs: BeamSplitter) -> Result<Self> {
        self.check_mode(mode_i)?;
        self.check_mode(mode_j)?;
        if mode_i == mode_j {
            return Err(domain("beam splitter needs two distinct modes"));
        }
        let s = beam_splitter_matrix(self.n_modes(), mode_i, mode_j, bs);
        Ok(GaussianState {
            mean: &s * &self.mean,
            cov: &s * &self.cov * s.transpose(),
        })
    }

    /// Reduced state on the listed modes, in the order given.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(domain("partial trace must keep at least one mode"));
        }
        for (k, &m) in keep.iter().enumerate() {
            self.check_mode(m)?;
            if keep[..k].contains(&m) {
                return Err(domain(format!("mode {m} listed twice")));
            }
        }
        let idx: Vec<usize> = keep.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        Ok(GaussianState {
            mean: DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.mean[i])),
            cov: DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.cov[(idx[r], idx[c])]),
        })
    }

    /// Heterodyne detection of `mode`.
    ///
    /// The outcome is Gaussian with the mode's mean and covariance
    /// `V_mode + ½·I`. The remaining modes are conditioned on the outcome;
    /// `None` is returned for them when `mode` was the only one.
    pub fn heterodyne<R: Rng + ?Sized>(
        &self,
        mode: usize,
        rng: &mut R,
    ) -> Result<(ComplexAmplitude, Option<GaussianState>)> {
        self.check_mode(mode)?;
        let d = self.mode_mean(mode)?;
        let meas = self.mode_cov(mode)? + Matrix2::identity() * 0.5;
        let outcome = d + sample_2d(&meas, rng)?;
        if self.n_modes() == 1 {
            return Ok((outcome, None));
        }
        Ok((outcome, Some(self.condition_on(mode, &meas, outcome)?)))
    }

    fn condition_on(
        &self,
        mode: usize,
        meas: &Matrix2<f64>,
        outcome: ComplexAmplitude,
    ) -> Result<Self> {
        let rest: Vec<usize> = (0..self.n_modes()).filter(|&m| m != mode).collect();
        let idx: Vec<usize> = rest.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let k = 2 * mode;
        let n = idx.len();
        let cross = DMatrix::from_fn(n, 2, |r, c| self.cov[(idx[r], k + c)]);
        let inv = meas
            .try_inverse()
            .ok_or_else(|| domain("singular heterodyne covariance"))?;
        let inv = DMatrix::from_column_slice(2, 2, inv.as_slice());
        let gain = &cross * inv;
        let innov = DVector::from_vec(vec![outcome.x - self.mean[k], outcome.p - self.mean[k + 1]]);
        let mean = DVector::from_iterator(n, idx.iter().map(|&i| self.mean[i])) + &gain * innov;
        let b = DMatrix::from_fn(n, n, |r, c| self.cov[(idx[r], idx[c])]);
        let mut cov = b - &gain * cross.transpose();
        symmetrize(&mut cov);
        Ok(GaussianState { mean, cov })
    }

    pub fn is_physical(&self) -> bool {
        symplectic_eigenvalues(&self.cov)
            .map(|nu| nu[0] >= 0.5 - PHYSICAL_TOL)
            .unwrap_or(false)
    }
}

/// Heterodyne outcome for a coherent state with amplitude `label`: unit
/// Gaussian noise on each quadrature. Draws the same values as
/// `GaussianState::coherent(label).heterodyne(0, rng)`.
#[inline]
pub fn heterodyne_coherent<R: Rng + ?Sized>(
    label: ComplexAmplitude,
    rng: &mut R,
) -> ComplexAmplitude {
    let x: f64 = rng.sample(StandardNormal);
    let p: f64 = rng.sample(StandardNormal);
    label + ComplexAmplitude::new(x, p)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m = (&*m + t) * 0.5;
}

fn sample_2d<R: Rng + ?Sized>(cov: &Matrix2<f64>, rng: &mut R) -> Result<ComplexAmplitude> {
    let l = cov
        .cholesky()
        .ok_or_else(|| domain("heterodyne covariance is not positive definite"))?
        .l();
    let z = Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    let v = l * z;
    Ok(ComplexAmplitude::new(v[0], v[1]))
}

/// Symplectic matrix of a beam splitter on modes `(i, j)` in an `n`-mode
/// phase space. The same 2×2 real orthogonal block acts on `x` and `p`.
pub fn beam_splitter_matrix(n_modes: usize, i: usize, j: usize, bs: BeamSplitter) -> DMatrix<f64> {
    let mut s = DMatrix::identity(2 * n_modes, 2 * n_modes);
    for q in 0..2 {
        let (a, b) = (2 * i + q, 2 * j + q);
        s[(a, a)] = bs.r;
        s[(a, b)] = bs.t;
        s[(b, a)] = bs.t;
        s[(b, b)] = -bs.r;
    }
    s
}

/// Symplectic form `Ω = ⊕ [[0, 1], [-1, 0]]`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for m in 0..n_modes {
        w[(2 * m, 2 * m + 1)] = 1.0;
        w[(2 * m + 1, 2 * m)] = -1.0;
    }
    w
}

fn check_cov(cov: &DMatrix<f64>) -> Result<()> {
    let dim = cov.nrows();
    if dim == 0 || !dim.is_multiple_of(2) || cov.ncols() != dim {
        return Err(domain("covariance must be square with even dimension"));
    }
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(domain("covariance has non-finite entries"));
    }
    let scale = cov.amax().max(1.0);
    if (cov - cov.transpose()).amax() > SYMMETRY_TOL * scale {
        return Err(domain("covariance is not symmetric"));
    }
    Ok(())
}

/// Symplectic eigenvalues in ascending order.
///
/// They are the square roots of the eigenvalues of the symmetric matrix
/// `V^{1/2} Ωᵀ V Ω V^{1/2}`, each of which appears twice.
pub fn symplectic_eigenvalues(cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_cov(cov)?;
    let n = cov.nrows() / 2;
    let eig = cov.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(domain("covariance is not positive definite"));
    }
    let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let root = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.transpose();
    let w = symplectic_form(n);
    let mut m = &root * w.transpose() * cov * &w * &root;
    symmetrize(&mut m);
    let mut ev: Vec<f64> = m
        .symmetric_eigenvalues()
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect())
}

fn det2(m: &DMatrix<f64>, r: usize, c: usize) -> f64 {
    m[(r, c)] * m[(r + 1, c + 1)] - m[(r, c + 1)] * m[(r + 1, c)]
}

/// Closed-form two-mode symplectic eigenvalues `(ν₋, ν₊)` from the
/// seralian `Δ = det A + det B + 2 det C` and `det V`.
///
/// The quadratic formula loses about half the digits when `ν₋ ≈ ν₊`
/// (pure states, for instance); [`symplectic_eigenvalues`] does not.
pub fn two_mode_symplectic_eigenvalues(cov: &DMatrix<f64>) -> Result<(f64, f64)> {
    check_cov(cov)?;
    if cov.nrows() != 4 {
        return Err(domain("two-mode covariance must be 4×4"));
    }
    let delta = det2(cov, 0, 0) + det2(cov, 2, 2) + 2.0 * det2(cov, 0, 2);
    two_mode_from_invariants(delta, cov.determinant())
}

fn two_mode_from_invariants(delta: f64, det: f64) -> Result<(f64, f64)> {
    if !(det > 0.0) {
        return Err(domain("covariance is not positive definite"));
    }
    let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
    let big = 0.5 * (delta + disc);
    if !(big > 0.0) {
        return Err(domain("covariance is not positive definite"));
    }
    // ν₋² ν₊² = det V; avoids cancellation in (Δ − √·)/2
    let small = det / big;
    Ok((small.sqrt(), big.sqrt()))
}

/// Partial transpose of a two-mode covariance: flips the sign of `p₂`.
pub fn partial_transpose(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let flip = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 1.0, -1.0]));
    &flip * cov * &flip
}

/// Smaller symplectic eigenvalue of the partially transposed covariance.
pub fn pt_min_symplectic_eigenvalue(cov: &DMatrix<f64>) -> Result<f64> {
    if cov.nrows() != 4 || cov.ncols() != 4 {
        return Err(domain("two-mode covariance must be 4×4"));
    }
    let nu = symplectic_eigenvalues(cov)?[0];
    if nu < 0.5 - PHYSICAL_TOL {
        return Err(domain(format!("unphysical two-mode covariance: ν₋ = {nu}")));
    }
    Ok(symplectic_eigenvalues(&partial_transpose(cov))?[0])
}

/// PPT separability test for a physical two-mode Gaussian state.
pub fn ppt_separable_two_mode(cov: &DMatrix<f64>) -> Result<bool> {
    Ok(pt_min_symplectic_eigenvalue(cov)? >= 0.5 - PHYSICAL_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::SampleStats;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    fn eq13(s: f64) -> DMatrix<f64> {
        let a = 0.5 * (1.0 + 2.0 * s);
        let b = 0.5 * (1.0 + 1.0 / (2.0 * s));
        DMatrix::from_row_slice(
            4,
            4,
            &[
                a, 0.0, 0.5, 0.0, 0.0, a, 0.0, 0.5, 0.5, 0.0, b, 0.0, 0.0, 0.5, 0.0, b,
            ],
        )
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn vacuum_and_coherent() {
        let v = GaussianState::vacuum(1).unwrap();
        assert_eq!(v.mean().as_slice(), &[0.0, 0.0]);
        assert_eq!(v.cov(), &(DMatrix::identity(2, 2) * 0.5));
        let v2 = GaussianState::vacuum(2).unwrap();
        assert_eq!(v2.cov(), &(DMatrix::identity(4, 4) * 0.5));
        assert!(v2.is_physical());
        assert!(symplectic_eigenvalues(v2.cov())
            .unwrap()
            .iter()
            .all(|&n| close(n, 0.5, 1e-14)));
        assert!(GaussianState::vacuum(0).is_err());

        assert_eq!(GaussianState::coherent(ComplexAmplitude::ZERO), v);
        let c = GaussianState::coherent(ComplexAmplitude::new(1.0, -2.0));
        assert_eq!(c.mean().as_slice(), &[1.0, -2.0]);
    }

    #[test]
    fn amplitude_conversions() {
        let a = ComplexAmplitude::from_complex(1.0, -0.5);
        assert!(close(a.re(), 1.0, 1e-15) && close(a.im(), -0.5, 1e-15));
        assert!(close(a.norm_sqr(), 1.25, 1e-14));
    }

    #[test]
    fn displacement() {
        let beta = ComplexAmplitude::new(0.3, 1.1);
        let alpha = ComplexAmplitude::new(-2.0, 0.4);
        let d = GaussianState::coherent(beta).displace(0, alpha).unwrap();
        assert_eq!(d, GaussianState::coherent(beta + alpha));
        let c = GaussianState::coherent(beta);
        assert_eq!(c.displace(0, ComplexAmplitude::ZERO).unwrap(), c);
        assert!(c.displace(1, alpha).is_err());
        let twice = c.displace(0, alpha).unwrap().displace(0, beta).unwrap();
        assert_eq!(twice.mode_mean(0).unwrap(), beta + alpha + beta);
    }

    #[test]
    fn modulation_noise() {
        let c = GaussianState::coherent(ComplexAmplitude::new(1.0, 1.0));
        assert_eq!(c.add_modulation_noise(0, 0.0).unwrap(), c);
        let n = c.add_modulation_noise(0, 0.3).unwrap();
        assert!(close(n.cov()[(0, 0)], 0.8, 1e-15) && close(n.cov()[(1, 1)], 0.8, 1e-15));
        let ab = c
            .add_modulation_noise(0, 0.2)
            .unwrap()
            .add_modulation_noise(0, 0.5)
            .unwrap();
        let sum = c.add_modulation_noise(0, 0.7).unwrap();
        assert!((ab.cov() - sum.cov()).amax() < 1e-15);
        assert!(c.add_modulation_noise(0, -0.1).is_err());
    }

    #[test]
    fn beam_splitter_cancels_reference() {
        let mut rng = stream(4);
        for _ in 0..50 {
            let alpha =
                ComplexAmplitude::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let beta =
                ComplexAmplitude::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
            let mu =
                ComplexAmplitude::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            // mode 0: backward clone (α+β+μ), mode 1: forward clone (β+μ)
            let st = GaussianState::coherent(alpha + beta + mu)
                .product(&GaussianState::coherent(beta + mu));
            let out = st.beam_splitter(0, 1, BeamSplitter::balanced()).unwrap();
            let minus = out.mode_mean(1).unwrap();
            let expect = alpha * std::f64::consts::FRAC_1_SQRT_2;
            assert!(close(minus.x, expect.x, 1e-12) && close(minus.p, expect.p, 1e-12));

            let tau: f64 = rng.random_range(0.0..1.0);
            let bs = BeamSplitter::from_transmissivity(tau).unwrap();
            let (t, r) = (bs.t(), bs.r());
            let out = st.beam_splitter(0, 1, bs).unwrap();
            let plus = out.mode_mean(0).unwrap();
            let minus = out.mode_mean(1).unwrap();
            let theta_plus = (mu + beta) * (t + r) + alpha * r;
            let theta_minus = (mu + beta) * (t - r) + alpha * t;
            assert!(close(plus.x, theta_plus.x, 1e-10) && close(plus.p, theta_plus.p, 1e-10));
            assert!(close(minus.x, theta_minus.x, 1e-10) && close(minus.p, theta_minus.p, 1e-10));
        }
    }

    #[test]
    fn beam_splitter_limits_and_errors() {
        let a = ComplexAmplitude::new(1.0, 2.0);
        let b = ComplexAmplitude::new(-3.0, 0.5);
        let st = GaussianState::coherent(a).product(&GaussianState::coherent(b));
        let out = st
            .beam_splitter(0, 1, BeamSplitter::new(1.0, 0.0).unwrap())
            .unwrap();
        assert_eq!(out.mode_mean(0).unwrap(), b);
        assert_eq!(out.mode_mean(1).unwrap(), a);
        assert!(st.beam_splitter(1, 1, BeamSplitter::balanced()).is_err());
        assert!(BeamSplitter::new(0.9, 0.9).is_err());
        assert!(BeamSplitter::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn partial_trace_cases() {
        let a = ComplexAmplitude::new(1.0, 2.0);
        let b = ComplexAmplitude::new(-3.0, 0.5);
        let st = GaussianState::coherent(a).product(&GaussianState::coherent(b));
        assert_eq!(st.partial_trace(&[1]).unwrap(), GaussianState::coherent(b));
        assert_eq!(st.partial_trace(&[0, 1]).unwrap(), st);
        assert!(st.partial_trace(&[]).is_err());
        assert!(st.partial_trace(&[2]).is_err());

        let v = GaussianState::new(DVector::zeros(4), eq13(0.3)).unwrap();
        let k = v.partial_trace(&[0]).unwrap();
        assert!(close(k.cov()[(0, 0)], 0.8, 1e-15) && close(k.cov()[(0, 1)], 0.0, 0.0));
    }

    #[test]
    fn symplectic_spectrum_small_cases() {
        let single = DMatrix::from_diagonal(&DVector::from_vec(vec![2.5, 2.5]));
        assert!(close(
            symplectic_eigenvalues(&single).unwrap()[0],
            2.5,
            1e-12
        ));
        // squeezed vacuum: diag(s, 1/(4s)) is pure
        let sq = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0 / 12.0]));
        assert!(close(symplectic_eigenvalues(&sq).unwrap()[0], 0.5, 1e-12));

        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.1, 1.0]);
        assert!(symplectic_eigenvalues(&bad).is_err());
        let neg = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(symplectic_eigenvalues(&neg).is_err());
    }

    /// Independent oracle: the moduli of the eigenvalues of `iΩV` are the
    /// symplectic eigenvalues. `ΩV` is real with eigenvalues `±iν`.
    fn oracle_symplectic(cov: &DMatrix<f64>) -> Vec<f64> {
        let n = cov.nrows() / 2;
        let m = symplectic_form(n) * cov;
        let mut ev: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.im.abs()).collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect()
    }

    #[test]
    fn eq13_spectrum_against_oracle() {
        let v = eq13(0.5);
        let general = symplectic_eigenvalues(&v).unwrap();
        let closed = two_mode_symplectic_eigenvalues(&v).unwrap();
        let oracle = oracle_symplectic(&v);
        // Δ = 5/2, det V = 9/16 → ν = 1/2, 3/2
        assert!(close(closed.0, 0.5, 1e-12) && close(closed.1, 1.5, 1e-12));
        for (g, o) in general.iter().zip(&oracle) {
            assert!(close(*g, *o, 1e-10));
        }
        assert!(close(general[0], closed.0, 1e-10) && close(general[1], closed.1, 1e-10));

        let pt = partial_transpose(&v);
        let pt_oracle = oracle_symplectic(&pt);
        let half_sqrt3 = 3f64.sqrt() / 2.0;
        assert!(close(pt_oracle[0], half_sqrt3, 1e-10) && close(pt_oracle[1], half_sqrt3, 1e-10));
        assert!(close(
            pt_min_symplectic_eigenvalue(&v).unwrap(),
            half_sqrt3,
            1e-12
        ));
        // Δ̃ = det A + det B − 2 det C = 3/2, det V = 9/16 → ν̃² = 3/4 (double)
        let (a, b) = two_mode_symplectic_eigenvalues(&pt).unwrap();
        assert!(close(a, half_sqrt3, 1e-12) && close(b, half_sqrt3, 1e-12));
    }

    #[test]
    fn ppt_cases() {
        assert!(ppt_separable_two_mode(GaussianState::vacuum(2).unwrap().cov()).unwrap());
        for k in 0..100 {
            let s = 10f64.powf(-3.0 + 6.0 * k as f64 / 99.0);
            assert!(ppt_separable_two_mode(&eq13(s)).unwrap(), "σ²={s}");
        }
        // two-mode squeezed vacuum is entangled
        let c = 1.0f64.cosh() * 0.5;
        let sh = 1.0f64.sinh() * 0.5;
        let tmsv = DMatrix::from_row_slice(
            4,
            4,
            &[
                c, 0.0, sh, 0.0, 0.0, c, 0.0, -sh, sh, 0.0, c, 0.0, 0.0, -sh, 0.0, c,
            ],
        );
        assert!(!ppt_separable_two_mode(&tmsv).unwrap());
        // pure: ν₋ = ν₊ = 1/2; PT gives e^{-r}/2
        let nu = symplectic_eigenvalues(&tmsv).unwrap();
        assert!(close(nu[0], 0.5, 1e-12) && close(nu[1], 0.5, 1e-12));
        assert!(close(
            pt_min_symplectic_eigenvalue(&tmsv).unwrap(),
            0.5 * (-1.0f64).exp(),
            1e-12
        ));
        let unphysical = DMatrix::identity(4, 4) * 0.2;
        assert!(ppt_separable_two_mode(&unphysical).is_err());
    }

    #[test]
    fn state_validation() {
        assert!(GaussianState::new(DVector::zeros(2), DMatrix::identity(2, 2) * 0.3).is_err());
        assert!(GaussianState::new(DVector::zeros(3), DMatrix::identity(3, 3)).is_err());
        assert!(GaussianState::new(DVector::zeros(4), eq13(0.5)).is_ok());
    }

    #[test]
    fn heterodyne_coherent_statistics() {
        let beta = ComplexAmplitude::new(2.0, -1.0);
        let st = GaussianState::coherent(beta);
        let mut rng = stream(77);
        let n = 1_000_000;
        let mut sx = SampleStats::new();
        let mut sp = SampleStats::new();
        for _ in 0..n {
            let (o, rest) = st.heterodyne(0, &mut rng).unwrap();
            assert!(rest.is_none());
            sx.push(o.x);
            sp.push(o.p);
        }
        assert!((sx.variance().unwrap() - 1.0).abs() < 0.01);
        assert!((sp.variance().unwrap() - 1.0).abs() < 0.01);
        assert!((sx.mean() - 2.0).abs() < 3.0 * (1.0 / n as f64).sqrt());
        assert!((sp.mean() + 1.0).abs() < 3.0 * (1.0 / n as f64).sqrt());

        let noisy = st.add_modulation_noise(0, 0.7).unwrap();
        let s: SampleStats = (0..200_000)
            .map(|_| noisy.heterodyne(0, &mut rng).unwrap().0.x)
            .collect();
        assert!((s.variance().unwrap() / 1.7 - 1.0).abs() < 0.015);

        let vac = GaussianState::vacuum(1).unwrap();
        let m: SampleStats = (0..100_000)
            .map(|_| vac.heterodyne(0, &mut rng).unwrap().0.p)
            .collect();
        assert!(m.mean().abs() < 0.015);
        assert!(st.heterodyne(3, &mut rng).is_err());
    }

    #[test]
    fn coherent_fast_path_matches_engine() {
        let label = ComplexAmplitude::new(4.0, -7.5);
        let mut a = stream(55);
        let mut b = stream(55);
        for _ in 0..100 {
            let fast = heterodyne_coherent(label, &mut a);
            let (slow, _) = GaussianState::coherent(label)
                .heterodyne(0, &mut b)
                .unwrap();
            assert!(close(fast.x, slow.x, 1e-14) && close(fast.p, slow.p, 1e-14));
        }
    }

    #[test]
    fn heterodyne_conditioning_on_eq13() {
        // Sequential heterodyne (condition on mode 0, then measure the
        // conditioned mode 1) must reproduce the joint outcome covariance
        // V + ½I that a simultaneous heterodyne of both modes would give.
        let s = 0.5;
        let v = eq13(s);
        let st =
            GaussianState::new(DVector::from_vec(vec![1.0, -1.0, 1.0, -1.0]), v.clone()).unwrap();
        let mut rng = stream(123);
        let (_, rest) = st.heterodyne(0, &mut rng).unwrap();
        let rest = rest.unwrap();
        // closed form: B − C(A+½I)⁻¹Cᵀ = (1 − 1/6)·I at σ² = 1/2
        assert!(close(rest.cov()[(0, 0)], 5.0 / 6.0, 1e-12));
        assert!(close(rest.cov()[(0, 1)], 0.0, 1e-15));

        let n = 400_000;
        let mut o = vec![[0.0f64; 4]; n];
        for row in o.iter_mut() {
            let (a, rest) = st.heterodyne(0, &mut rng).unwrap();
            let (b, _) = rest.unwrap().heterodyne(0, &mut rng).unwrap();
            *row = [a.x, a.p, b.x, b.p];
        }
        let expect = &v + DMatrix::identity(4, 4) * 0.5;
        let means: Vec<f64> = (0..4)
            .map(|k| o.iter().map(|r| r[k]).sum::<f64>() / n as f64)
            .collect();
        for i in 0..4 {
            for j in 0..4 {
                let c = o
                    .iter()
                    .map(|r| (r[i] - means[i]) * (r[j] - means[j]))
                    .sum::<f64>()
                    / (n - 1) as f64;
                let se =
                    ((expect[(i, i)] * expect[(j, j)] + expect[(i, j)].powi(2)) / n as f64).sqrt();
                assert!(
                    (c - expect[(i, j)]).abs() < 4.0 * se,
                    "({i},{j}) {c} vs {}",
                    expect[(i, j)]
                );
            }
        }
    }

    fn random_physical(seed: u64) -> GaussianState {
        // thermal product followed by a random passive mixing and local noise
        let mut rng = stream(seed);
        let mut st = GaussianState::vacuum(1).unwrap();
        for _ in 1..3 {
            st = st.product(&GaussianState::vacuum(1).unwrap());
        }
        for m in 0..3 {
            st = st
                .add_modulation_noise(m, rng.random_range(0.0..3.0))
                .unwrap();
            st = st
                .displace(
                    m,
                    ComplexAmplitude::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)),
                )
                .unwrap();
        }
        let bs = BeamSplitter::from_transmissivity(rng.random_range(0.05..0.95)).unwrap();
        st = st.beam_splitter(0, 2, bs).unwrap();
        st.add_modulation_noise(1, rng.random_range(0.0..1.0))
            .unwrap()
    }

    proptest! {
        #[test]
        fn beam_splitter_preserves_spectrum(seed in 0u64..1000, tau in 0.0f64..1.0) {
            let st = random_physical(seed);
            let bs = BeamSplitter::from_transmissivity(tau).unwrap();
            let out = st.beam_splitter(1, 2, bs).unwrap();
            let d0 = st.cov().determinant();
            let d1 = out.cov().determinant();
            prop_assert!((d0 - d1).abs() <= 1e-10 * d0.abs());
            let a = symplectic_eigenvalues(st.cov()).unwrap();
            let b = symplectic_eigenvalues(out.cov()).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-10 * x.abs());
            }
            let s = beam_splitter_matrix(3, 1, 2, bs);
            let w = symplectic_form(3);
            prop_assert!((&s * &w * s.transpose() - w).amax() < 1e-12);
        }

        #[test]
        fn beam_splitter_is_linear_in_displacement(
            seed in 0u64..1000, tau in 0.0f64..1.0, x in -10.0f64..10.0, p in -10.0f64..10.0,
        ) {
            let st = random_physical(seed);
            let bs = BeamSplitter::from_transmissivity(tau).unwrap();
            let amp = ComplexAmplitude::new(x, p);
            let lhs = st.displace(0, amp).unwrap().beam_splitter(0, 2, bs).unwrap();
            let rhs = st.beam_splitter(0, 2, bs).unwrap();
            let s = beam_splitter_matrix(3, 0, 2, bs);
            let mut shift = DVector::zeros(6);
            shift[0] = x;
            shift[1] = p;
            let mapped = rhs.mean() + s * shift;
            prop_assert!((lhs.mean() - mapped).amax() < 1e-12);
            prop_assert!((lhs.cov() - rhs.cov()).amax() < 1e-12);
        }

        #[test]
        fn trace_commutes_with_noise(seed in 0u64..1000, sigma2 in 0.0f64..5.0) {
            let st = random_physical(seed);
            let a = st.add_modulation_noise(2, sigma2).unwrap().partial_trace(&[2, 0]).unwrap();
            let b = st.partial_trace(&[2, 0]).unwrap().add_modulation_noise(0, sigma2).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
