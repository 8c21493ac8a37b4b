//! Scalar Gaussian densities and draws, the Shannon formula for additive
//! Gaussian channels, and the plug-in estimators used by the Monte Carlo
//! cross-checks.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::phase_space::ComplexAmplitude;

/// Zero-mean real Gaussian with the given variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealGaussian {
    variance: f64,
}

impl RealGaussian {
    pub fn new(variance: f64) -> Result<Self> {
        check_variance(variance, "variance")?;
        Ok(Self { variance })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        gaussian_pdf(x, self.variance)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        draw(self.variance, rng)
    }
}

/// Isotropic complex modulation `Ω_σ²(μ) = exp(-|μ|²/σ²)/(πσ²)`.
///
/// With `μ = (x + ip)/√2` this puts variance `σ²` on each quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexModulation {
    variance: f64,
}

impl ComplexModulation {
    pub fn new(variance: f64) -> Result<Self> {
        check_variance(variance, "modulation variance")?;
        Ok(Self { variance })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Density of the kernel at amplitude `mu`.
    pub fn density(&self, mu: ComplexAmplitude) -> Result<f64> {
        if self.variance <= 0.0 {
            return Err(domain("kernel density needs positive variance"));
        }
        let v = self.variance;
        Ok((-mu.norm_sqr() / v).exp() / (std::f64::consts::PI * v))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexAmplitude {
        ComplexAmplitude::new(draw(self.variance, rng), draw(self.variance, rng))
    }
}

fn check_variance(v: f64, what: &str) -> Result<()> {
    if v.is_nan() || v < 0.0 || v.is_infinite() {
        return Err(domain(format!("{what} must be finite and >= 0, got {v}")));
    }
    Ok(())
}

#[inline]
fn draw<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> f64 {
    if variance == 0.0 {
        return 0.0;
    }
    let z: f64 = rng.sample(StandardNormal);
    z * variance.sqrt()
}

pub fn gaussian_pdf(x: f64, variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(domain(format!("pdf variance must be > 0, got {variance}")));
    }
    let norm = (2.0 * std::f64::consts::PI * variance).sqrt();
    Ok((-x * x / (2.0 * variance)).exp() / norm)
}

/// Zero-mean Gaussian draw. `variance == 0` returns exactly 0.
pub fn sample_real<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> Result<f64> {
    check_variance(variance, "variance")?;
    Ok(draw(variance, rng))
}

/// Independent `x` and `p` draws, each with variance `sigma2`.
pub fn sample_modulation<R: Rng + ?Sized>(sigma2: f64, rng: &mut R) -> Result<ComplexAmplitude> {
    Ok(ComplexModulation::new(sigma2)?.sample(rng))
}

/// `½·log₂(1 + S/N)` bits for one real additive Gaussian channel.
pub fn mi_per_quadrature(signal_var: f64, noise_var: f64) -> Result<f64> {
    if !(noise_var > 0.0) {
        return Err(domain(format!(
            "noise variance must be > 0, got {noise_var}"
        )));
    }
    check_variance(signal_var, "signal variance")?;
    Ok(0.5 * (signal_var / noise_var).ln_1p() / std::f64::consts::LN_2)
}

/// `log₂(1 + S/N)` bits: both quadratures of a symmetric complex channel.
pub fn mi_two_quadratures(signal_var: f64, noise_var: f64) -> Result<f64> {
    Ok(2.0 * mi_per_quadrature(signal_var, noise_var)?)
}

/// Unbiased sample variance of `estimate - true` over the pairs.
pub fn empirical_error_variance(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: pairs.len(),
        });
    }
    let stats: SampleStats = pairs.iter().map(|&(t, e)| e - t).collect();
    Ok(stats.variance().unwrap_or(0.0))
}

/// Gaussian plug-in estimate of the mutual information between the true
/// values and their estimates. Returns `f64::INFINITY` when the empirical
/// error variance is exactly zero.
pub fn empirical_mi(pairs: &[(f64, f64)], signal_var: f64) -> Result<f64> {
    if !(signal_var > 0.0) {
        return Err(domain(format!(
            "signal variance must be > 0, got {signal_var}"
        )));
    }
    let noise = empirical_error_variance(pairs)?;
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    mi_per_quadrature(signal_var, noise)
}

/// Streaming mean/variance accumulator (Welford) with parallel merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SampleStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl SampleStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&self, other: &SampleStats) -> SampleStats {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = self.count + other.count;
        let (na, nb) = (self.count as f64, other.count as f64);
        let delta = other.mean - self.mean;
        SampleStats {
            count: n,
            mean: self.mean + delta * nb / n as f64,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n as f64,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased variance; `None` with fewer than two samples.
    pub fn variance(&self) -> Option<f64> {
        (self.count >= 2).then(|| (self.m2 / (self.count - 1) as f64).max(0.0))
    }

    /// Standard error of the variance estimate under a Gaussian model.
    pub fn variance_std_error(&self) -> Option<f64> {
        self.variance()
            .map(|v| v * (2.0 / (self.count - 1) as f64).sqrt())
    }
}

impl FromIterator<f64> for SampleStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = SampleStats::new();
        iter.into_iter().for_each(|x| s.push(x));
        s
    }
}

impl Extend<f64> for SampleStats {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        iter.into_iter().for_each(|x| self.push(x));
    }
}

/// Pearson correlation of two equal-length samples.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Least-squares slope of `y` on `x` with its standard error.
pub fn regression_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len().min(y.len());
    let nf = n as f64;
    let mx = x.iter().take(n).sum::<f64>() / nf;
    let my = y.iter().take(n).sum::<f64>() / nf;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let se = (rss / (nf - 2.0) / sxx).sqrt();
    (slope, se)
}
