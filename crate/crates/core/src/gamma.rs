//! Gamma speckle model: intensity Z ~ Γ(L, L/λ) with mean λ and variance λ²/L.

use crate::error::{invalid, Error, Result};
use crate::raster::PixelSample;
use crate::rng::SpeckleStream;
use crate::special::{ln_gamma, log_minus_digamma};
use crate::sum;

/// Upper bound on the estimated number of looks. Samples with (almost) no
/// log-dispersion saturate here instead of diverging.
pub const L_MAX: f64 = 1e4;

const ROOT_REL_TOL: f64 = 1e-10;
const ROOT_MAX_ITER: usize = 200;
const ZERO_SHIFT: f64 = 1e-6;

/// Number of looks `L` and mean backscatter `λ` of a Gamma intensity law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    looks: f64,
    mean: f64,
}

impl GammaParams {
    pub fn new(looks: f64, mean: f64) -> Result<Self> {
        if !(looks.is_finite() && (1.0..=L_MAX).contains(&looks)) {
            return invalid(format!("looks must lie in [1, {L_MAX}], got {looks}"));
        }
        if !(mean.is_finite() && mean > 0.0) {
            return invalid(format!("mean must be finite and positive, got {mean}"));
        }
        Ok(Self { looks, mean })
    }

    pub fn looks(&self) -> f64 {
        self.looks
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.mean * self.mean / self.looks
    }

    /// Most probable intensity, `λ(L − 1)/L`.
    pub fn mode(&self) -> f64 {
        self.mean * (self.looks - 1.0) / self.looks
    }
}

pub fn log_density(p: &GammaParams, z: f64) -> Result<f64> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Domain(format!("density needs z > 0, got {z}")));
    }
    let l = p.looks;
    Ok(l * (l / p.mean).ln() - ln_gamma(l) + (l - 1.0) * z.ln() - l * z / p.mean)
}

/// `L^L / (λ^L Γ(L)) z^(L-1) exp(-L z / λ)`, evaluated in the log domain.
pub fn density(p: &GammaParams, z: f64) -> Result<f64> {
    log_density(p, z).map(f64::exp)
}

/// `n` independent draws from `p` using `stream`.
pub fn sample(p: &GammaParams, n: usize, stream: &mut SpeckleStream) -> Result<PixelSample> {
    if n == 0 {
        return invalid("sample size must be at least 1");
    }
    let values = (0..n).map(|_| p.mean * stream.speckle(p.looks)).collect();
    PixelSample::new(values)
}

/// Result of a maximum-likelihood fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleFit {
    pub params: GammaParams,
    /// The looks estimate hit `L_MAX` because the sample shows no measurable
    /// log-dispersion.
    pub degenerate: bool,
    /// Exact zeros were replaced by a small positive value before fitting.
    pub zeros_shifted: bool,
}

/// Maximum-likelihood estimate of `(L, λ)`.
///
/// `λ̂` is the sample mean. `L̂` solves `ln L − ψ(L) = ln z̄ − mean(ln z)` by
/// bisection on `[1, L_MAX]`; the left side is strictly decreasing so the
/// bracket always holds. Right-hand sides outside the reachable range clamp
/// to the bracket ends.
pub fn mle(s: &PixelSample) -> Result<MleFit> {
    if s.count() < 2 {
        return invalid(format!(
            "maximum likelihood needs at least 2 values, got {}",
            s.count()
        ));
    }
    let values = s.values();
    let floor = zero_floor(values)?;
    let zeros_shifted = values.contains(&0.0);
    let shifted = |v: f64| if v == 0.0 { floor } else { v };

    let mean = sum::sum(values.iter().map(|&v| shifted(v))) / s.count() as f64;
    let mean_log = sum::sum(values.iter().map(|&v| shifted(v).ln())) / s.count() as f64;
    let rhs = mean.ln() - mean_log;

    let (looks, degenerate) = solve_looks(rhs);
    Ok(MleFit {
        params: GammaParams::new(looks, mean)?,
        degenerate,
        zeros_shifted,
    })
}

/// Value that stands in for exact zeros: the smallest positive sample value
/// scaled by `ZERO_SHIFT`.
fn zero_floor(values: &[f64]) -> Result<f64> {
    let min_positive = values
        .iter()
        .copied()
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !min_positive.is_finite() {
        return Err(Error::Domain("sample has no positive values".into()));
    }
    Ok(min_positive * ZERO_SHIFT)
}

/// The mean estimate `mle` would return, without solving for the looks.
pub(crate) fn mle_mean(s: &PixelSample) -> Result<f64> {
    let values = s.values();
    let floor = zero_floor(values)?;
    Ok(sum::sum(values.iter().map(|&v| if v == 0.0 { floor } else { v })) / s.count() as f64)
}

/// Solves `ln L − ψ(L) = rhs` on `[1, L_MAX]`; the flag reports saturation
/// at `L_MAX`.
pub(crate) fn solve_looks(rhs: f64) -> (f64, bool) {
    if rhs >= log_minus_digamma(1.0) {
        return (1.0, false);
    }
    if rhs <= log_minus_digamma(L_MAX) {
        return (L_MAX, true);
    }
    let (mut lo, mut hi) = (1.0, L_MAX);
    for _ in 0..ROOT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if log_minus_digamma(mid) > rhs {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= ROOT_REL_TOL * lo {
            break;
        }
    }
    (0.5 * (lo + hi), false)
}
