//! Theoretical quadratic risk of spectral estimators.
//!
//! For a filter `γ`, the Bayes risk `E‖x − x̂‖²` equals the average over the
//! eigenvalue distribution `F` of `RᵀR` of
//!
//! ```text
//! 1 − 2θuγ(u) + θ²u²γ²(u) + s·u·γ²(u)
//! ```
//!
//! `F` is realized as a pool of eigenvalues from independently sampled
//! matrices, and every integral is the pooled average. Per-sample averages
//! give standard errors.
//!
//! Zero eigenvalues are dead directions. A filter with a pole there has
//! infinite risk when `s > 0`; when `s = 0` the direction contributes its
//! prior variance (1 per eigenvalue), which is what the truncated estimator
//! attains.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::SpectralFilter;
use crate::linalg::{eigvalsh, gram};
use crate::model::{DerivedParams, NoiseModel};
use crate::rng::RngSpec;
use crate::stats::{compensated_sum, MeanEstimate};

/// Eigenvalues at or below this are flushed to zero.
pub const ZERO_EIGENVALUE: f64 = 1e-300;
/// Negative eigenvalues down to this fraction of the largest are clamped to zero.
pub const NEGATIVE_CLAMP: f64 = 1e-10;

/// Pooled eigenvalues of `RᵀR`, stored as `samples` blocks of `n` values, each
/// block ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    n: usize,
    samples: usize,
}

impl Spectrum {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, n: usize) -> Result<Self> {
        if n == 0 || eigenvalues.is_empty() || !eigenvalues.len().is_multiple_of(n) {
            return Err(Error::InvalidArgument(format!(
                "spectrum of {} values does not split into blocks of n = {n}",
                eigenvalues.len()
            )));
        }
        if let Some(v) = eigenvalues.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite eigenvalue {v}")));
        }
        let max = eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
        let floor = -NEGATIVE_CLAMP * max;
        for v in eigenvalues.iter_mut() {
            if *v < floor {
                return Err(Error::InvalidArgument(format!(
                    "negative eigenvalue {v} in a Gram spectrum"
                )));
            }
            if *v <= ZERO_EIGENVALUE {
                *v = 0.0;
            }
        }
        for block in eigenvalues.chunks_mut(n) {
            block.sort_by(f64::total_cmp);
        }
        let samples = eigenvalues.len() / n;
        Ok(Self {
            eigenvalues,
            n,
            samples,
        })
    }

    /// Joins spectra with the same `n`.
    pub fn concat(parts: &[Spectrum]) -> Result<Self> {
        let n = parts.first().map(|s| s.n).unwrap_or(0);
        if parts.iter().any(|s| s.n != n) {
            return Err(Error::InvalidArgument("spectra have different n".into()));
        }
        let values = parts
            .iter()
            .flat_map(|s| s.eigenvalues.iter().copied())
            .collect();
        Self::from_eigenvalues(values, n)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.eigenvalues.chunks(self.n)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> MeanEstimate {
        self.per_sample(|u| u)
    }

    /// Pooled `∫ u⁻¹ dF`, i.e. the mean of `n⁻¹ tr W⁻¹`.
    pub fn inverse_trace(&self) -> MeanEstimate {
        self.per_sample(|u| if u == 0.0 { f64::INFINITY } else { 1.0 / u })
    }

    /// Per-sample averages of `phi`, summarized as mean and standard error.
    pub fn per_sample(&self, phi: impl Fn(f64) -> f64) -> MeanEstimate {
        let values: Vec<f64> = self
            .blocks()
            .map(|b| block_mean(b.iter().map(|&u| phi(u))))
            .collect();
        MeanEstimate::from_slice(&values)
    }

    fn per_sample_with_gains(&self, gains: &[f64], phi: impl Fn(f64, f64) -> f64) -> MeanEstimate {
        let values: Vec<f64> = self
            .eigenvalues
            .chunks(self.n)
            .zip(gains.chunks(self.n))
            .map(|(b, g)| block_mean(b.iter().zip(g).map(|(&u, &gi)| phi(u, gi))))
            .collect();
        MeanEstimate::from_slice(&values)
    }
}

fn block_mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.iter().any(|x| x.is_infinite()) {
        return f64::INFINITY;
    }
    compensated_sum(v.iter().copied()) / v.len() as f64
}

/// Theoretical risk figures for one filter on one pooled spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub d_filter: f64,
    pub d_filter_stderr: f64,
    pub d_opt: f64,
    pub d_opt_stderr: f64,
    /// May be `f64::INFINITY`.
    pub d_std: f64,
    pub spectrum_samples: usize,
    pub model: NoiseModel,
}

impl RiskReport {
    pub fn evaluate(f: &SpectralFilter, spec: &Spectrum, model: &NoiseModel) -> Result<Self> {
        let d = model.derived();
        let filter = risk_functional_estimate(f, spec, &d)?;
        let opt = risk_opt_estimate(spec, &d);
        Ok(Self {
            d_filter: filter.mean,
            d_filter_stderr: filter.stderr,
            d_opt: opt.mean,
            d_opt_stderr: opt.stderr,
            d_std: risk_std(spec, &d),
            spectrum_samples: spec.samples(),
            model: *model,
        })
    }
}

/// Pools the eigenvalues of `RᵀR` from `samples` independent draws. Draw `k`
/// uses stream `rng.stream + k`.
pub fn pool_spectrum(m: &NoiseModel, samples: usize, rng: RngSpec) -> Result<Spectrum> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let blocks: Vec<Vec<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|k| eigvalsh(&gram(&m.sample(rng.offset(k)).r)))
        .collect::<Result<_>>()?;
    Spectrum::from_eigenvalues(blocks.concat(), m.n())
}

/// The risk integrand at eigenvalue `u` and gain `g`.
pub fn risk_integrand(u: f64, g: f64, d: &DerivedParams) -> f64 {
    if !g.is_finite() {
        return if u == 0.0 && d.s == 0.0 {
            1.0
        } else {
            f64::INFINITY
        };
    }
    let ug = u * g;
    1.0 - 2.0 * d.theta * ug + d.theta * d.theta * ug * ug + d.s * ug * g
}

pub fn risk_functional(f: &SpectralFilter, spec: &Spectrum, d: &DerivedParams) -> Result<f64> {
    Ok(risk_functional_estimate(f, spec, d)?.mean)
}

/// Risk of filter `f` with the standard error across pooled samples.
pub fn risk_functional_estimate(
    f: &SpectralFilter,
    spec: &Spectrum,
    d: &DerivedParams,
) -> Result<MeanEstimate> {
    let gains = f.formal_gains(spec.eigenvalues(), spec.n())?;
    Ok(spec.per_sample_with_gains(&gains, |u, g| risk_integrand(u, g, d)))
}

/// Minimal risk, the average of `s/(s + θ²u)`; a zero eigenvalue with `s = 0` counts as 1.
pub fn risk_opt(spec: &Spectrum, d: &DerivedParams) -> f64 {
    risk_opt_estimate(spec, d).mean
}

pub fn risk_opt_estimate(spec: &Spectrum, d: &DerivedParams) -> MeanEstimate {
    spec.per_sample(|u| {
        let den = d.s + d.theta * d.theta * u;
        if den == 0.0 {
            1.0
        } else {
            d.s / den
        }
    })
}

/// Risk of least squares, the average of `(1−θ)² + s/u`. Infinite when a zero
/// eigenvalue meets `s > 0`.
pub fn risk_std(spec: &Spectrum, d: &DerivedParams) -> f64 {
    risk_std_estimate(spec, d).mean
}

pub fn risk_std_estimate(spec: &Spectrum, d: &DerivedParams) -> MeanEstimate {
    let bias = (1.0 - d.theta) * (1.0 - d.theta);
    spec.per_sample(|u| {
        if u == 0.0 {
            if d.s > 0.0 {
                f64::INFINITY
            } else {
                1.0
            }
        } else {
            bias + d.s / u
        }
    })
}

/// `risk_std − risk_opt`, evaluated eigenvalue by eigenvalue.
pub fn risk_gap(spec: &Spectrum, d: &DerivedParams) -> f64 {
    let std = risk_std(spec, d);
    if std.is_infinite() {
        return f64::INFINITY;
    }
    std - risk_opt(spec, d)
}

/// Exact mean of `n⁻¹ tr (RᵀR)⁻¹` for Gaussian R, `n / ((a+p)(N−n−1))`.
pub fn inverse_trace_oracle(m: &NoiseModel) -> Result<f64> {
    let gap = m.big_n() as i64 - m.n() as i64 - 1;
    if gap < 1 {
        return Err(Error::DivergentRegime {
            n: m.n(),
            big_n: m.big_n(),
            gap,
        });
    }
    Ok(m.n() as f64 / ((m.a() + m.p()) * gap as f64))
}
