//! Monte Carlo harness: simulate the Bayes model, measure `‖x − x̂‖²`, and set
//! it against the theoretical risk on an independently pooled spectrum.
//!
//! Trial `k` draws from stream `(seed, k)` and feeds the same `R, y` to every
//! filter. The theoretical spectrum uses streams starting at
//! [`SPECTRUM_STREAM_BASE`], disjoint from any trial. Per-trial results are
//! collected in trial order before any reduction, so output is independent of
//! the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{FilterKind, SpectralFilter, SpectralSystem};
use crate::linalg::{Matrix, Vector};
use crate::model::NoiseModel;
use crate::risk::{pool_spectrum, risk_functional_estimate, RiskReport};
use crate::rng::RngSpec;
use crate::stats::{combined_stderr, median, z_score, MeanEstimate};

/// First stream used for the theoretical spectrum pool.
pub const SPECTRUM_STREAM_BASE: u64 = 1 << 62;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: NoiseModel,
    pub filters: Vec<SpectralFilter>,
    pub trials: usize,
    pub seed: u64,
    pub spectrum_samples: usize,
}

/// Measured risk of one filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRisk {
    pub filter: String,
    pub mean: f64,
    pub stderr: f64,
    /// Robustness diagnostic; squared errors are heavy-tailed near n = N.
    pub median: f64,
    /// Trials that produced an estimate.
    pub trials: usize,
    /// Trials where the filter could not be applied.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub empirical: EmpiricalRisk,
    pub theory: RiskReport,
}

impl FilterOutcome {
    pub fn combined_stderr(&self) -> f64 {
        combined_stderr(self.empirical.stderr, self.theory.d_filter_stderr)
    }

    /// `(empirical − theory) / combined stderr`.
    pub fn z_score(&self) -> f64 {
        z_score(
            self.empirical.mean - self.theory.d_filter,
            self.combined_stderr(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub outcomes: Vec<FilterOutcome>,
}

impl ExperimentResult {
    pub fn outcome(&self, label: &str) -> Option<&FilterOutcome> {
        self.outcomes.iter().find(|o| o.empirical.filter == label)
    }
}

/// Squared errors per trial and filter; `None` where the filter failed.
pub fn trial_errors(cfg: &ExperimentConfig) -> Result<Vec<Vec<Option<f64>>>> {
    validate(cfg)?;
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|k| {
            let sample = cfg.model.sample(RngSpec::new(cfg.seed, k));
            let system = SpectralSystem::new(&sample.r, &sample.y)?;
            Ok(cfg
                .filters
                .iter()
                .map(|f| system.estimate(f).ok().map(|xh| xh.dist_sq(&sample.x)))
                .collect())
        })
        .collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let errors = trial_errors(cfg)?;
    let spectrum = pool_spectrum(
        &cfg.model,
        cfg.spectrum_samples,
        RngSpec::new(cfg.seed, SPECTRUM_STREAM_BASE),
    )?;
    let outcomes = cfg
        .filters
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let ok: Vec<f64> = errors.iter().filter_map(|row| row[j]).collect();
            let est = MeanEstimate::from_slice(&ok);
            let empirical = EmpiricalRisk {
                filter: f.label(),
                mean: est.mean,
                stderr: est.stderr,
                median: median(&ok),
                trials: ok.len(),
                failures: cfg.trials - ok.len(),
            };
            let theory = RiskReport::evaluate(f, &spectrum, &cfg.model)?;
            Ok(FilterOutcome { empirical, theory })
        })
        .collect::<Result<_>>()?;
    Ok(ExperimentResult { outcomes })
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.trials == 0 || cfg.spectrum_samples == 0 {
        return Err(Error::InvalidArgument(
            "trials and spectrum_samples must be >= 1".into(),
        ));
    }
    if cfg.filters.is_empty() {
        return Err(Error::InvalidArgument("no filters given".into()));
    }
    let n = cfg.model.n();
    for f in &cfg.filters {
        if let SpectralFilter::Custom { gains } = f {
            if gains.len() != n {
                return Err(Error::TableLength {
                    expected: n,
                    got: gains.len(),
                });
            }
        }
    }
    Ok(())
}

/// One (model, filter) cell of a risk sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub model: NoiseModel,
    pub filter: String,
    pub theory: f64,
    pub theory_stderr: f64,
    pub empirical: f64,
    pub stderr: f64,
    /// Theoretical risk minus the optimal filter's on the same spectrum.
    pub gap_vs_opt: f64,
}

/// Runs an experiment per model with the same seed, so cells share their random draws.
pub fn risk_curve(
    model_grid: &[NoiseModel],
    filter_kinds: &[FilterKind],
    trials: usize,
    spectrum_samples: usize,
    seed: u64,
) -> Result<Vec<CurveRow>> {
    if model_grid.is_empty() {
        return Err(Error::InvalidArgument("empty model grid".into()));
    }
    let mut rows = Vec::new();
    for model in model_grid {
        let d = model.derived();
        let filters = filter_kinds
            .iter()
            .map(|k| k.resolve(&d))
            .collect::<Result<Vec<_>>>()?;
        let cfg = ExperimentConfig {
            model: *model,
            filters,
            trials,
            seed,
            spectrum_samples,
        };
        let result = run_experiment(&cfg)?;
        let spectrum = pool_spectrum(
            model,
            spectrum_samples,
            RngSpec::new(seed, SPECTRUM_STREAM_BASE),
        )?;
        let opt = risk_functional_estimate(&SpectralFilter::optimal(&d), &spectrum, &d)?.mean;
        for (kind, outcome) in filter_kinds.iter().zip(&result.outcomes) {
            let theory = outcome.theory.d_filter;
            rows.push(CurveRow {
                model: *model,
                filter: kind.to_string(),
                theory,
                theory_stderr: outcome.theory.d_filter_stderr,
                empirical: outcome.empirical.mean,
                stderr: outcome.empirical.stderr,
                gap_vs_opt: if theory.is_infinite() {
                    f64::INFINITY
                } else {
                    theory - opt
                },
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFormReport {
    pub empirical: f64,
    pub expected: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl QuadraticFormReport {
    pub fn agrees_within(&self, k: f64) -> bool {
        (self.empirical - self.expected).abs() <= k * self.stderr
    }
}

/// A symmetric N×N test matrix with standard normal entries, fixed by `rng`.
pub fn random_symmetric(size: usize, rng: RngSpec) -> Matrix {
    let mut g = rng.normals();
    let raw = Matrix::from_fn(size, size, |_, _| g.standard());
    Matrix::from_fn(size, size, |i, j| 0.5 * (raw[(i, j)] + raw[(j, i)]))
}

/// Checks `E δbᵀ M δb = q n⁻¹ tr M` for a seeded random symmetric `M`.
pub fn rhs_quadratic_form_check(
    m: &NoiseModel,
    trials: usize,
    rng: RngSpec,
) -> Result<QuadraticFormReport> {
    let mat = random_symmetric(m.big_n(), rng);
    rhs_quadratic_form_check_with(m, &mat, trials, rng.offset(1))
}

pub fn rhs_quadratic_form_check_with(
    m: &NoiseModel,
    mat: &Matrix,
    trials: usize,
    rng: RngSpec,
) -> Result<QuadraticFormReport> {
    if trials < 1000 {
        return Err(Error::InvalidArgument(format!(
            "quadratic form check needs at least 1000 trials, got {trials}"
        )));
    }
    let big_n = m.big_n();
    if mat.shape() != (big_n, big_n) {
        return Err(Error::DimensionMismatch {
            op: "rhs_quadratic_form_check",
            left_rows: mat.rows(),
            left_cols: mat.cols(),
            right_rows: big_n,
            right_cols: big_n,
        });
    }
    let variance = m.q() / m.n() as f64;
    let mut g = rng.normals();
    let mut buf = vec![0.0; big_n];
    let values: Vec<f64> = (0..trials)
        .map(|_| {
            g.fill_normal(&mut buf, variance);
            let db = Vector::new(buf.clone()).expect("finite draws");
            db.dot(&mat.matvec(&db).expect("square"))
        })
        .collect();
    let est = MeanEstimate::from_slice(&values);
    let trace: f64 = (0..big_n).map(|i| mat[(i, i)]).sum();
    Ok(QuadraticFormReport {
        empirical: est.mean,
        expected: m.q() * trace / m.n() as f64,
        stderr: est.stderr,
        trials,
    })
}
