//! The Gaussian Bayes model for noisy linear systems.
//!
//! A consistent system `A x = b` (A is N×n) is observed through `R = A + δA`
//! and `y = b + δb`, with independent entries
//!
//! ```text
//! A_ij ~ N(0, a/n)    x_j ~ N(0, 1/n)    δA_ij ~ N(0, p/n)    δb_i ~ N(0, q/n)
//! ```
//!
//! The quadratic risk of every spectral estimator depends on `(a, p, q)` only
//! through `θ = a/(a+p)` and `s = ap/(a+p) + q`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::rng::RngSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NoiseModelData")]
pub struct NoiseModel {
    a: f64,
    p: f64,
    q: f64,
    n: usize,
    #[serde(rename = "N")]
    big_n: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseModelData {
    a: f64,
    p: f64,
    q: f64,
    n: usize,
    #[serde(rename = "N")]
    big_n: usize,
}

impl TryFrom<NoiseModelData> for NoiseModel {
    type Error = Error;

    fn try_from(m: NoiseModelData) -> Result<Self> {
        NoiseModel::new(m.a, m.p, m.q, m.n, m.big_n)
    }
}

impl NoiseModel {
    /// `n` unknowns, `big_n` equations. `big_n < n` is accepted (see [`NoiseModel::tall`]).
    pub fn new(a: f64, p: f64, q: f64, n: usize, big_n: usize) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidModel(format!(
                "a must be finite and > 0, got {a}"
            )));
        }
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "p must be finite and >= 0, got {p}"
            )));
        }
        if !(q.is_finite() && q >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "q must be finite and >= 0, got {q}"
            )));
        }
        if n == 0 || big_n == 0 {
            return Err(Error::InvalidModel(format!(
                "dimensions must be positive, got n = {n}, N = {big_n}"
            )));
        }
        Ok(Self { a, p, q, n, big_n })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Number of unknowns.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of equations.
    pub fn big_n(&self) -> usize {
        self.big_n
    }

    /// At least as many equations as unknowns.
    pub fn tall(&self) -> bool {
        self.big_n >= self.n
    }

    /// Variance of each entry of the observed matrix R.
    pub fn entry_variance(&self) -> f64 {
        (self.a + self.p) / self.n as f64
    }

    pub fn derived(&self) -> DerivedParams {
        derive_params(self)
    }

    pub fn sample(&self, rng: RngSpec) -> ProblemSample {
        sample_instance(self, rng)
    }
}

/// `θ`, `s` of the risk decomposition plus the ridge form `α = 1/θ`, `t = s/θ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub theta: f64,
    pub s: f64,
    pub alpha: f64,
    pub t: f64,
}

impl DerivedParams {
    /// From `(θ, s)` directly; `θ ∈ (0, 1]`, `s ≥ 0`.
    pub fn from_theta_s(theta: f64, s: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) || !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < theta <= 1 and s >= 0, got theta = {theta}, s = {s}"
            )));
        }
        Ok(Self {
            theta,
            s,
            alpha: 1.0 / theta,
            t: s / (theta * theta),
        })
    }

    /// Optimal gain `γ(u) = θ/(θ²u + s)`.
    pub fn gamma_opt(&self, u: f64) -> f64 {
        self.theta / (self.theta * self.theta * u + self.s)
    }
}

pub fn derive_params(m: &NoiseModel) -> DerivedParams {
    let theta = m.a / (m.a + m.p);
    let s = m.a * m.p / (m.a + m.p) + m.q;
    DerivedParams {
        theta,
        s,
        alpha: 1.0 / theta,
        t: s / (theta * theta),
    }
}

/// One draw from the model, with the hidden truth alongside the observations.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSample {
    pub a: Matrix,
    pub x: Vector,
    pub b: Vector,
    pub r: Matrix,
    pub y: Vector,
}

/// Draws a problem instance. Normals are consumed in a fixed order: A row-major,
/// then x, then δA row-major, then δb. Zero-variance components still consume
/// their draws, so `(seed, stream)` pins the same A and x for any p and q.
pub fn sample_instance(m: &NoiseModel, rng: RngSpec) -> ProblemSample {
    let (n, big_n) = (m.n, m.big_n);
    let nf = n as f64;
    let mut g = rng.normals();

    let mut a_data = vec![0.0; big_n * n];
    g.fill_normal(&mut a_data, m.a / nf);
    let mut x_data = vec![0.0; n];
    g.fill_normal(&mut x_data, 1.0 / nf);
    let mut da = vec![0.0; big_n * n];
    g.fill_normal(&mut da, m.p / nf);
    let mut db = vec![0.0; big_n];
    g.fill_normal(&mut db, m.q / nf);

    let a = Matrix::new(big_n, n, a_data).expect("finite normal draws");
    let x = Vector::new(x_data).expect("finite normal draws");
    let b = a.matvec(&x).expect("conforming shapes");
    let r_data: Vec<f64> = a.as_slice().iter().zip(&da).map(|(u, v)| u + v).collect();
    let r = Matrix::new(big_n, n, r_data).expect("finite sum");
    let y_data: Vec<f64> = b.as_slice().iter().zip(&db).map(|(u, v)| u + v).collect();
    let y = Vector::new(y_data).expect("finite sum");
    ProblemSample { a, x, b, r, y }
}

/// Monte Carlo estimates of both sides of `E[r f(r)] = σ² E[f'(r)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteinReport {
    pub lhs: f64,
    pub rhs: f64,
    /// Standard error of `lhs - rhs` (paired draws).
    pub stderr: f64,
    pub trials: usize,
}

impl SteinReport {
    pub fn agrees_within(&self, k: f64) -> bool {
        (self.lhs - self.rhs).abs() <= k * self.stderr
    }
}

/// Checks the Gaussian integration-by-parts identity with `f(r) = r/(1+r²)`.
pub fn stein_check(sigma2: f64, trials: usize, rng: RngSpec) -> Result<SteinReport> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sigma2 must be finite and > 0, got {sigma2}"
        )));
    }
    if trials < 1000 {
        return Err(Error::InvalidArgument(format!(
            "stein_check needs at least 1000 trials, got {trials}"
        )));
    }
    let mut g = rng.normals();
    let mut lhs = Vec::with_capacity(trials);
    let mut rhs = Vec::with_capacity(trials);
    for _ in 0..trials {
        let r = g.normal(sigma2);
        let d = 1.0 + r * r;
        lhs.push(r * r / d);
        rhs.push(sigma2 * (1.0 - r * r) / (d * d));
    }
    let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, r)| l - r).collect();
    let lhs_mean = crate::stats::MeanEstimate::from_slice(&lhs).mean;
    let rhs_mean = crate::stats::MeanEstimate::from_slice(&rhs).mean;
    Ok(SteinReport {
        lhs: lhs_mean,
        rhs: rhs_mean,
        stderr: crate::stats::MeanEstimate::from_slice(&diff).stderr,
        trials,
    })
}
