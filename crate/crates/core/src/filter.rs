//! Spectral estimators `x̂ = Γ Rᵀ y`, where Γ shares eigenvectors with `RᵀR`
//! and scales eigendirection `i` by a gain `γ(λ_i)`.
//!
//! The risk-optimal member uses `γ(u) = θ/(θ²u + s)`, which is the same as the
//! ridge solution `α (RᵀR + tI)⁻¹ Rᵀy` with `α = 1/θ ≥ 1` and `t = s/θ²`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, gram, solve_spd, EigenDecomposition, Matrix, Vector};
use crate::model::DerivedParams;
use crate::risk::Spectrum;

/// Eigenvalues at or below this fraction of `max(λ_max, 1)` get zero gain
/// under the standard (pseudoinverse) filter.
pub const TRUNCATION_TOL: f64 = 1e-10;
/// Relative distance to the confluent pole that is reported as singular.
pub const DEFLATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpectralFilter {
    /// `γ(u) = 1/u`, least squares.
    Standard,
    /// `γ(u) = 1/(u + t)`.
    Tikhonov { t: f64 },
    /// `γ(u) = θ/(θ²u + s)`.
    Optimal { theta: f64, s: f64 },
    /// `γ(u) = 1/(u − λ)`. Not a member of the admissible class; gains may be negative.
    Confluent { lambda: f64 },
    /// Gains tabulated by eigenvalue rank. A table of length n is applied to each
    /// n-block of a spectrum; a table matching the full spectrum is applied entrywise.
    Custom { gains: Vec<f64> },
}

impl SpectralFilter {
    pub fn tikhonov(t: f64) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tikhonov t must be >= 0, got {t}"
            )));
        }
        Ok(Self::Tikhonov { t })
    }

    pub fn optimal(d: &DerivedParams) -> Self {
        Self::Optimal {
            theta: d.theta,
            s: d.s,
        }
    }

    pub fn confluent(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "confluent lambda must be >= 0, got {lambda}"
            )));
        }
        Ok(Self::Confluent { lambda })
    }

    pub fn custom(gains: Vec<f64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::InvalidArgument("custom filter needs gains".into()));
        }
        if let Some(g) = gains.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "custom gains must be finite and >= 0, got {g}"
            )));
        }
        Ok(Self::Custom { gains })
    }

    pub fn label(&self) -> String {
        match self {
            Self::Standard => "standard".into(),
            Self::Tikhonov { t } => format!("tikhonov:{t}"),
            Self::Optimal { .. } => "optimal".into(),
            Self::Confluent { lambda } => format!("confluent:{lambda}"),
            Self::Custom { .. } => "custom".into(),
        }
    }

    /// Whether the filter belongs to the admissible class (non-negative gains).
    pub fn in_class_k(&self) -> bool {
        !matches!(self, Self::Confluent { .. })
    }

    /// Supremum over `u ≥ 0` of `u(1+u)γ²(u)`, where it has a closed form.
    /// Infinite for the standard filter; `None` for confluent and custom filters.
    pub fn class_k_bound(&self) -> Option<f64> {
        match *self {
            Self::Standard => Some(f64::INFINITY),
            Self::Tikhonov { t } => Some(ridge_sup(t)),
            Self::Optimal { theta, s } => Some(ridge_sup(s / (theta * theta)) / (theta * theta)),
            Self::Confluent { .. } | Self::Custom { .. } => None,
        }
    }

    /// The formal gain `γ(u)` (no truncation). `None` for tabulated filters.
    pub fn gain(&self, u: f64) -> Option<f64> {
        match *self {
            Self::Standard => Some(1.0 / u),
            Self::Tikhonov { t } => Some(1.0 / (u + t)),
            Self::Optimal { theta, s } => Some(theta / (theta * theta * u + s)),
            Self::Confluent { lambda } => Some(1.0 / (u - lambda)),
            Self::Custom { .. } => None,
        }
    }

    /// Formal gains on a list of eigenvalues made of blocks of size `block`.
    pub fn formal_gains(&self, eigenvalues: &[f64], block: usize) -> Result<Vec<f64>> {
        match self {
            Self::Custom { gains } => tabulated(gains, eigenvalues.len(), block),
            _ => Ok(eigenvalues
                .iter()
                .map(|&u| self.gain(u).expect("analytic filter"))
                .collect()),
        }
    }

    /// Gains used to build an estimate from one decomposition (ascending eigenvalues).
    ///
    /// Singular gains are completed by the minimum-norm convention: eigenvalues
    /// at or below the truncation threshold get zero gain under the standard
    /// filter, and likewise under the ridge filters when their shift is zero.
    pub fn estimation_gains(&self, eigenvalues: &[f64]) -> Result<Vec<f64>> {
        let lmax = eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
        let cutoff = TRUNCATION_TOL * lmax.max(1.0);
        let truncated = |u: f64, g: f64| if u <= cutoff { 0.0 } else { g };
        match *self {
            Self::Standard | Self::Tikhonov { t: 0.0 } => {
                Ok(eigenvalues.iter().map(|&u| truncated(u, 1.0 / u)).collect())
            }
            Self::Optimal { theta, s: 0.0 } => Ok(eigenvalues
                .iter()
                .map(|&u| truncated(u, 1.0 / (theta * u)))
                .collect()),
            Self::Confluent { lambda } => {
                let tol = DEFLATION_TOL * lmax;
                if let Some((index, &eigenvalue)) = eigenvalues
                    .iter()
                    .enumerate()
                    .find(|(_, &u)| (u - lambda).abs() <= tol)
                {
                    return Err(Error::DeflationSingularity {
                        index,
                        eigenvalue,
                        lambda,
                    });
                }
                Ok(eigenvalues.iter().map(|&u| 1.0 / (u - lambda)).collect())
            }
            _ => self.formal_gains(eigenvalues, eigenvalues.len()),
        }
    }
}

impl fmt::Display for SpectralFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn tabulated(gains: &[f64], len: usize, block: usize) -> Result<Vec<f64>> {
    if gains.len() == len {
        Ok(gains.to_vec())
    } else if gains.len() == block && block > 0 && len.is_multiple_of(block) {
        Ok((0..len).map(|i| gains[i % block]).collect())
    } else {
        Err(Error::TableLength {
            expected: len,
            got: gains.len(),
        })
    }
}

/// `sup_{u ≥ 0} u(1+u)/(u+c)²`.
fn ridge_sup(c: f64) -> f64 {
    if c <= 0.0 {
        f64::INFINITY
    } else if c < 0.5 {
        1.0 / (4.0 * c * (1.0 - c))
    } else {
        1.0
    }
}

/// A filter choice that may depend on the noise model, as named on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FilterKind {
    Standard,
    Optimal,
    /// Ridge with explicit `t`, or the model's `t = s/θ²` when `None`.
    Tikhonov(Option<f64>),
    Confluent(f64),
}

impl FilterKind {
    pub fn resolve(&self, d: &DerivedParams) -> Result<SpectralFilter> {
        match *self {
            Self::Standard => Ok(SpectralFilter::Standard),
            Self::Optimal => Ok(SpectralFilter::optimal(d)),
            Self::Tikhonov(t) => SpectralFilter::tikhonov(t.unwrap_or(d.t)),
            Self::Confluent(lambda) => SpectralFilter::confluent(lambda),
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Standard => f.write_str("standard"),
            Self::Optimal => f.write_str("optimal"),
            Self::Tikhonov(None) => f.write_str("tikhonov"),
            Self::Tikhonov(Some(t)) => write!(f, "tikhonov:{t}"),
            Self::Confluent(l) => write!(f, "confluent:{l}"),
        }
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.trim().split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s.trim(), None),
        };
        let number = |a: &str| -> Result<f64> {
            let v: f64 = a.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!("bad filter parameter '{a}' in '{s}'"))
            })?;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "filter parameter must be finite and >= 0 in '{s}'"
                )));
            }
            Ok(v)
        };
        match (name.to_ascii_lowercase().as_str(), arg) {
            ("standard", None) => Ok(Self::Standard),
            ("optimal", None) => Ok(Self::Optimal),
            ("tikhonov", None) => Ok(Self::Tikhonov(None)),
            ("tikhonov", Some(a)) => Ok(Self::Tikhonov(Some(number(a)?))),
            ("confluent", Some(a)) => Ok(Self::Confluent(number(a)?)),
            _ => Err(Error::InvalidArgument(format!(
                "unknown filter '{s}' (expected standard, optimal, tikhonov[:t], confluent:lambda)"
            ))),
        }
    }
}

/// A decomposed system ready to apply any number of filters.
#[derive(Debug, Clone)]
pub struct SpectralSystem {
    eig: EigenDecomposition,
    rty: Vector,
}

impl SpectralSystem {
    pub fn new(r: &Matrix, y: &Vector) -> Result<Self> {
        let rty = r.tr_matvec(y)?;
        let eig = eigh(&gram(r))?;
        Ok(Self { eig, rty })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.eigenvalues
    }

    pub fn decomposition(&self) -> &EigenDecomposition {
        &self.eig
    }

    pub fn estimate(&self, f: &SpectralFilter) -> Result<Vector> {
        let gains = f.estimation_gains(&self.eig.eigenvalues)?;
        Ok(self.eig.apply_spectral(&gains, &self.rty))
    }
}

/// `Q diag(γ(λ)) Qᵀ Rᵀ y` with `(λ, Q)` the eigendecomposition of `RᵀR`.
pub fn apply_filter(r: &Matrix, y: &Vector, f: &SpectralFilter) -> Result<Vector> {
    check_system(r, y)?;
    SpectralSystem::new(r, y)?.estimate(f)
}

/// `α (RᵀR + tI)⁻¹ Rᵀ y` by Cholesky.
pub fn solve_optimal(r: &Matrix, y: &Vector, d: &DerivedParams) -> Result<Vector> {
    check_system(r, y)?;
    let shifted = gram(r).add_diagonal(d.t);
    let z = solve_spd(&shifted, &r.tr_matvec(y)?)?;
    Ok(z.scale(d.alpha))
}

/// Least squares with pseudoinverse truncation of null directions.
pub fn solve_standard(r: &Matrix, y: &Vector) -> Result<Vector> {
    apply_filter(r, y, &SpectralFilter::Standard)
}

/// `max_u u(1+u)γ²(u)` over the spectrum, with the formal (untruncated) gains.
pub fn class_k_witness(f: &SpectralFilter, spec: &Spectrum) -> Result<f64> {
    let gains = f.formal_gains(spec.eigenvalues(), spec.n())?;
    Ok(spec
        .eigenvalues()
        .iter()
        .zip(&gains)
        .map(|(&u, &g)| {
            if u == 0.0 && g.is_infinite() {
                f64::INFINITY
            } else {
                u * (1.0 + u) * g * g
            }
        })
        .fold(0.0, f64::max))
}

fn check_system(r: &Matrix, y: &Vector) -> Result<()> {
    if r.rows() != y.dim() {
        return Err(Error::DimensionMismatch {
            op: "spectral estimate",
            left_rows: r.rows(),
            left_cols: r.cols(),
            right_rows: y.dim(),
            right_cols: 1,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NoiseModel;
    use crate::rng::RngSpec;

    fn rel_err(a: &Vector, b: &Vector) -> f64 {
        a.dist_sq(b).sqrt() / (1.0 + b.norm())
    }

    #[test]
    fn identity_system_standard() {
        let y = Vector::new(vec![0.3, -1.2]).unwrap();
        let x = apply_filter(&Matrix::identity(2), &y, &SpectralFilter::Standard).unwrap();
        assert!(rel_err(&x, &y) < 1e-15);
    }

    #[test]
    fn identity_system_tikhonov() {
        let y = Vector::new(vec![1.0, 1.0]).unwrap();
        let f = SpectralFilter::tikhonov(1.0).unwrap();
        let x = apply_filter(&Matrix::identity(2), &y, &f).unwrap();
        assert_eq!(x.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn scalar_optimal() {
        let r = Matrix::new(1, 1, vec![2.0]).unwrap();
        let y = Vector::new(vec![3.0]).unwrap();
        let d = DerivedParams::from_theta_s(0.8, 0.5).unwrap();
        let expected = 0.8 * 2.0 * 3.0 / (0.64 * 4.0 + 0.5);
        let x = solve_optimal(&r, &y, &d).unwrap();
        assert!((x[0] - expected).abs() < 1e-15);
        let x = apply_filter(&r, &y, &SpectralFilter::optimal(&d)).unwrap();
        assert!((x[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn noiseless_square_is_exact_solve() {
        let m = NoiseModel::new(1.0, 0.0, 0.0, 5, 5).unwrap();
        let s = m.sample(RngSpec::new(8, 0));
        let x = solve_optimal(&s.r, &s.y, &m.derived()).unwrap();
        assert!(rel_err(&x, &s.x) < 1e-8);
        let x = solve_standard(&s.r, &s.y).unwrap();
        assert!(rel_err(&x, &s.x) < 1e-8);
    }

    #[test]
    fn overdetermined_consistent_recovery() {
        let m = NoiseModel::new(1.0, 0.0, 0.0, 4, 9).unwrap();
        for k in 0..5 {
            let s = m.sample(RngSpec::new(9, k));
            let x = solve_standard(&s.r, &s.b).unwrap();
            assert!(rel_err(&x, &s.x) < 1e-8);
        }
    }

    #[test]
    fn dead_column_gets_zero() {
        let r = Matrix::from_rows(&[vec![1.0, 0.0], vec![2.0, 0.0], vec![0.5, 0.0]]).unwrap();
        let y = Vector::new(vec![1.0, 2.0, 3.0]).unwrap();
        let x = solve_standard(&r, &y).unwrap();
        assert_eq!(x[1], 0.0);
        // Least squares on the live column: (1 + 4 + 1.5) / (1 + 4 + 0.25).
        assert!((x[0] - 6.5 / 5.25).abs() < 1e-14);
    }

    #[test]
    fn optimal_singular_without_noise_errors() {
        let r = Matrix::from_rows(&[vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let y = Vector::new(vec![1.0, 2.0]).unwrap();
        let d = DerivedParams::from_theta_s(1.0, 0.0).unwrap();
        assert!(matches!(
            solve_optimal(&r, &y, &d),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn spectral_and_ridge_forms_agree() {
        let m = NoiseModel::new(1.0, 0.5, 0.2, 5, 8).unwrap();
        let d = m.derived();
        for k in 0..100 {
            let s = m.sample(RngSpec::new(10, k));
            let spectral = apply_filter(&s.r, &s.y, &SpectralFilter::optimal(&d)).unwrap();
            let ridge = solve_optimal(&s.r, &s.y, &d).unwrap();
            assert!(spectral.dist_sq(&ridge).sqrt() <= 1e-8 * (1.0 + ridge.norm()));
        }
    }

    #[test]
    fn optimal_is_extended_tikhonov() {
        let m = NoiseModel::new(1.3, 0.7, 0.1, 6, 10).unwrap();
        let d = m.derived();
        assert!(d.alpha > 1.0);
        let s = m.sample(RngSpec::new(14, 0));
        let sys = SpectralSystem::new(&s.r, &s.y).unwrap();
        let opt = sys.estimate(&SpectralFilter::optimal(&d)).unwrap();
        let tik = sys
            .estimate(&SpectralFilter::tikhonov(d.t).unwrap())
            .unwrap();
        let scaled = tik.scale(d.alpha);
        for i in 0..opt.dim() {
            assert!((opt[i] - scaled[i]).abs() <= 1e-12 * (1.0 + opt.max_abs()));
        }
    }

    #[test]
    fn optimal_approaches_standard_as_noise_vanishes() {
        let m = NoiseModel::new(1.0, 0.0, 0.0, 4, 12).unwrap();
        let s = m.sample(RngSpec::new(15, 0));
        let sys = SpectralSystem::new(&s.r, &s.y).unwrap();
        assert!(sys.eigenvalues()[0] > 0.05);
        let std = sys.estimate(&SpectralFilter::Standard).unwrap();
        let errs: Vec<f64> = [1e-2, 1e-4, 1e-6]
            .iter()
            .map(|&sv| {
                let f = SpectralFilter::Optimal { theta: 1.0, s: sv };
                sys.estimate(&f).unwrap().dist_sq(&std).sqrt()
            })
            .collect();
        // First-order in s: each step shrinks the error about a hundredfold.
        for w in errs.windows(2) {
            let ratio = w[1] / w[0];
            assert!(ratio > 0.5e-2 && ratio < 2e-2, "ratio {ratio}");
        }
    }

    #[test]
    fn confluent_singularity() {
        let r = Matrix::identity(2);
        let y = Vector::new(vec![1.0, 1.0]).unwrap();
        let err = apply_filter(&r, &y, &SpectralFilter::confluent(1.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::DeflationSingularity { eigenvalue, .. } if eigenvalue == 1.0));
        let x = apply_filter(&r, &y, &SpectralFilter::confluent(0.5).unwrap()).unwrap();
        assert_eq!(x.as_slice(), &[2.0, 2.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let y = Vector::new(vec![1.0; 3]).unwrap();
        assert!(apply_filter(&Matrix::identity(2), &y, &SpectralFilter::Standard).is_err());
    }

    #[test]
    fn witness_examples() {
        let spec = Spectrum::from_eigenvalues(vec![1.0], 1).unwrap();
        let w = class_k_witness(&SpectralFilter::Optimal { theta: 1.0, s: 1.0 }, &spec).unwrap();
        assert_eq!(w, 0.5);

        let spec = Spectrum::from_eigenvalues(vec![0.01, 2.0], 2).unwrap();
        let w = class_k_witness(&SpectralFilter::Standard, &spec).unwrap();
        assert!((w - 101.0).abs() < 1e-9);
    }

    #[test]
    fn witness_within_tikhonov_bound() {
        let eig: Vec<f64> = (0..200).map(|i| 1e-3 * 1.07f64.powi(i)).collect();
        let spec = Spectrum::from_eigenvalues(eig, 200).unwrap();
        for t in [0.01, 0.1, 0.3, 0.5, 1.0, 4.0] {
            let f = SpectralFilter::tikhonov(t).unwrap();
            let w = class_k_witness(&f, &spec).unwrap();
            let bound = f.class_k_bound().unwrap();
            assert!(w <= bound * (1.0 + 1e-12), "t={t} w={w} bound={bound}");
        }
        let d = DerivedParams::from_theta_s(0.6, 0.2).unwrap();
        let f = SpectralFilter::optimal(&d);
        assert!(class_k_witness(&f, &spec).unwrap() <= f.class_k_bound().unwrap());
    }

    #[test]
    fn custom_table_lengths() {
        let spec = Spectrum::from_eigenvalues(vec![1.0, 2.0, 3.0, 4.0], 2).unwrap();
        let f = SpectralFilter::custom(vec![1.0, 0.5]).unwrap();
        assert_eq!(
            f.formal_gains(spec.eigenvalues(), 2).unwrap(),
            vec![1.0, 0.5, 1.0, 0.5]
        );
        let f = SpectralFilter::custom(vec![1.0, 0.5, 0.2]).unwrap();
        assert!(matches!(
            f.formal_gains(spec.eigenvalues(), 2),
            Err(Error::TableLength {
                expected: 4,
                got: 3
            })
        ));
        assert!(SpectralFilter::custom(vec![-1.0]).is_err());
    }

    #[test]
    fn filter_kind_parsing() {
        assert_eq!(
            "optimal".parse::<FilterKind>().unwrap(),
            FilterKind::Optimal
        );
        assert_eq!(
            "tikhonov:0.25".parse::<FilterKind>().unwrap(),
            FilterKind::Tikhonov(Some(0.25))
        );
        assert_eq!(
            "tikhonov".parse::<FilterKind>().unwrap(),
            FilterKind::Tikhonov(None)
        );
        assert_eq!(
            "confluent:1e-3".parse::<FilterKind>().unwrap(),
            FilterKind::Confluent(1e-3)
        );
        assert!("confluent".parse::<FilterKind>().is_err());
        assert!("tikhonov:-1".parse::<FilterKind>().is_err());
        assert!("ridge".parse::<FilterKind>().is_err());

        let d = NoiseModel::new(1.0, 0.5, 0.1, 2, 2).unwrap().derived();
        assert_eq!(
            FilterKind::Tikhonov(None).resolve(&d).unwrap(),
            SpectralFilter::Tikhonov { t: d.t }
        );
    }
}
