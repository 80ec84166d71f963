use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    DimensionMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("empty dimension: {rows}x{cols}")]
    EmptyDimension { rows: usize, cols: usize },
    #[error("non-finite entry {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("matrix is not symmetric: max |s_ij - s_ji| = {max_asymmetry:e}")]
    NotSymmetric { max_asymmetry: f64 },
    #[error(
        "Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})"
    )]
    NoConvergence { sweeps: usize, off_norm: f64 },
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("deflation singularity: eigenvalue {eigenvalue} at index {index} is within tolerance of lambda = {lambda}")]
    DeflationSingularity {
        index: usize,
        eigenvalue: f64,
        lambda: f64,
    },
    #[error("divergent regime: N - n - 1 = {gap} < 1 (n = {n}, N = {big_n})")]
    DivergentRegime { n: usize, big_n: usize, gap: i64 },
    #[error("filter table has {got} entries, expected {expected}")]
    TableLength { expected: usize, got: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to malformed input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NotSymmetric { .. }
                | Error::NoConvergence { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::DeflationSingularity { .. }
                | Error::DivergentRegime { .. }
        )
    }
}
