//! Empirical versus analytic comparison, tail-exponent estimation, run
//! manifests and the tabular formats shared by the command-line tool.

pub mod compare;
pub mod io;
pub mod manifest;
pub mod tail;

use thiserror::Error;

use crate::quadrature::QuadratureError;
use crate::solver::SolverError;

pub use compare::{compare, kolmogorov_distance, tv_distance, ComparisonReport, DegreeComparison};
pub use io::{format_sig, read_histogram_csv, write_comparison_csv, write_pmf_csv, write_snapshot_csv, CSV_SIGNIFICANT_DIGITS};
pub use manifest::{RunManifest, SeedSource};
pub use tail::{
    estimate_shifted_tail_exponent, estimate_tail_exponent, fit_tail, select_k_min, KMinChoice, TailFit, TailFitOptions,
    TailModel, VuongTest, MIN_TAIL_OBSERVATIONS,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("only {observed} observations in the tail, at least {required} needed")]
    InsufficientTail { observed: u64, required: u64 },
    #[error("k_min must be at least 1, got {0}")]
    InvalidKMin(usize),
    #[error("every tail observation sits at k_min; the exponent is unbounded")]
    DegenerateTail,
    #[error("comparison bound {bound} is below the seam {seam}")]
    BoundBelowSeam { bound: usize, seam: usize },
    #[error("malformed histogram table: {0}")]
    MalformedTable(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}
