//! Distances between an analytic distribution and an empirical histogram.
//!
//! Both sides are truncated at `K`; the mass beyond `K` (for the histogram,
//! overflow included) enters the total variation as one residual atom.

use serde::{Deserialize, Serialize};

use crate::sim::DegreeHistogram;
use crate::solver::{Classification, DegreeDistribution};

use super::tail::{fit_tail, TailFit, TailFitOptions};
use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeComparison {
    pub k: usize,
    pub p_analytic: f64,
    pub p_empirical: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub max_degree: usize,
    pub tv_distance: f64,
    pub kolmogorov_distance: f64,
    pub per_k: Vec<DegreeComparison>,
    pub analytic: Classification,
    /// Absent when the histogram tail is too thin to fit.
    pub tail_fit: Option<TailFit>,
    /// The fit accepts a power law exactly when the solution is scale-free.
    pub classification_agreement: bool,
}

fn padded(p: &[f64], len: usize) -> impl Iterator<Item = f64> + '_ {
    p.iter().copied().chain(std::iter::repeat(0.0)).take(len)
}

/// Total variation between two pmfs truncated to a common support, each
/// completed by a residual atom carrying its missing mass.
pub fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let body: f64 = padded(a, len).zip(padded(b, len)).map(|(x, y)| (x - y).abs()).sum();
    let residual = (a.iter().sum::<f64>() - b.iter().sum::<f64>()).abs();
    (0.5 * (body + residual)).clamp(0.0, 1.0)
}

/// Largest gap between the two cumulative distribution functions.
pub fn kolmogorov_distance(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let (mut ca, mut cb, mut worst) = (0.0, 0.0, 0.0f64);
    for (x, y) in padded(a, len).zip(padded(b, len)) {
        ca += x;
        cb += y;
        worst = worst.max((ca - cb).abs());
    }
    worst.min(1.0)
}

/// Compares `dist` with `hist` on `0..=max_degree`.
pub fn compare(
    dist: &DegreeDistribution,
    hist: &DegreeHistogram,
    max_degree: usize,
    options: TailFitOptions,
) -> Result<ComparisonReport, AnalysisError> {
    if max_degree < dist.seam() {
        return Err(AnalysisError::BoundBelowSeam { bound: max_degree, seam: dist.seam() });
    }
    let analytic = dist.pmf(max_degree)?;
    let mut empirical = hist.fractions();
    empirical.resize(analytic.len().max(empirical.len()), 0.0);
    empirical.truncate(analytic.len());
    let per_k = analytic
        .iter()
        .zip(&empirical)
        .enumerate()
        .map(|(k, (&pa, &pe))| DegreeComparison { k, p_analytic: pa, p_empirical: pe, abs_err: (pa - pe).abs() })
        .collect();
    let tail_fit = fit_tail(hist, dist.seam(), options).ok();
    let classification = dist.classification();
    let classification_agreement =
        tail_fit.as_ref().is_some_and(|f| f.power_law_plausible == classification.is_scale_free());
    Ok(ComparisonReport {
        max_degree,
        tv_distance: tv_distance(&analytic, &empirical),
        kolmogorov_distance: kolmogorov_distance(&analytic, &empirical),
        per_k,
        analytic: classification,
        tail_fit,
        classification_agreement,
    })
}
