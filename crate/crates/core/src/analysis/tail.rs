//! Discrete power-law tail fits by maximum likelihood.
//!
//! Over `k >= k_min` the model is `P(k) = (k + s)^-gamma / zeta(gamma, k_min + s)`
//! with shift `s = 0` for the pure power law. For fixed `s` the likelihood
//! equation is `E_gamma[ln(k + s)] = mean ln(k + s)`, where the left side is
//! `-zeta'/zeta` at `q = k_min + s` and decreases in `gamma`. The shifted
//! model maximizes the profile likelihood over `s`; it absorbs the
//! finite-degree curvature of tails that behave like ratios of gamma
//! functions.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::quadrature::{hurwitz_zeta, hurwitz_zeta_with_derivative};
use crate::sim::DegreeHistogram;

use super::AnalysisError;

/// Fewest tail observations accepted by the fit.
pub const MIN_TAIL_OBSERVATIONS: u64 = 100;
/// Vuong p-value below which a significant preference is accepted.
pub const VUONG_SIGNIFICANCE: f64 = 0.1;
/// Fewest counts per degree used by the log-log diagnostics.
const MIN_DIAGNOSTIC_COUNT: u64 = 5;
const GAMMA_FLOOR: f64 = 1.0 + 1e-9;
const GAMMA_CEILING: f64 = 200.0;
/// Shifts searched lie in `(-k_min, SHIFT_SPAN * (k_min + 1)]`.
const SHIFT_SPAN: f64 = 20.0;
const SHIFT_GRID: usize = 60;

/// Tail model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailModel {
    /// `k^-gamma`.
    #[default]
    PowerLaw,
    /// `(k + s)^-gamma` with the shift fitted.
    ShiftedPowerLaw,
}

/// Likelihood-ratio test of the fitted law against a geometric tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VuongTest {
    /// Normalized log-likelihood ratio; positive favours the power law.
    pub statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
}

/// Result of a tail fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub model: TailModel,
    pub gamma: f64,
    pub std_err: f64,
    /// Zero for the pure power law.
    pub shift: f64,
    pub k_min: usize,
    pub n_tail: u64,
    pub log_likelihood: f64,
    /// Largest gap between the empirical and fitted tail distribution functions.
    pub ks_distance: f64,
    /// Least-squares slope of `ln count` against `ln k`; diagnostic only.
    pub log_log_slope: Option<f64>,
    /// Quadratic coefficient of the same fit; negative when the tail steepens.
    pub log_log_curvature: Option<f64>,
    pub vuong: VuongTest,
    /// False when a geometric tail fits significantly better.
    pub power_law_plausible: bool,
}

struct Tail<'a> {
    counts: &'a [u64],
    k_min: usize,
    n: u64,
}

impl<'a> Tail<'a> {
    fn new(hist: &'a DegreeHistogram, k_min: usize) -> Result<Self, AnalysisError> {
        if k_min == 0 {
            return Err(AnalysisError::InvalidKMin(k_min));
        }
        let counts = hist.counts();
        let n: u64 = counts.iter().skip(k_min).sum();
        if n < MIN_TAIL_OBSERVATIONS {
            return Err(AnalysisError::InsufficientTail { observed: n, required: MIN_TAIL_OBSERVATIONS });
        }
        if counts.iter().skip(k_min + 1).all(|&c| c == 0) {
            return Err(AnalysisError::DegenerateTail);
        }
        Ok(Tail { counts, k_min, n })
    }

    fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().enumerate().skip(self.k_min).filter(|(_, &c)| c > 0).map(|(k, &c)| (k, c))
    }

    fn mean_of(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.iter().map(|(k, c)| c as f64 * f(k)).sum::<f64>() / self.n as f64
    }
}

/// Fit of `gamma` at a fixed shift.
struct Profile {
    gamma: f64,
    log_likelihood: f64,
}

fn expected_ln(gamma: f64, q: f64) -> Result<f64, AnalysisError> {
    let (z, dz) = hurwitz_zeta_with_derivative(gamma, q)?;
    Ok(-dz / z)
}

fn profile(tail: &Tail, shift: f64) -> Result<Profile, AnalysisError> {
    let q = tail.k_min as f64 + shift;
    let target = tail.mean_of(|k| (k as f64 + shift).ln());
    let f = |g: f64| expected_ln(g, q).map(|e| e - target);
    let (mut lo, mut hi) = (GAMMA_FLOOR, 2.0);
    let gamma = if f(lo)? <= 0.0 {
        lo
    } else {
        while f(hi)? > 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > GAMMA_CEILING {
                return Err(AnalysisError::DegenerateTail);
            }
        }
        while hi - lo > 1e-13 * hi {
            let mid = 0.5 * (lo + hi);
            if f(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let n = tail.n as f64;
    Ok(Profile { gamma, log_likelihood: -gamma * target * n - n * hurwitz_zeta(gamma, q)?.ln() })
}

fn log_likelihood(tail: &Tail, gamma: f64, shift: f64) -> Result<f64, AnalysisError> {
    let mean = tail.mean_of(|k| (k as f64 + shift).ln());
    let n = tail.n as f64;
    Ok(-gamma * mean * n - n * hurwitz_zeta(gamma, tail.k_min as f64 + shift)?.ln())
}

/// Maximum-likelihood fit of `k^-gamma` over `k >= k_min`.
pub fn estimate_tail_exponent(hist: &DegreeHistogram, k_min: usize) -> Result<TailFit, AnalysisError> {
    let tail = Tail::new(hist, k_min)?;
    let fit = profile(&tail, 0.0)?;
    // d E[ln k] / d gamma = -Var[ln k], the Fisher information per observation.
    let h = 1e-5 * fit.gamma;
    let lo = (fit.gamma - h).max(GAMMA_FLOOR);
    let q = k_min as f64;
    let variance = (expected_ln(lo, q)? - expected_ln(fit.gamma + h, q)?) / (fit.gamma + h - lo);
    let std_err = 1.0 / (tail.n as f64 * variance).sqrt();
    finish(&tail, TailModel::PowerLaw, fit, 0.0, std_err)
}

/// Maximum-likelihood fit of `(k + s)^-gamma` over `k >= k_min`.
pub fn estimate_shifted_tail_exponent(hist: &DegreeHistogram, k_min: usize) -> Result<TailFit, AnalysisError> {
    let tail = Tail::new(hist, k_min)?;
    let lowest = -(k_min as f64) + 1e-3;
    let highest = SHIFT_SPAN * (k_min as f64 + 1.0);
    let at = |i: usize| lowest + (highest - lowest) * (i as f64 / SHIFT_GRID as f64).powi(2);
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..=SHIFT_GRID {
        let ll = profile(&tail, at(i))?.log_likelihood;
        if ll > best.1 {
            best = (i, ll);
        }
    }
    // Golden-section refinement between the grid neighbours of the best point.
    let (mut a, mut b) = (at(best.0.saturating_sub(1)), at((best.0 + 1).min(SHIFT_GRID)));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (profile(&tail, c)?.log_likelihood, profile(&tail, d)?.log_likelihood);
    while b - a > 1e-9 * (1.0 + b.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = profile(&tail, c)?.log_likelihood;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = profile(&tail, d)?.log_likelihood;
        }
    }
    let shift = 0.5 * (a + b);
    let fit = profile(&tail, shift)?;
    let std_err = shifted_std_err(&tail, fit.gamma, shift, lowest)?;
    finish(&tail, TailModel::ShiftedPowerLaw, fit, shift, std_err)
}

/// Marginal standard error of `gamma` from the observed information matrix.
fn shifted_std_err(tail: &Tail, gamma: f64, shift: f64, lowest: f64) -> Result<f64, AnalysisError> {
    let hg = 1e-4 * gamma;
    let hs = 1e-4 * (1.0 + shift.abs()).min(shift - lowest);
    let ll = |g: f64, s: f64| log_likelihood(tail, g, s);
    let centre = ll(gamma, shift)?;
    let gg = (ll(gamma + hg, shift)? - 2.0 * centre + ll(gamma - hg, shift)?) / (hg * hg);
    let ss = (ll(gamma, shift + hs)? - 2.0 * centre + ll(gamma, shift - hs)?) / (hs * hs);
    let gs = (ll(gamma + hg, shift + hs)? - ll(gamma + hg, shift - hs)? - ll(gamma - hg, shift + hs)?
        + ll(gamma - hg, shift - hs)?)
        / (4.0 * hg * hs);
    let det = gg * ss - gs * gs;
    Ok(if det > 0.0 && ss < 0.0 { (-ss / det).sqrt() } else { f64::NAN })
}

fn finish(tail: &Tail, model: TailModel, fit: Profile, shift: f64, std_err: f64) -> Result<TailFit, AnalysisError> {
    let vuong = vuong_against_geometric(tail, fit.gamma, shift, fit.log_likelihood)?;
    let (log_log_slope, log_log_curvature) = log_log_fits(tail);
    Ok(TailFit {
        model,
        gamma: fit.gamma,
        std_err,
        shift,
        k_min: tail.k_min,
        n_tail: tail.n,
        log_likelihood: fit.log_likelihood,
        ks_distance: ks_distance(tail, fit.gamma, shift)?,
        log_log_slope,
        log_log_curvature,
        vuong,
        power_law_plausible: !(vuong.statistic < 0.0 && vuong.p_value < VUONG_SIGNIFICANCE),
    })
}

fn ks_distance(tail: &Tail, gamma: f64, shift: f64) -> Result<f64, AnalysisError> {
    let total = hurwitz_zeta(gamma, tail.k_min as f64 + shift)?;
    let mut remaining = total;
    let mut cumulative = 0u64;
    let mut worst: f64 = 0.0;
    for (k, &c) in tail.counts.iter().enumerate().skip(tail.k_min) {
        cumulative += c;
        remaining -= (k as f64 + shift).powf(-gamma);
        let fitted = 1.0 - remaining.max(0.0) / total;
        worst = worst.max((cumulative as f64 / tail.n as f64 - fitted).abs());
    }
    Ok(worst)
}

fn vuong_against_geometric(tail: &Tail, gamma: f64, shift: f64, log_likelihood: f64) -> Result<VuongTest, AnalysisError> {
    let k_min = tail.k_min as f64;
    let excess = tail.mean_of(|k| k as f64 - k_min);
    let ratio = excess / (1.0 + excess);
    let n = tail.n as f64;
    let ln_norm = -(log_likelihood / n) - gamma * tail.mean_of(|k| (k as f64 + shift).ln());
    let ln_ratio = |k: usize| {
        let kf = k as f64;
        let power = -gamma * (kf + shift).ln() - ln_norm;
        let geometric = (1.0 - ratio).ln() + (kf - k_min) * ratio.ln();
        power - geometric
    };
    let mean = tail.mean_of(ln_ratio);
    let variance = tail.mean_of(|k| (ln_ratio(k) - mean).powi(2));
    if variance <= 0.0 {
        return Ok(VuongTest { statistic: 0.0, p_value: 1.0 });
    }
    let statistic = mean * n.sqrt() / variance.sqrt();
    Ok(VuongTest { statistic, p_value: 2.0 * Normal::standard().cdf(-statistic.abs()) })
}

/// Linear and quadratic least squares of `ln count` on `ln k`.
fn log_log_fits(tail: &Tail) -> (Option<f64>, Option<f64>) {
    let points: Vec<(f64, f64)> = tail
        .iter()
        .filter(|&(_, c)| c >= MIN_DIAGNOSTIC_COUNT)
        .map(|(k, c)| ((k as f64).ln(), (c as f64).ln()))
        .collect();
    let n = points.len() as f64;
    if points.len() < 2 {
        return (None, None);
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let moment = |px: i32, py: i32| -> f64 {
        points.iter().map(|&(x, y)| (x - mx).powi(px) * (y - my).powi(py)).sum::<f64>() / n
    };
    let (sxx, sxy) = (moment(2, 0), moment(1, 1));
    let slope = (sxx > 0.0).then(|| sxy / sxx);
    if points.len() < 3 {
        return (slope, None);
    }
    // Centered quadratic: y = a + b x + c (x^2 - sxx).
    let (s3, s4, sx2y) = (moment(3, 0), moment(4, 0), moment(2, 1));
    let det = sxx * (s4 - sxx * sxx) - s3 * s3;
    let curvature = (det.abs() > 1e-300).then(|| (sxx * sx2y - s3 * sxy) / det);
    (slope, curvature)
}

/// Fit of `model` at the `k_min >= lowest` minimizing the KS distance.
pub fn select_k_min(hist: &DegreeHistogram, lowest: usize, model: TailModel) -> Result<TailFit, AnalysisError> {
    let counts = hist.counts();
    let start = lowest.max(1);
    let mut best: Option<TailFit> = None;
    let mut tail_left: u64 = counts.iter().skip(start).sum();
    for (k_min, &count) in counts.iter().enumerate().skip(start) {
        if tail_left < MIN_TAIL_OBSERVATIONS {
            break;
        }
        if count > 0 {
            let fit = match model {
                TailModel::PowerLaw => estimate_tail_exponent(hist, k_min),
                TailModel::ShiftedPowerLaw => estimate_shifted_tail_exponent(hist, k_min),
            };
            if let Ok(fit) = fit {
                if best.as_ref().is_none_or(|b| fit.ks_distance < b.ks_distance) {
                    best = Some(fit);
                }
            }
        }
        tail_left -= count;
    }
    best.ok_or(AnalysisError::InsufficientTail { observed: tail_left, required: MIN_TAIL_OBSERVATIONS })
}

/// How the start of the fitted tail is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KMinChoice {
    /// The seam of the analytic solution, or 1 if the seam is 0.
    #[default]
    Seam,
    Fixed(usize),
    /// The KS-optimal `k_min` not below the seam.
    Automated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TailFitOptions {
    pub k_min: KMinChoice,
    pub model: TailModel,
}

/// Tail fit of `hist` for a solution whose tail starts at `seam`.
pub fn fit_tail(hist: &DegreeHistogram, seam: usize, options: TailFitOptions) -> Result<TailFit, AnalysisError> {
    let fixed = |k_min| match options.model {
        TailModel::PowerLaw => estimate_tail_exponent(hist, k_min),
        TailModel::ShiftedPowerLaw => estimate_shifted_tail_exponent(hist, k_min),
    };
    match options.k_min {
        KMinChoice::Seam => fixed(seam.max(1)),
        KMinChoice::Fixed(k) => fixed(k),
        KMinChoice::Automated => select_k_min(hist, seam.max(1), options.model),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::replica_rng;
    use rand::distr::Distribution;
    use rand_distr::{Geometric, Zeta};

    fn zeta_sample(gamma: f64, n: usize, seed: u64) -> DegreeHistogram {
        let mut rng = replica_rng(seed, 0);
        let zeta = Zeta::new(gamma).unwrap();
        DegreeHistogram::from_degrees((0..n).map(|_| zeta.sample(&mut rng) as usize))
    }

    #[test]
    fn recovers_the_zeta_exponent() {
        let h = zeta_sample(2.5, 200_000, 1);
        let fit = estimate_tail_exponent(&h, 1).unwrap();
        assert!((fit.gamma - 2.5).abs() < 4.0 * fit.std_err, "{fit:?}");
        assert!(fit.std_err < 0.01);
        assert!(fit.ks_distance < 0.01);
        assert!(fit.power_law_plausible);
        assert!(fit.vuong.statistic > 0.0);
    }

    #[test]
    fn exact_expectation_reproduces_gamma() {
        // Expected counts of a k^-3 law on 1..=2000 times 1e9: the MLE is close to 3.
        let z = hurwitz_zeta(3.0, 1.0).unwrap();
        let counts: Vec<u64> = (0..=2000).map(|k: u64| if k == 0 { 0 } else { (1e12 * (k as f64).powi(-3) / z).round() as u64 }).collect();
        let fit = estimate_tail_exponent(&DegreeHistogram::new(counts, 0), 1).unwrap();
        assert!((fit.gamma - 3.0).abs() < 1e-3, "{}", fit.gamma);
    }

    #[test]
    fn scale_invariant_in_counts() {
        let h = zeta_sample(3.0, 20_000, 2);
        let scaled = DegreeHistogram::new(h.counts().iter().map(|c| c * 7).collect(), 0);
        let (a, b) = (estimate_tail_exponent(&h, 2).unwrap(), estimate_tail_exponent(&scaled, 2).unwrap());
        assert!((a.gamma - b.gamma).abs() < 1e-10);
    }

    #[test]
    fn geometric_tail_is_flagged() {
        let mut rng = replica_rng(3, 0);
        let geo = Geometric::new(0.3).unwrap();
        let h = DegreeHistogram::from_degrees((0..100_000).map(|_| 1 + geo.sample(&mut rng) as usize));
        let fit = estimate_tail_exponent(&h, 1).unwrap();
        assert!(!fit.power_law_plausible, "{fit:?}");
        assert!(fit.vuong.statistic < 0.0);
        assert!(fit.log_log_curvature.unwrap() < 0.0);
    }

    #[test]
    fn errors() {
        let h = DegreeHistogram::from_degrees([1, 2, 3]);
        assert!(matches!(estimate_tail_exponent(&h, 1), Err(AnalysisError::InsufficientTail { observed: 3, .. })));
        assert!(matches!(estimate_tail_exponent(&h, 0), Err(AnalysisError::InvalidKMin(0))));
        let flat = DegreeHistogram::from_degrees(std::iter::repeat_n(4, 500));
        assert!(matches!(estimate_tail_exponent(&flat, 4), Err(AnalysisError::DegenerateTail)));
    }

    #[test]
    fn automated_k_min_skips_a_distorted_head() {
        // Zeta(3) tail above 10 with the head replaced by a bump at 2.
        let mut h = zeta_sample(3.0, 400_000, 4);
        let head: u64 = h.counts().iter().take(10).sum();
        let mut counts = h.counts().to_vec();
        for c in counts.iter_mut().take(10) {
            *c = 0;
        }
        counts[2] = head;
        h = DegreeHistogram::new(counts, 0);
        let fit = select_k_min(&h, 1, TailModel::PowerLaw).unwrap();
        assert!(fit.k_min >= 10, "{fit:?}");
        assert!((fit.gamma - 3.0).abs() < 0.1);
    }

    #[test]
    fn shifted_fit_recovers_shift_and_exponent() {
        // Expected counts of (k + 4)^-3 on 1..=20000.
        let z = hurwitz_zeta(3.0, 5.0).unwrap();
        let counts: Vec<u64> =
            (0..=20_000u64).map(|k| if k == 0 { 0 } else { (1e13 * (k as f64 + 4.0).powi(-3) / z).round() as u64 }).collect();
        let h = DegreeHistogram::new(counts, 0);
        let fit = estimate_shifted_tail_exponent(&h, 1).unwrap();
        assert!((fit.gamma - 3.0).abs() < 1e-3, "{fit:?}");
        assert!((fit.shift - 4.0).abs() < 1e-2, "{fit:?}");
        assert!(fit.std_err.is_finite() && fit.std_err > 0.0);
        assert!(fit.ks_distance < 1e-6);
        let pure = estimate_tail_exponent(&h, 1).unwrap();
        assert!(pure.gamma < 2.9);
        assert!(fit.log_likelihood > pure.log_likelihood);
    }

    #[test]
    fn fit_tail_dispatches_on_options() {
        let h = zeta_sample(3.0, 50_000, 6);
        let seam = fit_tail(&h, 0, TailFitOptions::default()).unwrap();
        assert_eq!((seam.k_min, seam.model), (1, TailModel::PowerLaw));
        let fixed = fit_tail(&h, 0, TailFitOptions { k_min: KMinChoice::Fixed(3), model: TailModel::ShiftedPowerLaw }).unwrap();
        assert_eq!((fixed.k_min, fixed.model), (3, TailModel::ShiftedPowerLaw));
        assert!((fixed.gamma - 3.0).abs() < 0.3, "{fixed:?}");
    }
}
