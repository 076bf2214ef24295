//! Stationary degree distribution of the affine-kernel chain.
//!
//! The head `P(0..=M)` solves a tridiagonal system closed by the tail ratio
//! at the seam `M`; beyond `M` the distribution is `C g(k)` with `g` the
//! minimal solution of the homogeneous recurrence. `P(0)` is cross-checked
//! against an independent limit of integrals when that route applies.

mod head;
mod p0;
mod tail;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{InitialDegreeLaw, KernelParams};
use crate::quadrature::{hurwitz_zeta, QuadratureError};

pub use head::{build_head_system, dense_determinant, ClosedHeadSystem, HeadSystem};
pub use p0::{solve_p0, P0Integrands, UpperLimit};
pub use tail::{ln_tail_integral, minimal_ratios, tail_integrand, TailBranch, TailRepresentation};

use tail::TailClosure;

/// Relative disagreement above which the seam or `P(0)` cross-checks fail.
pub const CROSS_CHECK_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("the limit formula for P(0) needs a positive gain slope")]
    RequiresLinearRoute,
    #[error("the P(0) integration range collapses onto the cutoff")]
    CollapsedUpperLimit,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("computed probability at degree {degree} is not positive ({value:e})")]
    NonPositive { degree: usize, value: f64 },
    #[error("tail continued fraction from degree {from} did not settle within slack {slack}")]
    TailRecurrence { from: usize, slack: usize },
    #[error("head system is singular")]
    SingularSystem,
    #[error("tail integral ratio {integral} disagrees with the recurrence ratio {recurrence} at the seam")]
    SeamMismatch { integral: f64, recurrence: f64 },
    #[error("degree {degree} lies below the seam {seam}")]
    BelowSeam { degree: usize, seam: usize },
    #[error("asymptotic prefactor needs gain slope > loss slope")]
    NotScaleFree,
}

/// Whether `P(k)` follows a power law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "classification", rename_all = "snake_case")]
pub enum Classification {
    ScaleFree { gamma: f64 },
    NotScaleFree,
}

impl Classification {
    pub fn gamma(&self) -> Option<f64> {
        match self {
            Classification::ScaleFree { gamma } => Some(*gamma),
            Classification::NotScaleFree => None,
        }
    }

    pub fn is_scale_free(&self) -> bool {
        matches!(self, Classification::ScaleFree { .. })
    }
}

/// How `P(0)` was confirmed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum P0Route {
    /// The integral limit agreed with the closed head solve.
    Limit,
    /// Only the closed head solve applies.
    Closure,
}

/// Scale-free iff `A > Abar`, with `gamma = 1 + 1/(A - Abar)`.
pub fn classify(params: &KernelParams) -> Classification {
    let (a, abar) = (params.gain_slope(), params.loss_slope());
    if a > abar {
        Classification::ScaleFree { gamma: 1.0 + 1.0 / (a - abar) }
    } else {
        Classification::NotScaleFree
    }
}

/// `lim k^gamma P(k)` for tail constant `C` of the integral representation.
pub fn asymptotic_prefactor(params: &KernelParams, c: f64) -> Result<f64, SolverError> {
    let (a, b) = (params.gain_slope(), params.gain_intercept());
    let (abar, bbar) = (params.loss_slope(), params.loss_intercept());
    if a <= abar {
        return Err(SolverError::NotScaleFree);
    }
    if c == 0.0 {
        return Ok(0.0);
    }
    let ln_gamma = statrs::function::gamma::ln_gamma(1.0 + 1.0 / (a - abar));
    let ln_rest = if abar == 0.0 {
        -bbar / a
    } else {
        (bbar / abar - 1.0 / (a - abar) - b / a) * (a / abar - 1.0).ln()
    };
    Ok(c * (ln_gamma + ln_rest).exp())
}

/// Stationary distribution with its tail description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeDistribution {
    params: KernelParams,
    law: InitialDegreeLaw,
    /// `P(0..=M)`.
    head: Vec<f64>,
    /// `P(k) = C g(k)` for `k >= M`; `g` is 1 at the seam for the recurrence.
    #[serde(rename = "C")]
    tail_constant: f64,
    branch: TailBranch,
    representation: TailRepresentation,
    #[serde(flatten)]
    classification: Classification,
    prefactor: Option<f64>,
    p0_route: P0Route,
}

/// Solve for the stationary distribution.
pub fn solve_distribution(params: &KernelParams, law: &InitialDegreeLaw) -> Result<DegreeDistribution, SolverError> {
    let seam = law.max_degree();
    let closure = TailClosure::resolve(params, seam)?;
    if closure.representation == TailRepresentation::Integral {
        let recurrence = minimal_ratios(params, seam, 1)?[0];
        if (closure.ratio - recurrence).abs() > CROSS_CHECK_TOLERANCE * recurrence.abs() {
            return Err(SolverError::SeamMismatch { integral: closure.ratio, recurrence });
        }
    }
    let head = ClosedHeadSystem::new(params, law, closure.ratio).solve()?;
    for (k, &p) in head.iter().enumerate() {
        if p.is_nan() || p < 0.0 {
            return Err(SolverError::NonPositive { degree: k, value: p });
        }
    }
    let tail_constant = match closure.representation {
        TailRepresentation::Integral => head[seam] * (-closure.ln_g_seam).exp(),
        TailRepresentation::MinimalRecurrence => head[seam],
    };
    let p0_route = match solve_p0(params, law) {
        Ok(limit) if (limit - head[0]).abs() <= CROSS_CHECK_TOLERANCE * head[0] => P0Route::Limit,
        Ok(limit) => {
            log::warn!("P(0) limit {limit:e} disagrees with head solve {:e}; keeping the head solve", head[0]);
            P0Route::Closure
        }
        Err(e) => {
            log::debug!("P(0) limit route unavailable: {e}");
            P0Route::Closure
        }
    };
    let mut dist = DegreeDistribution {
        params: *params,
        law: law.clone(),
        head,
        tail_constant,
        branch: TailBranch::of(params),
        representation: closure.representation,
        classification: classify(params),
        prefactor: None,
        p0_route,
    };
    if dist.classification.is_scale_free() {
        dist.prefactor = dist.integral_constant().map(|c| asymptotic_prefactor(params, c)).transpose()?;
    }
    Ok(dist)
}

impl DegreeDistribution {
    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn law(&self) -> &InitialDegreeLaw {
        &self.law
    }

    pub fn head(&self) -> &[f64] {
        &self.head
    }

    pub fn seam(&self) -> usize {
        self.head.len() - 1
    }

    pub fn tail_constant(&self) -> f64 {
        self.tail_constant
    }

    pub fn branch(&self) -> TailBranch {
        self.branch
    }

    pub fn representation(&self) -> TailRepresentation {
        self.representation
    }

    pub fn classification(&self) -> Classification {
        self.classification
    }

    pub fn prefactor(&self) -> Option<f64> {
        self.prefactor
    }

    pub fn p0_route(&self) -> P0Route {
        self.p0_route
    }

    /// Constant multiplying the branch integral, even when the head was
    /// closed by the recurrence; `None` if no integral converges near the seam.
    fn integral_constant(&self) -> Option<f64> {
        if self.representation == TailRepresentation::Integral {
            return Some(self.tail_constant);
        }
        let seam = self.seam();
        (seam + 1..=seam + 4).find_map(|k| {
            let ln_g = ln_tail_integral(&self.params, k).ok()?;
            let p = self.tail_value(k).ok()?;
            Some((p.ln() - ln_g).exp())
        })
    }

    /// `P(k)` for `k >= M` from the tail representation.
    pub fn tail_value(&self, k: usize) -> Result<f64, SolverError> {
        let seam = self.seam();
        if k < seam {
            return Err(SolverError::BelowSeam { degree: k, seam });
        }
        if self.tail_constant == 0.0 {
            return Ok(0.0);
        }
        match self.representation {
            TailRepresentation::Integral => {
                Ok((self.tail_constant.ln() + ln_tail_integral(&self.params, k)?).exp())
            }
            TailRepresentation::MinimalRecurrence => {
                let ratios = minimal_ratios(&self.params, seam, k - seam)?;
                Ok(ratios.iter().fold(self.head[seam], |p, r| p * r))
            }
        }
    }

    /// `P(k)` for any `k`.
    pub fn prob(&self, k: usize) -> Result<f64, SolverError> {
        match self.head.get(k) {
            Some(&p) => Ok(p),
            None => self.tail_value(k),
        }
    }

    /// `P(0..=max_degree)`, the tail from products of recurrence ratios.
    pub fn pmf(&self, max_degree: usize) -> Result<Vec<f64>, SolverError> {
        let seam = self.seam();
        let mut out: Vec<f64> = self.head.iter().copied().take(max_degree + 1).collect();
        if max_degree > seam {
            let ratios = minimal_ratios(&self.params, seam, max_degree - seam)?;
            let mut p = self.head[seam];
            for r in ratios {
                p *= r;
                out.push(p);
            }
        }
        Ok(out)
    }

    /// `den_k P(k) - F+(k-1) P(k-1) - F-(k+1) P(k+1) - d_k` over `0..=max_degree`.
    pub fn residuals(&self, max_degree: usize) -> Result<Vec<f64>, SolverError> {
        let p = self.pmf(max_degree + 1)?;
        let params = &self.params;
        Ok((0..=max_degree)
            .map(|k| {
                let mut r = (1.0 + params.gain(k) + params.loss(k)) * p[k] - params.loss(k + 1) * p[k + 1];
                if k > 0 {
                    r -= params.gain(k - 1) * p[k - 1];
                }
                r - self.law.prob(k)
            })
            .collect())
    }

    /// `sum_{k <= K} P(k)` plus an estimate of the remaining mass.
    pub fn normalization_check(&self, max_degree: usize) -> Result<f64, SolverError> {
        let p = self.pmf(max_degree)?;
        let head_mass: f64 = p.iter().sum();
        let remainder = match (self.classification, self.prefactor) {
            (Classification::ScaleFree { gamma }, Some(prefactor)) => {
                prefactor * hurwitz_zeta(gamma, max_degree as f64 + 1.0)?
            }
            _ => {
                // Geometric bound from the ratio just past the cutoff.
                let from = max_degree.max(self.seam());
                let ratio = minimal_ratios(&self.params, from, 1)?[0];
                let next = p[max_degree] * ratio;
                if next == 0.0 {
                    0.0
                } else if ratio < 1.0 {
                    next / (1.0 - ratio)
                } else {
                    f64::INFINITY
                }
            }
        };
        Ok(head_mass + remainder)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::ModelPreset;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(a: f64, b: f64, abar: f64, bbar: f64) -> KernelParams {
        KernelParams::new(a, b, abar, bbar).unwrap()
    }

    fn deletion_m3() -> DegreeDistribution {
        let (p, law) = ModelPreset::edge_deletion(3, 4, 12).unwrap().kernels();
        solve_distribution(&p, &law).unwrap()
    }

    #[test]
    fn deletion_model_head_and_constant() {
        let dist = deletion_m3();
        let p0 = 0.034_324_659_438_310_694;
        for (p, ratio) in dist.head().iter().zip([1.0, 2.0, 4.5, 9.5]) {
            assert_relative_eq!(*p, ratio * p0, max_relative = 1e-10);
        }
        assert_relative_eq!(dist.tail_constant(), 42.75, max_relative = 1e-9);
        assert_eq!(dist.classification(), Classification::ScaleFree { gamma: 5.0 });
        assert_relative_eq!(dist.prefactor().unwrap(), 16416.0, max_relative = 1e-9);
        assert_eq!(dist.p0_route(), P0Route::Limit);
        assert_eq!(dist.representation(), TailRepresentation::Integral);
    }

    #[test]
    fn deletion_model_tail_values() {
        let dist = deletion_m3();
        for (k, expected) in [
            (4, 0.158_604_402_972_586_4),
            (10, 0.010_797_739_426_117_028),
            (200, 4.051_279_318_457_340_6e-8),
            (500, 4.764_451_294_972_552e-10),
        ] {
            assert_relative_eq!(dist.tail_value(k).unwrap(), expected, max_relative = 1e-10);
        }
        assert_relative_eq!(dist.tail_value(3).unwrap(), dist.head()[3], max_relative = 1e-12);
        assert_eq!(dist.tail_value(2), Err(SolverError::BelowSeam { degree: 2, seam: 3 }));
    }

    #[test]
    fn pmf_matches_the_integral_tail() {
        let dist = deletion_m3();
        let pmf = dist.pmf(500).unwrap();
        for k in [4, 10, 200, 500] {
            assert_relative_eq!(pmf[k], dist.tail_value(k).unwrap(), max_relative = 1e-10);
        }
    }

    #[test]
    fn balanced_deletion_model() {
        let (p, law) = ModelPreset::edge_deletion(2, 4, 12).unwrap().kernels();
        let dist = solve_distribution(&p, &law).unwrap();
        assert_relative_eq!(dist.head()[0], 0.210_957_913_030_417_78, max_relative = 1e-10);
        assert_relative_eq!(dist.head()[1], 0.210_957_913_030_417_78, max_relative = 1e-10);
        assert_relative_eq!(dist.head()[2], 0.316_436_869_545_626_66, max_relative = 1e-10);
        assert_eq!(dist.classification(), Classification::NotScaleFree);
        assert_eq!(dist.prefactor(), None);
    }

    #[test]
    fn group_preferential_heads() {
        let (p, law) = ModelPreset::group_preferential(2, 4, 12).unwrap().kernels();
        let dist = solve_distribution(&p, &law).unwrap();
        for (x, e) in dist.head().iter().zip([0.121_489_222_187_104_19, 0.242_978_444_374_208_37, 0.364_467_666_561_312_6]) {
            assert_relative_eq!(*x, e, max_relative = 1e-10);
        }
        let (p, law) = ModelPreset::group_preferential(3, 4, 12).unwrap().kernels();
        let dist = solve_distribution(&p, &law).unwrap();
        for (x, e) in dist.head().iter().zip([0.00625, 0.0375, 0.128125, 0.328125]) {
            assert_relative_eq!(*x, e, max_relative = 1e-10);
        }
        assert_eq!(dist.representation(), TailRepresentation::MinimalRecurrence);
        assert_eq!(dist.classification(), Classification::NotScaleFree);
    }

    #[test]
    fn add_rewire_model() {
        let (p, law) = ModelPreset::add_rewire(2, 3, 0.1, 0.1).unwrap().kernels();
        let dist = solve_distribution(&p, &law).unwrap();
        for (x, e) in dist.head().iter().zip([0.130_405_339_719_210_9, 0.065_921_907_270_071_69, 0.334_175_130_347_231_06]) {
            assert_relative_eq!(*x, e, max_relative = 1e-10);
        }
        assert_relative_eq!(dist.tail_constant(), 22.782_539_206_620_807, max_relative = 1e-9);
        assert_relative_eq!(dist.prefactor().unwrap(), 38.593_852_270_815_6, max_relative = 1e-9);
    }

    #[test]
    fn pure_growth_with_shifted_kernel() {
        let (p, law) = ModelPreset::add_rewire(2, 3, 0.0, 0.0).unwrap().kernels();
        let dist = solve_distribution(&p, &law).unwrap();
        assert_eq!(&dist.head()[..2], &[0.0, 0.0]);
        assert_relative_eq!(dist.head()[2], 5.0 / 11.0, max_relative = 1e-12);
        assert_eq!(dist.p0_route(), P0Route::Closure);
        assert_relative_eq!(dist.tail_constant(), 19.6875, max_relative = 1e-9);
        let prefactor = dist.prefactor().unwrap();
        assert_relative_eq!(prefactor, 65.428_472_230_691_9, max_relative = 1e-9);
        let scaled = dist.tail_value(1000).unwrap() * 1000f64.powf(3.5);
        assert_relative_eq!(scaled, 64.915_926_765_435_81, max_relative = 1e-9);
    }

    #[test]
    fn normalization() {
        let dist = deletion_m3();
        assert!((dist.normalization_check(10_000).unwrap() - 1.0).abs() < 1e-6);
        let (p, law) = ModelPreset::add_rewire(2, 3, 0.1, 0.1).unwrap().kernels();
        let dist = solve_distribution(&p, &law).unwrap();
        assert!((dist.normalization_check(10_000).unwrap() - 1.0).abs() < 1e-6);
        let (p, law) = ModelPreset::group_preferential(3, 4, 12).unwrap().kernels();
        let dist = solve_distribution(&p, &law).unwrap();
        let total = dist.normalization_check(2_000).unwrap();
        assert!((total - 1.0).abs() < 1e-9, "{total}");
    }

    #[test]
    fn classification_rule() {
        assert_eq!(classify(&params(0.75, 0.0, 0.5, 0.0)), Classification::ScaleFree { gamma: 5.0 });
        assert_eq!(classify(&params(0.5, 3.0, 0.5, 1.0)), Classification::NotScaleFree);
        assert_eq!(classify(&params(0.0, 1.0, 1.0, 0.0)), Classification::NotScaleFree);
    }

    #[test]
    fn prefactor_cases() {
        let p = params(0.75, 0.0, 0.5, 0.0);
        assert_relative_eq!(asymptotic_prefactor(&p, 42.75).unwrap(), 16416.0, max_relative = 1e-12);
        assert_eq!(asymptotic_prefactor(&p, 0.0), Ok(0.0));
        assert_eq!(asymptotic_prefactor(&params(0.5, 0.0, 0.5, 0.0), 1.0), Err(SolverError::NotScaleFree));
    }

    #[test]
    fn no_linear_gain_uses_the_recurrence() {
        let p = params(0.0, 1.0, 0.5, 0.5);
        let law = InitialDegreeLaw::point_mass(2);
        let dist = solve_distribution(&p, &law).unwrap();
        assert_eq!(dist.branch(), TailBranch::NoLinearGain);
        assert_eq!(dist.representation(), TailRepresentation::MinimalRecurrence);
        assert_eq!(dist.p0_route(), P0Route::Closure);
        assert!((dist.normalization_check(500).unwrap() - 1.0).abs() < 1e-12);
        assert!(dist.residuals(60).unwrap().iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn serde_shape() {
        let dist = deletion_m3();
        let json = serde_json::to_value(&dist).unwrap();
        assert_eq!(json["classification"], "scale_free");
        assert_eq!(json["gamma"], 5.0);
        assert!(json["C"].as_f64().is_some());
        let back: DegreeDistribution = serde_json::from_value(json).unwrap();
        assert_eq!(back, dist);
    }

    fn valid_params() -> impl Strategy<Value = KernelParams> {
        (0.05f64..1.5, 0.0f64..2.0, 0.0f64..1.5, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b, abar, u, neg)| {
            // Bbar in [-Abar, Abar + 1).
            let bbar = if neg < 0.2 { -abar * u } else { u * (abar + 1.0) };
            KernelParams::new(a, b, abar, bbar).unwrap()
        })
    }

    fn laws() -> impl Strategy<Value = InitialDegreeLaw> {
        (0usize..3, 0usize..4, 0.05f64..0.95).prop_map(|(lo, width, w)| {
            if width == 0 {
                InitialDegreeLaw::point_mass(lo)
            } else {
                InitialDegreeLaw::from_pairs([(lo, w), (lo + width, 1.0 - w)]).unwrap()
            }
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn solved_distributions_satisfy_the_balance_equations(p in valid_params(), law in laws()) {
            let dist = solve_distribution(&p, &law).unwrap();
            let m = law.max_degree();
            for r in dist.residuals(m + 50).unwrap() {
                prop_assert!(r.abs() < 1e-10, "residual {r}");
            }
            prop_assert!(dist.pmf(m + 50).unwrap().iter().all(|&x| x > 0.0));
        }

        #[test]
        fn classification_depends_only_on_the_slopes(p in valid_params(), b in 0.0f64..3.0, bbar in 0.0f64..3.0) {
            let q = KernelParams::new(p.gain_slope(), b, p.loss_slope(), bbar).unwrap();
            prop_assert_eq!(classify(&p), classify(&q));
        }

        #[test]
        fn forward_recurrence_reproduces_the_head(p in valid_params(), law in laws()) {
            prop_assume!(p.loss(1) > 0.0);
            let dist = solve_distribution(&p, &law).unwrap();
            let head = dist.head();
            let mut forward = vec![head[0], head[1.min(head.len() - 1)]];
            if head.len() > 1 {
                forward[1] = ((1.0 + p.gain(0)) * head[0] - law.prob(0)) / p.loss(1);
            }
            for k in 1..head.len().saturating_sub(1) {
                let next = ((1.0 + p.gain(k) + p.loss(k)) * forward[k] - p.gain(k - 1) * forward[k - 1] - law.prob(k))
                    / p.loss(k + 1);
                forward.push(next);
            }
            for (x, y) in forward.iter().zip(head) {
                prop_assert!((x - y).abs() <= 1e-8 * y.abs().max(1e-300), "{x} vs {y}");
            }
        }

        #[test]
        fn tail_integral_satisfies_the_recurrence(p in valid_params(), law in laws()) {
            let dist = solve_distribution(&p, &law).unwrap();
            prop_assume!(dist.representation() == TailRepresentation::Integral);
            let m = dist.seam();
            let values: Vec<f64> = (m..=m + 21).map(|k| dist.tail_value(k).unwrap()).collect();
            for j in 1..values.len() - 1 {
                let k = m + j;
                let lhs = (1.0 + p.gain(k) + p.loss(k)) * values[j];
                let rhs = p.gain(k - 1) * values[j - 1] + p.loss(k + 1) * values[j + 1];
                prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs, "k = {k}: {lhs} vs {rhs}");
            }
        }
    }
}
