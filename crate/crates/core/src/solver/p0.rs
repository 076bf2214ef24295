//! `P(0)` as the limit of a ratio of integrals over `(eps, h)`.
//!
//! With `r = Abar/A`, the generating-function equation has the integrating
//! factor `E(s) = exp(-int a)`, and
//!
//! ```text
//! P(0) = lim_{eps -> 0} int_eps^h E b2 / (E(eps) + Bbar int_eps^h E b1).
//! ```
//!
//! Since `E' - Bbar b1 E = E (B s - 1 - B) / (A (1 - s)(r - s))` and `E(h) = 0`,
//! both numerator and denominator are integrals of the positive weight
//! `w(s) = E(s) / ((1 - s)(r - s))` against `sum_k d_k s^k` and
//! `1 + B - B s` respectively, which avoids cancellation.

use serde::{Deserialize, Serialize};

use crate::kernels::{InitialDegreeLaw, KernelParams};
use crate::quadrature::{
    integrate_singular, limit_ratio_eps_to_zero, ExpFactor, IntegrandSpec, LimitOptions, DEFAULT_TOLERANCE,
};

use super::SolverError;

const LIMIT_TOLERANCE: f64 = 1e-11;
const MAX_ORDERS: usize = 12;

/// Upper integration limit `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperLimit {
    /// `A <= Abar`.
    One,
    /// `A > Abar` and `B/A + 1/(A - Abar) - Bbar/Abar > 0`; the value is
    /// `Abar/A`, zero when `Abar = 0`.
    LossGainRatio(f64),
    /// `A > Abar` otherwise: `h = eps^2` collapses onto the cutoff.
    Collapsed,
}

/// Integrands of the `P(0)` limit for given kernels and newborn law.
#[derive(Debug, Clone, PartialEq)]
pub struct P0Integrands {
    params: KernelParams,
    upper: UpperLimit,
    weight: IntegrandSpec,
    law_poly: Vec<f64>,
    /// Smallest exponent `p` in the expansion of the ratio in `eps^p`.
    base_order: f64,
}

impl P0Integrands {
    pub fn new(params: &KernelParams, law: &InitialDegreeLaw) -> Result<Self, SolverError> {
        let (a, b) = (params.gain_slope(), params.gain_intercept());
        let (abar, bbar) = (params.loss_slope(), params.loss_intercept());
        if a == 0.0 {
            return Err(SolverError::RequiresLinearRoute);
        }
        let ratio = abar / a;
        let upper = if a <= abar {
            UpperLimit::One
        } else if pole_exponent(params) > 0.0 {
            UpperLimit::LossGainRatio(ratio)
        } else {
            UpperLimit::Collapsed
        };
        let (weight, base_order) = if abar == 0.0 {
            // w(s) = s^{(1+B)/A - 1} (1 - s)^{-1/A - 1} exp(Bbar/(A s)), sign folded in.
            let spec = IntegrandSpec::new((1.0 + b) / a - 1.0, -1.0 / a - 1.0)
                .with_exp(ExpFactor::OverZ(bbar / a));
            (spec, 1.0)
        } else if a == abar {
            let spec = IntegrandSpec::new(bbar / a, (b - bbar) / a - 2.0)
                .with_exp(ExpFactor::OverZMinusOne(1.0 / a));
            (spec, bbar / a + 1.0)
        } else {
            let spec = IntegrandSpec::new(bbar / abar, 1.0 / (abar - a) - 1.0)
                .with_pole(ratio, pole_exponent(params) - 1.0);
            (spec, bbar / abar + 1.0)
        };
        let mut law_poly = vec![0.0; law.max_degree() + 1];
        for (k, p) in law.iter() {
            law_poly[k] = p;
        }
        Ok(P0Integrands { params: *params, upper, weight, law_poly, base_order })
    }

    pub fn upper(&self) -> UpperLimit {
        self.upper
    }

    /// `h` for a given cutoff.
    pub fn h(&self, eps: f64) -> f64 {
        match self.upper {
            UpperLimit::One => 1.0,
            UpperLimit::LossGainRatio(r) => r,
            UpperLimit::Collapsed => eps * eps,
        }
    }

    fn ratio_point(&self) -> f64 {
        self.params.loss_slope() / self.params.gain_slope()
    }

    /// `a(z)`.
    pub fn a(&self, z: f64) -> f64 {
        let (a, b, bbar) = (self.params.gain_slope(), self.params.gain_intercept(), self.params.loss_intercept());
        let r = self.ratio_point();
        -(b * z * z - (1.0 + b + bbar) * z + bbar) / (a * z * (1.0 - z) * (r - z))
    }

    /// `b1(z)`.
    pub fn b1(&self, z: f64) -> f64 {
        1.0 / (self.params.gain_slope() * z * (self.ratio_point() - z))
    }

    /// `b2(z)`.
    pub fn b2(&self, z: f64) -> f64 {
        let d = self.law_poly.iter().rev().fold(0.0, |acc, &c| acc * z + c);
        -d / (self.params.gain_slope() * (1.0 - z) * (self.ratio_point() - z))
    }

    /// `E(z) = exp(-int a)` up to a constant factor, for `0 < z < min(1, r)`
    /// or `r < z < 1`.
    pub fn envelope(&self, z: f64) -> f64 {
        let r = self.ratio_point();
        self.weight.eval(z).abs() * (1.0 - z) * (r - z).abs()
    }

    /// `(num, den)` at cutoff `eps`, up to a common positive factor.
    pub fn ratio_parts(&self, eps: f64) -> Result<(f64, f64), SolverError> {
        let h = self.h(eps);
        let (lo, hi) = if h >= eps { (eps, h) } else { (h, eps) };
        let b = self.params.gain_intercept();
        let num = integrate_singular(&self.weight.clone().with_poly(self.law_poly.clone()), lo, hi, DEFAULT_TOLERANCE)?
            .require_converged()?;
        let den = integrate_singular(&self.weight.clone().with_poly(vec![1.0 + b, -b]), lo, hi, DEFAULT_TOLERANCE)?
            .require_converged()?;
        Ok((num.value * (num.ln_scale - den.ln_scale).exp(), den.value))
    }

    /// Ratio with the cutoff removed, valid when `h > 0`.
    pub fn ratio_without_cutoff(&self) -> Result<f64, SolverError> {
        let h = self.h(0.0);
        if h <= 0.0 {
            return Err(SolverError::CollapsedUpperLimit);
        }
        let (num, den) = self.ratio_parts(0.0)?;
        Ok(num / den)
    }

    /// Exponents `n p + j` of the cutoff error, ascending.
    fn error_orders(&self) -> Vec<f64> {
        let p = self.base_order;
        let mut orders: Vec<f64> = (1..=MAX_ORDERS)
            .flat_map(|n| (0..MAX_ORDERS).map(move |j| n as f64 * p + j as f64))
            .collect();
        orders.sort_by(f64::total_cmp);
        orders.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
        orders.truncate(MAX_ORDERS);
        orders
    }
}

/// `B/A + 1/(A - Abar) - Bbar/Abar`, with `Bbar/Abar` read as zero when
/// `Abar = Bbar = 0` and as infinite when `Abar = 0 < Bbar`.
fn pole_exponent(params: &KernelParams) -> f64 {
    let (a, b) = (params.gain_slope(), params.gain_intercept());
    let (abar, bbar) = (params.loss_slope(), params.loss_intercept());
    let loss_term = if abar == 0.0 {
        if bbar == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        bbar / abar
    };
    b / a + 1.0 / (a - abar) - loss_term
}

/// `P(0)` from the cutoff limit, extrapolated over `eps = 10^-2 2^-j`.
pub fn solve_p0(params: &KernelParams, law: &InitialDegreeLaw) -> Result<f64, SolverError> {
    let integrands = P0Integrands::new(params, law)?;
    if integrands.upper == UpperLimit::Collapsed {
        return Err(SolverError::CollapsedUpperLimit);
    }
    let h = integrands.h(0.0);
    let eps0 = if h > 0.0 { 1e-2 * h.min(1.0) } else { 1e-2 };
    let opts = LimitOptions { eps0, orders: integrands.error_orders(), rel_tol: LIMIT_TOLERANCE, ..Default::default() };
    let estimate = limit_ratio_eps_to_zero(
        |eps| integrands.ratio_parts(eps).map_err(|e| match e {
            SolverError::Quadrature(q) => q,
            other => crate::quadrature::QuadratureError::DomainError(other.to_string()),
        }),
        &opts,
    )?;
    if !(estimate.value > 0.0 && estimate.value < 1.0) {
        return Err(SolverError::NonPositive { degree: 0, value: estimate.value });
    }
    Ok(estimate.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(a: f64, b: f64, abar: f64, bbar: f64) -> KernelParams {
        KernelParams::new(a, b, abar, bbar).unwrap()
    }

    #[test]
    fn deletion_model_closed_form() {
        let p0 = solve_p0(&params(0.75, 0.0, 0.5, 0.0), &InitialDegreeLaw::point_mass(3)).unwrap();
        assert_relative_eq!(p0, 47.0 - 171.0 / 4.0 * 3f64.ln(), max_relative = 1e-10);
    }

    #[test]
    fn balanced_deletion_model() {
        // e * int_0^1 s^2/(1-s)^2 exp(-1/(1-s)) ds, 40-digit reference.
        let p0 = solve_p0(&params(1.0, 0.0, 1.0, 0.0), &InitialDegreeLaw::point_mass(2)).unwrap();
        assert_relative_eq!(p0, 0.210_957_913_030_417_78, max_relative = 1e-10);
    }

    #[test]
    fn no_loss_collapses_to_the_boundary_equation() {
        let law = InitialDegreeLaw::point_mass(0);
        let p = params(0.6, 0.5, 0.0, 0.0);
        assert_relative_eq!(solve_p0(&p, &law).unwrap(), 1.0 / 1.5, max_relative = 1e-10);
        let law = InitialDegreeLaw::from_pairs([(0, 0.2), (2, 0.8)]).unwrap();
        assert_relative_eq!(solve_p0(&p, &law).unwrap(), 0.2 / 1.5, max_relative = 1e-10);
    }

    #[test]
    fn regular_cases_against_the_closure_route() {
        // P(0) from an independent 40-digit solve of the closed head system.
        let cases = [
            (params(0.8, 0.4, 0.3, 0.2), InitialDegreeLaw::from_pairs([(1, 0.3), (3, 0.7)]).unwrap(), 0.054_597_455_652_436_3),
            (params(0.5, 0.4, 0.5, 0.7), InitialDegreeLaw::from_pairs([(0, 0.5), (2, 0.5)]).unwrap(), 0.505_685_539_862_310_4),
            (params(0.4, 1.4, 0.9, 0.6), InitialDegreeLaw::point_mass(2), 0.150_632_631_892_027_55),
        ];
        for (p, law, expected) in &cases {
            assert_relative_eq!(solve_p0(p, law).unwrap(), *expected, max_relative = 1e-9);
        }
    }

    #[test]
    fn group_preferential_small_m() {
        // m = 2: A = 1/2, B = 1, Abar = 1.
        let p0 = solve_p0(&params(0.5, 1.0, 1.0, 0.0), &InitialDegreeLaw::point_mass(2)).unwrap();
        assert_relative_eq!(p0, 0.121_489_222_187_104_19, max_relative = 1e-9);
    }

    #[test]
    fn limit_agrees_with_the_cutoff_free_ratio() {
        let law = InitialDegreeLaw::from_pairs([(1, 0.3), (3, 0.7)]).unwrap();
        for p in [params(0.8, 0.4, 0.3, 0.2), params(0.4, 1.4, 0.9, 0.6), params(0.75, 0.0, 0.5, 0.0)] {
            let integrands = P0Integrands::new(&p, &law).unwrap();
            assert_relative_eq!(
                solve_p0(&p, &law).unwrap(),
                integrands.ratio_without_cutoff().unwrap(),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn collapsed_upper_limit_is_refused() {
        let p = params(1.0, 0.0, 0.5, 3.0);
        let integrands = P0Integrands::new(&p, &InitialDegreeLaw::point_mass(2)).unwrap();
        assert_eq!(integrands.upper(), UpperLimit::Collapsed);
        assert_eq!(integrands.h(1e-3), 1e-6);
        assert_eq!(solve_p0(&p, &InitialDegreeLaw::point_mass(2)), Err(SolverError::CollapsedUpperLimit));
        let p = params(0.4, 0.6, 0.0, 0.5);
        assert_eq!(solve_p0(&p, &InitialDegreeLaw::point_mass(2)), Err(SolverError::CollapsedUpperLimit));
    }

    #[test]
    fn linear_gain_required() {
        let p = params(0.0, 1.0, 0.5, 0.0);
        assert_eq!(solve_p0(&p, &InitialDegreeLaw::point_mass(2)), Err(SolverError::RequiresLinearRoute));
    }

    #[test]
    fn upper_limit_cases() {
        let law = InitialDegreeLaw::point_mass(3);
        let h = |p: KernelParams| P0Integrands::new(&p, &law).unwrap().upper();
        assert_eq!(h(params(0.5, 0.0, 0.5, 0.0)), UpperLimit::One);
        assert_eq!(h(params(0.25, 2.0, 0.5, 0.0)), UpperLimit::One);
        assert_eq!(h(params(0.75, 0.0, 0.5, 0.0)), UpperLimit::LossGainRatio(0.5 / 0.75));
        assert_eq!(h(params(0.6, 0.5, 0.0, 0.0)), UpperLimit::LossGainRatio(0.0));
    }

    #[test]
    fn envelope_is_the_integrating_factor() {
        // d ln E / dz = -a(z).
        let law = InitialDegreeLaw::from_pairs([(1, 0.3), (3, 0.7)]).unwrap();
        for p in [
            params(0.8, 0.4, 0.3, 0.2),
            params(0.4, 1.4, 0.9, 0.6),
            params(0.5, 0.4, 0.5, 0.7),
            params(0.6, 0.5, 0.0, 0.2),
        ] {
            let integrands = P0Integrands::new(&p, &law).unwrap();
            for z in [0.05, 0.2, 0.3] {
                let h = 1e-6;
                let fd = (integrands.envelope(z + h).ln() - integrands.envelope(z - h).ln()) / (2.0 * h);
                assert_relative_eq!(fd, -integrands.a(z), max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn weight_identity() {
        // E b2 = -w d(s) / A and E' - Bbar b1 E = -w (1 + B - B s) / A.
        let law = InitialDegreeLaw::from_pairs([(1, 0.3), (3, 0.7)]).unwrap();
        let p = params(0.8, 0.4, 0.3, 0.2);
        let integrands = P0Integrands::new(&p, &law).unwrap();
        let (a, b, bbar) = (p.gain_slope(), p.gain_intercept(), p.loss_intercept());
        for z in [0.05, 0.2, 0.3] {
            let e = integrands.envelope(z);
            let w = integrands.weight.eval(z);
            let d = 0.3 * z + 0.7 * z * z * z;
            assert_relative_eq!(e * integrands.b2(z), -w * d / a, max_relative = 1e-12);
            let e_prime = -integrands.a(z) * e;
            assert_relative_eq!(e_prime - bbar * integrands.b1(z) * e, -w * (1.0 + b - b * z) / a, max_relative = 1e-10);
        }
    }
}
