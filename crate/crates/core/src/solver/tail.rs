//! Tail of the stationary distribution beyond the largest newborn degree.
//!
//! For `k > M` the balance equations are homogeneous, so the tail is fixed
//! up to a constant by the minimal solution of a three-term recurrence. When
//! the kernel admits it, that solution is a closed-form integral `g(k)`;
//! otherwise ratios `P(k+1)/P(k)` come from a backward continued fraction.

use serde::{Deserialize, Serialize};

use crate::kernels::KernelParams;
use crate::quadrature::{integrate_singular, ExpFactor, IntegrandSpec, QuadratureError, DEFAULT_TOLERANCE};

use super::SolverError;

/// Which closed form the tail integral takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailBranch {
    /// `A = 0`.
    NoLinearGain,
    /// `Abar = 0`.
    NoLinearLoss,
    /// `A = Abar`.
    Balanced,
    /// `A, Abar > 0`, `A != Abar`.
    Mixed,
}

impl TailBranch {
    pub fn of(params: &KernelParams) -> Self {
        let (gain, loss) = (params.gain_slope(), params.loss_slope());
        if gain == 0.0 {
            TailBranch::NoLinearGain
        } else if loss == 0.0 {
            TailBranch::NoLinearLoss
        } else if gain == loss {
            TailBranch::Balanced
        } else {
            TailBranch::Mixed
        }
    }
}

/// How tail values are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailRepresentation {
    /// `P(k) = C g(k)` with `g` the branch integral.
    Integral,
    /// `P(k) = P(M) prod_{j=M}^{k-1} r_j` with `r_j` from a continued fraction.
    MinimalRecurrence,
}

/// Integrand and upper limit of `g(k)`, or `None` when the branch integral
/// is not the minimal solution (`A = 0`).
pub fn tail_integrand(params: &KernelParams, k: usize) -> Option<(IntegrandSpec, f64)> {
    let (a, b) = (params.gain_slope(), params.gain_intercept());
    let (abar, bbar) = (params.loss_slope(), params.loss_intercept());
    let kf = k as f64;
    let spec = match TailBranch::of(params) {
        TailBranch::NoLinearGain => return None,
        TailBranch::NoLinearLoss => {
            IntegrandSpec::new(kf - 1.0 + b / a, 1.0 / a).with_exp(ExpFactor::Linear(-bbar / a))
        }
        TailBranch::Balanced => IntegrandSpec::new(kf - 1.0 + b / a, (bbar - b) / a)
            .with_exp(ExpFactor::OverZMinusOne(1.0 / a)),
        TailBranch::Mixed => {
            let pole = a / abar;
            let spec = IntegrandSpec::new(kf - 1.0 + b / a, 1.0 / (a - abar))
                .with_pole(pole, bbar / abar - 1.0 / (a - abar) - b / a);
            return Some((spec, pole.min(1.0)));
        }
    };
    Some((spec, 1.0))
}

/// `ln g(k)` by quadrature.
pub fn ln_tail_integral(params: &KernelParams, k: usize) -> Result<f64, SolverError> {
    let (spec, upper) = tail_integrand(params, k).ok_or(SolverError::RequiresLinearRoute)?;
    let r = integrate_singular(&spec, 0.0, upper, DEFAULT_TOLERANCE)?.require_converged()?;
    if r.value <= 0.0 {
        return Err(SolverError::NonPositive { degree: k, value: r.total() });
    }
    Ok(r.ln_abs())
}

const FIRST_SLACK: usize = 64;
const MAX_SLACK: usize = 1 << 24;
const RATIO_TOLERANCE: f64 = 1e-15;

/// Ratios `r_j = y(j+1)/y(j)` for `j = from..from + count` of the minimal
/// solution of the homogeneous balance recurrence, valid for `from >= M`.
///
/// The backward continued fraction starts `slack` steps beyond the last
/// requested index; the slack doubles until the first and last ratios are
/// stable.
pub fn minimal_ratios(params: &KernelParams, from: usize, count: usize) -> Result<Vec<f64>, SolverError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut slack = FIRST_SLACK;
    let mut previous = backward_fraction(params, from, count, slack);
    loop {
        slack *= 2;
        let current = backward_fraction(params, from, count, slack);
        let stable = [0, count - 1].iter().all(|&i| {
            let (x, y) = (current[i], previous[i]);
            (x - y).abs() <= RATIO_TOLERANCE * x.abs().max(f64::MIN_POSITIVE)
        });
        if stable {
            return Ok(current);
        }
        if slack >= MAX_SLACK {
            return Err(SolverError::TailRecurrence { from, slack });
        }
        previous = current;
    }
}

fn backward_fraction(params: &KernelParams, from: usize, count: usize, slack: usize) -> Vec<f64> {
    let outflow = |j: usize| 1.0 + params.gain(j) + params.loss(j);
    let end = from + count + slack;
    let mut ratio = 0.0;
    let mut out = vec![0.0; count];
    for j in (from..end).rev() {
        let denom = outflow(j + 1) - params.loss(j + 2) * ratio;
        ratio = if params.gain(j) == 0.0 { 0.0 } else { params.gain(j) / denom };
        if j < from + count {
            out[j - from] = ratio;
        }
    }
    out
}

/// Ratio `P(M+1)/P(M)` closing the head system, and `ln g(M)` for the
/// integral representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TailClosure {
    pub representation: TailRepresentation,
    pub ratio: f64,
    pub ln_g_seam: f64,
}

impl TailClosure {
    pub(crate) fn resolve(params: &KernelParams, seam: usize) -> Result<Self, SolverError> {
        match integral_closure(params, seam) {
            Ok(closure) => Ok(closure),
            Err(SolverError::RequiresLinearRoute | SolverError::Quadrature(QuadratureError::Divergent { .. })) => {
                let ratio = minimal_ratios(params, seam, 1)?[0];
                Ok(TailClosure { representation: TailRepresentation::MinimalRecurrence, ratio, ln_g_seam: 0.0 })
            }
            Err(e) => Err(e),
        }
    }
}

fn integral_closure(params: &KernelParams, seam: usize) -> Result<TailClosure, SolverError> {
    let ln_g_seam = ln_tail_integral(params, seam)?;
    let ln_g_next = ln_tail_integral(params, seam + 1)?;
    Ok(TailClosure {
        representation: TailRepresentation::Integral,
        ratio: (ln_g_next - ln_g_seam).exp(),
        ln_g_seam,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(a: f64, b: f64, abar: f64, bbar: f64) -> KernelParams {
        KernelParams::new(a, b, abar, bbar).unwrap()
    }

    #[test]
    fn branch_selection() {
        assert_eq!(TailBranch::of(&params(0.0, 1.0, 0.5, 0.0)), TailBranch::NoLinearGain);
        assert_eq!(TailBranch::of(&params(0.5, 1.0, 0.0, 0.0)), TailBranch::NoLinearLoss);
        assert_eq!(TailBranch::of(&params(0.5, 1.0, 0.5, 0.0)), TailBranch::Balanced);
        assert_eq!(TailBranch::of(&params(0.75, 0.0, 0.5, 0.0)), TailBranch::Mixed);
    }

    #[test]
    fn seam_integral_of_the_deletion_model() {
        let p = params(0.75, 0.0, 0.5, 0.0);
        assert_relative_eq!(ln_tail_integral(&p, 3).unwrap().exp(), 0.007_627_702_097_402_376, max_relative = 1e-13);
        assert_relative_eq!(ln_tail_integral(&p, 4).unwrap().exp(), 0.003_710_044_513_978_629_6, max_relative = 1e-13);
    }

    #[test]
    fn integrals_are_the_minimal_solution() {
        let cases = [
            params(0.75, 0.0, 0.5, 0.0),
            params(0.5, 0.7, 0.0, 0.5),
            params(0.5, 0.4, 0.5, 0.7),
            params(0.3, 0.0, 0.6, 0.5),
            params(0.8, 0.4, 0.3, 0.2),
        ];
        for p in cases {
            for k in [2usize, 5, 20] {
                let ratio = (ln_tail_integral(&p, k + 1).unwrap() - ln_tail_integral(&p, k).unwrap()).exp();
                let fraction = minimal_ratios(&p, k, 1).unwrap()[0];
                assert_relative_eq!(ratio, fraction, max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn reference_ratios() {
        // 40-digit evaluations of the continued fraction.
        assert_relative_eq!(
            minimal_ratios(&params(0.3, 0.0, 0.6, 0.5), 2, 1).unwrap()[0],
            0.167_386_233_522_846_34,
            max_relative = 1e-14
        );
        let group = params(0.25, 2.0, 0.5, 0.0);
        assert_relative_eq!(minimal_ratios(&group, 3, 1).unwrap()[0], 0.613_095_238_095_238_1, max_relative = 1e-14);
    }

    #[test]
    fn divergent_integral_falls_back_to_the_recurrence() {
        let group = params(0.25, 2.0, 0.5, 0.0);
        assert!(matches!(
            ln_tail_integral(&group, 3),
            Err(SolverError::Quadrature(QuadratureError::Divergent { .. }))
        ));
        let closure = TailClosure::resolve(&group, 3).unwrap();
        assert_eq!(closure.representation, TailRepresentation::MinimalRecurrence);
        let closure = TailClosure::resolve(&params(0.0, 1.0, 0.5, 0.0), 2).unwrap();
        assert_eq!(closure.representation, TailRepresentation::MinimalRecurrence);
    }

    #[test]
    fn ratios_satisfy_the_recurrence() {
        let p = params(0.4, 0.6, 0.9, 1.4);
        let r = minimal_ratios(&p, 4, 30).unwrap();
        let mut y = vec![1.0];
        for ratio in &r {
            y.push(y.last().unwrap() * ratio);
        }
        for j in 1..y.len() - 1 {
            let k = 4 + j;
            let lhs = (1.0 + p.gain(k) + p.loss(k)) * y[j];
            let rhs = p.gain(k - 1) * y[j - 1] + p.loss(k + 1) * y[j + 1];
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }
}
