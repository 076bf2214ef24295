//! Integration of products of algebraic and exponential endpoint factors on
//! subintervals of `[0, 1]`, extrapolation of ratios as a cutoff tends to
//! zero, and the special functions (log-gamma ratios, Hurwitz zeta) used
//! by the solver and the tail estimator.
//!
//! Integrands have the form
//!
//! ```text
//! poly(z) * z^alpha * (1 - z)^beta * |z - r|^delta * exp(phi(z))
//! ```
//!
//! where `phi` is one of `c/z`, `c z`, `c/(z - 1)` or absent. The exponents
//! are known in advance, so endpoint singularities are removed by power
//! substitutions and the interior point `r` is handled by splitting there.
//! Everything is evaluated in the log domain and results carry a separate
//! log scale.

mod gamma;
mod limit;
mod tanh_sinh;
mod zeta;

pub use gamma::{gamma_ratio_asymptotic, ln_gamma_ratio};
pub use limit::{limit_ratio_eps_to_zero, LimitEstimate, LimitOptions};
pub use zeta::{hurwitz_zeta, hurwitz_zeta_with_derivative};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("integrand is not integrable at z = {at}")]
    Divergent { at: f64 },
    #[error("invalid interval ({lo}, {hi}); need 0 <= lo < hi <= 1")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("integrand parameter is not finite")]
    NonFinite,
    #[error("quadrature did not converge: value {value:e}, error estimate {error:e}")]
    NotConverged { value: f64, error: f64 },
    #[error("limit extrapolation did not converge (last estimate {estimate:e}, spread {spread:e})")]
    NoConvergence { estimate: f64, spread: f64 },
    #[error("denominator vanishes at cutoff {eps:e}")]
    DenominatorVanishes { eps: f64 },
    #[error("gamma function argument out of domain: {0}")]
    DomainError(String),
}

/// Exponential factor of an integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpFactor {
    None,
    /// `exp(c / z)`.
    OverZ(f64),
    /// `exp(c z)`.
    Linear(f64),
    /// `exp(c / (z - 1))`.
    OverZMinusOne(f64),
}

/// Algebraic singularity `|z - at|^exponent` at an interior point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub at: f64,
    pub exponent: f64,
}

/// Description of an integrand on `[0, 1]`; see the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrandSpec {
    zero_exponent: f64,
    one_exponent: f64,
    pole: Option<Pole>,
    exp_factor: ExpFactor,
    poly: Vec<f64>,
}

impl IntegrandSpec {
    /// `z^zero_exponent (1 - z)^one_exponent`.
    pub fn new(zero_exponent: f64, one_exponent: f64) -> Self {
        IntegrandSpec {
            zero_exponent,
            one_exponent,
            pole: None,
            exp_factor: ExpFactor::None,
            poly: vec![1.0],
        }
    }

    /// Multiplies by `|z - at|^exponent`.
    pub fn with_pole(mut self, at: f64, exponent: f64) -> Self {
        self.pole = Some(Pole { at, exponent });
        self
    }

    pub fn with_exp(mut self, factor: ExpFactor) -> Self {
        self.exp_factor = factor;
        self
    }

    /// Multiplies by `sum_j coeffs[j] z^j`.
    pub fn with_poly(mut self, coeffs: Vec<f64>) -> Self {
        self.poly = coeffs;
        self
    }

    pub fn zero_exponent(&self) -> f64 {
        self.zero_exponent
    }

    pub fn one_exponent(&self) -> f64 {
        self.one_exponent
    }

    pub fn pole(&self) -> Option<Pole> {
        self.pole
    }

    pub fn exp_factor(&self) -> ExpFactor {
        self.exp_factor
    }

    pub fn poly(&self) -> &[f64] {
        &self.poly
    }

    /// Pointwise value, for diagnostics and tests.
    pub fn eval(&self, z: f64) -> f64 {
        let at = self.pole.map_or(f64::NAN, |p| (z - p.at).abs());
        let (ln_mag, sign) = self.ln_abs(Point { ln_z: z.ln(), ln_one_minus: (-z).ln_1p(), ln_pole: at.ln(), z });
        sign * ln_mag.exp()
    }

    fn validate(&self) -> Result<(), QuadratureError> {
        let exp_coeff = match self.exp_factor {
            ExpFactor::None => 0.0,
            ExpFactor::OverZ(c) | ExpFactor::Linear(c) | ExpFactor::OverZMinusOne(c) => c,
        };
        let pole_ok = self.pole.is_none_or(|p| p.at.is_finite() && p.exponent.is_finite());
        if self.zero_exponent.is_finite()
            && self.one_exponent.is_finite()
            && exp_coeff.is_finite()
            && pole_ok
            && self.poly.iter().all(|c| c.is_finite())
        {
            Ok(())
        } else {
            Err(QuadratureError::NonFinite)
        }
    }

    /// Algebraic order of the integrand at `z = 0`, including zeros of the
    /// polynomial factor; `None` when an exponential factor dominates.
    fn order_at_zero(&self) -> EndpointOrder {
        match self.exp_factor {
            ExpFactor::OverZ(c) if c > 0.0 => return EndpointOrder::Blowup,
            ExpFactor::OverZ(c) if c < 0.0 => return EndpointOrder::Flat,
            _ => {}
        }
        let vanishing = self.poly.iter().take_while(|&&c| c == 0.0).count();
        let mut order = self.zero_exponent + vanishing as f64;
        if let Some(p) = self.pole.filter(|p| p.at == 0.0) {
            order += p.exponent;
        }
        EndpointOrder::Power(order)
    }

    fn order_at_one(&self) -> EndpointOrder {
        match self.exp_factor {
            ExpFactor::OverZMinusOne(c) if c < 0.0 => return EndpointOrder::Blowup,
            ExpFactor::OverZMinusOne(c) if c > 0.0 => return EndpointOrder::Flat,
            _ => {}
        }
        let mut order = self.one_exponent;
        if let Some(p) = self.pole.filter(|p| p.at == 1.0) {
            order += p.exponent;
        }
        EndpointOrder::Power(order)
    }

    fn order_at(&self, x: f64) -> EndpointOrder {
        if x == 0.0 {
            return self.order_at_zero();
        }
        if x == 1.0 {
            return self.order_at_one();
        }
        match self.pole {
            Some(p) if p.at == x => EndpointOrder::Power(p.exponent),
            _ => EndpointOrder::Power(0.0),
        }
    }

    /// `ln |f|` and the sign of `f` at a point given by exact log-distances.
    fn ln_abs(&self, pt: Point) -> (f64, f64) {
        let mut ln = 0.0;
        if self.zero_exponent != 0.0 {
            ln += self.zero_exponent * pt.ln_z;
        }
        if self.one_exponent != 0.0 {
            ln += self.one_exponent * pt.ln_one_minus;
        }
        if let Some(p) = self.pole {
            if p.exponent != 0.0 {
                ln += p.exponent * pt.ln_pole;
            }
        }
        ln += match self.exp_factor {
            ExpFactor::None => 0.0,
            ExpFactor::OverZ(c) => c * (-pt.ln_z).exp(),
            ExpFactor::Linear(c) => c * pt.z,
            ExpFactor::OverZMinusOne(c) => -c * (-pt.ln_one_minus).exp(),
        };
        let sign = match self.poly.as_slice() {
            [] => 0.0,
            [c] => {
                ln += c.abs().ln();
                c.signum()
            }
            coeffs => {
                let value = coeffs.iter().rev().fold(0.0, |acc, &c| acc * pt.z + c);
                ln += value.abs().ln();
                value.signum()
            }
        };
        if ln.is_nan() {
            // 0 * inf from a vanishing factor against a divergent one.
            return (f64::NEG_INFINITY, 0.0);
        }
        (ln, sign)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EndpointOrder {
    Power(f64),
    /// Decays faster than any power.
    Flat,
    /// Grows faster than any power.
    Blowup,
}

/// An abscissa with its log-distances to 0, 1 and the pole.
#[derive(Debug, Clone, Copy)]
struct Point {
    z: f64,
    ln_z: f64,
    ln_one_minus: f64,
    ln_pole: f64,
}

/// Result of [`integrate_singular`]. The integral is `value * exp(ln_scale)`
/// and the error estimate is in the same scaled units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub ln_scale: f64,
    pub abs_error_estimate: f64,
    pub converged: bool,
    pub evaluations: usize,
}

impl QuadratureResult {
    /// The integral as a plain number; may overflow or underflow.
    pub fn total(&self) -> f64 {
        self.value * self.ln_scale.exp()
    }

    /// `ln |integral|`.
    pub fn ln_abs(&self) -> f64 {
        self.value.abs().ln() + self.ln_scale
    }

    /// Turns an unconverged result into [`QuadratureError::NotConverged`].
    pub fn require_converged(self) -> Result<Self, QuadratureError> {
        if self.converged {
            Ok(self)
        } else {
            Err(QuadratureError::NotConverged { value: self.total(), error: self.abs_error_estimate })
        }
    }
}

/// Default relative tolerance for solver integrals.
pub const DEFAULT_TOLERANCE: f64 = 1e-13;

/// Integrates `spec` over `(lo, hi)` to relative tolerance `tol`.
///
/// Divergence at an included endpoint or an enclosed pole is reported before
/// any evaluation. Exhausting the refinement budget yields a result with
/// `converged == false`.
pub fn integrate_singular(
    spec: &IntegrandSpec,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<QuadratureResult, QuadratureError> {
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(QuadratureError::InvalidInterval { lo, hi });
    }
    spec.validate()?;
    let mut breaks = vec![lo];
    if let Some(p) = spec.pole {
        if p.at > lo && p.at < hi {
            breaks.push(p.at);
        }
        if p.at >= lo && p.at <= hi && p.exponent <= -1.0 {
            return Err(QuadratureError::Divergent { at: p.at });
        }
    }
    breaks.push(hi);
    for &x in &[lo, hi] {
        match spec.order_at(x) {
            EndpointOrder::Blowup => return Err(QuadratureError::Divergent { at: x }),
            EndpointOrder::Power(e) if e <= -1.0 => return Err(QuadratureError::Divergent { at: x }),
            _ => {}
        }
    }

    let mut pieces = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let power_a = substitution_power(spec.order_at(a));
        let power_b = substitution_power(spec.order_at(b));
        if power_a == 1.0 && power_b == 1.0 {
            pieces.push(tanh_sinh::Piece::linear(a, b));
        } else {
            let mid = 0.5 * (a + b);
            pieces.push(tanh_sinh::Piece::power_left(a, mid, power_a));
            pieces.push(tanh_sinh::Piece::power_right(mid, b, power_b));
        }
    }
    Ok(tanh_sinh::integrate(spec, &pieces, spec.pole.map(|p| p.at), tol))
}

/// Exponent `p` of the substitution `x = a + L u^p` that makes an endpoint
/// singularity of order `e` bounded.
fn substitution_power(order: EndpointOrder) -> f64 {
    match order {
        EndpointOrder::Power(e) if e < -0.5 => 1.0 / (1.0 + e),
        _ => 1.0,
    }
}
