//! Richardson extrapolation of a ratio as a cutoff `eps` tends to zero.

use super::QuadratureError;

/// Cutoff schedule and known error exponents for [`limit_ratio_eps_to_zero`].
#[derive(Debug, Clone, PartialEq)]
pub struct LimitOptions {
    /// Largest cutoff; later cutoffs halve it.
    pub eps0: f64,
    pub levels: usize,
    /// Ascending exponents `p` of the error terms `eps^p`.
    pub orders: Vec<f64>,
    pub rel_tol: f64,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions { eps0: 1e-2, levels: 24, orders: (1..=12).map(f64::from).collect(), rel_tol: 1e-10 }
    }
}

impl LimitOptions {
    /// The cutoffs `eps0 / 2^j`.
    pub fn eps_sequence(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.levels).map(|j| self.eps0 * 0.5f64.powi(j as i32))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitEstimate {
    pub value: f64,
    pub error_estimate: f64,
    pub levels_used: usize,
}

/// Limit of `num(eps) / den(eps)` as `eps -> 0`, where `parts(eps)` returns
/// `(num, den)` up to a common positive factor.
///
/// Consecutive diagonal extrapolants must agree to `rel_tol`; otherwise the
/// result is [`QuadratureError::NoConvergence`].
pub fn limit_ratio_eps_to_zero<F>(mut parts: F, opts: &LimitOptions) -> Result<LimitEstimate, QuadratureError>
where
    F: FnMut(f64) -> Result<(f64, f64), QuadratureError>,
{
    let factors: Vec<f64> = opts.orders.iter().map(|p| 2f64.powf(*p) - 1.0).collect();
    let mut previous_row: Vec<f64> = Vec::new();
    let mut previous_diag = f64::NAN;
    let mut spread = f64::INFINITY;
    for (j, eps) in opts.eps_sequence().enumerate() {
        let (num, den) = parts(eps)?;
        if den == 0.0 || !den.is_finite() || !num.is_finite() {
            return Err(QuadratureError::DenominatorVanishes { eps });
        }
        let mut row = Vec::with_capacity(j.min(factors.len()) + 1);
        row.push(num / den);
        for i in 1..=j.min(factors.len()) {
            let t = row[i - 1] + (row[i - 1] - previous_row[i - 1]) / factors[i - 1];
            row.push(t);
        }
        let diag = *row.last().expect("row is non-empty");
        if j >= 1 {
            spread = (diag - previous_diag).abs();
            if j >= 3 && spread <= opts.rel_tol * diag.abs() {
                return Ok(LimitEstimate { value: diag, error_estimate: spread, levels_used: j + 1 });
            }
        }
        previous_diag = diag;
        previous_row = row;
    }
    Err(QuadratureError::NoConvergence { estimate: previous_diag, spread })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_probe() {
        let est = limit_ratio_eps_to_zero(|e| Ok((e + 0.25, 1.0)), &LimitOptions::default()).unwrap();
        assert_relative_eq!(est.value, 0.25, max_relative = 1e-14);
    }

    #[test]
    fn fractional_orders() {
        // (1 + eps^0.3 + eps^1.3) / (2 + eps^0.3)
        let opts = LimitOptions { orders: vec![0.3, 0.6, 0.9, 1.2, 1.3, 1.5, 1.6, 1.8, 1.9, 2.1], ..Default::default() };
        let est = limit_ratio_eps_to_zero(
            |e: f64| Ok((1.0 + e.powf(0.3) + e.powf(1.3), 2.0 + e.powf(0.3))),
            &opts,
        )
        .unwrap();
        assert_relative_eq!(est.value, 0.5, max_relative = 1e-9);
    }

    #[test]
    fn vanishing_denominator() {
        let err = limit_ratio_eps_to_zero(|_| Ok((1.0, 0.0)), &LimitOptions::default()).unwrap_err();
        assert!(matches!(err, QuadratureError::DenominatorVanishes { .. }));
    }

    #[test]
    fn oscillation_is_refused() {
        let err = limit_ratio_eps_to_zero(|e: f64| Ok(((1.0 / e).ln().sin(), 1.0)), &LimitOptions::default())
            .unwrap_err();
        assert!(matches!(err, QuadratureError::NoConvergence { .. }));
    }

    #[test]
    fn errors_from_parts_propagate() {
        let err = limit_ratio_eps_to_zero(|_| Err(QuadratureError::Divergent { at: 0.0 }), &LimitOptions::default())
            .unwrap_err();
        assert_eq!(err, QuadratureError::Divergent { at: 0.0 });
    }
}
