//! Log-domain ratios of gamma functions.

use statrs::function::gamma::ln_gamma;

use super::QuadratureError;

/// Below this argument the ratio is taken from two log-gamma evaluations.
const STIRLING_THRESHOLD: f64 = 20.0;

/// `ln Gamma(x + a) - ln Gamma(x)` for `x > 0`, `x + a > 0`, accurate for
/// large `x` where the two log-gammas nearly cancel.
pub fn ln_gamma_ratio(x: f64, a: f64) -> Result<f64, QuadratureError> {
    if !(x > 0.0 && x + a > 0.0) || !x.is_finite() || !a.is_finite() {
        return Err(QuadratureError::DomainError(format!("ln_gamma_ratio(x = {x}, a = {a})")));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    if x.min(x + a) < STIRLING_THRESHOLD {
        return Ok(ln_gamma(x + a) - ln_gamma(x));
    }
    let y = x + a;
    let head = (x - 0.5) * (a / x).ln_1p() + a * y.ln() - a;
    Ok(head + stirling_tail(y) - stirling_tail(x))
}

/// Asymptotic series of `ln Gamma(z) - ((z - 1/2) ln z - z + ln(2 pi)/2)`.
fn stirling_tail(z: f64) -> f64 {
    const COEFFS: [f64; 6] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
    ];
    let w = 1.0 / (z * z);
    COEFFS.iter().rev().fold(0.0, |acc, &c| acc * w + c) / z
}

/// `k^gamma Gamma(k + k0) / Gamma(k + k0 + gamma)`, which tends to one as
/// `k` grows.
pub fn gamma_ratio_asymptotic(k: u64, k0: f64, gamma: f64) -> Result<f64, QuadratureError> {
    let kf = k as f64;
    if k < 1 || gamma.is_nan() || gamma < 0.0 || (kf + k0).is_nan() || kf + k0 <= 0.0 {
        return Err(QuadratureError::DomainError(format!(
            "gamma_ratio_asymptotic(k = {k}, k0 = {k0}, gamma = {gamma})"
        )));
    }
    Ok((gamma * kf.ln() - ln_gamma_ratio(kf + k0, gamma)?).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn exact_cases() {
        assert_eq!(gamma_ratio_asymptotic(17, 0.3, 0.0).unwrap(), 1.0);
        assert_relative_eq!(gamma_ratio_asymptotic(10, 0.0, 1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(ln_gamma_ratio(30.0, 1.0).unwrap(), 30f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn reference_values() {
        // 40-digit log-gamma evaluations.
        let v = gamma_ratio_asymptotic(10_000, 0.5, 4.0).unwrap();
        assert_relative_eq!(v, 0.999_200_424_810_077_5, max_relative = 1e-13);
        assert!((v - 1.0).abs() < 1e-3);
        let v = gamma_ratio_asymptotic(7, 1.3, 2.5).unwrap();
        assert_relative_eq!(v, 0.529_704_846_692_832, max_relative = 1e-13);
    }

    #[test]
    fn no_overflow_for_large_k() {
        let v = gamma_ratio_asymptotic(1_000_000, 2.0, 7.5).unwrap();
        assert!(v.is_finite() && (v - 1.0).abs() < 1e-4);
    }

    #[test]
    fn domain_errors() {
        assert!(gamma_ratio_asymptotic(0, 1.0, 1.0).is_err());
        assert!(gamma_ratio_asymptotic(1, -1.0, 1.0).is_err());
        assert!(gamma_ratio_asymptotic(3, 0.0, -1.0).is_err());
        assert!(ln_gamma_ratio(-1.0, 0.5).is_err());
    }

    #[test]
    fn branches_agree_at_the_threshold() {
        for a in [0.25, 1.5, 4.0, 11.0] {
            let x = STIRLING_THRESHOLD;
            let direct = ln_gamma(x + a) - ln_gamma(x);
            assert_relative_eq!(ln_gamma_ratio(x, a).unwrap(), direct, max_relative = 1e-13);
        }
    }

    proptest! {
        #[test]
        fn monotone_toward_one(k0 in 0.0..5.0f64, gamma in 0.1..8.0f64, k in 50u64..5_000) {
            let near = gamma_ratio_asymptotic(k, k0, gamma).unwrap();
            let far = gamma_ratio_asymptotic(4 * k, k0, gamma).unwrap();
            prop_assert!((far - 1.0).abs() <= (near - 1.0).abs() + 1e-14);
        }
    }
}
