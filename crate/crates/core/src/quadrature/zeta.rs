//! Hurwitz zeta function and its derivative in the exponent, by
//! Euler-Maclaurin summation.

use super::QuadratureError;

/// `B_{2j} / (2j)!` for `j = 1..=10`.
const BERNOULLI_OVER_FACTORIAL: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
    1.0 / 74_724_249_600.0,
    -3617.0 / 10_670_622_842_880_000.0,
    43_867.0 / 5_109_094_217_170_944_000.0,
    -174_611.0 / 802_857_662_698_291_200_000.0,
];

/// `(zeta(s, q), d zeta(s, q) / ds)` where `zeta(s, q) = sum_{n >= 0} (n + q)^-s`.
pub fn hurwitz_zeta_with_derivative(s: f64, q: f64) -> Result<(f64, f64), QuadratureError> {
    if !(s > 1.0 && q > 0.0) || !s.is_finite() || !q.is_finite() {
        return Err(QuadratureError::DomainError(format!("hurwitz_zeta(s = {s}, q = {q})")));
    }
    let direct_terms = ((20.0 + s) - q).ceil().max(0.0) as usize;
    let mut value = 0.0;
    let mut derivative = 0.0;
    // Sum from the smallest terms up.
    for n in (0..direct_terms).rev() {
        let x = q + n as f64;
        let ln_x = x.ln();
        let term = (-s * ln_x).exp();
        value += term;
        derivative -= ln_x * term;
    }
    let a = q + direct_terms as f64;
    let ln_a = a.ln();
    let a_pow = (-s * ln_a).exp();
    value += a * a_pow / (s - 1.0) + 0.5 * a_pow;
    derivative += -a * a_pow * ln_a / (s - 1.0) - a * a_pow / ((s - 1.0) * (s - 1.0)) - 0.5 * a_pow * ln_a;

    // Terms B_{2j}/(2j)! (s)_{2j-1} a^{-s-2j+1}.
    let mut rising = s;
    let mut rising_log_derivative = 1.0 / s;
    let mut power = a_pow / a;
    for (j, &c) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        if j > 0 {
            let (lo, hi) = (s + (2 * j - 1) as f64, s + (2 * j) as f64);
            rising *= lo * hi;
            rising_log_derivative += 1.0 / lo + 1.0 / hi;
            power /= a * a;
        }
        let term = c * rising * power;
        value += term;
        derivative += term * (rising_log_derivative - ln_a);
    }
    Ok((value, derivative))
}

/// `zeta(s, q)` for `s > 1`, `q > 0`.
pub fn hurwitz_zeta(s: f64, q: f64) -> Result<f64, QuadratureError> {
    hurwitz_zeta_with_derivative(s, q).map(|(v, _)| v)
}
