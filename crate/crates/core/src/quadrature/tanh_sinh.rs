//! Tanh-sinh rule with level halving, evaluated in the log domain.
//!
//! On each piece `[a, b]` the abscissa is `u = 1 / (1 + exp(-pi sinh t))`,
//! whose complement `1 - u` is available without cancellation, optionally
//! composed with a power map that flattens an endpoint singularity.

use std::f64::consts::PI;

use super::{IntegrandSpec, Point, QuadratureResult};

const T_MAX: f64 = 6.5;
const FIRST_STEP: f64 = 0.5;
const MIN_LEVEL: usize = 3;
const MAX_LEVEL: usize = 11;
/// Contributions below `exp(-NEGLIGIBLE)` times the largest are dropped.
const NEGLIGIBLE: f64 = 90.0;
/// Rescale the running sums once magnitudes drift this far from the shift.
const RESCALE: f64 = 300.0;

#[derive(Debug, Clone, Copy)]
enum Map {
    Linear,
    /// `x = a + L u^p`.
    PowerLeft(f64),
    /// `x = b - L (1 - u)^p`.
    PowerRight(f64),
}

#[derive(Debug, Clone, Copy)]
pub(super) struct Piece {
    a: f64,
    b: f64,
    map: Map,
}

impl Piece {
    pub(super) fn linear(a: f64, b: f64) -> Self {
        Piece { a, b, map: Map::Linear }
    }

    pub(super) fn power_left(a: f64, b: f64, p: f64) -> Self {
        Piece { a, b, map: if p == 1.0 { Map::Linear } else { Map::PowerLeft(p) } }
    }

    pub(super) fn power_right(a: f64, b: f64, p: f64) -> Self {
        Piece { a, b, map: if p == 1.0 { Map::Linear } else { Map::PowerRight(p) } }
    }

    /// Abscissa and `ln(dx/dt)` at node `t`.
    fn node(&self, t: f64, pole: Option<f64>) -> (Point, f64) {
        let s = PI * t.sinh();
        let ln_u = -softplus(-s);
        let ln_v = -softplus(s);
        let ln_len = (self.b - self.a).ln();
        let ln_dudt = (PI * t.cosh()).ln() + ln_u + ln_v;
        let (ln_from_a, ln_to_b, ln_jac) = match self.map {
            Map::Linear => (ln_len + ln_u, ln_len + ln_v, ln_len),
            Map::PowerLeft(p) => {
                let lp = p * ln_u;
                (ln_len + lp, ln_len + (-lp.exp_m1()).ln(), p.ln() + ln_len + (p - 1.0) * ln_u)
            }
            Map::PowerRight(p) => {
                let lp = p * ln_v;
                (ln_len + (-lp.exp_m1()).ln(), ln_len + lp, p.ln() + ln_len + (p - 1.0) * ln_v)
            }
        };
        let from_a = ln_from_a.exp();
        let to_b = ln_to_b.exp();
        let z = if from_a <= to_b { self.a + from_a } else { self.b - to_b };
        let ln_z = if self.a == 0.0 { ln_from_a } else { z.ln() };
        let ln_one_minus = if self.b == 1.0 { ln_to_b } else { (-z).ln_1p() };
        let ln_pole = match pole {
            Some(r) if r == self.a => ln_from_a,
            Some(r) if r == self.b => ln_to_b,
            Some(r) => (z - r).abs().ln(),
            None => f64::NAN,
        };
        (Point { z, ln_z, ln_one_minus, ln_pole }, ln_jac + ln_dudt)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

struct Accumulator {
    shift: f64,
    sum: f64,
    largest: f64,
    evaluations: usize,
}

impl Accumulator {
    fn add(&mut self, ln_mag: f64, sign: f64) {
        self.evaluations += 1;
        if sign == 0.0 || ln_mag == f64::NEG_INFINITY {
            return;
        }
        if ln_mag > self.shift + RESCALE || self.shift == f64::NEG_INFINITY {
            if self.shift != f64::NEG_INFINITY {
                self.sum *= (self.shift - ln_mag).exp();
            }
            self.shift = ln_mag;
        }
        self.largest = self.largest.max(ln_mag);
        self.sum += sign * (ln_mag - self.shift).exp();
    }
}

pub(super) fn integrate(
    spec: &IntegrandSpec,
    pieces: &[Piece],
    pole: Option<f64>,
    tol: f64,
) -> QuadratureResult {
    let mut acc = Accumulator { shift: f64::NEG_INFINITY, sum: 0.0, largest: f64::NEG_INFINITY, evaluations: 0 };
    let n0 = (T_MAX / FIRST_STEP).ceil() as i64;

    // Level 0 on the full window, recording which nodes matter.
    let mut level0 = Vec::with_capacity(pieces.len());
    for piece in pieces {
        let mut contribs = Vec::with_capacity((2 * n0 + 1) as usize);
        for j in -n0..=n0 {
            let t = j as f64 * FIRST_STEP;
            let (pt, ln_w) = piece.node(t, pole);
            let (ln_f, sign) = spec.ln_abs(pt);
            let ln_c = ln_f + ln_w;
            acc.add(ln_c, sign);
            contribs.push((t, ln_c));
        }
        level0.push(contribs);
    }
    let cutoff = acc.largest - NEGLIGIBLE;
    let windows: Vec<(f64, f64)> = level0
        .iter()
        .map(|contribs| {
            let live: Vec<f64> = contribs.iter().filter(|(_, c)| *c > cutoff).map(|(t, _)| *t).collect();
            match (live.first(), live.last()) {
                (Some(&lo), Some(&hi)) => ((lo - 1.0).max(-T_MAX), (hi + 1.0).min(T_MAX)),
                _ => (1.0, -1.0),
            }
        })
        .collect();

    let mut step = FIRST_STEP;
    let mut estimate = acc.sum * step;
    let mut estimate_shift = acc.shift;
    let mut error = f64::INFINITY;
    let mut converged = false;
    for level in 1..=MAX_LEVEL {
        step *= 0.5;
        for (piece, &(lo, hi)) in pieces.iter().zip(&windows) {
            if lo > hi {
                continue;
            }
            let mut j = ((lo / step).floor() as i64) | 1;
            while j as f64 * step <= hi {
                let (pt, ln_w) = piece.node(j as f64 * step, pole);
                let (ln_f, sign) = spec.ln_abs(pt);
                acc.add(ln_f + ln_w, sign);
                j += 2;
            }
        }
        let refined = acc.sum * step;
        let previous = if estimate == 0.0 { 0.0 } else { estimate * (estimate_shift - acc.shift).exp() };
        error = (refined - previous).abs();
        estimate = refined;
        estimate_shift = acc.shift;
        if level >= MIN_LEVEL && error <= tol * refined.abs() {
            converged = true;
            break;
        }
    }
    if estimate == 0.0 || acc.shift == f64::NEG_INFINITY {
        // Identically zero integrand.
        return QuadratureResult {
            value: 0.0,
            ln_scale: 0.0,
            abs_error_estimate: if acc.shift == f64::NEG_INFINITY { 0.0 } else { error },
            converged: acc.shift == f64::NEG_INFINITY || error == 0.0,
            evaluations: acc.evaluations,
        };
    }
    // Normalize so that |value| = 1.
    let magnitude = estimate.abs();
    QuadratureResult {
        value: estimate.signum(),
        ln_scale: estimate_shift + magnitude.ln(),
        abs_error_estimate: error / magnitude,
        converged,
        evaluations: acc.evaluations,
    }
}
