//! Quadratic penalties for the drug-concentration box constraints.
//!
//! The hard constraints `s <= s_plus` on `(0, T)` and `s >= s_minus` on
//! `(t0, T)` are replaced by one-sided quadratic violation terms weighted by
//! `1/eps` in the objective. Both penalties are C^1: value and derivative are
//! continuous at the bound, which the adjoint equation relies on.

/// Upper-bound penalty: `0` for `s <= s_plus`, `(s - s_plus)^2` above.
pub fn f1(s: f64, s_plus: f64) -> f64 {
    let v = s - s_plus;
    if v > 0.0 { v * v } else { 0.0 }
}

/// Derivative of [`f1`].
pub fn f1_prime(s: f64, s_plus: f64) -> f64 {
    let v = s - s_plus;
    if v > 0.0 { 2.0 * v } else { 0.0 }
}

/// Lower-bound penalty: `0` for `s >= s_minus`, `(s - s_minus)^2` below.
pub fn f2(s: f64, s_minus: f64) -> f64 {
    let v = s - s_minus;
    if v < 0.0 { v * v } else { 0.0 }
}

/// Derivative of [`f2`].
pub fn f2_prime(s: f64, s_minus: f64) -> f64 {
    let v = s - s_minus;
    if v < 0.0 { 2.0 * v } else { 0.0 }
}

/// Time-gated lower-bound penalty derivative: `f2'(s)` for `t >= t0`, else 0.
/// This is the lower-constraint source entering the dual concentration
/// equation.
pub fn chi(s: f64, t: f64, t0: f64, s_minus: f64) -> f64 {
    if t >= t0 { f2_prime(s, s_minus) } else { 0.0 }
}
