//! Tumor growth law `d(s)`.
//!
//! The reaction coefficient must change sign at the critical concentration
//! `s_m`: growth below it, kill above it, i.e. `d(s) * (s - s_m) < 0` for
//! `s != s_m`, and it must be Lipschitz on bounded sets. The default is the
//! linear law `d(s) = rho * (1 - s / s_m)`, which satisfies both with global
//! Lipschitz constant `rho / s_m`. A piecewise-linear table law is available
//! for measured dose-response data; its sign and Lipschitz conditions are
//! validated at construction.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GrowthLaw {
    /// `d(s) = rho * (1 - s / s_m)`.
    Linear { rho: f64, s_m: f64 },
    /// Piecewise-linear interpolant through `(s_i, d_i)` knots, extended by
    /// its end slopes outside the knot range.
    Table { knots: Vec<[f64; 2]>, s_m: f64 },
}

impl GrowthLaw {
    pub fn linear(rho: f64, s_m: f64) -> Self {
        GrowthLaw::Linear { rho, s_m }
    }

    /// Builds a table law and validates the sign condition at knots and
    /// segment midpoints over the knot range.
    pub fn table(knots: Vec<[f64; 2]>, s_m: f64) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::config("growth.table", "needs at least two knots"));
        }
        for w in knots.windows(2) {
            if w[1][0] <= w[0][0] {
                return Err(Error::config(
                    "growth.table",
                    "knot abscissae must be strictly increasing",
                ));
            }
        }
        let law = GrowthLaw::Table { knots, s_m };
        law.validate_sign()?;
        Ok(law)
    }

    pub fn s_m(&self) -> f64 {
        match self {
            GrowthLaw::Linear { s_m, .. } | GrowthLaw::Table { s_m, .. } => *s_m,
        }
    }

    /// Reaction rate `d(s)` (1/day). Total on finite inputs.
    pub fn rate(&self, s: f64) -> f64 {
        match self {
            GrowthLaw::Linear { rho, s_m } => rho * (1.0 - s / s_m),
            GrowthLaw::Table { knots, .. } => {
                let n = knots.len();
                if s <= knots[0][0] {
                    return extrapolate(&knots[0], &knots[1], s);
                }
                if s >= knots[n - 1][0] {
                    return extrapolate(&knots[n - 2], &knots[n - 1], s);
                }
                let seg = knots.windows(2).find(|w| s <= w[1][0]).unwrap();
                extrapolate(&seg[0], &seg[1], s)
            }
        }
    }

    /// Derivative `d'(s)`. The linear law is differentiable everywhere with
    /// constant slope `-rho / s_m`; the table law reports knot abscissae as
    /// non-differentiable points.
    pub fn rate_prime(&self, s: f64) -> Result<f64> {
        match self {
            GrowthLaw::Linear { rho, s_m } => Ok(-rho / s_m),
            GrowthLaw::Table { knots, .. } => {
                let n = knots.len();
                // Interior knots are genuine kinks; the outermost knots join
                // smoothly with the extrapolated tails.
                if knots[1..n - 1]
                    .iter()
                    .any(|k| (k[0] - s).abs() <= 1e-12 * (1.0 + s.abs()))
                {
                    return Err(Error::NotDifferentiable(s));
                }
                if s <= knots[0][0] {
                    return Ok(slope(&knots[0], &knots[1]));
                }
                if s >= knots[n - 1][0] {
                    return Ok(slope(&knots[n - 2], &knots[n - 1]));
                }
                let seg = knots.windows(2).find(|w| s <= w[1][0]).unwrap();
                Ok(slope(&seg[0], &seg[1]))
            }
        }
    }

    /// Lipschitz constant of `d` on `[-a, a]`.
    pub fn lipschitz(&self, a: f64) -> f64 {
        match self {
            GrowthLaw::Linear { rho, s_m } => (rho / s_m).abs(),
            GrowthLaw::Table { knots, .. } => {
                let mut max_slope: f64 = 0.0;
                for w in knots.windows(2) {
                    // Segments fully outside [-a, a] still bound the tails.
                    if w[1][0] >= -a || w[0][0] <= a {
                        max_slope = max_slope.max(slope(&w[0], &w[1]).abs());
                    }
                }
                max_slope
            }
        }
    }

    /// Largest reaction rate over `s >= 0`; used by the positivity guard
    /// `dt * sup d < 1` of the implicit Euler step.
    pub fn sup_rate_nonneg(&self) -> f64 {
        match self {
            // Decreasing in s, so the supremum over s >= 0 sits at s = 0.
            GrowthLaw::Linear { rho, .. } => *rho,
            GrowthLaw::Table { knots, .. } => {
                let mut sup = self.rate(0.0);
                for k in knots {
                    if k[0] >= 0.0 {
                        sup = sup.max(k[1]);
                    }
                }
                sup
            }
        }
    }

    fn validate_sign(&self) -> Result<()> {
        let s_m = self.s_m();
        let mut probes = Vec::new();
        if let GrowthLaw::Table { knots, .. } = self {
            for k in knots {
                probes.push(k[0]);
            }
            for w in knots.windows(2) {
                probes.push(0.5 * (w[0][0] + w[1][0]));
            }
        }
        for s in probes {
            if (s - s_m).abs() < 1e-12 {
                continue;
            }
            if self.rate(s) * (s - s_m) >= 0.0 {
                return Err(Error::config(
                    "growth.table",
                    format!("sign condition d(s)(s - s_m) < 0 fails at s = {s}"),
                ));
            }
        }
        Ok(())
    }
}

fn slope(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (b[1] - a[1]) / (b[0] - a[0])
}

fn extrapolate(a: &[f64; 2], b: &[f64; 2], s: f64) -> f64 {
    a[1] + slope(a, b) * (s - a[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_rate_values() {
        let law = GrowthLaw::linear(0.1, 0.2);
        assert_eq!(law.rate(0.2), 0.0);
        assert_eq!(law.rate(0.0), 0.1);
        assert!((law.rate(0.4) - (-0.1)).abs() < 1e-15);
    }

    #[test]
    fn linear_rate_prime_is_constant() {
        let law = GrowthLaw::linear(0.1, 0.2);
        assert!((law.rate_prime(0.5).unwrap() - (-0.5)).abs() < 1e-15);
        let law2 = GrowthLaw::linear(0.2, 0.2);
        for s in [-1.0, 0.0, 0.3, 7.0] {
            assert!((law2.rate_prime(s).unwrap() - (-1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn rate_prime_matches_central_difference() {
        let law = GrowthLaw::linear(0.13, 0.2);
        let h = 1e-5;
        for s in [-0.7, 0.0, 0.2, 0.9] {
            let fd = (law.rate(s + h) - law.rate(s - h)) / (2.0 * h);
            assert!((fd - law.rate_prime(s).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn sign_condition_sampled() {
        let law = GrowthLaw::linear(0.1, 0.2);
        let n = 10_000;
        for i in 0..=n {
            let s = -2.0 + 4.0 * i as f64 / n as f64;
            if (s - 0.2).abs() < 1e-9 {
                continue;
            }
            assert!(
                law.rate(s) * (s - 0.2) < 0.0,
                "sign condition fails at s = {s}"
            );
        }
    }

    #[test]
    fn table_law_interpolates_and_validates() {
        let law = GrowthLaw::table(vec![[0.0, 0.1], [0.2, 0.0], [1.0, -0.4]], 0.2).unwrap();
        assert!((law.rate(0.1) - 0.05).abs() < 1e-15);
        assert!((law.rate(0.6) - (-0.2)).abs() < 1e-15);
        // Extrapolation by end slopes.
        assert!((law.rate(-0.2) - 0.2).abs() < 1e-15);
        assert!((law.rate(1.2) - (-0.5)).abs() < 1e-15);

        // Slope inside a segment, error at the interior kink.
        assert!((law.rate_prime(0.5).unwrap() - (-0.5)).abs() < 1e-15);
        assert!(matches!(
            law.rate_prime(0.2),
            Err(Error::NotDifferentiable(_))
        ));
    }

    #[test]
    fn table_law_rejects_wrong_sign() {
        // Positive rate above s_m violates the sign condition.
        let r = GrowthLaw::table(vec![[0.0, 0.1], [0.5, 0.2]], 0.2);
        assert!(r.is_err());
    }

    #[test]
    fn lipschitz_bounds_differences() {
        let law = GrowthLaw::linear(0.1, 0.2);
        let l = law.lipschitz(2.0);
        for (s1, s2) in [(0.0, 1.0), (-2.0, 2.0), (0.19, 0.21)] {
            assert!((law.rate(s1) - law.rate(s2)).abs() <= l * (s1 - s2).abs() + 1e-15);
        }
    }
}
