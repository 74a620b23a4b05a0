//! Model parameters, the constant-control feasibility test, and the
//! guaranteed-feasible reference control.
//!
//! A constant control `u` produces the concentration
//! `s(t) = u (1 - e^(-M0 t)) / M0`, which is increasing in `t`. Demanding
//! `s(t0) = s_minus` yields `u = M0 s_minus / (1 - e^(-M0 t0))`; the induced
//! trajectory then satisfies the lower bound on `[t0, T]`, and it satisfies
//! the upper bound on `[0, T]` exactly when
//!
//! ```text
//! (1 - e^(-M0 T)) / (1 - e^(-M0 t0)) * s_minus <= s_plus.
//! ```
//!
//! That inequality is the feasibility condition checked here; when it holds,
//! the reference control doubles as an optimizer warm start and test fixture.

use crate::error::{Error, Result};
use crate::growth::GrowthLaw;
use crate::mesh::{Control, TimeMesh};

/// Scalar model constants. All times in days, lengths in cm; `s` quantities
/// are normalized concentrations.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Drug clearance rate (1/day).
    pub m0: f64,
    /// Control regularization weight.
    pub lambda: f64,
    /// Penalty coefficient.
    pub eps: f64,
    /// Lower drug bound, active on `[t0, T]`.
    pub s_minus: f64,
    /// Upper drug bound, active on `[0, T]`.
    pub s_plus: f64,
    /// Lower-constraint activation time (day).
    pub t0: f64,
    /// Horizon (day).
    pub t_end: f64,
    /// Growth law `d(s)`; its zero crossing is the critical concentration.
    pub growth: GrowthLaw,
    /// Gradient step.
    pub delta: f64,
    /// Maximum optimizer iterations.
    pub max_iters: usize,
    /// Stopping tolerance on the objective decrease, relative to the initial
    /// objective value.
    pub tol_rel: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.m0 > 0.0) {
            return Err(Error::config("model.m0", "must be positive"));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::config("model.lambda", "must be positive"));
        }
        if !(self.eps > 0.0) {
            return Err(Error::config("model.eps", "must be positive"));
        }
        if !(self.s_minus > 0.0 && self.s_minus < self.s_plus) {
            return Err(Error::config(
                "model.s_minus/s_plus",
                "need 0 < s_minus < s_plus",
            ));
        }
        if !(self.t0 > 0.0 && self.t0 < self.t_end) {
            return Err(Error::config("model.t0", "need 0 < t0 < T"));
        }
        match &self.growth {
            GrowthLaw::Linear { rho, s_m } => {
                if !(*rho > 0.0) {
                    return Err(Error::config("growth.rho", "must be positive"));
                }
                if !(*s_m > 0.0) {
                    return Err(Error::config("growth.s_m", "must be positive"));
                }
            }
            GrowthLaw::Table { .. } => {} // validated at construction
        }
        if !(self.delta > 0.0) {
            return Err(Error::config("optimizer.delta", "must be positive"));
        }
        if !(self.tol_rel > 0.0) {
            return Err(Error::config("optimizer.tol_rel", "must be positive"));
        }
        Ok(())
    }
}

/// Both sides of the constant-control feasibility inequality and the verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    /// `(1 - e^(-M0 T)) / (1 - e^(-M0 t0)) * s_minus`
    pub lhs: f64,
    /// `s_plus`
    pub rhs: f64,
    pub feasible: bool,
}

/// Left side of the feasibility inequality as a pure function of the scalars.
pub fn feasibility_lhs(m0: f64, t_end: f64, t0: f64, s_minus: f64) -> f64 {
    (1.0 - (-m0 * t_end).exp()) / (1.0 - (-m0 * t0).exp()) * s_minus
}

/// Evaluates the feasibility condition for a parameter set.
pub fn check_feasibility(p: &ModelParams) -> FeasibilityReport {
    let lhs = feasibility_lhs(p.m0, p.t_end, p.t0, p.s_minus);
    FeasibilityReport {
        lhs,
        rhs: p.s_plus,
        feasible: lhs <= p.s_plus,
    }
}

/// The constant control `u = M0 s_minus / (1 - e^(-M0 t0))`, whose induced
/// concentration reaches `s_minus` exactly at `t0` and stays within
/// `[s_minus, s_plus]` on `[t0, T]` whenever the feasibility condition holds.
pub fn reference_constant_control(p: &ModelParams, mesh: &TimeMesh) -> Result<Control> {
    let report = check_feasibility(p);
    if !report.feasible {
        return Err(Error::Infeasible {
            lhs: report.lhs,
            rhs: report.rhs,
        });
    }
    let u = p.m0 * p.s_minus / (1.0 - (-p.m0 * p.t0).exp());
    Ok(Control::constant(mesh, u))
}
