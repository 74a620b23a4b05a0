//! Gradient descent on the penalized objective with the descent-based
//! stopping rule.
//!
//! Each iteration solves the forward system for the current control, records
//! the objective and constraint diagnostics, solves the dual system, and
//! updates `u <- u - delta (lambda u - p2)`. The loop stops when the
//! objective decrease falls below the tolerance, or after the configured
//! iteration budget. Three consecutive objective increases abort the run
//! with a divergence diagnostic (the step `delta` is chosen empirically, and
//! too large a value oscillates). The returned control is the best iterate
//! by objective value, which is robust to a final overshoot.

use crate::error::{Error, Result};
use crate::mesh::{Control, TimeMesh};
use crate::objective;
use crate::problem::Problem;

/// Per-iteration log entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    pub j: f64,
    pub j_eps: f64,
    pub penalty_upper: f64,
    pub penalty_lower: f64,
    /// `L^2(0,T)` norm of the reduced gradient `lambda u - p2`.
    pub grad_norm: f64,
    /// `max(0, max_t s - s_plus)` over all nodes.
    pub max_violation_upper: f64,
    /// `max(0, s_minus - s)` over nodes in `[t0, T]`.
    pub max_violation_lower: f64,
}

/// Why the loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Objective decrease fell below the tolerance.
    SmallDecrease,
    /// Iteration budget exhausted.
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    /// Best iterate by penalized objective value.
    pub control: Control,
    /// Iteration index of the best iterate.
    pub best_k: usize,
    pub reason: StopReason,
    pub records: Vec<IterateRecord>,
}

/// Runs the descent loop from `u0`. `on_iterate` observes each record as it
/// is produced (the CLI streams them to CSV). `clamp_nonnegative` projects
/// each update onto `u >= 0`; the plain algorithm leaves it off.
pub fn run(
    problem: &Problem<'_>,
    u0: Control,
    clamp_nonnegative: bool,
    mut on_iterate: impl FnMut(&IterateRecord),
) -> Result<RunResult> {
    u0.check_mesh(problem.mesh)?;
    let p = problem.params;
    let mut u = u0;
    let mut records: Vec<IterateRecord> = Vec::new();
    let mut best: Option<(f64, usize, Control)> = None;
    let mut tol_abs = f64::INFINITY;
    let mut increase_streak = 0usize;

    for k in 0..=p.max_iters {
        let eval = problem.evaluate(&u)?;
        let (viol_up, viol_lo) =
            objective::constraint_violations(&eval.run.s, p, problem.mesh)?;
        let rec = IterateRecord {
            k,
            j: eval.breakdown.j,
            j_eps: eval.breakdown.j_eps,
            penalty_upper: eval.breakdown.penalty_upper,
            penalty_lower: eval.breakdown.penalty_lower,
            grad_norm: eval.gradient.l2_norm(problem.mesh),
            max_violation_upper: viol_up,
            max_violation_lower: viol_lo,
        };
        on_iterate(&rec);
        records.push(rec);

        if k == 0 {
            // Scale-free stopping: tolerance relative to the initial value.
            tol_abs = p.tol_rel * rec.j_eps.abs().max(f64::MIN_POSITIVE);
        }
        if best.as_ref().is_none_or(|(b, _, _)| rec.j_eps < *b) {
            best = Some((rec.j_eps, k, u.clone()));
        }

        if k > 0 {
            let decrease = records[k - 1].j_eps - rec.j_eps;
            if decrease < 0.0 {
                increase_streak += 1;
                if increase_streak >= 3 {
                    return Err(Error::Diverged {
                        at_iter: k,
                        streak: increase_streak,
                    });
                }
            } else {
                increase_streak = 0;
                if decrease < tol_abs {
                    let (_, best_k, control) = best.unwrap();
                    return Ok(RunResult {
                        control,
                        best_k,
                        reason: StopReason::SmallDecrease,
                        records,
                    });
                }
            }
        }

        if k < p.max_iters {
            u = u.axpy(-p.delta, &eval.gradient);
            if clamp_nonnegative {
                u.clamp_nonnegative();
            }
        }
    }

    let (_, best_k, control) = best.unwrap();
    Ok(RunResult {
        control,
        best_k,
        reason: StopReason::MaxIters,
        records,
    })
}

/// Periodic dosing schedule: `dose_rate` during the first `window` of each
/// `period`, zero otherwise. All durations in days; the window and period
/// must resolve to whole numbers of time steps and the period must divide
/// the horizon.
pub fn dosing_init(
    mesh: &TimeMesh,
    dose_rate: f64,
    window: f64,
    period: f64,
) -> Result<Control> {
    if !(window > 0.0 && period > 0.0 && window <= period) {
        return Err(Error::config(
            "dosing",
            "need 0 < window <= period",
        ));
    }
    let steps_per_period = exact_steps(period, mesh.dt()).ok_or_else(|| {
        Error::config(
            "dosing.period_days",
            format!(
                "period {period} d is not a whole number of dt = {} d steps; increase time.nt",
                mesh.dt()
            ),
        )
    })?;
    let steps_per_window = exact_steps(window, mesh.dt()).ok_or_else(|| {
        Error::config(
            "dosing.window_hours",
            format!(
                "window {window} d is not a whole number of dt = {} d steps; increase time.nt",
                mesh.dt()
            ),
        )
    })?;
    if !mesh.nt().is_multiple_of(steps_per_period) {
        return Err(Error::config(
            "dosing.period_days",
            "period must divide the horizon",
        ));
    }
    Ok(Control::new(
        (0..mesh.nt())
            .map(|n| {
                if n % steps_per_period < steps_per_window {
                    dose_rate
                } else {
                    0.0
                }
            })
            .collect(),
    ))
}

fn exact_steps(duration: f64, dt: f64) -> Option<usize> {
    let raw = duration / dt;
    let n = raw.round();
    if n >= 1.0 && (raw - n).abs() <= 1e-9 * raw.max(1.0) {
        Some(n as usize)
    } else {
        None
    }
}
