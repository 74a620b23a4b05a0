//! Backward dual sweeps and the reduced gradient of the penalized objective.
//!
//! The continuous dual system is
//!
//! ```text
//! -p1' + A p1 - d(s) p1 = -y,                                   p1(T) = 0,
//! -p2' + M0 p2 + 1/eps f1'(s) + 1/eps chi(s, t) = d'(s) (y, p1), p2(T) = 0,
//! ```
//!
//! and the stationarity relation `u = p2 / lambda`. Discretely, everything
//! here is the exact transpose of the forward map: `p1` steps backward through
//! the same shifted operator `I + dt A - dt d(s^n) I` as the forward solve
//! (symmetric, so transposition is free), sourced by the objective's own
//! quadrature weights; `p2` steps backward through the exact exponential
//! propagator of the drug ODE with the penalty and coupling sources collected
//! per node. The reduced gradient transfers `p2` from nodes to control
//! intervals with the factor `(1 - e^(-M0 dt)) / (M0 dt)` — the exact
//! sensitivity of one exponential update to its interval's dose — rather than
//! an endpoint average; this is what lets central finite differences of the
//! fully discrete objective match the assembled gradient near roundoff.

use crate::error::Result;
use crate::forward::ForwardRun;
use crate::grid::{Field, Grid};
use crate::mesh::{Control, TimeMesh};
use crate::operator::{DiffusionOperator, SolverOpts};
use crate::params::ModelParams;
use crate::penalty;

/// Backward sweep for the density dual `p1`, one snapshot per node.
/// `p1(T) = 0` exactly; earlier nodes solve
/// `(I + dt A - dt d(s^n) I) p1^n = p1^(n+1) - dt m y^n`
/// with `m` the optional tracking mask.
pub fn solve_p1(
    run: &ForwardRun,
    a: &DiffusionOperator,
    p: &ModelParams,
    grid: &Grid,
    mesh: &TimeMesh,
    mask: Option<&[f64]>,
    opts: &SolverOpts,
) -> Result<Vec<Field>> {
    let nt = mesh.nt();
    assert_eq!(run.states.len(), nt + 1, "trajectory length");
    let dt = mesh.dt();
    let mut p1 = vec![Field::zeros(grid); nt + 1];
    for n in (0..nt).rev() {
        let mut rhs = p1[n + 1].clone();
        {
            let y = run.states[n].data();
            let r = rhs.data_mut();
            match mask {
                None => {
                    for (ri, yi) in r.iter_mut().zip(y) {
                        *ri -= dt * yi;
                    }
                }
                Some(m) => {
                    for ((ri, yi), mi) in r.iter_mut().zip(y).zip(m) {
                        *ri -= dt * mi * yi;
                    }
                }
            }
        }
        let shift = dt * p.growth.rate(run.s[n]);
        if shift >= 1.0 || !shift.is_finite() {
            return Err(crate::error::Error::UnstableStep(shift));
        }
        // Warm start from the later node; the dual is smooth in time.
        p1[n] = a.solve_shifted_field(1.0 - shift, dt, &rhs, Some(&p1[n + 1]), opts)?;
    }
    Ok(p1)
}

/// Backward sweep for the concentration dual `p2` on mesh nodes.
/// `p2(T) = 0`; earlier nodes accumulate
/// `p2^m = e^(-M0 dt) p2^(m+1) + dt g_m` with source
/// `g_m = d'(s^m) (y^m, p1^m) - 1/eps f1'(s^m) - 1/eps chi(s^m, t_m)`.
pub fn solve_p2(
    run: &ForwardRun,
    p1: &[Field],
    p: &ModelParams,
    grid: &Grid,
    mesh: &TimeMesh,
) -> Result<Vec<f64>> {
    let nt = mesh.nt();
    assert_eq!(p1.len(), nt + 1, "dual trajectory length");
    let n0 = mesh.node_index_of(p.t0, "model.t0_days")?;
    let dt = mesh.dt();
    let decay = (-p.m0 * dt).exp();
    let mut p2 = vec![0.0; nt + 1];
    for m in (0..nt).rev() {
        let coupling = p.growth.rate_prime(run.s[m])? * run.states[m].l2_dot(&p1[m], grid);
        // The time gate is on node index, which is how t0 lives on the mesh.
        let lower = if m >= n0 {
            penalty::f2_prime(run.s[m], p.s_minus)
        } else {
            0.0
        };
        let g = coupling - (penalty::f1_prime(run.s[m], p.s_plus) + lower) / p.eps;
        p2[m] = decay * p2[m + 1] + dt * g;
    }
    Ok(p2)
}

/// Transfers a node series `p2` to control intervals: interval `n` receives
/// `(1 - e^(-M0 dt)) / (M0 dt) * p2^(n+1)`, the exact weight with which dose
/// `u_n` enters the discrete concentration update.
pub fn p2_on_intervals(p2: &[f64], p: &ModelParams, mesh: &TimeMesh) -> Vec<f64> {
    debug_assert_eq!(p2.len(), mesh.nt() + 1);
    let dt = mesh.dt();
    let w = (1.0 - (-p.m0 * dt).exp()) / (p.m0 * dt);
    (0..mesh.nt()).map(|n| w * p2[n + 1]).collect()
}

/// Reduced gradient `g = lambda u - p2` in the `L^2(0,T)` inner product,
/// with `p2` transferred to intervals. Stationarity `g = 0` is the discrete
/// form of `u = p2 / lambda`.
pub fn reduced_gradient(u: &Control, p2: &[f64], p: &ModelParams, mesh: &TimeMesh) -> Control {
    let q = p2_on_intervals(p2, p, mesh);
    Control::new(
        u.values()
            .iter()
            .zip(&q)
            .map(|(un, qn)| p.lambda * un - qn)
            .collect(),
    )
}
