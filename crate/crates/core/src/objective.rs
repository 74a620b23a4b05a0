//! Quadrature evaluation of the objective and its penalized extension.
//!
//! ```text
//! J(y, u)      = 1/2 ||y||^2_(L2 in space and time) + lambda/2 ||u||^2_(L2 in time)
//! J_eps(y,s,u) = J + 1/eps int_0^T f1(s) dt + 1/eps int_t0^T f2(s) dt
//! ```
//!
//! Space uses the cell-sum quadrature of the grid. Time uses the
//! left-endpoint rule (weight `dt` on nodes `0 .. nt-1`, none on the terminal
//! node), which is exact for constants and — unlike the trapezoid rule — is
//! the quadrature whose exact discrete adjoint carries zero terminal
//! conditions `p1(T) = p2(T) = 0`, matching the continuous dual system. The
//! control term is the exact interval sum for piecewise-constant `u`. The
//! tracking term can be restricted to a subdomain mask; by default it
//! integrates over the whole domain.

use crate::error::Result;
use crate::grid::{Field, Grid};
use crate::mesh::{Control, TimeMesh};
use crate::params::ModelParams;
use crate::penalty;

/// Addends of the penalized objective. `j_eps = j + penalty_upper +
/// penalty_lower` and `j = tracking + control` hold exactly by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakdown {
    pub tracking: f64,
    pub control: f64,
    pub j: f64,
    pub penalty_upper: f64,
    pub penalty_lower: f64,
    pub j_eps: f64,
}

/// Squared, possibly masked, spatial norm of one snapshot.
fn tracking_norm_sq(y: &Field, grid: &Grid, mask: Option<&[f64]>) -> f64 {
    match mask {
        None => y.l2_norm_sq(grid),
        Some(m) => {
            let acc: f64 = y
                .data()
                .iter()
                .zip(m)
                .map(|(v, w)| w * v * v)
                .sum();
            acc * grid.cell_area()
        }
    }
}

/// `J(y, u)` over a full trajectory.
pub fn eval_j(
    states: &[Field],
    u: &Control,
    lambda: f64,
    grid: &Grid,
    mesh: &TimeMesh,
    mask: Option<&[f64]>,
) -> f64 {
    assert_eq!(states.len(), mesh.nt() + 1, "trajectory length");
    let dt = mesh.dt();
    let mut track = 0.0;
    for y in &states[..mesh.nt()] {
        track += tracking_norm_sq(y, grid, mask) * dt;
    }
    let control: f64 = u.values().iter().map(|v| v * v).sum::<f64>() * dt;
    0.5 * track + 0.5 * lambda * control
}

/// `J_eps` with its breakdown. The lower-constraint integral starts at the
/// mesh node holding `t0`; a misaligned `t0` is a configuration error.
pub fn eval_j_eps(
    states: &[Field],
    s: &[f64],
    u: &Control,
    p: &ModelParams,
    grid: &Grid,
    mesh: &TimeMesh,
    mask: Option<&[f64]>,
) -> Result<Breakdown> {
    assert_eq!(states.len(), mesh.nt() + 1, "trajectory length");
    assert_eq!(s.len(), mesh.nt() + 1, "concentration length");
    let n0 = mesh.node_index_of(p.t0, "model.t0_days")?;
    let dt = mesh.dt();

    let mut track = 0.0;
    for y in &states[..mesh.nt()] {
        track += tracking_norm_sq(y, grid, mask) * dt;
    }
    let track = 0.5 * track;
    let control: f64 =
        0.5 * p.lambda * u.values().iter().map(|v| v * v).sum::<f64>() * dt;

    let mut pen_up = 0.0;
    for &sv in &s[..mesh.nt()] {
        pen_up += penalty::f1(sv, p.s_plus);
    }
    pen_up *= dt / p.eps;

    let mut pen_lo = 0.0;
    for &sv in &s[n0..mesh.nt()] {
        pen_lo += penalty::f2(sv, p.s_minus);
    }
    pen_lo *= dt / p.eps;

    let j = track + control;
    Ok(Breakdown {
        tracking: track,
        control,
        j,
        penalty_upper: pen_up,
        penalty_lower: pen_lo,
        j_eps: j + pen_up + pen_lo,
    })
}

/// Largest upper-constraint violation `max(0, max_t s - s_plus)` over all
/// nodes, and lower-constraint violation over `[t0, T]` nodes.
pub fn constraint_violations(s: &[f64], p: &ModelParams, mesh: &TimeMesh) -> Result<(f64, f64)> {
    let n0 = mesh.node_index_of(p.t0, "model.t0_days")?;
    let upper = s
        .iter()
        .fold(0.0f64, |m, &sv| m.max(sv - p.s_plus));
    let lower = s[n0..]
        .iter()
        .fold(0.0f64, |m, &sv| m.max(p.s_minus - sv));
    Ok((upper.max(0.0), lower.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::GrowthLaw;

    fn params() -> ModelParams {
        ModelParams {
            m0: 0.5,
            lambda: 1.0,
            eps: 0.2,
            s_minus: 0.4,
            s_plus: 0.8,
            t0: 7.0,
            t_end: 28.0,
            growth: GrowthLaw::linear(0.1, 0.2),
            delta: 0.5,
            max_iters: 10,
            tol_rel: 1e-6,
        }
    }

    fn constant_states(grid: &Grid, mesh: &TimeMesh, v: f64) -> Vec<Field> {
        (0..=mesh.nt())
            .map(|_| Field::from_fn(grid, |_, _| v))
            .collect()
    }

    #[test]
    fn zero_everything_is_zero() {
        let grid = Grid::uniform(5, 5, 1.0, 1.0).unwrap();
        let mesh = TimeMesh::new(1.0, 10).unwrap();
        let states = constant_states(&grid, &mesh, 0.0);
        let u = Control::zeros(&mesh);
        assert_eq!(eval_j(&states, &u, 3.0, &grid, &mesh, None), 0.0);
    }

    #[test]
    fn constant_field_on_unit_cube() {
        // y = 1 on the unit square over unit time. The time quadrature is
        // exact for constants; the spatial cell sum covers the interior
        // lattice, whose measure is (n/(n+1))^2 of the domain, so the value
        // approaches 1/2 as the grid refines.
        let n = 199;
        let grid = Grid::uniform(n, n, 1.0, 1.0).unwrap();
        let mesh = TimeMesh::new(1.0, 17).unwrap();
        let states = constant_states(&grid, &mesh, 1.0);
        let u = Control::zeros(&mesh);
        let j = eval_j(&states, &u, 7.0, &grid, &mesh, None);
        let interior_measure = (n as f64 / (n + 1) as f64).powi(2);
        assert!((j - 0.5 * interior_measure).abs() < 1e-12);
        assert!((j - 0.5).abs() < 1e-2);
    }

    #[test]
    fn control_term_exact() {
        // u = 2 over T = 28 with lambda = 1 and no tumor: J = 1/2 * 4 * 28.
        let grid = Grid::uniform(3, 3, 1.0, 1.0).unwrap();
        let mesh = TimeMesh::new(28.0, 56).unwrap();
        let states = constant_states(&grid, &mesh, 0.0);
        let u = Control::constant(&mesh, 2.0);
        let j = eval_j(&states, &u, 1.0, &grid, &mesh, None);
        assert!((j - 56.0).abs() < 1e-12);
    }

    #[test]
    fn penalties_vanish_inside_band() {
        let p = params();
        let grid = Grid::uniform(3, 3, 1.0, 1.0).unwrap();
        let mesh = TimeMesh::new(28.0, 56).unwrap();
        let states = constant_states(&grid, &mesh, 0.3);
        let u = Control::constant(&mesh, 0.1);
        // s below s_plus everywhere and above s_minus after t0.
        let n0 = mesh.node_index_of(p.t0, "t0").unwrap();
        let s: Vec<f64> = (0..=mesh.nt())
            .map(|n| if n >= n0 { 0.6 } else { 0.2 })
            .collect();
        let bd = eval_j_eps(&states, &s, &u, &p, &grid, &mesh, None).unwrap();
        assert_eq!(bd.penalty_upper, 0.0);
        assert_eq!(bd.penalty_lower, 0.0);
        assert_eq!(bd.j_eps, bd.j);
    }

    #[test]
    fn constant_overshoot_penalty_value() {
        // s = s_plus + 0.1 for all t, eps = 0.2, T = 28:
        // penalty = (1/0.2) * 28 * 0.01 = 1.4 exactly.
        let p = params();
        let grid = Grid::uniform(3, 3, 1.0, 1.0).unwrap();
        let mesh = TimeMesh::new(28.0, 56).unwrap();
        let states = constant_states(&grid, &mesh, 0.0);
        let u = Control::zeros(&mesh);
        let s = vec![p.s_plus + 0.1; mesh.nt() + 1];
        let bd = eval_j_eps(&states, &s, &u, &p, &grid, &mesh, None).unwrap();
        assert!((bd.penalty_upper - 1.4).abs() < 1e-12);
        assert_eq!(bd.penalty_lower, 0.0);
    }

    #[test]
    fn penalty_scales_linearly_in_inverse_eps() {
        let mut p = params();
        let grid = Grid::uniform(3, 3, 1.0, 1.0).unwrap();
        let mesh = TimeMesh::new(28.0, 56).unwrap();
        let states = constant_states(&grid, &mesh, 0.0);
        let u = Control::zeros(&mesh);
        let s = vec![0.95; mesh.nt() + 1];
        let bd1 = eval_j_eps(&states, &s, &u, &p, &grid, &mesh, None).unwrap();
        p.eps /= 2.0;
        let bd2 = eval_j_eps(&states, &s, &u, &p, &grid, &mesh, None).unwrap();
        assert!((bd2.penalty_upper - 2.0 * bd1.penalty_upper).abs() < 1e-12);
    }

    #[test]
    fn j_eps_dominates_j() {
        let p = params();
        let grid = Grid::uniform(5, 5, 3.0, 1.0).unwrap();
        let mesh = TimeMesh::new(28.0, 112).unwrap();
        let states = constant_states(&grid, &mesh, 0.4);
        let u = Control::constant(&mesh, 0.5);
        let s: Vec<f64> = (0..=mesh.nt()).map(|n| 0.9 * (n as f64 / 112.0)).collect();
        let bd = eval_j_eps(&states, &s, &u, &p, &grid, &mesh, None).unwrap();
        assert!(bd.j >= 0.0);
        assert!(bd.j_eps >= bd.j);
        assert!((bd.j_eps - (bd.j + bd.penalty_upper + bd.penalty_lower)).abs() < 1e-14);
    }

    #[test]
    fn quadrature_consistency_under_refinement() {
        // Smooth synthetic trajectory: doubling nt moves J_eps by O(dt).
        let p = params();
        let grid = Grid::uniform(5, 5, 3.0, 1.0).unwrap();
        let eval = |nt: usize| {
            let mesh = TimeMesh::new(28.0, nt).unwrap();
            let states: Vec<Field> = (0..=nt)
                .map(|n| {
                    let t = mesh.t(n);
                    Field::from_fn(&grid, |_, _| (-0.05 * t).exp())
                })
                .collect();
            let s: Vec<f64> = (0..=nt)
                .map(|n| 0.85 * (1.0 - (-0.3 * mesh.t(n)).exp()))
                .collect();
            let u = Control::constant(&mesh, 0.2);
            eval_j_eps(&states, &s, &u, &p, &grid, &mesh, None)
                .unwrap()
                .j_eps
        };
        let coarse = eval(112);
        let fine = eval(224);
        let finest = eval(448);
        let d1 = (coarse - fine).abs();
        let d2 = (fine - finest).abs();
        // First-order quadrature: differences shrink roughly by half.
        assert!(d2 < 0.75 * d1, "d1 = {d1}, d2 = {d2}");
    }

    #[test]
    fn subdomain_mask_restricts_tracking() {
        let grid = Grid::uniform(4, 4, 1.0, 1.0).unwrap();
        let mesh = TimeMesh::new(1.0, 4).unwrap();
        let states = constant_states(&grid, &mesh, 1.0);
        let u = Control::zeros(&mesh);
        let full = eval_j(&states, &u, 1.0, &grid, &mesh, None);
        let mask: Vec<f64> = (0..16).map(|c| if c < 8 { 1.0 } else { 0.0 }).collect();
        let half = eval_j(&states, &u, 1.0, &grid, &mesh, Some(&mask));
        assert!((half - 0.5 * full).abs() < 1e-14);
    }

    /// Along any control line the objective is a parabola with curvature at
    /// least lambda times the squared direction norm (three-point fit; the
    /// state map contributes only nonnegative curvature here).
    #[test]
    fn convex_along_control_lines() {
        use crate::forward::{initial_condition, solve_forward, TumorShape};
        use crate::operator::{DiffusionOperator, SolverOpts};

        let p = params();
        let grid = Grid::uniform(9, 9, 3.0, 2.16e-4).unwrap();
        let op = DiffusionOperator::assemble(&grid).unwrap();
        let mesh = TimeMesh::new(p.t_end, 56).unwrap();
        let mut y0 = initial_condition(&grid, &TumorShape::sharp(1.0)).unwrap();
        for v in y0.data_mut() {
            *v *= 1e-2;
        }
        let opts = SolverOpts::default();

        // Base control keeps the concentration strictly inside the band so
        // the penalty terms stay off along the probed segment.
        let base = crate::params::reference_constant_control(&p, &mesh).unwrap();
        let base = Control::new(base.values().iter().map(|v| 1.05 * v).collect());
        let dir = Control::new((0..mesh.nt()).map(|n| ((n % 5) as f64 - 2.0) / 50.0).collect());

        let eval = |u: &Control| {
            let run = solve_forward(u, &p, &grid, &mesh, &op, &y0, &opts).unwrap();
            eval_j_eps(&run.states, &run.s, u, &p, &grid, &mesh, None)
                .unwrap()
                .j_eps
        };
        let a = 0.05;
        let j0 = eval(&base);
        let jp = eval(&base.axpy(a, &dir));
        let jm = eval(&base.axpy(-a, &dir));
        let curvature = (jp + jm - 2.0 * j0) / (a * a);
        let floor = p.lambda * dir.l2_norm(&mesh).powi(2);
        assert!(
            curvature >= floor - 1e-8 * (1.0 + floor),
            "curvature {curvature} below lambda floor {floor}"
        );
    }

    #[test]
    fn violation_extraction() {
        let p = params();
        let mesh = TimeMesh::new(28.0, 28).unwrap();
        let mut s = vec![0.6; 29];
        s[3] = 0.95; // above s_plus before t0
        s[10] = 0.25; // below s_minus after t0 (t = 10)
        let (up, lo) = constraint_violations(&s, &p, &mesh).unwrap();
        assert!((up - 0.15).abs() < 1e-14);
        assert!((lo - 0.15).abs() < 1e-14);
    }
}
