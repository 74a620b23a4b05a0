//! Bundles one fully specified control problem (parameters, grid, mesh,
//! operator, initial state, tracking mask, solver options) and exposes the
//! forward map, the objective, the reduced gradient, and a finite-difference
//! gradient verification on top of it.

use crate::adjoint;
use crate::error::Result;
use crate::forward::{self, ForwardRun};
use crate::grid::{Field, Grid};
use crate::mesh::{Control, TimeMesh};
use crate::objective::{self, Breakdown};
use crate::operator::{DiffusionOperator, SolverOpts};
use crate::params::ModelParams;

pub struct Problem<'a> {
    pub params: &'a ModelParams,
    pub grid: &'a Grid,
    pub mesh: &'a TimeMesh,
    pub op: &'a DiffusionOperator,
    pub y0: &'a Field,
    pub mask: Option<&'a [f64]>,
    pub opts: &'a SolverOpts,
}

/// State, dual, and gradient of one control evaluated together.
pub struct Evaluation {
    pub run: ForwardRun,
    pub breakdown: Breakdown,
    pub p1: Vec<Field>,
    pub p2: Vec<f64>,
    pub gradient: Control,
}

impl<'a> Problem<'a> {
    pub fn forward(&self, u: &Control) -> Result<ForwardRun> {
        forward::solve_forward(u, self.params, self.grid, self.mesh, self.op, self.y0, self.opts)
    }

    pub fn objective(&self, run: &ForwardRun, u: &Control) -> Result<Breakdown> {
        objective::eval_j_eps(
            &run.states,
            &run.s,
            u,
            self.params,
            self.grid,
            self.mesh,
            self.mask,
        )
    }

    /// Objective value for a control (forward solve included).
    pub fn objective_of(&self, u: &Control) -> Result<f64> {
        let run = self.forward(u)?;
        Ok(self.objective(&run, u)?.j_eps)
    }

    /// Forward solve, objective, dual sweeps, and reduced gradient.
    pub fn evaluate(&self, u: &Control) -> Result<Evaluation> {
        let run = self.forward(u)?;
        let breakdown = self.objective(&run, u)?;
        let p1 = adjoint::solve_p1(
            &run, self.op, self.params, self.grid, self.mesh, self.mask, self.opts,
        )?;
        let p2 = adjoint::solve_p2(&run, &p1, self.params, self.grid, self.mesh)?;
        let gradient = adjoint::reduced_gradient(u, &p2, self.params, self.mesh);
        Ok(Evaluation {
            run,
            breakdown,
            p1,
            p2,
            gradient,
        })
    }

    /// Compares the adjoint gradient against central finite differences of
    /// the fully discrete objective along the given directions. Returns the
    /// relative error per direction.
    pub fn gradient_check(&self, u: &Control, directions: &[Control], h: f64) -> Result<Vec<f64>> {
        let eval = self.evaluate(u)?;
        let mut errors = Vec::with_capacity(directions.len());
        for v in directions {
            let plus = self.objective_of(&u.axpy(h, v))?;
            let minus = self.objective_of(&u.axpy(-h, v))?;
            let fd = (plus - minus) / (2.0 * h);
            let directional = eval.gradient.l2_dot(v, self.mesh);
            let scale = fd.abs().max(directional.abs()).max(1e-14);
            errors.push((fd - directional).abs() / scale);
        }
        Ok(errors)
    }
}
