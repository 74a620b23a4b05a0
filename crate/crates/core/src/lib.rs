//! Optimal control of a reaction-diffusion tumor growth model under drug therapy.
//!
//! The state of the system is a pair `(y, s)`: a normalized tumor-cell density
//! `y(x, t)` evolving on a square domain with homogeneous Dirichlet boundary,
//!
//! ```text
//! y' - div(k grad y) = d(s) y,    y|_boundary = 0,    y(x, 0) = y0,
//! ```
//!
//! and a spatially uniform normalized drug concentration `s(t)` driven by the
//! dosing control `u(t)` with first-order clearance,
//!
//! ```text
//! s' + M0 s = u,    s(0) = 0.
//! ```
//!
//! The reaction rate `d(s)` is positive below a critical concentration and
//! negative above it, so the drug shrinks the tumor. The control problem
//! minimizes `1/2 ||y||^2 + lambda/2 ||u||^2` subject to box constraints on the
//! concentration (`s <= s_plus` everywhere, `s >= s_minus` after an activation
//! time `t0`), handled by quadratic penalties weighted `1/eps`. Gradients of
//! the penalized objective are assembled from a backward-in-time dual pair
//! `(p1, p2)` that is the exact transpose of the discrete forward map, so
//! finite-difference checks of the reduced gradient pass at tight tolerances.
//!
//! Module map:
//! - [`growth`], [`penalty`]: reaction law `d(s)`, penalty functions and their
//!   derivatives.
//! - [`params`]: model constants, validation, the constant-control feasibility
//!   test and the guaranteed-feasible reference control.
//! - [`mesh`], [`grid`]: uniform time partition and structured spatial grid
//!   with `L^2` quadrature helpers.
//! - [`drug`]: exact exponential integrator for `s`, closed-form convolution
//!   oracle, a-priori bound checks.
//! - [`operator`]: flux-form diffusion stencil and a conjugate-gradient solver
//!   for the shifted systems of implicit Euler.
//! - [`forward`]: initial tumor shape and the implicit-Euler state solver.
//! - [`objective`]: quadrature evaluation of the objective and its penalty
//!   breakdown.
//! - [`adjoint`]: backward dual sweeps and the reduced gradient.
//! - [`problem`]: one fully specified instance bundling forward map,
//!   objective, gradient, and finite-difference verification.
//! - [`optimizer`]: gradient descent with the descent-based stopping rule,
//!   divergence guard, and per-iteration records.
//! - [`config`]: TOML configuration, defaults for the 28-day scenario, unit
//!   conversion, validation.
//! - [`export`]: deterministic CSV / matrix / legacy-VTK renderers.

pub mod adjoint;
pub mod config;
pub mod drug;
pub mod error;
pub mod export;
pub mod forward;
pub mod grid;
pub mod growth;
pub mod mesh;
pub mod objective;
pub mod operator;
pub mod optimizer;
pub mod params;
pub mod penalty;
pub mod problem;

pub use config::{Config, Scenario};
pub use error::Error;
pub use grid::{Field, Grid};
pub use growth::GrowthLaw;
pub use mesh::{Control, TimeMesh};
pub use params::ModelParams;
