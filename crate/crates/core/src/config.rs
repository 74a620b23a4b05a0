//! TOML configuration with the 28-day therapy scenario as the default,
//! explicit unit conversion at ingestion, field-level validation, and a
//! normalized echo used as the run manifest.
//!
//! Every internal computation runs in days and centimeters. Inputs offered
//! in seconds (`k_cm2_per_s`, `rate_per_s`) or hours (`window_hours`) are
//! converted exactly once, here. [`Config::normalized`] resolves every
//! default and unit choice into day/cm fields so that a run manifest records
//! the complete effective parameter set; parsing that manifest back yields
//! the identical configuration.

use crate::error::{Error, Result};
use crate::forward::{initial_condition, TumorShape};
use crate::grid::{Field, Grid};
use crate::growth::GrowthLaw;
use crate::mesh::{Control, TimeMesh};
use crate::operator::{DiffusionOperator, SolverOpts};
use crate::optimizer;
use crate::params::{self, ModelParams};
use crate::problem::Problem;
use serde::{Deserialize, Serialize};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    pub growth: GrowthSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub tumor: TumorSection,
    pub dosing: DosingSection,
    pub optimizer: OptimizerSection,
    pub objective: ObjectiveSection,
    pub output: OutputSection,
    pub solver: SolverSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// Drug clearance rate (1/day).
    pub m0: f64,
    /// Control regularization weight.
    pub lambda: f64,
    /// Penalty coefficient.
    pub eps: f64,
    pub s_minus: f64,
    pub s_plus: f64,
    /// Lower-constraint activation time (day); must lie on the time mesh.
    pub t0_days: f64,
    /// Horizon (day).
    pub t_end_days: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            m0: 0.5,
            // Calibrated so the 10-iteration default run ends within the
            // constraint-violation budget; see README for the trade-off.
            lambda: 0.8,
            eps: 0.2,
            s_minus: 0.4,
            s_plus: 0.8,
            t0_days: 7.0,
            t_end_days: 28.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthKind {
    Linear,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthSection {
    pub kind: GrowthKind,
    /// Growth magnitude (1/day); `d(0) = rho` for the linear law.
    pub rho: f64,
    /// Critical concentration: zero crossing of the growth law.
    pub s_c: f64,
    /// Knots `[s, d]` for the table law.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<[f64; 2]>>,
}

impl Default for GrowthSection {
    fn default() -> Self {
        GrowthSection {
            kind: GrowthKind::Linear,
            rho: 0.1,
            s_c: 0.2,
            knots: None,
        }
    }
}

impl GrowthSection {
    pub fn to_law(&self) -> Result<GrowthLaw> {
        match self.kind {
            GrowthKind::Linear => Ok(GrowthLaw::linear(self.rho, self.s_c)),
            GrowthKind::Table => {
                let knots = self.knots.clone().ok_or_else(|| {
                    Error::config("growth.knots", "table law requires knots")
                })?;
                GrowthLaw::table(knots, self.s_c)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
    pub edge_cm: f64,
    /// Diffusion coefficient in cm^2/s (converted at ingestion); mutually
    /// exclusive with `k_cm2_per_day`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_cm2_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_cm2_per_day: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            nx: 61,
            ny: 61,
            edge_cm: 3.0,
            k_cm2_per_s: None,
            k_cm2_per_day: None,
        }
    }
}

impl GridSection {
    /// Effective diffusion coefficient in cm^2/day. The unconfigured default
    /// is the 2.5e-9 cm^2/s literature value, i.e. 2.16e-4 cm^2/day.
    pub fn k_per_day(&self) -> Result<f64> {
        match (self.k_cm2_per_s, self.k_cm2_per_day) {
            (Some(_), Some(_)) => Err(Error::config(
                "grid.k_cm2_per_s/k_cm2_per_day",
                "set at most one of the two",
            )),
            (Some(s), None) => Ok(s * SECONDS_PER_DAY),
            (None, Some(d)) => Ok(d),
            (None, None) => Ok(2.5e-9 * SECONDS_PER_DAY),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub nt: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        // 15-minute steps over 28 days; resolves 1-hour dosing windows.
        TimeSection { nt: 2688 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TumorSection {
    pub diameter_cm: f64,
    pub mollify_cm: f64,
}

impl Default for TumorSection {
    fn default() -> Self {
        TumorSection {
            diameter_cm: 1.0,
            mollify_cm: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DosingSection {
    /// Dose rate in 1/s (converted at ingestion); mutually exclusive with
    /// `rate_per_day`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_per_day: Option<f64>,
    pub window_hours: f64,
    pub period_days: f64,
}

impl Default for DosingSection {
    fn default() -> Self {
        DosingSection {
            rate_per_s: None,
            rate_per_day: None,
            window_hours: 1.0,
            period_days: 1.0,
        }
    }
}

impl DosingSection {
    /// Effective dose rate in 1/day. The unconfigured default is the
    /// 0.00014 1/s schedule, i.e. 12.096 1/day.
    pub fn rate_per_day(&self) -> Result<f64> {
        match (self.rate_per_s, self.rate_per_day) {
            (Some(_), Some(_)) => Err(Error::config(
                "dosing.rate_per_s/rate_per_day",
                "set at most one of the two",
            )),
            (Some(s), None) => Ok(s * SECONDS_PER_DAY),
            (None, Some(d)) => Ok(d),
            (None, None) => Ok(0.00014 * SECONDS_PER_DAY),
        }
    }

    pub fn window_days(&self) -> f64 {
        self.window_hours / 24.0
    }
}

/// Gradient step used when the configuration leaves `delta` unset. Found
/// empirically: large enough that ten projected-descent iterations reshape
/// the pulsed initial schedule into a near-feasible one, small enough that
/// the objective decreases monotonically.
pub const DEFAULT_DELTA: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    /// Gradient step; when absent, [`DEFAULT_DELTA`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub max_iters: usize,
    /// Stopping tolerance on the objective decrease, relative to the initial
    /// objective.
    pub tol_rel: f64,
    /// Project each update onto nonnegative dosing. On by default: negative
    /// dosing is unphysical, and the unprojected update swings the early
    /// iterates through it. Disable to run the plain unprojected descent.
    pub clamp_nonnegative: bool,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        OptimizerSection {
            delta: None,
            max_iters: 10,
            tol_rel: 1e-6,
            clamp_nonnegative: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum Subdomain {
    #[default]
    Full,
    Disc {
        center_cm: [f64; 2],
        radius_cm: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveSection {
    /// Tracking subdomain; the tumor norm is integrated over this region
    /// only. Default: the whole domain.
    pub subdomain: Subdomain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Snapshot times (days); snapped to the nearest mesh node.
    pub snapshot_days: Vec<f64>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            snapshot_days: vec![0.0, 7.0, 14.0, 21.0, 28.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub cg_tol: f64,
    /// 0 selects an automatic cap.
    pub cg_max_iters: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            cg_tol: 1e-12,
            cg_max_iters: 0,
        }
    }
}

/// Control seeding strategies exposed by the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedControl {
    Zero,
    /// Periodic dosing schedule from the `[dosing]` section.
    Dosing,
    /// The guaranteed-feasible constant control.
    ConstantFeasible,
}

impl Config {
    /// The built-in preset reproducing the 28-day therapy experiment.
    pub fn paper_sec6() -> Self {
        Config::default()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Resolves every default and unit option into explicit day/cm fields.
    /// The result is what the run manifest records; parsing it back yields
    /// the same effective configuration.
    pub fn normalized(&self) -> Result<Config> {
        let mut c = self.clone();
        c.grid.k_cm2_per_day = Some(self.grid.k_per_day()?);
        c.grid.k_cm2_per_s = None;
        c.dosing.rate_per_day = Some(self.dosing.rate_per_day()?);
        c.dosing.rate_per_s = None;
        c.optimizer.delta = Some(self.optimizer.delta.unwrap_or(DEFAULT_DELTA));
        Ok(c)
    }

    /// Validates and assembles the ready-to-run scenario.
    pub fn build(&self, threads: usize) -> Result<Scenario> {
        let growth = self.growth.to_law()?;
        let params = ModelParams {
            m0: self.model.m0,
            lambda: self.model.lambda,
            eps: self.model.eps,
            s_minus: self.model.s_minus,
            s_plus: self.model.s_plus,
            t0: self.model.t0_days,
            t_end: self.model.t_end_days,
            growth,
            delta: self.optimizer.delta.unwrap_or(DEFAULT_DELTA),
            max_iters: self.optimizer.max_iters,
            tol_rel: self.optimizer.tol_rel,
        };
        params.validate()?;

        let mesh = TimeMesh::new(params.t_end, self.time.nt)?;
        mesh.node_index_of(params.t0, "model.t0_days")?;

        // Positivity of the implicit step requires dt * sup d < 1.
        let sup_d = params.growth.sup_rate_nonneg();
        if mesh.dt() * sup_d >= 1.0 {
            return Err(Error::config(
                "time.nt",
                format!(
                    "dt * sup d = {:.3} >= 1 breaks the positivity of implicit Euler; increase nt",
                    mesh.dt() * sup_d
                ),
            ));
        }

        let k = self.grid.k_per_day()?;
        let grid = Grid::uniform(self.grid.nx, self.grid.ny, self.grid.edge_cm, k)?;
        let op = DiffusionOperator::assemble(&grid)?;
        let y0 = initial_condition(
            &grid,
            &TumorShape {
                diameter: self.tumor.diameter_cm,
                mollify: self.tumor.mollify_cm,
            },
        )?;

        let mask = match &self.objective.subdomain {
            Subdomain::Full => None,
            Subdomain::Disc {
                center_cm,
                radius_cm,
            } => {
                if !(*radius_cm > 0.0) {
                    return Err(Error::config(
                        "objective.subdomain.radius_cm",
                        "must be positive",
                    ));
                }
                let (cx, cy) = (center_cm[0], center_cm[1]);
                let r2 = radius_cm * radius_cm;
                let m = Field::from_fn(&grid, |x, y| {
                    if (x - cx).powi(2) + (y - cy).powi(2) <= r2 {
                        1.0
                    } else {
                        0.0
                    }
                });
                Some(m.data().to_vec())
            }
        };

        let mut snapshot_nodes = Vec::new();
        for &t in &self.output.snapshot_days {
            if !(0.0..=params.t_end * (1.0 + 1e-12)).contains(&t) {
                return Err(Error::config(
                    "output.snapshot_days",
                    format!("snapshot time {t} outside [0, T]"),
                ));
            }
            let n = ((t / mesh.dt()).round() as usize).min(mesh.nt());
            if !snapshot_nodes.contains(&n) {
                snapshot_nodes.push(n);
            }
        }
        snapshot_nodes.sort_unstable();

        let opts = SolverOpts {
            cg_tol: self.solver.cg_tol,
            cg_max_iters: self.solver.cg_max_iters,
            threads: threads.max(1),
        };

        Ok(Scenario {
            params,
            grid,
            mesh,
            op,
            y0,
            mask,
            opts,
            dose_rate: self.dosing.rate_per_day()?,
            dose_window: self.dosing.window_days(),
            dose_period: self.dosing.period_days,
            clamp_nonnegative: self.optimizer.clamp_nonnegative,
            snapshot_nodes,
        })
    }
}

/// A validated, ready-to-run problem instance.
pub struct Scenario {
    pub params: ModelParams,
    pub grid: Grid,
    pub mesh: TimeMesh,
    pub op: DiffusionOperator,
    pub y0: Field,
    pub mask: Option<Vec<f64>>,
    pub opts: SolverOpts,
    pub dose_rate: f64,
    pub dose_window: f64,
    pub dose_period: f64,
    pub clamp_nonnegative: bool,
    /// Mesh nodes at which field snapshots are exported.
    pub snapshot_nodes: Vec<usize>,
}

impl Scenario {
    pub fn problem(&self) -> Problem<'_> {
        Problem {
            params: &self.params,
            grid: &self.grid,
            mesh: &self.mesh,
            op: &self.op,
            y0: &self.y0,
            mask: self.mask.as_deref(),
            opts: &self.opts,
        }
    }

    pub fn seed_control(&self, seed: SeedControl) -> Result<Control> {
        match seed {
            SeedControl::Zero => Ok(Control::zeros(&self.mesh)),
            SeedControl::Dosing => optimizer::dosing_init(
                &self.mesh,
                self.dose_rate,
                self.dose_window,
                self.dose_period,
            ),
            SeedControl::ConstantFeasible => {
                params::reference_constant_control(&self.params, &self.mesh)
            }
        }
    }
}
