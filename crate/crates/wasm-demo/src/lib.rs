//! Browser bindings for interactive dose-schedule exploration.
//!
//! Three operations are exported, each taking a JSON fragment of the regular
//! configuration (all keys optional, coarse 31x31 demo defaults) and
//! returning plot-ready JSON:
//!
//! - [`simulate_schedule`]: forward solve of a dosing schedule; drug
//!   concentration against its constraint band, the schedule itself, and
//!   weekly center-line tumor profiles.
//! - [`optimize_schedule`]: projected gradient descent; per-iteration
//!   objective and violation records plus the optimized schedule and its
//!   traces.
//! - [`density_field`]: full tumor density snapshot at a chosen day, for a
//!   named seed schedule or an explicit control vector.

use serde::{Deserialize, Serialize};
use tumorctl_core::config::{Config, SeedControl};
use tumorctl_core::mesh::Control;
use tumorctl_core::optimizer;
use tumorctl_core::params;
use wasm_bindgen::prelude::*;

/// Demo-sized defaults: the full preset but on a desk-coarse grid so every
/// interaction stays under a second in the browser.
fn demo_config() -> Config {
    let mut c = Config::paper_sec6();
    c.grid.nx = 31;
    c.grid.ny = 31;
    c.time.nt = 672;
    c
}

fn parse_config(config_json: &str) -> Result<Config, String> {
    if config_json.trim().is_empty() {
        return Ok(demo_config());
    }
    // Layer the user fragment over the demo defaults: parse the fragment
    // into the demo config by deserializing the merged JSON value.
    let mut base = serde_json::to_value(demo_config()).map_err(|e| e.to_string())?;
    let overlay: serde_json::Value =
        serde_json::from_str(config_json).map_err(|e| format!("bad config JSON: {e}"))?;
    merge(&mut base, overlay);
    serde_json::from_value(base).map_err(|e| format!("bad config: {e}"))
}

fn merge(base: &mut serde_json::Value, overlay: serde_json::Value) {
    match (base, overlay) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn parse_seed(seed: &str) -> Result<SeedControl, String> {
    match seed {
        "zero" => Ok(SeedControl::Zero),
        "dosing" => Ok(SeedControl::Dosing),
        "constant-feasible" => Ok(SeedControl::ConstantFeasible),
        other => Err(format!(
            "unknown seed {other:?}; expected zero | dosing | constant-feasible"
        )),
    }
}

#[derive(Serialize)]
struct Trace {
    t: Vec<f64>,
    s: Vec<f64>,
    u_t: Vec<f64>,
    u: Vec<f64>,
    s_minus: f64,
    s_plus: f64,
    s_c: f64,
    violation_upper: f64,
    violation_lower: f64,
    /// Center-line x coordinates (cm).
    x: Vec<f64>,
    /// Weekly center-line tumor density profiles.
    profiles: Vec<Profile>,
}

#[derive(Serialize)]
struct Profile {
    day: f64,
    y: Vec<f64>,
}

#[derive(Serialize)]
struct SimulateResponse {
    feasible: bool,
    feasibility_lhs: f64,
    feasibility_rhs: f64,
    trace: Trace,
}

#[derive(Serialize)]
struct IterateOut {
    k: usize,
    j: f64,
    j_eps: f64,
    penalty_upper: f64,
    penalty_lower: f64,
    grad_norm: f64,
    max_violation_upper: f64,
    max_violation_lower: f64,
}

#[derive(Serialize)]
struct OptimizeResponse {
    iterates: Vec<IterateOut>,
    best_k: usize,
    stopped: String,
    trace: Trace,
}

#[derive(Serialize)]
struct FieldResponse {
    nx: usize,
    ny: usize,
    edge_cm: f64,
    day: f64,
    values: Vec<f64>,
    max: f64,
}

#[derive(Deserialize)]
struct ControlSpec {
    #[serde(default)]
    seed: Option<String>,
    #[serde(default)]
    values: Option<Vec<f64>>,
}

fn resolve_control(
    scenario: &tumorctl_core::Scenario,
    spec_json: &str,
) -> Result<Control, String> {
    if spec_json.trim().is_empty() {
        return scenario
            .seed_control(SeedControl::Dosing)
            .map_err(|e| e.to_string());
    }
    let spec: ControlSpec =
        serde_json::from_str(spec_json).map_err(|e| format!("bad control JSON: {e}"))?;
    if let Some(values) = spec.values {
        if values.len() != scenario.mesh.nt() {
            return Err(format!(
                "control has {} intervals, mesh needs {}",
                values.len(),
                scenario.mesh.nt()
            ));
        }
        return Ok(Control::new(values));
    }
    let seed = parse_seed(spec.seed.as_deref().unwrap_or("dosing"))?;
    scenario.seed_control(seed).map_err(|e| e.to_string())
}

fn weekly_nodes(scenario: &tumorctl_core::Scenario) -> Vec<usize> {
    (0..=4).map(|w| scenario.mesh.nt() * w / 4).collect()
}

fn build_trace(
    scenario: &tumorctl_core::Scenario,
    u: &Control,
    run: &tumorctl_core::forward::ForwardRun,
) -> Result<Trace, String> {
    let mesh = &scenario.mesh;
    let p = &scenario.params;
    let (viol_up, viol_lo) = tumorctl_core::objective::constraint_violations(&run.s, p, mesh)
        .map_err(|e| e.to_string())?;
    let x: Vec<f64> = (0..scenario.grid.nx())
        .map(|i| scenario.grid.coords(i, scenario.grid.center_row()).0)
        .collect();
    let profiles = weekly_nodes(scenario)
        .into_iter()
        .map(|n| Profile {
            day: mesh.t(n),
            y: run.states[n].center_line(&scenario.grid),
        })
        .collect();
    Ok(Trace {
        t: mesh.nodes().collect(),
        s: run.s.clone(),
        u_t: (0..mesh.nt()).map(|n| mesh.t(n)).collect(),
        u: u.values().to_vec(),
        s_minus: p.s_minus,
        s_plus: p.s_plus,
        s_c: p.growth.s_m(),
        violation_upper: viol_up,
        violation_lower: viol_lo,
        x,
        profiles,
    })
}

fn simulate_impl(config_json: &str, seed: &str) -> Result<String, String> {
    let config = parse_config(config_json)?;
    let scenario = config.build(1).map_err(|e| e.to_string())?;
    let u = scenario
        .seed_control(parse_seed(seed)?)
        .map_err(|e| e.to_string())?;
    let run = scenario.problem().forward(&u).map_err(|e| e.to_string())?;
    let report = params::check_feasibility(&scenario.params);
    let response = SimulateResponse {
        feasible: report.feasible,
        feasibility_lhs: report.lhs,
        feasibility_rhs: report.rhs,
        trace: build_trace(&scenario, &u, &run)?,
    };
    serde_json::to_string(&response).map_err(|e| e.to_string())
}

fn optimize_impl(config_json: &str, seed: &str) -> Result<String, String> {
    let config = parse_config(config_json)?;
    let scenario = config.build(1).map_err(|e| e.to_string())?;
    let problem = scenario.problem();
    let u0 = scenario
        .seed_control(parse_seed(seed)?)
        .map_err(|e| e.to_string())?;
    let result = optimizer::run(&problem, u0, scenario.clamp_nonnegative, |_| {})
        .map_err(|e| e.to_string())?;
    let run = problem.forward(&result.control).map_err(|e| e.to_string())?;
    let response = OptimizeResponse {
        iterates: result
            .records
            .iter()
            .map(|r| IterateOut {
                k: r.k,
                j: r.j,
                j_eps: r.j_eps,
                penalty_upper: r.penalty_upper,
                penalty_lower: r.penalty_lower,
                grad_norm: r.grad_norm,
                max_violation_upper: r.max_violation_upper,
                max_violation_lower: r.max_violation_lower,
            })
            .collect(),
        best_k: result.best_k,
        stopped: match result.reason {
            optimizer::StopReason::SmallDecrease => "small-decrease".to_string(),
            optimizer::StopReason::MaxIters => "max-iterations".to_string(),
        },
        trace: build_trace(&scenario, &result.control, &run)?,
    };
    serde_json::to_string(&response).map_err(|e| e.to_string())
}

fn density_field_impl(config_json: &str, control_json: &str, day: f64) -> Result<String, String> {
    let config = parse_config(config_json)?;
    let scenario = config.build(1).map_err(|e| e.to_string())?;
    let u = resolve_control(&scenario, control_json)?;
    let run = scenario.problem().forward(&u).map_err(|e| e.to_string())?;
    let mesh = &scenario.mesh;
    if !(0.0..=mesh.t_end() * (1.0 + 1e-12)).contains(&day) {
        return Err(format!("day {day} outside [0, {}]", mesh.t_end()));
    }
    let node = ((day / mesh.dt()).round() as usize).min(mesh.nt());
    let field = &run.states[node];
    let response = FieldResponse {
        nx: scenario.grid.nx(),
        ny: scenario.grid.ny(),
        edge_cm: scenario.grid.edge(),
        day: mesh.t(node),
        values: field.data().to_vec(),
        max: field.max_abs(),
    };
    serde_json::to_string(&response).map_err(|e| e.to_string())
}

/// JSON of the coarse demo configuration, for initializing UI controls.
#[wasm_bindgen]
pub fn default_config() -> String {
    serde_json::to_string(&demo_config()).expect("config serializes")
}

/// Forward-solves a dosing schedule. `config_json` overlays the demo
/// defaults; `seed` is `zero | dosing | constant-feasible`.
#[wasm_bindgen]
pub fn simulate_schedule(config_json: &str, seed: &str) -> Result<String, JsError> {
    simulate_impl(config_json, seed).map_err(|e| JsError::new(&e))
}

/// Runs the projected gradient descent and returns the iteration log plus
/// the optimized schedule's traces.
#[wasm_bindgen]
pub fn optimize_schedule(config_json: &str, seed: &str) -> Result<String, JsError> {
    optimize_impl(config_json, seed).map_err(|e| JsError::new(&e))
}

/// Tumor density snapshot at `day` for a seed name or explicit control
/// (`control_json` is `{"seed": "..."} | {"values": [...]}`; empty means the
/// dosing seed).
#[wasm_bindgen]
pub fn density_field(config_json: &str, control_json: &str, day: f64) -> Result<String, JsError> {
    density_field_impl(config_json, control_json, day).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips() {
        let text = default_config();
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.grid.nx, 31);
        assert_eq!(cfg.time.nt, 672);
    }

    #[test]
    fn overlay_merges_partial_fragments() {
        let cfg = parse_config(r#"{"model": {"m0": 0.7}, "time": {"nt": 336}}"#).unwrap();
        assert_eq!(cfg.model.m0, 0.7);
        assert_eq!(cfg.time.nt, 336);
        assert_eq!(cfg.grid.nx, 31); // demo default retained
        assert_eq!(cfg.model.s_plus, 0.8);
    }

    #[test]
    fn simulate_returns_plot_arrays() {
        let out = simulate_impl("", "dosing").unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["trace"]["t"].as_array().unwrap().len(), 673);
        assert_eq!(v["trace"]["u"].as_array().unwrap().len(), 672);
        assert_eq!(v["trace"]["profiles"].as_array().unwrap().len(), 5);
        assert_eq!(v["feasible"], serde_json::Value::Bool(true));
    }

    #[test]
    fn optimize_returns_monotone_objective() {
        let cfg = r#"{"grid": {"nx": 15, "ny": 15}, "optimizer": {"max_iters": 4}}"#;
        let out = optimize_impl(cfg, "dosing").unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let iterates = v["iterates"].as_array().unwrap();
        assert!(iterates.len() >= 2 && iterates.len() <= 5);
        let js: Vec<f64> = iterates
            .iter()
            .map(|r| r["j_eps"].as_f64().unwrap())
            .collect();
        for w in js.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn density_field_shapes_and_errors() {
        let cfg = r#"{"grid": {"nx": 15, "ny": 15}}"#;
        let out = density_field_impl(cfg, r#"{"seed": "zero"}"#, 28.0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["values"].as_array().unwrap().len(), 225);
        assert!(v["max"].as_f64().unwrap() > 0.0);
        assert!(density_field_impl(cfg, "", 99.0).is_err());
        assert!(density_field_impl(cfg, r#"{"values": [1.0]}"#, 7.0).is_err());
    }
}
