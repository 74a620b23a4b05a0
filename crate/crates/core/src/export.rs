//! Deterministic plain-text renderers: CSV time series, matrix field dumps,
//! and legacy-VTK structured points. All values are written in day/cm units
//! with the unit spelled out in the header, using a fixed float format so
//! identical inputs produce byte-identical files.

use crate::grid::{Field, Grid};
use crate::mesh::{Control, TimeMesh};
use crate::optimizer::IterateRecord;
use crate::params::ModelParams;
use std::fmt::Write;

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

/// Drug concentration trace with the constraint levels and the critical
/// concentration alongside, one row per mesh node.
pub fn s_csv(mesh: &TimeMesh, s: &[f64], p: &ModelParams) -> String {
    assert_eq!(s.len(), mesh.nt() + 1, "node series length");
    let mut out = String::new();
    out.push_str("t_day,s,s_minus,s_plus,s_c\n");
    let s_c = p.growth.s_m();
    for (n, &sv) in s.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt(mesh.t(n)),
            fmt(sv),
            fmt(p.s_minus),
            fmt(p.s_plus),
            fmt(s_c)
        );
    }
    out
}

/// Piecewise-constant control, one row per interval (t = interval start).
pub fn u_csv(mesh: &TimeMesh, u: &Control) -> String {
    let mut out = String::new();
    out.push_str("t_day,u_per_day\n");
    for (n, &un) in u.values().iter().enumerate() {
        let _ = writeln!(out, "{},{}", fmt(mesh.t(n)), fmt(un));
    }
    out
}

/// Reduced gradient next to the control, for debugging descent behavior.
pub fn gradient_csv(mesh: &TimeMesh, u: &Control, g: &Control) -> String {
    let mut out = String::new();
    out.push_str("t_day,u_per_day,gradient\n");
    for n in 0..u.len() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt(mesh.t(n)),
            fmt(u.values()[n]),
            fmt(g.values()[n])
        );
    }
    out
}

/// Optimizer iteration log, one row per iterate.
pub fn iterates_csv(records: &[IterateRecord]) -> String {
    let mut out = String::new();
    out.push_str(
        "k,j,j_eps,penalty_upper,penalty_lower,grad_norm,max_violation_upper,max_violation_lower\n",
    );
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.k,
            fmt(r.j),
            fmt(r.j_eps),
            fmt(r.penalty_upper),
            fmt(r.penalty_lower),
            fmt(r.grad_norm),
            fmt(r.max_violation_upper),
            fmt(r.max_violation_lower)
        );
    }
    out
}

/// One CSV row per iterate, matching [`iterates_csv`]'s header; used to
/// stream records as the run progresses.
pub fn iterate_row(r: &IterateRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{}\n",
        r.k,
        fmt(r.j),
        fmt(r.j_eps),
        fmt(r.penalty_upper),
        fmt(r.penalty_lower),
        fmt(r.grad_norm),
        fmt(r.max_violation_upper),
        fmt(r.max_violation_lower)
    )
}

pub const ITERATES_HEADER: &str =
    "k,j,j_eps,penalty_upper,penalty_lower,grad_norm,max_violation_upper,max_violation_lower\n";

/// Density along the horizontal center line at several snapshots: first
/// column is x (cm), one column per snapshot labeled with its day.
pub fn cross_section_csv(grid: &Grid, snapshots: &[(f64, &Field)]) -> String {
    let mut out = String::new();
    out.push_str("x_cm");
    for (t, _) in snapshots {
        let _ = write!(out, ",y_d{t:.3}");
    }
    out.push('\n');
    let lines: Vec<Vec<f64>> = snapshots
        .iter()
        .map(|(_, f)| f.center_line(grid))
        .collect();
    for i in 0..grid.nx() {
        let (x, _) = grid.coords(i, grid.center_row());
        let _ = write!(out, "{}", fmt(x));
        for line in &lines {
            let _ = write!(out, ",{}", fmt(line[i]));
        }
        out.push('\n');
    }
    out
}

/// Plain-text matrix dump: `ny` rows of `nx` space-separated values, row
/// `j = 0` (bottom of the domain) first.
pub fn field_matrix(field: &Field) -> String {
    let mut out = String::new();
    for j in 0..field.ny() {
        for i in 0..field.nx() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&fmt(field.at(i, j)));
        }
        out.push('\n');
    }
    out
}

/// Legacy-VTK structured points file for visualization tools.
pub fn field_vtk(grid: &Grid, field: &Field, name: &str) -> String {
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(out, "{name}");
    out.push_str("ASCII\nDATASET STRUCTURED_POINTS\n");
    let _ = writeln!(out, "DIMENSIONS {} {} 1", grid.nx(), grid.ny());
    let _ = writeln!(out, "ORIGIN {} {} 0.0", fmt(grid.hx()), fmt(grid.hy()));
    let _ = writeln!(out, "SPACING {} {} 1.0", fmt(grid.hx()), fmt(grid.hy()));
    let _ = writeln!(out, "POINT_DATA {}", grid.n_interior());
    let _ = writeln!(out, "SCALARS {name} double 1");
    out.push_str("LOOKUP_TABLE default\n");
    for v in field.data() {
        let _ = writeln!(out, "{}", fmt(*v));
    }
    out
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

    #[test]
    fn s_csv_has_constraint_columns() {
        let mesh = TimeMesh::new(1.0, 2).unwrap();
        let text = s_csv(&mesh, &[0.0, 0.5, 0.6], &params());
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t_day,s,s_minus,s_plus,s_c");
        assert_eq!(text.lines().count(), 4);
        assert!(text.contains("4.000000000000e-1"));
        assert!(text.contains("2.000000000000e-1"));
    }

    #[test]
    fn field_matrix_shape() {
        let grid = Grid::uniform(4, 3, 1.0, 1.0).unwrap();
        let f = Field::from_fn(&grid, |x, y| x + y);
        let text = field_matrix(&f);
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 3);
        for row in rows {
            assert_eq!(row.split(' ').count(), 4);
        }
    }

    #[test]
    fn vtk_header_contract() {
        let grid = Grid::uniform(4, 3, 1.0, 1.0).unwrap();
        let f = Field::zeros(&grid);
        let text = field_vtk(&grid, &f, "tumor_density");
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains("DIMENSIONS 4 3 1"));
        assert!(text.contains("SCALARS tumor_density double 1"));
        // 10 header lines + one value per node.
        assert_eq!(text.lines().count(), 10 + 12);
    }

    #[test]
    fn renderers_are_deterministic() {
        let mesh = TimeMesh::new(28.0, 8).unwrap();
        let u = Control::constant(&mesh, 0.1234567890123);
        assert_eq!(u_csv(&mesh, &u), u_csv(&mesh, &u));
        let grid = Grid::uniform(5, 5, 3.0, 1.0).unwrap();
        let f = Field::from_fn(&grid, |x, y| (x * y).sin());
        assert_eq!(field_matrix(&f), field_matrix(&f));
    }

    #[test]
    fn cross_section_columns() {
        let grid = Grid::uniform(5, 5, 3.0, 1.0).unwrap();
        let f0 = Field::from_fn(&grid, |_, _| 1.0);
        let f1 = Field::from_fn(&grid, |_, _| 0.5);
        let text = cross_section_csv(&grid, &[(0.0, &f0), (7.0, &f1)]);
        assert!(text.starts_with("x_cm,y_d0.000,y_d7.000\n"));
        assert_eq!(text.lines().count(), 6);
    }
}
