//! Flux-form diffusion stencil on the grid interior and a conjugate-gradient
//! solver for the shifted systems arising from implicit Euler stepping.
//!
//! The operator encodes `-div(k grad .)` with a 5-point stencil whose face
//! diffusivities are harmonic means of the adjacent node values; Dirichlet
//! boundary unknowns are eliminated (their value is zero). Face coefficients
//! are shared between the two adjacent rows, so the matrix is symmetric by
//! construction, and `(A z, z) = sum_faces k_face (dz)^2 >= 0` makes every
//! shifted system `sigma I + tau A` with `sigma > 0`, `tau >= 0` symmetric
//! positive definite.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

#[derive(Debug, Clone)]
pub struct DiffusionOperator {
    nx: usize,
    ny: usize,
    inv_hx2: f64,
    inv_hy2: f64,
    /// Face coefficients between `(i-1, j)` and `(i, j)`, indexed
    /// `j * (nx + 1) + i` for `i` in `0..=nx`. Domain-boundary faces carry
    /// the single adjacent node's `k`.
    face_x: Vec<f64>,
    /// Face coefficients between `(i, j-1)` and `(i, j)`, indexed
    /// `j * nx + i` for `j` in `0..=ny`.
    face_y: Vec<f64>,
}

/// Options for the shifted-system conjugate-gradient solves.
#[derive(Debug, Clone, Copy)]
pub struct SolverOpts {
    /// Relative residual target; the step contract requires at most 1e-10.
    pub cg_tol: f64,
    /// Iteration cap; 0 selects `10 n + 100`.
    pub cg_max_iters: usize,
    /// Worker threads for the stencil application; 1 keeps everything on the
    /// calling thread. Results are identical for any value.
    pub threads: usize,
}

impl Default for SolverOpts {
    fn default() -> Self {
        SolverOpts {
            cg_tol: 1e-12,
            cg_max_iters: 0,
            threads: 1,
        }
    }
}

impl DiffusionOperator {
    /// Assembles the stencil from the grid's diffusion field. Fails if the
    /// field violates `k > 0` anywhere (checked again here because operators
    /// can outlive grid edits).
    pub fn assemble(grid: &Grid) -> Result<Self> {
        let (k0, _) = grid.k_bounds();
        if !(k0 > 0.0) {
            return Err(Error::config(
                "grid.k",
                "diffusion coefficient must be positive everywhere",
            ));
        }
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut face_x = vec![0.0; (nx + 1) * ny];
        for j in 0..ny {
            for i in 0..=nx {
                face_x[j * (nx + 1) + i] = if i == 0 {
                    grid.k_at(0, j)
                } else if i == nx {
                    grid.k_at(nx - 1, j)
                } else {
                    harmonic(grid.k_at(i - 1, j), grid.k_at(i, j))
                };
            }
        }
        let mut face_y = vec![0.0; nx * (ny + 1)];
        for j in 0..=ny {
            for i in 0..nx {
                face_y[j * nx + i] = if j == 0 {
                    grid.k_at(i, 0)
                } else if j == ny {
                    grid.k_at(i, ny - 1)
                } else {
                    harmonic(grid.k_at(i, j - 1), grid.k_at(i, j))
                };
            }
        }
        Ok(DiffusionOperator {
            nx,
            ny,
            inv_hx2: 1.0 / (grid.hx() * grid.hx()),
            inv_hy2: 1.0 / (grid.hy() * grid.hy()),
            face_x,
            face_y,
        })
    }

    pub fn n(&self) -> usize {
        self.nx * self.ny
    }

    /// `out = (sigma I + tau A) x`.
    pub fn apply_shifted(&self, sigma: f64, tau: f64, x: &[f64], out: &mut [f64], threads: usize) {
        debug_assert_eq!(x.len(), self.n());
        debug_assert_eq!(out.len(), self.n());
        if threads > 1 && self.ny >= 2 * threads {
            let rows_per = self.ny.div_ceil(threads);
            let nx = self.nx;
            std::thread::scope(|scope| {
                for (chunk_idx, chunk) in out.chunks_mut(rows_per * nx).enumerate() {
                    let j0 = chunk_idx * rows_per;
                    scope.spawn(move || {
                        self.apply_rows(sigma, tau, x, chunk, j0);
                    });
                }
            });
        } else {
            self.apply_rows(sigma, tau, x, out, 0);
        }
    }

    /// `out = A x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.apply_shifted(0.0, 1.0, x, out, 1);
    }

    fn apply_rows(&self, sigma: f64, tau: f64, x: &[f64], out: &mut [f64], j0: usize) {
        let nx = self.nx;
        for (row, out_row) in out.chunks_mut(nx).enumerate() {
            let j = j0 + row;
            let fx = &self.face_x[j * (nx + 1)..(j + 1) * (nx + 1)];
            let fy_s = &self.face_y[j * nx..(j + 1) * nx];
            let fy_n = &self.face_y[(j + 1) * nx..(j + 2) * nx];
            for i in 0..nx {
                let c = j * nx + i;
                let xc = x[c];
                let mut acc = (fx[i] + fx[i + 1]) * self.inv_hx2 * xc
                    + (fy_s[i] + fy_n[i]) * self.inv_hy2 * xc;
                if i > 0 {
                    acc -= fx[i] * self.inv_hx2 * x[c - 1];
                }
                if i + 1 < nx {
                    acc -= fx[i + 1] * self.inv_hx2 * x[c + 1];
                }
                if j > 0 {
                    acc -= fy_s[i] * self.inv_hy2 * x[c - nx];
                }
                if j + 1 < self.ny {
                    acc -= fy_n[i] * self.inv_hy2 * x[c + nx];
                }
                out_row[i] = sigma * xc + tau * acc;
            }
        }
    }

    /// Explicit matrix row `(diagonal, off-diagonal entries)` of `A` for node
    /// `(i, j)`; used by symmetry and row-sum checks.
    pub fn row_entries(&self, i: usize, j: usize) -> (f64, Vec<(usize, usize, f64)>) {
        let nx = self.nx;
        let fx = |ii: usize| self.face_x[j * (nx + 1) + ii];
        let fy = |jj: usize| self.face_y[jj * nx + i];
        let diag =
            (fx(i) + fx(i + 1)) * self.inv_hx2 + (fy(j) + fy(j + 1)) * self.inv_hy2;
        let mut off = Vec::with_capacity(4);
        if i > 0 {
            off.push((i - 1, j, -fx(i) * self.inv_hx2));
        }
        if i + 1 < nx {
            off.push((i + 1, j, -fx(i + 1) * self.inv_hx2));
        }
        if j > 0 {
            off.push((i, j - 1, -fy(j) * self.inv_hy2));
        }
        if j + 1 < self.ny {
            off.push((i, j + 1, -fy(j + 1) * self.inv_hy2));
        }
        (diag, off)
    }

    /// Rayleigh quotient `(A z, z) / (z, z)` in the plain Euclidean inner
    /// product (the cell-area factor cancels).
    pub fn rayleigh(&self, z: &[f64]) -> f64 {
        let mut az = vec![0.0; z.len()];
        self.apply(z, &mut az);
        let num: f64 = az.iter().zip(z).map(|(a, b)| a * b).sum();
        let den: f64 = z.iter().map(|v| v * v).sum();
        num / den
    }

    /// Solves `(sigma I + tau A) x = b` by conjugate gradients to the
    /// relative residual in `opts`, starting from `x0` when given.
    pub fn solve_shifted(
        &self,
        sigma: f64,
        tau: f64,
        b: &[f64],
        x0: Option<&[f64]>,
        opts: &SolverOpts,
    ) -> Result<Vec<f64>> {
        let n = self.n();
        assert_eq!(b.len(), n, "rhs length");
        let b_norm = norm(b);
        if b_norm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let max_iters = if opts.cg_max_iters == 0 {
            10 * n + 100
        } else {
            opts.cg_max_iters
        };

        let mut x = match x0 {
            Some(x0) => x0.to_vec(),
            None => vec![0.0; n],
        };
        let mut r = vec![0.0; n];
        self.apply_shifted(sigma, tau, &x, &mut r, opts.threads);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rho = dot(&r, &r);
        let mut history = Vec::new();
        let target = opts.cg_tol * b_norm;

        for _ in 0..max_iters {
            let rel = rho.sqrt() / b_norm;
            history.push(rel);
            if !rel.is_finite() {
                // Indefinite or non-finite system; bail with the trace.
                return Err(Error::SolveDiverged {
                    iters: history.len(),
                    last: rel,
                    target: opts.cg_tol,
                    residuals: history,
                });
            }
            if rho.sqrt() <= target {
                return Ok(x);
            }
            self.apply_shifted(sigma, tau, &p, &mut ap, opts.threads);
            let alpha = rho / dot(&p, &ap);
            for (xi, pi) in x.iter_mut().zip(&p) {
                *xi += alpha * pi;
            }
            for (ri, api) in r.iter_mut().zip(&ap) {
                *ri -= alpha * api;
            }
            let rho_new = dot(&r, &r);
            let beta = rho_new / rho;
            rho = rho_new;
            for (pi, ri) in p.iter_mut().zip(&r) {
                *pi = ri + beta * *pi;
            }
        }

        let last = rho.sqrt() / b_norm;
        if rho.sqrt() <= target {
            return Ok(x);
        }
        Err(Error::SolveDiverged {
            iters: max_iters,
            last,
            target: opts.cg_tol,
            residuals: history,
        })
    }

    /// Convenience wrapper returning a [`Field`].
    pub fn solve_shifted_field(
        &self,
        sigma: f64,
        tau: f64,
        rhs: &Field,
        x0: Option<&Field>,
        opts: &SolverOpts,
    ) -> Result<Field> {
        let x = self.solve_shifted(sigma, tau, rhs.data(), x0.map(|f| f.data()), opts)?;
        Ok(Field::from_raw(rhs.nx(), rhs.ny(), x))
    }
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn eigenmode(grid: &Grid) -> Field {
        let l = grid.edge();
        Field::from_fn(grid, |x, y| (PI * x / l).sin() * (PI * y / l).sin())
    }

    /// Exact smallest eigenvalue of the constant-k stencil.
    fn discrete_eigenvalue(grid: &Grid, k: f64) -> f64 {
        let l = grid.edge();
        let ex = (PI * grid.hx() / (2.0 * l)).sin().powi(2) * 4.0 / (grid.hx() * grid.hx());
        let ey = (PI * grid.hy() / (2.0 * l)).sin().powi(2) * 4.0 / (grid.hy() * grid.hy());
        k * (ex + ey)
    }

    #[test]
    fn single_interior_node_is_scalar_stencil() {
        let g = Grid::uniform(1, 1, 3.0, 0.7).unwrap();
        let a = DiffusionOperator::assemble(&g).unwrap();
        let h = 1.5;
        let mut out = vec![0.0];
        a.apply(&[1.0], &mut out);
        assert!((out[0] - 4.0 * 0.7 / (h * h)).abs() < 1e-14);
    }

    #[test]
    fn eigenmode_matches_discrete_and_continuum_eigenvalue() {
        let k = 0.3;
        let g = Grid::uniform(31, 31, 3.0, k).unwrap();
        let a = DiffusionOperator::assemble(&g).unwrap();
        let v = eigenmode(&g);
        let mut av = vec![0.0; v.data().len()];
        a.apply(v.data(), &mut av);

        let mu_h = discrete_eigenvalue(&g, k);
        for (avi, vi) in av.iter().zip(v.data()) {
            assert!((avi - mu_h * vi).abs() < 1e-12 * mu_h, "not an eigenvector");
        }
        // Discrete eigenvalue approximates the continuum 2 k (pi/L)^2 to O(h^2).
        let mu = 2.0 * k * (PI / 3.0) * (PI / 3.0);
        let h = g.hx();
        assert!((mu_h - mu).abs() < mu * h * h, "{mu_h} vs {mu}");
    }

    #[test]
    fn matrix_is_symmetric_with_nonnegative_row_sums() {
        // Variable k to exercise the harmonic means.
        let g = Grid::with_k_field(
            7,
            5,
            2.0,
            (0..35).map(|i| 0.5 + 0.1 * (i % 4) as f64).collect(),
        )
        .unwrap();
        let a = DiffusionOperator::assemble(&g).unwrap();
        let mut entries = std::collections::HashMap::new();
        for j in 0..5 {
            for i in 0..7 {
                let (diag, off) = a.row_entries(i, j);
                let mut row_sum = diag;
                for (oi, oj, v) in off {
                    entries.insert(((i, j), (oi, oj)), v);
                    row_sum += v;
                }
                // Exact zero for fully interior rows up to cancellation noise
                // at the stencil's magnitude.
                assert!(row_sum >= -1e-13 * diag, "row sum at ({i},{j}) = {row_sum}");
            }
        }
        for (&((a_, b_), (c_, d_)), &v) in &entries {
            let mirror = entries[&((c_, d_), (a_, b_))];
            assert_eq!(v, mirror, "asymmetry at ({a_},{b_}) vs ({c_},{d_})");
        }
    }

    #[test]
    fn coercive_above_k0_times_poincare() {
        let g = Grid::with_k_field(
            9,
            9,
            3.0,
            (0..81).map(|i| 0.2 + 0.05 * (i % 5) as f64).collect(),
        )
        .unwrap();
        let a = DiffusionOperator::assemble(&g).unwrap();
        let (k0, _) = g.k_bounds();
        let mu1_laplacian = discrete_eigenvalue(&g, 1.0);
        // (A z, z) >= k0 (A_lap z, z) >= k0 mu1 ||z||^2 for any z.
        let mut z: Vec<f64> = (0..81).map(|i| ((i * 37 % 17) as f64 - 8.0) / 8.0).collect();
        z[40] += 0.5;
        let q = a.rayleigh(&z);
        assert!(q >= k0 * mu1_laplacian * (1.0 - 1e-12), "{q}");
    }

    #[test]
    fn cg_meets_residual_contract() {
        let g = Grid::uniform(12, 10, 3.0, 0.4).unwrap();
        let a = DiffusionOperator::assemble(&g).unwrap();
        let b: Vec<f64> = (0..120).map(|i| ((i * 31 % 23) as f64 - 11.0) / 11.0).collect();
        let opts = SolverOpts::default();
        let (sigma, tau) = (0.97, 0.01);
        let x = a.solve_shifted(sigma, tau, &b, None, &opts).unwrap();
        let mut res = vec![0.0; 120];
        a.apply_shifted(sigma, tau, &x, &mut res, 1);
        let rel = res
            .iter()
            .zip(&b)
            .map(|(r, bb)| (r - bb) * (r - bb))
            .sum::<f64>()
            .sqrt()
            / b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(rel <= 1e-10, "relative residual {rel}");
    }

    #[test]
    fn cg_failure_carries_history() {
        let g = Grid::uniform(16, 16, 3.0, 5.0).unwrap();
        let a = DiffusionOperator::assemble(&g).unwrap();
        let b = vec![1.0; 256];
        let opts = SolverOpts {
            cg_max_iters: 2,
            ..Default::default()
        };
        match a.solve_shifted(1.0, 1.0, &b, None, &opts) {
            Err(Error::SolveDiverged { residuals, .. }) => assert_eq!(residuals.len(), 2),
            other => panic!("expected SolveDiverged, got {other:?}"),
        }
    }

    #[test]
    fn threaded_apply_is_bit_identical() {
        let g = Grid::uniform(13, 11, 2.0, 0.9).unwrap();
        let a = DiffusionOperator::assemble(&g).unwrap();
        let x: Vec<f64> = (0..143).map(|i| (i as f64).sin()).collect();
        let mut serial = vec![0.0; 143];
        let mut threaded = vec![0.0; 143];
        a.apply_shifted(0.3, 0.7, &x, &mut serial, 1);
        a.apply_shifted(0.3, 0.7, &x, &mut threaded, 4);
        assert_eq!(serial, threaded);
    }
}
