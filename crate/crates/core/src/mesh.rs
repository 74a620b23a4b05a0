//! Uniform time partition of `(0, T)` and the control / node-series types
//! living on it.
//!
//! Node quantities (`s`, `p2`, field snapshots) carry `nt + 1` samples at
//! `t_n = n * dt`; the control `u` is piecewise constant with one value per
//! interval. The `L^2(0, T)` norm of a piecewise-constant control is the
//! exact interval sum; node series use composite-trapezoid quadrature.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TimeMesh {
    nt: usize,
    dt: f64,
    t_end: f64,
}

impl TimeMesh {
    pub fn new(t_end: f64, nt: usize) -> Result<Self> {
        if !(t_end > 0.0) {
            return Err(Error::config("time.t_end", "must be positive"));
        }
        if nt == 0 {
            return Err(Error::config("time.nt", "must be at least 1"));
        }
        Ok(TimeMesh {
            nt,
            dt: t_end / nt as f64,
            t_end,
        })
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Node time `t_n`.
    pub fn t(&self, n: usize) -> f64 {
        if n == self.nt {
            self.t_end
        } else {
            n as f64 * self.dt
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.nt).map(|n| self.t(n))
    }

    /// Index of the node holding time `t`, required to lie on the mesh.
    /// Used to anchor the lower-constraint activation time `t0`.
    pub fn node_index_of(&self, t: f64, field: &str) -> Result<usize> {
        let raw = t / self.dt;
        let n = raw.round() as usize;
        if n > self.nt || (raw - n as f64).abs() > 1e-9 * self.nt as f64 {
            return Err(Error::config(
                field,
                format!(
                    "t = {t} does not lie on the time mesh (dt = {}); adjust nt so it divides evenly",
                    self.dt
                ),
            ));
        }
        Ok(n)
    }

    /// Composite-trapezoid `L^2(0,T)` norm of a node series.
    pub fn node_l2_norm(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.nt + 1, "node series length");
        let mut acc = 0.5 * (v[0] * v[0] + v[self.nt] * v[self.nt]);
        for x in &v[1..self.nt] {
            acc += x * x;
        }
        (acc * self.dt).sqrt()
    }
}

/// Piecewise-constant control on the mesh intervals (one value per interval,
/// units 1/day).
#[derive(Debug, Clone, PartialEq)]
pub struct Control {
    values: Vec<f64>,
}

impl Control {
    pub fn new(values: Vec<f64>) -> Self {
        Control { values }
    }

    pub fn zeros(mesh: &TimeMesh) -> Self {
        Control {
            values: vec![0.0; mesh.nt()],
        }
    }

    pub fn constant(mesh: &TimeMesh, value: f64) -> Self {
        Control {
            values: vec![value; mesh.nt()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn check_mesh(&self, mesh: &TimeMesh) -> Result<()> {
        if self.values.len() != mesh.nt() {
            return Err(Error::SizeMismatch(format!(
                "control has {} intervals, mesh has {}",
                self.values.len(),
                mesh.nt()
            )));
        }
        Ok(())
    }

    /// Exact `L^2(0,T)` norm: `sqrt(sum dt * u_n^2)`.
    pub fn l2_norm(&self, mesh: &TimeMesh) -> f64 {
        let acc: f64 = self.values.iter().map(|u| u * u).sum();
        (acc * mesh.dt()).sqrt()
    }

    /// Exact `L^2(0,T)` inner product with another control.
    pub fn l2_dot(&self, other: &Control, mesh: &TimeMesh) -> f64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        let acc: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        acc * mesh.dt()
    }

    /// `self + scale * other`, elementwise.
    pub fn axpy(&self, scale: f64, other: &Control) -> Control {
        debug_assert_eq!(self.values.len(), other.values.len());
        Control {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + scale * b)
                .collect(),
        }
    }

    pub fn clamp_nonnegative(&mut self) {
        for v in &mut self.values {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
}
