use std::sync::Arc;

use crate::error::{Error, Result};

use super::Grid;

/// A real pair `(u, v)` sampled on a [`Grid`].
#[derive(Debug, Clone)]
pub struct FieldPair {
    grid: Arc<Grid>,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl FieldPair {
    pub fn new(grid: Arc<Grid>, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != grid.n() || v.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "field lengths ({}, {}) do not match grid n = {}",
                u.len(),
                v.len(),
                grid.n()
            )));
        }
        if let Some(j) = u.iter().chain(&v).position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("field entry {j} is not finite")));
        }
        Ok(FieldPair { grid, u, v })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.n();
        FieldPair { grid, u: vec![0.0; n], v: vec![0.0; n] }
    }

    /// Samples `(u(x), v(x))` at the grid points.
    pub fn from_fn(grid: Arc<Grid>, mut f: impl FnMut(f64) -> (f64, f64)) -> Result<Self> {
        let (u, v) = grid.x().iter().map(|&x| f(x)).unzip();
        Self::new(grid, u, v)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.u, self.v)
    }

    pub fn scaled(&self, t: f64) -> FieldPair {
        FieldPair {
            grid: self.grid.clone(),
            u: self.u.iter().map(|x| t * x).collect(),
            v: self.v.iter().map(|x| t * x).collect(),
        }
    }

    /// Pointwise `(|u|, |v|)`.
    pub fn abs(&self) -> FieldPair {
        FieldPair {
            grid: self.grid.clone(),
            u: self.u.iter().map(|x| x.abs()).collect(),
            v: self.v.iter().map(|x| x.abs()).collect(),
        }
    }

    /// `(u(x - s), v(x - s))` via spectral translation.
    pub fn translated(&self, s: f64) -> FieldPair {
        FieldPair {
            grid: self.grid.clone(),
            u: self.grid.translate(&self.u, s),
            v: self.grid.translate(&self.v, s),
        }
    }

    /// Cyclic shift by whole grid points towards larger x.
    pub fn rolled(&self, shift: isize) -> FieldPair {
        let n = self.grid.n() as isize;
        let r = shift.rem_euclid(n) as usize;
        let roll = |w: &[f64]| {
            let mut out = w.to_vec();
            out.rotate_right(r);
            out
        };
        FieldPair { grid: self.grid.clone(), u: roll(&self.u), v: roll(&self.v) }
    }

    pub fn is_zero(&self) -> bool {
        self.u.iter().chain(&self.v).all(|&x| x == 0.0)
    }

    /// `‖u‖² + ‖v‖²`.
    pub fn l2_sq(&self) -> f64 {
        let s: f64 = self.u.iter().chain(&self.v).map(|x| x * x).sum();
        s * self.grid.dx()
    }

    /// `‖∂ₓu‖² + ‖∂ₓv‖²` computed spectrally.
    pub fn grad_sq(&self) -> f64 {
        self.grid.grad_sq_from_spectrum(&self.grid.forward(&self.u))
            + self.grid.grad_sq_from_spectrum(&self.grid.forward(&self.v))
    }

    pub fn h1_sq(&self) -> f64 {
        self.l2_sq() + self.grad_sq()
    }

    pub fn linf_distance(&self, other: &FieldPair) -> f64 {
        self.u
            .iter()
            .zip(&other.u)
            .chain(self.v.iter().zip(&other.v))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn l2_distance(&self, other: &FieldPair) -> f64 {
        let s: f64 = self
            .u
            .iter()
            .zip(&other.u)
            .chain(self.v.iter().zip(&other.v))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (s * self.grid.dx()).sqrt()
    }

    pub fn same_grid(&self, other: &FieldPair) -> bool {
        *self.grid == *other.grid
    }
}
