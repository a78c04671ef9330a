//! Real fields on a uniform periodic grid over the unit torus.

use serde::Serialize;
use thiserror::Error;

use crate::quad::pairwise_sum;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("dimension must be 1 or 2, got {0}")]
    Dimension(usize),
    #[error("resolution must be at least 3, got {0}")]
    Resolution(usize),
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("grids differ: {0:?} vs {1:?}")]
    Mismatch((usize, usize), (usize, usize)),
}

/// Values at cells `x_i = i h`, `h = 1/M`, stored with the first axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    dim: usize,
    m: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(dim: usize, m: usize, values: Vec<f64>) -> Result<Self, GridError> {
        if !(1..=2).contains(&dim) {
            return Err(GridError::Dimension(dim));
        }
        if m < 3 {
            return Err(GridError::Resolution(m));
        }
        let expected = m.pow(dim as u32);
        if values.len() != expected {
            return Err(GridError::Length {
                expected,
                got: values.len(),
            });
        }
        Ok(GridFunction { dim, m, values })
    }

    /// Samples `f` at the cell points; the second coordinate is 0 in 1D.
    pub fn from_fn(dim: usize, m: usize, f: impl Fn([f64; 2]) -> f64) -> Result<Self, GridError> {
        let values = crate::coefficients::cell_points(dim.clamp(1, 2), m)
            .into_iter()
            .map(f)
            .collect();
        GridFunction::new(dim, m, values)
    }

    pub fn constant(dim: usize, m: usize, c: f64) -> Result<Self, GridError> {
        GridFunction::new(dim, m, vec![c; m.pow(dim as u32)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
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

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        crate::coefficients::cell_points(self.dim, self.m)
    }

    pub fn same_grid(&self, other: &GridFunction) -> Result<(), GridError> {
        if self.dim != other.dim || self.m != other.m {
            Err(GridError::Mismatch((self.dim, self.m), (other.dim, other.m)))
        } else {
            Ok(())
        }
    }

    /// `sum_cells u`, pairwise.
    pub fn cell_sum(&self) -> f64 {
        pairwise_sum(&self.values)
    }

    /// `h^d sum_cells u`.
    pub fn mass(&self) -> f64 {
        self.cell_volume() * self.cell_sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `h^d sum_cells |u|^p`.
    pub fn lp_pow(&self, p: f64) -> f64 {
        let v: Vec<f64> = self.values.iter().map(|u| u.abs().powf(p)).collect();
        self.cell_volume() * pairwise_sum(&v)
    }

    pub fn l2_sq(&self) -> f64 {
        let v: Vec<f64> = self.values.iter().map(|u| u * u).collect();
        self.cell_volume() * pairwise_sum(&v)
    }

    /// `h^d sum_cells |D^+ g(u)|^2` over all axes (forward differences).
    pub fn forward_gradient_sq(&self, g: impl Fn(f64) -> f64) -> f64 {
        let gv: Vec<f64> = self.values.iter().map(|&u| g(u)).collect();
        let h = self.spacing();
        let mut terms = Vec::with_capacity(gv.len());
        for c in 0..gv.len() {
            let mut s = 0.0;
            for axis in 0..self.dim {
                let d = (gv[self.shift(c, axis, 1)] - gv[c]) / h;
                s += d * d;
            }
            terms.push(s);
        }
        self.cell_volume() * pairwise_sum(&terms)
    }

    /// Periodic neighbour of cell `c` along `axis` at offset `+1` or `-1`.
    #[inline]
    pub fn shift(&self, c: usize, axis: usize, offset: isize) -> usize {
        shift(self.m, c, axis, offset)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            dim: self.dim,
            m: self.m,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Periodic neighbour index on an `m`-per-axis grid.
#[inline]
pub fn shift(m: usize, c: usize, axis: usize, offset: isize) -> usize {
    let (i, rest) = if axis == 0 { (c % m, c - c % m) } else { ((c / m) % m, c % m + (c / (m * m)) * m * m) };
    let j = (i as isize + offset).rem_euclid(m as isize) as usize;
    if axis == 0 {
        rest + j
    } else {
        rest + j * m
    }
}

/// `h^d sum_cells |u - v|`.
pub fn l1_distance(u: &GridFunction, v: &GridFunction) -> Result<f64, GridError> {
    u.same_grid(v)?;
    let d: Vec<f64> = u.values.iter().zip(&v.values).map(|(a, b)| (a - b).abs()).collect();
    Ok(u.cell_volume() * pairwise_sum(&d))
}

/// Pointwise clamp to `[-n, n]`.
pub fn truncate_initial(xi: &GridFunction, n: f64) -> GridFunction {
    xi.map(|v| v.clamp(-n, n))
}
