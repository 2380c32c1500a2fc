//! Dense linear maps and the flat parameter view the optimizer works on.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anything trained by gradient descent on a flat parameter vector.
pub trait Parameters {
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, p: &[f64]) -> Result<()>;

    fn n_params(&self) -> usize {
        self.params().len()
    }
}

/// `y = A f` with `A` stored row-major, `rows x cols`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearMap {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
}

impl LinearMap {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
        }
    }

    /// Entries i.i.d. `N(0, scale^2)`.
    pub fn random(rows: usize, cols: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..rows * cols)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                scale * z
            })
            .collect();
        Self { rows, cols, weights }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                what: "weight row",
                expected: cols,
                found: r.len(),
            });
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            weights: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.weights[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.weights[r * self.cols + c] = v;
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(f).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `grad += dy f^T` for flat `grad` laid out like the weights.
    pub fn accumulate_grad(&self, f: &[f64], dy: &[f64], grad: &mut [f64]) {
        for (g_row, &d) in grad.chunks_exact_mut(self.cols).zip(dy) {
            if d != 0.0 {
                for (g, &x) in g_row.iter_mut().zip(f) {
                    *g += d * x;
                }
            }
        }
    }

    /// `A^T dy`.
    pub fn transpose_apply(&self, dy: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (row, &d) in self.weights.chunks_exact(self.cols).zip(dy) {
            for (o, &a) in out.iter_mut().zip(row) {
                *o += a * d;
            }
        }
        out
    }

    pub(crate) fn set_flat(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected: self.weights.len(),
                found: p.len(),
            });
        }
        self.weights.copy_from_slice(p);
        Ok(())
    }
}
