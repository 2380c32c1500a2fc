//! Predictive-mismatch distortion between inputs and latent symbols.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{kl_raw, DecoderMap, JointPMF};

/// `d[x][w] = KL(p(y|x) || p(y|w))` in nats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionMatrix {
    n_inputs: usize,
    n_latent: usize,
    d: Vec<f64>,
}

impl DistortionMatrix {
    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_latent(&self) -> usize {
        self.n_latent
    }

    pub fn get(&self, x: usize, w: usize) -> f64 {
        self.d[x * self.n_latent + w]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.d[x * self.n_latent..(x + 1) * self.n_latent]
    }
}

/// Builds the distortion matrix of `dec` against the predictive rows of `j`.
///
/// Fails with [`Error::InfiniteDivergence`] when some decoder row misses the
/// support of some `p(y|x)`.
pub fn distortion_matrix(j: &JointPMF, dec: &DecoderMap) -> Result<DistortionMatrix> {
    if dec.n_outputs() != j.ny() {
        return Err(Error::DimensionMismatch {
            what: "decoder outputs",
            expected: j.ny(),
            found: dec.n_outputs(),
        });
    }
    let mut d = Vec::with_capacity(j.nx() * dec.n_latent());
    for x in 0..j.nx() {
        let p = j.conditional(x);
        for w in 0..dec.n_latent() {
            d.push(kl_raw(&p, dec.row(w)).map_err(|index| Error::InfiniteDivergence { index })?);
        }
    }
    Ok(DistortionMatrix {
        n_inputs: j.nx(),
        n_latent: dec.n_latent(),
        d,
    })
}

/// Distortion rows allowing `+inf` entries, for internal use by the solver.
pub(crate) fn distortion_raw(cond: &[Vec<f64>], dec: &[Vec<f64>]) -> Vec<Vec<f64>> {
    cond.iter()
        .map(|p| dec.iter().map(|q| kl_raw(p, q).unwrap_or(f64::INFINITY)).collect())
        .collect()
}
