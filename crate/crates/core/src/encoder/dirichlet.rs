//! Linear Dirichlet encoder `alpha(x) = alpha_min + softplus(A phi(x))`.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::family::{DirichletDraw, DirichletParams, GammaNoise, LatentModel};
use crate::encoder::input::{FeatureMap, Input};
use crate::encoder::linear::{LinearMap, Parameters};
use crate::error::{Error, Result};
use crate::special::{sigmoid, softplus};

pub const ALPHA_MIN: f64 = 1e-3;

/// Checkpoint format version written by [`DirichletEncoder::to_checkpoint`].
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletEncoder {
    feature_map: FeatureMap,
    k: usize,
    weights: LinearMap,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    kind: String,
    encoder: DirichletEncoder,
}

/// Columns of `phi` that are constant over inputs, used to centre the
/// initial concentrations at one.
fn bias_columns(fm: &FeatureMap) -> Vec<usize> {
    match fm {
        FeatureMap::OneHot { n } => (0..*n).collect(),
        FeatureMap::Harmonics { .. } | FeatureMap::Affine { .. } => vec![0],
    }
}

impl DirichletEncoder {
    /// Random weights of scale `init_scale`, shifted so that `alpha` starts
    /// near the flat Dirichlet.
    pub fn new(feature_map: FeatureMap, k: usize, init_scale: f64, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!(
                "Dirichlet encoder needs K >= 2, got {k}"
            )));
        }
        let mut weights = LinearMap::random(k, feature_map.dim(), init_scale, seed);
        // softplus(z0) + alpha_min = 1
        let z0 = (1.0 - ALPHA_MIN).exp_m1().ln();
        for c in bias_columns(&feature_map) {
            for r in 0..k {
                weights.set(r, c, weights.get(r, c) + z0);
            }
        }
        Ok(Self {
            feature_map,
            k,
            weights,
        })
    }

    pub fn from_weights(feature_map: FeatureMap, weights: LinearMap) -> Result<Self> {
        if weights.cols() != feature_map.dim() {
            return Err(Error::DimensionMismatch {
                what: "weight columns",
                expected: feature_map.dim(),
                found: weights.cols(),
            });
        }
        if weights.rows() < 2 {
            return Err(Error::InvalidArgument("Dirichlet encoder needs K >= 2".into()));
        }
        Ok(Self {
            feature_map,
            k: weights.rows(),
            weights,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn feature_map(&self) -> &FeatureMap {
        &self.feature_map
    }

    pub fn weights(&self) -> &LinearMap {
        &self.weights
    }

    /// `(alpha, d alpha / d logit)` at features `f`.
    pub(crate) fn alpha_from_features(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.weights
            .apply(f)
            .into_iter()
            .map(|z| (ALPHA_MIN + softplus(z), sigmoid(z)))
            .unzip()
    }

    pub fn alpha(&self, x: &Input) -> Result<Vec<f64>> {
        Ok(self.alpha_from_features(&self.feature_map.features(x)?).0)
    }

    pub fn mean(&self, x: &Input) -> Result<Vec<f64>> {
        Ok(DirichletParams::new(self.alpha(x)?).mean())
    }

    /// Fresh gamma noise for one draw at input `x`.
    pub fn draw_noise(&self, x: &Input, rng: &mut ChaCha8Rng) -> Result<Vec<GammaNoise>> {
        Ok(self.alpha(x)?.into_iter().map(|a| GammaNoise::draw(a, rng)).collect())
    }

    /// Adds `d loss / d weights` to `grad`, given `d loss / d alpha` at
    /// features `f`.
    pub(crate) fn backprop(&self, f: &[f64], d_alpha: &[f64], grad: &mut [f64]) {
        let (_, slope) = self.alpha_from_features(f);
        let dz: Vec<f64> = d_alpha.iter().zip(&slope).map(|(d, s)| d * s).collect();
        self.weights.accumulate_grad(f, &dz, grad);
    }

    pub fn to_checkpoint(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Checkpoint {
            version: CHECKPOINT_VERSION,
            kind: "dirichlet".into(),
            encoder: self.clone(),
        })?)
    }

    pub fn from_checkpoint(s: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(s)?;
        if c.version != CHECKPOINT_VERSION || c.kind != "dirichlet" {
            return Err(Error::InvalidArgument(format!(
                "unsupported checkpoint {} version {}",
                c.kind, c.version
            )));
        }
        Self::from_weights(c.encoder.feature_map, c.encoder.weights)
    }
}

impl Parameters for DirichletEncoder {
    fn params(&self) -> Vec<f64> {
        self.weights.weights().to_vec()
    }

    fn set_params(&mut self, p: &[f64]) -> Result<()> {
        self.weights.set_flat(p)
    }
}

impl LatentModel for DirichletEncoder {
    type Params = DirichletParams;
    type Draw = DirichletDraw;

    fn params(&self, x: &Input) -> Result<DirichletParams> {
        Ok(DirichletParams::new(self.alpha(x)?))
    }

    fn draw(&self, p: &DirichletParams, rng: &mut ChaCha8Rng) -> DirichletDraw {
        let lx = p
            .alpha
            .iter()
            .map(|&a| GammaNoise::draw(a, rng).log_gamma(a).0)
            .collect();
        DirichletDraw::from_log_gamma(lx)
    }

    fn log_density(&self, p: &DirichletParams, w: &DirichletDraw) -> f64 {
        p.log_density_log(&w.ell)
    }

    /// `(1, log w_1, ..., log w_K)`.
    fn readout_features(&self, w: &DirichletDraw) -> Vec<f64> {
        std::iter::once(1.0).chain(w.ell.iter().copied()).collect()
    }
}
