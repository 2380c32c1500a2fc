//! Diagonal Gaussian encoder, the softmax readout used as a decoder head,
//! and a categorical encoder wrapping a finite kernel.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::encoder::family::LatentModel;
use crate::encoder::input::{FeatureMap, Input};
use crate::encoder::linear::{LinearMap, Parameters};
use crate::error::{Error, Result};
use crate::prob::EncoderKernel;
use crate::special::log_sum_exp;

/// `q(w|x) = N(mu(x), diag exp(logvar(x)))` with both heads linear in the
/// features. Variances are positive by construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianEncoder {
    feature_map: FeatureMap,
    mu: LinearMap,
    logvar: LinearMap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianParams {
    pub mu: Vec<f64>,
    pub logvar: Vec<f64>,
}

impl GaussianEncoder {
    /// Random mean head of scale `init_scale`, log-variance head at zero.
    pub fn new(feature_map: FeatureMap, d: usize, init_scale: f64, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("latent dimension must be positive".into()));
        }
        let f = feature_map.dim();
        Ok(Self {
            mu: LinearMap::random(d, f, init_scale, seed),
            logvar: LinearMap::zeros(d, f),
            feature_map,
        })
    }

    pub fn from_heads(feature_map: FeatureMap, mu: LinearMap, logvar: LinearMap) -> Result<Self> {
        for (what, m) in [("mean head columns", &mu), ("log-variance head columns", &logvar)] {
            if m.cols() != feature_map.dim() {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: feature_map.dim(),
                    found: m.cols(),
                });
            }
        }
        if mu.rows() != logvar.rows() {
            return Err(Error::DimensionMismatch {
                what: "log-variance head rows",
                expected: mu.rows(),
                found: logvar.rows(),
            });
        }
        Ok(Self {
            feature_map,
            mu,
            logvar,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.rows()
    }

    pub fn feature_map(&self) -> &FeatureMap {
        &self.feature_map
    }

    pub fn mean(&self, x: &Input) -> Result<Vec<f64>> {
        Ok(self.mu.apply(&self.feature_map.features(x)?))
    }

    pub(crate) fn heads(&self) -> (&LinearMap, &LinearMap) {
        (&self.mu, &self.logvar)
    }
}

impl Parameters for GaussianEncoder {
    fn params(&self) -> Vec<f64> {
        [self.mu.weights(), self.logvar.weights()].concat()
    }

    fn set_params(&mut self, p: &[f64]) -> Result<()> {
        let n = self.mu.weights().len();
        if p.len() != 2 * n {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected: 2 * n,
                found: p.len(),
            });
        }
        self.mu.set_flat(&p[..n])?;
        self.logvar.set_flat(&p[n..])
    }
}

impl LatentModel for GaussianEncoder {
    type Params = GaussianParams;
    type Draw = Vec<f64>;

    fn params(&self, x: &Input) -> Result<GaussianParams> {
        let f = self.feature_map.features(x)?;
        Ok(GaussianParams {
            mu: self.mu.apply(&f),
            logvar: self.logvar.apply(&f),
        })
    }

    fn draw(&self, p: &GaussianParams, rng: &mut ChaCha8Rng) -> Vec<f64> {
        p.mu.iter()
            .zip(&p.logvar)
            .map(|(m, lv)| m + (0.5 * lv).exp() * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    fn log_density(&self, p: &GaussianParams, w: &Vec<f64>) -> f64 {
        -0.5 * w
            .iter()
            .zip(&p.mu)
            .zip(&p.logvar)
            .map(|((w, m), lv)| (w - m) * (w - m) * (-lv).exp() + lv + (2.0 * PI).ln())
            .sum::<f64>()
    }

    /// `(1, w_1, ..., w_d)`.
    fn readout_features(&self, w: &Vec<f64>) -> Vec<f64> {
        std::iter::once(1.0).chain(w.iter().copied()).collect()
    }
}

/// Categorical encoder over a finite latent alphabet, read from an exact
/// kernel. It has no trainable parameters; it lets the sample-based
/// estimators be compared with exact finite-alphabet values.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelEncoder {
    kernel: EncoderKernel,
}

impl KernelEncoder {
    pub fn new(kernel: EncoderKernel) -> Self {
        Self { kernel }
    }

    pub fn kernel(&self) -> &EncoderKernel {
        &self.kernel
    }
}

impl LatentModel for KernelEncoder {
    type Params = Vec<f64>;
    type Draw = usize;

    fn params(&self, x: &Input) -> Result<Vec<f64>> {
        match x {
            Input::Discrete(i) if *i < self.kernel.n_inputs() => Ok(self.kernel.row(*i).to_vec()),
            _ => Err(Error::InvalidArgument(format!(
                "kernel encoder over {} symbols cannot read {x:?}",
                self.kernel.n_inputs()
            ))),
        }
    }

    fn draw(&self, p: &Vec<f64>, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (w, &q) in p.iter().enumerate() {
            acc += q;
            if u < acc {
                return w;
            }
        }
        p.iter().rposition(|&q| q > 0.0).unwrap_or(0)
    }

    fn log_density(&self, p: &Vec<f64>, w: &usize) -> f64 {
        p[*w].ln()
    }

    fn readout_features(&self, w: &usize) -> Vec<f64> {
        let mut f = vec![0.0; self.kernel.n_latent()];
        f[*w] = 1.0;
        f
    }
}

/// Softmax readout `q(y|w) = softmax(B f(w))` over latent features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxReadout {
    map: LinearMap,
}

impl SoftmaxReadout {
    /// All-zero weights: uniform predictions.
    pub fn new(n_classes: usize, n_features: usize) -> Self {
        Self {
            map: LinearMap::zeros(n_classes, n_features),
        }
    }

    pub fn random(n_classes: usize, n_features: usize, scale: f64, seed: u64) -> Self {
        Self {
            map: LinearMap::random(n_classes, n_features, scale, seed),
        }
    }

    pub fn n_classes(&self) -> usize {
        self.map.rows()
    }

    pub fn n_features(&self) -> usize {
        self.map.cols()
    }

    pub fn log_probs(&self, f: &[f64]) -> Vec<f64> {
        let z = self.map.apply(f);
        let lse = log_sum_exp(&z);
        z.into_iter().map(|v| v - lse).collect()
    }

    pub fn probs(&self, f: &[f64]) -> Vec<f64> {
        self.log_probs(f).into_iter().map(f64::exp).collect()
    }

    /// Cross-entropy `-log q(y|f)`, accumulating `weight * d/dB` into `grad`
    /// and returning `d/df` scaled by `weight`.
    pub(crate) fn cross_entropy(&self, f: &[f64], y: usize, weight: f64, grad: &mut [f64]) -> (f64, Vec<f64>) {
        let lp = self.log_probs(f);
        let dz: Vec<f64> = lp
            .iter()
            .enumerate()
            .map(|(c, l)| weight * (l.exp() - if c == y { 1.0 } else { 0.0 }))
            .collect();
        self.map.accumulate_grad(f, &dz, grad);
        (-lp[y], self.map.transpose_apply(&dz))
    }
}

impl Parameters for SoftmaxReadout {
    fn params(&self) -> Vec<f64> {
        self.map.weights().to_vec()
    }

    fn set_params(&mut self, p: &[f64]) -> Result<()> {
        self.map.set_flat(p)
    }
}
