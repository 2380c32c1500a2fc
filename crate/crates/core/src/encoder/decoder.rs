//! Second stage: fit a softmax readout `q(y|w)` on latents drawn from a
//! frozen encoder by minimizing cross-entropy.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::batch::Minibatch;
use crate::encoder::family::LatentModel;
use crate::encoder::gaussian::SoftmaxReadout;
use crate::encoder::linear::Parameters;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecoderConfig {
    /// Latent draws per batch element.
    pub samples: usize,
    pub epochs: usize,
    pub step: f64,
    pub clip: f64,
    pub seed: u64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            samples: 16,
            epochs: 2000,
            step: 1.0,
            clip: 10.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DecoderFit {
    pub readout: SoftmaxReadout,
    /// Mean training cross-entropy before each step, then after the last.
    pub ce_curve: Vec<f64>,
}

/// Draws latents once, then runs full-batch gradient descent on the mean
/// cross-entropy. Identical (feature, label) rows are merged with weights,
/// so finite latent alphabets cost one row per distinct pair.
pub fn decoder_stage<M: LatentModel>(enc: &M, labeled: &Minibatch, cfg: &DecoderConfig) -> Result<DecoderFit> {
    let ys = labeled
        .ys()
        .ok_or_else(|| Error::InvalidArgument("decoder stage needs labels".into()))?;
    if cfg.samples == 0 {
        return Err(Error::InvalidArgument("decoder stage needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let params = (0..labeled.n_unique())
        .map(|u| enc.params(labeled.unique_input(u)))
        .collect::<Result<Vec<_>>>()?;
    let mut index: HashMap<(Vec<u64>, usize), usize> = HashMap::new();
    let mut rows: Vec<(Vec<f64>, usize, f64)> = Vec::new();
    let w_each = 1.0 / (labeled.len() * cfg.samples) as f64;
    for (&slot, &y) in labeled.slots().iter().zip(ys) {
        for _ in 0..cfg.samples {
            let f = enc.readout_features(&enc.draw(&params[slot], &mut rng));
            let key = (f.iter().map(|v| v.to_bits()).collect(), y);
            match index.get(&key) {
                Some(&i) => rows[i].2 += w_each,
                None => {
                    index.insert(key, rows.len());
                    rows.push((f, y, w_each));
                }
            }
        }
    }
    let n_features = rows[0].0.len();
    let mut readout = SoftmaxReadout::new(labeled.n_classes(), n_features);
    let mut ce_curve = Vec::with_capacity(cfg.epochs + 1);
    let mut theta = readout.params();
    for epoch in 0..=cfg.epochs {
        let mut grad = vec![0.0; theta.len()];
        let ce: f64 = rows
            .iter()
            .map(|(f, y, w)| w * readout.cross_entropy(f, *y, *w, &mut grad).0)
            .sum();
        if !ce.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        ce_curve.push(ce);
        if epoch == cfg.epochs {
            break;
        }
        crate::encoder::train::descend(&mut theta, &grad, cfg.step, cfg.clip);
        readout.set_params(&theta)?;
    }
    Ok(DecoderFit { readout, ce_curve })
}
