//! Training runs for the SIGReg-regularized losses: semi-supervised
//! Dirichlet encoders and self-supervised Gaussian view encoders.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::encoder::batch::Minibatch;
use crate::encoder::dirichlet::DirichletEncoder;
use crate::encoder::family::{dirichlet_from_noise, gaussian_embedding};
use crate::encoder::gaussian::GaussianEncoder;
use crate::encoder::input::{FeatureMap, Input};
use crate::encoder::linear::Parameters;
use crate::encoder::loo::{dirichlet_loo_rates, DirichletNoise};
use crate::encoder::losses::{self_loss, semi_loss};
use crate::encoder::train::{descend, toy_problem, EpochLoss, TrainConfig};
use crate::error::{Error, Result};
use crate::sigreg::{sigreg_loss, sigreg_null_band, NullBand, SketchConfig};
use crate::tasks::{SyntheticClasses, TaskKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SemiConfig {
    pub task: TaskKind,
    pub lambda: f64,
    /// Replace the labels by uniform random ones.
    pub random_labels: bool,
    pub batch_size: usize,
    /// Every `label_every`-th element keeps its label.
    pub label_every: usize,
    pub samples: usize,
    pub epochs: usize,
    pub step: f64,
    pub clip: f64,
    pub sketch_m: usize,
    pub init_scale: f64,
    pub seed: u64,
    /// Null-band replicates for the final SIGReg verdict.
    pub null_replicates: usize,
}

impl Default for SemiConfig {
    fn default() -> Self {
        Self {
            task: TaskKind::Ternary,
            lambda: 1.0,
            random_labels: false,
            batch_size: 512,
            label_every: 4,
            samples: 8,
            epochs: 1000,
            step: 0.05,
            clip: 10.0,
            sketch_m: 16,
            init_scale: 1.0,
            seed: 0,
            null_replicates: 1000,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SemiReport {
    pub history: Vec<EpochLoss>,
    pub sigreg_initial: f64,
    pub sigreg_final: f64,
    pub null_band: NullBand,
    /// LOO conditional rate on the labelled subset after training.
    pub cond_rate_final: f64,
    pub encoder: DirichletEncoder,
}

fn embedding_batch(enc: &DirichletEncoder, data: &Minibatch, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    data.xs()
        .iter()
        .map(|x| {
            let noise = enc.draw_noise(x, &mut rng)?;
            let (d, _) = dirichlet_from_noise(&enc.alpha(x)?, &noise);
            Ok(gaussian_embedding(&d.log_x, &noise))
        })
        .collect()
}

/// Semi-supervised training: conditional rate on a labelled subset plus
/// `lambda` SIGReg on the Gaussian embedding of all data. Directions are
/// redrawn every epoch.
pub fn train_semi(cfg: &SemiConfig) -> Result<SemiReport> {
    let prob = toy_problem(cfg.task, &TrainConfig::default())?;
    let full = Minibatch::stratified(&prob.joint, &prob.inputs, cfg.batch_size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let idx: Vec<usize> = (0..full.len()).step_by(cfg.label_every.max(1)).collect();
    let mut labeled = full.subset(&idx)?;
    if cfg.random_labels {
        let ny = prob.joint.ny();
        // Round-robin then shuffle keeps every class populated.
        let mut ys: Vec<usize> = (0..labeled.len()).map(|i| i % ny).collect();
        for i in (1..ys.len()).rev() {
            ys.swap(i, rng.random_range(0..=i));
        }
        labeled = Minibatch::new(labeled.xs().to_vec(), Some(ys))?;
    }
    let all = full.without_labels();
    let k = prob.joint.ny();
    let mut enc = DirichletEncoder::new(prob.feature_map.clone(), k, cfg.init_scale, cfg.seed)?;
    let sketch = SketchConfig::new(cfg.sketch_m, 2 * k, cfg.seed)?;
    let eval_seed = cfg.seed.wrapping_add(0x5eed);
    let sigreg_initial = sigreg_loss(&embedding_batch(&enc, &all, eval_seed)?, &sketch)?.statistic;
    let mut theta = enc.params();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let ln = DirichletNoise::per_input(&enc, &labeled, cfg.samples, &mut rng)?;
        let an = DirichletNoise::per_element(&enc, &all, &mut rng)?;
        let dirs = sketch.reseeded(cfg.seed.wrapping_add(epoch as u64 + 1));
        let ev = semi_loss(&enc, &labeled, &ln, &all, &an, cfg.lambda, &dirs)?;
        if !ev.value.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.push(EpochLoss {
            epoch,
            loss: ev.value,
            pred: ev.pred,
            shape: ev.shape,
        });
        descend(&mut theta, &ev.grad, cfg.step, cfg.clip);
        enc.set_params(&theta)?;
    }
    let sigreg_final = sigreg_loss(&embedding_batch(&enc, &all, eval_seed)?, &sketch)?.statistic;
    let null_band = sigreg_null_band(all.len(), &sketch, cfg.null_replicates, cfg.seed ^ 0xba5e)?;
    let noise = DirichletNoise::per_input(&enc, &labeled, 64, &mut rng)?;
    let cond_rate_final = dirichlet_loo_rates(&enc, &labeled, &noise)?
        .conditional
        .expect("labelled batch");
    Ok(SemiReport {
        history,
        sigreg_initial,
        sigreg_final,
        null_band,
        cond_rate_final,
        encoder: enc,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelfConfig {
    pub lambda: f64,
    pub synthetic: SyntheticClasses,
    pub n: usize,
    pub views: usize,
    /// Standard deviation of the additive view noise.
    pub view_noise: f64,
    pub latent_dim: usize,
    pub epochs: usize,
    pub step: f64,
    pub clip: f64,
    pub sketch_m: usize,
    pub init_scale: f64,
    pub seed: u64,
    pub null_replicates: usize,
}

impl Default for SelfConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            synthetic: SyntheticClasses::default(),
            n: 256,
            views: 2,
            view_noise: 0.5,
            latent_dim: 4,
            epochs: 6000,
            step: 0.02,
            clip: 10.0,
            sketch_m: 16,
            init_scale: 1.0,
            seed: 0,
            null_replicates: 1000,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelfReport {
    pub history: Vec<EpochLoss>,
    pub dv_initial: f64,
    pub dv_final: f64,
    pub sigreg_initial: f64,
    pub sigreg_final: f64,
    /// Null band for `n * views` rows in `latent_dim` dimensions.
    pub null_band: NullBand,
    pub encoder: GaussianEncoder,
}

/// `views` noisy copies of `n` synthetic inputs.
pub fn make_views(cfg: &SelfConfig) -> Result<Vec<Minibatch>> {
    let (xs, _) = cfg.synthetic.sample(cfg.n, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x71e5);
    (0..cfg.views)
        .map(|_| {
            let v = xs
                .iter()
                .map(|x| {
                    Input::Vector(
                        x.iter()
                            .map(|a| a + cfg.view_noise * rng.sample::<f64, _>(StandardNormal))
                            .collect(),
                    )
                })
                .collect();
            Minibatch::new(v, None)
        })
        .collect()
}

/// Self-supervised training of the mean head of a Gaussian encoder on view
/// agreement plus `lambda` SIGReg. Directions are redrawn every epoch.
pub fn train_self(cfg: &SelfConfig) -> Result<SelfReport> {
    let views = make_views(cfg)?;
    let mut enc = GaussianEncoder::new(
        FeatureMap::Affine { dim: cfg.synthetic.dim },
        cfg.latent_dim,
        cfg.init_scale,
        cfg.seed,
    )?;
    let sketch = SketchConfig::new(cfg.sketch_m, cfg.latent_dim, cfg.seed)?;
    let eval = |enc: &GaussianEncoder| -> Result<(f64, f64)> {
        let parts = self_loss(enc, &views, 1.0, &sketch)?;
        Ok((parts.pred, parts.shape))
    };
    let (dv_initial, sigreg_initial) = eval(&enc)?;
    let mut theta = enc.params();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let dirs = sketch.reseeded(cfg.seed.wrapping_add(epoch as u64 + 1));
        let ev = self_loss(&enc, &views, cfg.lambda, &dirs)?;
        if !ev.value.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.push(EpochLoss {
            epoch,
            loss: ev.value,
            pred: ev.pred,
            shape: ev.shape,
        });
        descend(&mut theta, &ev.grad, cfg.step, cfg.clip);
        enc.set_params(&theta)?;
    }
    let (dv_final, sigreg_final) = eval(&enc)?;
    let null_band = sigreg_null_band(cfg.n * cfg.views, &sketch, cfg.null_replicates, cfg.seed ^ 0xba5e)?;
    Ok(SelfReport {
        history,
        dv_initial,
        dv_final,
        sigreg_initial,
        sigreg_final,
        null_band,
        encoder: enc,
    })
}
