//! Gradient-descent training of Dirichlet encoders on the toy tasks.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::batch::Minibatch;
use crate::encoder::dirichlet::DirichletEncoder;
use crate::encoder::input::{FeatureMap, Input};
use crate::encoder::linear::Parameters;
use crate::encoder::loo::DirichletNoise;
use crate::encoder::losses::{ceb_loss, ib_known_py_loss, LossEval};
use crate::encoder::plugin::{gauge_matched_kl, plugin_estimate, GaugeMatch, PluginEstimate};
use crate::error::{Error, Result};
use crate::prob::JointPMF;
use crate::tasks::{ContinuousLoop, SyntheticClasses, TaskKind};

/// Training objective for [`train_toy`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// LOO total rate plus `beta` times the expected KL from the known
    /// `p(Y|x)` to the sampled simplex point.
    IbKnownPy,
    /// The CEB loss with both rates from LOO mixtures; labels only.
    CebLoo,
}

impl Objective {
    /// `ib_known_py` for the continuous loop, `ceb_loo` elsewhere.
    pub fn default_for(task: TaskKind) -> Self {
        match task {
            TaskKind::ContinuousLoop => Objective::IbKnownPy,
            _ => Objective::CebLoo,
        }
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ib_known_py" => Ok(Objective::IbKnownPy),
            "ceb_loo" => Ok(Objective::CebLoo),
            _ => Err(Error::InvalidArgument(format!("unknown objective `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// `None` picks `ib_known_py` for the continuous loop and `ceb_loo`
    /// otherwise.
    pub objective: Option<Objective>,
    pub beta: f64,
    /// Simplex dimension; `None` means `|Y|`.
    pub k: Option<usize>,
    /// Latent draws per distinct input in the LOO estimators.
    pub samples: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub step: f64,
    pub clip: f64,
    pub seed: u64,
    pub init_scale: f64,
    /// Angle bins for the continuous loop.
    pub bins: usize,
    /// Harmonic order of the angle features.
    pub harmonics: usize,
    pub synthetic: SyntheticClasses,
    /// Size of the input pool drawn from the synthetic mixture.
    pub synthetic_points: usize,
    /// Seed of the synthetic input pool, independent of the training seed.
    pub synthetic_seed: u64,
    /// Draws per input for plug-in evaluation.
    pub eval_samples: usize,
    /// Plug-in evaluation period in epochs; 0 evaluates only at the end.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            objective: None,
            beta: 250.0,
            k: None,
            samples: 64,
            batch_size: 2048,
            epochs: 3000,
            step: 0.05,
            clip: 10.0,
            seed: 0,
            init_scale: 0.1,
            bins: ContinuousLoop::DEFAULT_BINS,
            harmonics: 4,
            synthetic: SyntheticClasses::default(),
            synthetic_points: 200,
            synthetic_seed: 0,
            eval_samples: 64,
            eval_every: 0,
        }
    }
}

/// A toy task as a finite joint with named inputs and a feature basis.
#[derive(Clone, Debug)]
pub struct ToyProblem {
    pub task: TaskKind,
    pub joint: JointPMF,
    pub inputs: Vec<Input>,
    pub feature_map: FeatureMap,
}

pub fn toy_problem(task: TaskKind, cfg: &TrainConfig) -> Result<ToyProblem> {
    let (joint, inputs, feature_map) = match task {
        TaskKind::Binary | TaskKind::Ternary | TaskKind::Deterministic | TaskKind::DiscreteClusters => {
            let joint = task.joint()?;
            let n = joint.nx();
            (joint, (0..n).map(Input::Discrete).collect(), FeatureMap::OneHot { n })
        }
        TaskKind::ContinuousLoop => (
            ContinuousLoop.discretize(cfg.bins)?,
            ContinuousLoop::grid(cfg.bins).into_iter().map(Input::Angle).collect(),
            FeatureMap::Harmonics { order: cfg.harmonics },
        ),
        TaskKind::SyntheticClasses => {
            let s = &cfg.synthetic;
            let (xs, _) = s.sample(cfg.synthetic_points, cfg.synthetic_seed);
            (
                s.joint(cfg.synthetic_points, cfg.synthetic_seed)?,
                xs.into_iter().map(Input::Vector).collect(),
                FeatureMap::Affine { dim: s.dim },
            )
        }
        TaskKind::GaussianChannel => {
            return Err(Error::InvalidArgument(
                "gaussian_channel has no finite output alphabet to train on".into(),
            ))
        }
    };
    Ok(ToyProblem {
        task,
        joint,
        inputs,
        feature_map,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub loss: f64,
    pub pred: f64,
    pub shape: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub epoch: usize,
    pub pred: f64,
    pub shape: f64,
    pub rate: f64,
    pub delta: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainReport {
    pub task: TaskKind,
    pub objective: Objective,
    pub config: TrainConfig,
    pub history: Vec<EpochLoss>,
    pub trajectory: Vec<TrajectoryPoint>,
    pub final_estimate: PluginEstimate,
    /// Learned means against `p(Y|x)` after the best relabelling; only when
    /// `K = |Y|` and `K <= 8`.
    pub gauge: Option<GaugeMatch>,
    pub encoder: DirichletEncoder,
    /// First epoch whose loss or gradient was not finite.
    pub diverged_at: Option<usize>,
}

impl TrainReport {
    /// `epoch,pred_term,shape_term,R,delta,epsilon`.
    pub fn trajectory_csv(&self) -> String {
        let mut s = String::from("epoch,pred_term,shape_term,R,delta,epsilon\n");
        for p in &self.trajectory {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                p.epoch, p.pred, p.shape, p.rate, p.delta, p.epsilon
            );
        }
        s
    }

    pub fn ensure_finished(&self) -> Result<()> {
        match self.diverged_at {
            Some(epoch) => Err(Error::Diverged { epoch }),
            None => Ok(()),
        }
    }
}

/// One clipped gradient step: the gradient is rescaled to norm `clip` when
/// longer.
pub(crate) fn descend(theta: &mut [f64], grad: &[f64], step: f64, clip: f64) {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let scale = if norm > clip { clip / norm } else { 1.0 };
    for (t, g) in theta.iter_mut().zip(grad) {
        *t -= step * scale * g;
    }
}

fn check_config(cfg: &TrainConfig) -> Result<()> {
    let bad = |field: &str, why: &str| Err(Error::InvalidArgument(format!("{field}: {why}")));
    if !(cfg.beta >= 0.0) {
        return bad("beta", "must be >= 0");
    }
    if cfg.samples == 0 || cfg.eval_samples == 0 {
        return bad("samples", "must be positive");
    }
    if cfg.batch_size < 2 {
        return bad("batch_size", "must be at least 2");
    }
    if !(cfg.step > 0.0) || !(cfg.clip > 0.0) {
        return bad("step", "step and clip must be positive");
    }
    Ok(())
}

fn finite(ev: &LossEval) -> bool {
    ev.value.is_finite() && ev.grad.iter().all(|g| g.is_finite())
}

/// Trains a Dirichlet encoder on `task` by full-batch gradient descent on a
/// stratified batch, with fresh latent noise every epoch.
pub fn train_toy(task: TaskKind, cfg: &TrainConfig) -> Result<TrainReport> {
    check_config(cfg)?;
    let prob = toy_problem(task, cfg)?;
    let objective = cfg.objective.unwrap_or(Objective::default_for(task));
    let k = cfg.k.unwrap_or(prob.joint.ny());
    let mut enc = DirichletEncoder::new(prob.feature_map.clone(), k, cfg.init_scale, cfg.seed)?;
    let batch = Minibatch::stratified(&prob.joint, &prob.inputs, cfg.batch_size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut theta = enc.params();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut trajectory = Vec::new();
    let mut diverged_at = None;
    let eval = |enc: &DirichletEncoder, epoch: usize| {
        plugin_estimate(
            enc,
            &prob.joint,
            &prob.inputs,
            cfg.eval_samples,
            cfg.seed ^ epoch as u64,
        )
    };
    for epoch in 0..cfg.epochs {
        let noise = DirichletNoise::per_input(&enc, &batch, cfg.samples, &mut rng)?;
        let ev = match objective {
            Objective::CebLoo => ceb_loss(&enc, &batch, cfg.beta, &noise)?,
            Objective::IbKnownPy => ib_known_py_loss(&enc, &batch, cfg.beta, &noise)?,
        };
        if !finite(&ev) {
            diverged_at = Some(epoch);
            break;
        }
        history.push(EpochLoss {
            epoch,
            loss: ev.value,
            pred: ev.pred,
            shape: ev.shape,
        });
        if cfg.eval_every > 0 && epoch % cfg.eval_every == 0 {
            let p = eval(&enc, epoch)?;
            trajectory.push(TrajectoryPoint {
                epoch,
                pred: ev.pred,
                shape: ev.shape,
                rate: p.rate,
                delta: p.delta,
                epsilon: p.epsilon,
            });
        }
        descend(&mut theta, &ev.grad, cfg.step, cfg.clip);
        enc.set_params(&theta)?;
    }
    let final_estimate = eval(&enc, cfg.epochs)?;
    if let Some(last) = history.last() {
        trajectory.push(TrajectoryPoint {
            epoch: last.epoch + 1,
            pred: last.pred,
            shape: last.shape,
            rate: final_estimate.rate,
            delta: final_estimate.delta,
            epsilon: final_estimate.epsilon,
        });
    }
    let gauge = if k == prob.joint.ny() && k <= 8 {
        let means = prob.inputs.iter().map(|x| enc.mean(x)).collect::<Result<Vec<_>>>()?;
        Some(gauge_matched_kl(&means, &prob.joint.conditionals(), prob.joint.px())?)
    } else {
        None
    };
    Ok(TrainReport {
        task,
        objective,
        config: cfg.clone(),
        history,
        trajectory,
        final_estimate,
        gauge,
        encoder: enc,
        diverged_at,
    })
}
