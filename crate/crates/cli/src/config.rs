//! Effective run configurations. Each subcommand starts from the defaults
//! below, overlays a JSON file given with `--config`, then explicit flags.
//! Unknown keys are rejected, and every field is echoed into the artifacts.

use std::path::Path;

use clap::ValueEnum;
use iblab::encoder::Objective;
use iblab::exact::SolverConfig;
use iblab::manifold::Metric;
use iblab::tasks::{SyntheticClasses, TaskKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

/// Reads `path` as a JSON object and overlays its keys on `base`.
pub fn overlay_file<C: Serialize + DeserializeOwned>(base: C, path: Option<&Path>) -> Result<C> {
    let Some(path) = path else { return Ok(base) };
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let file: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{} is not valid JSON: {e}", path.display())))?;
    let Value::Object(fields) = file else {
        return Err(CliError::Config(format!("{} must hold a JSON object", path.display())));
    };
    let mut merged = serde_json::to_value(base).map_err(|e| CliError::Config(e.to_string()))?;
    let target = merged.as_object_mut().expect("configs serialize to objects");
    for (k, v) in fields {
        target.insert(k, v);
    }
    serde_json::from_value(merged).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::field(name, format!("must be positive and finite, got {v}")))
    }
}

fn nonzero(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        Err(CliError::field(name, "must be at least 1"))
    } else {
        Ok(())
    }
}

fn has_finite_joint(task: TaskKind) -> Result<()> {
    if task == TaskKind::GaussianChannel {
        Err(CliError::field("task", "gaussian_channel has no finite joint"))
    } else {
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub task: TaskKind,
    pub beta: f64,
    pub tol: f64,
    pub max_iters: usize,
    /// Latent alphabet size; filled in from the task when absent.
    pub n_latent: Option<usize>,
    pub seed: u64,
    pub init_noise: f64,
    pub tau_mss: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            task: TaskKind::Binary,
            beta: 250.0,
            tol: s.tol,
            max_iters: s.max_iters,
            n_latent: s.n_latent,
            seed: s.seed,
            init_noise: s.init_noise,
            tau_mss: s.tau_mss,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        has_finite_joint(self.task)?;
        positive("beta", self.beta)?;
        validate_solver(self.tol, self.max_iters, self.n_latent, self.init_noise, self.tau_mss)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iters: self.max_iters,
            n_latent: self.n_latent,
            seed: self.seed,
            init_noise: self.init_noise,
            tau_mss: self.tau_mss,
        }
    }
}

fn validate_solver(tol: f64, max_iters: usize, n_latent: Option<usize>, init_noise: f64, tau: f64) -> Result<()> {
    positive("tol", tol)?;
    nonzero("max_iters", max_iters)?;
    if let Some(n) = n_latent {
        nonzero("n_latent", n)?;
    }
    if !(0.0..=1.0).contains(&init_noise) {
        return Err(CliError::field(
            "init_noise",
            format!("must lie in [0, 1], got {init_noise}"),
        ));
    }
    if !(tau >= 0.0) {
        return Err(CliError::field("tau_mss", format!("must be non-negative, got {tau}")));
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveConfig {
    pub task: TaskKind,
    pub betas: Vec<f64>,
    pub tol: f64,
    pub max_iters: usize,
    pub n_latent: Option<usize>,
    pub seed: u64,
    pub init_noise: f64,
    pub tau_mss: f64,
}

impl Default for CurveConfig {
    fn default() -> Self {
        let s = SolveConfig::default();
        Self {
            task: s.task,
            betas: vec![0.5, 5.0, 10.0, 25.0, 50.0, 100.0, 250.0],
            tol: s.tol,
            max_iters: s.max_iters,
            n_latent: s.n_latent,
            seed: s.seed,
            init_noise: s.init_noise,
            tau_mss: s.tau_mss,
        }
    }
}

impl CurveConfig {
    pub fn validate(&self) -> Result<()> {
        has_finite_joint(self.task)?;
        if self.betas.is_empty() {
            return Err(CliError::field("betas", "needs at least one value"));
        }
        for &b in &self.betas {
            positive("betas", b)?;
        }
        validate_solver(self.tol, self.max_iters, self.n_latent, self.init_noise, self.tau_mss)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iters: self.max_iters,
            n_latent: self.n_latent,
            seed: self.seed,
            init_noise: self.init_noise,
            tau_mss: self.tau_mss,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MssConfig {
    pub task: TaskKind,
    /// Total-variation radius within which predictive rows are merged.
    pub tau_mss: f64,
}

impl Default for MssConfig {
    fn default() -> Self {
        Self {
            task: TaskKind::Binary,
            tau_mss: SolverConfig::default().tau_mss,
        }
    }
}

impl MssConfig {
    pub fn validate(&self) -> Result<()> {
        has_finite_joint(self.task)?;
        if !(self.tau_mss >= 0.0) {
            return Err(CliError::field(
                "tau_mss",
                format!("must be non-negative, got {}", self.tau_mss),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffdimConfig {
    pub task: TaskKind,
    /// Points sampled from continuous or mixture tasks; finite tasks use
    /// their rows and ignore it.
    pub samples: usize,
    pub seed: u64,
    pub metric: Metric,
    /// Number of log-spaced covering scales.
    pub scale_count: usize,
    /// Decades spanned below the largest covering radius.
    pub decades: f64,
    /// Random pairs for the Lipschitz probe of continuous tasks.
    pub lipschitz_pairs: usize,
}

impl Default for EffdimConfig {
    fn default() -> Self {
        Self {
            task: TaskKind::ContinuousLoop,
            samples: 4096,
            seed: 0,
            metric: Metric::Hellinger,
            scale_count: 30,
            decades: 3.0,
            lipschitz_pairs: 10_000,
        }
    }
}

impl EffdimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scale_count < 4 {
            return Err(CliError::field(
                "scale_count",
                format!("needs at least 4, got {}", self.scale_count),
            ));
        }
        if !(self.decades >= 1.5) || !self.decades.is_finite() {
            return Err(CliError::field(
                "decades",
                format!("must be at least 1.5, got {}", self.decades),
            ));
        }
        nonzero("samples", self.samples)?;
        nonzero("lipschitz_pairs", self.lipschitz_pairs)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub k: usize,
    pub n: usize,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self { k: 3, n: 1000, seed: 0 }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(CliError::field("k", format!("must be at least 2, got {}", self.k)));
        }
        nonzero("n", self.n)
    }
}

/// Where the SIGReg test takes its batch from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BatchSource {
    /// I.i.d. standard normal rows.
    Gaussian,
    /// Centred, unit-variance chi-square coordinates `(z^2 - 1) / sqrt(2)`.
    ChiSquare,
    /// Every row at the origin.
    Collapsed,
    /// Rows read from the CSV file given as `input`.
    File,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SigregConfig {
    pub source: BatchSource,
    /// CSV of numeric rows; required when `source` is `file`.
    pub input: Option<String>,
    /// Rows and columns of the batch; taken from the file for `file`.
    pub n: usize,
    pub dim: usize,
    /// Projection directions.
    pub m: usize,
    pub seed: u64,
    /// Monte Carlo replicates of the null band.
    pub replicates: usize,
    pub null_seed: u64,
}

impl Default for SigregConfig {
    fn default() -> Self {
        Self {
            source: BatchSource::Gaussian,
            input: None,
            n: 512,
            dim: 8,
            m: 16,
            seed: 0,
            replicates: 200,
            null_seed: 1,
        }
    }
}

impl SigregConfig {
    pub fn validate(&self) -> Result<()> {
        match (self.source, &self.input) {
            (BatchSource::File, None) => return Err(CliError::field("input", "required when source is `file`")),
            (BatchSource::File, Some(_)) => {}
            (_, Some(_)) => return Err(CliError::field("input", "only used when source is `file`")),
            _ => {}
        }
        if self.n < 2 {
            return Err(CliError::field("n", format!("needs at least 2 rows, got {}", self.n)));
        }
        nonzero("dim", self.dim)?;
        nonzero("m", self.m)?;
        nonzero("replicates", self.replicates)
    }
}

/// Named parameter sets for common sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Latent-dimension ablation on the synthetic mixture.
    KAblation,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainRunConfig {
    pub task: TaskKind,
    /// Filled in from the task when absent.
    pub objective: Option<Objective>,
    pub betas: Vec<f64>,
    /// Simplex dimensions; empty means `|Y|`, filled in before the run.
    pub ks: Vec<usize>,
    pub seeds: Vec<u64>,
    pub samples: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub step: f64,
    pub clip: f64,
    pub init_scale: f64,
    pub bins: usize,
    pub harmonics: usize,
    pub synthetic: SyntheticClasses,
    pub synthetic_points: usize,
    pub synthetic_seed: u64,
    pub eval_samples: usize,
    pub eval_every: usize,
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        let t = iblab::encoder::TrainConfig::default();
        Self {
            task: TaskKind::Binary,
            objective: t.objective,
            betas: vec![t.beta],
            ks: Vec::new(),
            seeds: vec![t.seed],
            samples: t.samples,
            batch_size: t.batch_size,
            epochs: t.epochs,
            step: t.step,
            clip: t.clip,
            init_scale: t.init_scale,
            bins: t.bins,
            harmonics: t.harmonics,
            synthetic: t.synthetic,
            synthetic_points: t.synthetic_points,
            synthetic_seed: t.synthetic_seed,
            eval_samples: t.eval_samples,
            eval_every: t.eval_every,
        }
    }
}

impl TrainRunConfig {
    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::KAblation => Self {
                task: TaskKind::SyntheticClasses,
                objective: Some(Objective::CebLoo),
                betas: vec![25.0],
                ks: vec![3, 5, 10, 15, 20],
                seeds: vec![0, 1],
                samples: 16,
                step: 0.5,
                synthetic_points: 100,
                eval_samples: 256,
                ..Self::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.task == TaskKind::GaussianChannel {
            return Err(CliError::field("task", "gaussian_channel cannot be trained"));
        }
        if self.betas.is_empty() {
            return Err(CliError::field("betas", "needs at least one value"));
        }
        for &b in &self.betas {
            positive("betas", b)?;
        }
        if let Some(&k) = self.ks.iter().find(|&&k| k < 2) {
            return Err(CliError::field("ks", format!("every K must be at least 2, got {k}")));
        }
        if self.seeds.is_empty() {
            return Err(CliError::field("seeds", "needs at least one value"));
        }
        nonzero("samples", self.samples)?;
        nonzero("batch_size", self.batch_size)?;
        nonzero("epochs", self.epochs)?;
        positive("step", self.step)?;
        positive("clip", self.clip)?;
        positive("init_scale", self.init_scale)?;
        nonzero("bins", self.bins)?;
        nonzero("eval_samples", self.eval_samples)?;
        nonzero("synthetic_points", self.synthetic_points)
    }

    /// Library configuration for one job of the sweep.
    pub fn job(&self, beta: f64, k: usize, seed: u64) -> iblab::encoder::TrainConfig {
        iblab::encoder::TrainConfig {
            objective: self.objective,
            beta,
            k: Some(k),
            samples: self.samples,
            batch_size: self.batch_size,
            epochs: self.epochs,
            step: self.step,
            clip: self.clip,
            seed,
            init_scale: self.init_scale,
            bins: self.bins,
            harmonics: self.harmonics,
            synthetic: self.synthetic.clone(),
            synthetic_points: self.synthetic_points,
            synthetic_seed: self.synthetic_seed,
            eval_samples: self.eval_samples,
            eval_every: self.eval_every,
        }
    }
}
