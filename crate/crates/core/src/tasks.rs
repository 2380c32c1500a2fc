//! Built-in tasks: small exact joints, continuous-input tasks with a known
//! predictive map, and a Gaussian-mixture classification stand-in.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::JointPMF;

/// Names of the registered tasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Binary,
    Ternary,
    Deterministic,
    DiscreteClusters,
    ContinuousLoop,
    GaussianChannel,
    SyntheticClasses,
}

impl TaskKind {
    pub const ALL: [TaskKind; 7] = [
        TaskKind::Binary,
        TaskKind::Ternary,
        TaskKind::Deterministic,
        TaskKind::DiscreteClusters,
        TaskKind::ContinuousLoop,
        TaskKind::GaussianChannel,
        TaskKind::SyntheticClasses,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Binary => "binary",
            TaskKind::Ternary => "ternary",
            TaskKind::Deterministic => "deterministic",
            TaskKind::DiscreteClusters => "discrete_clusters",
            TaskKind::ContinuousLoop => "continuous_loop",
            TaskKind::GaussianChannel => "gaussian_channel",
            TaskKind::SyntheticClasses => "synthetic_classes",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            TaskKind::Binary => "uniform X on 4 symbols, two noisy predictive classes (0.1,0.9)/(0.9,0.1)",
            TaskKind::Ternary => "uniform X on 6 symbols, three predictive classes near the simplex vertices",
            TaskKind::Deterministic => "uniform X on 4 symbols, Y a deterministic function of X",
            TaskKind::DiscreteClusters => "uniform X on 20 symbols, consecutive pairs share one of 10 loop points",
            TaskKind::ContinuousLoop => "angle input, p(y|theta) proportional to exp(cos(theta - 2 pi y / 3))",
            TaskKind::GaussianChannel => "Y = X + Z with Z ~ N(0, sigma^2), sigma = 1",
            TaskKind::SyntheticClasses => "10-class Gaussian mixture in 16 dimensions",
        }
    }

    /// The exact finite joint for this task. Continuous tasks are discretized
    /// with their default resolution; the Gaussian channel has no finite
    /// output alphabet and is rejected.
    pub fn joint(self) -> Result<JointPMF> {
        match self {
            TaskKind::Binary => Ok(binary()),
            TaskKind::Ternary => Ok(ternary()),
            TaskKind::Deterministic => Ok(deterministic()),
            TaskKind::DiscreteClusters => Ok(discrete_clusters()),
            TaskKind::ContinuousLoop => ContinuousLoop.discretize(ContinuousLoop::DEFAULT_BINS),
            TaskKind::SyntheticClasses => SyntheticClasses::default().joint(512, 0),
            TaskKind::GaussianChannel => Err(Error::InvalidArgument(
                "gaussian_channel has a continuous output and no finite joint".into(),
            )),
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskKind::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::UnknownTask(s.to_string()))
    }
}

fn uniform_joint(rows: &[Vec<f64>]) -> JointPMF {
    JointPMF::from_conditionals(&vec![1.0; rows.len()], rows).expect("built-in task is valid")
}

/// Four equiprobable inputs, two predictive classes `(0.1, 0.9)` and
/// `(0.9, 0.1)`.
pub fn binary() -> JointPMF {
    let a = vec![0.1, 0.9];
    let b = vec![0.9, 0.1];
    uniform_joint(&[a.clone(), a, b.clone(), b])
}

/// Six equiprobable inputs in three predictive classes near the vertices of
/// the 3-simplex.
pub fn ternary() -> JointPMF {
    let rows: Vec<Vec<f64>> = (0..6)
        .map(|x| {
            let mut r = vec![0.1; 3];
            r[x / 2] = 0.8;
            r
        })
        .collect();
    uniform_joint(&rows)
}

/// Four equiprobable inputs with `Y = 1` on the first two and `Y = 0` on
/// the rest.
pub fn deterministic() -> JointPMF {
    let one = vec![0.0, 1.0];
    let zero = vec![1.0, 0.0];
    uniform_joint(&[one.clone(), one, zero.clone(), zero])
}

/// Twenty equiprobable inputs; inputs `2c` and `2c + 1` share the loop point
/// at angle `2 pi c / 10`.
pub fn discrete_clusters() -> JointPMF {
    let rows: Vec<Vec<f64>> = (0..20)
        .map(|x| loop_point(2.0 * PI * (x / 2) as f64 / 10.0).to_vec())
        .collect();
    uniform_joint(&rows)
}

/// `p(y|theta)` proportional to `exp(cos(theta - 2 pi y / 3))`.
pub fn loop_point(theta: f64) -> [f64; 3] {
    let mut p = [0.0; 3];
    for (y, v) in p.iter_mut().enumerate() {
        *v = (theta - 2.0 * PI * y as f64 / 3.0).cos().exp();
    }
    let s: f64 = p.iter().sum();
    p.map(|v| v / s)
}

/// Squared Hellinger distance `1 - sum sqrt(p q)`.
fn hellinger_sq(p: &[f64], q: &[f64]) -> f64 {
    (1.0 - p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum::<f64>()).max(0.0)
}

/// A task with a continuous input space and a known predictive map.
pub trait ContinuousTask {
    /// Draws an input from the task's input distribution.
    fn sample_input(&self, rng: &mut ChaCha8Rng) -> f64;

    /// Moves `x` by `offset` in input space.
    fn shift(&self, x: f64, offset: f64) -> f64 {
        x + offset
    }

    /// Distance between two inputs.
    fn input_distance(&self, a: f64, b: f64) -> f64 {
        (a - b).abs()
    }

    /// Hellinger distance between `p(Y|a)` and `p(Y|b)`.
    fn predictive_distance(&self, a: f64, b: f64) -> f64;
}

/// The angle task traced out by [`loop_point`].
#[derive(Clone, Copy, Debug, Default)]
pub struct ContinuousLoop;

impl ContinuousLoop {
    pub const DEFAULT_BINS: usize = 256;

    /// Bin centres of a uniform grid over `[0, 2 pi)`.
    pub fn grid(bins: usize) -> Vec<f64> {
        (0..bins).map(|i| 2.0 * PI * (i as f64 + 0.5) / bins as f64).collect()
    }

    /// Uniform discretization of the angle into `bins` cells, each carrying
    /// the predictive row at its centre.
    pub fn discretize(&self, bins: usize) -> Result<JointPMF> {
        if bins == 0 {
            return Err(Error::InvalidArgument("need at least one bin".into()));
        }
        let rows: Vec<Vec<f64>> = Self::grid(bins).into_iter().map(|t| loop_point(t).to_vec()).collect();
        JointPMF::from_conditionals(&vec![1.0; bins], &rows)
    }
}

impl ContinuousLoop {
    /// Predictive rows at `n` seeded uniform angles.
    pub fn sample_points(&self, n: usize, seed: u64) -> Vec<crate::prob::SimplexPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let t = self.sample_input(&mut rng);
                crate::prob::SimplexPoint::new(loop_point(t).to_vec()).expect("loop point is normalized")
            })
            .collect()
    }
}

impl ContinuousTask for ContinuousLoop {
    fn sample_input(&self, rng: &mut ChaCha8Rng) -> f64 {
        rng.random::<f64>() * 2.0 * PI
    }

    fn shift(&self, x: f64, offset: f64) -> f64 {
        (x + offset).rem_euclid(2.0 * PI)
    }

    fn input_distance(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(2.0 * PI);
        d.min(2.0 * PI - d)
    }

    fn predictive_distance(&self, a: f64, b: f64) -> f64 {
        hellinger_sq(&loop_point(a), &loop_point(b)).sqrt()
    }
}

/// Additive Gaussian noise channel `Y = X + Z`, inputs drawn from `N(0, 1)`.
#[derive(Clone, Copy, Debug)]
pub struct GaussianChannel {
    pub sigma: f64,
}

impl Default for GaussianChannel {
    fn default() -> Self {
        Self { sigma: 1.0 }
    }
}

impl GaussianChannel {
    /// Analytic Lipschitz constant of `x -> p(Y|x)` under Hellinger.
    pub fn lipschitz_bound(&self) -> f64 {
        1.0 / (2.0 * 2f64.sqrt() * self.sigma)
    }
}

impl ContinuousTask for GaussianChannel {
    fn sample_input(&self, rng: &mut ChaCha8Rng) -> f64 {
        rng.sample(StandardNormal)
    }

    fn predictive_distance(&self, a: f64, b: f64) -> f64 {
        let d = a - b;
        // -expm1 keeps precision for tiny separations.
        (-(-d * d / (8.0 * self.sigma * self.sigma)).exp_m1()).max(0.0).sqrt()
    }
}

/// Balanced Gaussian mixture: class means drawn once from a seeded normal
/// and scaled by `separation`, isotropic unit within-class noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticClasses {
    pub n_classes: usize,
    pub dim: usize,
    pub separation: f64,
    pub mean_seed: u64,
}

impl Default for SyntheticClasses {
    fn default() -> Self {
        Self {
            n_classes: 10,
            dim: 16,
            separation: 1.0,
            mean_seed: 7,
        }
    }
}

impl SyntheticClasses {
    pub fn means(&self) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.mean_seed);
        (0..self.n_classes)
            .map(|_| {
                (0..self.dim)
                    .map(|_| self.separation * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect()
    }

    /// Class posterior `p(y|x)` under equal priors.
    pub fn posterior(&self, means: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = means
            .iter()
            .map(|m| -0.5 * m.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .collect();
        let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = logits.iter().map(|l| (l - mx).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    }

    /// Draws `n` labelled points, cycling through the classes so every class
    /// is equally represented.
    pub fn sample(&self, n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let means = self.means();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for i in 0..n {
            let y = i % self.n_classes;
            xs.push(
                means[y]
                    .iter()
                    .map(|m| m + rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            );
            ys.push(y);
        }
        (xs, ys)
    }

    /// Empirical joint: `X` uniform over `n` sampled points, `Y|x` the exact
    /// class posterior.
    pub fn joint(&self, n: usize, seed: u64) -> Result<JointPMF> {
        let (xs, _) = self.sample(n, seed);
        let means = self.means();
        let rows: Vec<Vec<f64>> = xs.iter().map(|x| self.posterior(&means, x)).collect();
        JointPMF::from_conditionals(&vec![1.0; n], &rows)
    }
}
