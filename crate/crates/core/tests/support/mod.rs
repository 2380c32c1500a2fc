//! Finite-difference gradient checks shared by the gradient tests and the
//! acceptance harness.
#![allow(dead_code)]

use iblab::encoder::{
    ceb_loss, ib_known_py_loss, self_loss, semi_loss, vib_loss, DirichletEncoder, DirichletNoise, FeatureMap,
    GaussianEncoder, GaussianNoise, Input, LossEval, Minibatch, Parameters, SoftmaxReadout, VibModel,
};
use iblab::sigreg::SketchConfig;
use iblab::tasks;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random parameter points per loss.
pub const POINTS: u64 = 20;
/// Largest accepted relative error of the analytic gradient.
pub const REL_TOL: f64 = 1e-4;

/// Relative error `|g - g_fd| / |g_fd|` of the analytic gradient against
/// central differences, with every other input to `f` held fixed.
pub fn fd_relative_error<P: Parameters + Clone>(model: &P, f: impl Fn(&P) -> LossEval) -> f64 {
    let analytic = f(model).grad;
    let theta = model.params();
    let mut fd = vec![0.0; theta.len()];
    for i in 0..theta.len() {
        let h = 1e-5 * theta[i].abs().max(1.0);
        let mut m = model.clone();
        let mut t = theta.clone();
        t[i] = theta[i] + h;
        m.set_params(&t).unwrap();
        let up = f(&m).value;
        t[i] = theta[i] - h;
        m.set_params(&t).unwrap();
        let down = f(&m).value;
        fd[i] = (up - down) / (2.0 * h);
    }
    let diff = analytic
        .iter()
        .zip(&fd)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm = fd.iter().map(|b| b * b).sum::<f64>().sqrt();
    diff / norm.max(1e-12)
}

fn discrete(n: usize) -> Vec<Input> {
    (0..n).map(Input::Discrete).collect()
}

fn random_dirichlet(fm: FeatureMap, k: usize, point: u64) -> DirichletEncoder {
    DirichletEncoder::new(fm, k, 0.8, 1000 + point).unwrap()
}

pub fn ceb_errors() -> Vec<f64> {
    let batch = Minibatch::stratified(&tasks::ternary(), &discrete(6), 60).unwrap();
    (0..POINTS)
        .map(|point| {
            let enc = random_dirichlet(FeatureMap::OneHot { n: 6 }, 3, point);
            let noise = DirichletNoise::per_input(&enc, &batch, 4, &mut ChaCha8Rng::seed_from_u64(point)).unwrap();
            let beta = 0.5 + 30.0 * point as f64;
            fd_relative_error(&enc, |e| ceb_loss(e, &batch, beta, &noise).unwrap())
        })
        .collect()
}

pub fn known_py_errors() -> Vec<f64> {
    let joint = tasks::ContinuousLoop.discretize(16).unwrap();
    let inputs: Vec<Input> = tasks::ContinuousLoop::grid(16).into_iter().map(Input::Angle).collect();
    let batch = Minibatch::stratified(&joint, &inputs, 64).unwrap();
    (0..POINTS)
        .map(|point| {
            let enc = random_dirichlet(FeatureMap::Harmonics { order: 2 }, 3, point);
            let noise = DirichletNoise::per_input(&enc, &batch, 3, &mut ChaCha8Rng::seed_from_u64(point)).unwrap();
            fd_relative_error(&enc, |e| ib_known_py_loss(e, &batch, 25.0, &noise).unwrap())
        })
        .collect()
}

pub fn semi_errors() -> Vec<f64> {
    let joint = tasks::ternary();
    let all = Minibatch::stratified(&joint, &discrete(6), 60).unwrap();
    let labeled = all.subset(&(0..60).step_by(2).collect::<Vec<_>>()).unwrap();
    let unlabeled = all.without_labels();
    let cfg = SketchConfig::new(8, 6, 3).unwrap();
    (0..POINTS)
        .map(|point| {
            let enc = random_dirichlet(FeatureMap::OneHot { n: 6 }, 3, point);
            let mut rng = ChaCha8Rng::seed_from_u64(point);
            let ln = DirichletNoise::per_input(&enc, &labeled, 3, &mut rng).unwrap();
            let an = DirichletNoise::per_element(&enc, &unlabeled, &mut rng).unwrap();
            fd_relative_error(&enc, |e| {
                semi_loss(e, &labeled, &ln, &unlabeled, &an, 2.0, &cfg).unwrap()
            })
        })
        .collect()
}

fn vector_views(n: usize, dim: usize, views: usize, seed: u64) -> Vec<Minibatch> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
        .collect();
    (0..views)
        .map(|_| {
            let xs = base
                .iter()
                .map(|b| Input::Vector(b.iter().map(|v| v + 0.3 * (rng.random::<f64>() - 0.5)).collect()))
                .collect();
            Minibatch::new(xs, None).unwrap()
        })
        .collect()
}

pub fn self_errors() -> Vec<f64> {
    let views = vector_views(24, 5, 3, 11);
    let cfg = SketchConfig::new(8, 3, 5).unwrap();
    (0..POINTS)
        .map(|point| {
            let enc = GaussianEncoder::new(FeatureMap::Affine { dim: 5 }, 3, 1.0, point).unwrap();
            fd_relative_error(&enc, |e| self_loss(e, &views, 0.7, &cfg).unwrap())
        })
        .collect()
}

pub fn vib_errors() -> Vec<f64> {
    let task = tasks::SyntheticClasses {
        n_classes: 3,
        dim: 4,
        separation: 1.5,
        mean_seed: 2,
    };
    let j = task.joint(12, 1).unwrap();
    let (xs, _) = task.sample(12, 1);
    let inputs: Vec<Input> = xs.into_iter().map(Input::Vector).collect();
    let batch = Minibatch::stratified(&j, &inputs, 48).unwrap();
    (0..POINTS)
        .map(|point| {
            let mut encoder = GaussianEncoder::new(FeatureMap::Affine { dim: 4 }, 2, 0.7, point).unwrap();
            let mut p = encoder.params();
            let mut rng = ChaCha8Rng::seed_from_u64(50 + point);
            let half = p.len() / 2;
            for v in &mut p[half..] {
                *v = 0.3 * (rng.random::<f64>() - 0.5);
            }
            encoder.set_params(&p).unwrap();
            let model = VibModel {
                encoder,
                decoder: SoftmaxReadout::random(3, 3, 0.8, point),
            };
            let noise = GaussianNoise::draw(&batch, 3, 2, &mut rng);
            fd_relative_error(&model, |m| vib_loss(m, &batch, 5.0, &noise).unwrap())
        })
        .collect()
}

/// Every trainable loss with its per-point errors.
pub fn gradient_suite() -> Vec<(&'static str, Vec<f64>)> {
    vec![
        ("ceb", ceb_errors()),
        ("ib_known_py", known_py_errors()),
        ("semi", semi_errors()),
        ("self", self_errors()),
        ("vib", vib_errors()),
    ]
}
