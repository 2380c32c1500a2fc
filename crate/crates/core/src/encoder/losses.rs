//! Encoder losses with exact gradients for frozen noise.
//!
//! | loss | pred term | shape term | gradient path |
//! |------|-----------|------------|---------------|
//! | [`ceb_loss`] | `beta` x LOO conditional rate | `(1 - beta)` x LOO total rate | pathwise through the gamma draws plus the mixture densities |
//! | [`ib_known_py_loss`] | `beta` x `E KL(p(y|x) || w)` in closed form | LOO total rate | closed form, pathwise |
//! | [`vib_loss`] | `beta` x cross-entropy of sampled latents | KL to `N(0, I)` | pathwise, closed form |
//! | [`semi_loss`] | LOO conditional rate on labelled data | `lambda` x SIGReg of the Gaussian embedding | pathwise |
//! | [`self_loss`] | mean pairwise squared distance of view means | `lambda` x SIGReg of the means | deterministic |

use crate::encoder::batch::Minibatch;
use crate::encoder::dirichlet::DirichletEncoder;
use crate::encoder::family::{dirichlet_from_noise, gaussian_embedding};
use crate::encoder::gaussian::{GaussianEncoder, SoftmaxReadout};
use crate::encoder::linear::Parameters;
use crate::encoder::loo::{dirichlet_loo, DirichletNoise, Evaluated};
use crate::error::{Error, Result};
use crate::prob::xlogx;
use crate::sigreg::{sample_directions, sigreg_grad, SketchConfig};
use crate::special::{digamma, trigamma};

/// Loss value, its two named parts and the gradient with respect to the
/// flat parameters of the trained model.
#[derive(Clone, Debug, PartialEq)]
pub struct LossEval {
    pub value: f64,
    pub pred: f64,
    pub shape: f64,
    pub grad: Vec<f64>,
}

impl LossEval {
    fn new(pred: f64, shape: f64, grad: Vec<f64>) -> Self {
        Self {
            value: pred + shape,
            pred,
            shape,
            grad,
        }
    }
}

fn backprop_all(enc: &DirichletEncoder, ev: &Evaluated, d_alpha: &[Vec<f64>], grad: &mut [f64]) {
    for (f, da) in ev.features.iter().zip(d_alpha) {
        enc.backprop(f, da, grad);
    }
}

fn zero_alpha_grad(ev: &Evaluated) -> Vec<Vec<f64>> {
    ev.params.iter().map(|p| vec![0.0; p.alpha.len()]).collect()
}

/// `beta I(X;W|Y) + (1 - beta) I(X;W)`, both rates estimated on the same
/// draws.
pub fn ceb_loss(enc: &DirichletEncoder, batch: &Minibatch, beta: f64, noise: &DirichletNoise) -> Result<LossEval> {
    if batch.ys().is_none() {
        return Err(Error::InvalidArgument("CEB loss needs a labelled batch".into()));
    }
    let ev = Evaluated::new(enc, batch)?;
    let mut da = zero_alpha_grad(&ev);
    let r = dirichlet_loo(&ev, batch, noise, 1.0 - beta, beta, Some(&mut da))?;
    let mut grad = vec![0.0; enc.n_params()];
    backprop_all(enc, &ev, &da, &mut grad);
    let cond = r.conditional.expect("labelled batch");
    Ok(LossEval::new(beta * cond, (1.0 - beta) * r.total, grad))
}

/// `I(X;W) + beta E_x E_{w~q(w|x)} KL(p(Y|x) || w)`, using the known rows
/// `p(Y|x)` carried as batch targets and the simplex point itself as the
/// decoder. The second term upper-bounds `beta I(X;Y|W)` and fixes the
/// labelling of the simplex coordinates. Needs `K = |Y|`.
pub fn ib_known_py_loss(
    enc: &DirichletEncoder,
    batch: &Minibatch,
    beta: f64,
    noise: &DirichletNoise,
) -> Result<LossEval> {
    let targets = batch
        .targets()
        .ok_or_else(|| Error::InvalidArgument("known-p(y|x) loss needs batch targets".into()))?;
    if let Some(t) = targets.iter().find(|t| t.len() != enc.k()) {
        return Err(Error::DimensionMismatch {
            what: "target row (K must equal |Y|)",
            expected: enc.k(),
            found: t.len(),
        });
    }
    let ev = Evaluated::new(enc, batch)?;
    let mut da = zero_alpha_grad(&ev);
    let r = dirichlet_loo(&ev, batch, noise, 1.0, 0.0, Some(&mut da))?;
    let n = batch.len() as f64;
    let mut dist = 0.0;
    for ((u, m), p) in batch.multiplicities().into_iter().enumerate().zip(&ev.params) {
        let target = &targets[batch.first_element(u)];
        let wt = m as f64 / n;
        let a0: f64 = p.alpha.iter().sum();
        let (p0, t0) = (digamma(a0), trigamma(a0));
        let mass: f64 = target.iter().sum();
        for (k, (&a, &py)) in p.alpha.iter().zip(target).enumerate() {
            dist += wt * (xlogx(py) - py * (digamma(a) - p0));
            da[u][k] += beta * wt * (mass * t0 - py * trigamma(a));
        }
    }
    let mut grad = vec![0.0; enc.n_params()];
    backprop_all(enc, &ev, &da, &mut grad);
    Ok(LossEval::new(beta * dist, r.total, grad))
}

/// Conditional rate on the labelled batch plus `lambda` times SIGReg of the
/// `2K`-dimensional Gaussian embedding of one draw per element of
/// `all_data`. `cfg.dim` must be `2K`.
pub fn semi_loss(
    enc: &DirichletEncoder,
    labeled: &Minibatch,
    labeled_noise: &DirichletNoise,
    all_data: &Minibatch,
    all_noise: &DirichletNoise,
    lambda: f64,
    cfg: &SketchConfig,
) -> Result<LossEval> {
    if labeled.ys().is_none() {
        return Err(Error::InvalidArgument(
            "semi-supervised loss needs labelled data".into(),
        ));
    }
    if lambda < 0.0 {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    let mut grad = vec![0.0; enc.n_params()];
    let ev = Evaluated::new(enc, labeled)?;
    let mut da = zero_alpha_grad(&ev);
    let r = dirichlet_loo(&ev, labeled, labeled_noise, 0.0, 1.0, Some(&mut da))?;
    backprop_all(enc, &ev, &da, &mut grad);
    let pred = r.conditional.expect("labelled batch");
    if lambda == 0.0 {
        return Ok(LossEval::new(pred, 0.0, grad));
    }

    if cfg.dim != 2 * enc.k() {
        return Err(Error::DimensionMismatch {
            what: "sketch dimension (2K)",
            expected: 2 * enc.k(),
            found: cfg.dim,
        });
    }
    all_noise.check(all_data.len(), enc.k())?;
    let feats = all_data
        .xs()
        .iter()
        .map(|x| enc.feature_map().features(x))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut cache = Vec::new();
    for (i, f) in feats.iter().enumerate() {
        let alpha = enc.alpha_from_features(f).0;
        for frozen in &all_noise.draws[i] {
            let (draw, dlx) = dirichlet_from_noise(&alpha, frozen);
            rows.push(gaussian_embedding(&draw.log_x, frozen));
            cache.push((i, dlx));
        }
    }
    let (stat, d_rows) = sigreg_grad(&rows, &sample_directions(cfg))?;
    for ((row, d_row), (i, dlx)) in rows.iter().zip(&d_rows).zip(&cache) {
        // d e / d log x_k = e / 2 on both coordinates of plane k.
        let d_alpha: Vec<f64> = dlx
            .iter()
            .enumerate()
            .map(|(k, dl)| lambda * 0.5 * (row[2 * k] * d_row[2 * k] + row[2 * k + 1] * d_row[2 * k + 1]) * dl)
            .collect();
        enc.backprop(&feats[*i], &d_alpha, &mut grad);
    }
    Ok(LossEval::new(pred, lambda * stat, grad))
}

/// Mean over inputs of the mean pairwise squared distance between the view
/// means `mu(x_v)`, plus `lambda` times SIGReg of all view means. Views must
/// have equal length; row `i` of every view is a view of the same input.
pub fn self_loss(enc: &GaussianEncoder, views: &[Minibatch], lambda: f64, cfg: &SketchConfig) -> Result<LossEval> {
    if views.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 views, got {}",
            views.len()
        )));
    }
    let n = views[0].len();
    if let Some(v) = views.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch {
            what: "view length",
            expected: n,
            found: v.len(),
        });
    }
    if lambda < 0.0 {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    let feats: Vec<Vec<Vec<f64>>> = views
        .iter()
        .map(|v| {
            v.xs()
                .iter()
                .map(|x| enc.feature_map().features(x))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let (mu_head, _) = enc.heads();
    let mus: Vec<Vec<Vec<f64>>> = feats
        .iter()
        .map(|fv| fv.iter().map(|f| mu_head.apply(f)).collect())
        .collect();
    let nv = views.len();
    let pair_w = 2.0 / (nv * (nv - 1)) as f64 / n as f64;
    let mut dv = 0.0;
    let mut d_mu: Vec<Vec<Vec<f64>>> = mus.iter().map(|_| vec![vec![0.0; enc.dim()]; n]).collect();
    for i in 0..n {
        for a in 0..nv {
            for b in a + 1..nv {
                for c in 0..enc.dim() {
                    let diff = mus[a][i][c] - mus[b][i][c];
                    dv += pair_w * diff * diff;
                    d_mu[a][i][c] += 2.0 * pair_w * diff;
                    d_mu[b][i][c] -= 2.0 * pair_w * diff;
                }
            }
        }
    }
    let mut shape = 0.0;
    if lambda > 0.0 {
        if cfg.dim != enc.dim() {
            return Err(Error::DimensionMismatch {
                what: "sketch dimension",
                expected: enc.dim(),
                found: cfg.dim,
            });
        }
        let rows: Vec<Vec<f64>> = mus.iter().flatten().cloned().collect();
        let (stat, d_rows) = sigreg_grad(&rows, &sample_directions(cfg))?;
        shape = lambda * stat;
        for (dst, src) in d_mu.iter_mut().flatten().zip(&d_rows) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += lambda * s;
            }
        }
    }
    let mut grad = vec![0.0; enc.n_params()];
    let n_mu = mu_head.weights().len();
    for (fv, dv_rows) in feats.iter().zip(&d_mu) {
        for (f, d) in fv.iter().zip(dv_rows) {
            mu_head.accumulate_grad(f, d, &mut grad[..n_mu]);
        }
    }
    Ok(LossEval::new(dv, shape, grad))
}

/// A Gaussian encoder trained jointly with its softmax readout.
#[derive(Clone, Debug, PartialEq)]
pub struct VibModel {
    pub encoder: GaussianEncoder,
    pub decoder: SoftmaxReadout,
}

impl Parameters for VibModel {
    fn params(&self) -> Vec<f64> {
        [self.encoder.params(), self.decoder.params()].concat()
    }

    fn set_params(&mut self, p: &[f64]) -> Result<()> {
        let n = self.encoder.n_params();
        if p.len() < n {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected: n + self.decoder.n_params(),
                found: p.len(),
            });
        }
        self.encoder.set_params(&p[..n])?;
        self.decoder.set_params(&p[n..])
    }
}

/// Standard-normal noise for the Gaussian reparameterization:
/// `eps[u][sample][c]` per distinct input.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianNoise {
    pub eps: Vec<Vec<Vec<f64>>>,
}

impl GaussianNoise {
    pub fn draw(batch: &Minibatch, s: usize, d: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Self {
        use rand::Rng;
        let eps = (0..batch.n_unique())
            .map(|_| {
                (0..s)
                    .map(|_| (0..d).map(|_| rng.sample(rand_distr::StandardNormal)).collect())
                    .collect()
            })
            .collect();
        Self { eps }
    }
}

/// `beta` x cross-entropy through sampled latents plus the closed-form
/// `KL(q(w|x) || N(0, I))`, both averaged over the batch. The gradient
/// covers the encoder followed by the readout parameters.
pub fn vib_loss(model: &VibModel, batch: &Minibatch, beta: f64, noise: &GaussianNoise) -> Result<LossEval> {
    let counts = batch
        .class_counts()
        .ok_or_else(|| Error::InvalidArgument("VIB loss needs a labelled batch".into()))?;
    let enc = &model.encoder;
    let dec = &model.decoder;
    let d = enc.dim();
    if dec.n_features() != d + 1 {
        return Err(Error::DimensionMismatch {
            what: "readout features",
            expected: d + 1,
            found: dec.n_features(),
        });
    }
    if noise.eps.len() != batch.n_unique() {
        return Err(Error::DimensionMismatch {
            what: "noise slots",
            expected: batch.n_unique(),
            found: noise.eps.len(),
        });
    }
    let (mu_head, lv_head) = enc.heads();
    let n_enc = enc.n_params();
    let n_mu = mu_head.weights().len();
    let mut grad = vec![0.0; n_enc + dec.n_params()];
    let n = batch.len() as f64;
    let (mut ce, mut kl) = (0.0, 0.0);
    for (u, m) in batch.multiplicities().into_iter().enumerate() {
        let f = enc.feature_map().features(batch.unique_input(u))?;
        let mu = mu_head.apply(&f);
        let lv = lv_head.apply(&f);
        let sd: Vec<f64> = lv.iter().map(|l| (0.5 * l).exp()).collect();
        let wt = m as f64 / n;
        let mut d_mu: Vec<f64> = mu.iter().map(|x| wt * x).collect();
        let mut d_lv: Vec<f64> = lv.iter().map(|l| wt * 0.5 * l.exp_m1()).collect();
        kl += wt * 0.5 * mu.iter().zip(&lv).map(|(m, l)| m * m + l.exp_m1() - l).sum::<f64>();
        let samples = &noise.eps[u];
        if samples.is_empty() {
            return Err(Error::InvalidArgument("noise holds no samples".into()));
        }
        let s = samples.len() as f64;
        for eps in samples {
            if eps.len() != d {
                return Err(Error::DimensionMismatch {
                    what: "noise dimension",
                    expected: d,
                    found: eps.len(),
                });
            }
            let w: Vec<f64> = mu.iter().zip(&sd).zip(eps).map(|((m, s), e)| m + s * e).collect();
            let feat: Vec<f64> = std::iter::once(1.0).chain(w.iter().copied()).collect();
            for (y, &c) in counts[u].iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let cw = beta * c as f64 / (n * s);
                let (nll, d_feat) = dec.cross_entropy(&feat, y, cw, &mut grad[n_enc..]);
                ce += c as f64 / (n * s) * nll;
                for c in 0..d {
                    d_mu[c] += d_feat[c + 1];
                    d_lv[c] += d_feat[c + 1] * 0.5 * sd[c] * eps[c];
                }
            }
        }
        mu_head.accumulate_grad(&f, &d_mu, &mut grad[..n_mu]);
        lv_head.accumulate_grad(&f, &d_lv, &mut grad[n_mu..n_enc]);
    }
    Ok(LossEval::new(beta * ce, kl, grad))
}
