//! Leave-one-out log-mixture estimators of the total and conditional rate.
//!
//! For a batch of `N` elements the total rate is estimated as
//!
//! ```text
//! (1/N) sum_i E_{w ~ q(w|x_i)} [ log q(w|x_i) - log (1/(N-1)) sum_{j != i} q(w|x_j) ],
//! ```
//!
//! and the conditional rate replaces the pool `j != i` by the other members
//! of the class of `y_i`. The inner expectation uses `s` draws per distinct
//! input shared by all of its duplicates.
//!
//! The Dirichlet path also returns exact gradients of the sample estimate
//! for frozen noise. They have two parts: the density parameters of every
//! component evaluated at a fixed draw, and the draw itself moving with the
//! concentrations of its own input.

use rand_chacha::ChaCha8Rng;

use crate::encoder::batch::Minibatch;
use crate::encoder::dirichlet::DirichletEncoder;
use crate::encoder::family::{dirichlet_from_noise, DirichletParams, GammaNoise, LatentModel};
use crate::error::{Error, Result};
use crate::special::log_sum_exp;

/// Both rate estimates from one set of draws.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LooRates {
    pub total: f64,
    /// `None` for unlabeled batches.
    pub conditional: Option<f64>,
}

fn check_batch(batch: &Minibatch, s: usize) -> Result<()> {
    if batch.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "leave-one-out needs a batch of at least 2, got {}",
            batch.len()
        )));
    }
    if s == 0 {
        return Err(Error::InvalidArgument(
            "need at least one latent sample per input".into(),
        ));
    }
    Ok(())
}

/// `ln(count - [v == u]) + table[v]` over the pool, then log-sum-exp.
fn pool_lse(table: &[f64], ln_counts: &[f64], self_slot: usize, self_count: usize, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    buf.extend(table.iter().zip(ln_counts).enumerate().map(|(v, (t, lc))| {
        if v == self_slot {
            let c = self_count - 1;
            if c == 0 {
                f64::NEG_INFINITY
            } else {
                (c as f64).ln() + t
            }
        } else {
            lc + t
        }
    }));
    log_sum_exp(buf)
}

fn ln_counts(counts: impl Iterator<Item = usize>) -> Vec<f64> {
    counts
        .map(|c| if c == 0 { f64::NEG_INFINITY } else { (c as f64).ln() })
        .collect()
}

/// `[y][v]` class counts, their logarithms, and `[y]` class sizes.
type ClassPools = (Vec<Vec<usize>>, Vec<Vec<f64>>, Vec<usize>);

struct Pools {
    n: usize,
    mult: Vec<usize>,
    ln_mult: Vec<f64>,
    class: Option<ClassPools>,
}

impl Pools {
    fn new(batch: &Minibatch) -> Self {
        let mult = batch.multiplicities();
        let class = batch.class_counts().map(|cc| {
            let ny = batch.n_classes();
            let by_class: Vec<Vec<usize>> = (0..ny).map(|y| cc.iter().map(|row| row[y]).collect()).collect();
            let ln_by_class = by_class.iter().map(|c| ln_counts(c.iter().copied())).collect();
            let sizes = by_class.iter().map(|c| c.iter().sum()).collect();
            (by_class, ln_by_class, sizes)
        });
        Self {
            n: batch.len(),
            ln_mult: ln_counts(mult.iter().copied()),
            mult,
            class,
        }
    }
}

/// Total and (when labelled) conditional rate for any latent model.
pub fn loo_rates<M: LatentModel>(model: &M, batch: &Minibatch, s: usize, rng: &mut ChaCha8Rng) -> Result<LooRates> {
    check_batch(batch, s)?;
    let params = (0..batch.n_unique())
        .map(|u| model.params(batch.unique_input(u)))
        .collect::<Result<Vec<_>>>()?;
    let pools = Pools::new(batch);
    let n = pools.n as f64;
    let mut table = vec![0.0; params.len()];
    let mut buf = Vec::new();
    let (mut total, mut cond) = (0.0, 0.0);
    for (u, pu) in params.iter().enumerate() {
        for _ in 0..s {
            let w = model.draw(pu, rng);
            for (t, pv) in table.iter_mut().zip(&params) {
                *t = model.log_density(pv, &w);
            }
            let l = pool_lse(&table, &pools.ln_mult, u, pools.mult[u], &mut buf);
            total += pools.mult[u] as f64 * (table[u] - l + (n - 1.0).ln());
            if let Some((counts, ln_c, sizes)) = &pools.class {
                for y in 0..counts.len() {
                    let c = counts[y][u];
                    if c == 0 {
                        continue;
                    }
                    let l = pool_lse(&table, &ln_c[y], u, c, &mut buf);
                    cond += c as f64 * (table[u] - l + (sizes[y] as f64 - 1.0).ln());
                }
            }
        }
    }
    let scale = 1.0 / (n * s as f64);
    Ok(LooRates {
        total: total * scale,
        conditional: pools.class.as_ref().map(|_| cond * scale),
    })
}

/// Leave-one-out estimate of `I(X;W)`.
pub fn loo_total_rate<M: LatentModel>(model: &M, batch: &Minibatch, s: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    Ok(loo_rates(model, batch, s, rng)?.total)
}

/// Leave-one-out estimate of `I(X;W|Y)` from within-class pools.
pub fn loo_conditional_rate<M: LatentModel>(
    model: &M,
    batch: &Minibatch,
    s: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if batch.ys().is_none() {
        return Err(Error::InvalidArgument("conditional rate needs a labelled batch".into()));
    }
    Ok(loo_rates(model, batch, s, rng)?
        .conditional
        .expect("labelled batch yields a conditional rate"))
}

/// Frozen Dirichlet noise for a batch: `draws[slot][sample][k]`. A slot is a
/// distinct input for [`DirichletNoise::per_input`] and an element for
/// [`DirichletNoise::per_element`].
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletNoise {
    pub(crate) draws: Vec<Vec<Vec<GammaNoise>>>,
}

impl DirichletNoise {
    /// `s` draws at each distinct input, exact for the current encoder.
    pub fn per_input(enc: &DirichletEncoder, batch: &Minibatch, s: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let draws = (0..batch.n_unique())
            .map(|u| {
                (0..s)
                    .map(|_| enc.draw_noise(batch.unique_input(u), rng))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { draws })
    }

    /// One draw per batch element.
    pub fn per_element(enc: &DirichletEncoder, batch: &Minibatch, rng: &mut ChaCha8Rng) -> Result<Self> {
        let draws = batch
            .xs()
            .iter()
            .map(|x| Ok(vec![enc.draw_noise(x, rng)?]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { draws })
    }

    pub fn samples(&self) -> usize {
        self.draws.first().map_or(0, Vec::len)
    }

    pub(crate) fn check(&self, slots: usize, k: usize) -> Result<()> {
        if self.draws.len() != slots {
            return Err(Error::DimensionMismatch {
                what: "noise slots",
                expected: slots,
                found: self.draws.len(),
            });
        }
        let s = self.samples();
        if s == 0 {
            return Err(Error::InvalidArgument("noise holds no samples".into()));
        }
        for slot in &self.draws {
            if slot.len() != s {
                return Err(Error::DimensionMismatch {
                    what: "noise samples",
                    expected: s,
                    found: slot.len(),
                });
            }
            if let Some(d) = slot.iter().find(|d| d.len() != k) {
                return Err(Error::DimensionMismatch {
                    what: "noise components",
                    expected: k,
                    found: d.len(),
                });
            }
        }
        Ok(())
    }
}

/// Per-distinct-input encoder state shared by the Dirichlet losses.
pub(crate) struct Evaluated {
    pub features: Vec<Vec<f64>>,
    pub params: Vec<DirichletParams>,
}

impl Evaluated {
    pub fn new(enc: &DirichletEncoder, batch: &Minibatch) -> Result<Self> {
        let features = (0..batch.n_unique())
            .map(|u| enc.feature_map().features(batch.unique_input(u)))
            .collect::<Result<Vec<_>>>()?;
        let params = features
            .iter()
            .map(|f| DirichletParams::new(enc.alpha_from_features(f).0))
            .collect();
        Ok(Self { features, params })
    }
}

/// `c_total * total + c_cond * conditional` for a Dirichlet encoder under
/// frozen noise. With `d_alpha` given, accumulates the gradient with respect
/// to the concentrations of each distinct input.
pub(crate) fn dirichlet_loo(
    ev: &Evaluated,
    batch: &Minibatch,
    noise: &DirichletNoise,
    c_total: f64,
    c_cond: f64,
    mut d_alpha: Option<&mut [Vec<f64>]>,
) -> Result<LooRates> {
    let k = ev.params.first().ok_or(Error::EmptyInput)?.alpha.len();
    check_batch(batch, noise.samples())?;
    noise.check(batch.n_unique(), k)?;
    let pools = Pools::new(batch);
    if c_cond != 0.0 && pools.class.is_none() {
        return Err(Error::InvalidArgument("conditional rate needs a labelled batch".into()));
    }
    let s = noise.samples();
    let n = pools.n as f64;
    let scale = 1.0 / (n * s as f64);
    let offsets: Vec<Vec<f64>> = match d_alpha {
        Some(_) => ev.params.iter().map(DirichletParams::score_offset).collect(),
        None => Vec::new(),
    };
    let nu = ev.params.len();
    let mut table = vec![0.0; nu];
    let mut buf = Vec::new();
    let mut rho = vec![0.0; nu];
    let (mut total, mut cond) = (0.0, 0.0);
    for u in 0..nu {
        let alpha_u = &ev.params[u].alpha;
        for frozen in &noise.draws[u] {
            let (draw, dlx) = dirichlet_from_noise(alpha_u, frozen);
            for (t, p) in table.iter_mut().zip(&ev.params) {
                *t = p.log_density_log(&draw.ell);
            }
            // Self weight and mixture responsibilities of this sample.
            let mut g_self = 0.0;
            rho.iter_mut().for_each(|r| *r = 0.0);

            let lt = pool_lse(&table, &pools.ln_mult, u, pools.mult[u], &mut buf);
            let wt = pools.mult[u] as f64 * scale;
            total += wt * (table[u] - lt + (n - 1.0).ln());
            if d_alpha.is_some() && c_total != 0.0 {
                g_self += c_total * wt;
                for (r, b) in rho.iter_mut().zip(&buf) {
                    *r += c_total * wt * (b - lt).exp();
                }
            }
            if let Some((counts, ln_c, sizes)) = &pools.class {
                for y in 0..counts.len() {
                    let c = counts[y][u];
                    if c == 0 {
                        continue;
                    }
                    let ly = pool_lse(&table, &ln_c[y], u, c, &mut buf);
                    let wy = c as f64 * scale;
                    cond += wy * (table[u] - ly + (sizes[y] as f64 - 1.0).ln());
                    if d_alpha.is_some() && c_cond != 0.0 {
                        g_self += c_cond * wy;
                        for (r, b) in rho.iter_mut().zip(&buf) {
                            *r += c_cond * wy * (b - ly).exp();
                        }
                    }
                }
            }

            let Some(da) = d_alpha.as_deref_mut() else { continue };
            // Density-parameter path: score of each component at the draw.
            for v in 0..nu {
                let coef = if v == u { g_self - rho[v] } else { -rho[v] };
                if coef == 0.0 {
                    continue;
                }
                for ((d, o), l) in da[v].iter_mut().zip(&offsets[v]).zip(&draw.ell) {
                    *d += coef * (o + l);
                }
            }
            // Sample path: d/d ell of the sample term, pushed through the
            // normalization and the gamma reparameterization.
            let mut g_ell: Vec<f64> = alpha_u.iter().map(|a| g_self * (a - 1.0)).collect();
            for v in 0..nu {
                if rho[v] != 0.0 {
                    for (g, a) in g_ell.iter_mut().zip(&ev.params[v].alpha) {
                        *g -= rho[v] * (a - 1.0);
                    }
                }
            }
            let g_sum: f64 = g_ell.iter().sum();
            for m in 0..k {
                let g_lx = g_ell[m] - draw.ell[m].exp() * g_sum;
                da[u][m] += g_lx * dlx[m];
            }
        }
    }
    Ok(LooRates {
        total,
        conditional: pools.class.as_ref().map(|_| cond),
    })
}

/// Both rates of a Dirichlet encoder on frozen noise, without gradients.
pub fn dirichlet_loo_rates(enc: &DirichletEncoder, batch: &Minibatch, noise: &DirichletNoise) -> Result<LooRates> {
    let ev = Evaluated::new(enc, batch)?;
    dirichlet_loo(&ev, batch, noise, 0.0, 0.0, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::gaussian::KernelEncoder;
    use crate::encoder::input::{FeatureMap, Input};
    use crate::prob::EncoderKernel;
    use rand::SeedableRng;

    fn inputs(n: usize) -> Vec<Input> {
        (0..n).map(Input::Discrete).collect()
    }

    #[test]
    fn constant_encoder_has_zero_rates() {
        let enc = KernelEncoder::new(EncoderKernel::constant(4));
        let b = Minibatch::stratified(&crate::tasks::binary(), &inputs(4), 400).unwrap();
        let r = loo_rates(&enc, &b, 8, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(r.total.abs() < 1e-12);
        assert!(r.conditional.unwrap().abs() < 1e-12);
    }

    #[test]
    fn identity_encoder_total_rate_is_close_to_log_n() {
        // Deterministic identity on 4 inputs, 100 copies each: the pool keeps
        // 99 copies of self among 399 others.
        let enc = KernelEncoder::new(EncoderKernel::identity(4));
        let b = Minibatch::new((0..400).map(|i| Input::Discrete(i % 4)).collect(), None).unwrap();
        let r = loo_total_rate(&enc, &b, 4, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!((r - (399f64 / 99.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn frozen_noise_path_matches_generic_estimator() {
        let enc = DirichletEncoder::new(FeatureMap::OneHot { n: 4 }, 3, 1.0, 5).unwrap();
        let b = Minibatch::stratified(&crate::tasks::binary(), &inputs(4), 40).unwrap();
        let generic = loo_rates(&enc, &b, 16, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let noise = DirichletNoise::per_input(&enc, &b, 16, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let frozen = dirichlet_loo_rates(&enc, &b, &noise).unwrap();
        assert!((generic.total - frozen.total).abs() < 1e-12);
        assert!((generic.conditional.unwrap() - frozen.conditional.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn tiny_batches_are_rejected() {
        let enc = KernelEncoder::new(EncoderKernel::identity(2));
        let b = Minibatch::new(vec![Input::Discrete(0)], None).unwrap();
        assert!(loo_total_rate(&enc, &b, 4, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        let b = Minibatch::new(inputs(2), None).unwrap();
        assert!(loo_conditional_rate(&enc, &b, 4, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
