//! Sketched isotropic-Gaussian regularization.
//!
//! A batch in `R^d` is projected onto `m` random unit directions and each
//! projection is scored with the Epps–Pulley statistic
//!
//! ```text
//! T(x) = (1/n) sum_{j,k} exp(-(x_j - x_k)^2 / 2) - sqrt(2) sum_j exp(-x_j^2 / 4) + n / sqrt(3),
//! ```
//!
//! the `n`-scaled weighted L2 distance between the empirical characteristic
//! function and that of `N(0, 1)` under a standard-normal weight. Samples are
//! not studentized, so wrong scale is penalized as well as wrong shape.
//!
//! The double sum is evaluated exactly in `O(n M)` by expanding
//! `exp(y_j y_k)` in a power series around the centre of the sample, where
//! `M` grows with the squared half-range of the sample; very spread samples
//! fall back to the direct `O(n^2)` sum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SERIES_MAX_HALF_RANGE: f64 = 12.0;

/// Number of series terms for a sample of half-range `a`: the truncation
/// error is bounded by the Poisson(`a^2`) upper tail.
fn series_terms(a: f64) -> usize {
    let lam = a * a;
    (lam + 10.0 * lam.sqrt() + 25.0).ceil() as usize
}

struct Series {
    centre: f64,
    inv_sqrt: Vec<f64>,
}

impl Series {
    fn for_sample(x: &[f64]) -> Option<Self> {
        let (lo, hi) = x
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        let half = 0.5 * (hi - lo);
        if !(half <= SERIES_MAX_HALF_RANGE) {
            return None;
        }
        let m = series_terms(half);
        Some(Self {
            centre: 0.5 * (hi + lo),
            inv_sqrt: (0..=m)
                .map(|i| if i == 0 { 1.0 } else { 1.0 / (i as f64).sqrt() })
                .collect(),
        })
    }

    /// `acc[m] += sum_j w_j c_{j,m}` with `c_{j,m} = e^{-y_j^2/2} y_j^m / sqrt(m!)`.
    fn accumulate(&self, ys: &[f64], weights: Option<&[f64]>, acc: &mut [f64]) {
        let w = |j: usize| weights.map_or(1.0, |w| w[j]);
        let mut chunks = ys.chunks_exact(4);
        let mut j = 0;
        for c4 in &mut chunks {
            let mut c = [0.0; 4];
            for i in 0..4 {
                c[i] = (-0.5 * c4[i] * c4[i]).exp() * w(j + i);
            }
            acc[0] += c[0] + c[1] + c[2] + c[3];
            for (m, a) in acc.iter_mut().enumerate().skip(1) {
                let s = self.inv_sqrt[m];
                for i in 0..4 {
                    c[i] *= c4[i] * s;
                }
                *a += c[0] + c[1] + c[2] + c[3];
            }
            j += 4;
        }
        for (i, &y) in chunks.remainder().iter().enumerate() {
            let mut c = (-0.5 * y * y).exp() * w(j + i);
            acc[0] += c;
            for (m, a) in acc.iter_mut().enumerate().skip(1) {
                c *= y * self.inv_sqrt[m];
                *a += c;
            }
        }
    }

    /// `sum_m c_{j,m} coef[m]` for one point.
    fn dot(&self, y: f64, coef: &[f64]) -> f64 {
        let mut c = (-0.5 * y * y).exp();
        let mut s = c * coef[0];
        for m in 1..coef.len() {
            c *= y * self.inv_sqrt[m];
            s += c * coef[m];
        }
        s
    }
}

/// `sum_{j,k} exp(-(x_j - x_k)^2 / 2)`.
fn gauss_double_sum(x: &[f64]) -> f64 {
    match Series::for_sample(x) {
        Some(s) => {
            let ys: Vec<f64> = x.iter().map(|v| v - s.centre).collect();
            let mut acc = vec![0.0; s.inv_sqrt.len()];
            s.accumulate(&ys, None, &mut acc);
            acc.iter().map(|a| a * a).sum()
        }
        None => {
            let mut total = x.len() as f64;
            for j in 0..x.len() {
                for k in 0..j {
                    let d = x[j] - x[k];
                    total += 2.0 * (-0.5 * d * d).exp();
                }
            }
            total
        }
    }
}

fn check_sample(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("sample contains non-finite values".into()));
    }
    Ok(())
}

/// The Epps–Pulley normality statistic of a univariate sample.
pub fn epps_pulley(x: &[f64]) -> Result<f64> {
    check_sample(x)?;
    let n = x.len() as f64;
    let g: f64 = x.iter().map(|v| (-0.25 * v * v).exp()).sum();
    Ok(gauss_double_sum(x) / n - std::f64::consts::SQRT_2 * g + n / 3f64.sqrt())
}

/// [`epps_pulley`] together with its gradient with respect to the sample.
pub fn epps_pulley_grad(x: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_sample(x)?;
    let n = x.len() as f64;
    // d/dx_j of the double sum is -2 (y_j K_j - L_j) with
    // K_j = sum_k k(x_j, x_k) and L_j = sum_k k(x_j, x_k) y_k.
    let (double, kl): (f64, Vec<(f64, f64, f64)>) = match Series::for_sample(x) {
        Some(s) => {
            let ys: Vec<f64> = x.iter().map(|v| v - s.centre).collect();
            let mut a = vec![0.0; s.inv_sqrt.len()];
            let mut b = vec![0.0; s.inv_sqrt.len()];
            s.accumulate(&ys, None, &mut a);
            s.accumulate(&ys, Some(&ys), &mut b);
            let double = a.iter().map(|v| v * v).sum();
            (double, ys.iter().map(|&y| (y, s.dot(y, &a), s.dot(y, &b))).collect())
        }
        None => {
            let mut double = 0.0;
            let kl = x
                .iter()
                .map(|&xj| {
                    let (mut kj, mut lj) = (0.0, 0.0);
                    for &xk in x {
                        let e = (-0.5 * (xj - xk) * (xj - xk)).exp();
                        kj += e;
                        lj += e * xk;
                    }
                    double += kj;
                    (xj, kj, lj)
                })
                .collect();
            (double, kl)
        }
    };
    let mut g_sum = 0.0;
    let grad = x
        .iter()
        .zip(&kl)
        .map(|(&xj, &(yj, kj, lj))| {
            let e = (-0.25 * xj * xj).exp();
            g_sum += e;
            -2.0 * (yj * kj - lj) / n + std::f64::consts::SQRT_2 * e * xj / 2.0
        })
        .collect();
    let t = double / n - std::f64::consts::SQRT_2 * g_sum + n / 3f64.sqrt();
    Ok((t, grad))
}

/// Number, dimension and seed of the random projection directions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchConfig {
    pub m: usize,
    pub dim: usize,
    pub seed: u64,
}

impl SketchConfig {
    pub fn new(m: usize, dim: usize, seed: u64) -> Result<Self> {
        if m == 0 || dim == 0 {
            return Err(Error::InvalidArgument("sketch needs m >= 1 and dim >= 1".into()));
        }
        Ok(Self { m, dim, seed })
    }

    /// The same sketch with another direction seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// `m` directions drawn uniformly on the unit sphere by normalizing standard
/// normal vectors.
pub fn sample_directions(cfg: &SketchConfig) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.m)
        .map(|_| loop {
            let v: Vec<f64> = (0..cfg.dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                break v.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigregResult {
    /// Mean of `per_direction`.
    pub statistic: f64,
    pub per_direction: Vec<f64>,
}

fn project(batch: &[Vec<f64>], dir: &[f64]) -> Vec<f64> {
    batch
        .iter()
        .map(|row| row.iter().zip(dir).map(|(a, b)| a * b).sum())
        .collect()
}

fn check_batch(batch: &[Vec<f64>], dim: usize) -> Result<()> {
    if batch.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "SIGReg needs n >= 2 rows, got {}",
            batch.len()
        )));
    }
    if let Some(r) = batch.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            what: "batch row",
            expected: dim,
            found: r.len(),
        });
    }
    Ok(())
}

/// SIGReg with explicitly given unit directions.
pub fn sigreg_with_directions(batch: &[Vec<f64>], dirs: &[Vec<f64>]) -> Result<SigregResult> {
    let dim = dirs.first().ok_or(Error::EmptyInput)?.len();
    check_batch(batch, dim)?;
    let per_direction = dirs
        .iter()
        .map(|a| epps_pulley(&project(batch, a)))
        .collect::<Result<Vec<_>>>()?;
    let statistic = per_direction.iter().sum::<f64>() / per_direction.len() as f64;
    Ok(SigregResult {
        statistic,
        per_direction,
    })
}

/// Average Epps–Pulley statistic of the batch over `cfg.m` seeded directions.
pub fn sigreg_loss(batch: &[Vec<f64>], cfg: &SketchConfig) -> Result<SigregResult> {
    check_batch(batch, cfg.dim)?;
    sigreg_with_directions(batch, &sample_directions(cfg))
}

/// SIGReg statistic and its gradient with respect to every batch entry.
pub fn sigreg_grad(batch: &[Vec<f64>], dirs: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
    let dim = dirs.first().ok_or(Error::EmptyInput)?.len();
    check_batch(batch, dim)?;
    let m = dirs.len() as f64;
    let mut total = 0.0;
    let mut grad = vec![vec![0.0; dim]; batch.len()];
    for a in dirs {
        let (t, g) = epps_pulley_grad(&project(batch, a))?;
        total += t;
        for (row, gi) in grad.iter_mut().zip(&g) {
            for (r, ad) in row.iter_mut().zip(a) {
                *r += gi * ad / m;
            }
        }
    }
    Ok((total / m, grad))
}

/// Quantiles of a Monte Carlo null distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullBand {
    pub q01: f64,
    pub q50: f64,
    pub q99: f64,
    pub replicates: usize,
}

impl NullBand {
    /// A statistic lies in the band when it does not exceed the 99th
    /// percentile; small values are never evidence against normality here.
    pub fn contains(&self, statistic: f64) -> bool {
        statistic <= self.q99
    }

    fn from_samples(mut v: Vec<f64>) -> Self {
        v.sort_by(|a, b| a.partial_cmp(b).expect("statistics are finite"));
        let q = |p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
        Self {
            q01: q(0.01),
            q50: q(0.5),
            q99: q(0.99),
            replicates: v.len(),
        }
    }
}

/// Rows of i.i.d. standard normals.
pub fn gaussian_batch(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
        .collect()
}

/// Null distribution of [`sigreg_loss`] for isotropic standard-normal
/// batches of `n` rows. Replicate `r` uses batch seed `seed + r` and
/// direction seed `cfg.seed + r`.
pub fn sigreg_null_band(n: usize, cfg: &SketchConfig, replicates: usize, seed: u64) -> Result<NullBand> {
    if replicates == 0 {
        return Err(Error::EmptyInput);
    }
    let stats = (0..replicates as u64)
        .map(|r| {
            let batch = gaussian_batch(n, cfg.dim, seed.wrapping_add(r));
            sigreg_loss(&batch, &cfg.reseeded(cfg.seed.wrapping_add(r))).map(|s| s.statistic)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NullBand::from_samples(stats))
}

/// Null distribution of [`epps_pulley`] for `n` standard normals.
pub fn epps_pulley_null_band(n: usize, replicates: usize, seed: u64) -> Result<NullBand> {
    if replicates == 0 {
        return Err(Error::EmptyInput);
    }
    let stats = (0..replicates as u64)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r));
            let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            epps_pulley(&x)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NullBand::from_samples(stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mut s = 0.0;
        for a in x {
            for b in x {
                s += (-0.5 * (a - b) * (a - b)).exp();
            }
        }
        let g: f64 = x.iter().map(|v| (-0.25 * v * v).exp()).sum();
        s / n - 2f64.sqrt() * g + n / 3f64.sqrt()
    }

    #[test]
    fn single_point_value() {
        let t = epps_pulley(&[0.0]).unwrap();
        assert!((t - (1.0 - 2f64.sqrt() + 1.0 / 3f64.sqrt())).abs() < 1e-15);
        assert!((t - 0.163137).abs() < 1e-6);
        assert!(epps_pulley(&[]).is_err());
    }

    #[test]
    fn series_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for scale in [0.1, 1.0, 3.0, 5.5, 11.0, 30.0] {
            let x: Vec<f64> = (0..301)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal) + 0.7)
                .collect();
            let (a, b) = (epps_pulley(&x).unwrap(), direct(&x));
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "scale {scale}: {a} vs {b}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for scale in [1.0, 4.0, 40.0] {
            let x: Vec<f64> = (0..37).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
            let (t, g) = epps_pulley_grad(&x).unwrap();
            assert!((t - direct(&x)).abs() < 1e-9 * t.max(1.0));
            let h = 1e-5;
            for j in [0, 10, 36] {
                let mut xp = x.clone();
                xp[j] += h;
                let mut xm = x.clone();
                xm[j] -= h;
                let fd = (direct(&xp) - direct(&xm)) / (2.0 * h);
                assert!((fd - g[j]).abs() < 1e-6 * fd.abs().max(1.0), "{fd} vs {}", g[j]);
            }
        }
    }

    #[test]
    fn directions_are_unit_and_reproducible() {
        let cfg = SketchConfig::new(64, 20, 3).unwrap();
        let d = sample_directions(&cfg);
        assert_eq!(d.len(), 64);
        for v in &d {
            assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(sample_directions(&cfg), d);
        for v in sample_directions(&SketchConfig::new(10, 1, 0).unwrap()) {
            assert_eq!(v[0].abs(), 1.0);
        }
    }

    #[test]
    fn statistic_is_the_mean_over_directions() {
        let cfg = SketchConfig::new(8, 5, 1).unwrap();
        let r = sigreg_loss(&gaussian_batch(50, 5, 4), &cfg).unwrap();
        assert_eq!(r.statistic, r.per_direction.iter().sum::<f64>() / 8.0);
        assert!(sigreg_loss(&gaussian_batch(50, 4, 4), &cfg).is_err());
        assert!(sigreg_loss(&gaussian_batch(1, 5, 4), &cfg).is_err());
    }
}
