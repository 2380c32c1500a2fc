//! The Gaussian → exponential → flat-Dirichlet chain.
//!
//! `2K` standard normals are folded pairwise into `K` squared radii, which are
//! i.i.d. `Exp(1/2)`; normalising the radii yields an exact `Dir(1, ..., 1)`
//! draw. The map from `R^{2K}` to the simplex forgets the `K` planar phases
//! and the overall scale, and [`overhead_report`] accounts for the entropy
//! those coordinates carry.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{JointPMF, SimplexPoint};

/// All three parameterizations of one chain draw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSample {
    /// `2K` standard normals, plane `k` being `(gauss[2k], gauss[2k+1])`.
    pub gauss: Vec<f64>,
    /// `expo[k] = gauss[2k]^2 + gauss[2k+1]^2`.
    pub expo: Vec<f64>,
    /// `expo / sum(expo)`.
    pub simplex: SimplexPoint,
}

fn fold(gauss: &[f64]) -> Vec<f64> {
    gauss.chunks_exact(2).map(|p| p[0] * p[0] + p[1] * p[1]).collect()
}

fn normalize_radii(expo: &[f64]) -> SimplexPoint {
    let total: f64 = expo.iter().sum();
    SimplexPoint::new(expo.iter().map(|e| e / total).collect()).expect("positive radii")
}

/// Random-access sampler: draw `i` depends only on `(seed, i)`, taken from
/// ChaCha stream `i` of the seeded generator.
#[derive(Clone, Debug)]
pub struct ChainSampler {
    k: usize,
    seed: u64,
}

impl ChainSampler {
    pub fn new(k: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("chain needs K >= 2, got {k}")));
        }
        Ok(Self { k, seed })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sample(&self, index: u64) -> ChainSample {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        loop {
            let gauss: Vec<f64> = (0..2 * self.k).map(|_| rng.sample(StandardNormal)).collect();
            let expo = fold(&gauss);
            // An all-zero draw has probability zero; redraw rather than divide by 0.
            if expo.iter().any(|&e| e > 0.0) {
                let simplex = normalize_radii(&expo);
                return ChainSample { gauss, expo, simplex };
            }
        }
    }
}

/// `n` chain draws in index order.
pub fn sample_chain(k: usize, n: usize, seed: u64) -> Result<Vec<ChainSample>> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let s = ChainSampler::new(k, seed)?;
    Ok((0..n as u64).map(|i| s.sample(i)).collect())
}

/// CSV with columns `g0..g{2K-1}, e0..e{K-1}, p0..p{K-1}`.
pub fn samples_to_csv(samples: &[ChainSample]) -> String {
    let k = samples.first().map_or(0, |s| s.expo.len());
    let mut cols: Vec<String> = (0..2 * k).map(|i| format!("g{i}")).collect();
    cols.extend((0..k).map(|i| format!("e{i}")));
    cols.extend((0..k).map(|i| format!("p{i}")));
    let mut out = cols.join(",");
    out.push('\n');
    for s in samples {
        let row: Vec<String> = s
            .gauss
            .iter()
            .chain(&s.expo)
            .chain(s.simplex.probs())
            .map(|v| v.to_string())
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Simplex map: `pi(w)_k = r_k^2 / sum_j r_j^2` with `r_k^2` the squared
/// radius of plane `k`.
pub fn simplex_map(w: &[f64]) -> Result<SimplexPoint> {
    if w.is_empty() || !w.len().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "simplex map needs an even, non-zero number of coordinates, got {}",
            w.len()
        )));
    }
    let expo = fold(w);
    if expo.iter().all(|&e| e == 0.0) {
        return Err(Error::InvalidArgument("simplex map of the zero vector".into()));
    }
    Ok(normalize_radii(&expo))
}

/// Rotates plane `k` of `w` by `angles[k]`.
pub fn rotate_planes(w: &[f64], angles: &[f64]) -> Vec<f64> {
    w.chunks_exact(2)
        .zip(angles)
        .flat_map(|(p, &a)| {
            let (s, c) = a.sin_cos();
            [c * p[0] - s * p[1], s * p[0] + c * p[1]]
        })
        .collect()
}

/// Entropy carried by the coordinates the simplex map discards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverheadReport {
    pub k: usize,
    /// `(1/2) ln(2 pi e K)`: the overall scale of the exponential vector.
    pub scale_overhead: f64,
    /// `K ln(2 pi)`: one uniform phase per plane.
    pub phase_overhead: f64,
}

impl OverheadReport {
    pub fn total(&self) -> f64 {
        self.scale_overhead + self.phase_overhead
    }
}

pub fn overhead_report(k: usize) -> Result<OverheadReport> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("overheads need K >= 2, got {k}")));
    }
    let kf = k as f64;
    Ok(OverheadReport {
        k,
        scale_overhead: 0.5 * (2.0 * PI * std::f64::consts::E * kf).ln(),
        phase_overhead: kf * (2.0 * PI).ln(),
    })
}

/// Plug-in mutual information of paired discrete samples.
pub fn plugin_mi(a: &[usize], b: &[usize]) -> f64 {
    let na = a.iter().max().map_or(0, |m| m + 1);
    let nb = b.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0.0; na * nb];
    for (&i, &j) in a.iter().zip(b) {
        counts[i * nb + j] += 1.0;
    }
    let n = a.len() as f64;
    let rows: Vec<f64> = counts.chunks(nb).map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..nb).map(|j| (0..na).map(|i| counts[i * nb + j]).sum()).collect();
    let mut mi = 0.0;
    for i in 0..na {
        for j in 0..nb {
            let c = counts[i * nb + j];
            if c > 0.0 {
                mi += c / n * (c * n / (rows[i] * cols[j])).ln();
            }
        }
    }
    mi.max(0.0)
}

/// Estimates of the three terms of `I(pi(W);Y) <= I(W;Y) <= I(X;Y)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhaseDpiReport {
    pub i_pi_y: f64,
    pub i_w_y: f64,
    /// Exact `I(X;Y)` of the joint.
    pub i_x_y: f64,
    /// Bootstrap standard deviations of the two estimates.
    pub sd_pi_y: f64,
    pub sd_w_y: f64,
    /// Both inequalities hold within three bootstrap standard deviations.
    pub holds: bool,
}

fn sample_index(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &v) in p.iter().enumerate() {
        acc += v;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

/// Draws `(X, Y, W)` with `W | X` a chain latent whose plane `k` is scaled by
/// `sqrt(K p(Y=k|x))`, discretizes `W` into (largest simplex coordinate,
/// quadrant of the first phase) and `pi(W)` into its largest coordinate, and
/// compares plug-in MIs with a bootstrap.
///
/// The discretized `pi(W)` is a function of the discretized `W`, so the
/// estimated chain `X -> W -> pi(W)` keeps its Markov structure.
pub fn phase_dpi_check(j: &JointPMF, n: usize, resamples: usize, seed: u64) -> Result<PhaseDpiReport> {
    let k = j.ny();
    let sampler = ChainSampler::new(k, seed)?;
    let cond = j.conditionals();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let (mut ys, mut w_bins, mut pi_bins) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let x = sample_index(j.px(), rng.random());
        ys.push(sample_index(&cond[x], rng.random()));
        let g = sampler.sample(i as u64).gauss;
        let w: Vec<f64> = g
            .iter()
            .enumerate()
            .map(|(c, v)| v * (k as f64 * cond[x][c / 2]).sqrt())
            .collect();
        let pi = simplex_map(&w)?;
        let top = pi
            .probs()
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (c, &v)| if v > b.1 { (c, v) } else { b })
            .0;
        let quadrant = (w[0] >= 0.0) as usize * 2 + (w[1] >= 0.0) as usize;
        pi_bins.push(top);
        w_bins.push(top * 4 + quadrant);
    }
    let i_pi_y = plugin_mi(&pi_bins, &ys);
    let i_w_y = plugin_mi(&w_bins, &ys);
    let (mut bp, mut bw) = (Vec::with_capacity(resamples), Vec::with_capacity(resamples));
    for _ in 0..resamples {
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let y: Vec<usize> = idx.iter().map(|&i| ys[i]).collect();
        bp.push(plugin_mi(&idx.iter().map(|&i| pi_bins[i]).collect::<Vec<_>>(), &y));
        bw.push(plugin_mi(&idx.iter().map(|&i| w_bins[i]).collect::<Vec<_>>(), &y));
    }
    let sd = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0).max(1.0)).sqrt()
    };
    let (sd_pi_y, sd_w_y) = (sd(&bp), sd(&bw));
    let i_x_y = crate::prob::mutual_information(j);
    Ok(PhaseDpiReport {
        holds: i_pi_y <= i_w_y + 3.0 * sd_pi_y.max(sd_w_y) && i_w_y <= i_x_y + 3.0 * sd_w_y,
        i_pi_y,
        i_w_y,
        i_x_y,
        sd_pi_y,
        sd_w_y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_map_examples() {
        let p = simplex_map(&[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(p.probs().iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(
            simplex_map(&[2.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap().probs(),
            &[1.0, 0.0, 0.0]
        );
        assert!(simplex_map(&[0.0; 4]).is_err());
        assert!(simplex_map(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn overhead_values() {
        let r = overhead_report(10).unwrap();
        assert!((r.scale_overhead - 2.570231).abs() < 1e-6);
        assert!((r.phase_overhead - 18.37877).abs() < 1e-5);
        assert!((overhead_report(2).unwrap().phase_overhead - 3.67575).abs() < 1e-5);
        assert!(overhead_report(1).is_err());
    }

    #[test]
    fn within_sample_identities_are_exact() {
        for s in sample_chain(4, 500, 9).unwrap() {
            let total: f64 = s.expo.iter().sum();
            for k in 0..4 {
                assert_eq!(
                    s.expo[k],
                    s.gauss[2 * k] * s.gauss[2 * k] + s.gauss[2 * k + 1] * s.gauss[2 * k + 1]
                );
                assert_eq!(s.simplex.probs()[k], s.expo[k] / total);
            }
        }
    }

    #[test]
    fn sampling_is_random_access_and_deterministic() {
        let all = sample_chain(3, 20, 5).unwrap();
        let s = ChainSampler::new(3, 5).unwrap();
        assert_eq!(s.sample(17), all[17]);
        assert_eq!(sample_chain(3, 20, 5).unwrap(), all);
        assert_ne!(sample_chain(3, 20, 6).unwrap(), all);
    }

    #[test]
    fn plugin_mi_of_identical_labels_is_entropy() {
        let a = [0, 1, 0, 1, 2, 2];
        assert!((plugin_mi(&a, &a) - 3f64.ln()).abs() < 1e-12);
        assert!(plugin_mi(&[0, 0, 1, 1], &[0, 1, 0, 1]).abs() < 1e-15);
    }

    #[test]
    fn csv_has_all_parameterizations() {
        let csv = samples_to_csv(&sample_chain(2, 3, 0).unwrap());
        assert_eq!(csv.lines().next().unwrap(), "g0,g1,g2,g3,e0,e1,p0,p1");
        assert_eq!(csv.lines().count(), 4);
    }
}
