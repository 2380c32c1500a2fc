//! Plug-in evaluation of a trained encoder on a finite joint, and gauge
//! matching of learned simplex coordinates.
//!
//! Unlike the training estimators, the evaluation knows `p(x)` and `p(y|x)`
//! exactly, so the marginals `q(w)` and `q(w|y)` are exact finite mixtures
//! and only the outer expectation over `w` is sampled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::family::LatentModel;
use crate::encoder::input::Input;
use crate::error::{Error, Result};
use crate::prob::{kl_raw, mutual_information, JointPMF};
use crate::special::log_sum_exp;

/// Monte Carlo information-plane coordinates of an encoder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PluginEstimate {
    /// `I(X;W)`.
    pub rate: f64,
    /// `I(X;W|Y)`.
    pub cond_rate: f64,
    /// `I(X;Y|W) = E KL(p(Y|x) || p(Y|w))`.
    pub epsilon: f64,
    /// `I(W;Y) = E KL(p(Y|w) || p(Y))`, estimated separately from `epsilon`.
    pub iwy: f64,
    pub ixy: f64,
    /// `I(X;Y) - epsilon`.
    pub delta: f64,
}

/// `s` draws per input row; `inputs[x]` names row `x` of the joint.
pub fn plugin_estimate<M: LatentModel>(
    model: &M,
    joint: &JointPMF,
    inputs: &[Input],
    s: usize,
    seed: u64,
) -> Result<PluginEstimate> {
    if inputs.len() != joint.nx() {
        return Err(Error::DimensionMismatch {
            what: "input list",
            expected: joint.nx(),
            found: inputs.len(),
        });
    }
    if s == 0 {
        return Err(Error::InvalidArgument("need at least one sample per input".into()));
    }
    let params = inputs.iter().map(|x| model.params(x)).collect::<Result<Vec<_>>>()?;
    let ny = joint.ny();
    let ln_px: Vec<f64> = joint.px().iter().map(|p| p.ln()).collect();
    let ln_pxy: Vec<Vec<f64>> = (0..ny)
        .map(|y| (0..joint.nx()).map(|x| joint.p(x, y).ln()).collect())
        .collect();
    let ln_py: Vec<f64> = joint.py().iter().map(|p| p.ln()).collect();
    let conds = joint.conditionals();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = vec![0.0; params.len()];
    let mut buf = vec![0.0; params.len()];
    let mut post = vec![0.0; ny];
    let (mut rate, mut cond_rate, mut eps, mut iwy) = (0.0, 0.0, 0.0, 0.0);
    for (x, px) in params.iter().enumerate() {
        let wx = joint.px()[x] / s as f64;
        for _ in 0..s {
            let w = model.draw(px, &mut rng);
            for (t, p) in table.iter_mut().zip(&params) {
                *t = model.log_density(p, &w);
            }
            for (b, (t, l)) in buf.iter_mut().zip(table.iter().zip(&ln_px)) {
                *b = t + l;
            }
            let lq = log_sum_exp(&buf);
            rate += wx * (table[x] - lq);
            for y in 0..ny {
                for (b, (t, l)) in buf.iter_mut().zip(table.iter().zip(&ln_pxy[y])) {
                    *b = t + l;
                }
                let a = log_sum_exp(&buf);
                post[y] = (a - lq).exp();
                // log q(w|y) = a - ln p(y)
                if joint.p(x, y) > 0.0 {
                    cond_rate += joint.p(x, y) / s as f64 * (table[x] - (a - ln_py[y]));
                }
            }
            let total: f64 = post.iter().sum();
            post.iter_mut().for_each(|p| *p /= total);
            eps += wx * kl_raw(&conds[x], &post).unwrap_or(f64::INFINITY);
            iwy += wx * kl_raw(&post, joint.py()).unwrap_or(f64::INFINITY);
        }
    }
    let ixy = mutual_information(joint);
    Ok(PluginEstimate {
        rate,
        cond_rate,
        epsilon: eps,
        iwy,
        ixy,
        delta: ixy - eps,
    })
}

/// All permutations of `0..k` in lexicographic order.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// Best relabelling of learned coordinates against ground-truth rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeMatch {
    /// Class `y` is read from learned coordinate `perm[y]`.
    pub perm: Vec<usize>,
    /// Weighted mean of `KL(truth || permuted mean)`.
    pub mean_kl: f64,
}

/// Minimizes the weighted mean KL from each true row to the permuted learned
/// mean over all `K!` coordinate permutations.
pub fn gauge_matched_kl(means: &[Vec<f64>], truth: &[Vec<f64>], weights: &[f64]) -> Result<GaugeMatch> {
    if means.len() != truth.len() || weights.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            what: "gauge matching rows",
            expected: truth.len(),
            found: means.len().min(weights.len()),
        });
    }
    let k = truth.first().ok_or(Error::EmptyInput)?.len();
    if k > 8 {
        return Err(Error::InvalidArgument(format!(
            "exhaustive gauge matching needs K <= 8, got {k}"
        )));
    }
    let total_w: f64 = weights.iter().sum();
    let mut best: Option<GaugeMatch> = None;
    for perm in permutations(k) {
        let mut acc = 0.0;
        for ((m, t), w) in means.iter().zip(truth).zip(weights) {
            let pm: Vec<f64> = perm.iter().map(|&c| m[c]).collect();
            acc += w * kl_raw(t, &pm).unwrap_or(f64::INFINITY);
        }
        let mean_kl = acc / total_w;
        if best.as_ref().is_none_or(|b| mean_kl < b.mean_kl) {
            best = Some(GaugeMatch { perm, mean_kl });
        }
    }
    Ok(best.expect("at least one permutation"))
}

/// Single-linkage clusters of `points` at Euclidean threshold `tol`, labelled
/// in order of first appearance. Two encoders induce the same partition up to
/// relabelling exactly when their label vectors are equal.
pub fn cluster_partition(points: &[Vec<f64>], tol: f64) -> Vec<usize> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let d2: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2.sqrt() < tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut label_of_root = vec![usize::MAX; n];
    let mut next = 0;
    (0..n)
        .map(|i| {
            let r = find(&mut parent, i);
            if label_of_root[r] == usize::MAX {
                label_of_root[r] = next;
                next += 1;
            }
            label_of_root[r]
        })
        .collect()
}
