//! Covering-number estimates of the dimension of a predictive manifold.
//!
//! Covers are built by farthest-point traversal: the `k`-th centre is the
//! point farthest from the first `k - 1`, and the covering radius after `k`
//! centres is recorded. A single traversal then answers every scale, and the
//! count `N(delta)` (smallest `k` whose radius is at most `delta`) is exactly
//! monotone in `delta`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{kl_raw, JointPMF, SimplexPoint};
use crate::tasks::ContinuousTask;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Hellinger,
    TotalVariation,
    /// `KL(p||q) + KL(q||p)`; not a metric, offered for comparison only.
    KlSymmetrized,
}

impl Metric {
    pub fn distance(self, p: &[f64], q: &[f64]) -> f64 {
        match self {
            Metric::Hellinger => hellinger_raw(p, q),
            Metric::TotalVariation => 0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>(),
            Metric::KlSymmetrized => {
                let f = |a: &[f64], b: &[f64]| kl_raw(a, b).unwrap_or(f64::INFINITY);
                f(p, q) + f(q, p)
            }
        }
    }
}

// Evaluated as sqrt(sum (sqrt p - sqrt q)^2 / 2), which equals
// sqrt(1 - sum sqrt(pq)) on the simplex but is exactly zero for p = q.
fn hellinger_raw(p: &[f64], q: &[f64]) -> f64 {
    let s: f64 = p
        .iter()
        .zip(q)
        .map(|(a, b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .sum();
    (0.5 * s).sqrt().min(1.0)
}

/// Hellinger distance, `d_H^2 = 1 - sum sqrt(p_i q_i)`.
///
/// # Panics
/// If the points live in simplices of different dimension.
pub fn hellinger(p: &SimplexPoint, q: &SimplexPoint) -> f64 {
    assert_eq!(p.dim(), q.dim(), "hellinger: dimension mismatch");
    hellinger_raw(p.probs(), q.probs())
}

/// A finite set of predictive distributions with a chosen metric.
#[derive(Clone, Debug)]
pub struct PredictiveManifold {
    points: Vec<SimplexPoint>,
    metric: Metric,
}

impl PredictiveManifold {
    pub fn new(points: Vec<SimplexPoint>, metric: Metric) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyInput)?;
        if let Some(p) = points.iter().find(|p| p.dim() != first.dim()) {
            return Err(Error::DimensionMismatch {
                what: "manifold point",
                expected: first.dim(),
                found: p.dim(),
            });
        }
        Ok(Self { points, metric })
    }

    /// The set of distinct rows `p(Y|x)` of a joint. Exact duplicates are
    /// kept once, since the manifold is a set of distributions.
    pub fn from_joint(j: &JointPMF, metric: Metric) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for r in j.conditionals() {
            if !rows.contains(&r) {
                rows.push(r);
            }
        }
        let pts = rows.into_iter().map(SimplexPoint::new).collect::<Result<Vec<_>>>()?;
        Self::new(pts, metric)
    }

    pub fn points(&self) -> &[SimplexPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// Covering radius after each prefix of the farthest-point order:
    /// `radii[k-1]` is the radius achieved by `k` centres. Ties go to the
    /// lowest index, so the result is deterministic.
    pub fn farthest_point_radii(&self) -> Vec<f64> {
        let n = self.points.len();
        let d = |a: usize, b: usize| self.metric.distance(self.points[a].probs(), self.points[b].probs());
        let mut nearest: Vec<f64> = (0..n).map(|i| d(0, i)).collect();
        let mut radii = Vec::with_capacity(n);
        for _ in 1..n {
            let (far, r) =
                nearest.iter().enumerate().fold(
                    (0, f64::NEG_INFINITY),
                    |best, (i, &v)| if v > best.1 { (i, v) } else { best },
                );
            radii.push(r);
            if r == 0.0 {
                break;
            }
            for (i, v) in nearest.iter_mut().enumerate() {
                *v = v.min(d(far, i));
            }
        }
        radii.push(0.0);
        radii
    }
}

fn count_at(radii: &[f64], delta: f64) -> usize {
    radii.iter().position(|&r| r <= delta).map_or(radii.len(), |k| k + 1)
}

/// Greedy (farthest-point) upper bound on the number of `delta`-balls
/// needed to cover the manifold.
pub fn covering_number(m: &PredictiveManifold, delta: f64) -> Result<usize> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    Ok(count_at(&m.farthest_point_radii(), delta))
}

/// Covering counts over a range of scales and the fitted growth exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringProfile {
    /// Scales in decreasing order.
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
    /// Least-squares slope of `ln N` against `ln(1/delta)` over the window.
    pub slope_estimate: f64,
    /// Index range `[start, end)` into `scales` used for the fit.
    pub window: (usize, usize),
    /// True when the window was too small or flat to fit a slope.
    pub saturated: bool,
}

impl CoveringProfile {
    /// CSV with columns `delta,count`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("delta,count\n");
        for (d, c) in self.scales.iter().zip(&self.counts) {
            s.push_str(&format!("{d},{c}\n"));
        }
        s
    }

    /// Latent dimension suggested by the slope: `ceil(slope) + 1`.
    pub fn suggested_k(&self) -> usize {
        self.slope_estimate.ceil() as usize + 1
    }
}

/// `count` log-spaced scales from `hi` down to `lo`.
pub fn log_scales(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    let (a, b) = (hi.ln(), lo.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1).max(1) as f64).exp())
        .collect()
}

/// Thirty scales covering three decades below the largest covering radius.
pub fn default_scales(m: &PredictiveManifold) -> Vec<f64> {
    let r = m.farthest_point_radii()[0].max(1e-12);
    log_scales(r, r * 1e-3, 30)
}

/// Fits the covering-number exponent.
///
/// The fit uses the scales whose count lies in `[3, n/4]`, trimmed to the
/// middle 60% of that run; outside it finite-sample covers flatten.
pub fn effective_dimension(m: &PredictiveManifold, scales: &[f64]) -> Result<CoveringProfile> {
    if scales.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 scales, got {}",
            scales.len()
        )));
    }
    if scales.iter().any(|&s| !(s > 0.0)) || scales.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument(
            "scales must be positive and strictly decreasing".into(),
        ));
    }
    if (scales[0] / scales[scales.len() - 1]).log10() < 1.5 {
        return Err(Error::InvalidArgument("scales must span at least 1.5 decades".into()));
    }
    let radii = m.farthest_point_radii();
    let counts: Vec<usize> = scales.iter().map(|&d| count_at(&radii, d)).collect();
    let n = m.len() as f64;
    let eligible: Vec<usize> = (0..scales.len())
        .filter(|&i| counts[i] >= 3 && counts[i] as f64 <= n / 4.0)
        .collect();
    let (start, end) = match (eligible.first(), eligible.last()) {
        (Some(&a), Some(&b)) => {
            let len = b + 1 - a;
            let trim = (len as f64 * 0.2).floor() as usize;
            (a + trim, b + 1 - trim)
        }
        _ => (0, 0),
    };
    let xs: Vec<f64> = scales[start..end].iter().map(|d| -d.ln()).collect();
    let ys: Vec<f64> = counts[start..end].iter().map(|&c| (c as f64).ln()).collect();
    let flat = ys.windows(2).all(|w| w[0] == w[1]);
    let (slope, saturated) = if xs.len() < 2 || flat {
        (0.0, true)
    } else {
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        ((sxy / sxx).max(0.0), false)
    };
    Ok(CoveringProfile {
        scales: scales.to_vec(),
        counts,
        slope_estimate: slope,
        window: (start, end),
        saturated,
    })
}

/// Largest observed ratio `rho(p(Y|x1), p(Y|x2)) / |x1 - x2|` over random
/// nearby pairs: an empirical lower bound on the Lipschitz constant.
///
/// Offsets are drawn log-uniformly in `[1e-4, 1]` so both the local slope
/// and moderate separations are probed.
pub fn lipschitz_check(task: &dyn ContinuousTask, n_pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..n_pairs {
        let x1 = task.sample_input(&mut rng);
        let mag = (rng.random::<f64>() * 4.0 * std::f64::consts::LN_10).exp() * 1e-4;
        let offset = if rng.random::<bool>() { mag } else { -mag };
        let x2 = task.shift(x1, offset);
        let dx = task.input_distance(x1, x2);
        if dx > 0.0 {
            best = best.max(task.predictive_distance(x1, x2) / dx);
        }
    }
    best
}
