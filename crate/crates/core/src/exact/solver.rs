//! Blahut–Arimoto iteration for the bottleneck Lagrangian `I(X;W) + beta I(X;Y|W)`.
//!
//! The encoder update is carried out in the log domain,
//! `log p(w|x) = log p(w) - beta d(x,w) - log Z(x)`, so that hard
//! assignments at large `beta` never underflow into NaN. Each step updates
//! encoder, marginal and decoder in that order; every block update minimises
//! the same functional, so the Lagrangian never increases.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::distortion::distortion_raw;
use super::mss::{minimal_sufficient_statistic, DEFAULT_TAU_MSS};
use crate::error::{Error, Result};
use crate::prob::{information_terms, DecoderMap, EncoderKernel, JointPMF, SimplexPoint};

/// Solver settings. All fields have defaults, so a partial JSON object is a
/// valid configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Stop when the max-norm change of the encoder falls below this.
    pub tol: f64,
    pub max_iters: usize,
    /// Latent alphabet size; `None` means number of MSS classes plus two.
    pub n_latent: Option<usize>,
    pub seed: u64,
    /// Weight of the random rows mixed into initial and warm-start encoders.
    pub init_noise: f64,
    pub tau_mss: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 100_000,
            n_latent: None,
            seed: 0,
            init_noise: 0.01,
            tau_mss: DEFAULT_TAU_MSS,
        }
    }
}

impl SolverConfig {
    pub fn latent_size(&self, j: &JointPMF) -> usize {
        self.n_latent
            .unwrap_or_else(|| minimal_sufficient_statistic(j, self.tau_mss).n_classes() + 2)
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidArgument("solver needs tol > 0 and max_iters > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.init_noise) {
            return Err(Error::InvalidArgument(format!(
                "init_noise must lie in [0, 1], got {}",
                self.init_noise
            )));
        }
        if self.n_latent == Some(0) {
            return Err(Error::InvalidArgument("n_latent must be positive".into()));
        }
        Ok(())
    }
}

/// One point of the bottleneck curve together with the kernels realising it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub beta: f64,
    /// `I(X;W)`.
    pub rate: f64,
    /// `I(W;Y)`.
    pub delta: f64,
    /// `I(X;Y|W)`.
    pub epsilon: f64,
    pub encoder: EncoderKernel,
    pub decoder: DecoderMap,
    pub marginal: SimplexPoint,
    pub converged: bool,
    pub iters: usize,
}

impl OperatingPoint {
    /// Evaluates every quantity exactly for a given encoder, with the
    /// self-consistent marginal and decoder.
    pub fn from_encoder(j: &JointPMF, beta: f64, encoder: EncoderKernel) -> Result<Self> {
        let t = information_terms(j, &encoder)?;
        Ok(Self {
            beta,
            rate: t.rate,
            delta: t.delta,
            epsilon: t.epsilon,
            decoder: DecoderMap::new(t.decoder)?,
            marginal: SimplexPoint::new(t.marginal)?,
            encoder,
            converged: false,
            iters: 0,
        })
    }

    /// `I(X;W) + beta I(X;Y|W)`.
    pub fn lagrangian(&self) -> f64 {
        self.rate + self.beta * self.epsilon
    }

    /// Relabels latent symbols; the information quantities are carried over
    /// unchanged.
    pub fn permute_latents(&self, perm: &[usize]) -> Result<Self> {
        let encoder = self.encoder.permute_latents(perm)?;
        let mut marginal = vec![0.0; perm.len()];
        let mut decoder = vec![Vec::new(); perm.len()];
        for (w, &p) in perm.iter().enumerate() {
            marginal[p] = self.marginal.probs()[w];
            decoder[p] = self.decoder.row(w).to_vec();
        }
        Ok(Self {
            encoder,
            decoder: DecoderMap::new(decoder)?,
            marginal: SimplexPoint::new(marginal)?,
            ..self.clone()
        })
    }

    /// Number of latent symbols carrying more than `1e-12` mass.
    pub fn active_latents(&self) -> usize {
        self.marginal.probs().iter().filter(|&&p| p > 1e-12).count()
    }
}

fn encoder_update(beta: f64, cond: &[Vec<f64>], state: &OperatingPoint) -> Result<EncoderKernel> {
    let dec = state.decoder.to_rows();
    let d = distortion_raw(cond, &dec);
    let log_pw: Vec<f64> = state.marginal.probs().iter().map(|p| p.ln()).collect();
    let rows = d
        .iter()
        .enumerate()
        .map(|(x, dx)| {
            let logits: Vec<f64> = log_pw
                .iter()
                .zip(dx)
                .map(|(&lp, &dxw)| if beta == 0.0 { lp } else { lp - beta * dxw })
                .collect();
            let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if mx == f64::NEG_INFINITY {
                return Err(Error::InvalidArgument(format!(
                    "encoder row {x} has no admissible latent symbol"
                )));
            }
            let e: Vec<f64> = logits.iter().map(|l| (l - mx).exp()).collect();
            let z: f64 = e.iter().sum();
            Ok(e.into_iter().map(|v| v / z).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    EncoderKernel::new(rows)
}

/// One round of encoder, marginal and decoder updates at `state.beta`.
pub fn ba_step(j: &JointPMF, state: &OperatingPoint) -> Result<OperatingPoint> {
    step_with(j, &j.conditionals(), state)
}

fn step_with(j: &JointPMF, cond: &[Vec<f64>], state: &OperatingPoint) -> Result<OperatingPoint> {
    let encoder = encoder_update(state.beta, cond, state)?;
    let mut next = OperatingPoint::from_encoder(j, state.beta, encoder)?;
    next.iters = state.iters + 1;
    Ok(next)
}

/// Rows drawn from a flat Dirichlet.
fn random_rows(nx: usize, nw: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..nx)
        .map(|_| {
            let e: Vec<f64> = (0..nw).map(|_| Exp1.sample(&mut rng)).collect();
            let s: f64 = e.iter().sum();
            e.into_iter().map(|v: f64| v / s).collect()
        })
        .collect()
}

fn mix_rows(base: &[Vec<f64>], noise: &[Vec<f64>], eta: f64) -> Result<EncoderKernel> {
    let rows = base
        .iter()
        .zip(noise)
        .map(|(b, n)| b.iter().zip(n).map(|(u, v)| (1.0 - eta) * u + eta * v).collect())
        .collect();
    EncoderKernel::new(rows)
}

/// Uniform rows with a fraction `noise` of seeded flat-Dirichlet rows mixed
/// in; strictly positive whenever `noise < 1`.
pub fn initial_encoder(nx: usize, nw: usize, seed: u64, noise: f64) -> Result<EncoderKernel> {
    let uniform = vec![vec![1.0 / nw as f64; nw]; nx];
    mix_rows(&uniform, &random_rows(nx, nw, seed), noise)
}

/// Iterates [`ba_step`] from `init` until the encoder moves less than
/// `cfg.tol` in max norm, or `cfg.max_iters` steps have been taken. The
/// `converged` flag records which of the two happened.
pub fn solve_from(j: &JointPMF, beta: f64, init: EncoderKernel, cfg: &SolverConfig) -> Result<OperatingPoint> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "beta must be finite and >= 0, got {beta}"
        )));
    }
    cfg.validate()?;
    let cond = j.conditionals();
    let mut state = OperatingPoint::from_encoder(j, beta, init)?;
    while state.iters < cfg.max_iters {
        let next = step_with(j, &cond, &state)?;
        let change = next.encoder.max_abs_diff(&state.encoder);
        state = next;
        if change < cfg.tol {
            state.converged = true;
            break;
        }
    }
    Ok(state)
}

/// Solves at one `beta` from a seeded near-uniform start.
pub fn solve_at_beta(j: &JointPMF, beta: f64, cfg: &SolverConfig) -> Result<OperatingPoint> {
    cfg.validate()?;
    let init = initial_encoder(j.nx(), cfg.latent_size(j), cfg.seed, cfg.init_noise)?;
    solve_from(j, beta, init, cfg)
}

/// A traced bottleneck curve with the task constants needed to read it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IBCurve {
    pub points: Vec<OperatingPoint>,
    /// `I(X;Y)`.
    pub ixy: f64,
    /// `H(W*)`.
    pub h_wstar: f64,
    /// `H(W*|Y)`.
    pub h_wstar_given_y: f64,
}

impl IBCurve {
    /// CSV with columns `beta,rate,delta,epsilon,converged,iters`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta,rate,delta,epsilon,converged,iters\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.beta, p.rate, p.delta, p.epsilon, p.converged, p.iters
            ));
        }
        out
    }
}

/// Solves along an increasing `beta` grid. Each point starts from the
/// previous point's encoder with a fraction `cfg.init_noise` of fresh seeded
/// rows mixed in: the trivial encoder is a fixed point at every `beta`, so an
/// unperturbed warm start would never leave it once the curve has been on
/// the trivial branch.
pub fn trace_curve(j: &JointPMF, betas: &[f64], cfg: &SolverConfig) -> Result<IBCurve> {
    if betas.is_empty() {
        return Err(Error::EmptyInput);
    }
    if betas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("betas must be strictly increasing".into()));
    }
    cfg.validate()?;
    let nw = cfg.latent_size(j);
    let mut points: Vec<OperatingPoint> = Vec::with_capacity(betas.len());
    for (i, &beta) in betas.iter().enumerate() {
        let init = match points.last() {
            None => initial_encoder(j.nx(), nw, cfg.seed, cfg.init_noise)?,
            Some(prev) => mix_rows(
                &prev.encoder.to_rows(),
                &random_rows(j.nx(), nw, cfg.seed.wrapping_add(i as u64)),
                cfg.init_noise,
            )?,
        };
        points.push(solve_from(j, beta, init, cfg)?);
    }
    let mss = minimal_sufficient_statistic(j, cfg.tau_mss);
    Ok(IBCurve {
        ixy: crate::prob::mutual_information(j),
        h_wstar: mss.entropy(),
        h_wstar_given_y: mss.entropy_given_y(j),
        points,
    })
}

/// Rate below which a solution counts as the trivial encoder.
pub const TRIVIAL_RATE: f64 = 1e-6;

/// Brackets the onset of non-trivial solutions by bisection on whether a
/// cold-started solve at `beta` ends with rate above [`TRIVIAL_RATE`].
///
/// Requires the solution at `lo` to be trivial and at `hi` not. The returned
/// interval is an empirical bracket of the transition of this solver.
pub fn critical_beta_bracket(
    j: &JointPMF,
    mut lo: f64,
    mut hi: f64,
    steps: usize,
    cfg: &SolverConfig,
) -> Result<(f64, f64)> {
    let nontrivial = |b: f64| solve_at_beta(j, b, cfg).map(|p| p.rate > TRIVIAL_RATE);
    if !(lo < hi) || nontrivial(lo)? || !nontrivial(hi)? {
        return Err(Error::InvalidArgument(format!(
            "[{lo}, {hi}] does not bracket the trivial-to-informative transition"
        )));
    }
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if nontrivial(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}
