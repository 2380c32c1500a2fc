//! Latent families: how an encoder turns an input into a distribution over
//! `W`, how it samples, and how it scores a sample.
//!
//! Dirichlet draws are reparameterized through their gamma components. Each
//! component keeps the standard-normal and uniform variates of an accepted
//! Marsaglia–Tsang proposal for `Gamma(alpha + 1)` together with the uniform
//! of the `U^{1/alpha}` boost, so
//!
//! ```text
//! log x = ln d + 3 ln(1 + c z) + ln(u) / alpha,   d = alpha + 2/3,  c = 1 / sqrt(9 d)
//! ```
//!
//! is a smooth function of `alpha` for frozen noise. Differentiating through
//! it ignores the dependence of the acceptance event on `alpha`; the bias is
//! small for the boosted sampler and the map is exact for the frozen noise,
//! which is what the finite-difference checks compare against.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::encoder::input::Input;
use crate::error::Result;
use crate::special::{digamma, ln_gamma, log_sum_exp};

/// An encoder seen as a conditional distribution `q(w|x)` that can be
/// sampled and evaluated. The leave-one-out estimators and the plug-in
/// evaluation only need this much.
pub trait LatentModel {
    /// Distribution parameters at one input.
    type Params;
    /// One latent draw.
    type Draw;

    fn params(&self, x: &Input) -> Result<Self::Params>;
    fn draw(&self, p: &Self::Params, rng: &mut ChaCha8Rng) -> Self::Draw;
    fn log_density(&self, p: &Self::Params, w: &Self::Draw) -> f64;
    /// Features of a draw read by a softmax readout.
    fn readout_features(&self, w: &Self::Draw) -> Vec<f64>;
}

/// Frozen randomness for one gamma component of a Dirichlet draw. `phase`
/// places the component in the plane for the Gaussian embedding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaNoise {
    pub z: f64,
    pub u: f64,
    pub phase: f64,
}

impl GammaNoise {
    /// Exact `Gamma(alpha)` noise: rejection for `Gamma(alpha + 1)`, then the
    /// boost uniform.
    pub fn draw(alpha: f64, rng: &mut ChaCha8Rng) -> Self {
        let d = alpha + 2.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        let z = loop {
            let z: f64 = rng.sample(StandardNormal);
            let v = 1.0 + c * z;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let acc: f64 = 1.0 - rng.random::<f64>();
            if acc.ln() < 0.5 * z * z + d - d * v + d * v.ln() {
                break z;
            }
        };
        Self {
            z,
            u: 1.0 - rng.random::<f64>(),
            phase: rng.random::<f64>(),
        }
    }

    /// `(log x, d log x / d alpha)` for this noise at concentration `alpha`.
    pub fn log_gamma(&self, alpha: f64) -> (f64, f64) {
        let d = alpha + 2.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        let t = 1.0 + c * self.z;
        let lu = self.u.ln();
        let lx = d.ln() + 3.0 * t.ln() + lu / alpha;
        let dlx = 1.0 / d - 1.5 * self.z * c / (d * t) - lu / (alpha * alpha);
        (lx, dlx)
    }
}

/// `Dir(alpha)` with its log normalizer cached.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletParams {
    pub alpha: Vec<f64>,
    pub(crate) log_norm: f64,
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Self {
        let a0: f64 = alpha.iter().sum();
        let log_norm = ln_gamma(a0) - alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>();
        Self { alpha, log_norm }
    }

    /// Log density at the point with log coordinates `ell`, relative to
    /// Lebesgue measure on the simplex.
    pub fn log_density_log(&self, ell: &[f64]) -> f64 {
        self.log_norm + self.alpha.iter().zip(ell).map(|(a, l)| (a - 1.0) * l).sum::<f64>()
    }

    pub fn mean(&self) -> Vec<f64> {
        let a0: f64 = self.alpha.iter().sum();
        self.alpha.iter().map(|a| a / a0).collect()
    }

    /// `psi(alpha_0) - psi(alpha_k)`, the constant part of the score.
    pub(crate) fn score_offset(&self) -> Vec<f64> {
        let p0 = digamma(self.alpha.iter().sum());
        self.alpha.iter().map(|&a| p0 - digamma(a)).collect()
    }
}

/// A Dirichlet draw in log coordinates, with the unnormalized gamma logs it
/// came from.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletDraw {
    pub log_x: Vec<f64>,
    pub ell: Vec<f64>,
}

impl DirichletDraw {
    pub fn from_log_gamma(log_x: Vec<f64>) -> Self {
        let lse = log_sum_exp(&log_x);
        let ell = log_x.iter().map(|l| l - lse).collect();
        Self { log_x, ell }
    }

    pub fn point(&self) -> Vec<f64> {
        self.ell.iter().map(|l| l.exp()).collect()
    }
}

/// Maps frozen noise through `alpha`, returning the draw and
/// `d log x_k / d alpha_k`.
pub fn dirichlet_from_noise(alpha: &[f64], noise: &[GammaNoise]) -> (DirichletDraw, Vec<f64>) {
    let (lx, dlx): (Vec<f64>, Vec<f64>) = alpha.iter().zip(noise).map(|(&a, n)| n.log_gamma(a)).unzip();
    (DirichletDraw::from_log_gamma(lx), dlx)
}

/// Embeds the gamma components of a draw as `K` planar Gaussian pairs
/// `sqrt(2 x_k) (cos 2 pi phase_k, sin 2 pi phase_k)`. Under `Dir(1, ..., 1)`
/// the embedding is exactly `N(0, I_{2K})`.
pub fn gaussian_embedding(log_x: &[f64], noise: &[GammaNoise]) -> Vec<f64> {
    log_x
        .iter()
        .zip(noise)
        .flat_map(|(&lx, n)| {
            let r = (0.5 * (std::f64::consts::LN_2 + lx)).exp();
            let (s, c) = (2.0 * std::f64::consts::PI * n.phase).sin_cos();
            [r * c, r * s]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn gamma_noise_reproduces_gamma_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &alpha in &[0.3, 1.0, 4.5] {
            let n = 200_000;
            let xs: Vec<f64> = (0..n)
                .map(|_| GammaNoise::draw(alpha, &mut rng).log_gamma(alpha).0.exp())
                .collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            assert!(
                (mean - alpha).abs() < 0.02 * alpha.max(1.0),
                "alpha {alpha} mean {mean}"
            );
            assert!((var - alpha).abs() < 0.05 * alpha.max(1.0), "alpha {alpha} var {var}");
        }
    }

    #[test]
    fn log_gamma_derivative_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for &alpha in &[0.01, 0.5, 3.0, 80.0] {
            let n = GammaNoise::draw(alpha, &mut rng);
            let h = 1e-6 * alpha;
            let fd = (n.log_gamma(alpha + h).0 - n.log_gamma(alpha - h).0) / (2.0 * h);
            let an = n.log_gamma(alpha).1;
            assert!(
                (fd - an).abs() <= 1e-6 * an.abs().max(1.0),
                "alpha {alpha}: {fd} vs {an}"
            );
        }
    }

    #[test]
    fn dirichlet_density_integrates_to_one_on_the_two_simplex() {
        // Midpoint rule in (w1, w2) over the triangle.
        let p = DirichletParams::new(vec![2.0, 3.0, 1.5]);
        let n = 800;
        let h = 1.0 / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (a, b) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                if a + b < 1.0 {
                    total += p.log_density_log(&[a.ln(), b.ln(), (1.0 - a - b).ln()]).exp() * h * h;
                }
            }
        }
        assert!((total - 1.0).abs() < 5e-3, "{total}");
    }

    #[test]
    fn flat_dirichlet_embedding_is_standard_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let (mut m, mut v) = (0.0, 0.0);
        for _ in 0..n {
            let noise: Vec<GammaNoise> = (0..3).map(|_| GammaNoise::draw(1.0, &mut rng)).collect();
            let (d, _) = dirichlet_from_noise(&[1.0; 3], &noise);
            let e = gaussian_embedding(&d.log_x, &noise);
            m += e[0];
            v += e[0] * e[0];
        }
        assert!((m / n as f64).abs() < 0.01);
        assert!((v / n as f64 - 1.0).abs() < 0.02);
    }
}
