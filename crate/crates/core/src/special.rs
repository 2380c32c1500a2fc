//! Scalar helpers shared by the encoders: softplus, logistic sigmoid,
//! log-sum-exp and the trigamma function.

pub use statrs::function::gamma::{digamma, ln_gamma};

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Derivative of [`softplus`].
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln sum_i e^{a_i}`; `-inf` for an empty or all `-inf` slice.
pub fn log_sum_exp(a: &[f64]) -> f64 {
    let mx = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + a.iter().map(|v| (v - mx).exp()).sum::<f64>().ln()
}

/// Trigamma `psi_1(x) = d^2/dx^2 ln Gamma(x)` for `x > 0`.
///
/// Shifts the argument above 10 with `psi_1(x) = psi_1(x + 1) + 1/x^2` and
/// finishes with the asymptotic Bernoulli series.
pub fn trigamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let r = 1.0 / x;
    let r2 = r * r;
    // 1/x + 1/(2x^2) + sum B_{2k} / x^{2k+1}
    let series = r2
        * (1.0 / 6.0
            - r2 * (1.0 / 30.0 - r2 * (1.0 / 42.0 - r2 * (1.0 / 30.0 - r2 * (5.0 / 66.0 - r2 * 691.0 / 2730.0)))));
    acc + r + 0.5 * r2 + r * series
}
