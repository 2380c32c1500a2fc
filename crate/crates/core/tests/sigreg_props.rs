//! Discrimination and invariance of the SIGReg statistic.

use iblab::chain::ChainSampler;
use iblab::sigreg::{
    epps_pulley, epps_pulley_null_band, gaussian_batch, sample_directions, sigreg_loss, sigreg_null_band,
    sigreg_with_directions, SketchConfig,
};

fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn sketch_separates_gaussian_constant_and_wide_batches() {
    let cfg = SketchConfig::new(64, 20, 1000).unwrap();
    let band = sigreg_null_band(4096, &cfg, 1000, 5000).unwrap();

    let iso = sigreg_loss(&gaussian_batch(4096, 20, 1), &cfg.reseeded(77)).unwrap();
    assert!(band.contains(iso.statistic), "{} vs {band:?}", iso.statistic);

    let constant = vec![vec![0.5; 20]; 4096];
    assert!(sigreg_loss(&constant, &cfg).unwrap().statistic > 100.0 * band.q99);

    let wide: Vec<Vec<f64>> = gaussian_batch(4096, 20, 2)
        .into_iter()
        .map(|r| r.into_iter().map(|v| 2.0 * v).collect())
        .collect();
    assert!(sigreg_loss(&wide, &cfg).unwrap().statistic > 10.0 * band.q99);
}

#[test]
fn univariate_statistic_against_its_null() {
    let band = epps_pulley_null_band(10_000, 1000, 1).unwrap();
    let x: Vec<f64> = gaussian_batch(10_000, 1, 99).into_iter().map(|r| r[0]).collect();
    assert!(epps_pulley(&x).unwrap() <= band.q99);
    assert!(epps_pulley(&vec![3.0; 10_000]).unwrap() > 100.0 * band.q99);
}

#[test]
fn mean_absolute_dot_product_of_directions() {
    let d = sample_directions(&SketchConfig::new(64, 20, 8).unwrap());
    let mut dots = Vec::new();
    for i in 0..d.len() {
        for j in 0..i {
            dots.push(d[i].iter().zip(&d[j]).map(|(a, b)| a * b).sum::<f64>().abs());
        }
    }
    let mean = dots.iter().sum::<f64>() / dots.len() as f64;
    // Monte Carlo oracle for E|<a,b>| with independent uniform unit vectors.
    let mc: Vec<f64> = (0..20_000u64)
        .map(|s| {
            let p = sample_directions(&SketchConfig::new(2, 20, 1_000_000 + s).unwrap());
            p[0].iter().zip(&p[1]).map(|(a, b)| a * b).sum::<f64>().abs()
        })
        .collect();
    let m = mc.iter().sum::<f64>() / mc.len() as f64;
    let sd = (mc.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / mc.len() as f64).sqrt();
    // Pairs are not independent; use the per-direction count for the error.
    let se = sd / (d.len() as f64).sqrt();
    assert!((mean - m).abs() < 3.0 * se, "{mean} vs {m}");
}

#[test]
fn distribution_is_invariant_under_rotation() {
    // A fixed orthogonal matrix: a product of Givens rotations.
    let dim = 20;
    let mut q = vec![vec![0.0; dim]; dim];
    for (i, row) in q.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for (i, j, a) in [(0, 1, 0.7f64), (2, 9, 1.3), (5, 17, -0.4), (1, 12, 2.2), (3, 4, 0.9)] {
        for row in q.iter_mut() {
            let (x, y) = (row[i], row[j]);
            row[i] = a.cos() * x - a.sin() * y;
            row[j] = a.sin() * x + a.cos() * y;
        }
    }
    // Both arms share the batch noise and the directions (common random
    // numbers); the remaining spread comes from the sketch, which a wide
    // sketch keeps small.
    let cfg = SketchConfig::new(4096, dim, 0).unwrap();
    let (mut plain, mut rotated) = (Vec::new(), Vec::new());
    for r in 0..200u64 {
        let batch = gaussian_batch(128, dim, 10_000 + r);
        let turned: Vec<Vec<f64>> = batch
            .iter()
            .map(|z| (0..dim).map(|i| q[i].iter().zip(z).map(|(a, b)| a * b).sum()).collect())
            .collect();
        let dirs = sample_directions(&cfg.reseeded(r));
        plain.push(sigreg_with_directions(&batch, &dirs).unwrap().statistic);
        rotated.push(sigreg_with_directions(&turned, &dirs).unwrap().statistic);
    }
    let ks = ks_two_sample(plain, rotated);
    assert!(ks < 0.05, "KS {ks}");
}

#[test]
fn chain_gaussians_pass_and_simplex_points_fail() {
    let k = 10;
    let cfg = SketchConfig::new(64, 2 * k, 3).unwrap();
    let band = sigreg_null_band(2048, &cfg, 200, 40).unwrap();
    let sampler = ChainSampler::new(k, 4).unwrap();
    let draws: Vec<_> = (0..2048).map(|i| sampler.sample(i)).collect();
    let gauss: Vec<Vec<f64>> = draws.iter().map(|s| s.gauss.clone()).collect();
    // Simplex coordinates embedded in R^{2K}: each p_k placed on its plane's first axis.
    let simplex: Vec<Vec<f64>> = draws
        .iter()
        .map(|s| s.simplex.probs().iter().flat_map(|&p| [p, 0.0]).collect())
        .collect();
    assert!(band.contains(sigreg_loss(&gauss, &cfg.reseeded(9)).unwrap().statistic));
    assert!(sigreg_loss(&simplex, &cfg).unwrap().statistic > band.q99);
}
