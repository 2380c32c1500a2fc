//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Every tolerance is pinned below. A failing criterion prints its reason
//! and the run continues; the last line counts the failures. Pass criterion
//! numbers as arguments to run a subset.

mod support;

use std::f64::consts::{LN_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use iblab::chain::{overhead_report, rotate_planes, simplex_map, ChainSampler};
use iblab::encoder::{loo_rates, train_toy, Input, KernelEncoder, Minibatch, Objective, TrainConfig};
use iblab::exact::{
    flat_portion_check, information_plane_summary, minimal_sufficient_statistic, solve_at_beta, trace_curve,
    OperatingPoint, SolverConfig, DEFAULT_TAU_MSS,
};
use iblab::manifold::{default_scales, effective_dimension, lipschitz_check, Metric, PredictiveManifold};
use iblab::prob::{ceb_objective, entropy_x, information_terms, mutual_information, EncoderKernel, JointPMF};
use iblab::sigreg::{gaussian_batch, sigreg_loss, sigreg_null_band, SketchConfig};
use iblab::tasks::{self, ContinuousLoop, GaussianChannel, TaskKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRID: [f64; 7] = [0.5, 5.0, 10.0, 25.0, 50.0, 100.0, 250.0];

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.1?}, limit {limit:?}"))
}

fn c1_binary_exactness() -> Outcome {
    let t0 = Instant::now();
    let s = information_plane_summary(&tasks::binary());
    ensure((s.ixy - 0.36806).abs() < 1e-4, || format!("I(X;Y) = {}", s.ixy))?;
    // H(W*) is log 2; 0.69315 is that value rounded to five places.
    ensure((s.h_wstar - LN_2).abs() < 1e-6, || format!("H(W*) = {}", s.h_wstar))?;
    ensure(format!("{:.5}", s.h_wstar) == "0.69315", || {
        format!("H(W*) = {}", s.h_wstar)
    })?;
    // Both routes to the gap: directly from the (W*, Y) joint and as H(W*) - I(X;Y).
    ensure((s.h_wstar_given_y - 0.32508).abs() < 1e-4, || {
        format!("H(W*|Y) = {}", s.h_wstar_given_y)
    })?;
    ensure((s.gap - 0.32508).abs() < 1e-4, || format!("H(W*) - I = {}", s.gap))?;
    let slope = s.time_sharing_slope.unwrap_or(f64::NAN);
    ensure((slope - 0.531).abs() < 1e-3, || format!("slope {slope}"))?;
    within_time(t0, Duration::from_secs(1))?;
    Ok(format!(
        "I={:.5} H(W*)={:.5} gap={:.5} slope={slope:.4}",
        s.ixy, s.h_wstar, s.h_wstar_given_y
    ))
}

fn c2_ba_endpoints() -> Outcome {
    let cfg = SolverConfig::default();
    let mut detail = Vec::new();
    for (name, j) in [("binary", tasks::binary()), ("ternary", tasks::ternary())] {
        let t0 = Instant::now();
        let h = minimal_sufficient_statistic(&j, DEFAULT_TAU_MSS).entropy();
        let ixy = mutual_information(&j);
        let hi = solve_at_beta(&j, 250.0, &cfg).map_err(|e| e.to_string())?;
        let lo = solve_at_beta(&j, 0.5, &cfg).map_err(|e| e.to_string())?;
        ensure(hi.epsilon < 1e-5, || format!("{name}: beta 250 epsilon {}", hi.epsilon))?;
        ensure((hi.rate - h).abs() < 1e-3, || {
            format!("{name}: beta 250 rate {} vs H(W*) {h}", hi.rate)
        })?;
        ensure(lo.rate < 1e-6, || format!("{name}: beta 0.5 rate {}", lo.rate))?;
        ensure((lo.epsilon - ixy).abs() < 1e-5, || {
            format!("{name}: beta 0.5 epsilon {}", lo.epsilon)
        })?;
        within_time(t0, Duration::from_secs(10))?;
        detail.push(format!("{name}: R(250)={:.5} eps(250)={:.1e}", hi.rate, hi.epsilon));
    }
    Ok(detail.join("; "))
}

fn random_joint(seed: u64, nx: usize, ny: usize) -> JointPMF {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = (0..nx)
        .map(|_| (0..ny).map(|_| rng.random::<f64>() + 1e-3).collect())
        .collect();
    JointPMF::new(t).unwrap()
}

fn c3_curve_shape() -> Outcome {
    let t0 = Instant::now();
    let cfg = SolverConfig::default();
    for seed in 0..20 {
        let c = trace_curve(&random_joint(seed, 8, 4), &GRID, &cfg).map_err(|e| e.to_string())?;
        for w in c.points.windows(2) {
            ensure(w[1].epsilon <= w[0].epsilon + 1e-6, || {
                format!("joint {seed}: epsilon increased")
            })?;
            ensure(w[1].rate >= w[0].rate - 1e-6, || {
                format!("joint {seed}: rate decreased")
            })?;
        }
        let mut pts: Vec<(f64, f64)> = c
            .points
            .iter()
            .filter(|p| p.converged)
            .map(|p| (p.rate, p.delta))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-9);
        let slopes: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
        for s in slopes.windows(2) {
            ensure(s[1] <= s[0] + 1e-5, || {
                format!("joint {seed}: chord slopes {} then {}", s[0], s[1])
            })?;
        }
    }
    within_time(t0, Duration::from_secs(120))?;
    Ok(format!("20 joints in {:.1?}", t0.elapsed()))
}

fn c4_deterministic_diagonal() -> Outcome {
    let c = trace_curve(&tasks::deterministic(), &GRID, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for p in c.points.iter().filter(|p| p.converged) {
        worst = worst.max((p.delta - p.rate).abs());
    }
    ensure(worst < 1e-5, || format!("|Delta - R| up to {worst:e}"))?;
    let end = c.points.last().unwrap();
    ensure(
        (end.rate - LN_2).abs() < 1e-5 && (end.delta - LN_2).abs() < 1e-5,
        || format!("endpoint ({}, {})", end.rate, end.delta),
    )?;
    Ok(format!(
        "max |Delta-R| = {worst:.1e}, endpoint ({:.6}, {:.6})",
        end.rate, end.delta
    ))
}

fn c5_ceb_equivalence() -> Outcome {
    let j = tasks::binary();
    let ixy = mutual_information(&j);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let rows = (0..j.nx())
            .map(|_| {
                let r: Vec<f64> = (0..3).map(|_| rng.random::<f64>() + 1e-3).collect();
                let s: f64 = r.iter().sum();
                r.into_iter().map(|v| v / s).collect()
            })
            .collect();
        let enc = EncoderKernel::new(rows).map_err(|e| e.to_string())?;
        for beta in [0.5, 5.0, 250.0] {
            let ceb = ceb_objective(&j, &enc, beta).map_err(|e| e.to_string())?;
            let lag = OperatingPoint::from_encoder(&j, beta, enc.clone())
                .map_err(|e| e.to_string())?
                .lagrangian();
            worst = worst.max((ceb - lag + beta * ixy).abs());
        }
    }
    ensure(worst < 1e-9, || format!("max deviation {worst:e}"))?;
    Ok(format!("max |CEB - L + beta I(X;Y)| = {worst:.1e}"))
}

fn c6_flat_portion() -> Outcome {
    let mut detail = Vec::new();
    for (name, j) in [
        ("binary", tasks::binary()),
        ("discrete_clusters", tasks::discrete_clusters()),
    ] {
        let r = flat_portion_check(&j).map_err(|e| e.to_string())?;
        let (hx, ixy) = (entropy_x(&j), mutual_information(&j));
        ensure((r.rate - hx).abs() < 1e-9, || {
            format!("{name}: rate {} vs H(X) {hx}", r.rate)
        })?;
        ensure((r.delta - ixy).abs() < 1e-9, || {
            format!("{name}: delta {} vs I {ixy}", r.delta)
        })?;
        detail.push(format!("{name}: R={:.6} Delta={:.6}", r.rate, r.delta));
    }
    Ok(detail.join("; "))
}

fn c7_chain() -> Outcome {
    let t0 = Instant::now();
    let s3 = ChainSampler::new(3, 42).map_err(|e| e.to_string())?;
    let n = 1_000_000u64;
    let (mut sum, mut sq) = ([0.0f64; 3], [0.0f64; 3]);
    for i in 0..n {
        let d = s3.sample(i);
        let total: f64 = d.expo.iter().sum();
        for k in 0..3 {
            // Within-sample identities hold exactly, not approximately.
            let e = d.gauss[2 * k] * d.gauss[2 * k] + d.gauss[2 * k + 1] * d.gauss[2 * k + 1];
            ensure(d.expo[k] == e && d.simplex.probs()[k] == d.expo[k] / total, || {
                format!("identity broken at draw {i}")
            })?;
            let p = d.simplex.probs()[k];
            sum[k] += p;
            sq[k] += p * p;
        }
    }
    let var_oracle = 2.0 / (9.0 * 4.0);
    let mut worst = (0.0f64, 0.0f64);
    for k in 0..3 {
        let mean = sum[k] / n as f64;
        let var = sq[k] / n as f64 - mean * mean;
        worst.0 = worst.0.max((mean - 1.0 / 3.0).abs());
        worst.1 = worst.1.max((var - var_oracle).abs());
    }
    ensure(worst.0 < 0.002 && worst.1 < 0.003, || {
        format!("moment errors {worst:?}")
    })?;
    let s2 = ChainSampler::new(2, 43).map_err(|e| e.to_string())?;
    let mut xs: Vec<f64> = (0..n).map(|i| s2.sample(i).simplex.probs()[0]).collect();
    xs.sort_by(|a, b| a.total_cmp(b));
    let nf = n as f64;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / nf - x).max(x - i as f64 / nf))
        .fold(0.0, f64::max);
    ensure(ks < 0.005, || format!("K=2 KS {ks}"))?;
    within_time(t0, Duration::from_secs(30))?;
    Ok(format!("mean err {:.1e}, var err {:.1e}, KS {ks:.4}", worst.0, worst.1))
}

fn c8_phase_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let w: Vec<f64> = (0..8).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect();
        let angles: Vec<f64> = (0..4).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
        let a = simplex_map(&w).map_err(|e| e.to_string())?;
        let b = simplex_map(&rotate_planes(&w, &angles)).map_err(|e| e.to_string())?;
        for (x, y) in a.probs().iter().zip(b.probs()) {
            worst = worst.max((x - y).abs());
        }
    }
    ensure(worst < 1e-14, || format!("max change {worst:e}"))?;
    Ok(format!("max change {worst:.1e} over 1000 rotations"))
}

fn c9_overheads() -> Outcome {
    for k in [2usize, 3, 10, 100, 1000] {
        let r = overhead_report(k).map_err(|e| e.to_string())?;
        let kf = k as f64;
        let scale = 0.5 * (2.0 * PI * std::f64::consts::E * kf).ln();
        let phase = kf * (2.0 * PI).ln();
        ensure(r.scale_overhead == scale && r.phase_overhead == phase, || {
            format!("K={k}: {r:?}")
        })?;
    }
    let r10 = overhead_report(10).map_err(|e| e.to_string())?;
    ensure((r10.scale_overhead - 2.570231).abs() < 1e-6, || {
        format!("K=10 scale {}", r10.scale_overhead)
    })?;
    ensure((r10.phase_overhead - 18.37877).abs() < 1e-5, || {
        format!("K=10 phase {}", r10.phase_overhead)
    })?;
    let ratios: Vec<f64> = [2usize, 10, 100, 1000]
        .iter()
        .map(|&k| overhead_report(k).unwrap().scale_overhead / k as f64)
        .collect();
    ensure(ratios.windows(2).all(|w| w[1] < w[0]), || format!("ratios {ratios:?}"))?;
    Ok(format!("scale/K = {:.4?}", ratios))
}

fn c10_sigreg() -> Outcome {
    let t0 = Instant::now();
    let cfg = SketchConfig::new(64, 20, 1000).map_err(|e| e.to_string())?;
    let band = sigreg_null_band(4096, &cfg, 1000, 5000).map_err(|e| e.to_string())?;
    let iso = sigreg_loss(&gaussian_batch(4096, 20, 1), &cfg.reseeded(77))
        .map_err(|e| e.to_string())?
        .statistic;
    ensure(band.contains(iso), || format!("isotropic {iso} outside {band:?}"))?;
    let constant = sigreg_loss(&vec![vec![0.5; 20]; 4096], &cfg)
        .map_err(|e| e.to_string())?
        .statistic;
    ensure(constant > 100.0 * band.q99, || format!("constant {constant}"))?;
    let wide: Vec<Vec<f64>> = gaussian_batch(4096, 20, 2)
        .into_iter()
        .map(|r| r.into_iter().map(|v| 2.0 * v).collect())
        .collect();
    let wide = sigreg_loss(&wide, &cfg).map_err(|e| e.to_string())?.statistic;
    ensure(wide > 10.0 * band.q99, || format!("N(0,4I) {wide}"))?;
    within_time(t0, Duration::from_secs(60))?;
    Ok(format!(
        "q99={:.3e} iso={iso:.3e} const/q99={:.0} wide/q99={:.1}",
        band.q99,
        constant / band.q99,
        wide / band.q99
    ))
}

fn c11_loo_calibration() -> Outcome {
    let j = tasks::binary();
    let inputs: Vec<Input> = (0..j.nx()).map(Input::Discrete).collect();
    let batch = Minibatch::stratified(&j, &inputs, 2048).map_err(|e| e.to_string())?;
    let soft = EncoderKernel::new(vec![
        vec![0.7, 0.2, 0.1],
        vec![0.6, 0.3, 0.1],
        vec![0.1, 0.3, 0.6],
        vec![0.2, 0.1, 0.7],
    ])
    .map_err(|e| e.to_string())?;
    let mss = minimal_sufficient_statistic(&j, DEFAULT_TAU_MSS).encoder();
    let mut detail = Vec::new();
    for (name, kernel, seed) in [("soft", soft, 11), ("mss", mss, 12)] {
        let exact = information_terms(&j, &kernel).map_err(|e| e.to_string())?;
        let est = loo_rates(
            &KernelEncoder::new(kernel),
            &batch,
            64,
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
        .map_err(|e| e.to_string())?;
        let cond = est.conditional.unwrap_or(f64::NAN);
        ensure((est.total - exact.rate).abs() < 0.05, || {
            format!("{name}: total {} vs {}", est.total, exact.rate)
        })?;
        ensure((cond - exact.cond_rate).abs() < 0.05, || {
            format!("{name}: cond {cond} vs {}", exact.cond_rate)
        })?;
        detail.push(format!(
            "{name}: total {:.4}/{:.4} cond {cond:.4}/{:.4}",
            est.total, exact.rate, exact.cond_rate
        ));
    }
    Ok(detail.join("; "))
}

/// Fixed-step descent reaches the high-beta plateau of the clustered task
/// within 3000 epochs at step 0.5; the library default step is 0.05.
fn clusters_config(beta: f64) -> TrainConfig {
    TrainConfig {
        beta,
        step: 0.5,
        ..TrainConfig::default()
    }
}

fn c12_discrete_clusters() -> Outcome {
    let t0 = Instant::now();
    let hi = train_toy(TaskKind::DiscreteClusters, &clusters_config(250.0)).map_err(|e| e.to_string())?;
    hi.ensure_finished().map_err(|e| e.to_string())?;
    let lo = train_toy(TaskKind::DiscreteClusters, &clusters_config(0.5)).map_err(|e| e.to_string())?;
    let (h, l) = (&hi.final_estimate, &lo.final_estimate);
    let ln10 = 10f64.ln();
    ensure((h.rate - ln10).abs() < 0.1, || format!("beta 250 rate {}", h.rate))?;
    ensure(h.rate <= 20f64.ln() - 0.5, || {
        format!("beta 250 rate {} not below log 20 - 0.5", h.rate)
    })?;
    ensure(h.epsilon < 0.05, || format!("beta 250 epsilon {}", h.epsilon))?;
    ensure(l.rate < 0.05, || format!("beta 0.5 rate {}", l.rate))?;
    within_time(t0, Duration::from_secs(300))?;
    Ok(format!(
        "beta 250: R={:.4} eps={:.4}; beta 0.5: R={:.4} ({:.1?})",
        h.rate,
        h.epsilon,
        l.rate,
        t0.elapsed()
    ))
}

fn c13_continuous_loop() -> Outcome {
    let t0 = Instant::now();
    let cfg = TrainConfig {
        objective: Some(Objective::IbKnownPy),
        beta: 250.0,
        bins: 128,
        samples: 16,
        epochs: 1000,
        step: 0.5,
        ..TrainConfig::default()
    };
    let run = train_toy(TaskKind::ContinuousLoop, &cfg).map_err(|e| e.to_string())?;
    run.ensure_finished().map_err(|e| e.to_string())?;
    let g = run.gauge.ok_or("no gauge match")?;
    ensure(g.mean_kl < 0.05, || format!("gauge-matched KL {}", g.mean_kl))?;
    within_time(t0, Duration::from_secs(300))?;
    Ok(format!(
        "gauge-matched KL {:.4} with perm {:?} ({:.1?})",
        g.mean_kl,
        g.perm,
        t0.elapsed()
    ))
}

fn c14_effective_dimension() -> Outcome {
    let lp = PredictiveManifold::new(ContinuousLoop.sample_points(4096, 11), Metric::Hellinger)
        .map_err(|e| e.to_string())?;
    let prof = effective_dimension(&lp, &default_scales(&lp)).map_err(|e| e.to_string())?;
    ensure((prof.slope_estimate - 1.0).abs() <= 0.2, || {
        format!("loop slope {}", prof.slope_estimate)
    })?;
    let cl =
        PredictiveManifold::from_joint(&tasks::discrete_clusters(), Metric::Hellinger).map_err(|e| e.to_string())?;
    let cp = effective_dimension(&cl, &default_scales(&cl)).map_err(|e| e.to_string())?;
    ensure(cp.saturated && cp.counts.last() == Some(&10), || {
        format!("clusters: {:?}", cp.counts)
    })?;
    let g = GaussianChannel::default();
    let lip = lipschitz_check(&g, 20_000, 1);
    ensure((g.lipschitz_bound() - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15, || {
        "bound formula".into()
    })?;
    ensure(lip <= 0.354 + 0.01, || format!("Lipschitz {lip}"))?;
    Ok(format!(
        "loop slope {:.3}; clusters saturate at {}; Lipschitz {lip:.4}",
        prof.slope_estimate,
        cp.counts.last().unwrap()
    ))
}

fn c15_gradients() -> Outcome {
    let mut detail = Vec::new();
    for (name, errors) in support::gradient_suite() {
        ensure(errors.len() == support::POINTS as usize, || {
            format!("{name}: {} points", errors.len())
        })?;
        let worst = errors.iter().cloned().fold(0.0, f64::max);
        ensure(worst < support::REL_TOL, || format!("{name}: relative error {worst:e}"))?;
        detail.push(format!("{name} {worst:.0e}"));
    }
    Ok(detail.join(", "))
}

/// Final plug-in epsilon and Delta averaged over two training seeds.
fn k_ablation_point(k: usize) -> Result<(f64, f64), String> {
    let seeds = [0u64, 1];
    let mut acc = (0.0, 0.0);
    for &seed in &seeds {
        let cfg = TrainConfig {
            k: Some(k),
            beta: 25.0,
            samples: 16,
            step: 0.5,
            seed,
            synthetic_points: 100,
            eval_samples: 256,
            ..TrainConfig::default()
        };
        let run = train_toy(TaskKind::SyntheticClasses, &cfg).map_err(|e| e.to_string())?;
        run.ensure_finished().map_err(|e| e.to_string())?;
        acc.0 += run.final_estimate.epsilon / seeds.len() as f64;
        acc.1 += run.final_estimate.delta / seeds.len() as f64;
    }
    Ok(acc)
}

fn c16_k_ablation() -> Outcome {
    let ks = [3usize, 5, 10, 15, 20];
    let pts = ks.iter().map(|&k| k_ablation_point(k)).collect::<Result<Vec<_>, _>>()?;
    let table = ks
        .iter()
        .zip(&pts)
        .map(|(k, (e, d))| format!("K={k}: eps {e:.5} Delta {d:.4}"))
        .collect::<Vec<_>>()
        .join("; ");
    let deltas: Vec<f64> = pts[2..].iter().map(|p| p.1).collect();
    let spread = deltas.iter().cloned().fold(f64::MIN, f64::max) - deltas.iter().cloned().fold(f64::MAX, f64::min);
    ensure(spread < 0.05, || {
        format!("Delta spread {spread:.4} for K >= 10; {table}")
    })?;
    for (w, k) in pts.windows(2).zip(ks.windows(2)) {
        ensure(w[1].0 <= w[0].0, || {
            format!("epsilon rises from K={} to K={}; {table}", k[0], k[1])
        })?;
    }
    Ok(table)
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 16] = [
        ("binary task exactness", c1_binary_exactness),
        ("BA endpoints", c2_ba_endpoints),
        ("curve shape", c3_curve_shape),
        ("deterministic diagonal", c4_deterministic_diagonal),
        ("CEB and IB Lagrangian differ by beta I(X;Y)", c5_ceb_equivalence),
        ("flat portion", c6_flat_portion),
        ("chain exactness and moments", c7_chain),
        ("phase invariance", c8_phase_invariance),
        ("overhead accounting", c9_overheads),
        ("SIGReg discrimination", c10_sigreg),
        ("LOO estimator calibration", c11_loo_calibration),
        ("discrete clusters training", c12_discrete_clusters),
        ("continuous loop training", c13_continuous_loop),
        ("effective dimension", c14_effective_dimension),
        ("gradient suite", c15_gradients),
        ("K-ablation shape", c16_k_ablation),
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name} [{secs:.1}s]: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {id:>2} {name} [{secs:.1}s]: {why}");
            }
        }
    }
    println!("{failed} criteria failed");
}
