//! Subcommand bodies. Each validates its configuration, fills in any value
//! derived from the task so the header shows it, runs the library operation
//! and writes its artifacts. Summaries go to stdout.

use std::fmt::Write as _;

use iblab::chain::{overhead_report, sample_chain, samples_to_csv, OverheadReport};
use iblab::encoder::{toy_problem, train_toy, Objective, PluginEstimate, TrainReport};
use iblab::exact::{
    information_plane_summary, minimal_sufficient_statistic, solve_at_beta, trace_curve, IBCurve, OperatingPoint,
    PlaneSummary,
};
use iblab::manifold::{effective_dimension, lipschitz_check, log_scales, CoveringProfile, PredictiveManifold};
use iblab::prob::{entropy_x, mutual_information, JointPMF};
use iblab::sigreg::{gaussian_batch, sigreg_loss, sigreg_null_band, NullBand, SketchConfig};
use iblab::tasks::{ContinuousLoop, GaussianChannel, SyntheticClasses, TaskKind};
use serde::Serialize;

use crate::config::{
    BatchSource, ChainConfig, CurveConfig, EffdimConfig, MssConfig, SigregConfig, SolveConfig, TrainRunConfig,
};
use crate::error::{CliError, Result};
use crate::output::{OutDir, Stamp};
use crate::sweep::run_jobs;

fn curve_of(j: &JointPMF, points: Vec<OperatingPoint>) -> IBCurve {
    let s = information_plane_summary(j);
    IBCurve {
        points,
        ixy: s.ixy,
        h_wstar: s.h_wstar,
        h_wstar_given_y: s.h_wstar_given_y,
    }
}

fn unconverged(points: &[OperatingPoint]) -> Result<()> {
    let bad: Vec<String> = points
        .iter()
        .filter(|p| !p.converged)
        .map(|p| p.beta.to_string())
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "no convergence at beta = {}",
            bad.join(", ")
        )))
    }
}

pub fn solve(mut cfg: SolveConfig, out: &OutDir) -> Result<()> {
    cfg.validate()?;
    let j = cfg.task.joint()?;
    cfg.n_latent = Some(cfg.solver().latent_size(&j));
    let stamp = Stamp::new("solve", &cfg)?;
    let p = solve_at_beta(&j, cfg.beta, &cfg.solver())?;
    say!(
        "{} beta={}: R={:.6} delta={:.6} epsilon={:.3e} converged={} iters={}",
        cfg.task,
        p.beta,
        p.rate,
        p.delta,
        p.epsilon,
        p.converged,
        p.iters
    );
    let curve = curve_of(&j, vec![p]);
    out.write_json("solve.json", &stamp, &curve)?;
    out.write_csv("solve.csv", &stamp, &curve.to_csv())?;
    unconverged(&curve.points)
}

pub fn curve(mut cfg: CurveConfig, out: &OutDir) -> Result<()> {
    cfg.validate()?;
    let j = cfg.task.joint()?;
    cfg.n_latent = Some(cfg.solver().latent_size(&j));
    let stamp = Stamp::new("curve", &cfg)?;
    let c = trace_curve(&j, &cfg.betas, &cfg.solver())?;
    for p in &c.points {
        say!(
            "beta={:<8} R={:.6} delta={:.6} epsilon={:.3e}",
            p.beta,
            p.rate,
            p.delta,
            p.epsilon
        );
    }
    out.write_json("curve.json", &stamp, &c)?;
    out.write_csv("curve.csv", &stamp, &c.to_csv())?;
    unconverged(&c.points)
}

#[derive(Serialize)]
struct MssResult {
    n_classes: usize,
    classes: Vec<Vec<usize>>,
    class_mass: Vec<f64>,
    h_wstar: f64,
    h_wstar_given_y: f64,
    ixy: f64,
    hx: f64,
}

pub fn mss(cfg: MssConfig, out: &OutDir) -> Result<()> {
    cfg.validate()?;
    let stamp = Stamp::new("mss", &cfg)?;
    let j = cfg.task.joint()?;
    let part = minimal_sufficient_statistic(&j, cfg.tau_mss);
    let res = MssResult {
        n_classes: part.n_classes(),
        classes: part.classes.clone(),
        class_mass: part.class_mass.probs().to_vec(),
        h_wstar: part.entropy(),
        h_wstar_given_y: part.entropy_given_y(&j),
        ixy: mutual_information(&j),
        hx: entropy_x(&j),
    };
    say!(
        "{}: {} classes, H(W*) = {:.4}, H(X) = {:.4}, I(X;Y) = {:.4}",
        cfg.task,
        res.n_classes,
        res.h_wstar,
        res.hx,
        res.ixy
    );
    let mut csv = String::from("x,class\n");
    for (x, c) in part.assignment.iter().enumerate() {
        let _ = writeln!(csv, "{x},{c}");
    }
    out.write_json("mss.json", &stamp, &res)?;
    out.write_csv("mss.csv", &stamp, &csv)?;
    Ok(())
}

#[derive(Serialize)]
struct Lipschitz {
    observed: f64,
    /// Closed-form constant where one is known.
    analytic: Option<f64>,
}

#[derive(Serialize)]
struct EffdimResult {
    points: Option<usize>,
    profile: Option<CoveringProfile>,
    suggested_k: Option<usize>,
    lipschitz: Option<Lipschitz>,
}

fn effdim_manifold(cfg: &EffdimConfig) -> Result<Option<PredictiveManifold>> {
    let m = match cfg.task {
        TaskKind::GaussianChannel => return Ok(None),
        TaskKind::ContinuousLoop => {
            PredictiveManifold::new(ContinuousLoop.sample_points(cfg.samples, cfg.seed), cfg.metric)?
        }
        TaskKind::SyntheticClasses => {
            PredictiveManifold::from_joint(&SyntheticClasses::default().joint(cfg.samples, cfg.seed)?, cfg.metric)?
        }
        t => PredictiveManifold::from_joint(&t.joint()?, cfg.metric)?,
    };
    Ok(Some(m))
}

pub fn effdim(cfg: EffdimConfig, out: &OutDir) -> Result<()> {
    cfg.validate()?;
    let stamp = Stamp::new("effdim", &cfg)?;
    let manifold = effdim_manifold(&cfg)?;
    let profile = match &manifold {
        Some(m) => {
            let r = m.farthest_point_radii()[0];
            if !(r > 0.0) {
                return Err(CliError::Numerical(format!(
                    "{}: all predictive rows coincide",
                    cfg.task
                )));
            }
            Some(effective_dimension(
                m,
                &log_scales(r, r * 10f64.powf(-cfg.decades), cfg.scale_count),
            )?)
        }
        None => None,
    };
    let lipschitz = match cfg.task {
        TaskKind::ContinuousLoop => Some(Lipschitz {
            observed: lipschitz_check(&ContinuousLoop, cfg.lipschitz_pairs, cfg.seed),
            analytic: None,
        }),
        TaskKind::GaussianChannel => {
            let ch = GaussianChannel::default();
            Some(Lipschitz {
                observed: lipschitz_check(&ch, cfg.lipschitz_pairs, cfg.seed),
                analytic: Some(ch.lipschitz_bound()),
            })
        }
        _ => None,
    };
    let res = EffdimResult {
        points: manifold.as_ref().map(|m| m.len()),
        suggested_k: profile.as_ref().map(|p| p.suggested_k()),
        profile,
        lipschitz,
    };
    match &res.profile {
        Some(p) => say!(
            "{}: slope {:.4}{} over {} points, suggested K = {}",
            cfg.task,
            p.slope_estimate,
            if p.saturated { " (saturated)" } else { "" },
            res.points.unwrap_or(0),
            p.suggested_k()
        ),
        None => say!("{}: no simplex-valued predictive map; Lipschitz probe only", cfg.task),
    }
    if let Some(l) = &res.lipschitz {
        say!("observed Lipschitz ratio {:.4}", l.observed);
    }
    out.write_json("effdim.json", &stamp, &res)?;
    if let Some(p) = &res.profile {
        out.write_csv("effdim.csv", &stamp, &p.to_csv())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ChainResult {
    overhead: OverheadReport,
    total_overhead: f64,
    mean_simplex: Vec<f64>,
    mean_expo: Vec<f64>,
}

pub fn chain(cfg: ChainConfig, out: &OutDir) -> Result<()> {
    cfg.validate()?;
    let stamp = Stamp::new("chain", &cfg)?;
    let samples = sample_chain(cfg.k, cfg.n, cfg.seed)?;
    let n = samples.len() as f64;
    let mut mean_simplex = vec![0.0; cfg.k];
    let mut mean_expo = vec![0.0; cfg.k];
    for s in &samples {
        for i in 0..cfg.k {
            mean_simplex[i] += s.simplex.probs()[i] / n;
            mean_expo[i] += s.expo[i] / n;
        }
    }
    let overhead = overhead_report(cfg.k)?;
    let res = ChainResult {
        total_overhead: overhead.total(),
        overhead,
        mean_simplex,
        mean_expo,
    };
    say!(
        "K={} n={}: discarded entropy {:.4} nats",
        cfg.k,
        cfg.n,
        res.total_overhead
    );
    out.write_json("chain.json", &stamp, &res)?;
    out.write_csv("chain.csv", &stamp, &samples_to_csv(&samples))?;
    Ok(())
}

/// Numeric rows of a CSV file; `#` lines and a non-numeric first row are
/// skipped.
fn read_rows(path: &str) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::field("input", format!("{path}: {e}")))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if rows.is_empty() => continue,
            Err(e) => return Err(CliError::field("input", format!("{path} line {}: {e}", i + 1))),
        }
    }
    let dim = rows.first().map_or(0, Vec::len);
    if let Some(pos) = rows.iter().position(|r| r.len() != dim) {
        return Err(CliError::field(
            "input",
            format!(
                "{path}: row {} has {} columns, expected {dim}",
                pos + 1,
                rows[pos].len()
            ),
        ));
    }
    Ok(rows)
}

fn sigreg_batch(cfg: &mut SigregConfig) -> Result<Vec<Vec<f64>>> {
    Ok(match cfg.source {
        BatchSource::Gaussian => gaussian_batch(cfg.n, cfg.dim, cfg.seed),
        BatchSource::ChiSquare => gaussian_batch(cfg.n, cfg.dim, cfg.seed)
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|z| (z * z - 1.0) / std::f64::consts::SQRT_2)
                    .collect()
            })
            .collect(),
        BatchSource::Collapsed => vec![vec![0.0; cfg.dim]; cfg.n],
        BatchSource::File => {
            let rows = read_rows(cfg.input.as_deref().expect("validated"))?;
            cfg.n = rows.len();
            cfg.dim = rows.first().map_or(0, Vec::len);
            rows
        }
    })
}

#[derive(Serialize)]
struct SigregReport {
    statistic: f64,
    per_direction: Vec<f64>,
    null_band: NullBand,
    in_band: bool,
}

pub fn sigreg_test(mut cfg: SigregConfig, out: &OutDir) -> Result<()> {
    cfg.validate()?;
    let batch = sigreg_batch(&mut cfg)?;
    cfg.validate()?;
    let stamp = Stamp::new("sigreg-test", &cfg)?;
    let sketch = SketchConfig::new(cfg.m, cfg.dim, cfg.seed)?;
    let res = sigreg_loss(&batch, &sketch)?;
    let null_band = sigreg_null_band(cfg.n, &sketch, cfg.replicates, cfg.null_seed)?;
    let report = SigregReport {
        in_band: null_band.contains(res.statistic),
        statistic: res.statistic,
        per_direction: res.per_direction,
        null_band,
    };
    say!(
        "n={} dim={} m={}: statistic {:.4}, null q99 {:.4}, {}",
        cfg.n,
        cfg.dim,
        cfg.m,
        report.statistic,
        report.null_band.q99,
        if report.in_band {
            "consistent with N(0, I)"
        } else {
            "rejects N(0, I)"
        }
    );
    let mut csv = String::from("direction,statistic\n");
    for (i, t) in report.per_direction.iter().enumerate() {
        let _ = writeln!(csv, "{i},{t}");
    }
    out.write_json("sigreg.json", &stamp, &report)?;
    out.write_csv("sigreg.csv", &stamp, &csv)?;
    Ok(())
}

#[derive(Clone, Copy, Debug)]
struct Job {
    beta: f64,
    k: usize,
    seed: u64,
}

impl Job {
    fn tag(&self) -> String {
        format!("b{}_k{}_s{}", self.beta, self.k, self.seed)
    }
}

#[derive(Serialize)]
struct JobConfig<'a> {
    task: TaskKind,
    config: &'a iblab::encoder::TrainConfig,
}

fn run_job(cfg: &TrainRunConfig, job: Job, out: &OutDir) -> Result<TrainReport> {
    let tc = cfg.job(job.beta, job.k, job.seed);
    let stamp = Stamp::new(
        "train",
        &JobConfig {
            task: cfg.task,
            config: &tc,
        },
    )?;
    let report = train_toy(cfg.task, &tc)?;
    let tag = job.tag();
    out.write_json(&format!("train_{tag}.json"), &stamp, &report)?;
    out.write_csv(&format!("trajectory_{tag}.csv"), &stamp, &report.trajectory_csv())?;
    Ok(report)
}

fn summary_row(csv: &mut String, task: TaskKind, job: Job, e: &PluginEstimate, diverged_at: Option<usize>) {
    let d = diverged_at.map_or(String::new(), |x| x.to_string());
    let _ = writeln!(
        csv,
        "{task},{},{},{},{},{},{},{},{},{d}",
        job.beta, job.k, job.seed, e.rate, e.cond_rate, e.delta, e.epsilon, e.iwy
    );
}

pub fn train(mut cfg: TrainRunConfig, out: &OutDir, jobs: usize) -> Result<()> {
    cfg.validate()?;
    cfg.objective = Some(cfg.objective.unwrap_or(Objective::default_for(cfg.task)));
    if cfg.ks.is_empty() {
        cfg.ks = vec![toy_problem(cfg.task, &cfg.job(1.0, 2, 0))?.joint.ny()];
    }
    let stamp = Stamp::new("train", &cfg)?;
    let mut list = Vec::new();
    for &beta in &cfg.betas {
        for &k in &cfg.ks {
            for &seed in &cfg.seeds {
                list.push(Job { beta, k, seed });
            }
        }
    }
    let results = run_jobs(jobs, &list, |&job| run_job(&cfg, job, out));
    let mut csv = String::from("task,beta,k,seed,R,cond_rate,delta,epsilon,iwy,diverged_at\n");
    let mut failures = Vec::new();
    let mut config_error = None;
    for (job, r) in list.iter().zip(results) {
        match r {
            Ok(rep) => {
                let e = &rep.final_estimate;
                say!(
                    "{} beta={} K={} seed={}: R={:.4} delta={:.4} epsilon={:.4}",
                    cfg.task,
                    job.beta,
                    job.k,
                    job.seed,
                    e.rate,
                    e.delta,
                    e.epsilon
                );
                summary_row(&mut csv, cfg.task, *job, e, rep.diverged_at);
                if let Some(ep) = rep.diverged_at {
                    failures.push(format!("{} diverged at epoch {ep}", job.tag()));
                }
            }
            Err(CliError::Config(m)) => config_error = Some(CliError::Config(m)),
            Err(e) => failures.push(format!("{}: {e}", job.tag())),
        }
    }
    if let Some(e) = config_error {
        return Err(e);
    }
    out.write_csv("train_summary.csv", &stamp, &csv)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(failures.join("; ")))
    }
}

#[derive(Serialize)]
struct TaskEntry {
    name: &'static str,
    description: &'static str,
    /// `None` for tasks without a finite joint.
    summary: Option<PlaneSummary>,
    nx: Option<usize>,
    ny: Option<usize>,
}

/// The task registry with the information constants of every finite task.
pub fn tasks(out: &OutDir) -> Result<()> {
    let stamp = Stamp::new("tasks", &serde_json::json!({}))?;
    let mut entries = Vec::new();
    let mut csv = String::from("name,nx,ny,ixy,hx,h_wstar,h_wstar_given_y\n");
    for t in TaskKind::ALL {
        let joint = t.joint().ok();
        let summary = joint.as_ref().map(information_plane_summary);
        match (&joint, &summary) {
            (Some(j), Some(s)) => {
                let _ = writeln!(
                    csv,
                    "{t},{},{},{},{},{},{}",
                    j.nx(),
                    j.ny(),
                    s.ixy,
                    s.hx,
                    s.h_wstar,
                    s.h_wstar_given_y
                );
                say!(
                    "{:<18} I(X;Y)={:.5} H(X)={:.5} H(W*)={:.5}  {}",
                    t.name(),
                    s.ixy,
                    s.hx,
                    s.h_wstar,
                    t.description()
                );
            }
            _ => {
                let _ = writeln!(csv, "{t},,,,,,");
                say!("{:<18} continuous output  {}", t.name(), t.description());
            }
        }
        entries.push(TaskEntry {
            name: t.name(),
            description: t.description(),
            nx: joint.as_ref().map(JointPMF::nx),
            ny: joint.as_ref().map(JointPMF::ny),
            summary,
        });
    }
    out.write_json("tasks.json", &stamp, &entries)?;
    out.write_csv("tasks.csv", &stamp, &csv)?;
    Ok(())
}
