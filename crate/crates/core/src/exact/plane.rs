//! Information-plane geometry: the gap triangle, tangent lines of the curve
//! and the flat portion past the sufficient endpoint.

use serde::{Deserialize, Serialize};

use super::mss::{minimal_sufficient_statistic, DEFAULT_TAU_MSS};
use super::solver::IBCurve;
use crate::error::{Error, Result};
use crate::prob::{entropy_x, information_terms, mutual_information, EncoderKernel, JointPMF};

/// Constants that fix the shape of the information plane for a task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneSummary {
    /// `I(X;Y)`.
    pub ixy: f64,
    /// `H(X)`.
    pub hx: f64,
    /// `H(W*)`.
    pub h_wstar: f64,
    /// `H(W*|Y)`, computed directly from the joint of `W*` and `Y`.
    pub h_wstar_given_y: f64,
    /// `H(W*) - I(X;Y)`, which must agree with `h_wstar_given_y`.
    pub gap: f64,
    /// Slope `I(X;Y) / H(W*)` of the time-sharing line; `None` when
    /// `H(W*) = 0`.
    pub time_sharing_slope: Option<f64>,
    /// Vertices `(0,0)`, `(I,I)`, `(H(W*),I)` of the region between the
    /// converse boundary and the time-sharing line.
    pub triangle: [(f64, f64); 3],
}

pub fn information_plane_summary(j: &JointPMF) -> PlaneSummary {
    let mss = minimal_sufficient_statistic(j, DEFAULT_TAU_MSS);
    let ixy = mutual_information(j);
    let h_wstar = mss.entropy();
    PlaneSummary {
        ixy,
        hx: entropy_x(j),
        h_wstar,
        h_wstar_given_y: mss.entropy_given_y(j),
        gap: (h_wstar - ixy).max(0.0),
        time_sharing_slope: (h_wstar > 0.0).then(|| ixy / h_wstar),
        triangle: [(0.0, 0.0), (ixy, ixy), (h_wstar, ixy)],
    }
}

/// Slope `1/beta` and `Delta`-axis intercept `Delta - R/beta` of the tangent
/// line through point `idx` of the curve.
pub fn tangent_intercept(curve: &IBCurve, idx: usize) -> Result<(f64, f64)> {
    let p = curve.points.get(idx).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "point {idx} out of range for a curve of {} points",
            curve.points.len()
        ))
    })?;
    if p.beta == 0.0 {
        return Err(Error::UndefinedSlope);
    }
    let slope = 1.0 / p.beta;
    Ok((slope, p.delta - p.rate * slope))
}

/// Outcome of the flat-portion check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatPortionReport {
    pub rate: f64,
    pub delta: f64,
    pub hx: f64,
    pub ixy: f64,
    /// Both `rate = H(X)` and `delta = I(X;Y)` within `1e-9`.
    pub holds: bool,
}

/// Evaluates the augmented encoder `W = (W*, X)`: a deterministic encoder
/// onto class/input pairs. It should spend the full `H(X)` while carrying
/// exactly `I(X;Y)`.
pub fn flat_portion_check(j: &JointPMF) -> Result<FlatPortionReport> {
    let mss = minimal_sufficient_statistic(j, DEFAULT_TAU_MSS);
    let nx = j.nx();
    let assign: Vec<usize> = mss.assignment.iter().enumerate().map(|(x, &c)| c * nx + x).collect();
    let enc = EncoderKernel::deterministic(&assign, mss.n_classes() * nx)?;
    let t = information_terms(j, &enc)?;
    let hx = entropy_x(j);
    Ok(FlatPortionReport {
        rate: t.rate,
        delta: t.delta,
        hx,
        ixy: t.ixy,
        holds: (t.rate - hx).abs() < 1e-9 && (t.delta - t.ixy).abs() < 1e-9,
    })
}
