//! Exact probability primitives on finite alphabets.
//!
//! Everything here is measured in nats. Alphabets are index based; labels on
//! a [`JointPMF`] are carried along as opaque metadata. All types are
//! immutable once constructed, and construction is where validation and
//! renormalization happen, so the information functions below never fail on
//! malformed probabilities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a distribution accepted without
/// renormalizing.
pub const NORM_TOL: f64 = 1e-12;

/// `x ln x` with the convention `0 ln 0 = 0`.
#[inline]
pub(crate) fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Validates a weight vector and rescales it to unit mass.
///
/// Vectors already within [`NORM_TOL`] of unit mass are kept bit-for-bit, so
/// that serialized distributions round-trip exactly.
fn normalize(mut w: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    if w.is_empty() {
        return Err(Error::InvalidDistribution(format!("{what}: empty vector")));
    }
    if let Some(v) = w.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entry {v} is negative or not finite"
        )));
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidDistribution(format!("{what}: zero total mass")));
    }
    if (total - 1.0).abs() > NORM_TOL {
        w.iter_mut().for_each(|v| *v /= total);
    }
    Ok(w)
}

/// A point of the probability simplex: `K` non-negative reals with unit sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint {
    probs: Vec<f64>,
}

impl SimplexPoint {
    /// Builds a point from non-negative weights, renormalizing when the mass
    /// is off by more than [`NORM_TOL`].
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Ok(Self {
            probs: normalize(weights, "simplex point")?,
        })
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0, "simplex dimension must be positive");
        Self {
            probs: vec![1.0 / k as f64; k],
        }
    }

    /// The `i`-th vertex `e_i` of the `K`-simplex.
    pub fn vertex(k: usize, i: usize) -> Self {
        assert!(i < k, "vertex index out of range");
        let mut probs = vec![0.0; k];
        probs[i] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Self {
        p.probs
    }
}

/// Row-stochastic matrix shared by encoder and decoder kernels.
#[derive(Clone, Debug, PartialEq)]
struct Stochastic {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Stochastic {
    fn new(rows: Vec<Vec<f64>>, what: &str) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidDistribution(format!("{what}: no rows")));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(n * cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    what: "kernel row",
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend(normalize(row, &format!("{what} row {i}"))?);
        }
        Ok(Self { rows: n, cols, data })
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }
}

/// Conditional `p(w|x)` over a finite latent alphabet, one simplex row per
/// input symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct EncoderKernel(Stochastic);

impl EncoderKernel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Stochastic::new(rows, "encoder").map(Self)
    }

    /// Deterministic encoder sending input `x` to latent `assign[x]`.
    pub fn deterministic(assign: &[usize], n_latent: usize) -> Result<Self> {
        let rows = assign
            .iter()
            .map(|&w| {
                if w >= n_latent {
                    return Err(Error::InvalidArgument(format!(
                        "latent index {w} out of range for alphabet of size {n_latent}"
                    )));
                }
                let mut r = vec![0.0; n_latent];
                r[w] = 1.0;
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn identity(n: usize) -> Self {
        let assign: Vec<usize> = (0..n).collect();
        Self::deterministic(&assign, n).expect("identity kernel is valid")
    }

    /// Single-latent encoder: `W` independent of `X`.
    pub fn constant(n_inputs: usize) -> Self {
        Self::new(vec![vec![1.0]; n_inputs]).expect("constant kernel is valid")
    }

    pub fn n_inputs(&self) -> usize {
        self.0.rows
    }

    pub fn n_latent(&self) -> usize {
        self.0.cols
    }

    pub fn row(&self, x: usize) -> &[f64] {
        self.0.row(x)
    }

    pub fn get(&self, x: usize, w: usize) -> f64 {
        self.0.data[x * self.0.cols + w]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0.to_rows()
    }

    /// Relabels latent symbols: new latent `perm[w]` carries old latent `w`.
    pub fn permute_latents(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n_latent())?;
        let rows = (0..self.n_inputs())
            .map(|x| {
                let mut r = vec![0.0; self.n_latent()];
                for (w, &p) in perm.iter().enumerate() {
                    r[p] = self.get(x, w);
                }
                r
            })
            .collect();
        Self::new(rows)
    }

    /// Largest absolute entrywise difference to another kernel of the same
    /// shape.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .data
            .iter()
            .zip(&other.0.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<Vec<f64>>> for EncoderKernel {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<EncoderKernel> for Vec<Vec<f64>> {
    fn from(k: EncoderKernel) -> Self {
        k.to_rows()
    }
}

/// Decoder `p(y|w)`, one simplex row per latent symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DecoderMap(Stochastic);

impl DecoderMap {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Stochastic::new(rows, "decoder").map(Self)
    }

    pub fn n_latent(&self) -> usize {
        self.0.rows
    }

    pub fn n_outputs(&self) -> usize {
        self.0.cols
    }

    pub fn row(&self, w: usize) -> &[f64] {
        self.0.row(w)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0.to_rows()
    }
}

impl TryFrom<Vec<Vec<f64>>> for DecoderMap {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<DecoderMap> for Vec<Vec<f64>> {
    fn from(d: DecoderMap) -> Self {
        d.to_rows()
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::DimensionMismatch {
            what: "permutation",
            expected: n,
            found: perm.len(),
        });
    }
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidArgument(format!(
                "{perm:?} is not a permutation of 0..{n}"
            )));
        }
    }
    Ok(())
}

/// Serialized form of a [`JointPMF`]: labels plus a row-major table.
#[derive(Serialize, Deserialize)]
struct JointRepr {
    x_labels: Vec<String>,
    y_labels: Vec<String>,
    table: Vec<Vec<f64>>,
}

/// A finite joint distribution `p(x, y)`.
///
/// Rows (inputs) and columns (outputs) with zero mass are dropped at
/// construction, so every retained marginal entry is strictly positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointRepr", into = "JointRepr")]
pub struct JointPMF {
    nx: usize,
    ny: usize,
    table: Vec<f64>,
    px: Vec<f64>,
    py: Vec<f64>,
    x_labels: Vec<String>,
    y_labels: Vec<String>,
}

impl JointPMF {
    /// Joint from a table of non-negative weights with default labels.
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self> {
        let x_labels = (0..table.len()).map(|i| format!("x{i}")).collect();
        let ny = table.first().map_or(0, Vec::len);
        let y_labels = (0..ny).map(|i| format!("y{i}")).collect();
        Self::with_labels(table, x_labels, y_labels)
    }

    pub fn with_labels(table: Vec<Vec<f64>>, x_labels: Vec<String>, y_labels: Vec<String>) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::InvalidDistribution("joint: no rows".into()));
        }
        let ny = table[0].len();
        if x_labels.len() != table.len() {
            return Err(Error::DimensionMismatch {
                what: "x_labels",
                expected: table.len(),
                found: x_labels.len(),
            });
        }
        if y_labels.len() != ny {
            return Err(Error::DimensionMismatch {
                what: "y_labels",
                expected: ny,
                found: y_labels.len(),
            });
        }
        if let Some(r) = table.iter().find(|r| r.len() != ny) {
            return Err(Error::DimensionMismatch {
                what: "joint row",
                expected: ny,
                found: r.len(),
            });
        }
        let flat = normalize(table.concat(), "joint")?;
        let keep_x: Vec<usize> = (0..table.len())
            .filter(|&x| flat[x * ny..(x + 1) * ny].iter().any(|&v| v > 0.0))
            .collect();
        let keep_y: Vec<usize> = (0..ny)
            .filter(|&y| (0..table.len()).any(|x| flat[x * ny + y] > 0.0))
            .collect();
        let mut data = Vec::with_capacity(keep_x.len() * keep_y.len());
        for &x in &keep_x {
            data.extend(keep_y.iter().map(|&y| flat[x * ny + y]));
        }
        let (nx, ny_kept) = (keep_x.len(), keep_y.len());
        let px = (0..nx)
            .map(|x| data[x * ny_kept..(x + 1) * ny_kept].iter().sum())
            .collect();
        let py = (0..ny_kept)
            .map(|y| (0..nx).map(|x| data[x * ny_kept + y]).sum())
            .collect();
        Ok(Self {
            nx,
            ny: ny_kept,
            table: data,
            px,
            py,
            x_labels: keep_x.iter().map(|&x| x_labels[x].clone()).collect(),
            y_labels: keep_y.iter().map(|&y| y_labels[y].clone()).collect(),
        })
    }

    /// Joint `p(x) p(y|x)` from an input marginal and predictive rows.
    pub fn from_conditionals(px: &[f64], rows: &[Vec<f64>]) -> Result<Self> {
        if px.len() != rows.len() {
            return Err(Error::DimensionMismatch {
                what: "conditional rows",
                expected: px.len(),
                found: rows.len(),
            });
        }
        let px = normalize(px.to_vec(), "input marginal")?;
        let table = px
            .iter()
            .zip(rows)
            .map(|(&p, r)| {
                let r = normalize(r.clone(), "conditional row")?;
                Ok(r.into_iter().map(|v| p * v).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Self::new(table)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn p(&self, x: usize, y: usize) -> f64 {
        self.table[x * self.ny + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.table[x * self.ny..(x + 1) * self.ny]
    }

    /// Marginal `p(x)`.
    pub fn px(&self) -> &[f64] {
        &self.px
    }

    /// Marginal `p(y)`.
    pub fn py(&self) -> &[f64] {
        &self.py
    }

    /// Predictive distribution `p(y|x)`.
    pub fn conditional(&self, x: usize) -> Vec<f64> {
        self.row(x).iter().map(|v| v / self.px[x]).collect()
    }

    pub fn conditionals(&self) -> Vec<Vec<f64>> {
        (0..self.nx).map(|x| self.conditional(x)).collect()
    }

    pub fn x_labels(&self) -> &[String] {
        &self.x_labels
    }

    pub fn y_labels(&self) -> &[String] {
        &self.y_labels
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.table.chunks(self.ny).map(<[f64]>::to_vec).collect()
    }

    /// Splits input `x` into two symbols with the same predictive row,
    /// carrying fractions `frac` and `1 - frac` of its mass.
    pub fn split_input(&self, x: usize, frac: f64) -> Result<Self> {
        if !(frac > 0.0 && frac < 1.0) || x >= self.nx {
            return Err(Error::InvalidArgument(format!(
                "cannot split input {x} with fraction {frac}"
            )));
        }
        let mut rows = self.to_rows();
        let mut labels = self.x_labels.clone();
        let dup: Vec<f64> = rows[x].iter().map(|v| v * (1.0 - frac)).collect();
        rows[x].iter_mut().for_each(|v| *v *= frac);
        rows.insert(x + 1, dup);
        labels.insert(x + 1, format!("{}'", self.x_labels[x]));
        Self::with_labels(rows, labels, self.y_labels.clone())
    }
}

impl TryFrom<JointRepr> for JointPMF {
    type Error = Error;

    fn try_from(r: JointRepr) -> Result<Self> {
        Self::with_labels(r.table, r.x_labels, r.y_labels)
    }
}

impl From<JointPMF> for JointRepr {
    fn from(j: JointPMF) -> Self {
        JointRepr {
            table: j.to_rows(),
            x_labels: j.x_labels,
            y_labels: j.y_labels,
        }
    }
}

pub(crate) fn entropy_of(p: &[f64]) -> f64 {
    -p.iter().map(|&v| xlogx(v)).sum::<f64>()
}

/// Shannon entropy `H(p)` in nats.
pub fn entropy(p: &SimplexPoint) -> f64 {
    entropy_of(p.probs()).max(0.0)
}

pub(crate) fn kl_raw(p: &[f64], q: &[f64]) -> std::result::Result<f64, usize> {
    let mut acc = 0.0;
    for (i, (&a, &b)) in p.iter().zip(q).enumerate() {
        if a > 0.0 {
            if b <= 0.0 {
                return Err(i);
            }
            acc += a * (a / b).ln();
        }
    }
    Ok(acc.max(0.0))
}

/// `D_KL(p || q)` in nats. A support violation is reported as
/// [`Error::InfiniteDivergence`] rather than returned as `+inf`.
pub fn kl_divergence(p: &SimplexPoint, q: &SimplexPoint) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            what: "kl_divergence",
            expected: p.dim(),
            found: q.dim(),
        });
    }
    kl_raw(p.probs(), q.probs()).map_err(|index| Error::InfiniteDivergence { index })
}

pub fn entropy_x(j: &JointPMF) -> f64 {
    entropy_of(j.px())
}

pub fn entropy_y(j: &JointPMF) -> f64 {
    entropy_of(j.py())
}

/// `H(Y|X) = H(X,Y) - H(X)`.
pub fn conditional_entropy_y_given_x(j: &JointPMF) -> f64 {
    (entropy_of(&j.table) - entropy_x(j)).max(0.0)
}

/// `I(X;Y) = H(Y) - H(Y|X)`.
pub fn mutual_information(j: &JointPMF) -> f64 {
    let mut acc = 0.0;
    for x in 0..j.nx() {
        for y in 0..j.ny() {
            let p = j.p(x, y);
            if p > 0.0 {
                acc += p * (p / (j.px()[x] * j.py()[y])).ln();
            }
        }
    }
    acc.max(0.0)
}

/// Every information quantity of the chain `Y - X - W` for one encoder,
/// each computed directly from the discrete joint `p(x,y) p(w|x)`.
#[derive(Clone, Debug)]
pub struct InfoTerms {
    /// `I(X;W)`.
    pub rate: f64,
    /// `I(W;Y)`.
    pub delta: f64,
    /// `I(X;Y|W) = H(Y|W) - H(Y|X)`.
    pub epsilon: f64,
    /// `I(X;W|Y)`.
    pub cond_rate: f64,
    /// `I(X;Y)`.
    pub ixy: f64,
    /// `p(w)`.
    pub marginal: Vec<f64>,
    /// Self-consistent decoder `p(y|w)`; rows of unused latents hold `p(y)`.
    pub decoder: Vec<Vec<f64>>,
}

fn check_encoder(j: &JointPMF, enc: &EncoderKernel) -> Result<()> {
    if enc.n_inputs() != j.nx() {
        return Err(Error::DimensionMismatch {
            what: "encoder inputs",
            expected: j.nx(),
            found: enc.n_inputs(),
        });
    }
    Ok(())
}

/// Computes all of [`InfoTerms`] for `enc` acting on the inputs of `j`.
pub fn information_terms(j: &JointPMF, enc: &EncoderKernel) -> Result<InfoTerms> {
    check_encoder(j, enc)?;
    let (nx, ny, nw) = (j.nx(), j.ny(), enc.n_latent());
    let px = j.px();
    let py = j.py();

    let mut pw = vec![0.0; nw];
    let mut pwy = vec![0.0; nw * ny];
    for x in 0..nx {
        for w in 0..nw {
            let e = enc.get(x, w);
            if e == 0.0 {
                continue;
            }
            pw[w] += px[x] * e;
            for y in 0..ny {
                pwy[w * ny + y] += j.p(x, y) * e;
            }
        }
    }

    let mut rate = 0.0;
    for x in 0..nx {
        for w in 0..nw {
            let e = enc.get(x, w);
            if e > 0.0 {
                rate += px[x] * e * (e / pw[w]).ln();
            }
        }
    }

    let mut h_y_w = 0.0;
    let mut delta = 0.0;
    for w in 0..nw {
        for y in 0..ny {
            let p = pwy[w * ny + y];
            if p > 0.0 {
                h_y_w -= p * (p / pw[w]).ln();
                delta += p * (p / (pw[w] * py[y])).ln();
            }
        }
    }
    let epsilon = (h_y_w - conditional_entropy_y_given_x(j)).max(0.0);

    let mut cond_rate = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            let pxy = j.p(x, y);
            if pxy == 0.0 {
                continue;
            }
            for w in 0..nw {
                let e = enc.get(x, w);
                if e > 0.0 {
                    let p_w_given_y = pwy[w * ny + y] / py[y];
                    cond_rate += pxy * e * (e / p_w_given_y).ln();
                }
            }
        }
    }

    let decoder = (0..nw)
        .map(|w| {
            if pw[w] > 0.0 {
                let row: Vec<f64> = pwy[w * ny..(w + 1) * ny].iter().map(|v| v / pw[w]).collect();
                let s: f64 = row.iter().sum();
                row.into_iter().map(|v| v / s).collect()
            } else {
                py.to_vec()
            }
        })
        .collect();

    Ok(InfoTerms {
        rate: rate.max(0.0),
        delta: delta.max(0.0),
        epsilon,
        cond_rate: cond_rate.max(0.0),
        ixy: mutual_information(j),
        marginal: pw,
        decoder,
    })
}

/// Residual predictive information `I(X;Y|W)`, computed as `H(Y|W) - H(Y|X)`.
pub fn conditional_mi_xy_given_w(j: &JointPMF, enc: &EncoderKernel) -> Result<f64> {
    information_terms(j, enc).map(|t| t.epsilon)
}

/// Encoding rate `I(X;W)`.
pub fn rate(j: &JointPMF, enc: &EncoderKernel) -> Result<f64> {
    information_terms(j, enc).map(|t| t.rate)
}

/// Conditional rate `I(X;W|Y)`.
pub fn conditional_rate(j: &JointPMF, enc: &EncoderKernel) -> Result<f64> {
    information_terms(j, enc).map(|t| t.cond_rate)
}

/// Exact CEB objective `beta I(X;W|Y) + (1 - beta) I(X;W)`.
pub fn ceb_objective(j: &JointPMF, enc: &EncoderKernel, beta: f64) -> Result<f64> {
    let t = information_terms(j, enc)?;
    Ok(beta * t.cond_rate + (1.0 - beta) * t.rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(v: &[f64]) -> SimplexPoint {
        SimplexPoint::new(v.to_vec()).unwrap()
    }

    fn binary() -> JointPMF {
        JointPMF::from_conditionals(
            &[0.25; 4],
            &[vec![0.1, 0.9], vec![0.1, 0.9], vec![0.9, 0.1], vec![0.9, 0.1]],
        )
        .unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&sp(&[1.0, 0.0, 0.0])), 0.0);
        assert!((entropy(&sp(&[0.5, 0.5])) - std::f64::consts::LN_2).abs() < 1e-6);
        assert!((entropy(&sp(&[0.8, 0.1, 0.1])) - 0.639032).abs() < 1e-6);
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&sp(&[0.3, 0.7]), &sp(&[0.3, 0.7])).unwrap(), 0.0);
        let v = kl_divergence(&sp(&[0.1, 0.9]), &sp(&[0.9, 0.1])).unwrap();
        assert!((v - 0.8 * 9f64.ln()).abs() < 1e-12);
        assert!((v - 1.757780).abs() < 1e-6);
        let v = kl_divergence(&sp(&[1.0, 0.0]), &sp(&[0.5, 0.5])).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn kl_support_violation_is_an_error() {
        let err = kl_divergence(&sp(&[0.5, 0.5]), &sp(&[1.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::InfiniteDivergence { index: 1 }));
    }

    #[test]
    fn simplex_point_rejects_bad_input() {
        assert!(SimplexPoint::new(vec![]).is_err());
        assert!(SimplexPoint::new(vec![0.0, 0.0]).is_err());
        assert!(SimplexPoint::new(vec![-0.1, 1.1]).is_err());
        assert!(SimplexPoint::new(vec![f64::NAN, 1.0]).is_err());
        let p = SimplexPoint::new(vec![2.0, 6.0]).unwrap();
        assert_eq!(p.probs(), &[0.25, 0.75]);
    }

    #[test]
    fn mutual_information_examples() {
        let indep = JointPMF::new(vec![vec![0.06, 0.14], vec![0.24, 0.56]]).unwrap();
        assert!(mutual_information(&indep) < 1e-15);
        assert!((mutual_information(&binary()) - 0.368064).abs() < 1e-6);
        let det = JointPMF::new(vec![vec![0.0, 0.25], vec![0.0, 0.25], vec![0.25, 0.0], vec![0.25, 0.0]]).unwrap();
        assert!((mutual_information(&det) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_rows_and_columns_are_dropped() {
        let j = JointPMF::new(vec![vec![0.5, 0.0, 0.0], vec![0.0, 0.0, 0.0], vec![0.0, 0.5, 0.0]]).unwrap();
        assert_eq!((j.nx(), j.ny()), (2, 2));
        assert_eq!(j.x_labels(), &["x0", "x2"]);
        assert_eq!(j.y_labels(), &["y0", "y1"]);
    }

    #[test]
    fn encoder_edge_cases() {
        let j = binary();
        let ixy = mutual_information(&j);
        let c = EncoderKernel::constant(4);
        assert!(rate(&j, &c).unwrap().abs() < 1e-15);
        assert!((conditional_mi_xy_given_w(&j, &c).unwrap() - ixy).abs() < 1e-12);

        let mss = EncoderKernel::deterministic(&[0, 0, 1, 1], 2).unwrap();
        assert!(conditional_mi_xy_given_w(&j, &mss).unwrap() < 1e-12);
        assert!((rate(&j, &mss).unwrap() - 2f64.ln()).abs() < 1e-12);

        let wrong = EncoderKernel::identity(3);
        assert!(rate(&j, &wrong).is_err());
    }

    #[test]
    fn identity_encoder_on_twenty_inputs_has_rate_log_20() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|x| {
                if (x / 2) % 2 == 0 {
                    vec![0.3, 0.7]
                } else {
                    vec![0.6, 0.4]
                }
            })
            .collect();
        let j = JointPMF::from_conditionals(&[1.0; 20], &rows).unwrap();
        let r = rate(&j, &EncoderKernel::identity(20)).unwrap();
        assert!((r - 20f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let j = JointPMF::with_labels(
            vec![vec![0.1, 0.2], vec![0.3, 0.4]],
            vec!["a".into(), "b".into()],
            vec!["u".into(), "v".into()],
        )
        .unwrap();
        let s = serde_json::to_string(&j).unwrap();
        assert!(s.starts_with("{\"x_labels\""));
        let back: JointPMF = serde_json::from_str(&s).unwrap();
        assert_eq!(back, j);
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
    }

    #[test]
    fn permuting_latents_requires_a_permutation() {
        let e = EncoderKernel::identity(3);
        assert!(e.permute_latents(&[0, 0, 1]).is_err());
        let p = e.permute_latents(&[2, 0, 1]).unwrap();
        assert_eq!(p.row(0), &[0.0, 0.0, 1.0]);
    }
}
