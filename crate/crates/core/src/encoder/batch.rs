//! Minibatches of inputs with optional labels.
//!
//! Identical inputs are grouped once at construction. Estimators draw their
//! latent samples per distinct input and weight them by multiplicity, which
//! has the same expectation as drawing per element and costs far less on the
//! duplicate-heavy batches the toy tasks produce.

use std::collections::HashMap;

use crate::encoder::input::Input;
use crate::error::{Error, Result};
use crate::prob::JointPMF;

#[derive(Clone, Debug)]
pub struct Minibatch {
    xs: Vec<Input>,
    ys: Option<Vec<usize>>,
    targets: Option<Vec<Vec<f64>>>,
    slot: Vec<usize>,
    first: Vec<usize>,
}

impl Minibatch {
    /// Groups identical inputs. With labels, every class present must have
    /// at least two members.
    pub fn new(xs: Vec<Input>, ys: Option<Vec<usize>>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(ys) = &ys {
            if ys.len() != xs.len() {
                return Err(Error::DimensionMismatch {
                    what: "label list",
                    expected: xs.len(),
                    found: ys.len(),
                });
            }
            let n_classes = ys.iter().max().map_or(0, |m| m + 1);
            let mut counts = vec![0usize; n_classes];
            for &y in ys {
                counts[y] += 1;
            }
            if let Some((class, &count)) = counts.iter().enumerate().find(|(_, &c)| c == 1) {
                return Err(Error::ClassTooSmall { class, count });
            }
        }
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut first = Vec::new();
        let slot = xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                *index.entry(x.key()).or_insert_with(|| {
                    first.push(i);
                    first.len() - 1
                })
            })
            .collect();
        Ok(Self {
            xs,
            ys,
            targets: None,
            slot,
            first,
        })
    }

    /// A deterministic batch of `n` pairs whose cell counts are `n p(x, y)`
    /// rounded by largest remainder. `inputs[x]` names row `x` of the joint.
    /// Each element carries its known row `p(Y|x)` as a target.
    pub fn stratified(joint: &JointPMF, inputs: &[Input], n: usize) -> Result<Self> {
        if inputs.len() != joint.nx() {
            return Err(Error::DimensionMismatch {
                what: "input list",
                expected: joint.nx(),
                found: inputs.len(),
            });
        }
        let ny = joint.ny();
        let cells: Vec<f64> = (0..joint.nx())
            .flat_map(|x| (0..ny).map(move |y| (x, y)))
            .map(|(x, y)| joint.p(x, y) * n as f64)
            .collect();
        let counts = largest_remainder(&cells, n);
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        let mut targets = Vec::with_capacity(n);
        for (cell, &c) in counts.iter().enumerate() {
            let (x, y) = (cell / ny, cell % ny);
            for _ in 0..c {
                xs.push(inputs[x].clone());
                ys.push(y);
                targets.push(joint.conditional(x));
            }
        }
        let mut batch = Self::new(xs, Some(ys))?;
        batch.targets = Some(targets);
        Ok(batch)
    }

    /// Attaches the known predictive row `p(Y|x)` of every element.
    pub fn with_targets(mut self, targets: Vec<Vec<f64>>) -> Result<Self> {
        if targets.len() != self.xs.len() {
            return Err(Error::DimensionMismatch {
                what: "target list",
                expected: self.xs.len(),
                found: targets.len(),
            });
        }
        self.targets = Some(targets);
        Ok(self)
    }

    /// The same inputs with labels dropped.
    pub fn without_labels(&self) -> Self {
        Self {
            ys: None,
            ..self.clone()
        }
    }

    /// Elements at `idx`, in order.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let xs = idx.iter().map(|&i| self.xs[i].clone()).collect();
        let ys = self.ys.as_ref().map(|ys| idx.iter().map(|&i| ys[i]).collect());
        let mut b = Self::new(xs, ys)?;
        b.targets = self
            .targets
            .as_ref()
            .map(|t| idx.iter().map(|&i| t[i].clone()).collect());
        Ok(b)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn xs(&self) -> &[Input] {
        &self.xs
    }

    pub fn ys(&self) -> Option<&[usize]> {
        self.ys.as_deref()
    }

    pub fn targets(&self) -> Option<&[Vec<f64>]> {
        self.targets.as_deref()
    }

    pub fn n_classes(&self) -> usize {
        self.ys.as_ref().and_then(|y| y.iter().max()).map_or(0, |m| m + 1)
    }

    /// Number of distinct inputs.
    pub fn n_unique(&self) -> usize {
        self.first.len()
    }

    /// The `u`-th distinct input.
    pub fn unique_input(&self, u: usize) -> &Input {
        &self.xs[self.first[u]]
    }

    /// Index of the first element holding the `u`-th distinct input.
    pub fn first_element(&self, u: usize) -> usize {
        self.first[u]
    }

    /// Distinct-input slot of every element.
    pub fn slots(&self) -> &[usize] {
        &self.slot
    }

    /// Multiplicity of every distinct input.
    pub fn multiplicities(&self) -> Vec<usize> {
        let mut m = vec![0; self.n_unique()];
        for &s in &self.slot {
            m[s] += 1;
        }
        m
    }

    /// `counts[u][y]`: elements holding distinct input `u` with label `y`.
    pub fn class_counts(&self) -> Option<Vec<Vec<usize>>> {
        let ys = self.ys.as_ref()?;
        let mut c = vec![vec![0; self.n_classes()]; self.n_unique()];
        for (&s, &y) in self.slot.iter().zip(ys) {
            c[s][y] += 1;
        }
        Some(c)
    }
}

/// Integer counts summing to `n`, each the floor of its share plus one for
/// the largest remainders. Ties go to the earlier cell.
pub(crate) fn largest_remainder(shares: &[f64], n: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = shares[a] - shares[a].floor();
        let rb = shares[b] - shares[b].floor();
        rb.partial_cmp(&ra).expect("finite shares").then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}
