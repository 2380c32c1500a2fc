//! Encoder inputs and the fixed feature bases the linear encoders read.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One observation of `X`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Input {
    /// Index into a finite alphabet.
    Discrete(usize),
    /// An angle in radians.
    Angle(f64),
    /// A point in `R^d`.
    Vector(Vec<f64>),
}

impl Input {
    /// Bitwise identity key; equal keys mean the same input.
    pub(crate) fn key(&self) -> Vec<u64> {
        match self {
            Input::Discrete(i) => vec![0, *i as u64],
            Input::Angle(t) => vec![1, t.to_bits()],
            Input::Vector(v) => std::iter::once(2).chain(v.iter().map(|x| x.to_bits())).collect(),
        }
    }
}

/// Fixed basis `phi(x)` over the input space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FeatureMap {
    /// Indicator of each of `n` discrete symbols.
    OneHot { n: usize },
    /// `(1, cos t, sin t, ..., cos(order t), sin(order t))` for an angle `t`.
    Harmonics { order: usize },
    /// `(1, v_1, ..., v_dim)`.
    Affine { dim: usize },
}

impl FeatureMap {
    pub fn dim(&self) -> usize {
        match *self {
            FeatureMap::OneHot { n } => n,
            FeatureMap::Harmonics { order } => 1 + 2 * order,
            FeatureMap::Affine { dim } => 1 + dim,
        }
    }

    pub fn features(&self, x: &Input) -> Result<Vec<f64>> {
        match (self, x) {
            (FeatureMap::OneHot { n }, Input::Discrete(i)) => {
                if i >= n {
                    return Err(Error::InvalidArgument(format!(
                        "symbol {i} outside one-hot basis of size {n}"
                    )));
                }
                let mut f = vec![0.0; *n];
                f[*i] = 1.0;
                Ok(f)
            }
            (FeatureMap::Harmonics { order }, Input::Angle(t)) => {
                let mut f = Vec::with_capacity(1 + 2 * order);
                f.push(1.0);
                for h in 1..=*order {
                    let (s, c) = (h as f64 * t).sin_cos();
                    f.push(c);
                    f.push(s);
                }
                Ok(f)
            }
            (FeatureMap::Affine { dim }, Input::Vector(v)) => {
                if v.len() != *dim {
                    return Err(Error::DimensionMismatch {
                        what: "input vector",
                        expected: *dim,
                        found: v.len(),
                    });
                }
                Ok(std::iter::once(1.0).chain(v.iter().copied()).collect())
            }
            _ => Err(Error::InvalidArgument(format!(
                "feature map {self:?} cannot read input {x:?}"
            ))),
        }
    }
}
