//! States on the positive cone and their logarithmic images.

use crate::error::{Error, Result};

/// A point of the open positive cone: every component is finite and `> 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveState(Vec<f64>);

impl PositiveState {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        check_positive(&components)?;
        Ok(Self(components))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for PositiveState {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for PositiveState {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

/// Componentwise logarithm of a [`PositiveState`]. Every component is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LogState(Vec<f64>);

impl LogState {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if let Some((i, &v)) = components.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Domain {
                component: i,
                value: v,
            });
        }
        Ok(Self(components))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl AsRef<[f64]> for LogState {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn check_positive(y: &[f64]) -> Result<()> {
    match y.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        Some(i) => Err(Error::Domain {
            component: i,
            value: y[i],
        }),
        None => Ok(()),
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for x in v {
        acc += x * x;
    }
    acc.sqrt()
}
