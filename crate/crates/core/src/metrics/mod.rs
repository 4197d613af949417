//! Frame distances and the DTW sequence distance built on them.

mod dtw;
mod gamma;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dtw::{dtw_distance, DtwResult};
pub use gamma::{gamma_angular, gamma_symmetric_kl, KL_SUM_TOLERANCE};

/// Default probability floor applied before the symmetrised KL divergence.
pub const DEFAULT_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("zero-norm vector in argument {argument}")]
    ZeroNorm { argument: String },
    #[error("negative probability {value} at index {index} of argument {argument}")]
    NegativeEntry {
        argument: String,
        index: usize,
        value: f64,
    },
    #[error("argument {argument} sums to {sum}, not 1 (tolerance {KL_SUM_TOLERANCE})")]
    SumOutOfTolerance { argument: String, sum: f64 },
    #[error("non-finite value in argument {argument}")]
    NonFinite { argument: String },
    #[error("empty sequence {0}")]
    EmptySequence(&'static str),
    #[error("invalid frame buffer: {len} values do not divide into frames of dim {dim}")]
    BadShape { len: usize, dim: usize },
    #[error("epsilon {epsilon} invalid for dim {dim}: need 0 < epsilon < 1/dim")]
    InvalidEpsilon { epsilon: f64, dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// Arc cosine of the normalised dot product.
    Angular,
    /// KL(p||q) + KL(q||p) on floored, renormalised distributions.
    SymmetricKl,
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "angular" | "cos" | "cosine" => Ok(MetricKind::Angular),
            "kl" | "symmetric_kl" => Ok(MetricKind::SymmetricKl),
            other => Err(format!("unknown metric '{other}' (expected angular or kl)")),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::Angular => "angular",
            MetricKind::SymmetricKl => "kl",
        })
    }
}

/// Frame-level distance used inside DTW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameMetric {
    pub kind: MetricKind,
    /// Probability floor; only read by the KL metric.
    pub epsilon: f64,
}

impl FrameMetric {
    pub fn new(kind: MetricKind, epsilon: f64) -> Self {
        FrameMetric { kind, epsilon }
    }

    pub fn angular() -> Self {
        FrameMetric::new(MetricKind::Angular, DEFAULT_EPSILON)
    }

    pub fn symmetric_kl(epsilon: f64) -> Self {
        FrameMetric::new(MetricKind::SymmetricKl, epsilon)
    }

    /// Checks the floor against a feature dimension.
    pub fn check(&self, dim: usize) -> Result<(), MetricError> {
        if self.kind == MetricKind::SymmetricKl
            && !(self.epsilon > 0.0 && self.epsilon * (dim as f64) < 1.0)
        {
            return Err(MetricError::InvalidEpsilon {
                epsilon: self.epsilon,
                dim,
            });
        }
        Ok(())
    }
}

/// Row-major view of `len()` frames of `dim()` values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frames<'a> {
    data: &'a [f64],
    dim: usize,
}

impl<'a> Frames<'a> {
    pub fn new(data: &'a [f64], dim: usize) -> Result<Self, MetricError> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(MetricError::BadShape {
                len: data.len(),
                dim,
            });
        }
        Ok(Frames { data, dim })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'a, f64> {
        self.data.chunks_exact(self.dim)
    }
}
