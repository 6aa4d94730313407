//! Shared domain types: tracklets, feature vectors and trajectories.
//!
//! All types here are immutable after construction and safe to share across
//! concurrent readers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real-valued feature vector of fixed dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Cosine similarity. Returns 0.0 when either vector has zero norm.
    pub fn cosine(&self, other: &FeatureVector) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let denom = self.norm() * other.norm();
        if denom == 0.0 {
            return Ok(0.0);
        }
        Ok(self.dot(other) / denom)
    }

    /// Element-wise mean of a non-empty list of equal-dimension vectors.
    pub fn mean(vectors: &[FeatureVector]) -> Result<FeatureVector> {
        let first = vectors.first().ok_or(Error::EmptyInput("feature list"))?;
        let dim = first.dim();
        let mut acc = vec![0.0; dim];
        for v in vectors {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.dim(),
                });
            }
            for (a, x) in acc.iter_mut().zip(&v.0) {
                *a += x;
            }
        }
        let n = vectors.len() as f64;
        Ok(FeatureVector(acc.into_iter().map(|a| a / n).collect()))
    }
}

/// One person's single-camera appearance: an id, a camera, a time span and
/// one embedding summarizing the appearance.
///
/// `identity_id` is a ground-truth label carried only for the simulator and
/// the evaluation metrics; inference stages never read it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tracklet {
    pub tracklet_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity_id: Option<String>,
    pub camera_id: String,
    /// Seconds since epoch. Edge logic uses `t_start` as the vertex time.
    pub t_start: f64,
    pub t_end: f64,
    pub embedding: FeatureVector,
}

impl Tracklet {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_start.is_finite() && self.t_end.is_finite()) || self.t_start > self.t_end {
            return Err(Error::InvalidInput(format!(
                "tracklet {}: invalid time span [{}, {}]",
                self.tracklet_id, self.t_start, self.t_end
            )));
        }
        if !self.embedding.is_finite() {
            return Err(Error::InvalidInput(format!(
                "tracklet {}: non-finite embedding",
                self.tracklet_id
            )));
        }
        Ok(())
    }
}

/// A time-ordered chain of tracklets attributed to one person, with a
/// query-similarity score assigned during retrieval.
///
/// Members are indices into the gallery slice the trajectory was built from,
/// sorted ascending by `t_start` (ties by `tracklet_id`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub members: Vec<usize>,
    pub score: f64,
}

impl Trajectory {
    /// Build a trajectory from gallery indices, sorting members by time.
    pub fn new(mut members: Vec<usize>, gallery: &[Tracklet]) -> Result<Trajectory> {
        if members.is_empty() {
            return Err(Error::EmptyInput("trajectory members"));
        }
        members.sort_by(|&a, &b| {
            let ta = &gallery[a];
            let tb = &gallery[b];
            ta.t_start
                .partial_cmp(&tb.t_start)
                .unwrap()
                .then_with(|| ta.tracklet_id.cmp(&tb.tracklet_id))
        });
        Ok(Trajectory { members, score: 0.0 })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}
