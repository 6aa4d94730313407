//! Tracklet feature aggregation and query-relevant candidate extraction.
//!
//! Gallery tracklets are grouped by agglomerative average-linkage clustering
//! under cosine distance. Merging stops once the minimum inter-cluster
//! distance exceeds the threshold. Ties are broken toward the lowest index
//! pair, which makes the partition deterministic and, absent exact distance
//! ties, independent of input order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::FeatureVector;

/// Clusters of tracklet indices over some feature list. Clusters are
/// disjoint, non-empty, and listed in a canonical order (by smallest member
/// index) unless produced by [`select_candidates`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub clusters: Vec<Vec<usize>>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Total number of tracklets across all clusters.
    pub fn member_count(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }
}

/// Mean of per-frame features: the tracklet-level feature vector.
pub fn tracklet_feature(frame_features: &[FeatureVector]) -> Result<FeatureVector> {
    FeatureVector::mean(frame_features)
}

fn cosine_distance(a: &FeatureVector, b: &FeatureVector) -> f64 {
    1.0 - a.dot(b) / (a.norm() * b.norm())
}

/// Average-linkage agglomerative clustering under cosine distance.
pub fn hierarchical_cluster(
    features: &[FeatureVector],
    threshold: f64,
) -> Result<CandidateSet> {
    if features.is_empty() {
        return Err(Error::EmptyInput("features"));
    }
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "threshold must be finite and >= 0, got {threshold}"
        )));
    }
    let dim = features[0].dim();
    for (i, f) in features.iter().enumerate() {
        if f.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: f.dim(),
            });
        }
        if f.norm() == 0.0 {
            return Err(Error::ZeroNormVector { index: i });
        }
        if !f.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite feature at index {i}"
            )));
        }
    }

    let n = features.len();
    // Average-linkage distances maintained with the Lance-Williams update:
    // d(A∪B, C) = (|A| d(A,C) + |B| d(B,C)) / (|A|+|B|).
    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = cosine_distance(&features[i], &features[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut active: Vec<bool> = vec![true; n];

    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !active[j] {
                    continue;
                }
                let d = dist[i * n + j];
                // Strict less-than keeps the lowest (i, j) on ties.
                if best.map_or(true, |(bd, _, _)| d < bd) {
                    best = Some((d, i, j));
                }
            }
        }
        let Some((d, i, j)) = best else { break };
        if d > threshold {
            break;
        }
        let si = members[i].len() as f64;
        let sj = members[j].len() as f64;
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let merged = (si * dist[i * n + k] + sj * dist[j * n + k]) / (si + sj);
            dist[i * n + k] = merged;
            dist[k * n + i] = merged;
        }
        let moved = std::mem::take(&mut members[j]);
        members[i].extend(moved);
        active[j] = false;
    }

    let mut clusters: Vec<Vec<usize>> = members
        .into_iter()
        .zip(active)
        .filter_map(|(mut m, alive)| {
            if alive {
                m.sort_unstable();
                Some(m)
            } else {
                None
            }
        })
        .collect();
    clusters.sort_by_key(|c| c[0]);
    Ok(CandidateSet { clusters })
}

/// Rank clusters by cosine similarity between the query and the cluster
/// mean, descending, keeping the top `k` (all when `k` is `None`). Cluster
/// contents are untouched.
pub fn select_candidates(
    query: &FeatureVector,
    features: &[FeatureVector],
    set: &CandidateSet,
    k: Option<usize>,
) -> Result<CandidateSet> {
    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(set.clusters.len());
    for (ci, cluster) in set.clusters.iter().enumerate() {
        let vectors: Vec<FeatureVector> =
            cluster.iter().map(|&i| features[i].clone()).collect();
        let mean = FeatureVector::mean(&vectors)?;
        let sim = query.cosine(&mean)?;
        scored.push((sim, ci));
    }
    // Descending by similarity; ties keep the original cluster order.
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let keep = k.unwrap_or(scored.len()).min(scored.len());
    Ok(CandidateSet {
        clusters: scored[..keep]
            .iter()
            .map(|&(_, ci)| set.clusters[ci].clone())
            .collect(),
    })
}
