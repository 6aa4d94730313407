//! Retrieval and trajectory-quality evaluation: CMC, mAP, the
//! rank-discounted trajectory score TRS, and the overlap measure ANOPN.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Tracklet, Trajectory};

/// Per-query match flags over a ranked gallery list, plus the number of
/// positives the gallery holds for this query (which may exceed the number
/// of ranked hits when the list is truncated).
#[derive(Debug, Clone)]
pub struct QueryMatches {
    pub hits: Vec<bool>,
    pub total_positives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmcMapResult {
    /// cmc[k] is the fraction of queries whose first hit has rank <= k+1.
    pub cmc: Vec<f64>,
    pub map: f64,
    /// Queries dropped because the gallery holds no positive for them.
    pub excluded: usize,
}

/// Single-gallery-shot CMC and mean average precision.
///
/// AP per query sums precision at each hit and divides by the number of
/// positives in the gallery, so positives missing from a truncated list
/// count as misses.
pub fn cmc_map(queries: &[QueryMatches], max_rank: usize) -> CmcMapResult {
    let mut cmc = vec![0.0; max_rank];
    let mut ap_sum = 0.0;
    let mut included = 0usize;
    let mut excluded = 0usize;
    for q in queries {
        if q.total_positives == 0 {
            excluded += 1;
            continue;
        }
        included += 1;
        let mut hits_seen = 0usize;
        let mut precision_sum = 0.0;
        let mut first_hit: Option<usize> = None;
        for (idx, &hit) in q.hits.iter().enumerate() {
            if hit {
                hits_seen += 1;
                precision_sum += hits_seen as f64 / (idx + 1) as f64;
                first_hit.get_or_insert(idx);
            }
        }
        ap_sum += precision_sum / q.total_positives as f64;
        if let Some(rank0) = first_hit {
            for slot in cmc.iter_mut().skip(rank0) {
                *slot += 1.0;
            }
        }
    }
    if included > 0 {
        for slot in &mut cmc {
            *slot /= included as f64;
        }
    }
    CmcMapResult {
        cmc,
        map: if included > 0 {
            ap_sum / included as f64
        } else {
            0.0
        },
        excluded,
    }
}

/// For every tracklet, the number of predicted trajectories containing it.
fn occurrence_counts(predicted: &[Trajectory]) -> HashMap<usize, usize> {
    let mut counts = HashMap::new();
    for t in predicted {
        let unique: BTreeSet<usize> = t.members.iter().copied().collect();
        for m in unique {
            *counts.entry(m).or_insert(0) += 1;
        }
    }
    counts
}

/// Node weight w(T) = 1 / (number of predicted trajectories containing T).
pub fn node_weight(member: usize, predicted: &[Trajectory], gallery: &[Tracklet]) -> Result<f64> {
    let count = predicted
        .iter()
        .filter(|t| t.members.contains(&member))
        .count();
    if count == 0 {
        return Err(Error::AbsentFromPredictions(
            gallery[member].tracklet_id.clone(),
        ));
    }
    Ok(1.0 / count as f64)
}

/// Weighted intersection-over-union σ between a single-identity ground
/// trajectory and one predicted trajectory.
///
/// Intersection: Σ over predicted members of w(T)·1[identity matches];
/// union: plain count of distinct tracklets in either trajectory.
pub fn trajectory_similarity(
    ground: &Trajectory,
    predicted: &Trajectory,
    predicted_all: &[Trajectory],
    gallery: &[Tracklet],
) -> f64 {
    let ground_identity = gallery[ground.members[0]].identity_id.as_deref();
    let counts = occurrence_counts(predicted_all);
    let mut intersection = 0.0;
    for &m in &predicted.members {
        if gallery[m].identity_id.as_deref() == ground_identity {
            let n = counts.get(&m).copied().unwrap_or(1).max(1);
            intersection += 1.0 / n as f64;
        }
    }
    let union: BTreeSet<usize> = ground
        .members
        .iter()
        .chain(predicted.members.iter())
        .copied()
        .collect();
    intersection / union.len() as f64
}

/// Trajectory rank score for one query:
/// TRS = Σ_i Σ_j σ(S_gi, S_oj) / r_j² with r_j the 1-based prediction rank.
/// Returns 0 for an empty prediction list.
pub fn trs(ground: &[Trajectory], predicted_ranked: &[Trajectory], gallery: &[Tracklet]) -> f64 {
    let mut score = 0.0;
    for g in ground {
        for (j, p) in predicted_ranked.iter().enumerate() {
            let rank = (j + 1) as f64;
            score += trajectory_similarity(g, p, predicted_ranked, gallery) / (rank * rank);
        }
    }
    score
}

/// Average number of occurrences per node: total trajectory members divided
/// by the number of vertices in the candidate graphs. 1.0 means the
/// predictions partition the vertex set.
pub fn anopn(predicted: &[Trajectory], graph_vertex_count: usize) -> f64 {
    assert!(graph_vertex_count >= 1, "gallery size must be >= 1");
    let total: usize = predicted.iter().map(|t| t.members.len()).sum();
    total as f64 / graph_vertex_count as f64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryReport {
    pub query_id: String,
    pub ap: f64,
    /// 1-based rank of the first positive, when any was ranked.
    pub first_hit_rank: Option<usize>,
    pub trs: f64,
}

/// Dataset-level evaluation summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub cmc: Vec<f64>,
    pub map: f64,
    /// Mean per-query TRS.
    pub trs: f64,
    pub anopn: f64,
    pub excluded_queries: usize,
    pub per_query: Vec<QueryReport>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::FeatureVector;

    fn gallery_with_identities(ids: &[&str]) -> Vec<Tracklet> {
        ids.iter()
            .enumerate()
            .map(|(i, id)| Tracklet {
                tracklet_id: format!("t{i:04}"),
                identity_id: Some(id.to_string()),
                camera_id: "c0".to_string(),
                t_start: i as f64,
                t_end: i as f64 + 0.5,
                embedding: FeatureVector(vec![1.0]),
            })
            .collect()
    }

    fn traj(members: Vec<usize>, gallery: &[Tracklet]) -> Trajectory {
        Trajectory::new(members, gallery).unwrap()
    }

    #[test]
    fn perfect_list_has_unit_ap_and_cmc() {
        let q = QueryMatches {
            hits: vec![true, true],
            total_positives: 2,
        };
        let r = cmc_map(&[q], 2);
        assert_eq!(r.map, 1.0);
        assert_eq!(r.cmc, vec![1.0, 1.0]);
    }

    #[test]
    fn single_positive_at_rank_two() {
        let q = QueryMatches {
            hits: vec![false, true, false, false],
            total_positives: 1,
        };
        let r = cmc_map(&[q], 4);
        assert_eq!(r.map, 0.5);
        assert_eq!(r.cmc, vec![0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn zero_positive_queries_are_excluded_and_counted() {
        let qs = vec![
            QueryMatches {
                hits: vec![true],
                total_positives: 1,
            },
            QueryMatches {
                hits: vec![false],
                total_positives: 0,
            },
        ];
        let r = cmc_map(&qs, 1);
        assert_eq!(r.excluded, 1);
        assert_eq!(r.map, 1.0);
    }

    #[test]
    fn ap_matches_brute_force_on_random_lists() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let n = rng.gen_range(1..=20);
            let hits: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
            let positives = hits.iter().filter(|&&h| h).count();
            if positives == 0 {
                continue;
            }
            let r = cmc_map(
                &[QueryMatches {
                    hits: hits.clone(),
                    total_positives: positives,
                }],
                n,
            );
            // Brute force: precision at each hit, averaged over positives.
            let mut expected = 0.0;
            let mut seen = 0;
            for (i, &h) in hits.iter().enumerate() {
                if h {
                    seen += 1;
                    expected += seen as f64 / (i + 1) as f64;
                }
            }
            expected /= positives as f64;
            assert!((r.map - expected).abs() < 1e-12);
            // CMC is non-decreasing.
            for w in r.cmc.windows(2) {
                assert!(w[1] >= w[0]);
            }
        }
    }

    #[test]
    fn node_weight_reciprocal_of_occurrences() {
        let gallery = gallery_with_identities(&["a", "a", "b"]);
        let p1 = traj(vec![0, 1], &gallery);
        let p2 = traj(vec![0, 2], &gallery);
        let predicted = vec![p1, p2];
        assert_eq!(node_weight(1, &predicted, &gallery).unwrap(), 1.0);
        assert_eq!(node_weight(0, &predicted, &gallery).unwrap(), 0.5);
        let gallery2 = gallery_with_identities(&["a", "a", "b", "c"]);
        assert!(node_weight(3, &predicted, &gallery2).is_err());
    }

    #[test]
    fn node_weight_matches_counting_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(32);
        let gallery = gallery_with_identities(&["a"; 10]);
        for _ in 0..20 {
            let predicted: Vec<Trajectory> = (0..rng.gen_range(1..5))
                .map(|_| {
                    let members: Vec<usize> = (0..10).filter(|_| rng.gen_bool(0.4)).collect();
                    if members.is_empty() {
                        traj(vec![0], &gallery)
                    } else {
                        traj(members, &gallery)
                    }
                })
                .collect();
            for m in 0..10 {
                let count = predicted.iter().filter(|t| t.members.contains(&m)).count();
                match node_weight(m, &predicted, &gallery) {
                    Ok(w) => assert_eq!(w, 1.0 / count as f64),
                    Err(_) => assert_eq!(count, 0),
                }
            }
        }
    }

    #[test]
    fn sigma_exact_prediction_is_one() {
        let gallery = gallery_with_identities(&["a", "a", "b"]);
        let g = traj(vec![0, 1], &gallery);
        let p = traj(vec![0, 1], &gallery);
        let all = vec![p.clone(), traj(vec![2], &gallery)];
        assert_eq!(trajectory_similarity(&g, &p, &all, &gallery), 1.0);
    }

    #[test]
    fn sigma_disjoint_identities_is_zero() {
        let gallery = gallery_with_identities(&["a", "a", "b", "b"]);
        let g = traj(vec![0, 1], &gallery);
        let p = traj(vec![2, 3], &gallery);
        let all = vec![p.clone()];
        assert_eq!(trajectory_similarity(&g, &p, &all, &gallery), 0.0);
    }

    #[test]
    fn sigma_hand_computed_overlap_case() {
        // S_g = {0, 1}; S_o = {0, 2} with identity(2) != a; tracklet 0 also
        // sits in one other predicted trajectory, so w(0) = 1/2.
        // intersection = 1/2, union = |{0,1,2}| = 3, sigma = 1/6.
        let gallery = gallery_with_identities(&["a", "a", "x", "y"]);
        let g = traj(vec![0, 1], &gallery);
        let p = traj(vec![0, 2], &gallery);
        let other = traj(vec![0, 3], &gallery);
        let all = vec![p.clone(), other];
        let sigma = trajectory_similarity(&g, &p, &all, &gallery);
        assert!((sigma - 1.0 / 6.0).abs() < 1e-15, "{sigma}");
    }

    #[test]
    fn trs_perfect_prediction_at_rank_one() {
        let gallery = gallery_with_identities(&["a", "a"]);
        let g = vec![traj(vec![0, 1], &gallery)];
        let p = vec![traj(vec![0, 1], &gallery)];
        assert_eq!(trs(&g, &p, &gallery), 1.0);
    }

    #[test]
    fn trs_perfect_prediction_at_rank_two_only() {
        let gallery = gallery_with_identities(&["a", "a", "x", "y"]);
        let g = vec![traj(vec![0, 1], &gallery)];
        let p = vec![traj(vec![2, 3], &gallery), traj(vec![0, 1], &gallery)];
        assert_eq!(trs(&g, &p, &gallery), 0.25);
    }

    #[test]
    fn trs_empty_prediction_is_zero() {
        let gallery = gallery_with_identities(&["a"]);
        let g = vec![traj(vec![0], &gallery)];
        assert_eq!(trs(&g, &[], &gallery), 0.0);
    }

    #[test]
    fn anopn_partition_is_one_and_diamond_is_1_5() {
        let gallery = gallery_with_identities(&["a", "a", "b", "b"]);
        let partition = vec![traj(vec![0, 1], &gallery), traj(vec![2, 3], &gallery)];
        assert_eq!(anopn(&partition, 4), 1.0);
        let diamond = vec![traj(vec![0, 1, 3], &gallery), traj(vec![0, 2, 3], &gallery)];
        assert_eq!(anopn(&diamond, 4), 1.5);
        assert_eq!(anopn(&[], 4), 0.0);
    }
}
