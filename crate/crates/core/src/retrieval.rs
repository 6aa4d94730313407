//! End-to-end query pipeline: candidate extraction → per-cluster graph →
//! mean-field refinement → trajectory solver → scoring → flattening.
//!
//! The query may be a bare feature vector or a tracklet. Query camera/time
//! are read only when Bayesian fusion is enabled; without it the pipeline
//! runs entirely on visual cues, so a query with nonsense space-time fields
//! retrieves exactly the same result.

use serde::{Deserialize, Serialize};

use crate::cluster::{hierarchical_cluster, select_candidates};
use crate::config::PipelineConfig;
use crate::crf::{build_adjacency_graph, mean_field_refine, prune};
use crate::error::{Error, Result};
use crate::network::CameraNetwork;
use crate::solver::{
    estimate_k, extract_trajectories, graph_search_solve, rnmf_solve, to_affinity,
};
use crate::stmodel::{st_probability, StModel};
use crate::types::{FeatureVector, Tracklet, Trajectory};

/// A retrieval query: a single feature, or a tracklet whose embedding (and,
/// for fusion, camera/time) is used.
#[derive(Debug, Clone)]
pub enum QueryInput {
    Feature(FeatureVector),
    Tracklet(Tracklet),
}

impl QueryInput {
    pub fn feature(&self) -> &FeatureVector {
        match self {
            QueryInput::Feature(f) => f,
            QueryInput::Tracklet(t) => &t.embedding,
        }
    }

    /// Camera and time, when the query carries them.
    pub fn space_time(&self) -> Option<(&str, f64)> {
        match self {
            QueryInput::Feature(_) => None,
            QueryInput::Tracklet(t) => Some((&t.camera_id, t.t_start)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Rnmf,
    /// DFS source-to-sink path enumeration.
    Gs,
    /// Take the visual clusters as trajectories unchanged.
    None,
}

#[derive(Debug, Clone)]
pub struct RetrieveOptions {
    pub use_crf: bool,
    pub solver: SolverKind,
    /// Multiply visual scores by spatio-temporal probabilities; requires a
    /// query with camera and time.
    pub use_bayes: bool,
    /// Flatten ranked trajectories into the final tracklet list. When off,
    /// the ranked list is the plain tracklet-level similarity ranking.
    pub rerank: bool,
    /// Keep only the top-k candidate clusters per query (all when `None`).
    pub candidate_top_k: Option<usize>,
    pub same_camera_edges: bool,
    /// Diagnostic override for the estimated trajectory count.
    pub force_k: Option<usize>,
    /// Simple-path cap for the graph-search solver.
    pub max_paths: usize,
}

impl Default for RetrieveOptions {
    fn default() -> Self {
        RetrieveOptions {
            use_crf: true,
            solver: SolverKind::Rnmf,
            use_bayes: false,
            rerank: true,
            candidate_top_k: None,
            same_camera_edges: true,
            force_k: None,
            max_paths: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    TrackletLevel,
    TrajectoryFlattened,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankedEntry {
    pub gallery_idx: usize,
    pub tracklet_id: String,
    pub score: f64,
}

/// Ordered retrieval output. For flattened lists the entry score is the
/// score of the trajectory the tracklet came from, so scores are
/// non-increasing in both provenances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankedList {
    pub entries: Vec<RankedEntry>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RetrievalDiagnostics {
    /// Gallery tracklets that entered some candidate graph.
    pub assigned: usize,
    /// Gallery indices dropped by candidate selection.
    pub excluded: Vec<usize>,
    /// Vertex pairs skipped because their cameras are disconnected.
    pub omitted_disconnected_pairs: usize,
    /// Total vertices over all candidate graphs (the ANOPN denominator).
    pub graph_vertex_count: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RetrievalResult {
    /// Trajectories sorted by query score, descending.
    pub trajectories: Vec<Trajectory>,
    pub ranked: RankedList,
    pub diagnostics: RetrievalDiagnostics,
}

/// Cosine similarity between the query and the mean member feature.
pub fn score_trajectory(
    query: &FeatureVector,
    trajectory: &Trajectory,
    gallery: &[Tracklet],
) -> Result<f64> {
    let members: Vec<FeatureVector> = trajectory
        .members
        .iter()
        .map(|&m| gallery[m].embedding.clone())
        .collect();
    query.cosine(&FeatureVector::mean(&members)?)
}

/// Bayesian fusion of a visual score with a spatio-temporal probability.
pub fn bayesian_fuse(score_v: f64, score_st: f64) -> f64 {
    score_v * score_st
}

/// Flatten scored trajectories into a duplicate-free tracklet ranking:
/// trajectories by score descending, members within each by query
/// similarity descending, first occurrence of each tracklet kept.
pub fn trajectory_rerank(
    query: &FeatureVector,
    trajectories: &[Trajectory],
    gallery: &[Tracklet],
) -> Result<RankedList> {
    let mut order: Vec<usize> = (0..trajectories.len()).collect();
    order.sort_by(|&a, &b| {
        trajectories[b]
            .score
            .partial_cmp(&trajectories[a].score)
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut seen = std::collections::HashSet::new();
    let mut entries = Vec::new();
    for &ti in &order {
        let traj = &trajectories[ti];
        let mut members: Vec<(f64, usize)> = Vec::with_capacity(traj.members.len());
        for &m in &traj.members {
            members.push((query.cosine(&gallery[m].embedding)?, m));
        }
        members.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap()
                .then_with(|| gallery[a.1].tracklet_id.cmp(&gallery[b.1].tracklet_id))
        });
        for (_, m) in members {
            if seen.insert(m) {
                entries.push(RankedEntry {
                    gallery_idx: m,
                    tracklet_id: gallery[m].tracklet_id.clone(),
                    score: traj.score,
                });
            }
        }
    }
    Ok(RankedList {
        entries,
        provenance: Provenance::TrajectoryFlattened,
    })
}

/// Generate trajectories for one candidate cluster set. This is the shared
/// query-independent stage: with top-k selection disabled it produces the
/// same trajectories for every query.
pub fn generate_trajectories(
    clusters: &[Vec<usize>],
    gallery: &[Tracklet],
    net: &CameraNetwork,
    model: &StModel,
    cfg: &PipelineConfig,
    options: &RetrieveOptions,
    diagnostics: &mut RetrievalDiagnostics,
) -> Result<Vec<Trajectory>> {
    let mut trajectories = Vec::new();
    for cluster in clusters {
        diagnostics.graph_vertex_count += cluster.len();
        if options.solver == SolverKind::None {
            trajectories
                .push(Trajectory::new(cluster.clone(), gallery).map_err(|e| e.in_stage("cluster"))?);
            continue;
        }
        let graph = build_adjacency_graph(
            cluster,
            gallery,
            model,
            net,
            options.same_camera_edges,
        )
        .map_err(|e| e.in_stage("graph"))?;
        diagnostics.omitted_disconnected_pairs += graph.omitted_disconnected;
        let refined = if options.use_crf {
            mean_field_refine(graph, cfg).map_err(|e| e.in_stage("crf"))?
        } else {
            graph.without_refinement().map_err(|e| e.in_stage("crf"))?
        };
        let pruned = prune(refined, cfg.kappa).map_err(|e| e.in_stage("prune"))?;
        match options.solver {
            SolverKind::Rnmf => {
                let affinity = to_affinity(&pruned).map_err(|e| e.in_stage("solver"))?;
                let k = match options.force_k {
                    Some(k) => k.min(cluster.len()),
                    None => estimate_k(&affinity, cfg.varpi).map_err(|e| e.in_stage("solver"))?,
                };
                if k == 0 {
                    diagnostics.warnings.push(format!(
                        "cluster of {} vertices produced K = 0 at varpi = {}; no trajectories emitted",
                        cluster.len(),
                        cfg.varpi
                    ));
                    continue;
                }
                let (assignment, _trace) =
                    rnmf_solve(&affinity, k, cfg).map_err(|e| e.in_stage("solver"))?;
                trajectories.extend(
                    extract_trajectories(&assignment, &pruned, gallery)
                        .map_err(|e| e.in_stage("solver"))?,
                );
            }
            SolverKind::Gs => {
                trajectories.extend(
                    graph_search_solve(&pruned, gallery, options.max_paths)
                        .map_err(|e| e.in_stage("solver"))?,
                );
            }
            SolverKind::None => unreachable!(),
        }
    }
    Ok(trajectories)
}

/// Full single-query retrieval: returns the scored trajectory list and the
/// flattened (or tracklet-level) ranking, plus diagnostics covering every
/// gallery tracklet.
pub fn retrieve(
    query: &QueryInput,
    gallery: &[Tracklet],
    net: &CameraNetwork,
    model: &StModel,
    cfg: &PipelineConfig,
    options: &RetrieveOptions,
) -> Result<RetrievalResult> {
    if gallery.is_empty() {
        return Err(Error::EmptyInput("gallery"));
    }
    if options.use_bayes && query.space_time().is_none() {
        return Err(Error::InvalidInput(
            "bayesian fusion requires a query with camera and time".to_string(),
        ));
    }

    let features: Vec<FeatureVector> = gallery.iter().map(|t| t.embedding.clone()).collect();
    let all_clusters =
        hierarchical_cluster(&features, cfg.hc_threshold).map_err(|e| e.in_stage("cluster"))?;
    let selected = select_candidates(
        query.feature(),
        &features,
        &all_clusters,
        options.candidate_top_k,
    )
    .map_err(|e| e.in_stage("cluster"))?;

    let mut diagnostics = RetrievalDiagnostics::default();
    let mut in_candidates = vec![false; gallery.len()];
    for cluster in &selected.clusters {
        for &m in cluster {
            in_candidates[m] = true;
        }
    }
    diagnostics.assigned = in_candidates.iter().filter(|&&b| b).count();
    diagnostics.excluded = in_candidates
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| (!b).then_some(i))
        .collect();

    let trajectories = generate_trajectories(
        &selected.clusters,
        gallery,
        net,
        model,
        cfg,
        options,
        &mut diagnostics,
    )?;

    let (trajectories, ranked) =
        score_and_rank(query, trajectories, gallery, net, model, options)?;
    Ok(RetrievalResult {
        trajectories,
        ranked,
        diagnostics,
    })
}

/// Score trajectories against one query, sort them, and produce the ranked
/// list (flattened or tracklet-level).
fn score_and_rank(
    query: &QueryInput,
    mut trajectories: Vec<Trajectory>,
    gallery: &[Tracklet],
    net: &CameraNetwork,
    model: &StModel,
    options: &RetrieveOptions,
) -> Result<(Vec<Trajectory>, RankedList)> {
    // Fuse with the spatio-temporal channel only when asked to; without
    // fusion the query's camera/time are never read.
    let st_score = |idx: usize| -> Result<f64> {
        let (camera, time) = query
            .space_time()
            .expect("fusion requires query space-time");
        let d = net
            .distance(camera, &gallery[idx].camera_id)
            .map_err(|e| e.in_stage("fusion"))?;
        st_probability(model, d, (time - gallery[idx].t_start).abs())
            .map_err(|e| e.in_stage("fusion"))
    };
    for traj in &mut trajectories {
        let visual = score_trajectory(query.feature(), traj, gallery)
            .map_err(|e| e.in_stage("score"))?;
        traj.score = if options.use_bayes {
            let mut st_sum = 0.0;
            for &m in &traj.members {
                st_sum += st_score(m)?;
            }
            bayesian_fuse(visual, st_sum / traj.members.len() as f64)
        } else {
            visual
        };
    }
    trajectories.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then_with(|| gallery[a.members[0]].tracklet_id.cmp(&gallery[b.members[0]].tracklet_id))
    });

    let ranked = if options.rerank {
        trajectory_rerank(query.feature(), &trajectories, gallery)
            .map_err(|e| e.in_stage("rerank"))?
    } else {
        // Plain tracklet-level ranking over the whole gallery.
        let mut entries = Vec::with_capacity(gallery.len());
        for (i, t) in gallery.iter().enumerate() {
            let visual = query
                .feature()
                .cosine(&t.embedding)
                .map_err(|e| e.in_stage("score"))?;
            let score = if options.use_bayes {
                bayesian_fuse(visual, st_score(i)?)
            } else {
                visual
            };
            entries.push(RankedEntry {
                gallery_idx: i,
                tracklet_id: t.tracklet_id.clone(),
                score,
            });
        }
        entries.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap()
                .then_with(|| a.tracklet_id.cmp(&b.tracklet_id))
        });
        RankedList {
            entries,
            provenance: Provenance::TrackletLevel,
        }
    };
    Ok((trajectories, ranked))
}

/// One query's outcome inside a benchmark run.
#[derive(Debug, Clone)]
pub struct BenchmarkQueryResult {
    pub query_id: String,
    pub trajectories: Vec<Trajectory>,
    pub ranked: RankedList,
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutcome {
    pub report: crate::metrics::EvalReport,
    pub queries: Vec<BenchmarkQueryResult>,
}

/// Run a probe set against a labeled gallery and score the results.
///
/// With `candidate_top_k` unset the trajectory stage is query-independent
/// (every query selects all clusters), so trajectories are generated once
/// and only scoring runs per query; otherwise the full per-query pipeline
/// executes. CMC is reported up to `max_rank`.
pub fn evaluate_benchmark(
    probes: &[Tracklet],
    gallery: &[Tracklet],
    ground: &[Trajectory],
    net: &CameraNetwork,
    model: &StModel,
    cfg: &PipelineConfig,
    options: &RetrieveOptions,
    max_rank: usize,
) -> Result<BenchmarkOutcome> {
    use crate::metrics::{anopn, cmc_map, trs, QueryMatches, QueryReport};

    let shared = if options.candidate_top_k.is_none() {
        let features: Vec<FeatureVector> =
            gallery.iter().map(|t| t.embedding.clone()).collect();
        let clusters = hierarchical_cluster(&features, cfg.hc_threshold)
            .map_err(|e| e.in_stage("cluster"))?;
        let mut diagnostics = RetrievalDiagnostics::default();
        let trajectories = generate_trajectories(
            &clusters.clusters,
            gallery,
            net,
            model,
            cfg,
            options,
            &mut diagnostics,
        )?;
        Some((trajectories, diagnostics))
    } else {
        None
    };

    let mut queries = Vec::with_capacity(probes.len());
    let mut matches = Vec::with_capacity(probes.len());
    let mut per_query = Vec::with_capacity(probes.len());
    let mut trs_sum = 0.0;
    let mut anopn_sum = 0.0;
    for probe in probes {
        let query = QueryInput::Tracklet(probe.clone());
        let (trajectories, ranked, vertex_count) = match &shared {
            Some((base, diagnostics)) => {
                let (t, r) = score_and_rank(
                    &query,
                    base.clone(),
                    gallery,
                    net,
                    model,
                    options,
                )?;
                (t, r, diagnostics.graph_vertex_count)
            }
            None => {
                let result = retrieve(&query, gallery, net, model, cfg, options)?;
                let count = result.diagnostics.graph_vertex_count;
                (result.trajectories, result.ranked, count)
            }
        };

        let identity = probe.identity_id.as_deref();
        let hits: Vec<bool> = ranked
            .entries
            .iter()
            .map(|e| gallery[e.gallery_idx].identity_id.as_deref() == identity)
            .collect();
        let total_positives = gallery
            .iter()
            .filter(|t| t.identity_id.as_deref() == identity)
            .count();
        let first_hit_rank = hits.iter().position(|&h| h).map(|r| r + 1);
        let ground_for_query: Vec<Trajectory> = ground
            .iter()
            .filter(|t| gallery[t.members[0]].identity_id.as_deref() == identity)
            .cloned()
            .collect();
        let query_trs = trs(&ground_for_query, &trajectories, gallery);
        trs_sum += query_trs;
        anopn_sum += anopn(&trajectories, vertex_count.max(1));

        // AP for the report row; the dataset mAP comes from cmc_map below.
        let mut precision_sum = 0.0;
        let mut seen = 0usize;
        for (i, &h) in hits.iter().enumerate() {
            if h {
                seen += 1;
                precision_sum += seen as f64 / (i + 1) as f64;
            }
        }
        per_query.push(QueryReport {
            query_id: probe.tracklet_id.clone(),
            ap: if total_positives > 0 {
                precision_sum / total_positives as f64
            } else {
                0.0
            },
            first_hit_rank,
            trs: query_trs,
        });
        matches.push(QueryMatches {
            hits,
            total_positives,
        });
        queries.push(BenchmarkQueryResult {
            query_id: probe.tracklet_id.clone(),
            trajectories,
            ranked,
        });
    }

    let cm = cmc_map(&matches, max_rank);
    let n = probes.len().max(1) as f64;
    let report = crate::metrics::EvalReport {
        cmc: cm.cmc,
        map: cm.map,
        trs: trs_sum / n,
        anopn: anopn_sum / n,
        excluded_queries: cm.excluded,
        per_query,
    };
    Ok(BenchmarkOutcome { report, queries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::{generate_scenario, ScenarioSpec};
    use crate::stmodel::train_st_model;

    fn fv(values: &[f64]) -> FeatureVector {
        FeatureVector(values.to_vec())
    }

    fn tracklet(id: &str, feature: &[f64], t: f64) -> Tracklet {
        Tracklet {
            tracklet_id: id.to_string(),
            identity_id: None,
            camera_id: "c00".to_string(),
            t_start: t,
            t_end: t + 1.0,
            embedding: fv(feature),
        }
    }

    #[test]
    fn score_trajectory_self_and_orthogonal() {
        let gallery = vec![
            tracklet("a", &[1.0, 0.0], 0.0),
            tracklet("b", &[0.0, 1.0], 1.0),
        ];
        let t = Trajectory::new(vec![0], &gallery).unwrap();
        assert_eq!(
            score_trajectory(&fv(&[1.0, 0.0]), &t, &gallery).unwrap(),
            1.0
        );
        assert_eq!(
            score_trajectory(&fv(&[0.0, 1.0]), &t, &gallery).unwrap(),
            0.0
        );
        assert!(score_trajectory(&fv(&[1.0]), &t, &gallery).is_err());
    }

    #[test]
    fn score_matches_mean_then_cosine_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let gallery: Vec<Tracklet> = (0..5)
                .map(|i| {
                    tracklet(
                        &format!("t{i}"),
                        &[
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                        ],
                        i as f64,
                    )
                })
                .collect();
            let members: Vec<usize> = (0..5).filter(|_| rng.gen_bool(0.6)).collect();
            let members = if members.is_empty() { vec![0] } else { members };
            let t = Trajectory::new(members.clone(), &gallery).unwrap();
            let query = fv(&[rng.gen_range(-1.0..1.0), 0.3, -0.4]);
            let got = score_trajectory(&query, &t, &gallery).unwrap();
            let vectors: Vec<FeatureVector> = members
                .iter()
                .map(|&m| gallery[m].embedding.clone())
                .collect();
            let expected = query
                .cosine(&FeatureVector::mean(&vectors).unwrap())
                .unwrap();
            assert!((got - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn fuse_is_the_product() {
        assert_eq!(bayesian_fuse(0.8, 1.0), 0.8);
        assert_eq!(bayesian_fuse(0.8, 0.0), 0.0);
        assert_eq!(bayesian_fuse(0.5, 0.5), 0.25);
    }

    #[test]
    fn rerank_single_trajectory_orders_by_similarity() {
        let gallery = vec![
            tracklet("a", &[1.0, 0.1], 0.0),
            tracklet("b", &[0.5, 0.8], 1.0),
        ];
        let mut t = Trajectory::new(vec![0, 1], &gallery).unwrap();
        t.score = 0.9;
        let ranked = trajectory_rerank(&fv(&[1.0, 0.0]), &[t], &gallery).unwrap();
        let ids: Vec<&str> = ranked.entries.iter().map(|e| e.tracklet_id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b"]);
        assert_eq!(ranked.provenance, Provenance::TrajectoryFlattened);
    }

    #[test]
    fn rerank_drops_duplicates_keeping_first() {
        let gallery = vec![
            tracklet("a", &[1.0, 0.0], 0.0),
            tracklet("b", &[0.9, 0.1], 1.0),
            tracklet("c", &[0.0, 1.0], 2.0),
        ];
        let mut t1 = Trajectory::new(vec![0, 1], &gallery).unwrap();
        t1.score = 0.8;
        let mut t2 = Trajectory::new(vec![1, 2], &gallery).unwrap();
        t2.score = 0.6;
        let ranked = trajectory_rerank(&fv(&[1.0, 0.0]), &[t1, t2], &gallery).unwrap();
        let ids: Vec<&str> = ranked.entries.iter().map(|e| e.tracklet_id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b", "c"]);
        // Scores are trajectory scores, hence non-increasing.
        for w in ranked.entries.windows(2) {
            assert!(w[0].score >= w[1].score);
        }
    }

    #[test]
    fn rerank_disjoint_is_concatenation_in_score_order() {
        let gallery = vec![
            tracklet("a", &[1.0, 0.0], 0.0),
            tracklet("b", &[0.0, 1.0], 1.0),
        ];
        let mut t1 = Trajectory::new(vec![0], &gallery).unwrap();
        t1.score = 0.2;
        let mut t2 = Trajectory::new(vec![1], &gallery).unwrap();
        t2.score = 0.7;
        let ranked = trajectory_rerank(&fv(&[1.0, 0.0]), &[t1, t2], &gallery).unwrap();
        let ids: Vec<&str> = ranked.entries.iter().map(|e| e.tracklet_id.as_str()).collect();
        assert_eq!(ids, vec!["b", "a"]);
    }

    fn scenario_fixture() -> (crate::simgen::Scenario, StModel) {
        let spec = ScenarioSpec {
            n_identities: 10,
            window: 1500.0,
            seed: 5,
            ..ScenarioSpec::default()
        };
        let scenario = generate_scenario(&spec).unwrap();
        let model = train_st_model(&scenario.st_samples, 400, 0.5, 11).unwrap();
        (scenario, model)
    }

    #[test]
    fn retrieve_is_deterministic_and_covers_gallery() {
        let (scenario, model) = scenario_fixture();
        let cfg = PipelineConfig::default();
        let options = RetrieveOptions::default();
        let query = QueryInput::Tracklet(scenario.probes[0].clone());
        let a = retrieve(
            &query,
            &scenario.gallery,
            &scenario.network,
            &model,
            &cfg,
            &options,
        )
        .unwrap();
        let b = retrieve(
            &query,
            &scenario.gallery,
            &scenario.network,
            &model,
            &cfg,
            &options,
        )
        .unwrap();
        assert_eq!(
            serde_json::to_string(&a.ranked).unwrap(),
            serde_json::to_string(&b.ranked).unwrap()
        );
        // Every gallery tracklet is accounted for.
        assert_eq!(
            a.diagnostics.assigned + a.diagnostics.excluded.len(),
            scenario.gallery.len()
        );
        // Flattened list covers each assigned tracklet exactly once (RNMF
        // partitions the candidate vertices).
        let mut seen = std::collections::HashSet::new();
        for e in &a.ranked.entries {
            assert!(seen.insert(e.gallery_idx), "duplicate in flattened list");
        }
        let distinct: std::collections::HashSet<usize> = a
            .trajectories
            .iter()
            .flat_map(|t| t.members.iter().copied())
            .collect();
        assert_eq!(seen.len(), distinct.len());
    }

    #[test]
    fn bayes_off_never_reads_query_space_time() {
        let (scenario, model) = scenario_fixture();
        let cfg = PipelineConfig::default();
        let options = RetrieveOptions::default();
        let probe = &scenario.probes[1];
        let clean = QueryInput::Feature(probe.embedding.clone());
        let mut poisoned_tracklet = probe.clone();
        poisoned_tracklet.camera_id = "no-such-camera".to_string();
        poisoned_tracklet.t_start = -1.0e12;
        poisoned_tracklet.t_end = 1.0e12;
        let poisoned = QueryInput::Tracklet(poisoned_tracklet);
        let a = retrieve(
            &clean,
            &scenario.gallery,
            &scenario.network,
            &model,
            &cfg,
            &options,
        )
        .unwrap();
        let b = retrieve(
            &poisoned,
            &scenario.gallery,
            &scenario.network,
            &model,
            &cfg,
            &options,
        )
        .unwrap();
        assert_eq!(
            serde_json::to_string(&a.ranked).unwrap(),
            serde_json::to_string(&b.ranked).unwrap()
        );
    }

    #[test]
    fn bayes_requires_space_time() {
        let (scenario, model) = scenario_fixture();
        let cfg = PipelineConfig::default();
        let options = RetrieveOptions {
            use_bayes: true,
            ..RetrieveOptions::default()
        };
        let query = QueryInput::Feature(scenario.probes[0].embedding.clone());
        assert!(retrieve(
            &query,
            &scenario.gallery,
            &scenario.network,
            &model,
            &cfg,
            &options,
        )
        .is_err());
    }

    #[test]
    fn forcing_k_one_degenerates_to_cluster_mean_ranking() {
        let (scenario, model) = scenario_fixture();
        let cfg = PipelineConfig::default();
        let options = RetrieveOptions {
            use_crf: false,
            rerank: true,
            force_k: Some(1),
            ..RetrieveOptions::default()
        };
        let query = QueryInput::Feature(scenario.probes[0].embedding.clone());
        let result = retrieve(
            &query,
            &scenario.gallery,
            &scenario.network,
            &model,
            &cfg,
            &options,
        )
        .unwrap();

        let cluster_options = RetrieveOptions {
            solver: SolverKind::None,
            rerank: true,
            ..RetrieveOptions::default()
        };
        let clusters = retrieve(
            &query,
            &scenario.gallery,
            &scenario.network,
            &model,
            &cfg,
            &cluster_options,
        )
        .unwrap();
        // K = 1 per cluster merges each cluster into one trajectory, which
        // is exactly the clusters-as-trajectories ranking.
        assert_eq!(
            serde_json::to_string(&result.ranked).unwrap(),
            serde_json::to_string(&clusters.ranked).unwrap()
        );
    }

    #[test]
    fn tracklet_level_list_scores_non_increasing() {
        let (scenario, model) = scenario_fixture();
        let cfg = PipelineConfig::default();
        let options = RetrieveOptions {
            rerank: false,
            ..RetrieveOptions::default()
        };
        let query = QueryInput::Feature(scenario.probes[2].embedding.clone());
        let result = retrieve(
            &query,
            &scenario.gallery,
            &scenario.network,
            &model,
            &cfg,
            &options,
        )
        .unwrap();
        assert_eq!(result.ranked.provenance, Provenance::TrackletLevel);
        assert_eq!(result.ranked.entries.len(), scenario.gallery.len());
        for w in result.ranked.entries.windows(2) {
            assert!(w[0].score >= w[1].score);
        }
    }

    #[test]
    fn empty_gallery_is_rejected() {
        let (scenario, model) = scenario_fixture();
        let cfg = PipelineConfig::default();
        let query = QueryInput::Feature(scenario.probes[0].embedding.clone());
        assert!(matches!(
            retrieve(
                &query,
                &[],
                &scenario.network,
                &model,
                &cfg,
                &RetrieveOptions::default(),
            ),
            Err(Error::EmptyInput(_))
        ));
    }
}
