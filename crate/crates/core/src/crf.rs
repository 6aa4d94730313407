//! Spatio-temporal adjacency graph and mean-field refinement.
//!
//! A candidate cluster becomes a graph whose vertices are tracklets and
//! whose edge weights start as the raw spatio-temporal probabilities
//! Q(e) = ψ(d, Δt). Mean-field iteration then replaces each weight with
//!
//! ```text
//! Λ'(e_ij) = exp(ι[ρ1(Λ(e_ij) − t1) + ρ2(Υ(v_i,v_j) − t2)]) / Z
//! Z        = exp(ι[ρ1(1 − t1) + ρ2(1 − t2)])
//! ```
//!
//! where Υ(v_i,v_j) is the cosine similarity of the two vertices' weight
//! rows — how consistently the rest of the graph sees them as belonging
//! together. All updates within an iteration are synchronous, so the result
//! does not depend on edge iteration order. Self-weights are always 0 and
//! weight lookup ignores edge direction, which makes the isolated pair
//! (Υ = 0) suppress even a confident edge.
//!
//! The module also carries the first-iteration gain analysis: the closed
//! form ℵ(Q, π) = ΓQ − ln Q − ln Z − ι(ρ1 t1 + ρ2 t2) + π predicts whether
//! refinement will raise an edge, and a grid emitter produces the data for
//! heatmap / critical-curve plots.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::network::CameraNetwork;
use crate::stmodel::{st_probability, StModel};
use crate::types::Tracklet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphStage {
    /// Raw Q weights straight from ψ.
    Raw,
    /// Λ weights after mean-field refinement.
    Refined,
    /// Edges below κ removed.
    Pruned,
}

impl GraphStage {
    pub fn name(self) -> &'static str {
        match self {
            GraphStage::Raw => "raw",
            GraphStage::Refined => "refined",
            GraphStage::Pruned => "pruned",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphVertex {
    /// Index of the tracklet in the gallery this graph was built from.
    pub gallery_idx: usize,
    pub tracklet_id: String,
    pub camera_id: String,
    /// Vertex time attribute: the tracklet's `t_start`.
    pub t: f64,
}

/// Directed spatio-temporal adjacency graph over one candidate cluster.
///
/// Weights are stored symmetrically with a zero diagonal; the direction of
/// an edge follows time order (`t`, then `tracklet_id` on ties) and is
/// derived on demand.
#[derive(Debug, Clone)]
pub struct TrajectoryGraph {
    vertices: Vec<GraphVertex>,
    /// Edge list as index pairs (a < b); weights live in `w`.
    edges: Vec<(usize, usize)>,
    w: DMatrix<f64>,
    stage: GraphStage,
    /// Vertex pairs skipped because their cameras are disconnected.
    pub omitted_disconnected: usize,
}

impl TrajectoryGraph {
    /// Build a graph from explicit edge weights (weights in [0,1]).
    pub fn from_edge_weights(
        vertices: Vec<GraphVertex>,
        edges: &[(usize, usize, f64)],
    ) -> Result<TrajectoryGraph> {
        let n = vertices.len();
        let mut w = DMatrix::zeros(n, n);
        let mut list = Vec::with_capacity(edges.len());
        for &(i, j, weight) in edges {
            if i == j || i >= n || j >= n {
                return Err(Error::InvalidInput(format!("bad edge ({i},{j})")));
            }
            if !(0.0..=1.0).contains(&weight) {
                return Err(Error::InvalidInput(format!(
                    "edge weight {weight} outside [0,1]"
                )));
            }
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            w[(a, b)] = weight;
            w[(b, a)] = weight;
            list.push((a, b));
        }
        Ok(TrajectoryGraph {
            vertices,
            edges: list,
            w,
            stage: GraphStage::Raw,
            omitted_disconnected: 0,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[GraphVertex] {
        &self.vertices
    }

    pub fn stage(&self) -> GraphStage {
        self.stage
    }

    /// Undirected weight lookup; 0 for absent edges and the diagonal.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[(i, j)]
    }

    /// Edges with their weights, as stored (a < b by index).
    pub fn weighted_edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(move |&(a, b)| (a, b, self.w[(a, b)]))
    }

    /// Edge endpoints ordered by time (ties by tracklet id): the direction
    /// used for path search.
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .map(|&(a, b)| {
                let va = &self.vertices[a];
                let vb = &self.vertices[b];
                let a_first = match va.t.partial_cmp(&vb.t).unwrap() {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Greater => false,
                    std::cmp::Ordering::Equal => va.tracklet_id <= vb.tracklet_id,
                };
                if a_first {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect()
    }

    /// Spatio-temporal consistency Υ(v_i, v_j): cosine similarity between
    /// the two vertices' weight rows. Returns 0 when either row is all zero.
    pub fn upsilon(&self, i: usize, j: usize) -> f64 {
        assert!(i != j, "upsilon requires distinct vertices");
        let ri = self.w.row(i);
        let rj = self.w.row(j);
        let num = ri.dot(&rj);
        let ni = ri.norm();
        let nj = rj.norm();
        if ni == 0.0 || nj == 0.0 {
            return 0.0;
        }
        (num / (ni * nj)).clamp(0.0, 1.0)
    }

    /// Mark a raw graph as refined without changing any weight. This is the
    /// CRF-off pipeline path (zero mean-field iterations, Λ = Q).
    pub fn without_refinement(mut self) -> Result<TrajectoryGraph> {
        if self.stage != GraphStage::Raw {
            return Err(Error::StageMismatch {
                expected: "raw",
                got: self.stage.name(),
            });
        }
        self.stage = GraphStage::Refined;
        Ok(self)
    }
}

/// One synchronous mean-field update of a single edge weight.
pub fn edge_update(lambda: f64, upsilon: f64, cfg: &PipelineConfig) -> f64 {
    let exponent = cfg.iota * (cfg.rho1 * (lambda - cfg.t1) + cfg.rho2 * (upsilon - cfg.t2))
        - cfg.ln_z();
    exponent.exp().min(1.0)
}

/// Run `cfg.crf_iterations` synchronous mean-field iterations over a raw
/// graph. Every output weight lies in (0,1].
pub fn mean_field_refine(
    mut graph: TrajectoryGraph,
    cfg: &PipelineConfig,
) -> Result<TrajectoryGraph> {
    if graph.stage != GraphStage::Raw {
        return Err(Error::StageMismatch {
            expected: "raw",
            got: graph.stage.name(),
        });
    }
    for _ in 0..cfg.crf_iterations {
        // All Υ values come from the previous iterate: the row Gram matrix
        // is computed before any weight is written.
        let gram = &graph.w * &graph.w;
        let norms: Vec<f64> = (0..graph.vertex_count())
            .map(|i| graph.w.row(i).norm())
            .collect();
        let mut next = graph.w.clone();
        for &(a, b) in &graph.edges {
            let ups = if norms[a] == 0.0 || norms[b] == 0.0 {
                0.0
            } else {
                (gram[(a, b)] / (norms[a] * norms[b])).clamp(0.0, 1.0)
            };
            let updated = edge_update(graph.w[(a, b)], ups, cfg);
            next[(a, b)] = updated;
            next[(b, a)] = updated;
        }
        graph.w = next;
    }
    graph.stage = GraphStage::Refined;
    Ok(graph)
}

/// Remove all edges with weight strictly less than κ. Vertices are kept
/// even when isolated.
pub fn prune(mut graph: TrajectoryGraph, kappa: f64) -> Result<TrajectoryGraph> {
    if graph.stage != GraphStage::Refined {
        return Err(Error::StageMismatch {
            expected: "refined",
            got: graph.stage.name(),
        });
    }
    let w = &mut graph.w;
    graph.edges.retain(|&(a, b)| {
        if w[(a, b)] < kappa {
            w[(a, b)] = 0.0;
            w[(b, a)] = 0.0;
            false
        } else {
            true
        }
    });
    graph.stage = GraphStage::Pruned;
    Ok(graph)
}

/// Build the raw adjacency graph over one candidate cluster: one edge per
/// vertex pair, weighted ψ(d(c_i, c_j), |t_i − t_j|). Same-camera pairs use
/// d = 0 when `same_camera_edges` is set and are skipped otherwise. Pairs of
/// disconnected cameras are omitted and counted.
pub fn build_adjacency_graph(
    cluster: &[usize],
    gallery: &[Tracklet],
    model: &StModel,
    net: &CameraNetwork,
    same_camera_edges: bool,
) -> Result<TrajectoryGraph> {
    let mut vertices = Vec::with_capacity(cluster.len());
    for &gi in cluster {
        let t = &gallery[gi];
        // Unknown cameras are a hard error; check up front.
        net.camera_index(&t.camera_id)?;
        vertices.push(GraphVertex {
            gallery_idx: gi,
            tracklet_id: t.tracklet_id.clone(),
            camera_id: t.camera_id.clone(),
            t: t.t_start,
        });
    }
    let n = vertices.len();
    let mut w = DMatrix::zeros(n, n);
    let mut edges = Vec::new();
    let mut omitted = 0usize;
    for a in 0..n {
        for b in (a + 1)..n {
            let same_camera = vertices[a].camera_id == vertices[b].camera_id;
            let d = if same_camera {
                if !same_camera_edges {
                    continue;
                }
                0.0
            } else {
                match net.distance(&vertices[a].camera_id, &vertices[b].camera_id) {
                    Ok(d) => d,
                    Err(Error::DisconnectedCameras(..)) => {
                        omitted += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                }
            };
            let dt = (vertices[a].t - vertices[b].t).abs();
            let q = st_probability(model, d, dt)?;
            w[(a, b)] = q;
            w[(b, a)] = q;
            edges.push((a, b));
        }
    }
    Ok(TrajectoryGraph {
        vertices,
        edges,
        w,
        stage: GraphStage::Raw,
        omitted_disconnected: omitted,
    })
}

/// First-iteration gain predictor ℵ(Q, π) = ΓQ − ln Q − ln Z − ι(ρ1t1 + ρ2t2) + π.
///
/// Positive values predict that one refinement step raises the edge weight,
/// under the Γ, π row-norm approximations. The prediction degrades for very
/// small Q, where −ln Q dominates while the actual update stays near zero.
pub fn gain_aleph(q: f64, pi: f64, gamma: f64, cfg: &PipelineConfig) -> Result<f64> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidInput(format!("gain_aleph requires Q > 0, got {q}")));
    }
    Ok(gamma * q - q.ln() - cfg.ln_z() - cfg.iota * (cfg.rho1 * cfg.t1 + cfg.rho2 * cfg.t2) + pi)
}

/// The Γ and π terms for edge (i, j) of a raw graph, approximated so they do
/// not depend on Q(e_ij): the i-row norm excludes the j entry. When vertex i
/// has no neighbor besides j (so nothing is lost by the approximation) the
/// coupling term vanishes: Γ = ιρ1 and π = 0, and ℵ is exact for that edge.
pub fn gain_terms(
    graph: &TrajectoryGraph,
    i: usize,
    j: usize,
    cfg: &PipelineConfig,
) -> (f64, f64) {
    let ri = graph.w.row(i);
    let rj = graph.w.row(j);
    let nj = rj.norm();
    let wij = graph.w[(i, j)];
    let ni_excl = (ri.norm_squared() - wij * wij).max(0.0).sqrt();
    if ni_excl < 1e-15 || nj < 1e-15 {
        return (cfg.iota * cfg.rho1, 0.0);
    }
    let shared = ri.dot(&rj);
    (
        cfg.iota * (cfg.rho1 + cfg.rho2 / (ni_excl * nj)),
        cfg.iota * cfg.rho2 * shared / (ni_excl * nj),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalRow {
    pub q: f64,
    pub pi: f64,
    pub aleph: f64,
    pub sign: i8,
}

/// Grid resolution for the ℵ surface emitter. Q is sampled uniformly in
/// (0, 1], π uniformly in [0, pi_max].
#[derive(Debug, Clone, Copy)]
pub struct SurfaceGrid {
    pub q_steps: usize,
    pub pi_steps: usize,
    pub pi_max: f64,
}

/// Evaluate ℵ over a (Q, π) grid for a fixed Γ: the data behind heatmap and
/// critical-curve plots. Rows are emitted in row-major (Q, π) order.
pub fn emit_critical_surface(
    cfg: &PipelineConfig,
    gamma: f64,
    grid: SurfaceGrid,
) -> Result<Vec<CriticalRow>> {
    if grid.q_steps == 0 || grid.pi_steps == 0 {
        return Err(Error::EmptyInput("critical surface grid"));
    }
    if !(grid.pi_max >= 0.0 && grid.pi_max.is_finite()) {
        return Err(Error::InvalidInput(format!("bad pi_max {}", grid.pi_max)));
    }
    let mut rows = Vec::with_capacity(grid.q_steps * grid.pi_steps);
    for qi in 0..grid.q_steps {
        let q = (qi + 1) as f64 / grid.q_steps as f64;
        for pj in 0..grid.pi_steps {
            let pi = if grid.pi_steps == 1 {
                0.0
            } else {
                grid.pi_max * pj as f64 / (grid.pi_steps - 1) as f64
            };
            let aleph = gain_aleph(q, pi, gamma, cfg)?;
            let sign = if aleph > 0.0 {
                1
            } else if aleph < 0.0 {
                -1
            } else {
                0
            };
            rows.push(CriticalRow { q, pi, aleph, sign });
        }
    }
    Ok(rows)
}
