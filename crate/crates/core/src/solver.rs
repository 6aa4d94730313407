//! Trajectory extraction from the pruned graph.
//!
//! The main route factorizes the affinity matrix S ≈ A·Aᵀ with nonnegative
//! A and a row-sum-to-one penalty, then reads one trajectory per column off
//! the row-argmax (restricted NMF). The trajectory count K comes from the
//! spectrum of S. A depth-first path-search baseline enumerates all simple
//! source-to-sink paths instead; unlike the factorization it may place one
//! vertex on several trajectories.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::PipelineConfig;
use crate::crf::{GraphStage, TrajectoryGraph};
use crate::error::{Error, Result};
use crate::types::{Tracklet, Trajectory};

/// Division floor in the multiplicative update.
const DENOM_EPS: f64 = 1e-12;

/// Symmetric affinity matrix for one pruned graph: surviving edge weights
/// off the diagonal, ones on it, zeros elsewhere.
#[derive(Debug, Clone)]
pub struct AffinityMatrix {
    pub s: DMatrix<f64>,
}

impl AffinityMatrix {
    pub fn n(&self) -> usize {
        self.s.nrows()
    }

    pub fn from_matrix(s: DMatrix<f64>) -> Result<AffinityMatrix> {
        check_symmetric(&s)?;
        Ok(AffinityMatrix { s })
    }
}

fn check_symmetric(s: &DMatrix<f64>) -> Result<()> {
    if s.nrows() != s.ncols() {
        return Err(Error::NonSymmetric(f64::INFINITY));
    }
    let mut worst = 0.0f64;
    for i in 0..s.nrows() {
        for j in (i + 1)..s.ncols() {
            worst = worst.max((s[(i, j)] - s[(j, i)]).abs());
        }
    }
    if worst > 1e-9 {
        return Err(Error::NonSymmetric(worst));
    }
    Ok(())
}

/// Nonnegative N×K assignment matrix with a row-argmax binarized view.
#[derive(Debug, Clone)]
pub struct AssignmentMatrix {
    pub a: DMatrix<f64>,
}

impl AssignmentMatrix {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn k(&self) -> usize {
        self.a.ncols()
    }

    /// Column of the maximum entry per row; ties go to the lower column.
    pub fn binarized(&self) -> Vec<usize> {
        (0..self.a.nrows())
            .map(|i| {
                let mut best = 0;
                for k in 1..self.a.ncols() {
                    if self.a[(i, k)] > self.a[(i, best)] {
                        best = k;
                    }
                }
                best
            })
            .collect()
    }
}

/// Per-solve diagnostics: the objective value after every update and how
/// often the division floor engaged.
#[derive(Debug, Clone, Default)]
pub struct RnmfTrace {
    pub objective: Vec<f64>,
    pub floored: usize,
}

/// Map a pruned graph to its affinity matrix.
pub fn to_affinity(graph: &TrajectoryGraph) -> Result<AffinityMatrix> {
    if graph.stage() != GraphStage::Pruned {
        return Err(Error::StageMismatch {
            expected: "pruned",
            got: graph.stage().name(),
        });
    }
    let n = graph.vertex_count();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        s[(i, i)] = 1.0;
    }
    for (a, b, w) in graph.weighted_edges() {
        s[(a, b)] = w;
        s[(b, a)] = w;
    }
    Ok(AffinityMatrix { s })
}

/// Estimate the trajectory count: the number of eigenvalues of S whose
/// absolute value exceeds ϖ.
pub fn estimate_k(aff: &AffinityMatrix, varpi: f64) -> Result<usize> {
    check_symmetric(&aff.s)?;
    let eigen = SymmetricEigen::new(aff.s.clone());
    Ok(eigen
        .eigenvalues
        .iter()
        .filter(|v| v.abs() > varpi)
        .count())
}

/// Objective ‖S − AAᵀ‖_F + τ‖A·1_K − 1_N‖₂.
pub fn rnmf_objective(s: &DMatrix<f64>, a: &DMatrix<f64>, tau: f64) -> f64 {
    let recon = s - a * a.transpose();
    let row_sum_err: f64 = (0..a.nrows())
        .map(|i| (a.row(i).sum() - 1.0).powi(2))
        .sum();
    recon.norm() + tau * row_sum_err.sqrt()
}

/// Solve the restricted factorization by multiplicative updates:
///
/// ```text
/// A ← A ⊙ √( (S·A + 2τ·1_N1_Kᵀ) ⊘ (4·A·AᵀA + 2τ·(A·1_K)1_Kᵀ) )
/// ```
///
/// Initialization is uniform random in (0,1) scaled by √(mean(S)/K), seeded
/// from `cfg.random_seed`, so a fixed seed gives a fixed factorization.
pub fn rnmf_solve(
    aff: &AffinityMatrix,
    k: usize,
    cfg: &PipelineConfig,
) -> Result<(AssignmentMatrix, RnmfTrace)> {
    let n = aff.n();
    if k < 1 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let s = &aff.s;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.random_seed);
    let scale = (s.sum() / (n * n) as f64 / k as f64).sqrt().max(1e-6);
    let mut a = DMatrix::from_fn(n, k, |_, _| rng.gen::<f64>().max(1e-12) * scale);

    let two_tau = 2.0 * cfg.tau;
    let mut trace = RnmfTrace::default();
    for _ in 0..cfg.rnmf_iterations {
        let numer = s * &a;
        let gram = a.transpose() * &a;
        let denom = &a * gram * 4.0;
        let row_sums: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
        for i in 0..n {
            for c in 0..k {
                let num = numer[(i, c)] + two_tau;
                let mut den = denom[(i, c)] + two_tau * row_sums[i];
                if den < DENOM_EPS {
                    den = DENOM_EPS;
                    trace.floored += 1;
                }
                a[(i, c)] *= (num / den).sqrt();
            }
        }
        trace.objective.push(rnmf_objective(s, &a, cfg.tau));
    }
    Ok((AssignmentMatrix { a }, trace))
}

/// Read trajectories off the assignment matrix: one per non-empty column,
/// members sorted by time.
pub fn extract_trajectories(
    assignment: &AssignmentMatrix,
    graph: &TrajectoryGraph,
    gallery: &[Tracklet],
) -> Result<Vec<Trajectory>> {
    if assignment.n() != graph.vertex_count() {
        return Err(Error::InvalidInput(format!(
            "assignment has {} rows but graph has {} vertices",
            assignment.n(),
            graph.vertex_count()
        )));
    }
    let owner = assignment.binarized();
    let mut columns: Vec<Vec<usize>> = vec![Vec::new(); assignment.k()];
    for (vertex, &col) in owner.iter().enumerate() {
        columns[col].push(graph.vertices()[vertex].gallery_idx);
    }
    columns
        .into_iter()
        .filter(|members| !members.is_empty())
        .map(|members| Trajectory::new(members, gallery))
        .collect()
}

/// Depth-first enumeration of all simple paths from zero-in-degree vertices
/// to zero-out-degree vertices of the pruned graph. Isolated vertices become
/// singleton trajectories; a vertex may appear on many paths. Fails once the
/// path count exceeds `max_paths`.
pub fn graph_search_solve(
    graph: &TrajectoryGraph,
    gallery: &[Tracklet],
    max_paths: usize,
) -> Result<Vec<Trajectory>> {
    if graph.stage() != GraphStage::Pruned {
        return Err(Error::StageMismatch {
            expected: "pruned",
            got: graph.stage().name(),
        });
    }
    let n = graph.vertex_count();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut in_deg = vec![0usize; n];
    for (from, to) in graph.directed_edges() {
        succ[from].push(to);
        in_deg[to] += 1;
    }
    for next in &mut succ {
        next.sort_unstable();
    }

    fn dfs(
        here: usize,
        succ: &[Vec<usize>],
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        max_paths: usize,
    ) -> Result<()> {
        path.push(here);
        if succ[here].is_empty() {
            if out.len() >= max_paths {
                return Err(Error::PathExplosion { cap: max_paths });
            }
            out.push(path.clone());
        } else {
            for &next in &succ[here] {
                dfs(next, succ, path, out, max_paths)?;
            }
        }
        path.pop();
        Ok(())
    }

    let mut paths = Vec::new();
    for start in 0..n {
        if in_deg[start] == 0 {
            dfs(start, &succ, &mut Vec::new(), &mut paths, max_paths)?;
        }
    }
    paths
        .into_iter()
        .map(|vertex_path| {
            let members = vertex_path
                .into_iter()
                .map(|v| graph.vertices()[v].gallery_idx)
                .collect();
            Trajectory::new(members, gallery)
        })
        .collect()
}
