//! File formats: feature JSONL, network JSON, ground-truth JSON, ψ sample
//! CSV, model JSON, graph dumps and report emitters.
//!
//! All writers are deterministic (fixed field order, `\n` line endings) and
//! atomic: content goes to a temp file in the target directory first, then
//! a rename.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::crf::{CriticalRow, TrajectoryGraph};
use crate::error::{Error, Result};
use crate::metrics::EvalReport;
use crate::network::{Camera, CameraNetwork, PathEdge};
use crate::stmodel::{StModel, StSample};
use crate::types::{Tracklet, Trajectory};

/// Write bytes atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

// --- feature JSONL ---------------------------------------------------------

pub fn features_to_jsonl(gallery: &[Tracklet]) -> Result<String> {
    let mut out = String::new();
    for t in gallery {
        out.push_str(&serde_json::to_string(t)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn read_features_jsonl(path: &Path) -> Result<Vec<Tracklet>> {
    let text = std::fs::read_to_string(path)?;
    let mut gallery = Vec::new();
    let mut dim: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let t: Tracklet = serde_json::from_str(line).map_err(|e| Error::Parse {
            origin: path.display().to_string(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        t.validate()?;
        let d = t.embedding.dim();
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(Error::DimensionMismatch { expected, got: d });
            }
            _ => {}
        }
        gallery.push(t);
    }
    Ok(gallery)
}

pub fn write_features_jsonl(path: &Path, gallery: &[Tracklet]) -> Result<()> {
    write_atomic(path, features_to_jsonl(gallery)?.as_bytes())
}

// --- network JSON ----------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    cameras: Vec<Camera>,
    edges: Vec<PathEdge>,
}

pub fn network_to_json(net: &CameraNetwork) -> Result<String> {
    let file = NetworkFile {
        cameras: net.cameras().to_vec(),
        edges: net.edges().to_vec(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn write_network_json(path: &Path, net: &CameraNetwork) -> Result<()> {
    write_atomic(path, network_to_json(net)?.as_bytes())
}

pub fn read_network_json(path: &Path) -> Result<CameraNetwork> {
    let file: NetworkFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    CameraNetwork::new(file.cameras, file.edges)
}

// --- ground-truth JSON -----------------------------------------------------

#[derive(Serialize, Deserialize)]
struct GroundTruthFile {
    /// identity -> time-ordered tracklet ids of its trajectory.
    trajectories: BTreeMap<String, Vec<String>>,
}

pub fn write_ground_truth_json(
    path: &Path,
    ground: &[Trajectory],
    gallery: &[Tracklet],
) -> Result<()> {
    let mut trajectories = BTreeMap::new();
    for t in ground {
        let identity = gallery[t.members[0]]
            .identity_id
            .clone()
            .unwrap_or_else(|| "unknown".to_string());
        let ids: Vec<String> = t
            .members
            .iter()
            .map(|&m| gallery[m].tracklet_id.clone())
            .collect();
        trajectories.insert(identity, ids);
    }
    let text = serde_json::to_string_pretty(&GroundTruthFile { trajectories })?;
    write_atomic(path, text.as_bytes())
}

pub fn read_ground_truth_json(path: &Path, gallery: &[Tracklet]) -> Result<Vec<Trajectory>> {
    let file: GroundTruthFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let index: BTreeMap<&str, usize> = gallery
        .iter()
        .enumerate()
        .map(|(i, t)| (t.tracklet_id.as_str(), i))
        .collect();
    let mut out = Vec::new();
    for (identity, ids) in file.trajectories {
        let members = ids
            .iter()
            .map(|id| {
                index.get(id.as_str()).copied().ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "ground truth for {identity} references unknown tracklet {id}"
                    ))
                })
            })
            .collect::<Result<Vec<usize>>>()?;
        out.push(Trajectory::new(members, gallery)?);
    }
    Ok(out)
}

// --- ψ samples CSV ---------------------------------------------------------

pub fn write_st_samples_csv(path: &Path, samples: &[StSample]) -> Result<()> {
    let mut out = String::from("distance,delta_t,label\n");
    for s in samples {
        out.push_str(&format!(
            "{},{},{}\n",
            s.distance,
            s.delta_t,
            u8::from(s.label)
        ));
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_st_samples_csv(path: &Path) -> Result<Vec<StSample>> {
    let text = std::fs::read_to_string(path)?;
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            origin: path.display().to_string(),
            line: lineno + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(format!("expected 3 fields, got {}", fields.len())));
        }
        let sample = StSample {
            distance: fields[0].parse().map_err(|e| parse_err(format!("{e}")))?,
            delta_t: fields[1].parse().map_err(|e| parse_err(format!("{e}")))?,
            label: fields[2].trim() == "1",
        };
        sample.validate()?;
        samples.push(sample);
    }
    Ok(samples)
}

// --- model JSON -------------------------------------------------------------

pub fn write_model_json(path: &Path, model: &StModel) -> Result<()> {
    write_atomic(path, serde_json::to_string_pretty(model)?.as_bytes())
}

pub fn read_model_json(path: &Path) -> Result<StModel> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

// --- graph dump -------------------------------------------------------------

#[derive(Serialize)]
struct GraphDumpVertex<'a> {
    tracklet_id: &'a str,
    camera_id: &'a str,
    t: f64,
}

#[derive(Serialize)]
struct GraphDumpEdge {
    i: usize,
    j: usize,
    w: f64,
}

#[derive(Serialize)]
struct GraphDump<'a> {
    vertices: Vec<GraphDumpVertex<'a>>,
    edges: Vec<GraphDumpEdge>,
    stage: &'a str,
}

/// JSON dump of a graph; edges are listed (i, j) with i preceding j in the
/// time order used for search.
pub fn graph_to_json(graph: &TrajectoryGraph) -> Result<String> {
    let directed = graph.directed_edges();
    let edges = graph
        .weighted_edges()
        .zip(directed)
        .map(|((_, _, w), (from, to))| GraphDumpEdge { i: from, j: to, w })
        .collect();
    let dump = GraphDump {
        vertices: graph
            .vertices()
            .iter()
            .map(|v| GraphDumpVertex {
                tracklet_id: &v.tracklet_id,
                camera_id: &v.camera_id,
                t: v.t,
            })
            .collect(),
        edges,
        stage: graph.stage().name(),
    };
    Ok(serde_json::to_string_pretty(&dump)?)
}

// --- CSV emitters ------------------------------------------------------------

pub fn critical_surface_to_csv(rows: &[CriticalRow]) -> String {
    let mut out = String::from("q,pi,aleph,sign\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.q, r.pi, r.aleph, r.sign));
    }
    out
}

pub fn cmc_to_csv(cmc: &[f64]) -> String {
    let mut out = String::from("rank,rate\n");
    for (i, rate) in cmc.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, rate));
    }
    out
}

pub fn write_eval_report_json(path: &Path, report: &EvalReport) -> Result<()> {
    write_atomic(path, serde_json::to_string_pretty(report)?.as_bytes())
}

// --- retrieval results --------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub score: f64,
    pub members: Vec<String>,
}

/// One query's retrieval output in the result-file schema.
#[derive(Debug, Serialize, Deserialize)]
pub struct RetrievalRecord {
    pub query_id: String,
    pub trajectories: Vec<TrajectoryRecord>,
    pub ranked: Vec<String>,
}

impl RetrievalRecord {
    pub fn new(
        query_id: &str,
        trajectories: &[Trajectory],
        ranked_ids: Vec<String>,
        gallery: &[Tracklet],
    ) -> RetrievalRecord {
        RetrievalRecord {
            query_id: query_id.to_string(),
            trajectories: trajectories
                .iter()
                .map(|t| TrajectoryRecord {
                    score: t.score,
                    members: t
                        .members
                        .iter()
                        .map(|&m| gallery[m].tracklet_id.clone())
                        .collect(),
                })
                .collect(),
            ranked: ranked_ids,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::{generate_scenario, ScenarioSpec};

    #[test]
    fn features_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let scenario = generate_scenario(&ScenarioSpec {
            n_identities: 4,
            window: 900.0,
            ..ScenarioSpec::default()
        })
        .unwrap();
        let path = dir.path().join("features.jsonl");
        write_features_jsonl(&path, &scenario.gallery).unwrap();
        let back = read_features_jsonl(&path).unwrap();
        assert_eq!(
            serde_json::to_string(&back).unwrap(),
            serde_json::to_string(&scenario.gallery).unwrap()
        );
    }

    #[test]
    fn network_round_trip_preserves_distances() {
        let dir = tempfile::tempdir().unwrap();
        let scenario = generate_scenario(&ScenarioSpec {
            n_identities: 2,
            window: 600.0,
            ..ScenarioSpec::default()
        })
        .unwrap();
        let path = dir.path().join("network.json");
        write_network_json(&path, &scenario.network).unwrap();
        let back = read_network_json(&path).unwrap();
        for a in scenario.network.cameras() {
            for b in scenario.network.cameras() {
                assert_eq!(
                    scenario.network.distance(&a.id, &b.id).unwrap(),
                    back.distance(&a.id, &b.id).unwrap()
                );
            }
        }
    }

    #[test]
    fn ground_truth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let scenario = generate_scenario(&ScenarioSpec {
            n_identities: 5,
            window: 900.0,
            ..ScenarioSpec::default()
        })
        .unwrap();
        let path = dir.path().join("ground_truth.json");
        write_ground_truth_json(&path, &scenario.ground_truth, &scenario.gallery).unwrap();
        let back = read_ground_truth_json(&path, &scenario.gallery).unwrap();
        let canon = |ts: &[Trajectory]| {
            let mut sets: Vec<Vec<usize>> = ts.iter().map(|t| t.members.clone()).collect();
            sets.sort();
            sets
        };
        assert_eq!(canon(&back), canon(&scenario.ground_truth));
    }

    #[test]
    fn st_samples_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let samples = vec![
            StSample {
                distance: 120.5,
                delta_t: 88.0,
                label: true,
            },
            StSample {
                distance: 10.0,
                delta_t: 3600.0,
                label: false,
            },
        ];
        let path = dir.path().join("st_samples.csv");
        write_st_samples_csv(&path, &samples).unwrap();
        assert_eq!(read_st_samples_csv(&path).unwrap(), samples);
    }

    #[test]
    fn model_round_trip() {
        use crate::stmodel::{st_probability, train_st_model};
        let dir = tempfile::tempdir().unwrap();
        let scenario = generate_scenario(&ScenarioSpec {
            n_identities: 6,
            window: 900.0,
            ..ScenarioSpec::default()
        })
        .unwrap();
        let model = train_st_model(&scenario.st_samples, 100, 0.5, 3).unwrap();
        let path = dir.path().join("model.json");
        write_model_json(&path, &model).unwrap();
        let back = read_model_json(&path).unwrap();
        assert_eq!(model, back);
        assert_eq!(
            st_probability(&model, 200.0, 150.0).unwrap(),
            st_probability(&back, 200.0, 150.0).unwrap()
        );
    }

    #[test]
    fn csv_emitters_have_headers() {
        assert!(cmc_to_csv(&[1.0]).starts_with("rank,rate\n"));
        let rows = vec![CriticalRow {
            q: 0.5,
            pi: 0.1,
            aleph: -0.2,
            sign: -1,
        }];
        let csv = critical_surface_to_csv(&rows);
        assert!(csv.starts_with("q,pi,aleph,sign\n"));
        assert!(csv.contains("0.5,0.1,-0.2,-1"));
    }
}
