//! Camera-network graph and pairwise shortest-path distances.
//!
//! Distances come from the supplied path graph, not from straight-line
//! coordinate distance; coordinates are kept for the simulator and for
//! emitted map data.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Camera {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathEdge {
    pub a: String,
    pub b: String,
    /// Path length in meters; must be positive.
    pub length: f64,
}

/// Camera nodes plus weighted path edges, with an all-pairs shortest-path
/// cache built at construction time. Immutable afterwards.
#[derive(Debug, Clone)]
pub struct CameraNetwork {
    cameras: Vec<Camera>,
    index: BTreeMap<String, usize>,
    edges: Vec<PathEdge>,
    /// Row-major n*n matrix; `f64::INFINITY` marks unreachable pairs.
    dist: Vec<f64>,
}

impl CameraNetwork {
    pub fn new(cameras: Vec<Camera>, edges: Vec<PathEdge>) -> Result<CameraNetwork> {
        if cameras.is_empty() {
            return Err(Error::InvalidNetwork("no cameras".to_string()));
        }
        let mut index = BTreeMap::new();
        for (i, cam) in cameras.iter().enumerate() {
            if index.insert(cam.id.clone(), i).is_some() {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate camera id {}",
                    cam.id
                )));
            }
        }
        let n = cameras.len();
        let mut dist = vec![f64::INFINITY; n * n];
        for i in 0..n {
            dist[i * n + i] = 0.0;
        }
        for edge in &edges {
            if !(edge.length > 0.0 && edge.length.is_finite()) {
                return Err(Error::InvalidNetwork(format!(
                    "edge {}-{} has non-positive length {}",
                    edge.a, edge.b, edge.length
                )));
            }
            let i = *index
                .get(&edge.a)
                .ok_or_else(|| Error::UnknownCamera(edge.a.clone()))?;
            let j = *index
                .get(&edge.b)
                .ok_or_else(|| Error::UnknownCamera(edge.b.clone()))?;
            if i == j {
                return Err(Error::InvalidNetwork(format!("self-loop at {}", edge.a)));
            }
            // Parallel edges are allowed; the minimum length wins.
            let cur = dist[i * n + j];
            if edge.length < cur {
                dist[i * n + j] = edge.length;
                dist[j * n + i] = edge.length;
            }
        }
        // Floyd-Warshall; networks are small so all-pairs is the simplest
        // way to fill the cache.
        for k in 0..n {
            for i in 0..n {
                let dik = dist[i * n + k];
                if dik.is_infinite() {
                    continue;
                }
                for j in 0..n {
                    let through = dik + dist[k * n + j];
                    if through < dist[i * n + j] {
                        dist[i * n + j] = through;
                    }
                }
            }
        }
        Ok(CameraNetwork {
            cameras,
            index,
            edges,
            dist,
        })
    }

    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty()
    }

    pub fn cameras(&self) -> &[Camera] {
        &self.cameras
    }

    pub fn edges(&self) -> &[PathEdge] {
        &self.edges
    }

    pub fn camera_index(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownCamera(id.to_string()))
    }

    /// Shortest-path distance by camera index; `None` when disconnected.
    pub fn distance_by_index(&self, i: usize, j: usize) -> Option<f64> {
        let d = self.dist[i * self.len() + j];
        d.is_finite().then_some(d)
    }

    /// Minimal total edge length over all paths between two cameras.
    pub fn distance(&self, a: &str, b: &str) -> Result<f64> {
        let i = self.camera_index(a)?;
        let j = self.camera_index(b)?;
        self.distance_by_index(i, j)
            .ok_or_else(|| Error::DisconnectedCameras(a.to_string(), b.to_string()))
    }

    /// Adjacent camera indices (neighbors over path edges), ascending.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|e| {
                let a = self.index[&e.a];
                let b = self.index[&e.b];
                if a == i {
                    Some(b)
                } else if b == i {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}
