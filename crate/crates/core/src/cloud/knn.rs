use std::cmp::Ordering;

use ndarray::Array2;

use super::PointCloud;
use crate::error::{invalid, Result};

/// Undirected graph with binary weights, stored as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from undirected edges. Self loops are dropped and
    /// duplicate edges merged.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); n];
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(invalid(format!("edge ({i}, {j}) out of range for {n} vertices")));
            }
            if i != j {
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { neighbors })
    }

    pub fn n_vertices(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// Edge list with `i < j`, lexicographically sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, list) in self.neighbors.iter().enumerate() {
            out.extend(list.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }

    pub fn n_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn adjacency_dense(&self) -> Array2<f64> {
        let n = self.n_vertices();
        let mut w = Array2::zeros((n, n));
        for (i, list) in self.neighbors.iter().enumerate() {
            for &j in list {
                w[[i, j]] = 1.0;
            }
        }
        w
    }

    /// Subgraph induced by `kept`; vertex `t` of the result is `kept[t]`.
    pub fn induced(&self, kept: &[usize]) -> Graph {
        let mut remap = vec![usize::MAX; self.n_vertices()];
        for (t, &v) in kept.iter().enumerate() {
            remap[v] = t;
        }
        let neighbors = kept
            .iter()
            .map(|&v| {
                let mut list: Vec<usize> = self.neighbors[v]
                    .iter()
                    .filter_map(|&u| (remap[u] != usize::MAX).then_some(remap[u]))
                    .collect();
                list.sort_unstable();
                list
            })
            .collect();
        Graph { neighbors }
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n_vertices();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &u in &self.neighbors[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == n
    }
}

/// K-nearest-neighbor graph of a point cloud, symmetrized by logical OR.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    pub k: usize,
    graph: Graph,
}

impl KnnGraph {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn into_graph(self) -> Graph {
        self.graph
    }

    pub fn n_vertices(&self) -> usize {
        self.graph.n_vertices()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.graph.edges()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// Connects each point to its `k` nearest points (Euclidean, ties to the lower
/// index) and symmetrizes the result.
pub fn build_knn_graph(cloud: &PointCloud, k: usize) -> Result<KnnGraph> {
    let n = cloud.len();
    if k == 0 || k >= n {
        return Err(invalid(format!("knn requires 1 <= k < N, got k={k}, N={n}")));
    }
    let flat = cloud.as_flat();
    let mut edges = Vec::with_capacity(n * k);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n);
    let by_dist = |a: &(f64, usize), b: &(f64, usize)| {
        a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
    };
    for i in 0..n {
        let pi = &flat[3 * i..3 * i + 3];
        cand.clear();
        cand.extend((0..n).filter(|&j| j != i).map(|j| (sq_dist(pi, &flat[3 * j..3 * j + 3]), j)));
        if k < cand.len() {
            cand.select_nth_unstable_by(k - 1, by_dist);
        }
        edges.extend(cand[..k].iter().map(|&(_, j)| (i, j)));
    }
    Ok(KnnGraph { k, graph: Graph::from_edges(n, edges)? })
}
