//! Frequency graphs, count matrices and influence-weighted graphs.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{FeaturedSeries, InfluenceVector};

/// Vertices are the distinct observations, edges the unordered pairs of
/// distinct adjacent observations. Both are kept in first-appearance order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphSkeleton {
    vertices: Vec<String>,
    /// Endpoint indices into `vertices`, smaller index first.
    edges: Vec<(usize, usize)>,
    edge_freq: Vec<u64>,
}

impl GraphSkeleton {
    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `f_e`: number of adjacent co-occurrences of each edge, in either direction.
    pub fn edge_freq(&self) -> &[u64] {
        &self.edge_freq
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_index(&self, symbol: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == symbol)
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let key = (a.min(b), a.max(b));
        self.edges.iter().position(|&e| e == key)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertices.len();
        if n <= 1 {
            return true;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = n;
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
                components -= 1;
            }
        }
        components == 1
    }
}

/// Builds V, E and the edge frequencies of a series.
pub fn build_skeleton(series: &FeaturedSeries) -> Result<GraphSkeleton> {
    if series.len() < 2 {
        return Err(Error::input(format!(
            "series of length {} is too short to build a graph",
            series.len()
        )));
    }
    let (vertices, ids) = vertex_ids(series.values());
    let mut edge_lookup: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut edge_freq = Vec::new();
    for pair in ids.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        let idx = *edge_lookup.entry(key).or_insert_with(|| {
            edges.push(key);
            edge_freq.push(0);
            edges.len() - 1
        });
        edge_freq[idx] += 1;
    }
    let skeleton = GraphSkeleton {
        vertices,
        edges,
        edge_freq,
    };
    if !skeleton.is_connected() {
        return Err(Error::structure(
            "graph is disconnected; the path metric is undefined",
        ));
    }
    Ok(skeleton)
}

fn vertex_ids(values: &[String]) -> (Vec<String>, Vec<usize>) {
    let mut lookup: HashMap<&str, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let ids = values
        .iter()
        .map(|v| {
            *lookup.entry(v.as_str()).or_insert_with(|| {
                vertices.push(v.clone());
                vertices.len() - 1
            })
        })
        .collect();
    (vertices, ids)
}

/// Row-major dense count matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl CountMatrix {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn bump(&mut self, i: usize, j: usize) {
        self.data[i * self.cols + j] += 1;
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    /// Matrix-vector product with a real vector of length `cols`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(
            v.len(),
            self.cols,
            "dimension mismatch in count matrix product"
        );
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&c, &x)| c as f64 * x).sum())
            .collect()
    }

    pub fn to_nested(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Zeroth (vertex x feature) and first (edge x feature) count matrices.
/// Column 0 of each counts occurrences in the empty state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrices {
    pub c0: CountMatrix,
    pub c1: CountMatrix,
}

impl CountMatrices {
    /// Whether every edge row of `c1` sums to its frequency. Guaranteed when
    /// no timestamp carries more than one first feature.
    pub fn edge_counts_consistent(&self, skeleton: &GraphSkeleton) -> bool {
        self.c1
            .row_sums()
            .iter()
            .zip(skeleton.edge_freq())
            .all(|(s, f)| s == f)
    }
}

/// Counts (vertex, zeroth feature) and (edge, first feature) co-occurrences.
/// An edge occurrence at `t_k -> t_{k+1}` is attributed the first features of
/// `t_k`.
pub fn count_matrices(series: &FeaturedSeries, skeleton: &GraphSkeleton) -> CountMatrices {
    let schema = series.schema();
    let mut c0 = CountMatrix::zeros(skeleton.n_vertices(), schema.zeroth().len() + 1);
    let mut c1 = CountMatrix::zeros(skeleton.n_edges(), schema.first().len() + 1);

    let vertex_of: HashMap<&str, usize> = skeleton
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();
    let edge_of: HashMap<(usize, usize), usize> = skeleton
        .edges()
        .iter()
        .enumerate()
        .map(|(i, &e)| (e, i))
        .collect();
    let ids: Vec<usize> = series
        .values()
        .iter()
        .map(|v| {
            *vertex_of
                .get(v.as_str())
                .expect("skeleton built from a different series")
        })
        .collect();

    for (t, &v) in ids.iter().enumerate() {
        let feats = &series.feat0()[t];
        if feats.is_empty() {
            c0.bump(v, 0);
        }
        for &j in feats {
            c0.bump(v, j + 1);
        }
    }
    for (k, pair) in ids.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        if a == b {
            continue;
        }
        let e = *edge_of
            .get(&(a.min(b), a.max(b)))
            .expect("skeleton built from a different series");
        let feats = &series.feat1()[k];
        if feats.is_empty() {
            c1.bump(e, 0);
        }
        for &j in feats {
            c1.bump(e, j + 1);
        }
    }
    CountMatrices { c0, c1 }
}

/// Skeleton plus vertex weights `C0·g0` and edge weights `C1·(g1 + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    skeleton: GraphSkeleton,
    vertex_weight: Vec<f64>,
    edge_weight: Vec<f64>,
}

impl WeightedGraph {
    pub fn skeleton(&self) -> &GraphSkeleton {
        &self.skeleton
    }

    pub fn vertex_weights(&self) -> &[f64] {
        &self.vertex_weight
    }

    /// Weighted edge frequencies, strictly positive.
    pub fn edge_weights(&self) -> &[f64] {
        &self.edge_weight
    }
}

pub fn weighted_graph(
    skeleton: &GraphSkeleton,
    cm: &CountMatrices,
    g: &InfluenceVector,
) -> Result<WeightedGraph> {
    if cm.c0.rows() != skeleton.n_vertices() || cm.c1.rows() != skeleton.n_edges() {
        return Err(Error::input("count matrices do not match the skeleton"));
    }
    if cm.c0.cols() != g.g0().len() || cm.c1.cols() != g.g1().len() {
        return Err(Error::schema(
            "influence vector does not match the count matrices",
        ));
    }
    let vertex_weight = cm.c0.mul_vec(g.g0());
    let shifted: Vec<f64> = g.g1().iter().map(|x| x + 1.0).collect();
    let edge_weight = cm.c1.mul_vec(&shifted);
    if let Some(e) = edge_weight.iter().position(|&w| w <= 0.0) {
        let (a, b) = skeleton.edges()[e];
        return Err(Error::structure(format!(
            "edge {{{}, {}}} has zero weighted frequency (corrupt count row)",
            skeleton.vertices()[a],
            skeleton.vertices()[b]
        )));
    }
    Ok(WeightedGraph {
        skeleton: skeleton.clone(),
        vertex_weight,
        edge_weight,
    })
}

/// One-shot helper: skeleton, counts and weights for a series.
pub fn build_weighted_graph(
    series: &FeaturedSeries,
    g: &InfluenceVector,
) -> Result<(WeightedGraph, CountMatrices)> {
    let skeleton = build_skeleton(series)?;
    let cm = count_matrices(series, &skeleton);
    if series.max_first_features() > 1 && !cm.edge_counts_consistent(&skeleton) {
        log::warn!(
            "timestamps carry several first features; C1 row sums exceed edge frequencies, \
             so the zero-influence graph differs from the plain frequency graph"
        );
    }
    let graph = weighted_graph(&skeleton, &cm, g)?;
    Ok((graph, cm))
}

#[derive(Serialize)]
struct GraphDump<'a> {
    vertices: &'a [String],
    edges: Vec<[&'a str; 2]>,
    edge_freq: &'a [u64],
    c0: Vec<Vec<u64>>,
    c1: Vec<Vec<u64>>,
}

/// Debug dump of vertex order, edge order and both count matrices (row-major).
pub fn skeleton_json(skeleton: &GraphSkeleton, cm: &CountMatrices) -> Result<String> {
    let dump = GraphDump {
        vertices: skeleton.vertices(),
        edges: skeleton
            .edges()
            .iter()
            .map(|&(a, b)| [skeleton.vertices[a].as_str(), skeleton.vertices[b].as_str()])
            .collect(),
        edge_freq: skeleton.edge_freq(),
        c0: cm.c0.to_nested(),
        c1: cm.c1.to_nested(),
    };
    Ok(serde_json::to_string_pretty(&dump)?)
}
