//! Activation functions, edge lengths and the shortest-path metric.
//!
//! An edge `{a, b}` has length `1/W_E(e) - alpha * rho(W_V(a) + W_V(b))`,
//! where `alpha` is the smallest reciprocal edge weight of the graph. Since
//! `rho < 1` every length stays strictly positive, and the metric is the
//! minimum total length over paths.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::format::format_number;
use crate::graph::{GraphSkeleton, WeightedGraph};

/// `sup |d/dz (1 - exp(-z^2))| = sqrt(2) * exp(-1/2)`, attained at `z = 1/sqrt(2)`.
pub const GAUSSIAN_LIPSCHITZ: f64 = std::f64::consts::SQRT_2 * 0.606_530_659_712_633_4;

#[derive(Debug, Clone, PartialEq)]
pub enum Activation {
    /// `rho(2z / (M + 1))` with `M` the largest vertex-weight pair sum.
    GaussianAuto { scale: f64 },
    /// `1 - exp(-z^2)` for `z >= 0`, else 0.
    GaussianRaw,
    /// Linear interpolation through sorted breakpoints, constant outside them.
    Table(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationFn {
    kind: Activation,
    lipschitz_k: f64,
}

/// Largest `f64` below 1.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

fn gaussian(z: f64) -> f64 {
    if z >= 0.0 {
        // For large z the exact value rounds to 1.0, which would zero out the
        // length of the heaviest edge.
        (-(-z * z).exp_m1()).min(BELOW_ONE)
    } else {
        0.0
    }
}

impl ActivationFn {
    pub fn gaussian_auto(scale: f64) -> Self {
        assert!(
            scale >= 0.0 && scale.is_finite(),
            "scale M must be finite and non-negative"
        );
        Self {
            kind: Activation::GaussianAuto { scale },
            lipschitz_k: 2.0 * GAUSSIAN_LIPSCHITZ,
        }
    }

    pub fn gaussian_raw() -> Self {
        Self {
            kind: Activation::GaussianRaw,
            lipschitz_k: GAUSSIAN_LIPSCHITZ,
        }
    }

    /// Piecewise-linear activation. It must pass through the origin, stay in
    /// `(-1, 1)` and be non-decreasing. The Lipschitz constant defaults to the
    /// steepest segment; `lipschitz_k` may only raise it.
    pub fn table(mut points: Vec<(f64, f64)>, lipschitz_k: Option<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("activation table is empty"));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points
            .iter()
            .any(|&(x, y)| !x.is_finite() || !(y > -1.0 && y < 1.0))
        {
            return Err(Error::domain("activation table values must lie in (-1, 1)"));
        }
        let mut steepest: f64 = 0.0;
        for w in points.windows(2) {
            let (dx, dy) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            if dx == 0.0 {
                return Err(Error::domain("activation table has duplicate x values"));
            }
            if dy < 0.0 {
                return Err(Error::domain("activation table must be non-decreasing"));
            }
            steepest = steepest.max(dy / dx);
        }
        let k = lipschitz_k.unwrap_or(steepest);
        if k < steepest {
            return Err(Error::domain(format!(
                "Lipschitz bound {k} is below the steepest table slope {steepest}"
            )));
        }
        let f = Self {
            kind: Activation::Table(points),
            lipschitz_k: k,
        };
        if f.eval(0.0) != 0.0 {
            return Err(Error::domain("activation table must map 0 to 0"));
        }
        Ok(f)
    }

    pub fn kind(&self) -> &Activation {
        &self.kind
    }

    /// Upper bound on `|rho(x) - rho(y)| / |x - y|`.
    pub fn lipschitz_k(&self) -> f64 {
        self.lipschitz_k
    }

    pub fn eval(&self, z: f64) -> f64 {
        match &self.kind {
            Activation::GaussianAuto { scale } => gaussian(2.0 * z / (scale + 1.0)),
            Activation::GaussianRaw => gaussian(z),
            Activation::Table(points) => interpolate(points, z),
        }
    }
}

fn interpolate(points: &[(f64, f64)], z: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if z <= first.0 {
        return first.1;
    }
    if z >= last.0 {
        return last.1;
    }
    let i = points.partition_point(|p| p.0 <= z);
    let (x0, y0) = points[i - 1];
    let (x1, y1) = points[i];
    y0 + (y1 - y0) * (z - x0) / (x1 - x0)
}

/// Automatic activation scaled by the largest vertex-weight sum over
/// distinct vertex pairs (0 with fewer than two vertices).
pub fn auto_activation(graph: &WeightedGraph) -> ActivationFn {
    let w = graph.vertex_weights();
    let scale = if w.len() < 2 {
        0.0
    } else {
        // Two largest weights give the maximal pair sum.
        let (mut hi, mut next) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &x in w {
            if x > hi {
                next = hi;
                hi = x;
            } else if x > next {
                next = x;
            }
        }
        (hi + next).max(0.0)
    };
    ActivationFn::gaussian_auto(scale)
}

/// `alpha`: smallest reciprocal edge weight; 0 for an edgeless graph.
pub fn alpha(graph: &WeightedGraph) -> f64 {
    graph
        .edge_weights()
        .iter()
        .map(|w| 1.0 / w)
        .reduce(f64::min)
        .unwrap_or(0.0)
}

/// Lengths of every edge, in skeleton edge order.
pub fn edge_lengths(graph: &WeightedGraph, rho: &ActivationFn) -> Vec<f64> {
    let a = alpha(graph);
    let vw = graph.vertex_weights();
    graph
        .skeleton()
        .edges()
        .iter()
        .zip(graph.edge_weights())
        .map(|(&(u, v), &w)| 1.0 / w - a * rho.eval(vw[u] + vw[v]))
        .collect()
}

pub fn edge_length(graph: &WeightedGraph, rho: &ActivationFn, edge: usize) -> f64 {
    let (u, v) = graph.skeleton().edges()[edge];
    let vw = graph.vertex_weights();
    1.0 / graph.edge_weights()[edge] - alpha(graph) * rho.eval(vw[u] + vw[v])
}

/// Symmetric matrix of pairwise vertex distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Checks squareness, symmetry, a zero diagonal and non-negative entries.
    pub fn from_rows(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::input(
                "distance matrix must be square and match its labels",
            ));
        }
        for i in 0..n {
            if rows[i][i] != 0.0 {
                return Err(Error::domain("distance matrix diagonal must be zero"));
            }
            for j in 0..n {
                let d = rows[i][j];
                if d.is_nan() || d < 0.0 || d != rows[j][i] {
                    return Err(Error::domain(format!("invalid distance at ({i}, {j})")));
                }
            }
        }
        Ok(Self {
            labels,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.labels.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.labels.len();
        &self.data[i * n..(i + 1) * n]
    }

    /// CSV with the vertex labels as header, one row per vertex.
    pub fn to_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(&self.labels).expect("in-memory write");
        for i in 0..self.len() {
            wtr.write_record(self.row(i).iter().map(|&d| format_number(d)))
                .expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

/// Shortest-path metric of the weighted graph under activation `rho`.
pub fn distance_matrix(graph: &WeightedGraph, rho: &ActivationFn) -> Result<DistanceMatrix> {
    shortest_paths(graph.skeleton(), &edge_lengths(graph, rho))
}

/// Plain reciprocal-frequency metric: edge length `1 / f_e`.
pub fn frequency_distance_matrix(skeleton: &GraphSkeleton) -> Result<DistanceMatrix> {
    let lengths: Vec<f64> = skeleton
        .edge_freq()
        .iter()
        .map(|&f| 1.0 / f as f64)
        .collect();
    shortest_paths(skeleton, &lengths)
}

#[derive(PartialEq)]
struct Candidate {
    dist: f64,
    vertex: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn shortest_paths(skeleton: &GraphSkeleton, lengths: &[f64]) -> Result<DistanceMatrix> {
    let n = skeleton.n_vertices();
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (&(a, b), &len) in skeleton.edges().iter().zip(lengths) {
        if !(len > 0.0) {
            return Err(Error::structure(format!("non-positive edge length {len}")));
        }
        adjacency[a].push((b, len));
        adjacency[b].push((a, len));
    }

    let mut data = vec![f64::INFINITY; n * n];
    let mut heap = BinaryHeap::new();
    for source in 0..n {
        let dist = &mut data[source * n..(source + 1) * n];
        dist[source] = 0.0;
        heap.push(Candidate {
            dist: 0.0,
            vertex: source,
        });
        while let Some(Candidate { dist: d, vertex: u }) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, len) in &adjacency[u] {
                let next = d + len;
                if next < dist[v] {
                    dist[v] = next;
                    heap.push(Candidate {
                        dist: next,
                        vertex: v,
                    });
                }
            }
        }
    }
    if data.iter().any(|d| d.is_infinite()) {
        return Err(Error::structure(
            "graph is disconnected; the path metric is undefined",
        ));
    }
    // Summation order differs between the two directions; keep the smaller.
    for i in 0..n {
        for j in i + 1..n {
            let d = data[i * n + j].min(data[j * n + i]);
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix {
        labels: skeleton.vertices().to_vec(),
        data,
    })
}
