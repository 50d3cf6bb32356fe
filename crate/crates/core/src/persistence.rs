//! Vietoris–Rips filtrations and persistent homology over Z/2.
//!
//! Simplices are ordered by (filtration value, dimension, lexicographic
//! vertex list), which puts every face before its cofaces and makes pairings
//! and representative cycles reproducible. The boundary matrix is reduced
//! column by column from the top dimension down, clearing the columns of
//! simplices already known to be births.

use std::collections::BTreeMap;
use std::io::Read;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::{format_number, parse_number};
use crate::metric::DistanceMatrix;

pub const DEFAULT_MAX_DIM: usize = 2;
pub const DEFAULT_VERTEX_CAP: usize = 64;
/// Highest simplex dimension the engine will build.
pub const MAX_SUPPORTED_DIM: usize = 3;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simplex {
    vertices: [u32; 4],
    dim: u8,
    value: f64,
}

impl Simplex {
    pub fn vertices(&self) -> &[u32] {
        &self.vertices[..=self.dim as usize]
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// Largest pairwise distance among the vertices (0 for a vertex).
    pub fn value(&self) -> f64 {
        self.value
    }
}

/// Every simplex up to `max_dim`, sorted into filtration order.
#[derive(Debug, Clone)]
pub struct Filtration {
    simplices: Vec<Simplex>,
    labels: Vec<String>,
    max_dim: usize,
    requested_dim: usize,
}

impl Filtration {
    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Top simplex dimension actually built (capped by the vertex count).
    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn n_vertices(&self) -> usize {
        self.labels.len()
    }

    /// Homology dimensions whose diagrams are complete for this filtration.
    pub fn homology_dims(&self) -> std::ops::Range<usize> {
        if self.max_dim < self.requested_dim {
            0..self.max_dim + 1
        } else {
            0..self.requested_dim
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PersistenceConfig {
    /// Top simplex dimension; diagrams are produced for dimensions below it.
    pub max_dim: usize,
    pub vertex_cap: usize,
    /// Keep the column data needed to report 1-cycle representatives.
    pub representatives: bool,
}

impl Default for PersistenceConfig {
    fn default() -> Self {
        Self {
            max_dim: DEFAULT_MAX_DIM,
            vertex_cap: DEFAULT_VERTEX_CAP,
            representatives: false,
        }
    }
}

impl PersistenceConfig {
    pub fn with_representatives(mut self) -> Self {
        self.representatives = true;
        self
    }
}

fn binomial_table(n: usize, k: usize) -> Vec<Vec<u128>> {
    let mut table = vec![vec![0u128; k + 1]; n + 1];
    for (i, row) in table.iter_mut().enumerate() {
        row[0] = 1;
        if i <= k {
            row[i] = 1;
        }
    }
    for i in 1..=n {
        for j in 1..=k.min(i.saturating_sub(1)) {
            table[i][j] = table[i - 1][j - 1] + table[i - 1][j];
        }
    }
    table
}

/// Number of simplices of dimension `0..=max_dim` on `n` vertices.
pub fn simplex_count(n: usize, max_dim: usize) -> u128 {
    let binom = binomial_table(n, max_dim + 1);
    (0..=max_dim.min(n.saturating_sub(1)))
        .map(|p| binom[n][p + 1])
        .sum()
}

/// Rips filtration of a finite metric space with the default vertex cap.
pub fn rips_filtration(d: &DistanceMatrix, max_dim: usize) -> Result<Filtration> {
    rips_filtration_capped(d, max_dim, DEFAULT_VERTEX_CAP)
}

pub fn rips_filtration_capped(
    d: &DistanceMatrix,
    max_dim: usize,
    vertex_cap: usize,
) -> Result<Filtration> {
    if !(1..=MAX_SUPPORTED_DIM).contains(&max_dim) {
        return Err(Error::input(format!(
            "max_dim must be in 1..={MAX_SUPPORTED_DIM}, got {max_dim}"
        )));
    }
    let n = d.len();
    if n == 0 {
        return Err(Error::input("empty metric space"));
    }
    let top = max_dim.min(n - 1);
    if n > vertex_cap {
        return Err(Error::Resource {
            what: format!("{n} vertices exceed the Rips vertex cap {vertex_cap}"),
            count: simplex_count(n, top),
        });
    }

    let mut simplices = Vec::with_capacity(simplex_count(n, top) as usize);
    let mut current = [0u32; 4];
    extend_simplices(d, &mut current, 0, 0, 0.0, top, &mut simplices);
    simplices.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.dim.cmp(&b.dim))
            .then_with(|| a.vertices().cmp(b.vertices()))
    });
    Ok(Filtration {
        simplices,
        labels: d.labels().to_vec(),
        max_dim: top,
        requested_dim: max_dim,
    })
}

fn extend_simplices(
    d: &DistanceMatrix,
    current: &mut [u32; 4],
    len: usize,
    start: usize,
    value: f64,
    top: usize,
    out: &mut Vec<Simplex>,
) {
    for v in start..d.len() {
        let mut val = value;
        for &u in &current[..len] {
            val = val.max(d.get(u as usize, v));
        }
        current[len] = v as u32;
        let mut vertices = [0u32; 4];
        vertices[..=len].copy_from_slice(&current[..=len]);
        out.push(Simplex {
            vertices,
            dim: len as u8,
            value: val,
        });
        if len < top {
            extend_simplices(d, current, len + 1, v + 1, val, top, out);
        }
    }
}

/// One point of a persistence diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagramPoint {
    pub dim: usize,
    pub birth: f64,
    /// `f64::INFINITY` for classes that never die.
    pub death: f64,
}

impl DiagramPoint {
    pub fn new(dim: usize, birth: f64, death: f64) -> Self {
        Self { dim, birth, death }
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_finite(&self) -> bool {
        self.death.is_finite()
    }
}

/// A 1-cycle given by its edges; `vertices` walks the loop when the edges
/// form a single simple cycle and is sorted otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepresentativeCycle {
    pub edges: Vec<(usize, usize)>,
    pub vertices: Vec<usize>,
}

impl RepresentativeCycle {
    pub fn from_edges(mut edges: Vec<(usize, usize)>) -> Self {
        for e in edges.iter_mut() {
            *e = (e.0.min(e.1), e.0.max(e.1));
        }
        edges.sort_unstable();
        let vertices = walk_simple_cycle(&edges).unwrap_or_else(|| {
            let mut vs: Vec<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
            vs.sort_unstable();
            vs.dedup();
            vs
        });
        Self { edges, vertices }
    }

    /// Every vertex meets an even number of edges.
    pub fn is_closed(&self) -> bool {
        let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
        for &(a, b) in &self.edges {
            *degree.entry(a).or_default() += 1;
            *degree.entry(b).or_default() += 1;
        }
        degree.values().all(|d| d % 2 == 0)
    }
}

fn walk_simple_cycle(edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut adjacency: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(a, b) in edges {
        adjacency.entry(a).or_default().push(b);
        adjacency.entry(b).or_default().push(a);
    }
    if adjacency.len() < 3
        || adjacency.len() != edges.len()
        || adjacency.values().any(|n| n.len() != 2)
    {
        return None;
    }
    let start = *adjacency.keys().next()?;
    let mut order = vec![start];
    let mut prev = start;
    let mut cur = *adjacency[&start].iter().min()?;
    while cur != start {
        order.push(cur);
        let next = adjacency[&cur].iter().copied().find(|&x| x != prev)?;
        prev = cur;
        cur = next;
        if order.len() > edges.len() {
            return None;
        }
    }
    (order.len() == adjacency.len()).then_some(order)
}

/// Diagram points sorted by (dim, birth, death), with optional 1-cycle
/// representatives keyed by point index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PersistenceDiagram {
    points: Vec<DiagramPoint>,
    reps: BTreeMap<usize, RepresentativeCycle>,
}

impl PersistenceDiagram {
    pub fn from_points(mut points: Vec<DiagramPoint>) -> Self {
        points.sort_by(cmp_points);
        Self {
            points,
            reps: BTreeMap::new(),
        }
    }

    pub fn points(&self) -> &[DiagramPoint] {
        &self.points
    }

    pub fn dim(&self, dim: usize) -> Vec<DiagramPoint> {
        self.points
            .iter()
            .copied()
            .filter(|p| p.dim == dim)
            .collect()
    }

    pub fn finite(&self, dim: usize) -> Vec<DiagramPoint> {
        self.points
            .iter()
            .copied()
            .filter(|p| p.dim == dim && p.is_finite())
            .collect()
    }

    pub fn representatives(&self) -> &BTreeMap<usize, RepresentativeCycle> {
        &self.reps
    }

    /// CSV `dim,birth,death`, `inf` for infinite deaths.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dim,birth,death\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{}\n",
                p.dim,
                format_number(p.birth),
                format_number(p.death)
            ));
        }
        out
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.iter().ne(["dim", "birth", "death"]) {
            return Err(Error::format("expected header dim,birth,death"));
        }
        let mut points = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = || Error::format(format!("malformed diagram row {}", i + 1));
            let dim = rec[0].parse().map_err(|_| bad())?;
            let birth = parse_number(&rec[1]).ok_or_else(bad)?;
            let death = parse_number(&rec[2]).ok_or_else(bad)?;
            if death < birth {
                return Err(Error::domain(format!(
                    "death before birth at row {}",
                    i + 1
                )));
            }
            points.push(DiagramPoint::new(dim, birth, death));
        }
        Ok(Self::from_points(points))
    }

    /// JSON list of vertex-label arrays, one per represented point, in point order.
    pub fn reps_json(&self, labels: &[String]) -> Result<String> {
        let cycles: Vec<Vec<&str>> = self
            .reps
            .values()
            .map(|c| c.vertices.iter().map(|&v| labels[v].as_str()).collect())
            .collect();
        Ok(serde_json::to_string_pretty(&cycles)?)
    }
}

fn cmp_points(a: &DiagramPoint, b: &DiagramPoint) -> std::cmp::Ordering {
    a.dim
        .cmp(&b.dim)
        .then(a.birth.total_cmp(&b.birth))
        .then(a.death.total_cmp(&b.death))
}

struct FaceIndex {
    binom: Vec<Vec<u128>>,
    position: Vec<Vec<usize>>,
}

impl FaceIndex {
    fn new(f: &Filtration) -> Self {
        let n = f.n_vertices();
        let binom = binomial_table(n, f.max_dim + 1);
        let mut position: Vec<Vec<usize>> = (0..=f.max_dim)
            .map(|p| vec![NONE; binom[n][p + 1] as usize])
            .collect();
        for (i, s) in f.simplices.iter().enumerate() {
            let key = Self::key(&binom, s.vertices());
            position[s.dim()][key] = i;
        }
        Self { binom, position }
    }

    fn key(binom: &[Vec<u128>], vertices: &[u32]) -> usize {
        vertices
            .iter()
            .enumerate()
            .map(|(i, &v)| binom[v as usize][i + 1])
            .sum::<u128>() as usize
    }

    fn boundary(&self, s: &Simplex) -> Vec<usize> {
        let vs = s.vertices();
        if vs.len() == 1 {
            return Vec::new();
        }
        let mut face = Vec::with_capacity(vs.len() - 1);
        let mut col: Vec<usize> = (0..vs.len())
            .map(|skip| {
                face.clear();
                face.extend(
                    vs.iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &v)| v),
                );
                self.position[s.dim() - 1][Self::key(&self.binom, &face)]
            })
            .collect();
        col.sort_unstable();
        col
    }
}

/// Z/2 sum of two sorted index sets.
fn add_columns(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

struct Reduction {
    pairs: Vec<(usize, usize)>,
    is_birth: Vec<bool>,
    is_death: Vec<bool>,
    reduced: Vec<Vec<usize>>,
    /// Chains whose boundary reduced to zero, for 1-dimensional columns.
    cycles: Vec<Vec<usize>>,
}

fn reduce(f: &Filtration, track_cycles: bool) -> Reduction {
    let m = f.simplices.len();
    let faces = FaceIndex::new(f);
    let mut by_dim: Vec<Vec<usize>> = vec![Vec::new(); f.max_dim + 1];
    for (i, s) in f.simplices.iter().enumerate() {
        by_dim[s.dim()].push(i);
    }

    let mut pivot_owner = vec![NONE; m];
    let mut is_birth = vec![false; m];
    let mut is_death = vec![false; m];
    let mut reduced: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut chains: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut cycles: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut pairs = Vec::new();

    for p in (1..=f.max_dim).rev() {
        let track = track_cycles && p == 1;
        for &j in &by_dim[p] {
            if is_birth[j] {
                // Cleared: its column reduces to zero.
                continue;
            }
            let mut col = faces.boundary(&f.simplices[j]);
            let mut chain = if track { vec![j] } else { Vec::new() };
            while let Some(&low) = col.last() {
                let owner = pivot_owner[low];
                if owner == NONE {
                    break;
                }
                col = add_columns(&col, &reduced[owner]);
                if track {
                    chain = add_columns(&chain, &chains[owner]);
                }
            }
            match col.last() {
                Some(&low) => {
                    pivot_owner[low] = j;
                    is_birth[low] = true;
                    is_death[j] = true;
                    pairs.push((low, j));
                    reduced[j] = col;
                    if track {
                        chains[j] = chain;
                    }
                }
                None if track => cycles[j] = chain,
                None => {}
            }
        }
    }
    Reduction {
        pairs,
        is_birth,
        is_death,
        reduced,
        cycles,
    }
}

fn edge_cycle(f: &Filtration, edge_ids: &[usize]) -> RepresentativeCycle {
    RepresentativeCycle::from_edges(
        edge_ids
            .iter()
            .map(|&e| {
                let v = f.simplices[e].vertices();
                (v[0] as usize, v[1] as usize)
            })
            .collect(),
    )
}

/// Persistence diagrams in every dimension below the filtration's top
/// dimension. Zero-persistence pairs are dropped.
pub fn persistence_diagrams(f: &Filtration) -> PersistenceDiagram {
    diagrams_impl(f, false)
}

/// Like [`persistence_diagrams`], also recording a representative 1-cycle
/// for every dimension-1 point.
pub fn persistence_with_representatives(f: &Filtration) -> PersistenceDiagram {
    diagrams_impl(f, true)
}

fn diagrams_impl(f: &Filtration, with_reps: bool) -> PersistenceDiagram {
    let red = reduce(f, with_reps);
    let dims = f.homology_dims();
    let mut entries: Vec<(DiagramPoint, Option<RepresentativeCycle>)> = Vec::new();

    for &(b, d) in &red.pairs {
        let (sb, sd) = (&f.simplices[b], &f.simplices[d]);
        if !dims.contains(&sb.dim()) || !(sd.value > sb.value) {
            continue;
        }
        let rep = (with_reps && sb.dim() == 1).then(|| edge_cycle(f, &red.reduced[d]));
        entries.push((DiagramPoint::new(sb.dim(), sb.value, sd.value), rep));
    }
    for (i, s) in f.simplices.iter().enumerate() {
        if dims.contains(&s.dim()) && !red.is_birth[i] && !red.is_death[i] {
            let rep = (with_reps && s.dim() == 1).then(|| edge_cycle(f, &red.cycles[i]));
            entries.push((DiagramPoint::new(s.dim(), s.value, f64::INFINITY), rep));
        }
    }

    entries.sort_by(|a, b| cmp_points(&a.0, &b.0));
    let mut points = Vec::with_capacity(entries.len());
    let mut reps = BTreeMap::new();
    for (i, (p, rep)) in entries.into_iter().enumerate() {
        points.push(p);
        if let Some(rep) = rep {
            reps.insert(i, rep);
        }
    }
    PersistenceDiagram { points, reps }
}

/// Dimension-1 points paired with their representative cycles.
///
/// Finite points use the reduced column of the killing triangle, whose edges
/// are all present at the birth value. Infinite points use the kernel chain
/// of the creating edge.
pub fn representative_cycles(f: &Filtration) -> Vec<(DiagramPoint, RepresentativeCycle)> {
    let dgm = persistence_with_representatives(f);
    dgm.reps
        .iter()
        .map(|(&i, c)| (dgm.points[i], c.clone()))
        .collect()
}

/// Finite dimension-0 deaths by Kruskal's algorithm: the sorted edge lengths
/// of a minimum spanning tree of the complete distance graph.
pub fn zero_dim_deaths_union_find(d: &DistanceMatrix) -> Vec<f64> {
    let n = d.len();
    let mut edges: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| (d.get(i, j), i, j))
        .collect();
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut parent: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut deaths = Vec::with_capacity(n.saturating_sub(1));
    for (w, a, b) in edges {
        let (mut ra, mut rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            continue;
        }
        if size[ra] < size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        parent[rb] = ra;
        size[ra] += size[rb];
        deaths.push(w);
    }
    deaths
}
