//! Diagram analytics: bottleneck distance, persistence landscapes and their
//! norms, summary statistics, and the overlapping percentage of cycles.

use std::collections::{HashSet, VecDeque};

use serde::Serialize;

use crate::format::format_number;
use crate::persistence::DiagramPoint;
use crate::series::FeaturedSeries;

fn linf(a: &DiagramPoint, b: &DiagramPoint) -> f64 {
    (a.birth - b.birth).abs().max((a.death - b.death).abs())
}

fn diagonal_cost(p: &DiagramPoint) -> f64 {
    (p.death - p.birth) / 2.0
}

/// Bottleneck distance between two diagrams of the same dimension.
///
/// Infinite points can only match infinite points; differing counts give
/// `f64::INFINITY`. Finite points may also match the diagonal at half their
/// persistence. The finite part is solved exactly by binary search over the
/// candidate costs with a bipartite perfect-matching test.
pub fn bottleneck_distance(a: &[DiagramPoint], b: &[DiagramPoint]) -> f64 {
    let (fa, ia): (Vec<DiagramPoint>, Vec<DiagramPoint>) = a.iter().partition(|p| p.is_finite());
    let (fb, ib): (Vec<DiagramPoint>, Vec<DiagramPoint>) = b.iter().partition(|p| p.is_finite());
    if ia.len() != ib.len() {
        return f64::INFINITY;
    }
    // On a line the sorted matching is optimal for the max cost.
    let mut births_a: Vec<f64> = ia.iter().map(|p| p.birth).collect();
    let mut births_b: Vec<f64> = ib.iter().map(|p| p.birth).collect();
    births_a.sort_by(f64::total_cmp);
    births_b.sort_by(f64::total_cmp);
    let essential = births_a
        .iter()
        .zip(&births_b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    essential.max(finite_bottleneck(&fa, &fb))
}

fn finite_bottleneck(a: &[DiagramPoint], b: &[DiagramPoint]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let mut candidates: Vec<f64> = a.iter().chain(b).map(diagonal_cost).collect();
    candidates.extend(a.iter().flat_map(|p| b.iter().map(move |q| linf(p, q))));
    candidates.push(0.0);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching_within(a, b, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

/// Left side: points of `a`, then diagonal copies of `b`. Right side: points
/// of `b`, then diagonal copies of `a`.
fn perfect_matching_within(a: &[DiagramPoint], b: &[DiagramPoint], r: f64) -> bool {
    let (na, nb) = (a.len(), b.len());
    let n = na + nb;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, p) in a.iter().enumerate() {
        for (j, q) in b.iter().enumerate() {
            if linf(p, q) <= r {
                adj[i].push(j);
            }
        }
        if diagonal_cost(p) <= r {
            adj[i].push(nb + i);
        }
    }
    for (j, q) in b.iter().enumerate() {
        if diagonal_cost(q) <= r {
            adj[na + j].push(j);
        }
        adj[na + j].extend((0..na).map(|i| nb + i));
    }
    hopcroft_karp(&adj, n) == n
}

/// Maximum bipartite matching size; `adj[u]` lists right vertices of left `u`.
fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> usize {
    const FREE: usize = usize::MAX;
    let n_left = adj.len();
    let mut match_l = vec![FREE; n_left];
    let mut match_r = vec![FREE; n_right];
    let mut dist = vec![0usize; n_left];
    let mut matched = 0;

    loop {
        // Layer free left vertices.
        let mut queue = VecDeque::new();
        for u in 0..n_left {
            if match_l[u] == FREE {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = match_r[v];
                if w == FREE {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            break;
        }

        fn augment(
            u: usize,
            adj: &[Vec<usize>],
            dist: &mut [usize],
            match_l: &mut [usize],
            match_r: &mut [usize],
        ) -> bool {
            for &v in &adj[u] {
                let w = match_r[v];
                if w == usize::MAX
                    || (dist[w] == dist[u] + 1 && augment(w, adj, dist, match_l, match_r))
                {
                    match_l[u] = v;
                    match_r[v] = u;
                    return true;
                }
            }
            dist[u] = usize::MAX;
            false
        }
        for u in 0..n_left {
            if match_l[u] == FREE && augment(u, adj, &mut dist, &mut match_l, &mut match_r) {
                matched += 1;
            }
        }
    }
    matched
}

/// Replaces infinite deaths by `cap` (or the birth, if later).
pub fn cap_infinite(points: &[DiagramPoint], cap: f64) -> Vec<DiagramPoint> {
    points
        .iter()
        .map(|p| {
            if p.is_finite() {
                *p
            } else {
                DiagramPoint::new(p.dim, p.birth, cap.max(p.birth))
            }
        })
        .collect()
}

/// Persistence landscape: `levels[k - 1]` holds the breakpoints of `lambda_k`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Landscape {
    levels: Vec<Vec<(f64, f64)>>,
}

impl Landscape {
    pub fn levels(&self) -> &[Vec<(f64, f64)>] {
        &self.levels
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// `lambda_k(x)` for 1-based `k`; zero beyond the last level.
    pub fn eval(&self, k: usize, x: f64) -> f64 {
        let Some(level) = k.checked_sub(1).and_then(|i| self.levels.get(i)) else {
            return 0.0;
        };
        let (first, last) = (level[0], level[level.len() - 1]);
        if x <= first.0 || x >= last.0 {
            return 0.0;
        }
        let i = level.partition_point(|p| p.0 <= x);
        let (x0, y0) = level[i - 1];
        let (x1, y1) = level[i];
        if x1 == x0 {
            return y0.max(y1);
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// CSV `k,x,y`, one row per breakpoint.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,x,y\n");
        for (k, level) in self.levels.iter().enumerate() {
            for &(x, y) in level {
                out.push_str(&format!(
                    "{},{},{}\n",
                    k + 1,
                    format_number(x),
                    format_number(y)
                ));
            }
        }
        out
    }
}

fn tent(p: &DiagramPoint, x: f64) -> f64 {
    (x - p.birth).min(p.death - x).max(0.0)
}

/// Exact landscape of the finite points of a diagram.
///
/// Every tent is linear between its birth, peak and death, and two tents can
/// only cross where a rising side meets a falling side, at `(b_m + d_n) / 2`.
/// Between consecutive critical abscissae the k-th largest tent is therefore
/// linear, so sampling it at the critical points is exact.
pub fn persistence_landscape(points: &[DiagramPoint]) -> Landscape {
    let pts: Vec<DiagramPoint> = points
        .iter()
        .copied()
        .filter(|p| p.is_finite() && p.death > p.birth)
        .collect();
    if pts.is_empty() {
        return Landscape::default();
    }
    let lo = pts.iter().map(|p| p.birth).fold(f64::INFINITY, f64::min);
    let hi = pts
        .iter()
        .map(|p| p.death)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut xs: Vec<f64> = pts.iter().flat_map(|p| [p.birth, p.death]).collect();
    for p in &pts {
        for q in &pts {
            let x = (p.birth + q.death) / 2.0;
            if x > lo && x < hi {
                xs.push(x);
            }
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(xs.len());
    let mut depth = 0;
    for &x in &xs {
        let mut vals: Vec<f64> = pts
            .iter()
            .map(|p| tent(p, x))
            .filter(|&v| v > 0.0)
            .collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        depth = depth.max(vals.len());
        columns.push(vals);
    }

    let levels = (0..depth)
        .map(|k| {
            let raw: Vec<(f64, f64)> = xs
                .iter()
                .zip(&columns)
                .map(|(&x, vals)| (x, vals.get(k).copied().unwrap_or(0.0)))
                .collect();
            drop_flat_zeros(raw)
        })
        .collect();
    Landscape { levels }
}

/// Removes breakpoints inside runs of zeros; the run endpoints stay.
fn drop_flat_zeros(raw: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let n = raw.len();
    let first = raw
        .iter()
        .position(|p| p.1 > 0.0)
        .map_or(0, |i| i.saturating_sub(1));
    let last = raw
        .iter()
        .rposition(|p| p.1 > 0.0)
        .map_or(n - 1, |i| (i + 1).min(n - 1));
    (first..=last)
        .filter(|&i| {
            let interior_zero = i > first
                && i < last
                && raw[i].1 == 0.0
                && raw[i - 1].1 == 0.0
                && raw[i + 1].1 == 0.0;
            !interior_zero
        })
        .map(|i| raw[i])
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LandscapeNorm {
    /// Sum over levels of the sup norm.
    SupSum,
    /// Sum over levels of the integral.
    L1Sum,
}

pub fn landscape_norm(l: &Landscape, which: LandscapeNorm) -> f64 {
    l.levels
        .iter()
        .map(|level| match which {
            LandscapeNorm::SupSum => level.iter().map(|p| p.1).fold(0.0, f64::max),
            LandscapeNorm::L1Sum => level
                .windows(2)
                .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
                .sum(),
        })
        .sum()
}

/// Longest and shortest persistence and number of finite points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagramStats {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub longest: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shortest: Option<f64>,
    pub count: usize,
}

pub fn diagram_stats(points: &[DiagramPoint]) -> DiagramStats {
    let pers: Vec<f64> = points
        .iter()
        .filter(|p| p.is_finite())
        .map(DiagramPoint::persistence)
        .collect();
    DiagramStats {
        longest: pers.iter().copied().reduce(f64::max),
        shortest: pers.iter().copied().reduce(f64::min),
        count: pers.len(),
    }
}

/// Percentage of cycle-covered timestamps whose observation lies in at
/// least two representative cycles. Zero when no timestamp is covered.
pub fn overlapping_percentage<S: AsRef<str>>(series: &FeaturedSeries, reps: &[Vec<S>]) -> f64 {
    let sets: Vec<HashSet<&str>> = reps
        .iter()
        .map(|r| r.iter().map(AsRef::as_ref).collect())
        .collect();
    let union: HashSet<&str> = sets.iter().flatten().copied().collect();
    let mut shared: HashSet<&str> = HashSet::new();
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            shared.extend(a.intersection(b).copied());
        }
    }
    let covered = series
        .values()
        .iter()
        .filter(|v| union.contains(v.as_str()))
        .count();
    if covered == 0 {
        return 0.0;
    }
    let overlapping = series
        .values()
        .iter()
        .filter(|v| shared.contains(v.as_str()))
        .count();
    100.0 * overlapping as f64 / covered as f64
}
