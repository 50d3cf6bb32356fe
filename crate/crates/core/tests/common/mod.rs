#![allow(dead_code)]

use std::sync::Arc;

use feathom::{
    DiagramPoint, DistanceMatrix, FeatureSet, FeaturedSeries, InfluenceVector, TimeSeries,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn schema() -> Arc<FeatureSet> {
    Arc::new(FeatureSet::new(["a", "b", "c"], ["p", "q"]).unwrap())
}

/// Random walk over `k` symbols (5..=15) that visits every symbol, never
/// repeats a symbol back to back, and carries at most one first feature per
/// timestamp.
pub fn random_series(rng: &mut ChaCha8Rng) -> FeaturedSeries {
    let k = rng.gen_range(5..=15);
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(rng);
    let mut values = order.clone();
    let extra = rng.gen_range(k..=3 * k);
    for _ in 0..extra {
        let last = *values.last().unwrap();
        let mut next = rng.gen_range(0..k);
        while next == last {
            next = rng.gen_range(0..k);
        }
        values.push(next);
    }
    let n = values.len();
    let feat0 = (0..n)
        .map(|_| (0..3).filter(|_| rng.gen_bool(0.3)).collect())
        .collect();
    let feat1 = (0..n)
        .map(|_| match rng.gen_range(0..3) {
            0 => vec![],
            j => vec![j - 1],
        })
        .collect();
    let base = TimeSeries::from_values(values.iter().map(|v| format!("s{v}")));
    FeaturedSeries::new(base, feat0, feat1, schema()).unwrap()
}

pub fn random_influence(rng: &mut ChaCha8Rng, schema: &FeatureSet) -> InfluenceVector {
    let g0 = (0..=schema.zeroth().len())
        .map(|_| rng.gen_range(0.0..=5.0))
        .collect();
    let g1 = (0..=schema.first().len())
        .map(|_| rng.gen_range(0.0..=5.0))
        .collect();
    InfluenceVector::from_parts(schema, g0, g1).unwrap()
}

/// Floyd-Warshall over the plain `1 / f_e` edge lengths, counted straight
/// from the raw series. Rows follow first-appearance order.
pub fn floyd_warshall_frequency(series: &FeaturedSeries) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut labels: Vec<String> = Vec::new();
    for v in series.values() {
        if !labels.contains(v) {
            labels.push(v.clone());
        }
    }
    let n = labels.len();
    let idx = |s: &String| labels.iter().position(|l| l == s).unwrap();
    let mut freq = vec![vec![0u32; n]; n];
    for w in series.values().windows(2) {
        let (a, b) = (idx(&w[0]), idx(&w[1]));
        if a != b {
            freq[a][b] += 1;
            freq[b][a] += 1;
        }
    }
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        d[i][i] = 0.0;
        for j in 0..n {
            if freq[i][j] > 0 {
                d[i][j] = 1.0 / freq[i][j] as f64;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    (labels, d)
}

/// Random metric: shortest paths over a complete graph with random weights.
pub fn random_metric(rng: &mut ChaCha8Rng, n: usize) -> DistanceMatrix {
    let mut d = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let w = rng.gen_range(0.1..2.0);
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
            }
        }
    }
    DistanceMatrix::from_rows((0..n).map(|i| format!("v{i}")).collect(), d).unwrap()
}

/// Prim's algorithm: sorted minimum spanning tree edge lengths.
pub fn mst_lengths(d: &DistanceMatrix) -> Vec<f64> {
    let n = d.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut out = Vec::new();
    best[0] = 0.0;
    for step in 0..n {
        let u = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]))
            .unwrap();
        in_tree[u] = true;
        if step > 0 {
            out.push(best[u]);
        }
        for v in 0..n {
            if !in_tree[v] {
                best[v] = best[v].min(d.get(u, v));
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

fn diam(d: &DistanceMatrix, s: &[usize]) -> f64 {
    let mut m: f64 = 0.0;
    for (i, &a) in s.iter().enumerate() {
        for &b in &s[i + 1..] {
            m = m.max(d.get(a, b));
        }
    }
    m
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            go(v + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Rank of a set of GF(2) vectors.
fn rank(vectors: impl IntoIterator<Item = u128>) -> usize {
    let mut basis: Vec<u128> = Vec::new();
    for mut v in vectors {
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

/// Brute-force persistence diagram in dimension `p` (0 or 1) of the Rips
/// filtration, from ranks of induced maps `H_p(K_r) -> H_p(K_s)` and
/// inclusion-exclusion over the distinct filtration values.
pub fn brute_diagram(d: &DistanceMatrix, p: usize) -> Vec<DiagramPoint> {
    let n = d.len();
    let faces = if p == 0 { Vec::new() } else { subsets(n, p) };
    let cells = subsets(n, p + 1);
    let cofaces = subsets(n, p + 2);
    assert!(
        cells.len() <= 128 && faces.len() <= 128,
        "oracle limited to small complexes"
    );
    let boundary = |s: &[usize], targets: &[Vec<usize>]| -> u128 {
        (0..s.len()).fold(0u128, |acc, skip| {
            let face: Vec<usize> = s
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, &v)| v)
                .collect();
            acc ^ (1u128 << targets.iter().position(|t| *t == face).unwrap())
        })
    };
    let cell_val: Vec<f64> = cells.iter().map(|s| diam(d, s)).collect();
    let coface_val: Vec<f64> = cofaces.iter().map(|s| diam(d, s)).collect();

    let mut values: Vec<f64> = cell_val.iter().chain(&coface_val).copied().collect();
    values.push(0.0);
    values.sort_by(f64::total_cmp);
    values.dedup();

    // Cycle space of K_r as GF(2) vectors over the p-cells.
    let cycles = |r: f64| -> Vec<u128> {
        let mut out = Vec::new();
        if p == 0 {
            for (i, &v) in cell_val.iter().enumerate() {
                if v <= r {
                    out.push(1u128 << i);
                }
            }
            return out;
        }
        let mut pivots: Vec<(u128, u128)> = Vec::new();
        for (i, s) in cells.iter().enumerate() {
            if cell_val[i] > r {
                continue;
            }
            let (mut bd, mut chain) = (boundary(s, &faces), 1u128 << i);
            while let Some(&(pb, pc)) = pivots
                .iter()
                .find(|(pb, _)| bd != 0 && pb.leading_zeros() == bd.leading_zeros())
            {
                bd ^= pb;
                chain ^= pc;
            }
            if bd == 0 {
                out.push(chain);
            } else {
                pivots.push((bd, chain));
            }
        }
        out
    };
    let boundaries = |s: f64| -> Vec<u128> {
        cofaces
            .iter()
            .zip(&coface_val)
            .filter(|(_, &v)| v <= s)
            .map(|(c, _)| boundary(c, &cells))
            .collect()
    };
    let m = values.len();
    let beta = |i: isize, j: usize| -> isize {
        if i < 0 {
            return 0;
        }
        let z = cycles(values[i as usize]);
        let b = boundaries(values[j]);
        let rb = rank(b.iter().copied()) as isize;
        rank(z.into_iter().chain(b)) as isize - rb
    };

    let mut out = Vec::new();
    for i in 0..m {
        let ii = i as isize;
        for j in i + 1..m {
            let mu = beta(ii, j - 1) - beta(ii, j) - beta(ii - 1, j - 1) + beta(ii - 1, j);
            for _ in 0..mu {
                out.push(DiagramPoint::new(p, values[i], values[j]));
            }
        }
        let mu = beta(ii, m - 1) - beta(ii - 1, m - 1);
        for _ in 0..mu {
            out.push(DiagramPoint::new(p, values[i], f64::INFINITY));
        }
    }
    out
}

pub fn sorted(mut v: Vec<DiagramPoint>) -> Vec<DiagramPoint> {
    v.sort_by(|a, b| {
        a.birth
            .total_cmp(&b.birth)
            .then(a.death.total_cmp(&b.death))
    });
    v
}

pub fn same_points(a: &[DiagramPoint], b: &[DiagramPoint], tol: f64) -> bool {
    let (a, b) = (sorted(a.to_vec()), sorted(b.to_vec()));
    a.len() == b.len()
        && a.iter().zip(&b).all(|(x, y)| {
            (x.birth - y.birth).abs() <= tol
                && (x.death == y.death || (x.death - y.death).abs() <= tol)
        })
}

/// Exhaustive bottleneck distance over all partial matchings.
pub fn brute_bottleneck(a: &[DiagramPoint], b: &[DiagramPoint]) -> f64 {
    fn linf(p: &DiagramPoint, q: &DiagramPoint) -> f64 {
        (p.birth - q.birth).abs().max((p.death - q.death).abs())
    }
    fn diag(p: &DiagramPoint) -> f64 {
        (p.death - p.birth) / 2.0
    }
    fn go(
        i: usize,
        a: &[DiagramPoint],
        b: &[DiagramPoint],
        used: &mut [bool],
        acc: f64,
        best: &mut f64,
    ) {
        if i == a.len() {
            let rest = b
                .iter()
                .zip(used.iter())
                .filter(|(_, &u)| !u)
                .map(|(q, _)| diag(q));
            *best = best.min(rest.fold(acc, f64::max));
            return;
        }
        go(i + 1, a, b, used, acc.max(diag(&a[i])), best);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                go(i + 1, a, b, used, acc.max(linf(&a[i], &b[j])), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(0, a, b, &mut vec![false; b.len()], 0.0, &mut best);
    best
}

pub fn tent(p: &DiagramPoint, x: f64) -> f64 {
    (x - p.birth).min(p.death - x).max(0.0)
}
