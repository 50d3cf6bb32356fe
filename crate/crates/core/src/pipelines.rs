//! Application workflows: stock preprocessing, anomaly score curves, music
//! statistics grids and the empirical stability check.

use std::io::Read;
use std::sync::Arc;

use chrono::{Datelike, NaiveDate, Weekday};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::analytics::{
    bottleneck_distance, cap_infinite, diagram_stats, landscape_norm, overlapping_percentage,
    persistence_landscape, DiagramStats, LandscapeNorm,
};
use crate::error::{Error, Result};
use crate::format::{format_number, parse_number};
use crate::graph::{build_weighted_graph, CountMatrices, WeightedGraph};
use crate::metric::{auto_activation, distance_matrix, ActivationFn, DistanceMatrix};
use crate::persistence::{
    persistence_diagrams, persistence_with_representatives, rips_filtration_capped, DiagramPoint,
    PersistenceConfig, PersistenceDiagram,
};
use crate::series::{FeatureSet, FeaturedSeries, InfluenceVector, TimeSeries};

pub const WEEKDAYS: [&str; 5] = ["Mon", "Tue", "Wed", "Thu", "Fri"];

/// Which activation turns vertex weights into length reductions.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ActivationChoice {
    /// Gaussian rescaled by the graph's largest vertex-weight pair sum.
    #[default]
    Auto,
    Raw,
    Custom(ActivationFn),
}

impl ActivationChoice {
    pub fn resolve(&self, graph: &WeightedGraph) -> ActivationFn {
        match self {
            ActivationChoice::Auto => auto_activation(graph),
            ActivationChoice::Raw => ActivationFn::gaussian_raw(),
            ActivationChoice::Custom(f) => f.clone(),
        }
    }

    pub fn lipschitz_k(&self) -> f64 {
        match self {
            ActivationChoice::Auto => ActivationFn::gaussian_auto(0.0).lipschitz_k(),
            ActivationChoice::Raw => ActivationFn::gaussian_raw().lipschitz_k(),
            ActivationChoice::Custom(f) => f.lipschitz_k(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineConfig {
    pub activation: ActivationChoice,
    pub persistence: PersistenceConfig,
    /// Replace infinite deaths by this value before landscapes; drop them if `None`.
    pub cap_infinite: Option<f64>,
}

/// Every intermediate of one series-to-diagram run.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub graph: WeightedGraph,
    pub counts: CountMatrices,
    pub rho: ActivationFn,
    pub distances: DistanceMatrix,
    pub diagram: PersistenceDiagram,
}

impl Analysis {
    /// Vertex labels of each dimension-1 representative, in point order.
    pub fn representative_labels(&self) -> Vec<Vec<String>> {
        let labels = self.distances.labels();
        self.diagram
            .representatives()
            .values()
            .map(|c| c.vertices.iter().map(|&v| labels[v].clone()).collect())
            .collect()
    }
}

pub fn analyze(
    series: &FeaturedSeries,
    g: &InfluenceVector,
    cfg: &PipelineConfig,
) -> Result<Analysis> {
    let (graph, counts) = build_weighted_graph(series, g)?;
    let rho = cfg.activation.resolve(&graph);
    let distances = distance_matrix(&graph, &rho)?;
    let p = &cfg.persistence;
    let filtration = rips_filtration_capped(&distances, p.max_dim, p.vertex_cap)?;
    let diagram = if p.representatives {
        persistence_with_representatives(&filtration)
    } else {
        persistence_diagrams(&filtration)
    };
    Ok(Analysis {
        graph,
        counts,
        rho,
        distances,
        diagram,
    })
}

fn landscape_points(points: &[DiagramPoint], cap: Option<f64>) -> Vec<DiagramPoint> {
    match cap {
        Some(c) => cap_infinite(points, c),
        None => points
            .iter()
            .copied()
            .filter(DiagramPoint::is_finite)
            .collect(),
    }
}

fn equal_width_bin(x: f64, lo: f64, hi: f64, bins: usize) -> usize {
    if hi <= lo {
        return bins / 2;
    }
    let k = ((x - lo) / (hi - lo) * bins as f64).floor();
    (k.max(0.0) as usize).min(bins - 1)
}

fn weekday_name(date: NaiveDate) -> Option<&'static str> {
    match date.weekday() {
        Weekday::Mon => Some("Mon"),
        Weekday::Tue => Some("Tue"),
        Weekday::Wed => Some("Wed"),
        Weekday::Thu => Some("Thu"),
        Weekday::Fri => Some("Fri"),
        Weekday::Sat | Weekday::Sun => None,
    }
}

/// Reads a `date,close` price CSV with ISO-8601 dates.
pub fn parse_prices<R: Read>(reader: R) -> Result<Vec<(NaiveDate, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["date", "close"] {
        return Err(Error::format(format!(
            "expected header date,close, found {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d").map_err(|e| {
            Error::format(format!("bad date {:?} at row {}: {e}", &record[0], row + 1))
        })?;
        let close: f64 = record[1]
            .parse()
            .map_err(|_| Error::format(format!("bad price {:?} at row {}", &record[1], row + 1)))?;
        out.push((date, close));
    }
    Ok(out)
}

/// Turns daily closes into a featured series of log-return bins.
///
/// Observation `t` is the bin `I1..In` of `X(t) = ln P(t+1) - ln P(t)`,
/// tagged with its weekday and with the bin `J1..Jm` of `X(t+1) - X(t)`.
/// The last observation has no successor and carries no `J` tag.
/// Constant inputs put everything in the middle bin.
pub fn stock_preprocess(
    prices: &[(NaiveDate, f64)],
    n_bins: usize,
    n_delta_bins: usize,
) -> Result<FeaturedSeries> {
    if prices.len() < 3 {
        return Err(Error::input(format!(
            "need at least 3 prices, got {}",
            prices.len()
        )));
    }
    if n_bins == 0 || n_delta_bins == 0 {
        return Err(Error::input("bin counts must be positive"));
    }
    if let Some((date, p)) = prices.iter().find(|(_, p)| !(*p > 0.0 && p.is_finite())) {
        return Err(Error::domain(format!("non-positive price {p} on {date}")));
    }
    let x: Vec<f64> = prices.windows(2).map(|w| (w[1].1 / w[0].1).ln()).collect();
    let dx: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let range = |v: &[f64]| {
        v.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| {
                (lo.min(a), hi.max(a))
            })
    };
    let (xlo, xhi) = range(&x);
    let (dlo, dhi) = range(&dx);

    let schema = Arc::new(FeatureSet::new(
        WEEKDAYS.map(String::from),
        (1..=n_delta_bins).map(|j| format!("J{j}")),
    )?);
    let n = x.len();
    let base = TimeSeries::new(
        prices[..n]
            .iter()
            .map(|(d, _)| d.format("%Y-%m-%d").to_string())
            .collect(),
        x.iter()
            .map(|&v| format!("I{}", equal_width_bin(v, xlo, xhi, n_bins) + 1))
            .collect(),
    )?;
    let feat0 = prices[..n]
        .iter()
        .map(|(d, _)| {
            weekday_name(*d)
                .and_then(|w| schema.index0(w))
                .into_iter()
                .collect()
        })
        .collect();
    let feat1 = (0..n)
        .map(|t| match dx.get(t) {
            Some(&v) => vec![equal_width_bin(v, dlo, dhi, n_delta_bins)],
            None => Vec::new(),
        })
        .collect();
    FeaturedSeries::new(base, feat0, feat1, schema)
}

fn serialize_number<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(&format_number(*x))
    }
}

/// Normalized anomaly scores over sliding windows.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyCurve {
    pub window_starts: Vec<usize>,
    /// Timestamp label at each window start.
    pub start_labels: Vec<String>,
    pub scores: Vec<f64>,
    pub raw_scores: Vec<f64>,
    pub window: usize,
    /// Largest raw score; 0 when every raw score is 0.
    pub normalization: f64,
    /// Window starts whose graph was degenerate and scored 0.
    pub flagged: Vec<usize>,
}

impl AnomalyCurve {
    /// Normalizes raw scores so the largest becomes 1.
    pub fn from_raw(
        window_starts: Vec<usize>,
        start_labels: Vec<String>,
        raw_scores: Vec<f64>,
        window: usize,
        flagged: Vec<usize>,
    ) -> Self {
        let m = raw_scores.iter().copied().fold(0.0, f64::max);
        let scores = if m > 0.0 {
            raw_scores.iter().map(|r| r / m).collect()
        } else {
            vec![0.0; raw_scores.len()]
        };
        Self {
            window_starts,
            start_labels,
            scores,
            raw_scores,
            window,
            normalization: m,
            flagged,
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// CSV `start_index,start_date,score`.
    pub fn to_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["start_index", "start_date", "score"])
            .expect("in-memory write");
        for i in 0..self.len() {
            wtr.write_record([
                self.window_starts[i].to_string(),
                self.start_labels[i].clone(),
                format_number(self.scores[i]),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Reads a curve written by [`AnomalyCurve::to_csv`]. The window length is
    /// not stored and comes back as 0; raw scores equal the scores.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let (mut starts, mut labels, mut scores) = (Vec::new(), Vec::new(), Vec::new());
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != 3 {
                return Err(Error::format(format!(
                    "curve row {} needs 3 fields",
                    row + 1
                )));
            }
            starts.push(
                record[0]
                    .parse()
                    .map_err(|_| Error::format(format!("bad start index at row {}", row + 1)))?,
            );
            labels.push(record[1].to_string());
            scores.push(
                parse_number(&record[2])
                    .ok_or_else(|| Error::format(format!("bad score at row {}", row + 1)))?,
            );
        }
        Ok(Self::from_raw(starts, labels, scores, 0, Vec::new()))
    }
}

/// Sum over levels of the sup norm of the dimension-1 landscape.
pub fn window_score(points: &[DiagramPoint], cap: Option<f64>) -> f64 {
    let dim1: Vec<DiagramPoint> = points.iter().copied().filter(|p| p.dim == 1).collect();
    landscape_norm(
        &persistence_landscape(&landscape_points(&dim1, cap)),
        LandscapeNorm::SupSum,
    )
}

/// Anomaly score curve of `series` over windows of length `w`.
///
/// Windows are scored in parallel; the output order follows the window
/// starts. A window whose graph is degenerate scores 0 and is flagged.
pub fn asc_curve(
    series: &FeaturedSeries,
    g: &InfluenceVector,
    w: usize,
    step: usize,
    cfg: &PipelineConfig,
) -> Result<AnomalyCurve> {
    if step == 0 {
        return Err(Error::input("window step must be at least 1"));
    }
    if w < 2 || w > series.len() {
        return Err(Error::Bounds(format!(
            "window {w} must lie in 2..={}",
            series.len()
        )));
    }
    let mut cfg = cfg.clone();
    cfg.persistence.max_dim = cfg.persistence.max_dim.max(2);
    cfg.persistence.representatives = false;
    let starts: Vec<usize> = (0..=series.len() - w).step_by(step).collect();
    let results: Vec<Result<Option<f64>>> = starts
        .par_iter()
        .map(|&s| {
            let window = series.slice_window(s, w)?;
            match analyze(&window, g, &cfg) {
                Ok(a) => Ok(Some(window_score(a.diagram.points(), cfg.cap_infinite))),
                Err(Error::Structure(msg)) => {
                    log::warn!("window at {s} scored 0: {msg}");
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut raw = Vec::with_capacity(starts.len());
    let mut flagged = Vec::new();
    for (&s, r) in starts.iter().zip(results) {
        match r? {
            Some(v) => raw.push(v),
            None => {
                raw.push(0.0);
                flagged.push(s);
            }
        }
    }
    let labels = starts
        .iter()
        .map(|&s| series.timestamps()[s].clone())
        .collect();
    Ok(AnomalyCurve::from_raw(starts, labels, raw, w, flagged))
}

/// Pointwise product of aligned curves, renormalized to a maximum of 1.
pub fn tasc_curve(curves: &[AnomalyCurve]) -> Result<AnomalyCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::input("no curves to combine"))?;
    if let Some(bad) = curves
        .iter()
        .position(|c| c.window_starts != first.window_starts || c.window != first.window)
    {
        return Err(Error::input(format!(
            "curve {} is not aligned with curve 0",
            bad
        )));
    }
    let product: Vec<f64> = (0..first.len())
        .map(|i| curves.iter().map(|c| c.scores[i]).product())
        .collect();
    let mut flagged: Vec<usize> = curves
        .iter()
        .flat_map(|c| c.flagged.iter().copied())
        .collect();
    flagged.sort_unstable();
    flagged.dedup();
    Ok(AnomalyCurve::from_raw(
        first.window_starts.clone(),
        first.start_labels.clone(),
        product,
        first.window,
        flagged,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellStats {
    pub stats: DiagramStats,
    pub sup_sum: f64,
    pub l1_sum: f64,
    pub overlap_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridCell {
    pub x: f64,
    pub y: f64,
    /// `None` when the cell's graph was degenerate.
    pub result: Option<CellStats>,
}

/// Dimension-1 statistics, landscape norms and overlapping percentage.
pub fn cell_stats(
    series: &FeaturedSeries,
    g: &InfluenceVector,
    cfg: &PipelineConfig,
) -> Result<CellStats> {
    let mut cfg = cfg.clone();
    cfg.persistence.max_dim = cfg.persistence.max_dim.max(2);
    cfg.persistence.representatives = true;
    let a = analyze(series, g, &cfg)?;
    let dim1 = a.diagram.dim(1);
    let landscape = persistence_landscape(&landscape_points(&dim1, cfg.cap_infinite));
    Ok(CellStats {
        stats: diagram_stats(&dim1),
        sup_sum: landscape_norm(&landscape, LandscapeNorm::SupSum),
        l1_sum: landscape_norm(&landscape, LandscapeNorm::L1Sum),
        overlap_pct: overlapping_percentage(series, &a.representative_labels()),
    })
}

/// Evaluates every `(x, y)` with `g(feature_a) = x`, `g(feature_b) = y` and
/// zero elsewhere. `feature_a` is a zeroth feature, `feature_b` a first
/// feature. Cells are ordered row-major over `xs` then `ys`.
pub fn music_stats_grid(
    series: &FeaturedSeries,
    feature_a: &str,
    feature_b: &str,
    xs: &[f64],
    ys: &[f64],
    cfg: &PipelineConfig,
) -> Result<Vec<GridCell>> {
    let schema = series.schema();
    let ia = schema
        .index0(feature_a)
        .ok_or_else(|| Error::schema(format!("unknown zeroth feature {feature_a}")))?;
    let ib = schema
        .index1(feature_b)
        .ok_or_else(|| Error::schema(format!("unknown first feature {feature_b}")))?;
    let pairs: Vec<(f64, f64)> = xs
        .iter()
        .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
        .collect();
    pairs
        .par_iter()
        .map(|&(x, y)| {
            let mut g0 = vec![0.0; schema.zeroth().len() + 1];
            let mut g1 = vec![0.0; schema.first().len() + 1];
            g0[ia + 1] = x;
            g1[ib + 1] = y;
            let g = InfluenceVector::from_parts(schema, g0, g1)?;
            match cell_stats(series, &g, cfg) {
                Ok(s) => Ok(GridCell {
                    x,
                    y,
                    result: Some(s),
                }),
                Err(Error::Structure(msg)) => {
                    log::warn!("grid cell ({x}, {y}) missing: {msg}");
                    Ok(GridCell { x, y, result: None })
                }
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// CSV `x,y,longest,shortest,count,sup_sum,l1_sum,overlap_pct`; missing
/// values are empty fields.
pub fn grid_csv(cells: &[GridCell]) -> String {
    let opt = |v: Option<f64>| v.map(format_number).unwrap_or_default();
    let mut out = String::from("x,y,longest,shortest,count,sup_sum,l1_sum,overlap_pct\n");
    for c in cells {
        let fields = match &c.result {
            Some(r) => [
                opt(r.stats.longest),
                opt(r.stats.shortest),
                r.stats.count.to_string(),
                format_number(r.sup_sum),
                format_number(r.l1_sum),
                format_number(r.overlap_pct),
            ],
            None => Default::default(),
        };
        out.push_str(&format!(
            "{},{},{}\n",
            format_number(c.x),
            format_number(c.y),
            fields.join(",")
        ));
    }
    out
}

fn c0_max(cm: &CountMatrices) -> f64 {
    cm.c0.row_sums().into_iter().max().unwrap_or(0) as f64
}

fn c1_min(cm: &CountMatrices) -> Result<Option<f64>> {
    match cm.c1.row_sums().into_iter().min() {
        None => Ok(None),
        Some(0) => Err(Error::domain(
            "an edge has an empty count row (C1 minimum row sum is 0)",
        )),
        Some(m) => Ok(Some(m as f64)),
    }
}

/// `(2k C0max + 1)(|V| - 1) / C1min`. An edgeless graph gives 0.
pub fn stability_constant(cm: &CountMatrices, lipschitz_k: f64, n_vertices: usize) -> Result<f64> {
    Ok(match c1_min(cm)? {
        Some(c1) => {
            (2.0 * lipschitz_k * c0_max(cm) + 1.0) * n_vertices.saturating_sub(1) as f64 / c1
        }
        None => 0.0,
    })
}

/// The alternative form `(k C0max + 1) * 2 / C1min * (|V| - 1)`.
pub fn stability_constant_alt(
    cm: &CountMatrices,
    lipschitz_k: f64,
    n_vertices: usize,
) -> Result<f64> {
    Ok(match c1_min(cm)? {
        Some(c1) => {
            (lipschitz_k * c0_max(cm) + 1.0) * 2.0 / c1 * n_vertices.saturating_sub(1) as f64
        }
        None => 0.0,
    })
}

pub const STABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionCheck {
    pub dim: usize,
    #[serde(serialize_with = "serialize_number")]
    pub bottleneck: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub satisfied: bool,
    pub bound_constant: f64,
    pub alt_bound_constant: f64,
    pub lipschitz_k: f64,
    pub c0_max: f64,
    pub c1_min: f64,
    pub n_vertices: usize,
    pub g_delta: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub dims: Vec<DimensionCheck>,
}

impl StabilityReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Compares the diagrams for `g` and `g2` with the bound `C * |g - g2|_inf`.
pub fn stability_check(
    series: &FeaturedSeries,
    g: &InfluenceVector,
    g2: &InfluenceVector,
    cfg: &PipelineConfig,
    dims: &[usize],
) -> Result<StabilityReport> {
    if g.g0().len() != g2.g0().len() || g.g1().len() != g2.g1().len() {
        return Err(Error::schema("influence vectors have different shapes"));
    }
    let mut cfg = cfg.clone();
    let top = dims.iter().max().map_or(1, |d| d + 1);
    cfg.persistence.max_dim = cfg.persistence.max_dim.max(top);
    cfg.persistence.representatives = false;
    let (a, b) = rayon::join(|| analyze(series, g, &cfg), || analyze(series, g2, &cfg));
    let (a, b) = (a?, b?);

    let k = cfg.activation.lipschitz_k();
    let n = a.graph.skeleton().n_vertices();
    let c = stability_constant(&a.counts, k, n)?;
    let g_delta = g.sup_distance(g2);
    let bound = c * g_delta;
    let checks: Vec<DimensionCheck> = dims
        .iter()
        .map(|&dim| {
            let db = bottleneck_distance(&a.diagram.dim(dim), &b.diagram.dim(dim));
            DimensionCheck {
                dim,
                bottleneck: db,
                satisfied: db <= bound + STABILITY_TOLERANCE,
            }
        })
        .collect();
    Ok(StabilityReport {
        satisfied: checks.iter().all(|c| c.satisfied),
        bound_constant: c,
        alt_bound_constant: stability_constant_alt(&a.counts, k, n)?,
        lipschitz_k: k,
        c0_max: c0_max(&a.counts),
        c1_min: c1_min(&a.counts)?.unwrap_or(0.0),
        n_vertices: n,
        g_delta,
        bound,
        tolerance: STABILITY_TOLERANCE,
        dims: checks,
    })
}
