//! Time series, feature schemas, influence vectors and featured series.
//!
//! A featured series annotates every timestamp of an ordinary time series with
//! a subset of the zeroth features (attached to single observations) and a
//! subset of the first features (attached to the transition from this
//! timestamp to the next one). The empty subset is the "no feature" state,
//! which owns column 0 of every influence sub-vector and count matrix.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reserved key for the "no zeroth feature" state.
pub const EMPTY0: &str = "∅0";
/// Reserved key for the "no first feature" state.
pub const EMPTY1: &str = "∅1";

const HEADER: [&str; 4] = ["t", "value", "f0", "f1"];

/// Plain time series: one opaque observation symbol per timestamp label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeSeries {
    timestamps: Vec<String>,
    values: Vec<String>,
}

impl TimeSeries {
    pub fn new(timestamps: Vec<String>, values: Vec<String>) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::input(format!(
                "{} timestamps but {} values",
                timestamps.len(),
                values.len()
            )));
        }
        let mut seen = HashSet::with_capacity(timestamps.len());
        for t in &timestamps {
            if !seen.insert(t.as_str()) {
                return Err(Error::format(format!("duplicate timestamp {t}")));
            }
        }
        Ok(Self { timestamps, values })
    }

    /// Builds a series whose timestamps are the row indices `0..n`.
    pub fn from_values<S: Into<String>>(values: impl IntoIterator<Item = S>) -> Self {
        let values: Vec<String> = values.into_iter().map(Into::into).collect();
        let timestamps = (0..values.len()).map(|i| i.to_string()).collect();
        Self { timestamps, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamps(&self) -> &[String] {
        &self.timestamps
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }
}

/// Ordered zeroth and first feature names.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct FeatureSet {
    zeroth: Vec<String>,
    first: Vec<String>,
}

impl FeatureSet {
    pub fn new<S: Into<String>>(
        zeroth: impl IntoIterator<Item = S>,
        first: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let zeroth: Vec<String> = zeroth.into_iter().map(Into::into).collect();
        let first: Vec<String> = first.into_iter().map(Into::into).collect();
        check_names(&zeroth, "features0")?;
        check_names(&first, "features1")?;
        Ok(Self { zeroth, first })
    }

    pub fn zeroth(&self) -> &[String] {
        &self.zeroth
    }

    pub fn first(&self) -> &[String] {
        &self.first
    }

    pub fn index0(&self, name: &str) -> Option<usize> {
        self.zeroth.iter().position(|f| f == name)
    }

    pub fn index1(&self, name: &str) -> Option<usize> {
        self.first.iter().position(|f| f == name)
    }
}

fn check_names(names: &[String], list: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for name in names {
        if name.is_empty() || name.contains(';') {
            return Err(Error::schema(format!(
                "invalid feature name {name:?} in {list}"
            )));
        }
        if name == EMPTY0 || name == EMPTY1 {
            return Err(Error::schema(format!(
                "reserved name {name} used as a feature in {list}"
            )));
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::schema(format!("duplicate feature {name} in {list}")));
        }
    }
    Ok(())
}

/// Non-negative influences; index 0 of each part is the empty state.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceVector {
    g0: Vec<f64>,
    g1: Vec<f64>,
}

impl InfluenceVector {
    pub fn zeros(schema: &FeatureSet) -> Self {
        Self {
            g0: vec![0.0; schema.zeroth.len() + 1],
            g1: vec![0.0; schema.first.len() + 1],
        }
    }

    /// `g0[0]` and `g1[0]` are the influences of the empty states.
    pub fn from_parts(schema: &FeatureSet, g0: Vec<f64>, g1: Vec<f64>) -> Result<Self> {
        if g0.len() != schema.zeroth.len() + 1 || g1.len() != schema.first.len() + 1 {
            return Err(Error::schema(format!(
                "influence vector sizes ({}, {}) do not match schema ({}, {})",
                g0.len(),
                g1.len(),
                schema.zeroth.len() + 1,
                schema.first.len() + 1
            )));
        }
        for &v in g0.iter().chain(&g1) {
            check_influence(v)?;
        }
        Ok(Self { g0, g1 })
    }

    pub fn g0(&self) -> &[f64] {
        &self.g0
    }

    pub fn g1(&self) -> &[f64] {
        &self.g1
    }

    /// Sets the influence of a named feature (or of `∅0` / `∅1`).
    pub fn set(&mut self, schema: &FeatureSet, name: &str, value: f64) -> Result<()> {
        check_influence(value)?;
        if name == EMPTY0 {
            self.g0[0] = value;
        } else if name == EMPTY1 {
            self.g1[0] = value;
        } else if let Some(i) = schema.index0(name) {
            self.g0[i + 1] = value;
        } else if let Some(i) = schema.index1(name) {
            self.g1[i + 1] = value;
        } else {
            return Err(Error::schema(format!("unknown feature {name}")));
        }
        Ok(())
    }

    /// Sup-norm distance over every coordinate.
    pub fn sup_distance(&self, other: &InfluenceVector) -> f64 {
        assert_eq!(
            self.g0.len(),
            other.g0.len(),
            "influence vectors over different schemas"
        );
        assert_eq!(
            self.g1.len(),
            other.g1.len(),
            "influence vectors over different schemas"
        );
        self.g0
            .iter()
            .zip(&other.g0)
            .chain(self.g1.iter().zip(&other.g1))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.g0.iter().chain(&self.g1).all(|&v| v == 0.0)
    }
}

fn check_influence(v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::domain(format!(
            "influence must be finite and non-negative, got {v}"
        )));
    }
    Ok(())
}

/// Key-value document holding a feature schema and/or influences.
///
/// Accepted as JSON or TOML with top-level keys `features0`, `features1`,
/// `g0`, `g1`. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    #[serde(default)]
    pub features0: Vec<String>,
    #[serde(default)]
    pub features1: Vec<String>,
    #[serde(default)]
    pub g0: BTreeMap<String, f64>,
    #[serde(default)]
    pub g1: BTreeMap<String, f64>,
}

impl FeatureConfig {
    /// Parses JSON when the document starts with `{`, TOML otherwise.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::format(format!("config: {e}")))
        } else {
            toml::from_str(text).map_err(|e| Error::format(format!("config: {e}")))
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn schema(&self) -> Result<FeatureSet> {
        FeatureSet::new(self.features0.clone(), self.features1.clone())
    }
}

/// Expands a (possibly partial) influence listing into a full vector over the
/// schema. Unlisted features default to zero.
pub fn influence_vector_from_config(
    config: &FeatureConfig,
    schema: &FeatureSet,
) -> Result<InfluenceVector> {
    let mut g = InfluenceVector::zeros(schema);
    for (key, &value) in &config.g0 {
        check_influence(value)?;
        if key == EMPTY0 {
            g.g0[0] = value;
        } else {
            let i = schema
                .index0(key)
                .ok_or_else(|| Error::schema(format!("unknown zeroth feature {key} in g0")))?;
            g.g0[i + 1] = value;
        }
    }
    for (key, &value) in &config.g1 {
        check_influence(value)?;
        if key == EMPTY1 {
            g.g1[0] = value;
        } else {
            let i = schema
                .index1(key)
                .ok_or_else(|| Error::schema(format!("unknown first feature {key} in g1")))?;
            g.g1[i + 1] = value;
        }
    }
    Ok(g)
}

/// A time series whose timestamps carry zeroth and first feature subsets.
///
/// Feature subsets are stored as sorted indices into the schema lists; an
/// empty subset is the empty state.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturedSeries {
    base: TimeSeries,
    feat0: Vec<Vec<usize>>,
    feat1: Vec<Vec<usize>>,
    schema: Arc<FeatureSet>,
}

impl FeaturedSeries {
    pub fn new(
        base: TimeSeries,
        mut feat0: Vec<Vec<usize>>,
        mut feat1: Vec<Vec<usize>>,
        schema: Arc<FeatureSet>,
    ) -> Result<Self> {
        let n = base.len();
        if feat0.len() != n || feat1.len() != n {
            return Err(Error::input(format!(
                "feature annotations ({}, {}) do not cover {n} timestamps",
                feat0.len(),
                feat1.len()
            )));
        }
        for (row, set) in feat0.iter_mut().enumerate() {
            normalize_subset(set, schema.zeroth.len(), row)?;
        }
        for (row, set) in feat1.iter_mut().enumerate() {
            normalize_subset(set, schema.first.len(), row)?;
        }
        Ok(Self {
            base,
            feat0,
            feat1,
            schema,
        })
    }

    /// Series without any feature annotations.
    pub fn unfeatured(base: TimeSeries, schema: Arc<FeatureSet>) -> Self {
        let n = base.len();
        Self {
            base,
            feat0: vec![Vec::new(); n],
            feat1: vec![Vec::new(); n],
            schema,
        }
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn base(&self) -> &TimeSeries {
        &self.base
    }

    pub fn values(&self) -> &[String] {
        self.base.values()
    }

    pub fn timestamps(&self) -> &[String] {
        self.base.timestamps()
    }

    pub fn feat0(&self) -> &[Vec<usize>] {
        &self.feat0
    }

    pub fn feat1(&self) -> &[Vec<usize>] {
        &self.feat1
    }

    pub fn schema(&self) -> &FeatureSet {
        &self.schema
    }

    pub fn schema_arc(&self) -> &Arc<FeatureSet> {
        &self.schema
    }

    /// Largest number of first features carried by a single timestamp.
    pub fn max_first_features(&self) -> usize {
        self.feat1.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Contiguous sub-series `start..start + w`, keeping the original labels.
    pub fn slice_window(&self, start: usize, w: usize) -> Result<FeaturedSeries> {
        if w < 2 {
            return Err(Error::Bounds(format!("window length {w} < 2")));
        }
        let end = start
            .checked_add(w)
            .filter(|&end| end <= self.len())
            .ok_or_else(|| {
                Error::Bounds(format!(
                    "window {start}..{} exceeds series length {}",
                    start.saturating_add(w),
                    self.len()
                ))
            })?;
        Ok(FeaturedSeries {
            base: TimeSeries {
                timestamps: self.base.timestamps[start..end].to_vec(),
                values: self.base.values[start..end].to_vec(),
            },
            feat0: self.feat0[start..end].to_vec(),
            feat1: self.feat1[start..end].to_vec(),
            schema: Arc::clone(&self.schema),
        })
    }

    /// Writes the series back out in the `t,value,f0,f1` format.
    pub fn to_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(HEADER).expect("in-memory write");
        for i in 0..self.len() {
            let f0 = join_names(&self.feat0[i], &self.schema.zeroth);
            let f1 = join_names(&self.feat1[i], &self.schema.first);
            wtr.write_record([
                self.base.timestamps[i].as_str(),
                self.base.values[i].as_str(),
                &f0,
                &f1,
            ])
            .expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

fn normalize_subset(set: &mut Vec<usize>, width: usize, row: usize) -> Result<()> {
    set.sort_unstable();
    set.dedup();
    if let Some(&bad) = set.iter().find(|&&i| i >= width) {
        return Err(Error::schema(format!(
            "feature index {bad} out of range at row {}",
            row + 1
        )));
    }
    Ok(())
}

fn join_names(indices: &[usize], names: &[String]) -> String {
    indices
        .iter()
        .map(|&i| names[i].as_str())
        .collect::<Vec<_>>()
        .join(";")
}

/// Reads a featured series from CSV with header `t,value,f0,f1`.
///
/// Feature cells hold `;`-separated names, empty for the empty state. Row
/// order is timestamp order.
pub fn parse_featured_series<R: Read>(
    reader: R,
    schema: Arc<FeatureSet>,
) -> Result<FeaturedSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(Error::format(format!(
            "expected header t,value,f0,f1, got {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    let mut feat0 = Vec::new();
    let mut feat1 = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let (t, value) = (&record[0], &record[1]);
        if !seen.insert(t.to_string()) {
            return Err(Error::format(format!(
                "duplicate timestamp {t} at row {row}"
            )));
        }
        if value.is_empty() {
            return Err(Error::format(format!("blank value at row {row}")));
        }
        if value.parse::<f64>().is_ok_and(|v| v < 0.0) {
            return Err(Error::format(format!(
                "negative value {value} at row {row}"
            )));
        }
        feat0.push(parse_cell(&record[2], row, |n| schema.index0(n))?);
        feat1.push(parse_cell(&record[3], row, |n| schema.index1(n))?);
        timestamps.push(t.to_string());
        values.push(value.to_string());
    }

    FeaturedSeries::new(TimeSeries { timestamps, values }, feat0, feat1, schema)
}

fn parse_cell(
    cell: &str,
    row: usize,
    lookup: impl Fn(&str) -> Option<usize>,
) -> Result<Vec<usize>> {
    cell.split(';')
        .map(str::trim)
        .filter(|tok| !tok.is_empty())
        .map(|tok| {
            lookup(tok).ok_or_else(|| Error::schema(format!("unknown feature {tok} at row {row}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn temp_schema() -> Arc<FeatureSet> {
        Arc::new(FeatureSet::new(["H", "L"], ["1", "4"]).unwrap())
    }

    #[test]
    fn parses_featured_rows() {
        let s = parse_featured_series(
            "t,value,f0,f1\n1,21,H,1\n2,22,H,1".as_bytes(),
            temp_schema(),
        )
        .unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.values(), ["21", "22"]);
        assert_eq!(s.feat0(), [vec![0], vec![0]]);
        assert_eq!(s.feat1(), [vec![0], vec![0]]);
    }

    #[test]
    fn empty_cells_are_the_empty_state() {
        let s = parse_featured_series("t,value,f0,f1\n1,21,,".as_bytes(), temp_schema()).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s.feat0()[0].is_empty());
        assert!(s.feat1()[0].is_empty());
    }

    #[test]
    fn unknown_feature_names_row_and_token() {
        let err =
            parse_featured_series("t,value,f0,f1\n1,21,X,".as_bytes(), temp_schema()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
        assert!(
            err.to_string().contains("unknown feature X at row 1"),
            "{err}"
        );
    }

    #[test]
    fn rejects_duplicate_timestamps_and_bad_values() {
        let dup = parse_featured_series("t,value,f0,f1\n1,21,,\n1,22,,".as_bytes(), temp_schema());
        assert!(matches!(dup, Err(Error::Format(_))));
        let blank = parse_featured_series("t,value,f0,f1\n1,,,".as_bytes(), temp_schema());
        assert!(matches!(blank, Err(Error::Format(_))));
        let neg = parse_featured_series("t,value,f0,f1\n1,-3,,".as_bytes(), temp_schema());
        assert!(matches!(neg, Err(Error::Format(_))));
        let header = parse_featured_series("time,value,f0,f1\n1,2,,".as_bytes(), temp_schema());
        assert!(matches!(header, Err(Error::Format(_))));
    }

    #[test]
    fn multi_feature_cells() {
        let s =
            parse_featured_series("t,value,f0,f1\n1,21,L;H,4;1".as_bytes(), temp_schema()).unwrap();
        assert_eq!(s.feat0()[0], vec![0, 1]);
        assert_eq!(s.feat1()[0], vec![0, 1]);
    }

    #[test]
    fn influence_defaults_and_overrides() {
        let schema = temp_schema();
        let cfg = FeatureConfig::parse(r#"{"g1": {"4": 5}}"#).unwrap();
        let g = influence_vector_from_config(&cfg, &schema).unwrap();
        assert_eq!(g.g0(), [0.0, 0.0, 0.0]);
        assert_eq!(g.g1(), [0.0, 0.0, 5.0]);

        let empty = influence_vector_from_config(&FeatureConfig::default(), &schema).unwrap();
        assert!(empty.is_zero());

        let toml_cfg = FeatureConfig::parse("[g1]\n\"4\" = 5\n\"∅1\" = 1.5\n").unwrap();
        let g = influence_vector_from_config(&toml_cfg, &schema).unwrap();
        assert_eq!(g.g1(), [1.5, 0.0, 5.0]);
    }

    #[test]
    fn stock_style_influences() {
        let schema = FeatureSet::new(
            ["Mon", "Tue", "Wed", "Thu", "Fri"],
            ["J1", "J2", "J3", "J4"],
        )
        .unwrap();
        let cfg =
            FeatureConfig::parse(r#"{"g0": {"Mon": 20}, "g1": {"J2": 10, "J4": 20}}"#).unwrap();
        let g = influence_vector_from_config(&cfg, &schema).unwrap();
        assert_eq!(g.g0(), [0.0, 20.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(g.g1(), [0.0, 0.0, 10.0, 0.0, 20.0]);
    }

    #[test]
    fn influence_errors() {
        let schema = temp_schema();
        let neg = FeatureConfig::parse(r#"{"g0": {"H": -1}}"#).unwrap();
        assert!(matches!(
            influence_vector_from_config(&neg, &schema),
            Err(Error::Domain(_))
        ));
        let unknown = FeatureConfig::parse(r#"{"g1": {"7": 1}}"#).unwrap();
        assert!(matches!(
            influence_vector_from_config(&unknown, &schema),
            Err(Error::Schema(_))
        ));
        // A zeroth feature name is not a valid first-feature key.
        let crossed = FeatureConfig::parse(r#"{"g1": {"H": 1}}"#).unwrap();
        assert!(matches!(
            influence_vector_from_config(&crossed, &schema),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            FeatureConfig::parse(r#"{"g2": {}}"#),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn schema_rejects_reserved_and_duplicates() {
        assert!(FeatureSet::new(["∅0"], Vec::<&str>::new()).is_err());
        assert!(FeatureSet::new(["a", "a"], Vec::<&str>::new()).is_err());
        assert!(FeatureSet::new(Vec::<&str>::new(), ["x;y"]).is_err());
    }

    #[test]
    fn slice_bounds() {
        let s = FeaturedSeries::unfeatured(
            TimeSeries::from_values((0..27).map(|i| format!("v{}", i % 5))),
            temp_schema(),
        );
        assert_eq!(s.slice_window(0, 27).unwrap(), s);
        let mid = s.slice_window(5, 10).unwrap();
        assert_eq!(mid.timestamps().first().map(String::as_str), Some("5"));
        assert_eq!(mid.timestamps().last().map(String::as_str), Some("14"));
        assert!(matches!(s.slice_window(20, 10), Err(Error::Bounds(_))));
        assert!(matches!(s.slice_window(0, 1), Err(Error::Bounds(_))));
        assert!(matches!(
            s.slice_window(usize::MAX, 2),
            Err(Error::Bounds(_))
        ));
    }

    fn arb_series() -> impl Strategy<Value = FeaturedSeries> {
        let row = (
            0u8..6,
            prop::collection::vec(0usize..2, 0..3),
            prop::option::of(0usize..2),
        );
        prop::collection::vec(row, 1..40).prop_map(|rows| {
            let base = TimeSeries::from_values(rows.iter().map(|r| format!("s{}", r.0)));
            let f0 = rows.iter().map(|r| r.1.clone()).collect();
            let f1 = rows.iter().map(|r| r.2.into_iter().collect()).collect();
            FeaturedSeries::new(base, f0, f1, temp_schema()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn csv_round_trip(s in arb_series()) {
            let back = parse_featured_series(s.to_csv().as_bytes(), temp_schema()).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn adjacent_slices_concatenate(s in arb_series(), a in 0usize..10, w1 in 2usize..10, w2 in 2usize..10) {
            prop_assume!(a + w1 + w2 <= s.len());
            let left = s.slice_window(a, w1).unwrap();
            let right = s.slice_window(a + w1, w2).unwrap();
            let whole = s.slice_window(a, w1 + w2).unwrap();
            let joined: Vec<_> = left.values().iter().chain(right.values()).collect();
            prop_assert_eq!(joined, whole.values().iter().collect::<Vec<_>>());
            let joined_f1: Vec<_> = left.feat1().iter().chain(right.feat1()).collect();
            prop_assert_eq!(joined_f1, whole.feat1().iter().collect::<Vec<_>>());
        }
    }
}
