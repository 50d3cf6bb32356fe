//! Small canonical inputs: the 27-point temperature pentagon.
//!
//! The series sweeps 21..25 up and down three times and then jumps 25 -> 21
//! and back, so the frequency graph is a pentagon with edge frequencies
//! 6, 6, 6, 6 on the chain and 2 on the jump edge {21, 25}. The first
//! feature of each timestamp is the size of the jump to the next reading
//! (`1` or `4`); the zeroth feature is a humidity tag.

use std::sync::Arc;

use crate::series::{FeatureSet, FeaturedSeries, InfluenceVector, TimeSeries};

pub const PENTAGON_VALUES: [u32; 27] = [
    21, 22, 23, 24, 25, 24, 23, 22, 21, 22, 23, 24, 25, 24, 23, 22, 21, 22, 23, 24, 25, 24, 23, 22,
    21, 25, 21,
];

/// `F0 = {H, L}`, `F1 = {1, 4}`.
pub fn pentagon_schema() -> Arc<FeatureSet> {
    Arc::new(FeatureSet::new(["H", "L"], ["1", "4"]).expect("valid schema"))
}

pub fn pentagon() -> FeaturedSeries {
    let schema = pentagon_schema();
    let n = PENTAGON_VALUES.len();
    let base = TimeSeries::new(
        (1..=n).map(|t| t.to_string()).collect(),
        PENTAGON_VALUES.iter().map(|v| v.to_string()).collect(),
    )
    .expect("distinct timestamps");
    // Humid during the anomalous jump, dry otherwise.
    let feat0 = (0..n)
        .map(|t| if t >= n - 3 { vec![0] } else { vec![1] })
        .collect();
    let feat1 = (0..n)
        .map(|t| match PENTAGON_VALUES.get(t + 1) {
            Some(&next) => {
                let jump = next.abs_diff(PENTAGON_VALUES[t]);
                vec![schema.index1(&jump.to_string()).expect("jump of 1 or 4")]
            }
            None => Vec::new(),
        })
        .collect();
    FeaturedSeries::new(base, feat0, feat1, schema).expect("valid fixture")
}

/// `g1(4) = 5`, every other influence zero.
pub fn pentagon_influence() -> InfluenceVector {
    let schema = pentagon_schema();
    InfluenceVector::from_parts(&schema, vec![0.0; 3], vec![0.0, 0.0, 5.0])
        .expect("valid influence")
}
