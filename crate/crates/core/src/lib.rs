//! Persistent homology of featured time series.
//!
//! A featured time series is turned into a transition graph whose edge and
//! vertex weights depend on an influence vector over the features. Shortest
//! paths give a metric on the observed symbols, whose Vietoris-Rips
//! persistence diagrams are then summarized by landscapes, bottleneck
//! distances and cycle statistics.
//!
//! ```
//! use feathom::{fixtures, analyze, PipelineConfig};
//!
//! let series = fixtures::pentagon();
//! let run = analyze(&series, &fixtures::pentagon_influence(), &PipelineConfig::default()).unwrap();
//! assert_eq!(run.diagram.dim(1).len(), 1);
//! ```

pub mod analytics;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod graph;
pub mod metric;
pub mod persistence;
pub mod pipelines;
pub mod series;

pub use analytics::{
    bottleneck_distance, cap_infinite, diagram_stats, landscape_norm, overlapping_percentage,
    persistence_landscape, DiagramStats, Landscape, LandscapeNorm,
};
pub use error::{Error, Result};
pub use format::{format_number, parse_number};
pub use graph::{
    build_skeleton, build_weighted_graph, count_matrices, skeleton_json, weighted_graph,
    CountMatrices, CountMatrix, GraphSkeleton, WeightedGraph,
};
pub use metric::{
    alpha, auto_activation, distance_matrix, edge_length, edge_lengths, frequency_distance_matrix,
    Activation, ActivationFn, DistanceMatrix, GAUSSIAN_LIPSCHITZ,
};
pub use persistence::{
    persistence_diagrams, persistence_with_representatives, representative_cycles, rips_filtration,
    rips_filtration_capped, simplex_count, zero_dim_deaths_union_find, DiagramPoint, Filtration,
    PersistenceConfig, PersistenceDiagram, RepresentativeCycle, Simplex, DEFAULT_MAX_DIM,
    DEFAULT_VERTEX_CAP, MAX_SUPPORTED_DIM,
};
pub use pipelines::{
    analyze, asc_curve, cell_stats, grid_csv, music_stats_grid, parse_prices, stability_check,
    stability_constant, stability_constant_alt, stock_preprocess, tasc_curve, ActivationChoice,
    Analysis, AnomalyCurve, CellStats, GridCell, PipelineConfig, StabilityReport,
};
pub use series::{
    influence_vector_from_config, parse_featured_series, FeatureConfig, FeatureSet, FeaturedSeries,
    InfluenceVector, TimeSeries, EMPTY0, EMPTY1,
};
