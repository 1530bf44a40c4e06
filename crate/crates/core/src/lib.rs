//! Simulator and analytics toolkit for resource sharing among wireless
//! operators whose base stations may be co-located.
//!
//! The crate realizes multi-operator networks as Poisson point processes
//! with a tunable co-location factor, measures proportional-fair user
//! strength and Shannon capacity on them, evaluates the matching closed
//! forms (optimal connection radius, sharing gains, benefit thresholds,
//! coverage-driven bandwidth), and ships the experiment harness that
//! compares the two and emits plot-ready datasets.

pub mod analytics;
pub mod experiments;
pub mod geometry;
pub mod ingest;
pub mod metrics;
pub mod network;

pub use analytics::{AnalyticInputs, AnalyticReport, AnalyticsError, ElogCMethod};
pub use experiments::{
    Aggregate, ComparisonRow, EmitOptions, ExperimentError, FigureId, ManifestEntry,
    SimulationSummary, SweepAxis, SweepSpec,
};
pub use geometry::{BoundaryMode, GeometryError, GridIndex, Point, PointSet, Region};
pub use ingest::{BsInventory, EstimatedParams, IngestError, RealWorldOptions, RealWorldReport};
pub use metrics::{KConvention, MetricsError, MetricsSummary, RadioParams};
pub use network::{
    AssociationMode, ConfigError, NetworkError, NetworkGraph, RadiusSpec, ScenarioConfig, Tower,
    TypedUser,
};
