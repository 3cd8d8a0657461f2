//! Worst-case latency analysis for switched Ethernet output ports scheduled
//! by Weighted Round Robin.
//!
//! A two-queue WRR port forwards up to `w1` control frames and `w2`
//! background frames per visit cycle. Given an affine envelope on the control
//! traffic, the [`analysis`] module derives closed-form per-hop delay bounds
//! and departure envelopes, [`topology`] propagates them along multi-hop
//! paths, [`optimizer`] searches for weights that meet an end-to-end deadline
//! while maximizing the bandwidth left to background traffic, and
//! [`simulator`] provides a discrete-event oracle whose observed delays must
//! stay below the analytical bounds.
//!
//! All quantities are bits and seconds in double precision; analysis values
//! are immutable and the functions over them are pure.

pub mod analysis;
pub mod curves;
pub mod optimizer;
pub mod simulator;
pub mod topology;

pub use analysis::{
    delay_bound_overall, departure_curve, min_weight_burst, min_weight_mean, AnalysisError,
    ControlFlowAtPort, DepartureMode, HopDelayBound, PortConfig,
};
pub use curves::{
    horizontal_deviation, AffineArrivalCurve, Curve, CurveError, CurveSample, DeviationOptions,
    PeriodicSource, RateLatencyCurve, WrrServicePattern,
};
pub use optimizer::{optimize, OptimizeError, OptimizeMode, OptimizerSettings, WeightPlan};
pub use simulator::{
    max_observed_delay, run_simulation, SimError, SimOptions, SimTrace, VisitGating,
};
pub use topology::{
    background_bandwidth, propagate_analysis, validate_topology, Diagnostic, DiagnosticCode,
    Endpoint, FlowClass, FlowSpec, HopReport, Link, PathReport, PortId, Topology, TopologyError,
};
