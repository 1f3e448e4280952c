//! Distributed flow control driven by per-edge plasticity rules.
//!
//! A network of sources, routers and targets carries fixed-path flows. Every
//! edge holds an integer weight bounding how much data it forwards per step.
//! After each step the edge weights are nudged up (LTP) or down (LTD) using a
//! single local bit of congestion feedback, with the magnitude given by one of
//! several update rules (AIMD, AISD, MIMD, MISD, Oja, bang-bang, max-send).
//!
//! The crate is organised bottom-up:
//!
//! * [`topology`] builds the three-layer network (uniform, scale-free or
//!   CAIDA AS-relationship cores).
//! * [`routing`] fixes one hop-count shortest path per flow.
//! * [`plasticity`] holds the update rules and the LTP/LTD decision logic.
//! * [`engine`] runs the discrete-time simulation under a drop or queue model.
//! * [`metrics`] turns run reports into bandwidth and penalty figures.
//! * [`analysis`] evaluates the closed-form two-flow overshoot expressions and
//!   a micro-simulation oracle for them.

pub mod analysis;
pub mod engine;
pub mod metrics;
pub mod plasticity;
pub mod routing;
pub mod seed;
pub mod topology;

pub use analysis::{Horizon, OvershootResult, ParamSet};
pub use engine::{CongestionModel, Engine, EngineError, FlowSpec, FlowStats, RunReport, StepReport, TrafficWindow};
pub use metrics::{MetricError, Quantity, RobustnessSummary};
pub use plasticity::{PlasticityAction, RuleError, RuleKind, UpdateRule};
pub use routing::{FlowId, Path, RoutingError, RoutingTable};
pub use topology::{EdgeId, NetworkGraph, NodeId, NodeRole, TopologyError};
