//! Multi-objective route selection for wireless multihop networks.
//!
//! Routes are scored by their end-to-end BER, aggregate path loss and hop
//! count. The [`optimizer`] finds the Pareto front with a trellis-based
//! evolutionary search and back-tracing. The search primitive is an
//! emulated quantum non-dominated search that charges cost function
//! evaluations (CFEs). [`pareto::brute_force_opf`] provides the exact front
//! for scoring.

pub mod emulator;
pub mod error;
pub mod optimizer;
pub mod pareto;
pub mod route;
pub mod seed;
pub mod wmhn;

pub use emulator::{CfeLedger, SearchConfig, SearchMode};
pub use error::{Error, Result};
pub use optimizer::{run, AlgorithmConfig, Objective, RunOutput, Variant};
pub use pareto::{DominanceRule, ParetoFront};
pub use route::{ExpansionRule, Route};
pub use wmhn::{generate_topology, ChannelParams, LossAggregation, Topology, UtilityVector};
