//! Simulation and verification engine for continuous-spin interacting
//! particle systems on finite graph truncations.
//!
//! Each site carries a nonnegative mass driven by drift, square-root
//! diffusion, branching jumps and immigration. The crate provides:
//!
//! * [`lattice`]: graphs, balls, weights;
//! * [`configuration`]: tempered configurations and their order;
//! * [`model`]: coefficient families, admissibility constants, subcriticality;
//! * [`noise`]: counter-based common noise for coupled runs;
//! * [`simulator`]: the time-stepping integrator;
//! * [`analysis`] and [`spread`]: statistical checks of the long-time behavior;
//! * [`cli`]: the experiment runner.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod analysis;
pub mod cli;
pub mod configuration;
pub mod lattice;
pub mod model;
pub mod noise;
pub mod simulator;
pub mod spread;

pub use configuration::Configuration;
pub use lattice::{Graph, GraphSpec, Site, WeightSpec, Weights};
pub use model::{admissibility_check, AdmissibilityReport, LevyMeasure, ModelSpec};
pub use noise::NoiseFabric;
pub use simulator::{SimParams, Simulator, Trajectory};
