//! Distance-only relative localization between agents that superimpose
//! circular motion on linear drift, and the consensus/formation controller
//! built on those estimates.
//!
//! Agents measure only scalar distances to neighbors. Over a window that is a
//! whole number of rotation periods, the Fourier coefficients of the squared
//! distance separate the neighbor's circle, the own circle, and the relative
//! drift, letting each agent recover the neighbor's relative position and
//! velocity with no bearing sensor. The controller then runs per-window
//! velocity-consensus and formation-shape updates on the circle centers,
//! while an adaptive law keeps each excitation radius proportional to the
//! largest estimated neighbor speed.
//!
//! The numeric core is generic over the scalar type via [`num::Real`]
//! (`f32` or `f64`); concrete `f64` aliases are exported at the crate root.

pub mod control;
pub mod estimator;
pub mod geometry;
pub mod kinematics;
pub mod linalg;
pub mod num;
pub mod output;
pub mod scenario;
pub mod simulator;
pub mod spectral;

pub use num::Real;

/// Plane vector over the default `f64` scalar.
pub type Vec2f = geometry::Vec2<f64>;
/// Agent motion state over `f64`.
pub type AgentStatef = kinematics::AgentState<f64>;
/// Measurement window over `f64`.
pub type Windowf = kinematics::Window<f64>;
/// Distance trace over `f64`.
pub type DistanceTracef = kinematics::DistanceTrace<f64>;
/// Squared-trace spectrum over `f64`.
pub type Spectrumf = spectral::Spectrum<f64>;
/// Neighbor estimate over `f64`.
pub type NeighborEstimatef = estimator::NeighborEstimate<f64>;
/// Episode record over `f64`.
pub type TimeSeriesf = simulator::TimeSeries<f64>;
