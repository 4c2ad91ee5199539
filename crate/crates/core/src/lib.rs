//! Spectral/energy efficiency tradeoff optimisation for RIS-aided
//! multi-user MIMO downlinks with finite-blocklength coding.
//!
//! Four nearly-passive RIS architectures are supported: locally or globally
//! passive, each with a diagonal or a beyond-diagonal (fully connected)
//! scattering matrix. [`optimizer::run_algorithm_one`] alternates between
//! precoder and scattering-matrix updates, each a max-min problem over
//! concave minorants of the finite-blocklength rate built in [`surrogate`].

pub mod channel;
pub mod error;
pub mod experiments;
pub mod feasibility;
pub mod linalg;
pub mod model;
pub mod optimizer;
pub(crate) mod rng;
pub mod surrogate;

pub use channel::{ChannelSet, FadingParams, ScenarioGeometry};
pub use error::{Error, Result};
pub use feasibility::{GnpWeight, ScatteringMatrix};
pub use model::{Architecture, BeamformerSet, MetricsRecord, PowerModel, SystemConfig};
pub use optimizer::{AlgoParams, IterateState};
pub use surrogate::SurrogateCoeffs;
