//! Rate versus MSE-decay tradeoff for integrated sensing and communication
//! when the channel state is a random scalar fixed over the block.
//!
//! The crate evaluates the Bayesian Cramér-Rao bound (BCRB) and its
//! asymptotically tight variant (ATBCRB), the compound-channel rate, the
//! resulting tradeoff curve, and a Monte Carlo check that ML/MAP estimation
//! over constant-composition codewords attains the ATBCRB decay constant.

pub mod bounds;
pub mod error;
pub mod fisher;
pub mod model;
pub mod montecarlo;
pub mod quad;
pub mod rate;
pub mod region;
pub mod twoband;

pub use bounds::BoundReport;
pub use error::{Error, Result};
pub use fisher::FisherProfile;
pub use model::{ChannelModel, Constellation, InputDesign, Modulation, StatePrior, TwoBandModel};
pub use montecarlo::{Estimator, SimConfig, SimReport, SimRow};
pub use rate::RateBreakdown;
pub use region::{OperatingPoints, RegionCurve, RegionPoint, Sweep};
