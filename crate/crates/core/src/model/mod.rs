//! Signal model of the link: array responses, channels, the joint beamformer
//! and every closed-form metric derived from them.

mod beam;
mod channel;
mod config;
mod detection;
mod sinr;
mod steering;

pub use beam::{beampattern, sample_covariance, BeamformingMatrix};
pub use channel::{row_mul, ChannelSet, LosGeometry};
pub use config::SystemConfig;
pub use detection::{detection_probability, erfc, erfc_inv};
pub(crate) use sinr::{column_gains, total_gain};
pub use sinr::{equal_gain_combiner, rate, sinr_ap, sinr_tag, sinr_ue, SinrBreakdown};
pub use steering::{los_channel, steering_vector, SteeringVector};
