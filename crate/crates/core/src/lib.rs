//! Diversity-multiplexing tradeoff of on-off switched interference alignment
//! on the 2-user MIMO X-channel with two antennas per node.
//!
//! - [`channel`]: Rayleigh channel sampling, symbol extension, capacity.
//! - [`ia_precoding`]: two-stage IA precoders and the post-cancellation channel.
//! - [`dmt`]: closed-form tradeoff curves and the optimal IA fraction.
//! - [`exponent`]: outage exponents as small linear programs.
//! - [`outage`]: Monte Carlo outage probabilities and slope fits.

pub mod channel;
pub mod dmt;
pub mod error;
pub mod exponent;
pub mod ia_precoding;
pub mod linalg;
pub mod outage;

pub use channel::{ChannelSet, Snr};
pub use dmt::{APolicy, DmtCurve, DmtPoint, Scheme, SwitchFraction};
pub use error::{Error, Result};
pub use linalg::ComplexMatrix;
