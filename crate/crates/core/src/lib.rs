//! Exact two-channel scattering of two-level atoms at one or two delta-shaped
//! laser fields, plus the detection distributions and Ramsey fringes built on
//! the closed-form amplitudes.

pub mod amplitudes;
pub mod detection;
pub mod error;
pub mod ladder;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod ramsey;
pub mod wavepacket;

pub use error::{Error, Result};
