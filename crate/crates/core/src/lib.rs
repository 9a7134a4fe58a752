//! Shared-waveform joint communications and sensing simulator.
//!
//! Two schemes are modelled end to end: QAM symbols riding on an FMCW chirp
//! and FSK symbols riding on a step-frequency ladder. The crate covers
//! waveform synthesis, the radar and communication channels, demodulation,
//! ranging, closed-form bounds, and a Monte-Carlo harness that regenerates the
//! tradeoff sweeps as CSV.

pub mod analysis;
pub mod channel;
pub(crate) mod dsp;
pub mod error;
pub mod harness;
pub mod modulation;
pub mod ranging;
pub mod receiver;
pub mod signal;
pub mod waveform;

pub use error::{JcsError, Result};
pub use signal::ComplexSignal;

/// Propagation speed in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
