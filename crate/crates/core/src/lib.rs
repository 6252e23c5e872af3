//! Cache-aided MIMO multicast delivery.
//!
//! * [`delivery`]: cache placement, transmission schedule, XOR codewords and
//!   bit-exact decoding.
//! * [`dof`]: serving-set size / stream-count planner.
//! * [`channel`]: seeded i.i.d. Rayleigh channel realizations.
//! * [`beamformer`]: LMMSE receivers, SINR/MSE, the Lagrangian transmit
//!   design, the zero-forcing baseline and a brute-force reference.
//! * [`evaluator`]: per-transmission and symmetric rates, Monte Carlo sweeps.
//! * [`app`]: the workflows behind the `mimo-cc` binary.

pub mod app;
pub mod beamformer;
pub mod channel;
pub mod combinatorics;
pub mod config;
pub mod delivery;
pub mod dof;
pub mod error;
pub mod evaluator;
pub mod rng;

pub use config::NetworkConfig;
pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type Complex = nalgebra::Complex<f64>;
