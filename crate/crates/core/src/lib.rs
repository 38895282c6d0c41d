//! Numerical laboratory for the differential-capability (DC) loss family.
//!
//! The crate is organised bottom-up:
//!
//! * [`lambert_w`] evaluates the principal branch `W0` of the Lambert function.
//! * [`dc_loss`] holds the Gompertz-shaped DC loss, its derivative and the
//!   margin transform `f(t)`, plus the 2PL reference curve.
//! * [`convergence`] evaluates the DC convergence rate
//!   `g(z) = d + (W0(b e^{-z}) + z) / r` and numerically certifies the
//!   bracket around the default rate `g(z) = z`.
//! * [`data`] generates and persists mirrored Gaussian-blob datasets.
//! * [`neuron`] trains a bias-free linear neuron with GD or minibatch SGD.
//! * [`sweep`] runs the hyperparameter grid protocol and aggregates results.
//! * [`plot`] renders CSV outputs as standalone SVG line charts.
//! * [`cli`] ties everything together behind the `dc-optlab` binary.
//!
//! All randomness flows from explicit `u64` seeds through [`rng::seeded`]
//! (ChaCha8), so every output is reproducible byte-for-byte.

pub mod cli;
pub mod convergence;
pub mod data;
pub mod dc_loss;
mod error;
pub mod lambert_w;
pub mod neuron;
pub mod plot;
pub mod rng;
pub mod sweep;
pub mod verify;

pub use convergence::{dc_rate, default_rate, theorem_bracket, BoundBracket, RateCurve};
pub use data::{Dataset, SyntheticSpec};
pub use dc_loss::{DCParams, LossConfigKind};
pub use error::{Error, Result};
pub use lambert_w::w0;
pub use neuron::{EpochTrace, TrainConfig, WeightVector};
pub use sweep::{GridSpec, SweepResult};
