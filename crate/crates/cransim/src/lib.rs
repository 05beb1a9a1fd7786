//! Deterministic system-level downlink simulator for small-cell networks
//! combining power-domain NOMA (with SIC receivers), MU-MIMO zero-forcing
//! beamforming and joint-transmission CoMP, where the transmission-point
//! clustering is driven by a merge/split coalition formation game.
//!
//! The crate is organized as:
//!
//! * [`geometry`] / [`topology`] — hexagonal wrap-around layout, UE drops,
//!   mobility and attachment.
//! * [`channel`] — path loss, shadowing, Rayleigh fading, noise.
//! * [`linalg`] — small complex-matrix helpers (pseudo-inverse for ZF).
//! * [`phy`] — per-RB NOMA pairing, beamforming, power control and SINR
//!   evaluation with and without joint transmission.
//! * [`linkadapt`] — SINR→CQI mapping and transport-block sizing.
//! * [`scheduler`] — cyclic round-robin multi-user scheduling.
//! * [`game`] — the coalition formation game (payoffs, C/I matrix,
//!   merge/split engine, stability checking).
//! * [`schemes`] — static, greedy and no-CoMP clustering baselines.
//! * [`sim`] / [`output`] — the per-TTI driver, metrics and CSV emission.
//!
//! Numeric kernels are generic over the scalar type through [`Scalar`]
//! (any `num_traits::Float`); the simulation driver instantiates them at
//! [`Real`] (`f64`).

pub mod channel;
pub mod config;
pub mod error;
pub mod game;
pub mod geometry;
pub mod linalg;
pub mod linkadapt;
pub mod output;
pub mod phy;
pub mod rng;
pub mod scalar;
pub mod scheduler;
pub mod schemes;
pub mod sim;
pub mod topology;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Scalar type used by the simulation driver.
pub type Real = f64;
/// Complex sample type at driver precision.
pub type CReal = num_complex::Complex<Real>;
