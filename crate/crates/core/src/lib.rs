//! Link-level simulation of two-stage channel estimation for a RIS-assisted
//! uplink.
//!
//! A base station with an `M`-antenna ULA serves a single-antenna user with
//! the help of a reconfigurable intelligent surface (RIS) laid out as a
//! vertical rectangular array of `N = N_y * N_z` phase-shifting elements.
//! The crate provides:
//!
//! - [`channel`]: system geometry, pathloss and shadowing, steering vectors,
//!   and clustered ray-based channel realizations (rank-1 LoS plus scattered
//!   component for the RIS-BS link).
//! - [`training`]: RIS training-phase matrices (modified-DFT, DFT plus an
//!   extra column, random, identity) together with their phase accumulators.
//! - [`estimator`]: the two-stage estimation protocol — stacked least-squares
//!   estimation of the direct channel and the active RIS elements, column
//!   interpolation (1/2/3/`N_z`-point), and stage-two refinement.
//! - [`covariance`]: closed-form error-covariance blocks, the scatter-induced
//!   error terms, and the training-design ranking certificate.
//! - [`transmission`]: RIS transmission-phase configuration, MRC SNR, framed
//!   spectral efficiency, Gaussian phase perturbation, and the simplified
//!   mean-SNR / SE-drop analysis.
//! - [`config`] and [`harness`]: scenario presets, seeded Monte Carlo sweeps,
//!   and deterministic CSV emission. The `ris-ce` binary exposes the same
//!   machinery as a batch CLI.

pub mod channel;
pub mod config;
pub mod covariance;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod linalg;
pub mod rng;
pub mod training;
pub mod transmission;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec};
