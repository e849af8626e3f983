//! Dual-blind deconvolution (DBD) of overlaid radar-communications signals.
//!
//! A common receiver observes the sum of a pulse-Doppler radar return and a
//! multi-carrier communications signal, sampled in the frequency domain over
//! `P` pulses of `M` samples each. Channels on both sides are sparse sets of
//! continuous-valued delay-Doppler pairs, and neither the radar waveform nor
//! the communications messages are known. Both channels and both transmit
//! signals are recovered from the single length-`MP` observation by
//!
//! 1. lifting the bilinear unknowns into rank-one waveform-channel matrices
//!    ([`operators`]),
//! 2. solving the dual of a sum-of-atomic-norms program as a semidefinite
//!    program with Gram trace constraints and one linear matrix inequality per
//!    emitter ([`sdp`], [`solver`]),
//! 3. localizing delay-Doppler supports at the unit-norm peaks of the dual
//!    trigonometric polynomials ([`localize`]), and
//! 4. recovering gains, waveform and messages by least squares ([`recover`]).
//!
//! [`model`] holds the scenario types and the measurement synthesizer for all
//! supported variants (noise, unsynchronized transmission, multiple emitters,
//! unequal pulse/symbol durations), and [`kernels`] carries the interpolation
//! kernels and torus metrics used by the test oracles and separation reports.

pub mod kernels;
pub mod localize;
pub mod model;
pub mod operators;
pub mod recover;
pub mod sdp;
pub mod solver;
pub mod util;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum DbdError {
    /// An argument was outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Matrix/vector dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// A linear system is too badly conditioned to solve reliably.
    #[error("ill-posed problem: {0}")]
    IllPosed(String),
    /// The conic solver could not produce a usable iterate.
    #[error("solver failure: {0}")]
    Solver(String),
    /// An estimate degenerated (all-zero block, empty support, ...).
    #[error("degenerate estimate: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, DbdError>;
