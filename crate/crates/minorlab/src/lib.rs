//! Monte Carlo laboratory for Wigner minor processes.
//!
//! The crate provides four layers:
//!
//! * [`ensemble`] — deterministic, seed-addressable sampling of a doubly
//!   infinite symmetric/Hermitian entry array and its rescaled minors, with
//!   optional variance profiles and diagonal deformations.
//! * [`minor_engine`] — incremental growth of the minor process: the bordered
//!   eigenproblem is an arrowhead matrix in the previous eigenbasis, solved by
//!   a secular-equation root finder with deflation; trajectories record the
//!   top eigenvalue in Tracy-Widom scaling along with the border projection
//!   coefficients that drive the martingale structure.
//! * [`dbm_flow`] — Ornstein-Uhlenbeck flow on the shared entry array (which
//!   couples all minors through common noise) and the eigenvalue SDE, plus
//!   eigenvector overlap diagnostics between nested minors.
//! * [`stats_lab`] — tail-exponent fits, decorrelation ratios, extrema traces,
//!   subsequence bookkeeping, semicircle and Dyson-equation utilities, and
//!   goodness-of-fit checks.
//!
//! The [`harness`] module ties these together into reproducible, parallel
//! experiments addressed by a JSON config and a master seed.

pub mod dense;
pub mod ensemble;
pub mod error;
pub mod scalar;

pub mod dbm_flow;
pub mod harness;
pub mod minor_engine;
pub mod stats_lab;

pub use ensemble::{Beta, EnsembleSpec, EntryDist};
pub use scalar::Scalar;
