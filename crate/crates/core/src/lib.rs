//! Joint precoder and phase-shift design for large-scale RIS-assisted
//! multiuser MIMO downlink systems.
//!
//! The crate maximizes the weighted sum rate (WSR) by alternating between
//!
//! * a precoder update that runs successive convex approximation (SCA) on a
//!   reduced `K·N_r`-dimensional reformulation and recovers the physical
//!   precoders with a single power normalization ([`precoder`]), and
//! * a phase-shift update that takes one scaled projected-gradient step on
//!   the unit-modulus torus with a cheap sufficient-increase line search
//!   ([`ris`]).
//!
//! The outer loop and the comparison baselines live in [`ao`]; channel
//! realizations in [`channel`]; objective evaluation in [`rates`]; the
//! complex-multiplication accounting in [`metrics`]; and Monte-Carlo
//! experiment orchestration in [`harness`].
//!
//! All rates are in nats/s/Hz and all powers in watts unless a name says
//! otherwise.

// Guards written as `!(x > 0.0)` deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ao;
pub mod channel;
pub mod error;
pub mod gradcheck;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod precoder;
pub mod rates;
pub mod ris;
pub mod seeding;

pub use ao::{solve, AlgorithmVariant, SolveResult};
pub use channel::{ChannelSet, GeometryConfig, SteeringAngles};
pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
pub use metrics::{OpCounter, Phase};
pub use model::{AuxPrecoderSet, PhaseVector, PrecoderSet, SolveTrace, SystemConfig};
