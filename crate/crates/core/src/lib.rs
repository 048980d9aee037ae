//! Hybrid analog/digital precoding for multiuser wideband MIMO.
//!
//! A fully digital block-diagonalization precoder is approximated by a shared
//! analog matrix and per-subcarrier digital matrices under hardware
//! constraints (phase shifters, switches, subarrays), with inter-user leakage
//! pushed toward the null space of the other users' channels.

// `!(x > 0.0)` is how validation rejects NaN; index loops mirror the matrix algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod admm;
pub mod baseline;
pub mod channel;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod harness;
pub mod linalg;
pub mod power;
pub mod projections;

pub use admm::{design_hybrid, AdmmParams, HybridDesign, HybridPrecoder};
pub use baseline::{
    bd_fully_digital_precoder, fully_digital_combiner, Combiner, DigitalPrecoder, Precoder,
};
pub use channel::{draw_channel, ChannelParams, ChannelRealization, SystemConfig};
pub use error::{Error, Result};
pub use evaluation::{residual_metrics, spectral_efficiency, EvalParams};
pub use exec::Execution;
pub use linalg::CMatrix;
pub use power::{power_consumption, PowerModel};
pub use projections::{project, Architecture, Connectivity, Element};
