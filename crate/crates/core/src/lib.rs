//! Phase-encoded boolean logic on spin torque nano-oscillators.
//!
//! Digits are carried by the phase of amplitude bursts relative to a
//! reference carrier. A single oscillator driven by `p(t)·L(A, B)` computes
//! the gate `L`, and oscillators coupled through filtered outputs compute
//! circuits. The film model carries the same phase information between point
//! contacts as spin waves.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod error;
pub mod film;
pub mod forcing;
pub mod logic;
pub mod network;
pub mod readout;

pub use error::{Error, Result};
pub use logic::{decode_amplitude, encode_digit, Amplitude, CarrierSpec, Digit, GateKind};
