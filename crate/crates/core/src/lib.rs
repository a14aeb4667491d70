//! Fair-density parity-check (FDPC) codes with layered normalized min-sum
//! decoding and syndrome-guided bit-flipping post-processing.
//!
//! The pipeline is: build a code ([`code`]), color its check conflict graph
//! into layers ([`schedule`]), decode with [`lnms`], and on failure retry
//! single-bit flips of the least reliable positions ([`sgbf`]). [`channel`]
//! and [`sim`] provide the BI-AWGN Monte Carlo harness.

pub mod channel;
pub mod code;
pub mod error;
pub mod gf2;
pub mod lnms;
pub mod schedule;
pub mod sgbf;
pub mod sim;

pub use code::{BaseOrder, CodeDescriptor, FdpcCode, FdpcParams};
pub use error::{Error, Result};
pub use gf2::{BinaryMatrix, BitVector};
pub use lnms::{DecodeOutcome, DecoderConfig, LnmsDecoder};
pub use schedule::{ConflictGraph, LayerSchedule};
pub use sgbf::{SgbfConfig, SgbfOutcome};
pub use sim::{FerRecord, Simulator, SweepConfig};
