//! Coded orthogonal-modulation multiple access (COMMA).
//!
//! Users encode `B`-bit messages with a common q-ary A-channel code and send
//! each symbol as one of q orthogonal pulses. The receiver detects a short
//! list of candidate symbols per user and slot (MMV-AMP or a matched filter)
//! and leaves the remaining ambiguity to the outer code.
//!
//! - [`achannel`]: achievability bound of the noisy unsourced A-channel.
//! - [`awgn_frontend`]: threshold detection for `M = 1` and the ALOHA baseline.
//! - [`ortho_mod`]: codebooks, modulation, the fading channel, pilots, MMSE estimation.
//! - [`mmv_amp`]: damped MMV-AMP detection with list output.
//! - [`mf_detector`]: matched-filter detection, threshold calibration, scaling laws.
//! - [`mimo_fbl`]: Gaussian-signaling baseline with MMSE combining and an RCUS bound.
//! - [`experiments`]: configuration, sweeps and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod achannel;
pub mod awgn_frontend;
pub mod error;
pub mod experiments;
pub mod math;
pub mod mf_detector;
pub mod mimo_fbl;
pub mod mmv_amp;
pub mod ortho_mod;
pub mod rng;

pub use error::{Error, Result};
