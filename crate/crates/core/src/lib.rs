//! Certified lower bounds on secret key rates of device-dependent QKD protocols.
//!
//! Asymptotic bounds come from a Frank–Wolfe linearisation with a dual
//! certificate, a Gauss–Radau SDP relaxation, or a min-entropy SDP; finite-size
//! key lengths from leftover hashing with AEP, Serfling, uncertainty-relation,
//! postselection and EAT corrections.

pub mod asymptotic;
pub mod decoy;
pub mod error;
pub mod finitekey;
pub mod linalg;
pub mod protocol;
pub mod sdp;

pub use error::{Error, Result};
