//! Certification of genuine multipartite nonlocality for pure qubit states
//! that are symmetric under permutations of all parties but the first.
//!
//! The pipeline detects genuine entanglement, picks a measurement angle for
//! parties `2..=n`, builds Hardy-paradox measurements for parties 1 and 2,
//! and evaluates Bell expressions that every bilocal model respects. The
//! [`oracle`] module recomputes the same quantities by brute force.

pub mod bell;
pub mod error;
pub mod gme;
pub mod hardy;
pub mod io;
pub mod oracle;
pub mod state;

pub use bell::{certify, CertificationReport, CertifyOptions, CurchodVariant};
pub use error::{Error, Result};
pub use state::{Amplitude, Bra, DenseState, NearSymmetricState};
