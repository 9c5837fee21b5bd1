//! Approximately universal space-time codes.
//!
//! Constructs the standard code families (QAM, permutation codes, rotated
//! QAM, Alamouti, V-BLAST, D-BLAST, UDM-based codes), checks universality
//! criteria exactly over small codebooks, solves the worst-case channel by
//! inverse waterfilling, and simulates error and outage probabilities over
//! fading channels.

pub mod channel;
pub mod constellation;
pub mod criteria;
pub mod error;
pub mod galois;
pub mod linalg;
pub mod rng;
pub mod scalar;
pub mod udm;
pub mod waterfill;

pub use error::{Error, Result};
pub use galois::{FieldElement, FieldMatrix, FieldSpec};
pub use num_complex::Complex64;
pub use scalar::Real;

/// Double-precision complex matrix used throughout.
pub type CMatrix = linalg::Matrix<f64>;
/// Single-precision complex matrix.
pub type CMatrix32 = linalg::Matrix<f32>;

/// Worst-case channel solution in double precision.
pub type WorstCaseResult = waterfill::WorstCase<f64>;
