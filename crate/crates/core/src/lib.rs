//! Verification of exponential-sum identities over real quadratic fields of class number one.

pub mod error;
pub mod ntheory;
pub mod charsums;
pub mod quadfield;
pub mod solnsets;
pub mod zagierbridge;
pub mod multident;
pub mod quad;
pub mod spectransform;
pub mod geoside;
pub mod harness;

pub use error::{Error, Result};
pub use quadfield::{make_field, FieldContext, Ideal, IdealFactorization, OmegaKind, PrimeFactor, QuadInt, ResidueRing, Splitting};
pub use harness::{run_suite, ReportFormat, ReportValue, SuiteSpec, VerificationReport, SUITES};
