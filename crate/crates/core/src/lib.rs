//! Desk-scale, exactly verifiable secure and private distributed matrix
//! multiplication.
//!
//! A user holds a confidential matrix `A` and wants the product `A * B_t`
//! for one of M public matrices known to all of N simulated servers,
//! revealing neither `A` nor the index `t` to any single server. The upload
//! phase secret-shares `A` with an MDS code of parameter K; the download
//! phase retrieves the coded products through a coded-PIR schedule of K
//! repetitions times M rounds. The crate runs the whole exchange in
//! process, decodes the product exactly over a prime field, and checks the
//! measured upload/download costs against their closed forms as exact
//! rationals.
//!
//! Modules follow the protocol's anatomy:
//!
//! - [`field`], [`matrix`], [`poly`]: exact arithmetic carriers.
//! - [`scheme`]: parameter validation and the secure upload.
//! - [`plan`]: the private download schedule and its validator.
//! - [`server`]: honest-but-curious server simulation.
//! - [`decoder`]: side-information bookkeeping and interpolation.
//! - [`protocol`], [`transcript`]: orchestration and replayable records.
//! - [`cost`], [`report`]: exact-rational cost curves and CSV emission.
//! - [`stats`]: chi-square harnesses for the security/privacy constraints.

pub mod cost;
pub mod decoder;
pub mod field;
pub mod matrix;
pub mod plan;
pub mod poly;
pub mod protocol;
pub mod report;
pub mod scheme;
pub mod seeding;
pub mod server;
pub mod stats;
pub mod transcript;

pub use cost::{OperatingPoint, Rational};
pub use field::{FieldElement, PrimeField};
pub use matrix::FMatrix;
pub use plan::{BlockId, QueryPlan, Request, ValidationReport};
pub use protocol::{run_protocol, run_protocol_with, CostReport, RunInputs, RunOutcome};
pub use scheme::{validate_params, MaskMatrix, SchemeParams, Share, ValidatedParams};
pub use stats::{PrivacyTestConfig, SecurityTestConfig, StatTestReport};
pub use transcript::Transcript;
