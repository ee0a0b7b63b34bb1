//! Two-stage randomized group testing.
//!
//! A first stage of `m` pooled tests screens `n` individuals; everyone who is
//! not in at least one negative pool is then tested individually. Three ways
//! of forming the pools are supported:
//!
//! * FTP: each pool draws `b` individuals,
//! * FTI: each individual joins `d` pools,
//! * RP: each individual joins each pool with probability `a`.
//!
//! [`analytic`] evaluates and optimizes the expected number of tests,
//! [`pooling`] and [`simulate`] run the scheme on sampled designs, [`oracle`]
//! computes exact expectations for tiny instances and [`harness`] drives
//! sweeps and writes CSV.

pub mod analytic;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod pooling;
pub mod seed;
pub mod simulate;
pub mod types;

pub use analytic::{AnalyticPrediction, Form, ObjectiveCurve, OptimizedDesign, PoolCountRule};
pub use error::{Error, Result};
pub use oracle::EnumerationResult;
pub use pooling::PoolingDesign;
pub use simulate::{InfectionOutcome, ReplicationSummary, StageOneResult, TwoStageResult};
pub use types::{constants, DesignParams, InfectionModel, ProblemInstance, Scheme};
