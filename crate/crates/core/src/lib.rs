//! Runtime adaptation of contextual requirements under uncertainty.
//!
//! * [`reqmodel`]: requirements, operationalizations, sensor variables and
//!   the uncertainty-case detectors.
//! * [`mining`]: datasets, ARFF persistence, the sequential-covering rule
//!   learner and cross-validated quality measures.
//! * [`loopcore`]: the policy-configured Monitor/Analyze/Plan/Execute loop
//!   around a shared knowledge base.

pub mod loopcore;
pub mod mining;
pub mod reqmodel;
