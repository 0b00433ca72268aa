//! Design, simulate, and diagnose controlled experiments.

pub mod controls;
pub mod diagnostics;
pub mod error;
pub mod pretrial;
pub mod report;
pub mod rng;
pub mod runner;
pub mod scenario;
pub mod science;
pub mod sim;

pub use error::{Error, Result};
pub use science::{
    Assignment, ObservedDataset, OutcomeDef, OutcomeRole, ScienceTable, TreatmentKind,
    TreatmentLevel, Unit,
};
