//! Reservoir computing with elementary cellular automata.
//!
//! Inputs are scattered into a wide binary ring by random injective mappings,
//! the ring is evolved by one elementary CA rule (or two rules on adjacent
//! halves), and every iteration of that evolution feeds a linear readout. The
//! crate also carries the 5-bit memory benchmark and a seeded sweep harness.
//!
//! ```
//! use reca::ca::{evolve, CellVector, Rule, RuleAssignment};
//!
//! let start: CellVector = "00100".parse().unwrap();
//! let rule90 = RuleAssignment::uniform(Rule::new(90), 5).unwrap();
//! let rows = evolve(&start, &rule90, 2).unwrap();
//! assert_eq!(rows[0].to_string(), "01010");
//! assert_eq!(rows[1].to_string(), "10001");
//! ```

pub mod ca;
pub mod diagram;
pub mod encoding;
pub mod error;
pub mod harness;
pub mod readout;
pub mod reservoir;
pub mod tasks;

pub use ca::{CellVector, Rule, RuleAssignment};
pub use encoding::MappingSet;
pub use error::{RecaError, Result};
pub use harness::{ExperimentSpec, ResultRow, RuleSpec};
pub use readout::{ReadoutModel, TrainingSet};
pub use reservoir::{ReservoirConfig, ReservoirState, StepTrace, Transition};
pub use tasks::{Dataset, SequenceSample};
