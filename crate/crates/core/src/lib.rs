//! Dispersion bounds for 1-D wave and Schrödinger equations on layered media.
//!
//! * [`medium`]: piecewise-constant coefficients, reflection data, counterexample media.
//! * [`series`]: sparse multi-index series with certified truncation tails.
//! * [`resolvent`]: the layered resolvent system, reflection recursion and closed forms.
//! * [`partitions`]: partition series `R(t; q)` and the `tan^r x` table.
//! * [`simulate`]: ray tracing for the wave equation and a Crank–Nicolson Schrödinger solver.

pub mod error;
pub mod medium;
pub mod partitions;
pub mod resolvent;
pub mod series;
pub mod simulate;

pub use error::{Error, Result};
pub use medium::{synthesize_counterexample, LaminarMedium, MediumRecord, ReflectionProfile};
pub use partitions::{Partition, TransferMatrixNorms};
pub use resolvent::{ResolventSystem, SourceSpec};
pub use series::{MultiSeries, NormInterval};
pub use simulate::{ImpulseTrain, SchrodingerRun};
