use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("medium needs at least one layer")]
    EmptyMedium,

    #[error("expected {expected} interfaces for {layers} layers, got {got}")]
    LayerCountMismatch {
        layers: usize,
        expected: usize,
        got: usize,
    },

    #[error("coefficient a[{index}] = {value} is not a positive finite number")]
    NonPositiveCoefficient { index: usize, value: f64 },

    #[error("interface x[{index}] = {value} is not finite")]
    NonFiniteInterface { index: usize, value: f64 },

    #[error("interfaces must be strictly increasing: x[{index}] = {value} does not exceed its predecessor")]
    NonIncreasingInterfaces { index: usize, value: f64 },

    #[error("part {index} = {part} exceeds the threshold {threshold}; refine the partition first")]
    PartTooLarge {
        index: usize,
        part: f64,
        threshold: f64,
    },

    #[error("partition parts must be positive and finite, part {index} = {value}")]
    InvalidPart { index: usize, value: f64 },

    #[error("partition total {total} does not match the requested total {expected}")]
    PartitionTotalMismatch { total: f64, expected: f64 },

    #[error("parameter `{name}` = {value} is out of range: {reason}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("synthesized medium has log a spread {spread} >= log 4, so a cannot fit in (1/2, 2)")]
    CoefficientRangeTooWide { spread: f64 },

    #[error("series has {got} generators, at most {max} are supported")]
    TooManyGenerators { got: usize, max: usize },

    #[error("degree cap {got} exceeds the supported maximum {max}")]
    DegreeCapTooLarge { got: u32, max: u32 },

    #[error("generator count mismatch: {left} vs {right}")]
    GeneratorMismatch { left: usize, right: usize },

    #[error("generator index {index} out of range for {count} generators")]
    GeneratorOutOfRange { index: usize, count: usize },

    #[error("contraction violated{}: rho = {rho} >= 1", step.map(|k| format!(" at step {k}")).unwrap_or_default())]
    Contraction { rho: f64, step: Option<usize> },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("source support [{left}, {right}] is not strictly inside a single layer")]
    SourceStraddlesInterface { left: f64, right: f64 },

    #[error("malformed series dump at line {line}: {reason}")]
    SeriesParse { line: usize, reason: String },

    #[error("malformed medium record: {0}")]
    MediumParse(String),

    #[error("search budget exhausted at n = {parts}: best certified lower bound {best}")]
    BudgetExhausted { parts: usize, best: f64 },

    #[error("linear system is singular at working precision")]
    SingularSystem,

    #[error("{0}")]
    Simulation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
