//! Time-domain solvers.

pub mod output;
pub mod schrodinger;
pub mod wave;

pub use schrodinger::{
    schrodinger_decay_ratio, schrodinger_evolve, InitialProfile, SchrodingerConfig, SchrodingerRun,
};
pub use wave::{
    wave_dispersion_ratio, wave_ray_trace, wave_ray_trace_probes, DispersionRatio, ImpulseTrain,
    Pulse, TraceConfig, TraceReport,
};
