//! Experiment drivers: seeded sweeps, image deblurring and heatmap
//! rendering. The command-line front end is a thin layer over these.

pub mod deblur;
pub mod heatmap;
pub mod method;
pub mod sweep;

pub use method::{solve, Method, SolveReport, SolverSettings, Trace};
pub use sweep::{run_sweep, run_sweep_with, summarize, SweepConfig, SweepGrid};
