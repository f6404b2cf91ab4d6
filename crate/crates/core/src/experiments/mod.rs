//! Scenario configuration, sweeps, beampatterns and figures.

pub mod beampattern;
pub mod config_io;
pub mod plots;
pub mod scenario;
pub mod sweep;

pub use beampattern::{beampattern, default_grid, pattern_at, write_beampattern, BeamRow, Beampattern};
pub use config_io::{load_config, load_config_with_base, parse_config, render_config};
pub use plots::{emit_plots, plot_beampattern, plot_records, PlotFile, DB_FLOOR};
pub use scenario::{run_point, run_scenario, ExperimentRecord, SavedRun, Scheme, Status, CSV_HEADER};
pub use sweep::{run_sweep, run_sweep_records, summarize, SummaryRow, SweepOutput, SweepSpec, SweepVar, THREADS_ENV};
