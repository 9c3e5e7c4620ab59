//! Config-driven sweeps that write one CSV per run.
//!
//! A sweep is described by a [`SweepSpec`], parsed from a `key = value` file
//! by [`validate_config`] or taken from a named preset. [`run_sweep`] evaluates
//! every grid point in parallel and returns the rows in grid order, so the
//! CSV is byte-identical for any thread count.

mod config;
mod csv;
mod presets;
mod sim;
mod sweep;

pub use config::{parse_config, validate_config, ConfigError, Kind, SweepSpec};
pub use csv::{ebn0, s_eff, write_csv, SweepRow, HEADER};
pub use presets::{preset, PRESETS};
pub use sim::{amp_rank_profiles, mf_pipeline, AmpSetup, CommaCsi, MfStats, RankProfiles};
pub use sweep::{grid_points, run_sweep, trace_path, write_outputs, Point, SweepOutput, SweepSummary};
