//! Sweeps over `(eps, delta)` or `gamma`, matched-pair difference norms,
//! rate fits, binary snapshots and the verification suites behind the
//! `hydrostat` command.

pub mod config;
pub mod error;
pub mod fit;
pub mod pair;
pub mod plot;
pub mod snapshot;
pub mod sweep;
pub mod verify;

pub use config::{ConfigFile, Point, SweepConfig, SweepMode};
pub use error::{HarnessError, Result};
pub use fit::{fit_rate, FitPoint, RateFit};
pub use pair::{run_matched_pair, PointResult};
pub use snapshot::{load_snapshot, save_snapshot};
pub use sweep::{run_sweep, SweepResult};
