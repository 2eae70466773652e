//! Sweeps, multiplexing comparisons and calibration.

mod calibrate;
mod compare;
mod sweep;

pub use calibrate::{calibrate, Calibration};
pub use compare::{compare_mux, log_grid, ConfigResult, CurvePoint, EnhancementReport, MuxCompareOptions};
pub use sweep::{sweep, sweep_table, EngineSelector, SweepParameter, SweepRow, SweepSpec, SWEEP_COLUMNS};

use crate::analytic::{mux_prediction, MuxPrediction};
use crate::error::Result;
use crate::model::Scenario;

/// First-order analytic prediction for a whole scenario, switches included.
pub fn predict(scenario: &Scenario) -> Result<MuxPrediction> {
    let resolved = scenario.resolve()?;
    mux_prediction(&resolved.analytic_channels(), &scenario.topology)
}
