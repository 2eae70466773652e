use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::predict;
use crate::error::{Error, Result};
use crate::mc;
use crate::model::Scenario;
use crate::prob::rate_hz;
use crate::table::{num, opt_int, opt_num, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Multiplies every channel's mean pair number.
    MuScale,
    /// Sets each mean pair number from its brightness slope.
    PumpPowerMw,
    /// Sets each channel's `mu * eta_s * eta_i` to the grid value.
    CoincidencePerPulse,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::MuScale => "mu_scale",
            SweepParameter::PumpPowerMw => "pump_power_mw",
            SweepParameter::CoincidencePerPulse => "coincidence_per_pulse",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineSelector {
    #[default]
    Analytic,
    MonteCarlo,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    #[serde(default)]
    pub engine: EngineSelector,
    /// Restrict the scenario to these channels first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<String>>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Validation("sweep grid is empty".into()));
        }
        if let Some(bad) = self.values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Validation(format!("sweep value {bad} must be finite and non-negative")));
        }
        let up = self.values.windows(2).all(|w| w[1] > w[0]);
        let down = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::Validation("sweep grid must be strictly monotone".into()));
        }
        Ok(())
    }

    /// The scenario at one grid value.
    pub fn apply(&self, scenario: &Scenario, value: f64) -> Result<Scenario> {
        let s = match &self.channels {
            Some(labels) => scenario.restricted(labels)?,
            None => scenario.clone(),
        };
        match self.parameter {
            SweepParameter::MuScale => Ok(s.with_mu_scale(value)),
            SweepParameter::PumpPowerMw => s.at_pump_power(value),
            SweepParameter::CoincidencePerPulse => {
                let resolved = s.resolve()?;
                let mut out = s.clone();
                for (ch, r) in out.channels.iter_mut().zip(&resolved.channels) {
                    ch.mu = value / (r.eta_signal * r.eta_idler);
                }
                Ok(out)
            }
        }
    }
}

/// One output row. Monte Carlo rows report background-subtracted rate and CAR.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_param: &'static str,
    pub value: f64,
    pub engine: &'static str,
    pub rate_hz: f64,
    pub rate_err: Option<f64>,
    pub car: f64,
    pub car_err: Option<f64>,
    pub coincidences: Option<u64>,
    pub accidentals: Option<u64>,
    pub seed: Option<u64>,
}

pub const SWEEP_COLUMNS: [&str; 10] =
    ["sweep_param", "value", "engine", "rate_hz", "rate_err", "car", "car_err", "coincidences", "accidentals", "seed"];

fn rows_at(scenario: &Scenario, spec: &SweepSpec, value: f64, shards: u32) -> Result<Vec<SweepRow>> {
    let s = spec.apply(scenario, value)?;
    let mut rows = Vec::with_capacity(2);
    if matches!(spec.engine, EngineSelector::Analytic | EngineSelector::Both) {
        let p = predict(&s)?;
        rows.push(SweepRow {
            sweep_param: spec.parameter.name(),
            value,
            engine: "analytic",
            rate_hz: rate_hz(p.coincidence_per_pulse, s.laser.rep_rate_hz),
            rate_err: None,
            car: p.car,
            car_err: None,
            coincidences: None,
            accidentals: None,
            seed: None,
        });
    }
    if matches!(spec.engine, EngineSelector::MonteCarlo | EngineSelector::Both) {
        let r = mc::run_sharded(&s, shards)?;
        rows.push(SweepRow {
            sweep_param: spec.parameter.name(),
            value,
            engine: "monte-carlo",
            rate_hz: r.net_rate_hz.value,
            rate_err: Some(r.net_rate_hz.err),
            car: r.car_net.map_or(f64::NAN, |e| e.value),
            car_err: r.car_net.map(|e| e.err),
            coincidences: Some(r.tally.coincidences),
            accidentals: Some(r.tally.accidentals_shifted),
            seed: Some(r.metadata.seed),
        });
    }
    Ok(rows)
}

/// Runs every grid point (concurrently) and returns rows in grid order.
/// Monte Carlo points all use the scenario's seed and shard count.
pub fn sweep(scenario: &Scenario, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    scenario.validate()?;
    let shards = scenario.mc.shards;
    let per_point = spec
        .values
        .par_iter()
        .map(|&v| rows_at(scenario, spec, v, shards))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new("sweep", &SWEEP_COLUMNS);
    for r in rows {
        t.push(vec![
            r.sweep_param.to_string(),
            num(r.value),
            r.engine.to_string(),
            num(r.rate_hz),
            opt_num(r.rate_err),
            num(r.car),
            opt_num(r.car_err),
            opt_int(r.coincidences),
            opt_int(r.accidentals),
            opt_int(r.seed),
        ]);
    }
    t
}
