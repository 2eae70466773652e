//! Pulse-slot Monte Carlo of the full multiplexed source.
//!
//! Time advances in pump-pulse slots; every detector gate covers exactly one
//! slot. Per slot each source emits a random number of pairs, the idler arm
//! is thinned and gated by a herald detector with deadtime, the
//! highest-priority herald is routed through the switch tree, and the routed
//! signal arm is gated at the output detector. Accidentals are estimated by
//! replaying each heralded gate against the signal light of earlier slots.

mod engine;

pub use engine::SlotOutcome;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config;
use crate::error::Result;
use crate::model::{CountTally, ResolvedScenario, Scenario};

/// A counted quantity and its Poisson standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

impl Estimate {
    /// `|self - expected| <= k * err`.
    pub fn within(&self, expected: f64, k: f64) -> bool {
        (self.value - expected).abs() <= k * self.err
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CarEstimate {
    Value(Estimate),
    /// No accidentals were seen; CAR is at least this (one accidental count assumed).
    LowerBound(f64),
}

impl CarEstimate {
    pub fn value(&self) -> Option<Estimate> {
        match self {
            CarEstimate::Value(e) => Some(*e),
            CarEstimate::LowerBound(_) => None,
        }
    }
}

/// Raw CAR: coincidences over accidentals per replayed window.
pub fn estimate_car(tally: &CountTally) -> CarEstimate {
    let c = tally.coincidences as f64;
    let a = tally.accidentals_shifted as f64;
    let k = tally.accidental_windows.max(1) as f64;
    if tally.accidentals_shifted == 0 {
        return CarEstimate::LowerBound(c * k);
    }
    let value = c * k / a;
    let err = if tally.coincidences == 0 { k / a } else { value * (1.0 / c + 1.0 / a).sqrt() };
    CarEstimate::Value(Estimate { value, err })
}

/// Background-subtracted CAR, `(coincidences - accidentals) / accidentals`,
/// which estimates true coincidences over accidentals.
pub fn estimate_net_car(tally: &CountTally) -> Option<Estimate> {
    estimate_car(tally).value().map(|raw| Estimate { value: raw.value - 1.0, err: raw.err })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub seed: u64,
    pub pulses: u64,
    pub shards: u32,
    pub scenario_digest: String,
    pub accidental_method: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub tally: CountTally,
    pub car_measured: CarEstimate,
    pub car_net: Option<Estimate>,
    /// Raw coincidence rate at the output.
    pub heralded_rate_hz: Estimate,
    /// Coincidence rate with the accidental rate subtracted.
    pub net_rate_hz: Estimate,
    pub channel_rates_hz: Vec<Estimate>,
    pub herald_rate_hz: Estimate,
    pub metadata: RunMetadata,
}

impl SimResult {
    fn from_tally(tally: CountTally, rep_rate_hz: f64, metadata: RunMetadata) -> Self {
        let pulses = tally.pulses.max(1) as f64;
        let scale = rep_rate_hz / pulses;
        let counted = |n: u64| Estimate { value: n as f64 * scale, err: (n as f64).sqrt() * scale };
        let c = tally.coincidences as f64;
        let a = tally.accidentals_shifted as f64;
        let k = tally.accidental_windows.max(1) as f64;
        Self {
            car_measured: estimate_car(&tally),
            car_net: estimate_net_car(&tally),
            heralded_rate_hz: counted(tally.coincidences),
            net_rate_hz: Estimate { value: (c - a / k) * scale, err: (c + a / (k * k)).sqrt() * scale },
            channel_rates_hz: tally.channels.iter().map(|ch| counted(ch.coincidences)).collect(),
            herald_rate_hz: counted(tally.herald_clicks()),
            tally,
            metadata,
        }
    }
}

/// Short stable fingerprint of a scenario's canonical file form.
pub fn scenario_digest(scenario: &Scenario) -> String {
    let text = config::to_toml_string(scenario).unwrap_or_default();
    Sha256::digest(text.as_bytes())[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn metadata(scenario: &Scenario, shards: u32) -> RunMetadata {
    RunMetadata {
        seed: scenario.mc.seed,
        pulses: scenario.mc.num_pulses,
        shards,
        scenario_digest: scenario_digest(scenario),
        accidental_method: format!("delayed-slot replay over {} window(s)", scenario.mc.accidental_windows),
    }
}

/// Single random stream over all pulses, strictly in slot order.
pub fn simulate(scenario: &Scenario) -> Result<SimResult> {
    run_sharded(scenario, 1)
}

/// Like [`simulate`], reporting every slot in which a herald clicked.
pub fn simulate_observed<O: FnMut(&SlotOutcome)>(scenario: &Scenario, mut observer: O) -> Result<SimResult> {
    let resolved = ResolvedScenario::new(scenario)?;
    let tally = engine::run_range(&resolved, 0, 0, scenario.mc.num_pulses, &mut observer)?;
    Ok(SimResult::from_tally(tally, resolved.rep_rate_hz, metadata(scenario, 1)))
}

/// Splits the pulses into `shard_count` contiguous blocks, each with its own
/// stream derived from `(seed, shard)`, and sums the tallies. Output depends
/// only on the scenario and the shard count, never on thread scheduling.
pub fn run_sharded(scenario: &Scenario, shard_count: u32) -> Result<SimResult> {
    let resolved = ResolvedScenario::new(scenario)?;
    let shard_count = shard_count.max(1);
    let total = scenario.mc.num_pulses;
    let base = total / shard_count as u64;
    let extra = total % shard_count as u64;
    let blocks: Vec<(u32, u64, u64)> = (0..shard_count)
        .scan(0u64, |start, k| {
            let len = base + u64::from((k as u64) < extra);
            let block = (k, *start, *start + len);
            *start += len;
            Some(block)
        })
        .collect();
    let tallies = blocks
        .par_iter()
        .map(|&(k, start, end)| engine::run_range(&resolved, k, start, end, &mut |_: &SlotOutcome| {}))
        .collect::<Result<Vec<_>>>()?;
    let mut merged = CountTally::new(resolved.channels.len(), scenario.mc.accidental_windows);
    for t in &tallies {
        merged.merge(t)?;
    }
    Ok(SimResult::from_tally(merged, resolved.rep_rate_hz, metadata(scenario, shard_count)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn car_estimate_formula() {
        let mut t = CountTally::new(1, 1);
        t.coincidences = 100;
        t.accidentals_shifted = 10;
        let e = estimate_car(&t).value().unwrap();
        assert!((e.value - 10.0).abs() < 1e-12);
        assert!((e.err - 10.0 * (0.01f64 + 0.1).sqrt()).abs() < 1e-12);
        assert!((e.err - 3.3).abs() < 0.05);

        t.coincidences = 0;
        t.accidentals_shifted = 0;
        assert_eq!(estimate_car(&t), CarEstimate::LowerBound(0.0));
        t.coincidences = 7;
        assert_eq!(estimate_car(&t), CarEstimate::LowerBound(7.0));
    }

    #[test]
    fn windows_normalise_accidentals() {
        let mut t = CountTally::new(1, 50);
        t.coincidences = 100;
        t.accidentals_shifted = 500;
        assert!((estimate_car(&t).value().unwrap().value - 10.0).abs() < 1e-12);
        assert!((estimate_net_car(&t).unwrap().value - 9.0).abs() < 1e-12);
    }
}
