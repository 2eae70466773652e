use rayon::prelude::*;

use crate::analytic::{mux_prediction, AnalyticChannel};
use crate::error::{Error, Result};
use crate::model::{MuxTopology, Scenario};
use crate::prob::rate_hz;

/// `points` values spaced evenly in log between `from` and `to` inclusive.
pub fn log_grid(from: f64, to: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![from],
        _ => {
            let (a, b) = (from.ln(), to.ln());
            (0..points).map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp()).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuxCompareOptions {
    pub reference_car: f64,
    /// Mean-pair-number scale factors, increasing.
    pub scales: Vec<f64>,
}

impl Default for MuxCompareOptions {
    fn default() -> Self {
        Self { reference_car: 10.0, scales: log_grid(1e-3, 1e3, 601) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub scale: f64,
    pub coincidence_per_pulse: f64,
    pub rate_hz: f64,
    pub car: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigResult {
    pub name: String,
    pub channels: Vec<String>,
    pub curve: Vec<CurvePoint>,
    pub car_max: f64,
    /// Operating point on the high-rate branch where CAR equals the reference;
    /// `None` when the curve never reaches it.
    pub at_reference: Option<CurvePoint>,
    /// The configuration at the scenario's own pair numbers.
    pub at_unit_scale: CurvePoint,
    /// Rate at the reference over the best single channel's; `None` if either is unreachable.
    pub enhancement: Option<f64>,
}

impl ConfigResult {
    pub fn reachable(&self) -> bool {
        self.at_reference.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnhancementReport {
    pub reference_car: f64,
    /// Name of the single-channel configuration with the highest rate at the reference.
    pub best_single: Option<String>,
    pub best_single_rate_hz: Option<f64>,
    pub singles: Vec<ConfigResult>,
    pub configs: Vec<ConfigResult>,
}

fn config_name(labels: &[String]) -> String {
    match labels {
        [one] => format!("single-{one}"),
        _ => format!("MUX-{}-1", labels.len()),
    }
}

fn point(channels: &[AnalyticChannel], topology: &MuxTopology, rep: f64, scale: f64) -> Result<CurvePoint> {
    let scaled: Vec<AnalyticChannel> = channels.iter().map(|c| c.scaled(scale)).collect();
    let p = mux_prediction(&scaled, topology)?;
    Ok(CurvePoint {
        scale,
        coincidence_per_pulse: p.coincidence_per_pulse,
        rate_hz: rate_hz(p.coincidence_per_pulse, rep),
        car: p.car,
    })
}

/// Point on the high-rate side of the CAR maximum where CAR crosses `target`,
/// interpolated linearly in (CAR, log rate) and (CAR, log scale).
fn crossing(curve: &[CurvePoint], target: f64) -> Option<CurvePoint> {
    let peak = curve.iter().enumerate().max_by(|a, b| a.1.car.total_cmp(&b.1.car))?.0;
    if curve[peak].car < target {
        return None;
    }
    let branch = &curve[peak..];
    if branch[0].car == target {
        return Some(branch[0]);
    }
    let j = branch.windows(2).position(|w| w[0].car >= target && w[1].car <= target)?;
    let (a, b) = (branch[j], branch[j + 1]);
    let t = if a.car == b.car { 0.0 } else { (a.car - target) / (a.car - b.car) };
    let lerp_log = |x: f64, y: f64| (x.ln() + t * (y.ln() - x.ln())).exp();
    let rate = lerp_log(a.rate_hz, b.rate_hz).clamp(a.rate_hz, b.rate_hz);
    Some(CurvePoint {
        scale: lerp_log(a.scale, b.scale),
        coincidence_per_pulse: lerp_log(a.coincidence_per_pulse, b.coincidence_per_pulse),
        rate_hz: rate,
        car: target,
    })
}

fn evaluate(scenario: &Scenario, labels: &[String], opts: &MuxCompareOptions) -> Result<ConfigResult> {
    let sub = scenario.restricted(labels)?;
    let resolved = sub.resolve()?;
    let channels = resolved.analytic_channels();
    let rep = resolved.rep_rate_hz;
    let curve = opts
        .scales
        .par_iter()
        .map(|&k| point(&channels, &sub.topology, rep, k))
        .collect::<Result<Vec<_>>>()?;
    let car_max = curve.iter().map(|p| p.car).fold(f64::NEG_INFINITY, f64::max);
    Ok(ConfigResult {
        name: config_name(labels),
        channels: sub.channels.iter().map(|c| c.label.clone()).collect(),
        at_reference: crossing(&curve, opts.reference_car),
        at_unit_scale: point(&channels, &sub.topology, rep, 1.0)?,
        car_max,
        curve,
        enhancement: None,
    })
}

/// Rate of each channel subset at a common CAR, relative to the best single
/// channel among the channels that appear in any subset. Each subset keeps its
/// channels' paths through the scenario's switch tree.
pub fn compare_mux(scenario: &Scenario, subsets: &[Vec<String>], opts: &MuxCompareOptions) -> Result<EnhancementReport> {
    if subsets.is_empty() {
        return Err(Error::Validation("no channel subsets to compare".into()));
    }
    if !(opts.reference_car > 0.0 && opts.reference_car.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "reference_car",
            value: opts.reference_car,
            reason: "must be positive and finite",
        });
    }
    if opts.scales.is_empty() || !opts.scales.windows(2).all(|w| w[1] > w[0]) || opts.scales[0] <= 0.0 {
        return Err(Error::Validation("scale grid must be positive and strictly increasing".into()));
    }

    let mut used: Vec<String> = Vec::new();
    for s in subsets {
        for l in s {
            if scenario.channel_index(l).is_none() {
                return Err(Error::Validation(format!("unknown channel `{l}`")));
            }
            if !used.contains(l) {
                used.push(l.clone());
            }
        }
    }
    used.sort_by_key(|l| scenario.channel_index(l));

    let singles = used
        .iter()
        .map(|l| evaluate(scenario, std::slice::from_ref(l), opts))
        .collect::<Result<Vec<_>>>()?;
    let best = singles
        .iter()
        .filter_map(|s| s.at_reference.map(|p| (s, p.rate_hz)))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    let best_rate = best.map(|b| b.1);

    let mut configs = subsets.iter().map(|s| evaluate(scenario, s, opts)).collect::<Result<Vec<_>>>()?;
    for c in &mut configs {
        c.enhancement = match (c.at_reference, best_rate) {
            (Some(p), Some(b)) if b > 0.0 => Some(p.rate_hz / b),
            _ => None,
        };
    }
    Ok(EnhancementReport {
        reference_car: opts.reference_car,
        best_single: best.map(|b| b.0.name.clone()),
        best_single_rate_hz: best_rate,
        singles,
        configs,
    })
}
