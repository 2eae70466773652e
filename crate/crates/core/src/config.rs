//! Scenario file format (TOML).
//!
//! Every key carries its unit as a suffix and unknown keys are rejected.
//! See `docs/scenario-format.md` for the full key list.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    ChannelSpec, DetectorRole, DetectorSpec, LaserSpec, McSettings, MuxTopology, RoutingPolicy, Scenario, SpectralSpec,
    SwitchSpec,
};
use crate::prob::PairStatistics;
use crate::runner::SweepSpec;

/// A parsed scenario file: the experiment plus an optional sweep recipe.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDocument {
    pub scenario: Scenario,
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    pair_statistics: PairStatistics,
    laser: LaserSection,
    #[serde(default)]
    channels: Vec<ChannelSection>,
    detectors: DetectorsSection,
    #[serde(default)]
    topology: TopologySection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spectral: Option<SpectralSection>,
    #[serde(default)]
    mc: McSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LaserSection {
    rep_rate_hz: f64,
    wavelength_nm: f64,
    bandwidth_ghz: f64,
    pulse_duration_ps: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSection {
    label: String,
    mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    brightness_slope_per_mw: Option<f64>,
    eta_idler_db: f64,
    eta_signal_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_car: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    signal_noise_prob: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectorSection {
    efficiency: f64,
    dark_rate_hz: f64,
    gate_window_ns: f64,
    deadtime_us: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectorsSection {
    heralded: DetectorSection,
    /// Keyed by channel label.
    herald: BTreeMap<String, DetectorSection>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PolicyKind {
    #[default]
    Priority,
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SwitchSection {
    #[serde(default)]
    insertion_loss_db: f64,
    #[serde(default)]
    reconfig_latency_pulses: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologySection {
    #[serde(default)]
    policy: PolicyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    priority: Option<Vec<String>>,
    /// Shortcut: build a balanced tree of identical switches.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    balanced_tree: Option<SwitchSection>,
    #[serde(default)]
    switches: BTreeMap<String, SwitchSection>,
    #[serde(default)]
    paths: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectralSection {
    pump_bandwidth_ghz: f64,
    idler_filter_bandwidth_ghz: f64,
    signal_filter_bandwidth_ghz: f64,
    phasematch_bandwidth_nm: f64,
    center_wavelength_ref_nm: f64,
    temperature_ref_k: f64,
    tuning_slope_nm_per_k: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct McSection {
    num_pulses: u64,
    #[serde(with = "seed_repr")]
    seed: u64,
    shards: u32,
    #[serde(default = "one")]
    accidental_windows: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    photon_cap: Option<u32>,
}

fn one() -> u32 {
    1
}

impl Default for McSection {
    fn default() -> Self {
        let d = McSettings::default();
        Self {
            num_pulses: d.num_pulses,
            seed: d.seed,
            shards: d.shards,
            accidental_windows: d.accidental_windows,
            photon_cap: d.photon_cap,
        }
    }
}

/// TOML integers are signed 64-bit; seeds above `i64::MAX` are written as strings.
mod seed_repr {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(u64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Int(v) => Ok(v),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

fn detector(d: &DetectorSection, role: DetectorRole) -> DetectorSpec {
    DetectorSpec {
        efficiency: d.efficiency,
        dark_rate_hz: d.dark_rate_hz,
        gate_window_ns: d.gate_window_ns,
        deadtime_us: d.deadtime_us,
        role,
    }
}

fn detector_section(d: &DetectorSpec) -> DetectorSection {
    DetectorSection {
        efficiency: d.efficiency,
        dark_rate_hz: d.dark_rate_hz,
        gate_window_ns: d.gate_window_ns,
        deadtime_us: d.deadtime_us,
    }
}

impl ScenarioFile {
    fn into_document(self) -> Result<ScenarioDocument> {
        let labels: Vec<String> = self.channels.iter().map(|c| c.label.clone()).collect();
        if self.channels.is_empty() {
            return Err(Error::EmptyChannels);
        }

        for key in self.detectors.herald.keys() {
            if !labels.contains(key) {
                return Err(Error::Parse(format!("detectors.herald.{key}: no channel with that label")));
            }
        }
        let herald_detectors = labels
            .iter()
            .map(|l| {
                self.detectors
                    .herald
                    .get(l)
                    .map(|d| detector(d, DetectorRole::Herald))
                    .ok_or_else(|| Error::Parse(format!("detectors.herald.{l} is missing")))
            })
            .collect::<Result<Vec<_>>>()?;

        let topo = self.topology;
        let policy = match topo.policy {
            PolicyKind::Random => {
                if topo.priority.is_some() {
                    return Err(Error::Parse("topology.priority is only valid with policy = \"priority\"".into()));
                }
                RoutingPolicy::RandomUniform
            }
            PolicyKind::Priority => RoutingPolicy::Priority(topo.priority.unwrap_or_else(|| labels.clone())),
        };
        let topology = match topo.balanced_tree {
            Some(sw) => {
                if !topo.switches.is_empty() || !topo.paths.is_empty() {
                    return Err(Error::Parse(
                        "topology.balanced_tree cannot be combined with explicit switches or paths".into(),
                    ));
                }
                let spec = SwitchSpec {
                    insertion_loss_db: sw.insertion_loss_db,
                    reconfig_latency_pulses: sw.reconfig_latency_pulses,
                };
                MuxTopology::balanced_tree(&labels, spec).with_policy(policy)?
            }
            None => {
                for key in topo.paths.keys() {
                    if !labels.contains(key) {
                        return Err(Error::Parse(format!("topology.paths.{key}: no channel with that label")));
                    }
                }
                let paths = labels.iter().map(|l| topo.paths.get(l).cloned().unwrap_or_default()).collect();
                let switches = topo
                    .switches
                    .into_iter()
                    .map(|(id, s)| {
                        (id, SwitchSpec { insertion_loss_db: s.insertion_loss_db, reconfig_latency_pulses: s.reconfig_latency_pulses })
                    })
                    .collect();
                MuxTopology::new(labels.clone(), paths, switches, policy)?
            }
        };

        let scenario = Scenario {
            laser: LaserSpec {
                rep_rate_hz: self.laser.rep_rate_hz,
                wavelength_nm: self.laser.wavelength_nm,
                bandwidth_ghz: self.laser.bandwidth_ghz,
                pulse_duration_ps: self.laser.pulse_duration_ps,
            },
            channels: self
                .channels
                .into_iter()
                .map(|c| ChannelSpec {
                    label: c.label,
                    mu: c.mu,
                    brightness_slope: c.brightness_slope_per_mw,
                    eta_idler_db: c.eta_idler_db,
                    eta_signal_db: c.eta_signal_db,
                    max_car: c.max_car,
                    signal_noise_prob: c.signal_noise_prob,
                })
                .collect(),
            herald_detectors,
            heralded_detector: detector(&self.detectors.heralded, DetectorRole::Heralded),
            topology,
            spectral: self.spectral.map(|s| SpectralSpec {
                pump_bandwidth_ghz: s.pump_bandwidth_ghz,
                idler_filter_bandwidth_ghz: s.idler_filter_bandwidth_ghz,
                signal_filter_bandwidth_ghz: s.signal_filter_bandwidth_ghz,
                phasematch_bandwidth_nm: s.phasematch_bandwidth_nm,
                center_wavelength_ref_nm: s.center_wavelength_ref_nm,
                temperature_ref_k: s.temperature_ref_k,
                tuning_slope_nm_per_k: s.tuning_slope_nm_per_k,
            }),
            pair_statistics: self.pair_statistics,
            mc: McSettings {
                num_pulses: self.mc.num_pulses,
                seed: self.mc.seed,
                shards: self.mc.shards,
                accidental_windows: self.mc.accidental_windows,
                photon_cap: self.mc.photon_cap,
            },
        };
        scenario.validate()?;
        if let Some(sweep) = &self.sweep {
            sweep.validate()?;
        }
        Ok(ScenarioDocument { scenario, sweep: self.sweep })
    }

    fn from_scenario(s: &Scenario, sweep: Option<&SweepSpec>) -> Self {
        let t = &s.topology;
        let (policy, priority) = match t.policy() {
            RoutingPolicy::RandomUniform => (PolicyKind::Random, None),
            RoutingPolicy::Priority(order) => (PolicyKind::Priority, Some(order.clone())),
        };
        ScenarioFile {
            pair_statistics: s.pair_statistics,
            laser: LaserSection {
                rep_rate_hz: s.laser.rep_rate_hz,
                wavelength_nm: s.laser.wavelength_nm,
                bandwidth_ghz: s.laser.bandwidth_ghz,
                pulse_duration_ps: s.laser.pulse_duration_ps,
            },
            channels: s
                .channels
                .iter()
                .map(|c| ChannelSection {
                    label: c.label.clone(),
                    mu: c.mu,
                    brightness_slope_per_mw: c.brightness_slope,
                    eta_idler_db: c.eta_idler_db,
                    eta_signal_db: c.eta_signal_db,
                    max_car: c.max_car,
                    signal_noise_prob: c.signal_noise_prob,
                })
                .collect(),
            detectors: DetectorsSection {
                heralded: detector_section(&s.heralded_detector),
                herald: s
                    .channels
                    .iter()
                    .zip(&s.herald_detectors)
                    .map(|(c, d)| (c.label.clone(), detector_section(d)))
                    .collect(),
            },
            topology: TopologySection {
                policy,
                priority,
                balanced_tree: None,
                switches: t
                    .switches()
                    .iter()
                    .map(|(id, sw)| {
                        (
                            id.clone(),
                            SwitchSection {
                                insertion_loss_db: sw.insertion_loss_db,
                                reconfig_latency_pulses: sw.reconfig_latency_pulses,
                            },
                        )
                    })
                    .collect(),
                paths: t.channel_labels().iter().cloned().zip(t.paths().iter().cloned()).collect(),
            },
            spectral: s.spectral.as_ref().map(|x| SpectralSection {
                pump_bandwidth_ghz: x.pump_bandwidth_ghz,
                idler_filter_bandwidth_ghz: x.idler_filter_bandwidth_ghz,
                signal_filter_bandwidth_ghz: x.signal_filter_bandwidth_ghz,
                phasematch_bandwidth_nm: x.phasematch_bandwidth_nm,
                center_wavelength_ref_nm: x.center_wavelength_ref_nm,
                temperature_ref_k: x.temperature_ref_k,
                tuning_slope_nm_per_k: x.tuning_slope_nm_per_k,
            }),
            mc: McSection {
                num_pulses: s.mc.num_pulses,
                seed: s.mc.seed,
                shards: s.mc.shards,
                accidental_windows: s.mc.accidental_windows,
                photon_cap: s.mc.photon_cap,
            },
            sweep: sweep.cloned(),
        }
    }
}

pub fn parse_document(text: &str) -> Result<ScenarioDocument> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_document()
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    parse_document(text).map(|d| d.scenario)
}

pub fn load_document(path: &Path) -> Result<ScenarioDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_document(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Canonical file form with explicit switches and paths.
pub fn to_toml_string(scenario: &Scenario) -> Result<String> {
    document_to_toml_string(scenario, None)
}

pub fn document_to_toml_string(scenario: &Scenario, sweep: Option<&SweepSpec>) -> Result<String> {
    toml::to_string(&ScenarioFile::from_scenario(scenario, sweep)).map_err(|e| Error::Parse(e.to_string()))
}
