//! Domain types describing a multiplexed heralded source experiment.

mod resolve;
mod tally;
mod topology;

pub use resolve::{ResolvedChannel, ResolvedScenario};
pub use tally::{ChannelTally, CountTally};
pub use topology::{CompiledTopology, Hop, MuxTopology, Node, Route, RoutingPolicy, SwitchSpec};

use crate::error::{ensure, Error, Result};
use crate::prob::PairStatistics;

/// Pulsed pump laser.
#[derive(Debug, Clone, PartialEq)]
pub struct LaserSpec {
    pub rep_rate_hz: f64,
    pub wavelength_nm: f64,
    pub bandwidth_ghz: f64,
    pub pulse_duration_ps: f64,
}

impl LaserSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(self.rep_rate_hz > 0.0 && self.rep_rate_hz.is_finite(), "rep_rate_hz", self.rep_rate_hz, "must be positive")?;
        ensure(self.bandwidth_ghz > 0.0, "bandwidth_ghz", self.bandwidth_ghz, "must be positive")?;
        ensure(self.pulse_duration_ps > 0.0, "pulse_duration_ps", self.pulse_duration_ps, "must be positive")?;
        Ok(())
    }
}

/// One SPDC pair source and the losses of its two arms.
///
/// `eta_idler_db` is the whole heralding arm including its detector.
/// `eta_signal_db` runs up to the switch tree; switch insertion losses and the
/// final detector efficiency are applied on top of it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub label: String,
    /// Mean pairs per pulse before any loss.
    pub mu: f64,
    /// Pairs per pulse per mW of pump, for power sweeps.
    pub brightness_slope: Option<f64>,
    pub eta_idler_db: f64,
    pub eta_signal_db: f64,
    /// Measured maximum CAR; when set, the heralded-arm false-click
    /// probability for this channel is fitted to reproduce it.
    pub max_car: Option<f64>,
    /// Extra false-click probability per heralded gate while this channel
    /// is routed (background in the signal path), on top of detector darks.
    pub signal_noise_prob: Option<f64>,
}

impl ChannelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.label.trim().is_empty() {
            return Err(Error::Validation("channel label must not be empty".into()));
        }
        ensure(self.mu >= 0.0 && self.mu.is_finite(), "mu", self.mu, "must be finite and non-negative")?;
        if let Some(s) = self.brightness_slope {
            ensure(s >= 0.0 && s.is_finite(), "brightness_slope", s, "must be finite and non-negative")?;
        }
        if self.eta_idler_db < 0.0 || self.eta_idler_db.is_nan() {
            return Err(Error::NegativeLoss(self.eta_idler_db));
        }
        if self.eta_signal_db < 0.0 || self.eta_signal_db.is_nan() {
            return Err(Error::NegativeLoss(self.eta_signal_db));
        }
        if let Some(c) = self.max_car {
            ensure(c > 1.0 && c.is_finite(), "max_car", c, "must exceed 1")?;
        }
        if let Some(p) = self.signal_noise_prob {
            ensure((0.0..=1.0).contains(&p), "signal_noise_prob", p, "must be a probability")?;
        }
        if self.max_car.is_some() && self.signal_noise_prob.is_some() {
            return Err(Error::Validation(format!(
                "channel `{}`: set either max_car or signal_noise_prob, not both",
                self.label
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorRole {
    Herald,
    Heralded,
}

/// Gated single-photon detector synchronised to the pump.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSpec {
    pub efficiency: f64,
    pub dark_rate_hz: f64,
    /// Kept as metadata: one gate always covers exactly one pulse slot.
    pub gate_window_ns: f64,
    pub deadtime_us: f64,
    pub role: DetectorRole,
}

impl DetectorSpec {
    pub fn validate(&self) -> Result<()> {
        ensure((0.0..=1.0).contains(&self.efficiency), "efficiency", self.efficiency, "must lie in [0, 1]")?;
        ensure(self.dark_rate_hz >= 0.0 && self.dark_rate_hz.is_finite(), "dark_rate_hz", self.dark_rate_hz, "must be finite and non-negative")?;
        ensure(self.gate_window_ns > 0.0, "gate_window_ns", self.gate_window_ns, "must be positive")?;
        ensure(self.deadtime_us >= 0.0 && self.deadtime_us.is_finite(), "deadtime_us", self.deadtime_us, "must be finite and non-negative")?;
        Ok(())
    }
}

/// Filter bandwidths and the temperature tuning curve of the sources.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSpec {
    pub pump_bandwidth_ghz: f64,
    pub idler_filter_bandwidth_ghz: f64,
    pub signal_filter_bandwidth_ghz: f64,
    pub phasematch_bandwidth_nm: f64,
    pub center_wavelength_ref_nm: f64,
    pub temperature_ref_k: f64,
    pub tuning_slope_nm_per_k: f64,
}

impl SpectralSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pump_bandwidth_ghz", self.pump_bandwidth_ghz),
            ("idler_filter_bandwidth_ghz", self.idler_filter_bandwidth_ghz),
            ("signal_filter_bandwidth_ghz", self.signal_filter_bandwidth_ghz),
            ("phasematch_bandwidth_nm", self.phasematch_bandwidth_nm),
            ("center_wavelength_ref_nm", self.center_wavelength_ref_nm),
        ] {
            ensure(v > 0.0, name, v, "must be positive")?;
        }
        ensure(self.tuning_slope_nm_per_k.is_finite(), "tuning_slope_nm_per_k", self.tuning_slope_nm_per_k, "must be finite")?;
        Ok(())
    }
}

/// Monte Carlo run settings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct McSettings {
    pub num_pulses: u64,
    pub seed: u64,
    pub shards: u32,
    /// Number of earlier pulse slots replayed against each heralded gate to
    /// estimate accidentals. 1 is the plain next-slot method.
    pub accidental_windows: u32,
    /// Lump all pair numbers above this value onto it.
    pub photon_cap: Option<u32>,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            num_pulses: 10_000_000,
            seed: 0,
            shards: 1,
            accidental_windows: 1,
            photon_cap: None,
        }
    }
}

impl McSettings {
    pub fn validate(&self) -> Result<()> {
        if self.num_pulses == 0 {
            return Err(Error::Validation("mc.num_pulses must be positive".into()));
        }
        if self.shards == 0 {
            return Err(Error::Validation("mc.shards must be at least 1".into()));
        }
        if self.accidental_windows == 0 {
            return Err(Error::Validation("mc.accidental_windows must be at least 1".into()));
        }
        Ok(())
    }
}

/// Complete description of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub laser: LaserSpec,
    pub channels: Vec<ChannelSpec>,
    pub herald_detectors: Vec<DetectorSpec>,
    pub heralded_detector: DetectorSpec,
    pub topology: MuxTopology,
    pub spectral: Option<SpectralSpec>,
    pub pair_statistics: PairStatistics,
    pub mc: McSettings,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.laser.validate()?;
        if self.channels.is_empty() {
            return Err(Error::EmptyChannels);
        }
        for ch in &self.channels {
            ch.validate()?;
        }
        if self.herald_detectors.len() != self.channels.len() {
            return Err(Error::Validation(format!(
                "{} channels but {} herald detectors",
                self.channels.len(),
                self.herald_detectors.len()
            )));
        }
        for det in &self.herald_detectors {
            det.validate()?;
        }
        self.heralded_detector.validate()?;
        let labels: Vec<&str> = self.channels.iter().map(|c| c.label.as_str()).collect();
        if self.topology.channel_labels().iter().map(String::as_str).ne(labels.iter().copied()) {
            return Err(Error::Validation(
                "topology channels must match the channel list in order".into(),
            ));
        }
        self.topology.compile()?;
        if let Some(s) = &self.spectral {
            s.validate()?;
        }
        self.mc.validate()
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.label == label)
    }

    /// Same experiment with every source's mean pair number multiplied by `k`.
    pub fn with_mu_scale(&self, k: f64) -> Scenario {
        let mut s = self.clone();
        for ch in &mut s.channels {
            ch.mu *= k;
        }
        s
    }

    /// Mean pair numbers set from each channel's brightness slope.
    pub fn at_pump_power(&self, power_mw: f64) -> Result<Scenario> {
        ensure(power_mw >= 0.0 && power_mw.is_finite(), "pump_power_mw", power_mw, "must be finite and non-negative")?;
        let mut s = self.clone();
        for ch in &mut s.channels {
            let slope = ch.brightness_slope.ok_or_else(|| {
                Error::Validation(format!("channel `{}` has no brightness_slope for a power sweep", ch.label))
            })?;
            ch.mu = slope * power_mw;
        }
        Ok(s)
    }

    /// Keeps only the listed channels; their switch paths are unchanged.
    pub fn restricted(&self, labels: &[String]) -> Result<Scenario> {
        if labels.is_empty() {
            return Err(Error::EmptyChannels);
        }
        let mut keep = Vec::new();
        for l in labels {
            let idx = self
                .channel_index(l)
                .ok_or_else(|| Error::Validation(format!("unknown channel `{l}`")))?;
            if keep.contains(&idx) {
                return Err(Error::Validation(format!("channel `{l}` listed twice")));
            }
            keep.push(idx);
        }
        keep.sort_unstable();
        let mut s = self.clone();
        s.channels = keep.iter().map(|&i| self.channels[i].clone()).collect();
        s.herald_detectors = keep.iter().map(|&i| self.herald_detectors[i].clone()).collect();
        s.topology = self.topology.restricted(&keep)?;
        Ok(s)
    }

    pub fn resolve(&self) -> Result<ResolvedScenario> {
        ResolvedScenario::new(self)
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn detector(role: DetectorRole, efficiency: f64, dark_rate_hz: f64, deadtime_us: f64) -> DetectorSpec {
        DetectorSpec {
            efficiency,
            dark_rate_hz,
            gate_window_ns: 5.0,
            deadtime_us,
            role,
        }
    }

    pub fn channel(label: &str, mu: f64, idler_db: f64, signal_db: f64) -> ChannelSpec {
        ChannelSpec {
            label: label.into(),
            mu,
            brightness_slope: None,
            eta_idler_db: idler_db,
            eta_signal_db: signal_db,
            max_car: None,
            signal_noise_prob: None,
        }
    }

    pub fn laser() -> LaserSpec {
        LaserSpec {
            rep_rate_hz: 76e6,
            wavelength_nm: 710.0,
            bandwidth_ghz: 300.0,
            pulse_duration_ps: 1.2,
        }
    }

    /// Identical channels on a balanced tree of lossless switches.
    pub fn identical(n: usize, mu: f64, idler_db: f64, signal_db: f64, dark_hz: f64) -> Scenario {
        let channels: Vec<ChannelSpec> = (1..=n).map(|i| channel(&format!("ch{i}"), mu, idler_db, signal_db)).collect();
        let labels: Vec<String> = channels.iter().map(|c| c.label.clone()).collect();
        Scenario {
            laser: laser(),
            herald_detectors: vec![detector(DetectorRole::Herald, 1.0, dark_hz, 0.0); n],
            heralded_detector: detector(DetectorRole::Heralded, 1.0, 0.0, 0.0),
            topology: MuxTopology::balanced_tree(&labels, SwitchSpec::default()),
            channels,
            spectral: None,
            pair_statistics: PairStatistics::Poisson,
            mc: McSettings::default(),
        }
    }
}
