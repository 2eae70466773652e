use super::CompiledTopology;
use super::{McSettings, Scenario};
use crate::analytic::{fit_dark_signal, AnalyticChannel};
use crate::error::{Error, Result};
use crate::prob::{dark_prob_per_gate, db_to_transmission, deadtime_slots, PairStatistics};

/// A channel reduced to per-pulse probabilities. Both engines work from this.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedChannel {
    pub label: String,
    pub mu: f64,
    /// Heralding arm including the herald detector.
    pub eta_idler: f64,
    /// Signal arm up to the switch tree, times the final detector efficiency.
    pub eta_signal: f64,
    /// Switch insertion losses on this channel's path.
    pub path_transmission: f64,
    pub d_idler: f64,
    /// False-click probability of a heralded gate while this channel is routed.
    pub d_signal: f64,
    pub herald_deadtime_slots: u64,
}

impl ResolvedChannel {
    /// Single-channel view without the switch tree.
    pub fn analytic(&self) -> AnalyticChannel {
        AnalyticChannel {
            c: self.mu * self.eta_signal * self.eta_idler,
            eta_s: self.eta_signal,
            eta_i: self.eta_idler,
            d_i: self.d_idler,
            d_s: self.d_signal,
        }
    }

    /// Total signal transmission from source to a click, switches included.
    pub fn signal_transmission(&self) -> f64 {
        self.eta_signal * self.path_transmission
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScenario {
    pub channels: Vec<ResolvedChannel>,
    pub topology: CompiledTopology,
    pub rep_rate_hz: f64,
    pub heralded_deadtime_slots: u64,
    pub statistics: PairStatistics,
    pub mc: McSettings,
}

impl ResolvedScenario {
    pub fn new(s: &Scenario) -> Result<Self> {
        s.validate()?;
        let rep = s.laser.rep_rate_hz;
        let topology = s.topology.compile()?;
        let heralded = &s.heralded_detector;
        let detector_dark = dark_prob_per_gate(heralded.dark_rate_hz, rep)?;
        let channels = s
            .channels
            .iter()
            .zip(&s.herald_detectors)
            .zip(&topology.routes)
            .map(|((ch, det), route)| {
                let eta_idler = db_to_transmission(ch.eta_idler_db)? * det.efficiency;
                let eta_signal = db_to_transmission(ch.eta_signal_db)? * heralded.efficiency;
                let d_idler = dark_prob_per_gate(det.dark_rate_hz, rep)?;
                let d_signal = match (ch.max_car, ch.signal_noise_prob) {
                    (Some(target), _) => {
                        let fitted = fit_dark_signal(target, eta_signal, eta_idler, d_idler)?;
                        if fitted < detector_dark {
                            return Err(Error::Validation(format!(
                                "channel `{}`: max_car {target} needs a heralded-arm dark probability of {fitted:.3e}, \
                                 below the detector's own {detector_dark:.3e}",
                                ch.label
                            )));
                        }
                        fitted
                    }
                    (None, noise) => 1.0 - (1.0 - detector_dark) * (1.0 - noise.unwrap_or(0.0)),
                };
                Ok(ResolvedChannel {
                    label: ch.label.clone(),
                    mu: ch.mu,
                    eta_idler,
                    eta_signal,
                    path_transmission: route.transmission,
                    d_idler,
                    d_signal,
                    herald_deadtime_slots: deadtime_slots(det.deadtime_us, rep)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            channels,
            heralded_deadtime_slots: deadtime_slots(heralded.deadtime_us, rep)?,
            topology,
            rep_rate_hz: rep,
            statistics: s.pair_statistics,
            mc: s.mc.clone(),
        })
    }

    /// Single-channel analytic views in channel order (no switch tree).
    pub fn analytic_channels(&self) -> Vec<AnalyticChannel> {
        self.channels.iter().map(ResolvedChannel::analytic).collect()
    }
}
