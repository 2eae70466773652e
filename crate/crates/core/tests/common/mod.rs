#![allow(dead_code)]

use herald_mux::{
    ChannelSpec, DetectorRole, DetectorSpec, LaserSpec, McSettings, MuxTopology, PairStatistics, Scenario, SwitchSpec,
};

pub const REP: f64 = 76e6;

/// One channel: pairs per pulse, idler and signal loss (dB), herald dark
/// probability per gate, heralded-arm noise probability per gate.
#[derive(Clone, Copy)]
pub struct Ch {
    pub mu: f64,
    pub idler_db: f64,
    pub signal_db: f64,
    pub d_i: f64,
    pub d_s: f64,
}

pub fn detector(role: DetectorRole, dark_prob: f64, deadtime_us: f64) -> DetectorSpec {
    DetectorSpec { efficiency: 1.0, dark_rate_hz: dark_prob * REP, gate_window_ns: 5.0, deadtime_us, role }
}

pub fn scenario(chans: &[Ch], switch: SwitchSpec) -> Scenario {
    let channels: Vec<ChannelSpec> = chans
        .iter()
        .enumerate()
        .map(|(i, c)| ChannelSpec {
            label: format!("ch{}", i + 1),
            mu: c.mu,
            brightness_slope: None,
            eta_idler_db: c.idler_db,
            eta_signal_db: c.signal_db,
            max_car: None,
            signal_noise_prob: (c.d_s > 0.0).then_some(c.d_s),
        })
        .collect();
    let labels: Vec<String> = channels.iter().map(|c| c.label.clone()).collect();
    Scenario {
        laser: LaserSpec { rep_rate_hz: REP, wavelength_nm: 710.0, bandwidth_ghz: 300.0, pulse_duration_ps: 1.2 },
        herald_detectors: chans.iter().map(|c| detector(DetectorRole::Herald, c.d_i, 0.0)).collect(),
        heralded_detector: detector(DetectorRole::Heralded, 0.0, 0.0),
        topology: MuxTopology::balanced_tree(&labels, switch),
        channels,
        spectral: None,
        pair_statistics: PairStatistics::Poisson,
        mc: McSettings { num_pulses: 1_000_000, seed: 1, shards: 1, accidental_windows: 1, photon_cap: None },
    }
}

pub fn lossless() -> SwitchSpec {
    SwitchSpec { insertion_loss_db: 0.0, reconfig_latency_pulses: 0 }
}

/// `|a - b| <= k * sigma`, with a readable failure message.
#[track_caller]
pub fn assert_within(a: f64, b: f64, sigma: f64, k: f64, what: &str) {
    assert!((a - b).abs() <= k * sigma, "{what}: {a} vs {b} differ by more than {k} x {sigma}");
}
