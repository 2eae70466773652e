use crate::error::{Error, Result};
use crate::model::Scenario;

/// Linear brightness fit for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub channel: String,
    /// Fitted coincidence rate per unit pump power.
    pub rate_slope_hz_per_mw: f64,
    /// Mean pair number per pulse per mW implied by the channel's losses.
    pub brightness_slope_per_mw: f64,
    /// `(power, measured rate, fitted rate, residual)` per measurement.
    pub residuals: Vec<(f64, f64, f64, f64)>,
    pub rms_residual_hz: f64,
    /// Mean pair number each measurement implies on its own.
    pub implied_mu: Vec<f64>,
}

impl Calibration {
    pub fn mu_at(&self, power_mw: f64) -> f64 {
        self.brightness_slope_per_mw * power_mw
    }
}

/// Least-squares fit of `rate = k * power` through the origin, converted to
/// pairs per pulse with `mu = rate / (rep_rate * eta_s * eta_i)`.
///
/// The losses are the channel's own (no switch tree).
pub fn calibrate(scenario: &Scenario, channel: &str, measured: &[(f64, f64)]) -> Result<Calibration> {
    if measured.is_empty() {
        return Err(Error::DegenerateCalibration("no measurements"));
    }
    for &(p, r) in measured {
        if !(p.is_finite() && r.is_finite() && p >= 0.0 && r >= 0.0) {
            return Err(Error::Validation(format!(
                "measurement ({p} mW, {r} Hz) must be finite and non-negative"
            )));
        }
    }
    let idx = scenario
        .channel_index(channel)
        .ok_or_else(|| Error::Validation(format!("unknown channel `{channel}`")))?;
    let resolved = scenario.resolve()?;
    let ch = &resolved.channels[idx];
    let per_mu_hz = resolved.rep_rate_hz * ch.eta_signal * ch.eta_idler;

    let spp: f64 = measured.iter().map(|(p, _)| p * p).sum();
    let spr: f64 = measured.iter().map(|(p, r)| p * r).sum();
    if spp == 0.0 {
        return Err(Error::DegenerateCalibration("all pump powers are zero"));
    }
    if measured.iter().all(|&(_, r)| r == 0.0) {
        return Err(Error::DegenerateCalibration("all rates are zero"));
    }
    let k = spr / spp;
    let residuals: Vec<_> = measured.iter().map(|&(p, r)| (p, r, k * p, r - k * p)).collect();
    let rms = (residuals.iter().map(|x| x.3 * x.3).sum::<f64>() / residuals.len() as f64).sqrt();
    Ok(Calibration {
        channel: channel.to_string(),
        rate_slope_hz_per_mw: k,
        brightness_slope_per_mw: k / per_mu_hz,
        residuals,
        rms_residual_hz: rms,
        implied_mu: measured.iter().map(|&(_, r)| r / per_mu_hz).collect(),
    })
}
