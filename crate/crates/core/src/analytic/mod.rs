//! Closed-form predictions for single and multiplexed heralded sources.
//!
//! All probabilities are per pump pulse. For one channel with true
//! coincidence probability `c`, net efficiencies `eta_s`, `eta_i` and dark
//! probabilities `d_i` (heralding arm) and `d_s` (heralded arm),
//!
//! ```text
//! CAR = c / ((c/eta_s + d_i) * (c/eta_i + d_s))
//! ```
//!
//! The two factors of the denominator are the herald and signal singles
//! probabilities; their product is the accidental coincidence probability.

mod mux;
mod spectral;

pub use mux::{mux_prediction, MuxPrediction};
pub use spectral::{central_wavelength, spectral_overlap_factor};

pub use crate::prob::{per_pulse, rate_hz};

use crate::error::{ensure, Error, Result};

/// Inputs of the single-channel CAR formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticChannel {
    /// True coincidence probability per pulse.
    pub c: f64,
    pub eta_s: f64,
    pub eta_i: f64,
    pub d_i: f64,
    pub d_s: f64,
}

impl AnalyticChannel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c", self.c), ("eta_s", self.eta_s), ("eta_i", self.eta_i), ("d_i", self.d_i), ("d_s", self.d_s)] {
            ensure((0.0..=1.0).contains(&v), name, v, "must lie in [0, 1]")?;
        }
        ensure(self.c <= self.eta_s * self.eta_i, "c", self.c, "exceeds eta_s * eta_i")?;
        Ok(())
    }

    pub fn car(&self) -> Result<f64> {
        car(self.c, self.eta_s, self.eta_i, self.d_i, self.d_s)
    }

    /// Same channel with the pair rate multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self { c: self.c * k, ..*self }
    }
}

fn check_efficiency(name: &'static str, eta: f64) -> Result<()> {
    ensure(eta > 0.0 && eta <= 1.0, name, eta, "must lie in (0, 1]")
}

fn check_dark(name: &'static str, d: f64) -> Result<()> {
    ensure((0.0..=1.0).contains(&d), name, d, "must lie in [0, 1]")
}

/// Coincidence-to-accidental ratio of one channel.
pub fn car(c: f64, eta_s: f64, eta_i: f64, d_i: f64, d_s: f64) -> Result<f64> {
    ensure(c >= 0.0 && c.is_finite(), "c", c, "must be finite and non-negative")?;
    check_efficiency("eta_s", eta_s)?;
    check_efficiency("eta_i", eta_i)?;
    check_dark("d_i", d_i)?;
    check_dark("d_s", d_s)?;
    if c == 0.0 {
        return if d_i > 0.0 && d_s > 0.0 { Ok(0.0) } else { Err(Error::UndefinedCar) };
    }
    Ok(c / ((c / eta_s + d_i) * (c / eta_i + d_s)))
}

/// Coincidence probability maximising CAR, and that maximum.
///
/// `1/CAR = c/(eta_s eta_i) + d_s/eta_s + d_i/eta_i + d_i d_s / c`, so the
/// optimum sits where the first and last terms balance.
pub fn optimal_operating_point(eta_s: f64, eta_i: f64, d_i: f64, d_s: f64) -> Result<(f64, f64)> {
    check_efficiency("eta_s", eta_s)?;
    check_efficiency("eta_i", eta_i)?;
    check_dark("d_i", d_i)?;
    check_dark("d_s", d_s)?;
    if d_i == 0.0 || d_s == 0.0 {
        return Err(Error::NoInteriorMaximum);
    }
    let c_star = (eta_s * eta_i * d_i * d_s).sqrt();
    Ok((c_star, car(c_star, eta_s, eta_i, d_i, d_s)?))
}

const FIT_DS_MIN: f64 = 1e-12;
const FIT_DS_MAX: f64 = 1.0;

/// Heralded-arm dark probability that makes the maximum CAR equal
/// `car_max_target`.
///
/// The maximum CAR falls strictly as `d_s` grows, so bisection (in log
/// `d_s`) on `[1e-12, 1]` has a unique root.
pub fn fit_dark_signal(car_max_target: f64, eta_s: f64, eta_i: f64, d_i: f64) -> Result<f64> {
    ensure(car_max_target > 1.0 && car_max_target.is_finite(), "car_max_target", car_max_target, "must exceed 1")?;
    ensure(d_i > 0.0, "d_i", d_i, "must be positive for a finite maximum")?;
    let car_max = |d_s: f64| optimal_operating_point(eta_s, eta_i, d_i, d_s).map(|(_, m)| m);
    let upper = car_max(FIT_DS_MIN)?;
    let lower = car_max(FIT_DS_MAX)?;
    if !(car_max_target < upper && car_max_target > lower) {
        return Err(Error::UnreachableCar { target: car_max_target, lower, upper });
    }
    let (mut lo, mut hi) = (FIT_DS_MIN.ln(), FIT_DS_MAX.ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let m = car_max(mid.exp())?;
        if m > car_max_target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// The two coincidence probabilities `(low, high)` at which CAR equals
/// `target`, or `None` when the maximum CAR is below it.
///
/// Setting the CAR expression equal to `target` gives a quadratic in `c`.
pub fn coincidence_at_car(target: f64, eta_s: f64, eta_i: f64, d_i: f64, d_s: f64) -> Result<Option<(f64, f64)>> {
    ensure(target > 0.0 && target.is_finite(), "target", target, "must be positive and finite")?;
    check_efficiency("eta_s", eta_s)?;
    check_efficiency("eta_i", eta_i)?;
    check_dark("d_i", d_i)?;
    check_dark("d_s", d_s)?;
    let a = target / (eta_s * eta_i);
    let b = target * (d_s / eta_s + d_i / eta_i) - 1.0;
    let c = target * d_i * d_s;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 || b >= 0.0 {
        return Ok(None);
    }
    // Stable form: the product of the roots is c / a.
    let high = (-b + disc.sqrt()) / (2.0 * a);
    let low = if high > 0.0 { c / (a * high) } else { 0.0 };
    Ok(Some((low, high)))
}

/// True coincidence probability per pulse of a source emitting `mu` pairs.
pub fn coincidence_per_pulse(mu: f64, eta_s: f64, eta_i: f64) -> Result<f64> {
    ensure(mu >= 0.0 && mu.is_finite(), "mu", mu, "must be finite and non-negative")?;
    ensure((0.0..=1.0).contains(&eta_s), "eta_s", eta_s, "must lie in [0, 1]")?;
    ensure((0.0..=1.0).contains(&eta_i), "eta_i", eta_i, "must lie in [0, 1]")?;
    Ok(mu * eta_s * eta_i)
}
