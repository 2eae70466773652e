//! Unit conversions and the photon-number sampling primitives shared by the
//! analytic model and the Monte Carlo engine.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Converts an insertion loss in dB into a power transmission probability.
pub fn db_to_transmission(loss_db: f64) -> Result<f64> {
    if loss_db.is_nan() {
        return Err(Error::InvalidParameter {
            name: "loss_db",
            value: loss_db,
            reason: "not a number",
        });
    }
    if loss_db < 0.0 {
        return Err(Error::NegativeLoss(loss_db));
    }
    Ok(10f64.powf(-loss_db / 10.0))
}

/// Dark-count probability inside one pulse-synchronous gate.
pub fn dark_prob_per_gate(dark_rate_hz: f64, rep_rate_hz: f64) -> Result<f64> {
    if !(rep_rate_hz > 0.0) {
        return Err(Error::ZeroRepRate);
    }
    ensure(dark_rate_hz >= 0.0, "dark_rate_hz", dark_rate_hz, "must be non-negative")?;
    Ok((dark_rate_hz / rep_rate_hz).clamp(0.0, 1.0))
}

/// Number of pulse slots a detector stays blind after a click.
///
/// `ceil(deadtime * rep_rate)`, with products that land within rounding
/// noise of an integer taken as that integer (3 us at 76 MHz is 228 slots).
pub fn deadtime_slots(deadtime_us: f64, rep_rate_hz: f64) -> Result<u64> {
    if !(rep_rate_hz > 0.0) {
        return Err(Error::ZeroRepRate);
    }
    ensure(deadtime_us >= 0.0 && deadtime_us.is_finite(), "deadtime_us", deadtime_us, "must be finite and non-negative")?;
    let slots = deadtime_us * 1e-6 * rep_rate_hz;
    let nearest = slots.round();
    if (slots - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        Ok(nearest as u64)
    } else {
        Ok(slots.ceil() as u64)
    }
}

/// Per-pulse probability to a rate in Hz.
pub fn rate_hz(per_pulse: f64, rep_rate_hz: f64) -> f64 {
    per_pulse * rep_rate_hz
}

/// Rate in Hz to a per-pulse probability.
pub fn per_pulse(rate_hz: f64, rep_rate_hz: f64) -> Result<f64> {
    if !(rep_rate_hz > 0.0) {
        return Err(Error::ZeroRepRate);
    }
    Ok(rate_hz / rep_rate_hz)
}

/// Probability that at least one of `n` photons survives a channel of
/// transmission `eta`.
#[inline]
pub fn any_survives(n: u32, eta: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        1.0 - (1.0 - eta).powi(n as i32)
    }
}

/// Photon-pair number statistics of one source per pump pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairStatistics {
    /// Many-mode limit.
    #[default]
    Poisson,
    /// Single-mode Bose-Einstein: P(n) = mu^n / (1 + mu)^(n + 1).
    Thermal,
}

impl PairStatistics {
    /// `E[(1 - eta)^n]`, the probability that none of the pairs' photons
    /// survive a channel of transmission `eta`.
    pub fn vacuum_after_loss(self, mu: f64, eta: f64) -> f64 {
        match self {
            PairStatistics::Poisson => (-mu * eta).exp(),
            PairStatistics::Thermal => 1.0 / (1.0 + mu * eta),
        }
    }
}

const MAX_TABLE_MU: f64 = 1.0e3;
const TAIL_CUTOFF: f64 = 1e-17;

/// Tabulated pair-number distribution sampled by CDF inversion.
///
/// An optional cap lumps all mass at `n >= cap` onto `cap`.
#[derive(Debug, Clone)]
pub struct PairDistribution {
    mu: f64,
    statistics: PairStatistics,
    cdf: Vec<f64>,
}

impl PairDistribution {
    pub fn new(mu: f64, statistics: PairStatistics, cap: Option<u32>) -> Result<Self> {
        ensure(mu >= 0.0 && mu.is_finite(), "mu", mu, "must be finite and non-negative")?;
        ensure(mu <= MAX_TABLE_MU, "mu", mu, "too large for tabulated sampling")?;
        let mut pmf = Vec::new();
        match statistics {
            PairStatistics::Poisson => {
                let ln_mu = mu.ln();
                let mut ln_fact = 0.0;
                for n in 0u32.. {
                    if n > 0 {
                        ln_fact += (n as f64).ln();
                    }
                    let p = if mu == 0.0 {
                        if n == 0 { 1.0 } else { 0.0 }
                    } else {
                        (n as f64 * ln_mu - mu - ln_fact).exp()
                    };
                    pmf.push(p);
                    // Past the mode the tail is below p * (n + 1) / (n + 1 - mu).
                    let next = n as f64 + 1.0;
                    if next > mu && p * next / (next - mu) < TAIL_CUTOFF {
                        break;
                    }
                    if Some(n) == cap {
                        break;
                    }
                }
            }
            PairStatistics::Thermal => {
                let ratio = mu / (1.0 + mu);
                let mut p = 1.0 / (1.0 + mu);
                for n in 0u32.. {
                    pmf.push(p);
                    // remaining tail is ratio^(n+1)
                    if ratio.powi(n as i32 + 1) < TAIL_CUTOFF || Some(n) == cap {
                        break;
                    }
                    p *= ratio;
                }
            }
        }
        if let Some(cap) = cap {
            let cap = cap as usize;
            if pmf.len() == cap + 1 {
                let below: f64 = pmf[..cap].iter().sum();
                pmf[cap] = (1.0 - below).max(0.0);
            }
        }
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for p in pmf {
            acc += p;
            cdf.push(acc);
        }
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        Ok(Self { mu, statistics, cdf })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn statistics(&self) -> PairStatistics {
        self.statistics
    }

    /// Probability mass of `n` pairs under the (possibly capped) table.
    pub fn pmf(&self, n: u32) -> f64 {
        let n = n as usize;
        match n {
            _ if n >= self.cdf.len() => 0.0,
            0 => self.cdf[0],
            _ => self.cdf[n] - self.cdf[n - 1],
        }
    }

    /// Largest representable pair number.
    pub fn max_n(&self) -> u32 {
        (self.cdf.len() - 1) as u32
    }

    /// Probability of at least one pair.
    pub fn p_nonzero(&self) -> f64 {
        1.0 - self.cdf[0]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.invert(rng.random::<f64>())
    }

    /// Sample conditioned on `n >= 1`.
    pub fn sample_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let p0 = self.cdf[0];
        if p0 >= 1.0 {
            return 0;
        }
        let u = p0 + (1.0 - p0) * rng.random::<f64>();
        self.invert(u).max(1)
    }

    fn invert(&self, u: f64) -> u32 {
        // Mass is concentrated at small n, so a linear scan beats bisection.
        self.cdf
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cdf.len() - 1) as u32
    }
}

/// Draws the number of pairs one source emits in one pulse.
pub fn draw_pair_number<R: Rng + ?Sized>(mu: f64, statistics: PairStatistics, rng: &mut R) -> Result<u32> {
    Ok(PairDistribution::new(mu, statistics, None)?.sample(rng))
}

/// Binomial loss: each of `n` photons survives independently with
/// probability `transmission`.
pub fn thin<R: Rng + ?Sized>(n: u32, transmission: f64, rng: &mut R) -> u32 {
    if n == 0 || transmission <= 0.0 {
        return 0;
    }
    if transmission >= 1.0 {
        return n;
    }
    Binomial::new(n as u64, transmission)
        .map(|b| b.sample(rng) as u32)
        .unwrap_or(0)
}

/// Slot clock for a memoryless per-slot Bernoulli process.
///
/// Instead of one uniform per slot it samples the geometric gap to the next
/// success, which is exact and much cheaper for rare events.
#[derive(Debug, Clone)]
pub(crate) struct BernoulliClock {
    gap: Option<Geometric>,
    always: bool,
}

impl BernoulliClock {
    pub(crate) fn new(p: f64) -> Self {
        let p = p.clamp(0.0, 1.0);
        Self {
            gap: if p > 0.0 && p < 1.0 { Geometric::new(p).ok() } else { None },
            always: p >= 1.0,
        }
    }

    /// First success at or after `slot`.
    pub(crate) fn next_from<R: Rng + ?Sized>(&self, slot: u64, rng: &mut R) -> u64 {
        if self.always {
            return slot;
        }
        match &self.gap {
            Some(g) => slot.saturating_add(g.sample(rng)),
            None => u64::MAX,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn db_conversion_examples() {
        assert_eq!(db_to_transmission(0.0).unwrap(), 1.0);
        assert!((db_to_transmission(3.0).unwrap() - 0.5012).abs() < 1e-4);
        // 10^(-1.9), typed in from a calculator.
        assert!((db_to_transmission(19.0).unwrap() - 0.012_589_254_117_941_67).abs() < 1e-15);
        assert_eq!(db_to_transmission(-1.0), Err(Error::NegativeLoss(-1.0)));
    }

    #[test]
    fn dark_probability_examples() {
        assert_eq!(dark_prob_per_gate(0.0, 76e6).unwrap(), 0.0);
        assert!((dark_prob_per_gate(1.8e3, 76e6).unwrap() - 2.368e-5).abs() < 1e-8);
        assert!((dark_prob_per_gate(1e3, 76e6).unwrap() - 1.316e-5).abs() < 1e-8);
        assert_eq!(dark_prob_per_gate(1e9, 76e6).unwrap(), 1.0);
        assert_eq!(dark_prob_per_gate(1.0, 0.0), Err(Error::ZeroRepRate));
    }

    #[test]
    fn deadtime_discretisation() {
        assert_eq!(deadtime_slots(3.0, 76e6).unwrap(), 228);
        assert_eq!(deadtime_slots(0.0, 76e6).unwrap(), 0);
        assert_eq!(deadtime_slots(0.01, 76e6).unwrap(), 1);
    }

    #[test]
    fn rates_round_trip() {
        assert_eq!(rate_hz(0.0, 76e6), 0.0);
        assert!((rate_hz(3.55e-7, 76e6) - 27.0).abs() < 0.1);
        assert!((rate_hz(8.08e-8, 76e6) - 6.14).abs() < 0.01);
        assert!((per_pulse(27.0, 76e6).unwrap() - 3.5526e-7).abs() < 1e-10);
    }

    #[test]
    fn zero_mean_is_vacuum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for stats in [PairStatistics::Poisson, PairStatistics::Thermal] {
            let d = PairDistribution::new(0.0, stats, None).unwrap();
            assert!((0..1000).all(|_| d.sample(&mut rng) == 0));
            assert_eq!(d.p_nonzero(), 0.0);
        }
    }

    #[test]
    fn cap_lumps_the_tail() {
        let d = PairDistribution::new(0.5, PairStatistics::Poisson, Some(3)).unwrap();
        assert_eq!(d.max_n(), 3);
        let tail = 1.0 - (-0.5f64).exp() * (1.0 + 0.5 + 0.125);
        assert!((d.pmf(3) - tail).abs() < 1e-15);
    }

    #[test]
    fn thin_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(thin(5, 1.0, &mut rng), 5);
        assert_eq!(thin(5, 0.0, &mut rng), 0);
        assert_eq!(thin(0, 0.5, &mut rng), 0);
    }

    #[test]
    fn conditional_sampling_never_returns_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = PairDistribution::new(1e-4, PairStatistics::Thermal, None).unwrap();
        assert!((0..10_000).all(|_| d.sample_nonzero(&mut rng) >= 1));
    }

    #[test]
    fn clock_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(BernoulliClock::new(0.0).next_from(5, &mut rng), u64::MAX);
        assert_eq!(BernoulliClock::new(1.0).next_from(5, &mut rng), 5);
    }
}
