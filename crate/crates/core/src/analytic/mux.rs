use super::AnalyticChannel;
use crate::error::{ensure, Error, Result};
use crate::model::MuxTopology;

/// First-order prediction for N channels sharing one output.
#[derive(Debug, Clone, PartialEq)]
pub struct MuxPrediction {
    /// Probability that some herald is routed in a pulse.
    pub herald_prob_per_pulse: f64,
    /// True coincidences per pulse at the output.
    pub coincidence_per_pulse: f64,
    pub accidental_per_pulse: f64,
    pub car: f64,
    /// Probability that each channel (channel order) is the one routed.
    pub selection_probs: Vec<f64>,
}

/// Multiplexed rate and CAR.
///
/// Each channel heralds with `h = c/eta_s + d_i` (first order in
/// `mu * eta_i`). A channel that heralds is routed with probability `q`,
/// which under a priority policy is the chance that no higher-priority
/// channel heralded. It then contributes `q * c * T` true coincidences
/// (`T` the switch transmission of its path) and `q * h * (c T / eta_i + d_s)`
/// accidentals, i.e. its herald rate times the signal singles seen through
/// its route.
pub fn mux_prediction(channels: &[AnalyticChannel], topology: &MuxTopology) -> Result<MuxPrediction> {
    if channels.is_empty() {
        return Err(Error::EmptyChannels);
    }
    let compiled = topology.compile()?;
    if compiled.routes.len() != channels.len() {
        return Err(Error::Topology(format!(
            "{} analytic channels for a {}-channel topology",
            channels.len(),
            compiled.routes.len()
        )));
    }
    for ch in channels {
        ensure(ch.c >= 0.0 && ch.c.is_finite(), "c", ch.c, "must be finite and non-negative")?;
        ensure(ch.eta_s > 0.0 && ch.eta_s <= 1.0, "eta_s", ch.eta_s, "must lie in (0, 1]")?;
        ensure(ch.eta_i > 0.0 && ch.eta_i <= 1.0, "eta_i", ch.eta_i, "must lie in (0, 1]")?;
        ensure((0.0..=1.0).contains(&ch.d_i), "d_i", ch.d_i, "must lie in [0, 1]")?;
        ensure((0.0..=1.0).contains(&ch.d_s), "d_s", ch.d_s, "must lie in [0, 1]")?;
    }

    let herald: Vec<f64> = channels.iter().map(|ch| (ch.c / ch.eta_s + ch.d_i).min(1.0)).collect();
    let routed_given_herald = if compiled.random_policy {
        random_routing(&herald)
    } else {
        let mut q = vec![0.0; channels.len()];
        let mut none_before = 1.0;
        for &i in &compiled.priority {
            q[i] = none_before;
            none_before *= 1.0 - herald[i];
        }
        q
    };

    let mut coincidence = 0.0;
    let mut accidental = 0.0;
    let mut selection_probs = Vec::with_capacity(channels.len());
    for (i, ch) in channels.iter().enumerate() {
        let t = compiled.routes[i].transmission;
        let q = routed_given_herald[i];
        let s = herald[i] * q;
        coincidence += q * ch.c * t;
        accidental += s * (ch.c * t / ch.eta_i + ch.d_s);
        selection_probs.push(s);
    }
    if accidental == 0.0 {
        return Err(Error::UndefinedCar);
    }
    Ok(MuxPrediction {
        herald_prob_per_pulse: selection_probs.iter().sum(),
        coincidence_per_pulse: coincidence,
        accidental_per_pulse: accidental,
        car: coincidence / accidental,
        selection_probs,
    })
}

/// `P(routed | heralded)` when the winner is drawn uniformly among the
/// channels that heralded: `E[1 / (1 + K)]` with `K` the number of other
/// heralds, from the Poisson-binomial distribution of `K`.
fn random_routing(herald: &[f64]) -> Vec<f64> {
    (0..herald.len())
        .map(|i| {
            let mut dist = vec![1.0];
            for (j, &h) in herald.iter().enumerate() {
                if j == i {
                    continue;
                }
                let mut next = vec![0.0; dist.len() + 1];
                for (k, &p) in dist.iter().enumerate() {
                    next[k] += p * (1.0 - h);
                    next[k + 1] += p * h;
                }
                dist = next;
            }
            dist.iter().enumerate().map(|(k, p)| p / (k as f64 + 1.0)).sum()
        })
        .collect()
}
