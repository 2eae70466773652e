use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::Result;
use crate::model::{CountTally, Node, ResolvedScenario};
use crate::prob::{any_survives, BernoulliClock, PairDistribution};

/// What happened in a pulse slot where at least one herald clicked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotOutcome {
    pub slot: u64,
    /// Bit `i` set when channel `i` heralded.
    pub herald_mask: u64,
    /// Channel that won arbitration.
    pub selected: usize,
    /// False when a switch on the winner's path was still reconfiguring.
    pub routed: bool,
    pub coincidence: bool,
    pub accidentals: u32,
}

/// Random stream of shard `shard` for a given seed.
pub(crate) fn shard_rng(seed: u64, shard: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard as u64);
    rng
}

struct ChannelState {
    pairs: PairDistribution,
    pair_clock: BernoulliClock,
    dark_clock: BernoulliClock,
    next_pair: u64,
    next_dark: u64,
    dead_until: u64,
    /// Recent slots with at least one pair: (slot, pairs).
    history: VecDeque<(u64, u32)>,
}

#[derive(Clone, Copy)]
struct SwitchState {
    current: Option<Node>,
    locked_until: u64,
}

/// Simulates pulse slots `start..end` with stream `shard`.
///
/// Only slots in which some pair or herald dark count occurs are visited;
/// the gaps between them are drawn geometrically. Deadtime and switch locks
/// are slot-indexed, so skipping quiet slots leaves them exact.
pub(crate) fn run_range<O: FnMut(&SlotOutcome)>(
    sc: &ResolvedScenario,
    shard: u32,
    start: u64,
    end: u64,
    observer: &mut O,
) -> Result<CountTally> {
    let n = sc.channels.len();
    let windows = sc.mc.accidental_windows as u64;
    let mut rng = shard_rng(sc.mc.seed, shard);
    let mut tally = CountTally::new(n, sc.mc.accidental_windows);
    tally.pulses = end - start;

    let mut chans = sc
        .channels
        .iter()
        .map(|ch| {
            let pairs = PairDistribution::new(ch.mu, sc.statistics, sc.mc.photon_cap)?;
            let pair_clock = BernoulliClock::new(pairs.p_nonzero());
            let dark_clock = BernoulliClock::new(ch.d_idler);
            Ok(ChannelState {
                next_pair: pair_clock.next_from(start, &mut rng),
                next_dark: dark_clock.next_from(start, &mut rng),
                pairs,
                pair_clock,
                dark_clock,
                dead_until: 0,
                history: VecDeque::new(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut switches = vec![SwitchState { current: None, locked_until: 0 }; sc.topology.switches.len()];
    let mut heralded_dead_until = 0u64;
    let mut pairs_now = vec![0u32; n];

    loop {
        let t = chans.iter().map(|c| c.next_pair.min(c.next_dark)).min().unwrap_or(u64::MAX);
        if t >= end {
            break;
        }

        let mut mask = 0u64;
        for (i, (ch, spec)) in chans.iter_mut().zip(&sc.channels).enumerate() {
            let pairs = if ch.next_pair == t {
                let k = ch.pairs.sample_nonzero(&mut rng);
                ch.next_pair = ch.pair_clock.next_from(t + 1, &mut rng);
                while ch.history.front().is_some_and(|&(s, _)| s + windows < t) {
                    ch.history.pop_front();
                }
                ch.history.push_back((t, k));
                k
            } else {
                0
            };
            let dark = if ch.next_dark == t {
                ch.next_dark = ch.dark_clock.next_from(t + 1, &mut rng);
                true
            } else {
                false
            };
            pairs_now[i] = pairs;
            if t < ch.dead_until || (pairs == 0 && !dark) {
                continue;
            }
            let photon = pairs > 0 && rng.random::<f64>() < any_survives(pairs, spec.eta_idler);
            if photon || dark {
                mask |= 1 << i;
                tally.channels[i].herald_clicks += 1;
                ch.dead_until = t.saturating_add(1 + spec.herald_deadtime_slots);
            }
        }
        if mask == 0 {
            continue;
        }

        let sel = if sc.topology.random_policy {
            let pick = rng.random_range(0..mask.count_ones());
            (0..n).filter(|i| mask >> i & 1 == 1).nth(pick as usize).unwrap_or(0)
        } else {
            sc.topology.priority.iter().copied().find(|i| mask >> i & 1 == 1).unwrap_or(0)
        };
        let mut outcome = SlotOutcome {
            slot: t,
            herald_mask: mask,
            selected: sel,
            routed: false,
            coincidence: false,
            accidentals: 0,
        };

        // A switch already set for this route passes even while locked.
        let route = &sc.topology.routes[sel];
        let blocked = route.hops.iter().any(|h| {
            let s = &switches[h.switch];
            s.current != Some(h.input) && t < s.locked_until
        });
        if blocked {
            tally.channels[sel].unrouted += 1;
            observer(&outcome);
            continue;
        }
        for h in &route.hops {
            let s = &mut switches[h.switch];
            if s.current != Some(h.input) {
                s.current = Some(h.input);
                s.locked_until = t.saturating_add(sc.topology.switches[h.switch].reconfig_latency_pulses);
            }
        }
        outcome.routed = true;
        tally.channels[sel].selected += 1;

        let spec = &sc.channels[sel];
        let tau = spec.signal_transmission();
        let d_s = spec.d_signal;
        if t >= heralded_dead_until {
            let k = pairs_now[sel];
            let photon = k > 0 && rng.random::<f64>() < any_survives(k, tau);
            let dark = d_s > 0.0 && rng.random::<f64>() < d_s;
            if photon || dark {
                outcome.coincidence = true;
                tally.coincidences += 1;
                tally.channels[sel].coincidences += 1;
                if !photon {
                    tally.heralded_detector_darks += 1;
                }
                heralded_dead_until = t.saturating_add(1 + sc.heralded_deadtime_slots);
            }
        }

        // Accidentals: the same gate replayed against the signal light of the
        // previous `windows` slots of the routed channel.
        let mut acc = 0u64;
        let mut with_pairs = 0u64;
        for &(s, k) in &chans[sel].history {
            if s < t && s + windows >= t {
                with_pairs += 1;
                let p = 1.0 - (1.0 - d_s) * (1.0 - any_survives(k, tau));
                if rng.random::<f64>() < p {
                    acc += 1;
                }
            }
        }
        let empty = windows - with_pairs;
        if empty > 0 && d_s > 0.0 {
            acc += Binomial::new(empty, d_s).map(|b| b.sample(&mut rng)).unwrap_or(0);
        }
        tally.accidentals_shifted += acc;
        tally.channels[sel].accidentals += acc;
        outcome.accidentals = acc as u32;
        observer(&outcome);
    }
    Ok(tally)
}
