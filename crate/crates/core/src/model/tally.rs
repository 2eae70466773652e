use crate::error::{Error, Result};

/// Counters for one heralding channel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChannelTally {
    pub herald_clicks: u64,
    /// Heralds that won arbitration and were routed to the output.
    pub selected: u64,
    /// Heralds that won arbitration but found a switch still reconfiguring.
    pub unrouted: u64,
    pub coincidences: u64,
    pub accidentals: u64,
}

/// Raw counts of a Monte Carlo run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountTally {
    pub pulses: u64,
    pub channels: Vec<ChannelTally>,
    pub coincidences: u64,
    /// Summed over all replayed windows.
    pub accidentals_shifted: u64,
    pub accidental_windows: u32,
    /// Heralded-detector clicks in a routed gate with no photon detected.
    pub heralded_detector_darks: u64,
}

fn add(a: u64, b: u64) -> Result<u64> {
    a.checked_add(b).ok_or(Error::CounterOverflow)
}

impl CountTally {
    pub fn new(num_channels: usize, accidental_windows: u32) -> Self {
        Self {
            channels: vec![ChannelTally::default(); num_channels],
            accidental_windows,
            ..Default::default()
        }
    }

    pub fn herald_clicks(&self) -> u64 {
        self.channels.iter().map(|c| c.herald_clicks).sum()
    }

    pub fn selected(&self) -> u64 {
        self.channels.iter().map(|c| c.selected).sum()
    }

    /// Field-wise sum. Associative and commutative, so shard order is irrelevant.
    pub fn merge(&mut self, other: &CountTally) -> Result<()> {
        if self.channels.len() != other.channels.len() || self.accidental_windows != other.accidental_windows {
            return Err(Error::Validation("cannot merge tallies of different scenarios".into()));
        }
        self.pulses = add(self.pulses, other.pulses)?;
        self.coincidences = add(self.coincidences, other.coincidences)?;
        self.accidentals_shifted = add(self.accidentals_shifted, other.accidentals_shifted)?;
        self.heralded_detector_darks = add(self.heralded_detector_darks, other.heralded_detector_darks)?;
        for (a, b) in self.channels.iter_mut().zip(&other.channels) {
            a.herald_clicks = add(a.herald_clicks, b.herald_clicks)?;
            a.selected = add(a.selected, b.selected)?;
            a.unrouted = add(a.unrouted, b.unrouted)?;
            a.coincidences = add(a.coincidences, b.coincidences)?;
            a.accidentals = add(a.accidentals, b.accidentals)?;
        }
        Ok(())
    }

    /// Checks the counting invariants that must hold for any run.
    pub fn check_invariants(&self) -> Result<()> {
        for c in &self.channels {
            if c.selected + c.unrouted > c.herald_clicks || c.coincidences > c.selected {
                return Err(Error::Validation("tally violates selected <= herald_clicks".into()));
            }
        }
        if self.coincidences > self.selected() {
            return Err(Error::Validation("tally has more coincidences than routed heralds".into()));
        }
        Ok(())
    }
}
