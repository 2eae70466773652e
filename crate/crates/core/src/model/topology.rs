use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::prob::db_to_transmission;

/// Fast electro-optic switch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SwitchSpec {
    pub insertion_loss_db: f64,
    /// Pulse slots during which the switch cannot change route again after
    /// a reconfiguration.
    pub reconfig_latency_pulses: u64,
}

/// Which heralding channel wins when several click in the same pulse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoutingPolicy {
    /// Fixed order, highest priority first.
    Priority(Vec<String>),
    /// Uniformly random among the channels that heralded.
    RandomUniform,
}

/// Switch tree combining the signal arms of all channels into one output.
#[derive(Debug, Clone, PartialEq)]
pub struct MuxTopology {
    labels: Vec<String>,
    paths: Vec<Vec<String>>,
    switches: BTreeMap<String, SwitchSpec>,
    policy: RoutingPolicy,
}

/// A node feeding one input port of a switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Channel(usize),
    Switch(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hop {
    pub switch: usize,
    pub input: Node,
}

/// Switch settings a channel needs to reach the output.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub hops: Vec<Hop>,
    /// Product of the switch transmissions along the path.
    pub transmission: f64,
}

/// Index-based form of a validated topology.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledTopology {
    pub routes: Vec<Route>,
    pub switches: Vec<SwitchSpec>,
    /// Channel indices, highest priority first.
    pub priority: Vec<usize>,
    pub random_policy: bool,
}

impl MuxTopology {
    pub fn new(
        labels: Vec<String>,
        paths: Vec<Vec<String>>,
        switches: BTreeMap<String, SwitchSpec>,
        policy: RoutingPolicy,
    ) -> Result<Self> {
        let t = Self { labels, paths, switches, policy };
        t.compile()?;
        Ok(t)
    }

    /// Balanced binary tree, pairing neighbours level by level; an odd node
    /// passes up unswitched. Four channels need three switches in two stages.
    pub fn balanced_tree(labels: &[String], switch: SwitchSpec) -> Self {
        let mut paths: Vec<Vec<String>> = vec![Vec::new(); labels.len()];
        let mut switches = BTreeMap::new();
        let mut level: Vec<Vec<usize>> = (0..labels.len()).map(|i| vec![i]).collect();
        let mut next_id = 1;
        while level.len() > 1 {
            let mut up = Vec::new();
            for pair in level.chunks(2) {
                if pair.len() == 1 {
                    up.push(pair[0].clone());
                    continue;
                }
                let id = format!("s{next_id}");
                next_id += 1;
                let merged: Vec<usize> = pair.concat();
                for &ch in &merged {
                    paths[ch].push(id.clone());
                }
                switches.insert(id, switch);
                up.push(merged);
            }
            level = up;
        }
        Self {
            labels: labels.to_vec(),
            paths,
            switches,
            policy: RoutingPolicy::Priority(labels.to_vec()),
        }
    }

    pub fn with_policy(mut self, policy: RoutingPolicy) -> Result<Self> {
        self.policy = policy;
        self.compile()?;
        Ok(self)
    }

    /// Every switch set to the same insertion loss and latency.
    pub fn with_uniform_switches(mut self, switch: SwitchSpec) -> Self {
        for s in self.switches.values_mut() {
            *s = switch;
        }
        self
    }

    pub fn channel_labels(&self) -> &[String] {
        &self.labels
    }

    pub fn num_channels(&self) -> usize {
        self.labels.len()
    }

    pub fn paths(&self) -> &[Vec<String>] {
        &self.paths
    }

    pub fn switches(&self) -> &BTreeMap<String, SwitchSpec> {
        &self.switches
    }

    pub fn policy(&self) -> &RoutingPolicy {
        &self.policy
    }

    /// Validates the tree and resolves it to indices.
    pub fn compile(&self) -> Result<CompiledTopology> {
        let n = self.labels.len();
        if n == 0 {
            return Err(Error::EmptyChannels);
        }
        if n > 64 {
            return Err(Error::Topology("at most 64 channels are supported".into()));
        }
        let mut by_label = HashMap::new();
        for (i, l) in self.labels.iter().enumerate() {
            if by_label.insert(l.as_str(), i).is_some() {
                return Err(Error::Topology(format!("duplicate channel label `{l}`")));
            }
        }
        if self.paths.len() != n {
            return Err(Error::Topology(format!("{} channels but {} switch paths", n, self.paths.len())));
        }
        let ids: Vec<&String> = self.switches.keys().collect();
        let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        for (id, sw) in &self.switches {
            if sw.insertion_loss_db < 0.0 || sw.insertion_loss_db.is_nan() {
                return Err(Error::Topology(format!("switch `{id}` has negative insertion loss")));
            }
        }

        // successor of each switch: Some(next) or None for the root
        let mut successor: Vec<Option<Option<usize>>> = vec![None; ids.len()];
        let mut used = vec![false; ids.len()];
        let mut root: Option<Option<usize>> = None;
        let mut routes = Vec::with_capacity(n);
        for (ch, path) in self.paths.iter().enumerate() {
            if path.is_empty() && n > 1 {
                return Err(Error::Topology(format!(
                    "channel `{}` has no switch path but {} channels share the output",
                    self.labels[ch], n
                )));
            }
            let mut hops = Vec::with_capacity(path.len());
            let mut transmission = 1.0;
            let mut prev = Node::Channel(ch);
            for (k, id) in path.iter().enumerate() {
                let s = *index
                    .get(id.as_str())
                    .ok_or_else(|| Error::Topology(format!("unknown switch `{id}`")))?;
                if hops.iter().any(|h: &Hop| h.switch == s) {
                    return Err(Error::Topology(format!("switch `{id}` appears twice on one path")));
                }
                let next = path.get(k + 1).map(|nid| index.get(nid.as_str()).copied());
                let next = match next {
                    Some(None) => return Err(Error::Topology(format!("unknown switch `{}`", path[k + 1]))),
                    Some(Some(j)) => Some(j),
                    None => None,
                };
                match successor[s] {
                    None => successor[s] = Some(next),
                    Some(existing) if existing != next => {
                        return Err(Error::Topology(format!("switch `{id}` feeds more than one place")));
                    }
                    _ => {}
                }
                used[s] = true;
                transmission *= db_to_transmission(self.switches[id].insertion_loss_db)?;
                hops.push(Hop { switch: s, input: prev });
                prev = Node::Switch(s);
            }
            let last = path.last().map(|id| index[id.as_str()]);
            match root {
                None => root = Some(last),
                Some(r) if r != last => {
                    return Err(Error::Topology("paths do not terminate at a single output".into()));
                }
                _ => {}
            }
            routes.push(Route { hops, transmission });
        }
        if let Some(pos) = used.iter().position(|u| !u) {
            return Err(Error::Topology(format!("switch `{}` is not on any path", ids[pos])));
        }

        let (priority, random_policy) = match &self.policy {
            RoutingPolicy::RandomUniform => ((0..n).collect(), true),
            RoutingPolicy::Priority(order) => {
                if order.len() != n {
                    return Err(Error::Topology("priority list must name every channel exactly once".into()));
                }
                let mut seen = vec![false; n];
                let mut out = Vec::with_capacity(n);
                for l in order {
                    let i = *by_label
                        .get(l.as_str())
                        .ok_or_else(|| Error::Topology(format!("priority names unknown channel `{l}`")))?;
                    if std::mem::replace(&mut seen[i], true) {
                        return Err(Error::Topology(format!("priority lists `{l}` twice")));
                    }
                    out.push(i);
                }
                (out, false)
            }
        };

        Ok(CompiledTopology {
            routes,
            switches: self.switches.values().copied().collect(),
            priority,
            random_policy,
        })
    }

    /// Sub-tree feeding only the channels at `keep` (sorted indices).
    pub(crate) fn restricted(&self, keep: &[usize]) -> Result<Self> {
        let labels: Vec<String> = keep.iter().map(|&i| self.labels[i].clone()).collect();
        let paths: Vec<Vec<String>> = keep.iter().map(|&i| self.paths[i].clone()).collect();
        let switches = self
            .switches
            .iter()
            .filter(|(id, _)| paths.iter().any(|p| p.contains(id)))
            .map(|(id, s)| (id.clone(), *s))
            .collect();
        let policy = match &self.policy {
            RoutingPolicy::RandomUniform => RoutingPolicy::RandomUniform,
            RoutingPolicy::Priority(order) => {
                RoutingPolicy::Priority(order.iter().filter(|l| labels.contains(l)).cloned().collect())
            }
        };
        let t = Self { labels, paths, switches, policy };
        t.compile()?;
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("ch{i}")).collect()
    }

    #[test]
    fn four_channel_tree_has_three_switches_in_two_stages() {
        let t = MuxTopology::balanced_tree(&labels(4), SwitchSpec { insertion_loss_db: 1.0, reconfig_latency_pulses: 0 });
        assert_eq!(t.switches().len(), 3);
        assert!(t.paths().iter().all(|p| p.len() == 2));
        let c = t.compile().unwrap();
        let two_db = 10f64.powf(-0.2);
        assert!(c.routes.iter().all(|r| (r.transmission - two_db).abs() < 1e-12));
    }

    #[test]
    fn two_channels_use_one_switch_and_three_leave_one_short_path() {
        let t2 = MuxTopology::balanced_tree(&labels(2), SwitchSpec::default());
        assert_eq!(t2.switches().len(), 1);
        let t3 = MuxTopology::balanced_tree(&labels(3), SwitchSpec::default());
        let lens: Vec<usize> = t3.paths().iter().map(Vec::len).collect();
        assert_eq!(lens, vec![2, 2, 1]);
        let t1 = MuxTopology::balanced_tree(&labels(1), SwitchSpec::default());
        assert!(t1.paths()[0].is_empty());
        assert!(t1.compile().is_ok());
    }

    #[test]
    fn rejects_forest_and_bad_policy() {
        let mut sw = BTreeMap::new();
        sw.insert("a".to_string(), SwitchSpec::default());
        sw.insert("b".to_string(), SwitchSpec::default());
        let forest = MuxTopology::new(
            labels(2),
            vec![vec!["a".into()], vec!["b".into()]],
            sw.clone(),
            RoutingPolicy::Priority(labels(2)),
        );
        assert!(matches!(forest, Err(Error::Topology(_))));

        let bad_policy = MuxTopology::new(
            labels(2),
            vec![vec!["a".into(), "b".into()], vec!["b".into()]],
            sw.clone(),
            RoutingPolicy::Priority(vec!["ch1".into(), "ch1".into()]),
        );
        assert!(bad_policy.is_err());

        let ok = MuxTopology::new(
            labels(2),
            vec![vec!["a".into(), "b".into()], vec!["b".into()]],
            sw,
            RoutingPolicy::Priority(vec!["ch2".into(), "ch1".into()]),
        )
        .unwrap();
        assert_eq!(ok.compile().unwrap().priority, vec![1, 0]);
    }

    #[test]
    fn rejects_unused_and_unknown_switches() {
        let mut sw = BTreeMap::new();
        sw.insert("a".to_string(), SwitchSpec::default());
        sw.insert("spare".to_string(), SwitchSpec::default());
        let t = MuxTopology::new(labels(2), vec![vec!["a".into()], vec!["a".into()]], sw, RoutingPolicy::RandomUniform);
        assert!(t.is_err());
        let t = MuxTopology::new(labels(1), vec![vec!["x".into()]], BTreeMap::new(), RoutingPolicy::RandomUniform);
        assert!(t.is_err());
    }

    #[test]
    fn restriction_prunes_switches_and_policy() {
        let t = MuxTopology::balanced_tree(&labels(4), SwitchSpec::default());
        let r = t.restricted(&[0, 1]).unwrap();
        assert_eq!(r.switches().len(), 2);
        assert_eq!(r.policy(), &RoutingPolicy::Priority(labels(2)));
    }
}
