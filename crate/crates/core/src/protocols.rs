//! Round and slot schedules for the four protocols.
//!
//! A schedule only says who transmits which kind of packet when. The packets
//! themselves are resolved by the engine from each node's buffers.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::topology::{
    multicast_partition, partition, CycleTopology, PhasePartition, ProtocolParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// Every message travels clockwise around the whole ring.
    Circular,
    /// XOR relaying of both neighbours' previous packets (all-to-all).
    NcMulticast,
    /// Shortest-path routing of the gaming traffic.
    Routing,
    /// Routing with XOR-combined forwarding at the two M_0 carriers.
    NcGaming,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [
        Protocol::Circular,
        Protocol::NcMulticast,
        Protocol::Routing,
        Protocol::NcGaming,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Circular => "circular",
            Protocol::NcMulticast => "nc-multicast",
            Protocol::Routing => "routing",
            Protocol::NcGaming => "nc-gaming",
        }
    }

    pub fn is_gaming(self) -> bool {
        matches!(self, Protocol::Routing | Protocol::NcGaming)
    }

    /// Builds the schedule for `topology` with the partition each protocol
    /// expects.
    pub fn schedule(self, topology: &CycleTopology) -> Schedule {
        match self {
            Protocol::Circular => circular_schedule(topology, &multicast_partition(topology)),
            Protocol::NcMulticast => {
                nc_multicast_schedule(topology, &multicast_partition(topology))
            }
            Protocol::Routing => {
                routing_schedule(topology, &partition(topology), &topology.params())
            }
            Protocol::NcGaming => {
                nc_gaming_schedule(topology, &partition(topology), &topology.params())
            }
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown protocol '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Rule {
    /// Send the node's own message.
    Own,
    /// Relay the packet buffered from the right neighbour.
    ForwardFromRight,
    /// Relay the packet buffered from the left neighbour.
    ForwardFromLeft,
    /// Send the XOR of both buffered packets.
    XorBoth,
    /// Send the server message M_0.
    SendM0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TransmitIntent {
    pub node: usize,
    pub rule: Rule,
}

/// Which delivered packets a receiver accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reception {
    /// Broadcasts from either neighbour are taken.
    Both,
    /// Only packets from the left neighbour are taken. The clockwise relay
    /// addresses each packet to the next node, so the node behind the sender
    /// hears it but discards it.
    LeftOnly,
}

/// Intents of one slot, sorted by node.
pub type Slot = Vec<TransmitIntent>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub protocol: Protocol,
    pub n: usize,
    pub reception: Reception,
    pub rounds: Vec<Vec<Slot>>,
}

impl Schedule {
    pub fn intent_count(&self) -> usize {
        self.rounds.iter().flatten().map(Vec::len).sum()
    }
}

fn relay_rounds(partition: &PhasePartition, rounds: usize, relay: Rule) -> Vec<Vec<Slot>> {
    (0..rounds)
        .map(|t| {
            let rule = if t == 0 { Rule::Own } else { relay };
            partition
                .subsets()
                .iter()
                .map(|s| {
                    s.iter()
                        .map(|&node| TransmitIntent { node, rule })
                        .collect()
                })
                .collect()
        })
        .collect()
}

pub fn circular_schedule(topology: &CycleTopology, partition: &PhasePartition) -> Schedule {
    Schedule {
        protocol: Protocol::Circular,
        n: topology.n(),
        reception: Reception::LeftOnly,
        rounds: relay_rounds(partition, topology.n(), Rule::ForwardFromLeft),
    }
}

pub fn nc_multicast_schedule(topology: &CycleTopology, partition: &PhasePartition) -> Schedule {
    Schedule {
        protocol: Protocol::NcMulticast,
        n: topology.n(),
        reception: Reception::Both,
        rounds: relay_rounds(partition, topology.params().radius + 1, Rule::XorBoth),
    }
}

pub fn routing_schedule(
    topology: &CycleTopology,
    partition: &PhasePartition,
    params: &ProtocolParams,
) -> Schedule {
    gaming_schedule(topology, partition, params, false)
}

pub fn nc_gaming_schedule(
    topology: &CycleTopology,
    partition: &PhasePartition,
    params: &ProtocolParams,
) -> Schedule {
    gaming_schedule(topology, partition, params, true)
}

/// Who carries what in the gaming protocols.
///
/// Messages `M_1..M_split` travel left towards `V_1` and `M_{split+1}..M_n`
/// travel right towards `V_n`. For odd `n` the far message `M_D` is also
/// relayed one hop the other way in round 1 (`spill`), which is what lets
/// the last round carry a single M_0 sender.
struct GamingPlan {
    split: usize,
    spill: bool,
    last_m0_both: bool,
}

impl GamingPlan {
    fn new(n: usize, params: &ProtocolParams, coded: bool) -> Self {
        let radius = params.radius;
        let odd = n % 2 == 1;
        let r = (n + 1) % 3;
        // With r = 2 and odd n, V_D shares a slot pair with V_{D-1} in round 0
        // and V_{D-1} is busy when M_D is broadcast, so M_D goes right.
        let split = if odd && r == 2 { radius - 1 } else { radius };
        let spill = odd && r != 2 && (!coded || radius % 2 == 1 || params.dual_rounds == 1);
        let last_m0_both = !odd || (r == 2 && (!coded || radius % 2 == 1));
        Self {
            split,
            spill,
            last_m0_both,
        }
    }
}

fn gaming_schedule(
    topology: &CycleTopology,
    partition: &PhasePartition,
    params: &ProtocolParams,
    coded: bool,
) -> Schedule {
    let n = topology.n();
    let radius = params.radius;
    let plan = GamingPlan::new(n, params, coded);
    let mut rounds = relay_rounds(partition, 1, Rule::Own);

    for t in 1..radius {
        let mut duties: BTreeMap<usize, Vec<Rule>> = BTreeMap::new();
        for j in (1..=n).filter(|j| j + t <= plan.split) {
            duties.entry(j).or_default().push(Rule::ForwardFromRight);
        }
        for j in (1..=n).filter(|j| *j >= plan.split + 1 + t) {
            duties.entry(j).or_default().push(Rule::ForwardFromLeft);
        }
        if plan.spill && t == 1 {
            duties
                .entry(radius + 1)
                .or_default()
                .push(Rule::ForwardFromLeft);
        }
        let m0_senders = if t + 1 == radius && !plan.last_m0_both {
            vec![t]
        } else {
            vec![t, n + 1 - t]
        };
        for node in m0_senders {
            let rules = duties.entry(node).or_default();
            if !rules.contains(&Rule::SendM0) {
                rules.push(Rule::SendM0);
            }
        }

        let dual = t <= params.dual_rounds;
        let four_phase = dual && !coded;
        let mut slots: Vec<Slot> = vec![Vec::new(); if four_phase { 4 } else { 3 }];
        let mut late: Vec<(TransmitIntent, usize)> = Vec::new();
        for (node, mut rules) in duties {
            if coded && dual && rules.contains(&Rule::SendM0) && rules.len() > 1 {
                rules = vec![Rule::XorBoth];
            }
            let subset = partition
                .subset_of(node)
                .expect("partition covers the ring");
            let exempt = partition.exempt() == Some(subset);
            for (k, rule) in rules.into_iter().enumerate() {
                let intent = TransmitIntent { node, rule };
                if four_phase && rule == Rule::SendM0 {
                    slots[3].push(intent);
                } else if exempt || k > 0 {
                    late.push((intent, if four_phase { 4 } else { 3 }));
                } else {
                    slots[subset].push(intent);
                }
            }
        }
        for (intent, allowed) in late {
            place(topology, &mut slots, intent, allowed);
        }
        for slot in &mut slots {
            slot.sort();
        }
        rounds.push(slots);
    }

    Schedule {
        protocol: if coded {
            Protocol::NcGaming
        } else {
            Protocol::Routing
        },
        n,
        reception: Reception::Both,
        rounds,
    }
}

/// Puts `intent` into the first of the leading `allowed` slots where every
/// other transmitter is at least 3 hops away, or into a new trailing slot.
fn place(topology: &CycleTopology, slots: &mut Vec<Slot>, intent: TransmitIntent, allowed: usize) {
    let fits = |slot: &Slot| {
        slot.iter()
            .all(|other| topology.distance(other.node, intent.node) >= 3)
    };
    match slots.iter_mut().take(allowed).find(|s| fits(s)) {
        Some(slot) => slot.push(intent),
        None => slots.push(vec![intent]),
    }
}
