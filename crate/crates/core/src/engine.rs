//! Slot-by-slot execution of a schedule under the broadcast, half-duplex and
//! collision rules.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::packet::{CodedPacket, KnowledgeBase};
use crate::protocols::{Protocol, Reception, Rule, Schedule};
use crate::topology::{CycleTopology, TopologyError};
use crate::trace::{Outcome, OutcomeKind, SlotEvent, Transmission};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Every node decodes every message.
    Multicast,
    /// The server decodes every player message and every player decodes M_0.
    Gaming,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Multicast => "multicast",
            Objective::Gaming => "gaming",
        }
    }

    /// The objective the protocol was designed for.
    pub fn native(protocol: Protocol) -> Self {
        if protocol.is_gaming() {
            Objective::Gaming
        } else {
            Objective::Multicast
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "multicast" => Ok(Objective::Multicast),
            "gaming" => Ok(Objective::Gaming),
            _ => Err(format!("unknown objective '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RunOptions {
    /// Skip slots nobody transmits in, without counting them.
    pub compaction: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { compaction: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("IncompleteSchedule: objective {objective} unmet after {slots} slots")]
    IncompleteSchedule { objective: Objective, slots: usize },
    #[error("NonDerivablePacket: round {round}, V_{node} ({rule:?}): {reason}")]
    NonDerivablePacket {
        round: usize,
        node: usize,
        rule: Rule,
        reason: String,
    },
    #[error("EmptyScheduleForObjective: schedule has no transmissions")]
    EmptyScheduleForObjective,
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

impl EngineError {
    pub fn name(&self) -> &'static str {
        match self {
            EngineError::IncompleteSchedule { .. } => "IncompleteSchedule",
            EngineError::NonDerivablePacket { .. } => "NonDerivablePacket",
            EngineError::EmptyScheduleForObjective => "EmptyScheduleForObjective",
            EngineError::Topology(_) => "Topology",
        }
    }
}

/// A collision that destroyed a packet the listener could not already build.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HarmfulCollision {
    pub slot: usize,
    pub node: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunResult {
    pub protocol: Protocol,
    pub n: usize,
    pub objective: Objective,
    pub compaction: bool,
    pub trace: Vec<SlotEvent>,
    /// Counted slot at which the objective first held.
    #[serde(rename = "T")]
    pub t: usize,
    /// Emissions in slots `1..=T`.
    #[serde(rename = "L")]
    pub l: usize,
    /// Scheduled slots left unexecuted after completion (empty ones excluded
    /// under compaction).
    pub overshoot: usize,
    pub collisions: usize,
    pub violations: Vec<HarmfulCollision>,
}

#[derive(Debug, Clone, Default)]
struct Buffers {
    left: Option<CodedPacket>,
    right: Option<CodedPacket>,
}

struct NodeState {
    knowledge: KnowledgeBase,
    /// Buffers filled during the previous round, read by this round's rules.
    prev: Buffers,
    staging: Buffers,
}

/// Objective predicate over per-node knowledge, indexed by node id.
pub fn objective_met(knowledge: &[KnowledgeBase], objective: Objective) -> bool {
    met_by(knowledge.len(), objective, |node, msg| {
        knowledge[node].can_decode(msg).unwrap_or(false)
    })
}

fn met_by(len: usize, objective: Objective, decodes: impl Fn(usize, usize) -> bool) -> bool {
    match objective {
        Objective::Gaming => (1..len).all(|i| decodes(0, i)) && (0..len).all(|i| decodes(i, 0)),
        Objective::Multicast => (0..len).all(|i| (0..len).all(|j| decodes(i, j))),
    }
}

fn resolve(state: &NodeState, node: usize, rule: Rule) -> Result<CodedPacket, String> {
    let need = |b: &Option<CodedPacket>, side: &str| {
        b.clone()
            .ok_or_else(|| format!("nothing was received from the {side} in the previous round"))
    };
    let packet = match rule {
        Rule::Own => CodedPacket::message(node),
        Rule::SendM0 => CodedPacket::message(0),
        Rule::ForwardFromRight => need(&state.prev.right, "right")?,
        Rule::ForwardFromLeft => need(&state.prev.left, "left")?,
        Rule::XorBoth => need(&state.prev.left, "left")?.xor(&need(&state.prev.right, "right")?),
    };
    if packet.is_zero() {
        return Err("the resolved packet is zero".into());
    }
    if !state.knowledge.derivable(&packet) {
        return Err(format!("{packet} is outside the sender's span"));
    }
    Ok(packet)
}

pub fn run(
    schedule: &Schedule,
    objective: Objective,
    options: RunOptions,
) -> Result<RunResult, EngineError> {
    let topology = CycleTopology::new(schedule.n)?;
    if schedule.intent_count() == 0 {
        return Err(EngineError::EmptyScheduleForObjective);
    }
    let len = topology.node_count();
    let mut states: Vec<NodeState> = topology
        .nodes()
        .map(|i| {
            let mut knowledge = KnowledgeBase::new(len);
            knowledge
                .insert(&CodedPacket::message(i))
                .expect("unit message is nonzero and in range");
            NodeState {
                knowledge,
                prev: Buffers::default(),
                staging: Buffers::default(),
            }
        })
        .collect();

    let mut trace = Vec::new();
    let mut emissions = 0;
    let mut collisions = 0;
    let mut violations = Vec::new();
    let mut done_at: Option<(usize, usize)> = None;
    let mut overshoot = 0;

    for (round, slots) in schedule.rounds.iter().enumerate() {
        for (k, slot) in slots.iter().enumerate() {
            if slot.is_empty() && options.compaction {
                continue;
            }
            if done_at.is_some() {
                overshoot += 1;
                continue;
            }
            let mut sent: Vec<Option<CodedPacket>> = vec![None; len];
            let mut transmitters = Vec::with_capacity(slot.len());
            for intent in slot {
                let packet =
                    resolve(&states[intent.node], intent.node, intent.rule).map_err(|reason| {
                        EngineError::NonDerivablePacket {
                            round,
                            node: intent.node,
                            rule: intent.rule,
                            reason,
                        }
                    })?;
                transmitters.push(Transmission {
                    node: intent.node,
                    packet: packet.clone(),
                });
                sent[intent.node] = Some(packet);
            }
            transmitters.sort_by_key(|t| t.node);
            let index = trace.len() + 1;
            emissions += transmitters.len();

            let mut outcomes = Vec::with_capacity(len);
            for i in topology.nodes() {
                if sent[i].is_some() {
                    outcomes.push(Outcome::bare(i, OutcomeKind::HalfDuplexBusy));
                    continue;
                }
                let (l, r) = (topology.left(i), topology.right(i));
                match (&sent[l], &sent[r]) {
                    (None, None) => outcomes.push(Outcome::bare(i, OutcomeKind::Silence)),
                    (Some(a), Some(b)) => {
                        collisions += 1;
                        let kb = &states[i].knowledge;
                        if !kb.derivable(a) || !kb.derivable(b) {
                            violations.push(HarmfulCollision {
                                slot: index,
                                node: i,
                            });
                        }
                        outcomes.push(Outcome::bare(i, OutcomeKind::Collision));
                    }
                    (Some(p), None) | (None, Some(p)) => {
                        let from_left = sent[l].is_some();
                        let from = if from_left { l } else { r };
                        let accepted = from_left || schedule.reception == Reception::Both;
                        let kind = if accepted {
                            let state = &mut states[i];
                            let ins = state.knowledge.insert(p).expect("sent packets are nonzero");
                            // Buffer the decoded unit message when the packet
                            // released exactly one, else the raw packet.
                            let keep = match ins.newly_decodable.as_slice() {
                                [m] => CodedPacket::message(*m),
                                _ => p.clone(),
                            };
                            let side = if from_left {
                                &mut state.staging.left
                            } else {
                                &mut state.staging.right
                            };
                            side.get_or_insert(keep);
                            OutcomeKind::Delivered
                        } else {
                            OutcomeKind::Discarded
                        };
                        outcomes.push(Outcome {
                            node: i,
                            kind,
                            from: Some(from),
                            packet: Some(p.clone()),
                        });
                    }
                }
            }
            trace.push(SlotEvent {
                slot: index,
                round,
                subset_slot: k + 1,
                transmitters,
                outcomes,
            });
            if met_by(len, objective, |i, j| {
                states[i].knowledge.can_decode(j).unwrap_or(false)
            }) {
                done_at = Some((index, emissions));
            }
        }
        for state in &mut states {
            state.prev = std::mem::take(&mut state.staging);
        }
    }

    let (t, l) = done_at.ok_or(EngineError::IncompleteSchedule {
        objective,
        slots: trace.len(),
    })?;
    Ok(RunResult {
        protocol: schedule.protocol,
        n: schedule.n,
        objective,
        compaction: options.compaction,
        trace,
        t,
        l,
        overshoot,
        collisions,
        violations,
    })
}

/// Builds the protocol's schedule for `n` and runs it.
pub fn run_protocol(
    protocol: Protocol,
    n: usize,
    objective: Objective,
    options: RunOptions,
) -> Result<RunResult, EngineError> {
    let topology = CycleTopology::new(n)?;
    run(&protocol.schedule(&topology), objective, options)
}
