//! Trace checker that trusts nothing but the trace itself.
//!
//! Spans are rebuilt from each node's own message plus the packets recorded
//! as delivered, so a trace that lies about a reception surfaces either as a
//! rule breach at that slot or as a non-derivable transmission later.

use std::fmt;

use serde::Serialize;

use crate::engine::Objective;
use crate::packet::{CodedPacket, KnowledgeBase};
use crate::trace::{Outcome, OutcomeKind, SlotEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationKind {
    CollisionDelivered,
    HalfDuplexReceive,
    NonDerivablePacket,
    PhantomReception,
    /// A non-delivery outcome that contradicts who transmitted, or a missing
    /// or duplicated outcome record.
    OutcomeMismatch,
    ObjectiveUnmet,
    MetricMismatch,
}

impl ViolationKind {
    pub fn code(self) -> &'static str {
        match self {
            Self::CollisionDelivered => "COLLISION_DELIVERED",
            Self::HalfDuplexReceive => "HALF_DUPLEX_RECEIVE",
            Self::NonDerivablePacket => "NON_DERIVABLE_PACKET",
            Self::PhantomReception => "PHANTOM_RECEPTION",
            Self::OutcomeMismatch => "OUTCOME_MISMATCH",
            Self::ObjectiveUnmet => "OBJECTIVE_UNMET",
            Self::MetricMismatch => "METRIC_MISMATCH",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Slot of the offending record, or the last slot for end-of-trace checks.
    pub slot: usize,
    pub nodes: Vec<usize>,
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} slot={}", self.kind.code(), self.slot)?;
        if !self.nodes.is_empty() {
            let nodes: Vec<String> = self.nodes.iter().map(usize::to_string).collect();
            write!(f, " nodes={}", nodes.join(","))?;
        }
        write!(f, ": {}", self.detail)
    }
}

/// Claimed metrics to compare against the recomputed ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Claim {
    pub t: usize,
    pub l: usize,
}

pub fn validate_trace(
    trace: &[SlotEvent],
    n: usize,
    objective: Objective,
    claim: Claim,
) -> Vec<Violation> {
    let len = n + 1;
    let left = |i: usize| (i + n) % len;
    let right = |i: usize| (i + 1) % len;
    let mut spans: Vec<KnowledgeBase> = (0..len)
        .map(|i| {
            let mut kb = KnowledgeBase::new(len);
            kb.insert(&CodedPacket::message(i)).expect("unit message");
            kb
        })
        .collect();
    let mut out = Vec::new();
    let mut emissions = 0;
    let mut met: Option<(usize, usize)> = None;

    for (k, event) in trace.iter().enumerate() {
        let slot = event.slot;
        let mut flag = |nodes: Vec<usize>, kind, detail: String| {
            out.push(Violation {
                slot,
                nodes,
                kind,
                detail,
            })
        };
        if slot != k + 1 {
            flag(
                vec![],
                ViolationKind::MetricMismatch,
                format!("slot numbered {slot}, expected {}", k + 1),
            );
        }

        let mut sent: Vec<Option<&CodedPacket>> = vec![None; len];
        for tx in &event.transmitters {
            if tx.node >= len {
                flag(
                    vec![tx.node],
                    ViolationKind::PhantomReception,
                    "transmitter is not a ring node".into(),
                );
                continue;
            }
            if sent[tx.node].is_some() {
                flag(
                    vec![tx.node],
                    ViolationKind::OutcomeMismatch,
                    "node transmits twice in one slot".into(),
                );
            }
            if tx.packet.is_zero() || !spans[tx.node].derivable(&tx.packet) {
                flag(
                    vec![tx.node],
                    ViolationKind::NonDerivablePacket,
                    format!("{} is outside the sender's span", tx.packet),
                );
            }
            sent[tx.node] = Some(&tx.packet);
        }
        emissions += event.transmitters.len();

        let mut by_node: Vec<Vec<&Outcome>> = vec![Vec::new(); len];
        for o in &event.outcomes {
            match by_node.get_mut(o.node) {
                Some(v) => v.push(o),
                None => flag(
                    vec![o.node],
                    ViolationKind::OutcomeMismatch,
                    "outcome for a node outside the ring".into(),
                ),
            }
        }

        let mut accepted: Vec<(usize, CodedPacket)> = Vec::new();
        for i in 0..len {
            let outcome = match by_node[i].as_slice() {
                [o] => *o,
                [] => {
                    flag(
                        vec![i],
                        ViolationKind::OutcomeMismatch,
                        "no outcome recorded".into(),
                    );
                    continue;
                }
                _ => {
                    flag(
                        vec![i],
                        ViolationKind::OutcomeMismatch,
                        "several outcomes recorded".into(),
                    );
                    continue;
                }
            };
            let busy = sent[i].is_some();
            let talkers: Vec<usize> = [left(i), right(i)]
                .into_iter()
                .filter(|&j| sent[j].is_some())
                .collect();
            match outcome.kind {
                OutcomeKind::HalfDuplexBusy if !busy => flag(
                    vec![i],
                    ViolationKind::OutcomeMismatch,
                    "busy outcome for a node that did not transmit".into(),
                ),
                OutcomeKind::HalfDuplexBusy => {}
                OutcomeKind::Delivered | OutcomeKind::Discarded => {
                    let delivered = outcome.kind == OutcomeKind::Delivered;
                    let kind_of = |v| {
                        if delivered {
                            v
                        } else {
                            ViolationKind::OutcomeMismatch
                        }
                    };
                    let mut nodes = vec![i];
                    nodes.extend(&talkers);
                    if busy {
                        flag(
                            nodes,
                            kind_of(ViolationKind::HalfDuplexReceive),
                            "transmitter also receives".into(),
                        );
                    } else if talkers.len() == 2 {
                        flag(
                            nodes,
                            kind_of(ViolationKind::CollisionDelivered),
                            "both neighbours transmitted".into(),
                        );
                    } else {
                        let source = outcome.from.filter(|f| talkers.contains(f));
                        match (source, &outcome.packet) {
                            (Some(f), Some(p)) if sent[f] == Some(p) => {
                                if delivered {
                                    accepted.push((i, p.clone()));
                                }
                            }
                            _ => flag(
                                nodes,
                                kind_of(ViolationKind::PhantomReception),
                                format!(
                                    "reception from {:?} does not match what was transmitted",
                                    outcome.from
                                ),
                            ),
                        }
                    }
                }
                OutcomeKind::Collision if busy || talkers.len() != 2 => flag(
                    vec![i],
                    ViolationKind::OutcomeMismatch,
                    format!(
                        "collision recorded with {} transmitting neighbours",
                        talkers.len()
                    ),
                ),
                OutcomeKind::Silence if busy || !talkers.is_empty() => flag(
                    vec![i],
                    ViolationKind::OutcomeMismatch,
                    "silence recorded while a neighbour transmitted".into(),
                ),
                OutcomeKind::Collision | OutcomeKind::Silence => {}
            }
        }
        for (i, p) in accepted {
            if !p.is_zero() {
                let _ = spans[i].insert(&p);
            }
        }
        if met.is_none() && objective_holds(&spans, objective) {
            met = Some((slot, emissions));
        }
    }

    let end = trace.last().map_or(0, |e| e.slot);
    let end_flag = |kind, detail: String| Violation {
        slot: end,
        nodes: vec![],
        kind,
        detail,
    };
    match met {
        None => {
            out.push(end_flag(
                ViolationKind::ObjectiveUnmet,
                format!("{objective} objective not met by trace end"),
            ));
            if claim.l != emissions {
                out.push(end_flag(
                    ViolationKind::MetricMismatch,
                    format!(
                        "claimed L={} but the trace holds {emissions} emissions",
                        claim.l
                    ),
                ));
            }
        }
        Some((t, l)) => {
            if claim.t != t {
                out.push(end_flag(
                    ViolationKind::MetricMismatch,
                    format!("claimed T={} but objective met at slot {t}", claim.t),
                ));
            }
            if claim.l != l {
                out.push(end_flag(
                    ViolationKind::MetricMismatch,
                    format!("claimed L={} but {l} emissions up to T", claim.l),
                ));
            }
        }
    }
    out
}

fn objective_holds(spans: &[KnowledgeBase], objective: Objective) -> bool {
    let has = |i: usize, j: usize| spans[i].derivable(&CodedPacket::message(j));
    match objective {
        Objective::Gaming => (1..spans.len()).all(|i| has(0, i) && has(i, 0)),
        Objective::Multicast => (0..spans.len()).all(|i| (0..spans.len()).all(|j| has(i, j))),
    }
}

/// Single-field edits of a valid trace, each of which must be caught.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    DeliveredToCollision,
    CollisionToDelivered,
    DeliveredPacketSupport,
    TransmittedPacketSupport,
    DeliveredFrom,
    BusyToDelivered,
    SilenceToDelivered,
    ClaimedLPlusOne,
    Truncate,
    DropTransmitter,
}

impl Mutation {
    pub const ALL: [Mutation; 10] = [
        Mutation::DeliveredToCollision,
        Mutation::CollisionToDelivered,
        Mutation::DeliveredPacketSupport,
        Mutation::TransmittedPacketSupport,
        Mutation::DeliveredFrom,
        Mutation::BusyToDelivered,
        Mutation::SilenceToDelivered,
        Mutation::ClaimedLPlusOne,
        Mutation::Truncate,
        Mutation::DropTransmitter,
    ];

    /// Applies the edit to the first eligible record. `None` when the trace
    /// has no eligible record.
    pub fn apply(
        self,
        trace: &[SlotEvent],
        n: usize,
        claim: Claim,
    ) -> Option<(Vec<SlotEvent>, Claim)> {
        let len = n + 1;
        let mut t = trace.to_vec();
        let find = |t: &[SlotEvent], kind: OutcomeKind| {
            t.iter().enumerate().find_map(|(e, ev)| {
                ev.outcomes
                    .iter()
                    .position(|o| o.kind == kind)
                    .map(|k| (e, k))
            })
        };
        let first_tx = |e: &SlotEvent| {
            e.transmitters
                .first()
                .map(|tx| (tx.node, tx.packet.clone()))
        };
        match self {
            Mutation::DeliveredToCollision => {
                let (e, k) = find(&t, OutcomeKind::Delivered)?;
                t[e].outcomes[k] = Outcome::bare(t[e].outcomes[k].node, OutcomeKind::Collision);
            }
            Mutation::CollisionToDelivered => {
                let (e, k) = find(&t, OutcomeKind::Collision)?;
                let node = t[e].outcomes[k].node;
                let from = (node + n) % len;
                let packet = t[e]
                    .transmitters
                    .iter()
                    .find(|tx| tx.node == from)?
                    .packet
                    .clone();
                t[e].outcomes[k] = Outcome {
                    node,
                    kind: OutcomeKind::Delivered,
                    from: Some(from),
                    packet: Some(packet),
                };
            }
            Mutation::DeliveredPacketSupport => {
                let (e, k) = find(&t, OutcomeKind::Delivered)?;
                let p = t[e].outcomes[k].packet.as_mut()?;
                *p = p.xor(&CodedPacket::message(n));
                if p.is_zero() {
                    *p = CodedPacket::message(0);
                }
            }
            Mutation::TransmittedPacketSupport => {
                let e = t.iter().position(|ev| !ev.transmitters.is_empty())?;
                let tx = &mut t[e].transmitters[0];
                let flip = if tx.node == n { 1 } else { n };
                tx.packet = tx.packet.xor(&CodedPacket::message(flip));
            }
            Mutation::DeliveredFrom => {
                let (e, k) = find(&t, OutcomeKind::Delivered)?;
                let o = &mut t[e].outcomes[k];
                let (l, r) = ((o.node + n) % len, (o.node + 1) % len);
                o.from = Some(if o.from == Some(l) { r } else { l });
            }
            Mutation::BusyToDelivered | Mutation::SilenceToDelivered => {
                let kind = if self == Mutation::BusyToDelivered {
                    OutcomeKind::HalfDuplexBusy
                } else {
                    OutcomeKind::Silence
                };
                let (e, k) = find(&t, kind)?;
                let node = t[e].outcomes[k].node;
                let (from, packet) = first_tx(&t[e]).unwrap_or((0, CodedPacket::message(0)));
                let from = if from == node { (node + 1) % len } else { from };
                t[e].outcomes[k] = Outcome {
                    node,
                    kind: OutcomeKind::Delivered,
                    from: Some(from),
                    packet: Some(packet),
                };
            }
            Mutation::ClaimedLPlusOne => {
                return Some((
                    t,
                    Claim {
                        t: claim.t,
                        l: claim.l + 1,
                    },
                ));
            }
            Mutation::Truncate => {
                t.pop()?;
            }
            Mutation::DropTransmitter => {
                let e = t.iter().position(|ev| !ev.transmitters.is_empty())?;
                t[e].transmitters.remove(0);
            }
        }
        Some((t, claim))
    }
}
