//! The ring, its scheduling constants and the phase partitions that decide
//! which nodes may broadcast in the same slot.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Smallest supported player count. With `n = 1` the "cycle" has two nodes
/// joined by a doubled edge and none of the constructions apply.
pub const MIN_PLAYERS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("n must be at least {MIN_PLAYERS}, got {0}")]
    TooFewPlayers(usize),
}

/// Cycle `V_0, V_1, ..., V_n, V_0` with the server at node 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct CycleTopology {
    n: usize,
}

/// Constants shared by the gaming protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProtocolParams {
    /// `D = ceil(n/2)`, the hop distance from the server to the farthest player.
    pub radius: usize,
    /// `d = floor(D/2) = floor((n+1)/4)`, the number of 4-phase rounds in the
    /// routing protocol.
    pub dual_rounds: usize,
}

impl ProtocolParams {
    pub fn for_players(n: usize) -> Self {
        Self {
            radius: n.div_ceil(2),
            dual_rounds: (n + 1) / 4,
        }
    }
}

pub fn build_cycle(n: usize) -> Result<CycleTopology, TopologyError> {
    CycleTopology::new(n)
}

impl CycleTopology {
    pub fn new(n: usize) -> Result<Self, TopologyError> {
        if n < MIN_PLAYERS {
            return Err(TopologyError::TooFewPlayers(n));
        }
        Ok(Self { n })
    }

    /// Number of players.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn node_count(&self) -> usize {
        self.n + 1
    }

    pub fn nodes(&self) -> std::ops::Range<usize> {
        0..self.node_count()
    }

    pub fn left(&self, i: usize) -> usize {
        (i + self.n) % self.node_count()
    }

    pub fn right(&self, i: usize) -> usize {
        (i + 1) % self.node_count()
    }

    /// Hop distance along the shorter arc.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        let len = self.node_count();
        let k = a.abs_diff(b) % len;
        k.min(len - k)
    }

    pub fn params(&self) -> ProtocolParams {
        ProtocolParams::for_players(self.n)
    }
}

/// Ordered phase subsets. Subset `k` (0-based) broadcasts in slot `k + 1`
/// of a round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhasePartition {
    n: usize,
    subsets: Vec<BTreeSet<usize>>,
    /// Index of the subset allowed to hold adjacent nodes, if any.
    exempt: Option<usize>,
}

impl PhasePartition {
    /// Wraps arbitrary subsets; no validation is done here, see
    /// [`check_partition`].
    pub fn from_subsets(n: usize, subsets: Vec<BTreeSet<usize>>, exempt: Option<usize>) -> Self {
        Self { n, subsets, exempt }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `(n+1) mod 3`.
    pub fn r(&self) -> usize {
        (self.n + 1) % 3
    }

    pub fn phase_count(&self) -> usize {
        self.subsets.len()
    }

    pub fn subsets(&self) -> &[BTreeSet<usize>] {
        &self.subsets
    }

    pub fn exempt(&self) -> Option<usize> {
        self.exempt
    }

    /// 0-based index of the subset holding `node`.
    pub fn subset_of(&self, node: usize) -> Option<usize> {
        self.subsets.iter().position(|s| s.contains(&node))
    }
}

/// Phase partition used by the gaming protocols.
///
/// `(n+1) mod 3 = 0` gives the plain 3-phase grouping `j = (i mod 3) + 1`.
/// Otherwise a fourth subset absorbs the one or two nodes where the mod-3
/// pattern breaks around the far side of the ring, and nodes past `floor(n/2)`
/// are relabelled with the shift `r`.
pub fn partition(topology: &CycleTopology) -> PhasePartition {
    let n = topology.n();
    let len = topology.node_count();
    let r = len % 3;
    let half_down = n / 2;
    let half_up = n.div_ceil(2);
    let fourth: BTreeSet<usize> = match r {
        0 => BTreeSet::new(),
        1 => [half_up].into(),
        // For even n the pair {floor(n/2), ceil(n/2)} collapses to one node,
        // which leaves two same-label nodes at distance 2. Taking the next
        // node instead keeps the other subsets at distance 3.
        _ if half_down == half_up => [half_down, half_down + 1].into(),
        _ => [half_down, half_up].into(),
    };
    let mut subsets = vec![BTreeSet::new(); 3];
    for i in 0..len {
        if fourth.contains(&i) {
            continue;
        }
        let label = if i <= half_down { i % 3 } else { (i - r) % 3 };
        subsets[label].insert(i);
    }
    if r == 0 {
        return PhasePartition::from_subsets(n, subsets, None);
    }
    subsets.push(fourth);
    PhasePartition::from_subsets(n, subsets, Some(3))
}

/// Phase partition used by the multicast protocols, where every node relays
/// in every round and an adjacent pair sharing a slot would block that link
/// for the whole run.
///
/// `r = 2` uses blocks `0123 0123 012 012 ...`, a proper distance-3
/// colouring. The five-node ring has no such colouring with four colours, so
/// `n = 4` gets one node per slot. Other `n` use [`partition`], which is
/// already proper there.
pub fn multicast_partition(topology: &CycleTopology) -> PhasePartition {
    let n = topology.n();
    let len = topology.node_count();
    if len % 3 != 2 {
        return partition(topology);
    }
    if len == 5 {
        let subsets = (0..len).map(|i| [i].into()).collect();
        return PhasePartition::from_subsets(n, subsets, None);
    }
    let mut subsets = vec![BTreeSet::new(); 4];
    let labels = (0..4).chain(0..4).chain((0..3).cycle()).take(len);
    for (node, label) in labels.enumerate() {
        subsets[label].insert(node);
    }
    PhasePartition::from_subsets(n, subsets, None)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum PartitionViolation {
    /// Two nodes of a constrained subset closer than 3 hops (subset is 1-based).
    TooClose {
        subset: usize,
        a: usize,
        b: usize,
        distance: usize,
    },
    Uncovered(usize),
    Duplicated(usize),
    OutOfRange(usize),
}

impl fmt::Display for PartitionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TooClose {
                subset,
                a,
                b,
                distance,
            } => write!(f, "subset {subset}: V_{a} and V_{b} at distance {distance}"),
            Self::Uncovered(i) => write!(f, "V_{i} is in no subset"),
            Self::Duplicated(i) => write!(f, "V_{i} is in more than one subset"),
            Self::OutOfRange(i) => write!(f, "V_{i} is not a node of the ring"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PartitionReport {
    pub violations: Vec<PartitionViolation>,
    /// Informational findings, such as adjacency inside the exempt subset.
    pub notes: Vec<String>,
}

impl PartitionReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_partition(p: &PhasePartition, t: &CycleTopology) -> PartitionReport {
    let mut report = PartitionReport::default();
    let mut seen = vec![0usize; t.node_count()];
    for subset in p.subsets() {
        for &i in subset {
            match seen.get_mut(i) {
                Some(count) => *count += 1,
                None => report.violations.push(PartitionViolation::OutOfRange(i)),
            }
        }
    }
    for (i, &count) in seen.iter().enumerate() {
        match count {
            0 => report.violations.push(PartitionViolation::Uncovered(i)),
            1 => {}
            _ => report.violations.push(PartitionViolation::Duplicated(i)),
        }
    }
    for (k, subset) in p.subsets().iter().enumerate() {
        let members: Vec<usize> = subset
            .iter()
            .copied()
            .filter(|&i| i < t.node_count())
            .collect();
        for (x, &a) in members.iter().enumerate() {
            for &b in &members[x + 1..] {
                let distance = t.distance(a, b);
                if distance >= 3 {
                    continue;
                }
                if p.exempt() == Some(k) {
                    report.notes.push(format!(
                        "exempt subset {}: V_{a} and V_{b} at distance {distance}",
                        k + 1
                    ));
                } else {
                    report.violations.push(PartitionViolation::TooClose {
                        subset: k + 1,
                        a,
                        b,
                        distance,
                    });
                }
            }
        }
    }
    report
}
