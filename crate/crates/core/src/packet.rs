//! XOR-coded packets and per-node knowledge spans over GF(2).
//!
//! Packets are symbolic: a packet is the set of source-message indices whose
//! XOR it carries. Payloads never matter for timing, message counts or
//! decodability, so only the support is tracked.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PacketError {
    #[error("the zero packet carries no information and cannot be inserted")]
    ZeroPacket,
    #[error("message index {index} is outside 0..{dimension}")]
    IndexOutOfRange { index: usize, dimension: usize },
}

/// GF(2) combination of source messages, stored as a bitset over message
/// indices. Trailing zero limbs are trimmed so that equality is structural.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct CodedPacket {
    limbs: Vec<u64>,
}

impl CodedPacket {
    pub fn zero() -> Self {
        Self { limbs: Vec::new() }
    }

    /// The plain source message `M_index`.
    pub fn message(index: usize) -> Self {
        let mut p = Self::zero();
        p.toggle(index);
        p
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut p = Self::zero();
        for i in indices {
            p.toggle(i);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.limbs
            .get(index / 64)
            .is_some_and(|limb| limb >> (index % 64) & 1 == 1)
    }

    pub fn weight(&self) -> usize {
        self.limbs.iter().map(|l| l.count_ones() as usize).sum()
    }

    /// Largest index in the support.
    pub fn max_index(&self) -> Option<usize> {
        let last = self.limbs.last()?;
        Some((self.limbs.len() - 1) * 64 + 63 - last.leading_zeros() as usize)
    }

    /// Smallest index in the support.
    pub fn min_index(&self) -> Option<usize> {
        self.limbs
            .iter()
            .enumerate()
            .find(|(_, l)| **l != 0)
            .map(|(k, l)| k * 64 + l.trailing_zeros() as usize)
    }

    /// Support indices in ascending order.
    pub fn indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.weight());
        for (k, &limb) in self.limbs.iter().enumerate() {
            let mut bits = limb;
            while bits != 0 {
                out.push(k * 64 + bits.trailing_zeros() as usize);
                bits &= bits - 1;
            }
        }
        out
    }

    /// Symmetric difference of supports.
    pub fn xor(&self, other: &CodedPacket) -> CodedPacket {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn xor_assign(&mut self, other: &CodedPacket) {
        if other.limbs.len() > self.limbs.len() {
            self.limbs.resize(other.limbs.len(), 0);
        }
        for (a, b) in self.limbs.iter_mut().zip(&other.limbs) {
            *a ^= *b;
        }
        self.trim();
    }

    fn toggle(&mut self, index: usize) {
        let limb = index / 64;
        if limb >= self.limbs.len() {
            self.limbs.resize(limb + 1, 0);
        }
        self.limbs[limb] ^= 1 << (index % 64);
        self.trim();
    }

    fn trim(&mut self) {
        while self.limbs.last() == Some(&0) {
            self.limbs.pop();
        }
    }
}

impl fmt::Display for CodedPacket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, i) in self.indices().into_iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "]")
    }
}

impl fmt::Debug for CodedPacket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CodedPacket{self}")
    }
}

impl Serialize for CodedPacket {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.indices().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CodedPacket {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let indices = Vec::<usize>::deserialize(deserializer)?;
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted != indices {
            return Err(serde::de::Error::custom(
                "packet indices must be strictly ascending",
            ));
        }
        Ok(CodedPacket::from_indices(indices))
    }
}

/// What an insertion changed in a [`KnowledgeBase`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Insertion {
    /// The packet was outside the span before the insertion.
    pub innovative: bool,
    /// Messages that became decodable because of this packet, ascending.
    pub newly_decodable: Vec<usize>,
}

/// Linear span of the packets a node holds, kept in fully reduced row
/// echelon form keyed by pivot (lowest support index of each row).
///
/// Because every pivot column is cleared from all other rows, message `i`
/// lies in the span exactly when the row pivoted at `i` is the unit vector
/// `e_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeBase {
    dimension: usize,
    rows: BTreeMap<usize, CodedPacket>,
}

impl KnowledgeBase {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            rows: BTreeMap::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn basis(&self) -> impl Iterator<Item = &CodedPacket> {
        self.rows.values()
    }

    fn check(&self, p: &CodedPacket) -> Result<(), PacketError> {
        match p.max_index() {
            Some(index) if index >= self.dimension => Err(PacketError::IndexOutOfRange {
                index,
                dimension: self.dimension,
            }),
            _ => Ok(()),
        }
    }

    /// Residue of `p` after eliminating every basis pivot it touches.
    fn reduce(&self, p: &CodedPacket) -> CodedPacket {
        let mut r = p.clone();
        for (&pivot, row) in &self.rows {
            if r.contains(pivot) {
                r.xor_assign(row);
            }
        }
        r
    }

    /// Adds `p` to the span in place.
    pub fn insert(&mut self, p: &CodedPacket) -> Result<Insertion, PacketError> {
        if p.is_zero() {
            return Err(PacketError::ZeroPacket);
        }
        self.check(p)?;
        let residue = self.reduce(p);
        let Some(pivot) = residue.min_index() else {
            return Ok(Insertion::default());
        };
        let mut newly = Vec::new();
        for (&other, row) in self.rows.iter_mut() {
            if row.contains(pivot) {
                let was_unit = row.weight() == 1;
                row.xor_assign(&residue);
                if !was_unit && row.weight() == 1 {
                    newly.push(other);
                }
            }
        }
        if residue.weight() == 1 {
            newly.push(pivot);
        }
        newly.sort_unstable();
        self.rows.insert(pivot, residue);
        Ok(Insertion {
            innovative: true,
            newly_decodable: newly,
        })
    }

    /// Copy-on-update variant of [`KnowledgeBase::insert`].
    pub fn with(&self, p: &CodedPacket) -> Result<KnowledgeBase, PacketError> {
        let mut next = self.clone();
        next.insert(p)?;
        Ok(next)
    }

    pub fn can_decode(&self, index: usize) -> Result<bool, PacketError> {
        if index >= self.dimension {
            return Err(PacketError::IndexOutOfRange {
                index,
                dimension: self.dimension,
            });
        }
        Ok(self.rows.get(&index).is_some_and(|r| r.weight() == 1))
    }

    /// True iff `p` lies in the span. The zero packet is in every span;
    /// packets touching indices beyond the dimension never are.
    pub fn derivable(&self, p: &CodedPacket) -> bool {
        self.check(p).is_ok() && self.reduce(p).is_zero()
    }

    /// All decodable message indices, ascending.
    pub fn decodable(&self) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|(_, r)| r.weight() == 1)
            .map(|(&k, _)| k)
            .collect()
    }
}
