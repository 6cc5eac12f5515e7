use proptest::prelude::*;

use cyclenc::packet::{CodedPacket, KnowledgeBase};
use cyclenc::topology::{build_cycle, check_partition, partition};

const DIM: usize = 14;

fn packet() -> impl Strategy<Value = CodedPacket> {
    (1u32..(1 << DIM))
        .prop_map(|bits| CodedPacket::from_indices((0..DIM).filter(|i| bits >> i & 1 == 1)))
}

fn span_of(packets: &[CodedPacket]) -> KnowledgeBase {
    let mut kb = KnowledgeBase::new(DIM);
    for p in packets {
        kb.insert(p).unwrap();
    }
    kb
}

/// Every XOR of a subset of the basis, by enumeration.
fn brute_span(kb: &KnowledgeBase) -> Vec<CodedPacket> {
    let basis: Vec<&CodedPacket> = kb.basis().collect();
    (0u32..1 << basis.len())
        .map(|mask| {
            basis
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .fold(CodedPacket::zero(), |acc, (_, p)| acc.xor(p))
        })
        .collect()
}

proptest! {
    #[test]
    fn membership_matches_enumeration(rows in prop::collection::vec(packet(), 0..12), probe in packet()) {
        let kb = span_of(&rows);
        prop_assert!(kb.rank() <= 12);
        let all = brute_span(&kb);
        prop_assert_eq!(kb.derivable(&probe), all.contains(&probe));
        for i in 0..DIM {
            prop_assert_eq!(kb.can_decode(i).unwrap(), all.contains(&CodedPacket::message(i)));
        }
        // The input rows span the same space as the basis.
        for r in &rows {
            prop_assert!(kb.derivable(r));
        }
    }

    #[test]
    fn decodable_set_never_shrinks(rows in prop::collection::vec(packet(), 1..20)) {
        let mut kb = KnowledgeBase::new(DIM);
        let mut before = Vec::new();
        for r in &rows {
            let ins = kb.insert(r).unwrap();
            let after = kb.decodable();
            prop_assert!(before.iter().all(|i| after.contains(i)));
            let mut grown: Vec<usize> = after.iter().copied().filter(|i| !before.contains(i)).collect();
            grown.sort_unstable();
            prop_assert_eq!(grown, ins.newly_decodable);
            before = after;
        }
    }

    #[test]
    fn span_is_order_independent(
        (rows, shuffled) in prop::collection::vec(packet(), 1..16)
            .prop_flat_map(|v| (Just(v.clone()), Just(v).prop_shuffle()))
    ) {
        prop_assert_eq!(span_of(&rows), span_of(&shuffled));
    }

    #[test]
    fn in_span_insert_changes_nothing(rows in prop::collection::vec(packet(), 1..10), pick in any::<prop::sample::Index>()) {
        let kb = span_of(&rows);
        let again = kb.with(&rows[pick.index(rows.len())]).unwrap();
        prop_assert_eq!(kb, again);
    }

    #[test]
    fn partitions_hold_distance_three(n in 2usize..=200) {
        let t = build_cycle(n).unwrap();
        prop_assert!(check_partition(&partition(&t), &t).is_valid());
    }
}
