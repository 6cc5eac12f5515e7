// Decoding by span membership: a relay XOR and its unwrapping.

use cyclenc::{CodedPacket, KnowledgeBase};

fn main() {
    // V_1 on a 6-node ring holds M_1, hears M_0 + M_2 from V_0's side and
    // M_2 from V_2.
    let mut v1 = KnowledgeBase::new(6);
    for p in [
        CodedPacket::message(1),
        CodedPacket::from_indices([0, 2]),
        CodedPacket::message(2),
    ] {
        let ins = v1.insert(&p).unwrap();
        println!(
            "insert {p:<6} rank={} newly decodable={:?}",
            v1.rank(),
            ins.newly_decodable
        );
    }
    println!("decodable: {:?}", v1.decodable());
    let probe = CodedPacket::from_indices([0, 1]);
    println!("can build {probe}: {}", v1.derivable(&probe));
    println!(
        "can build {}: {}",
        CodedPacket::message(3),
        v1.derivable(&CodedPacket::message(3))
    );
}
