// Which player messages the server decodes in each round.

use cyclenc::analysis::arrival_order;
use cyclenc::{run_protocol, Objective, Protocol, RunOptions};

fn main() {
    for n in [4, 5, 10, 11] {
        let run = run_protocol(
            Protocol::NcGaming,
            n,
            Objective::Gaming,
            RunOptions::default(),
        )
        .unwrap();
        let order = arrival_order(&run).unwrap();
        let rounds: Vec<String> = order
            .rounds
            .iter()
            .map(|(t, m)| format!("t={t}:{m:?}"))
            .collect();
        println!("n={n:<3} {}  conforms={}", rounds.join(" "), order.conforms);
    }
}
