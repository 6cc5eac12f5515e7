// Routing against coded gaming for one n, slot by slot.
//
// cargo run --example gaming_run -- 5

use cyclenc::analysis::{bounds_for, check_run};
use cyclenc::trace::OutcomeKind;
use cyclenc::{run_protocol, Objective, Protocol, RunOptions};

fn main() {
    let n = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(5);
    for protocol in [Protocol::Routing, Protocol::NcGaming] {
        let run = match run_protocol(protocol, n, Objective::Gaming, RunOptions::default()) {
            Ok(run) => run,
            Err(e) => {
                eprintln!("{protocol}: {e}");
                continue;
            }
        };
        println!("== {protocol}, n={n}");
        for e in &run.trace {
            let tx: Vec<String> = e
                .transmitters
                .iter()
                .map(|t| format!("V{}:{}", t.node, t.packet))
                .collect();
            let lost = e
                .outcomes
                .iter()
                .filter(|o| o.kind == OutcomeKind::Collision)
                .count();
            println!(
                "slot {:>2}  round {} phase {}  {}{}",
                e.slot,
                e.round,
                e.subset_slot,
                tx.join(" "),
                if lost > 0 {
                    format!("  ({lost} collided)")
                } else {
                    String::new()
                }
            );
        }
        let b = bounds_for(protocol, n).unwrap();
        let c = check_run(&run, &b).unwrap();
        println!(
            "T={} in [{}, {}], L={} -> {}",
            run.t,
            b.t_lb,
            b.t_ub,
            run.l,
            c.verdict()
        );
    }
}
