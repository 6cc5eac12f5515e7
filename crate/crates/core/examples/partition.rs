// Phase partitions for a few ring sizes, with the distance-3 check.
//
// cargo run --example partition -- 7

use cyclenc::topology::{build_cycle, check_partition, multicast_partition, partition};

fn main() {
    let ns: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let ns = if ns.is_empty() { vec![5, 7, 9] } else { ns };
    for n in ns {
        let Ok(t) = build_cycle(n) else {
            eprintln!("n={n}: ring needs at least 2 players");
            continue;
        };
        let p = t.params();
        println!("n={n}  D={}  d={}", p.radius, p.dual_rounds);
        for (label, part) in [
            ("gaming", partition(&t)),
            ("multicast", multicast_partition(&t)),
        ] {
            let subsets: Vec<String> = part
                .subsets()
                .iter()
                .enumerate()
                .map(|(k, s)| format!("V{}={s:?}", k + 1))
                .collect();
            let report = check_partition(&part, &t);
            println!("  {label:<9} {}", subsets.join(" "));
            for v in &report.violations {
                println!("    violation: {v}");
            }
            for note in &report.notes {
                println!("    note: {note}");
            }
        }
    }
}
