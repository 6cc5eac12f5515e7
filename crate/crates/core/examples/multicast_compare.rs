// Circular relaying against XOR multicast: T halves.

use cyclenc::{run_protocol, Objective, Protocol, RunOptions};

fn main() {
    println!(
        "{:>4} {:>10} {:>12} {:>7}",
        "n", "circular", "nc-multicast", "ratio"
    );
    for n in [6, 12, 24, 48, 49, 50] {
        let t = |p| {
            run_protocol(p, n, Objective::Multicast, RunOptions::default())
                .unwrap()
                .t
        };
        let (c, m) = (t(Protocol::Circular), t(Protocol::NcMulticast));
        println!("{n:>4} {c:>10} {m:>12} {:>7.3}", m as f64 / c as f64);
    }
}
