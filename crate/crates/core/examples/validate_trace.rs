// Serialise a trace, replay it through the validator, then tamper with it.

use cyclenc::trace::{read_jsonl, to_jsonl};
use cyclenc::validator::{validate_trace, Claim, Mutation};
use cyclenc::{run_protocol, Objective, Protocol, RunOptions};

fn main() {
    let run = run_protocol(
        Protocol::Routing,
        5,
        Objective::Gaming,
        RunOptions::default(),
    )
    .unwrap();
    let text = to_jsonl(&run.trace);
    println!("{}", text.lines().next().unwrap());
    let trace = read_jsonl(text.as_bytes()).unwrap();
    let claim = Claim { t: run.t, l: run.l };
    println!(
        "clean trace: {} violations",
        validate_trace(&trace, 5, Objective::Gaming, claim).len()
    );
    for m in Mutation::ALL {
        let Some((bad, c)) = m.apply(&trace, 5, claim) else {
            continue;
        };
        let found = validate_trace(&bad, 5, Objective::Gaming, c);
        println!(
            "{m:?}: {}",
            found.first().map_or("missed".into(), |v| v.to_string())
        );
    }
}
