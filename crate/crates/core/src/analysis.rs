//! Closed-form bounds, conformance checks, arrival order and the comparison
//! table.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{run_protocol, EngineError, Objective, RunOptions, RunResult};
use crate::packet::{CodedPacket, KnowledgeBase};
use crate::protocols::Protocol;
use crate::topology::{ProtocolParams, MIN_PLAYERS};
use crate::trace::OutcomeKind;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("n must be at least {min}, got {n}")]
    TooSmall { n: usize, min: usize },
    #[error("run is for {got_protocol} n={got_n}, bounds are for {want_protocol} n={want_n}")]
    Mismatch {
        got_protocol: Protocol,
        got_n: usize,
        want_protocol: Protocol,
        want_n: usize,
    },
    #[error("arrival order is defined for the gaming protocols, not {0}")]
    WrongFamily(Protocol),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MessageBound {
    /// L is known exactly.
    Exact(usize),
    /// `L <= coefficient * T`.
    UpperBound(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub protocol: Protocol,
    pub n: usize,
    pub t_lb: usize,
    pub t_ub: usize,
    pub messages: MessageBound,
}

pub fn bounds_for(protocol: Protocol, n: usize) -> Result<Bounds, AnalysisError> {
    if n < MIN_PLAYERS {
        return Err(AnalysisError::TooSmall {
            n,
            min: MIN_PLAYERS,
        });
    }
    let ProtocolParams {
        radius,
        dual_rounds,
    } = ProtocolParams::for_players(n);
    let per_slot = (n + 1) / 3;
    let routed = radius * (n / 2 + 3) - 1;
    let (t_lb, t_ub, messages) = match protocol {
        Protocol::Circular => (3 * n, 4 * n, MessageBound::UpperBound(per_slot)),
        Protocol::NcMulticast => (3 * radius, 4 * radius, MessageBound::UpperBound(per_slot)),
        Protocol::Routing => (
            3 * radius + dual_rounds - 2,
            3 * radius + dual_rounds + 1,
            MessageBound::Exact(routed),
        ),
        Protocol::NcGaming => (
            3 * radius - 2,
            3 * radius + 1,
            MessageBound::Exact(routed - 2 * dual_rounds),
        ),
    };
    Ok(Bounds {
        protocol,
        n,
        t_lb,
        t_ub,
        messages,
    })
}

/// Reference table cells whose L bound was evaluated at `T_ub` rather than
/// `T_lb`.
const EVALUATED_AT_UPPER: &[(Protocol, usize)] = &[(Protocol::NcMulticast, 9)];

impl Bounds {
    /// The L value printed in the comparison table: the exact count, or the
    /// per-slot bound evaluated at `T_lb` (at `T_ub` for the one reference
    /// cell that used it).
    pub fn table_l(&self) -> usize {
        match self.messages {
            MessageBound::Exact(l) => l,
            MessageBound::UpperBound(c)
                if EVALUATED_AT_UPPER.contains(&(self.protocol, self.n)) =>
            {
                c * self.t_ub
            }
            MessageBound::UpperBound(c) => c * self.t_lb,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Conformance {
    pub t_in_range: bool,
    pub l_ok: bool,
    pub details: Vec<String>,
}

impl Conformance {
    pub fn pass(&self) -> bool {
        self.t_in_range && self.l_ok
    }

    pub fn verdict(&self) -> &'static str {
        if self.pass() {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

/// Checks `T_lb <= T <= T_ub` and the L formula or bound.
pub fn check_measured(t: usize, l: usize, bounds: &Bounds) -> Conformance {
    let mut details = Vec::new();
    let t_in_range = (bounds.t_lb..=bounds.t_ub).contains(&t);
    if !t_in_range {
        details.push(format!("T={t} outside [{}, {}]", bounds.t_lb, bounds.t_ub));
    }
    let l_ok = match bounds.messages {
        MessageBound::Exact(want) => {
            if l != want {
                details.push(format!("L={l} differs from exact {want}"));
            }
            l == want
        }
        MessageBound::UpperBound(c) => {
            if l > c * t {
                details.push(format!("L={l} exceeds {c}*T={}", c * t));
            }
            l <= c * t
        }
    };
    Conformance {
        t_in_range,
        l_ok,
        details,
    }
}

pub fn check_run(result: &RunResult, bounds: &Bounds) -> Result<Conformance, AnalysisError> {
    if result.protocol != bounds.protocol || result.n != bounds.n {
        return Err(AnalysisError::Mismatch {
            got_protocol: result.protocol,
            got_n: result.n,
            want_protocol: bounds.protocol,
            want_n: bounds.n,
        });
    }
    Ok(check_measured(result.t, result.l, bounds))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArrivalOrder {
    /// Per round, the player messages the server newly decodes.
    pub rounds: Vec<(usize, Vec<usize>)>,
    /// Round `t` yielded exactly `{t+1, n-t}` for every round.
    pub conforms: bool,
}

/// Replays the server's deliveries from the trace.
pub fn arrival_order(result: &RunResult) -> Result<ArrivalOrder, AnalysisError> {
    if !result.protocol.is_gaming() {
        return Err(AnalysisError::WrongFamily(result.protocol));
    }
    let n = result.n;
    let mut kb = KnowledgeBase::new(n + 1);
    kb.insert(&CodedPacket::message(0)).expect("unit message");
    let last_round = result.trace.last().map_or(0, |e| e.round);
    let mut rounds: Vec<(usize, Vec<usize>)> = (0..=last_round).map(|t| (t, Vec::new())).collect();
    for event in &result.trace {
        let delivered = event
            .outcomes
            .iter()
            .find(|o| o.node == 0 && o.kind == OutcomeKind::Delivered);
        if let Some(packet) = delivered.and_then(|o| o.packet.as_ref()) {
            if let Ok(ins) = kb.insert(packet) {
                rounds[event.round].1.extend(ins.newly_decodable);
            }
        }
    }
    for (_, got) in &mut rounds {
        got.sort_unstable();
    }
    let conforms = rounds.iter().all(|(t, got)| {
        let mut want = vec![t + 1, n - t];
        want.dedup();
        want.sort_unstable();
        *got == want
    });
    Ok(ArrivalOrder { rounds, conforms })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableRow {
    pub n: usize,
    pub protocol: Protocol,
    #[serde(rename = "T_lb")]
    pub t_lb: usize,
    #[serde(rename = "T_ub")]
    pub t_ub: usize,
    #[serde(rename = "T_measured")]
    pub t_measured: usize,
    #[serde(rename = "L_formula_or_bound")]
    pub l_formula_or_bound: usize,
    #[serde(rename = "L_measured")]
    pub l_measured: usize,
}

/// One row per `(n, protocol)`, in input order. Engine runs fan out across
/// threads.
pub fn comparison_table(
    n_list: &[usize],
    protocols: &[Protocol],
    options: RunOptions,
) -> Result<Vec<TableRow>, AnalysisError> {
    let jobs: Vec<(usize, Protocol)> = n_list
        .iter()
        .flat_map(|&n| protocols.iter().map(move |&p| (n, p)))
        .collect();
    jobs.par_iter()
        .map(|&(n, protocol)| {
            let bounds = bounds_for(protocol, n)?;
            let run = run_protocol(protocol, n, Objective::native(protocol), options)?;
            Ok(TableRow {
                n,
                protocol,
                t_lb: bounds.t_lb,
                t_ub: bounds.t_ub,
                t_measured: run.t,
                l_formula_or_bound: bounds.table_l(),
                l_measured: run.l,
            })
        })
        .collect()
}

/// Relative reduction of T from routing to the coded gaming protocol.
pub fn nc_gain(n: usize) -> Result<f64, AnalysisError> {
    if n < 5 {
        return Err(AnalysisError::TooSmall { n, min: 5 });
    }
    let options = RunOptions::default();
    let (routed, coded) = rayon::join(
        || run_protocol(Protocol::Routing, n, Objective::Gaming, options),
        || run_protocol(Protocol::NcGaming, n, Objective::Gaming, options),
    );
    Ok(gain(routed?.t, coded?.t))
}

fn gain(routed: usize, coded: usize) -> f64 {
    (routed as f64 - coded as f64) / routed as f64
}

pub fn to_csv(rows: &[TableRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("rows serialize to csv");
    }
    String::from_utf8(w.into_inner().expect("flush to Vec")).expect("csv emits UTF-8")
}

/// Gain lines for every n whose routing and coded-gaming rows are both present.
fn gain_lines(rows: &[TableRow]) -> Vec<String> {
    let mut lines = Vec::new();
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.dedup();
    for n in ns {
        let t_of = |p| {
            rows.iter()
                .find(|r| r.n == n && r.protocol == p)
                .map(|r| r.t_measured)
        };
        if let (Some(a), Some(b)) = (t_of(Protocol::Routing), t_of(Protocol::NcGaming)) {
            if n >= 5 {
                lines.push(format!("NC gain at n={n}: {:.1}%", 100.0 * gain(a, b)));
            }
        }
    }
    lines
}

/// Markdown table with the bound cells in `LB/UB, L` form, the measured
/// values, and footer lines for the gain and the flagged table cells.
pub fn to_markdown(rows: &[TableRow]) -> String {
    let mut out = String::new();
    out.push_str("| n | protocol | T (LB/UB), L | T measured | L measured |\n");
    out.push_str("|---|---|---|---|---|\n");
    let mut flagged = false;
    for row in rows {
        let mark = if EVALUATED_AT_UPPER.contains(&(row.protocol, row.n)) {
            flagged = true;
            "*"
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "| {} | {} | {}/{}, {}{} | {} | {} |",
            row.n,
            row.protocol,
            row.t_lb,
            row.t_ub,
            row.l_formula_or_bound,
            mark,
            row.t_measured,
            row.l_measured
        );
    }
    let gains = gain_lines(rows);
    if !gains.is_empty() {
        out.push('\n');
    }
    for line in gains {
        let _ = writeln!(out, "{line}");
    }
    if flagged {
        out.push_str(
            "\n* L bound evaluated at T_ub; the other bound cells use T_lb, as in the reference table.\n",
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(p: Protocol, n: usize) -> Bounds {
        bounds_for(p, n).unwrap()
    }

    #[test]
    fn bounds_examples() {
        let r = b(Protocol::Routing, 9);
        assert_eq!(
            (r.t_lb, r.t_ub, r.messages),
            (15, 18, MessageBound::Exact(34))
        );
        let c = b(Protocol::NcGaming, 7);
        assert_eq!(
            (c.t_lb, c.t_ub, c.messages),
            (10, 13, MessageBound::Exact(19))
        );
        let small = b(Protocol::Routing, 2);
        assert_eq!(
            (small.t_lb, small.t_ub, small.messages),
            (1, 4, MessageBound::Exact(3))
        );
        assert!(bounds_for(Protocol::Routing, 1).is_err());
    }

    #[test]
    fn reference_table_cells() {
        let cell = |p, n| {
            let x = b(p, n);
            (x.t_lb, x.t_ub, x.table_l())
        };
        assert_eq!(cell(Protocol::Circular, 8), (24, 32, 72));
        assert_eq!(cell(Protocol::NcMulticast, 7), (12, 16, 24));
        assert_eq!(cell(Protocol::NcMulticast, 9), (15, 20, 60));
        assert_eq!(cell(Protocol::NcGaming, 9), (13, 16, 30));
    }

    #[test]
    fn check_examples() {
        let r5 = b(Protocol::Routing, 5);
        assert!(check_measured(8, 14, &r5).pass());
        assert!(check_measured(7, 12, &b(Protocol::NcGaming, 5)).pass());
        assert_eq!((r5.t_lb, r5.t_ub), (8, 11));
        assert!(check_measured(11, 14, &r5).pass());
        let bad = check_measured(12, 14, &r5);
        assert!(!bad.pass() && !bad.t_in_range && bad.l_ok);
    }

    #[test]
    fn check_run_rejects_mismatch() {
        let run = run_protocol(
            Protocol::Routing,
            5,
            Objective::Gaming,
            RunOptions::default(),
        )
        .unwrap();
        assert!(check_run(&run, &b(Protocol::NcGaming, 5)).is_err());
        assert!(check_run(&run, &b(Protocol::Routing, 5)).unwrap().pass());
    }

    #[test]
    fn arrival_examples() {
        let go = |n| {
            let run = run_protocol(
                Protocol::Routing,
                n,
                Objective::Gaming,
                RunOptions::default(),
            )
            .unwrap();
            arrival_order(&run).unwrap()
        };
        let a = go(5);
        assert_eq!(
            a.rounds,
            vec![(0, vec![1, 5]), (1, vec![2, 4]), (2, vec![3])]
        );
        assert!(a.conforms);
        assert_eq!(go(4).rounds, vec![(0, vec![1, 4]), (1, vec![2, 3])]);
        assert_eq!(go(2).rounds, vec![(0, vec![1, 2])]);
        let multicast = run_protocol(
            Protocol::Circular,
            4,
            Objective::Multicast,
            RunOptions::default(),
        )
        .unwrap();
        assert!(arrival_order(&multicast).is_err());
    }

    #[test]
    fn gain_examples() {
        assert!((nc_gain(5).unwrap() - 0.125).abs() < 1e-12);
        assert_eq!(gain(9, 9), 0.0);
        assert!(nc_gain(4).is_err());
    }

    #[test]
    fn csv_header_order() {
        let rows = comparison_table(&[2], &[Protocol::Routing], RunOptions::default()).unwrap();
        let text = to_csv(&rows);
        assert!(text.starts_with("n,protocol,T_lb,T_ub,T_measured,L_formula_or_bound,L_measured\n"));
        assert!(text.contains("2,routing,1,4,3,3,3"));
    }

    #[test]
    fn markdown_flags_upper_cell() {
        let rows = comparison_table(&[9], &Protocol::ALL, RunOptions::default()).unwrap();
        let md = to_markdown(&rows);
        assert!(md.contains("| 9 | nc-multicast | 15/20, 60* |"));
        assert!(md.contains("NC gain at n=9"));
    }
}
