//! Command-line front end: `run`, `table` and `validate`.
//!
//! Exit codes: 0 pass, 1 conformance failure or violations, 2 usage error,
//! 3 internal, file or schema error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{
    bounds_for, check_run, comparison_table, to_csv, to_markdown, Bounds, Conformance,
};
use crate::engine::{run_protocol, Objective, RunOptions, RunResult};
use crate::protocols::Protocol;
use crate::topology::MIN_PLAYERS;
use crate::trace::{read_jsonl, write_jsonl};
use crate::validator::{validate_trace, Claim};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "cyclenc",
    version,
    about = "Routing and XOR network coding on a gaming ring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one protocol for one or more n and check it against its bounds.
    Run {
        #[arg(long, value_parser = parse_protocol)]
        protocol: Protocol,
        /// Player count, or a comma-separated list.
        #[arg(long, value_parser = parse_n, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Defaults to multicast for circular/nc-multicast, gaming otherwise.
        #[arg(long, value_parser = parse_objective)]
        objective: Option<Objective>,
        #[arg(long)]
        no_compaction: bool,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Write the JSON-lines trace here (single n only).
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Bound columns and measured values for all four protocols.
    Table {
        #[arg(long, value_parser = parse_n, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long)]
        no_compaction: bool,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Replay a JSON-lines trace and check it independently.
    Validate {
        #[arg(long)]
        validate_in: PathBuf,
        #[arg(long, value_parser = parse_n)]
        n: usize,
        #[arg(long, value_parser = parse_objective)]
        objective: Objective,
        /// Claimed communication period.
        #[arg(long = "claimed-t")]
        claimed_t: usize,
        /// Claimed emission count.
        #[arg(long = "claimed-l")]
        claimed_l: usize,
    },
}

fn parse_protocol(s: &str) -> Result<Protocol, String> {
    s.parse()
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    s.parse()
}

fn parse_n(s: &str) -> Result<usize, String> {
    let n: usize = s.trim().parse().map_err(|e| format!("'{s}': {e}"))?;
    if n < MIN_PLAYERS {
        return Err(format!("n must be at least {MIN_PLAYERS}, got {n}"));
    }
    Ok(n)
}

#[derive(Debug, Serialize)]
struct RunRecord {
    protocol: Protocol,
    n: usize,
    objective: Objective,
    compaction: bool,
    #[serde(rename = "T")]
    t: usize,
    #[serde(rename = "L")]
    l: usize,
    #[serde(rename = "T_lb")]
    t_lb: usize,
    #[serde(rename = "T_ub")]
    t_ub: usize,
    l_bound: crate::analysis::MessageBound,
    /// PASS, FAIL, or SKIPPED for out-of-scope combinations.
    conformance: &'static str,
    in_scope: bool,
    overshoot: usize,
    collisions: usize,
    violations: usize,
}

fn record(run: &RunResult, bounds: &Bounds, conformance: Option<&Conformance>) -> RunRecord {
    RunRecord {
        protocol: run.protocol,
        n: run.n,
        objective: run.objective,
        compaction: run.compaction,
        t: run.t,
        l: run.l,
        t_lb: bounds.t_lb,
        t_ub: bounds.t_ub,
        l_bound: bounds.messages,
        conformance: conformance.map_or("SKIPPED", Conformance::verdict),
        in_scope: conformance.is_some(),
        overshoot: run.overshoot,
        collisions: run.collisions,
        violations: run.violations.len(),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Run {
            protocol,
            n,
            objective,
            no_compaction,
            format,
            trace_out,
        } => cmd_run(
            protocol,
            &n,
            objective,
            RunOptions {
                compaction: !no_compaction,
            },
            format,
            trace_out,
            out,
            err,
        ),
        Command::Table {
            n,
            no_compaction,
            format,
        } => cmd_table(
            &n,
            RunOptions {
                compaction: !no_compaction,
            },
            format,
            out,
        ),
        Command::Validate {
            validate_in,
            n,
            objective,
            claimed_t,
            claimed_l,
        } => cmd_validate(validate_in, n, objective, claimed_t, claimed_l, out, err),
    };
    result.unwrap_or_else(|e| {
        let _ = writeln!(err, "error: {e}");
        EXIT_INTERNAL
    })
}

type CmdResult = Result<i32, Box<dyn std::error::Error>>;

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    protocol: Protocol,
    ns: &[usize],
    objective: Option<Objective>,
    options: RunOptions,
    format: Format,
    trace_out: Option<PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    if trace_out.is_some() && ns.len() != 1 {
        writeln!(err, "error: --trace-out needs a single --n")?;
        return Ok(EXIT_USAGE);
    }
    let objective = objective.unwrap_or(Objective::native(protocol));
    let in_scope = objective == Objective::native(protocol);
    let mut code = EXIT_OK;
    let mut csv = csv::Writer::from_writer(Vec::new());
    for &n in ns {
        let run = match run_protocol(protocol, n, objective, options) {
            Ok(run) => run,
            Err(e) => {
                writeln!(err, "{protocol} n={n}: {}: {e}", e.name())?;
                code = EXIT_FAIL;
                continue;
            }
        };
        let bounds = bounds_for(protocol, n)?;
        let conformance = if in_scope {
            Some(check_run(&run, &bounds)?)
        } else {
            None
        };
        if conformance.as_ref().is_some_and(|c| !c.pass()) || !run.violations.is_empty() {
            code = EXIT_FAIL;
        }
        if let Some(path) = &trace_out {
            let mut w = BufWriter::new(File::create(path)?);
            write_jsonl(&run.trace, &mut w)?;
            w.flush()?;
        }
        let rec = record(&run, &bounds, conformance.as_ref());
        match format {
            Format::Json => writeln!(out, "{}", serde_json::to_string(&rec)?)?,
            Format::Csv => csv.serialize(rec_flat(&rec))?,
            Format::Table => {
                writeln!(out, "protocol: {protocol}  n={n}  objective: {objective}")?;
                if !in_scope {
                    writeln!(out, "  (out of scope: no bounds exist for this objective)")?;
                }
                writeln!(
                    out,
                    "  T = {}  bounds [{}, {}]",
                    run.t, bounds.t_lb, bounds.t_ub
                )?;
                let l_line = match bounds.messages {
                    crate::analysis::MessageBound::Exact(v) => format!("exact {v}"),
                    crate::analysis::MessageBound::UpperBound(c) => {
                        format!("<= {c}*T = {}", c * run.t)
                    }
                };
                writeln!(out, "  L = {}  {l_line}", run.l)?;
                writeln!(
                    out,
                    "  collisions: {}  harmful: {}  overshoot slots: {}",
                    run.collisions,
                    run.violations.len(),
                    run.overshoot
                )?;
                if let Some(c) = &conformance {
                    for d in &c.details {
                        writeln!(out, "  {d}")?;
                    }
                }
                writeln!(out, "  conformance: {}", rec.conformance)?;
            }
        }
    }
    if format == Format::Csv {
        out.write_all(&csv.into_inner()?)?;
    }
    Ok(code)
}

/// CSV cannot hold the nested bound, so it is split into two columns.
#[derive(Serialize)]
struct FlatRecord<'a> {
    protocol: Protocol,
    n: usize,
    objective: Objective,
    compaction: bool,
    #[serde(rename = "T")]
    t: usize,
    #[serde(rename = "L")]
    l: usize,
    #[serde(rename = "T_lb")]
    t_lb: usize,
    #[serde(rename = "T_ub")]
    t_ub: usize,
    l_kind: &'a str,
    l_value: usize,
    conformance: &'a str,
    in_scope: bool,
    violations: usize,
}

fn rec_flat(r: &RunRecord) -> FlatRecord<'_> {
    let (l_kind, l_value) = match r.l_bound {
        crate::analysis::MessageBound::Exact(v) => ("EXACT", v),
        crate::analysis::MessageBound::UpperBound(c) => ("UPPER_BOUND", c),
    };
    FlatRecord {
        protocol: r.protocol,
        n: r.n,
        objective: r.objective,
        compaction: r.compaction,
        t: r.t,
        l: r.l,
        t_lb: r.t_lb,
        t_ub: r.t_ub,
        l_kind,
        l_value,
        conformance: r.conformance,
        in_scope: r.in_scope,
        violations: r.violations,
    }
}

fn cmd_table(ns: &[usize], options: RunOptions, format: Format, out: &mut dyn Write) -> CmdResult {
    let rows = comparison_table(ns, &Protocol::ALL, options)?;
    match format {
        Format::Csv => out.write_all(to_csv(&rows).as_bytes())?,
        Format::Json => {
            for row in &rows {
                writeln!(out, "{}", serde_json::to_string(row)?)?;
            }
        }
        Format::Table => out.write_all(to_markdown(&rows).as_bytes())?,
    }
    Ok(EXIT_OK)
}

fn cmd_validate(
    path: PathBuf,
    n: usize,
    objective: Objective,
    t: usize,
    l: usize,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let file = match File::open(&path) {
        Ok(f) => f,
        Err(e) => {
            writeln!(err, "error: cannot read {}: {e}", path.display())?;
            return Ok(EXIT_INTERNAL);
        }
    };
    let trace = match read_jsonl(BufReader::new(file)) {
        Ok(trace) => trace,
        Err(e) => {
            writeln!(err, "schema error: {e}")?;
            return Ok(EXIT_INTERNAL);
        }
    };
    let violations = validate_trace(&trace, n, objective, Claim { t, l });
    for v in &violations {
        writeln!(out, "{v}")?;
    }
    if violations.is_empty() {
        writeln!(out, "ok: {} slots, T={t}, L={l}", trace.len())?;
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_FAIL)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("cyclenc").chain(args.iter().copied());
        let code = main_with(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn run_nc_gaming_n5() {
        let (code, out, _) = call(&["run", "--protocol", "nc-gaming", "--n", "5"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("T = 7"));
        assert!(out.contains("L = 12"));
        assert!(out.contains("PASS"));
    }

    #[test]
    fn n_below_two_is_usage_error() {
        let (code, _, err) = call(&["run", "--protocol", "routing", "--n", "1"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("at least 2"));
        assert_eq!(
            call(&["run", "--protocol", "bogus", "--n", "5"]).0,
            EXIT_USAGE
        );
    }

    #[test]
    fn json_record() {
        let (code, out, _) = call(&[
            "run",
            "--protocol",
            "routing",
            "--n",
            "7",
            "--format",
            "json",
        ]);
        assert_eq!(code, EXIT_OK);
        let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
        assert_eq!(v["L"], 23);
        let t = v["T"].as_u64().unwrap();
        assert!((12..=15).contains(&t));
    }

    #[test]
    fn cross_combination_is_marked() {
        let (code, out, _) = call(&[
            "run",
            "--protocol",
            "nc-multicast",
            "--n",
            "6",
            "--objective",
            "gaming",
        ]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("out of scope"));
    }

    #[test]
    fn csv_sweep() {
        let (code, out, _) = call(&[
            "run",
            "--protocol",
            "routing",
            "--n",
            "4,5,6",
            "--format",
            "csv",
        ]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.lines().count(), 4);
    }

    #[test]
    fn table_degenerate_and_deterministic() {
        let (code, a, _) = call(&["table", "--n", "2"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(a.lines().filter(|l| l.starts_with("| 2 |")).count(), 4);
        assert_eq!(call(&["table", "--n", "2"]).1, a);
    }
}
