//! Slot records, one JSON object per line.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::packet::CodedPacket;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Delivered,
    Collision,
    HalfDuplexBusy,
    Silence,
    /// Heard from a single neighbour but addressed elsewhere, so not kept.
    Discarded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transmission {
    pub node: usize,
    pub packet: CodedPacket,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub node: usize,
    pub kind: OutcomeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packet: Option<CodedPacket>,
}

impl Outcome {
    pub fn bare(node: usize, kind: OutcomeKind) -> Self {
        Self {
            node,
            kind,
            from: None,
            packet: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotEvent {
    /// 1-based counted slot index.
    pub slot: usize,
    pub round: usize,
    /// 1-based position of the slot inside its round.
    pub subset_slot: usize,
    /// Sorted by node.
    pub transmitters: Vec<Transmission>,
    /// One per node, sorted by node.
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Schema {
        line: usize,
        source: serde_json::Error,
    },
}

pub fn write_jsonl<W: Write>(events: &[SlotEvent], mut out: W) -> io::Result<()> {
    for event in events {
        serde_json::to_writer(&mut out, event)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_jsonl(events: &[SlotEvent]) -> String {
    let mut buf = Vec::new();
    write_jsonl(events, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Reads records, skipping blank lines.
pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<SlotEvent>, TraceError> {
    let mut events = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).map_err(|source| TraceError::Schema {
            line: k + 1,
            source,
        })?;
        events.push(event);
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_field_layout() {
        let event = SlotEvent {
            slot: 1,
            round: 0,
            subset_slot: 1,
            transmitters: vec![Transmission {
                node: 0,
                packet: CodedPacket::message(0),
            }],
            outcomes: vec![
                Outcome::bare(0, OutcomeKind::HalfDuplexBusy),
                Outcome {
                    node: 1,
                    kind: OutcomeKind::Delivered,
                    from: Some(0),
                    packet: Some(CodedPacket::from_indices([0, 2])),
                },
            ],
        };
        let line = to_jsonl(std::slice::from_ref(&event));
        assert_eq!(
            line,
            "{\"slot\":1,\"round\":0,\"subset_slot\":1,\"transmitters\":[{\"node\":0,\"packet\":[0]}],\
             \"outcomes\":[{\"node\":0,\"kind\":\"half_duplex_busy\"},\
             {\"node\":1,\"kind\":\"delivered\",\"from\":0,\"packet\":[0,2]}]}\n"
        );
        assert_eq!(read_jsonl(line.as_bytes()).unwrap(), vec![event]);
    }

    #[test]
    fn schema_errors_carry_line_numbers() {
        let err = read_jsonl("\n{\"slot\":1}\n".as_bytes()).unwrap_err();
        assert!(matches!(err, TraceError::Schema { line: 2, .. }));
    }
}
