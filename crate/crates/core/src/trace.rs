//! Line-oriented run journal.
//!
//! A trace interleaves data records (changes to `D`, Lachlan entries,
//! axioms, c.e. journal entries) with `EVT` records naming the strategy
//! item each node fired. Every line has a fixed field order; the verifier
//! re-derives all of its checks from these lines alone.
//!
//! ```text
//! HDR maxDepth horizon seed digest
//! STG stage
//! CHG stage element Enumerate|Extract
//! LCH stage code element first_stage
//! AXM role index segment input output stage
//! CEJ journal element stage
//! DRP stage index reason…
//! EVT stage node epoch ITEM payload…
//! ```
//!
//! Segments are written sparsely as `len:p1,p2,…` (`len:-` when empty).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::functional::{JournalId, Role};
use crate::sets::{BinarySegment, ChangeEvent, ChangeKind, LachlanEntry};

/// What an agitator handled during `N4` ended up as.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgitatorAction {
    Enumerated,
    Undefined,
    Kept,
}

impl fmt::Display for AgitatorAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgitatorAction::Enumerated => "enumerate",
            AgitatorAction::Undefined => "undefine",
            AgitatorAction::Kept => "keep",
        })
    }
}

impl FromStr for AgitatorAction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "enumerate" => Ok(AgitatorAction::Enumerated),
            "undefine" => Ok(AgitatorAction::Undefined),
            "keep" => Ok(AgitatorAction::Kept),
            other => Err(format!("unknown agitator action `{other}`")),
        }
    }
}

/// One fired strategy item (or bookkeeping event) of a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    /// Agreement length seen at the start of an N/R action.
    Ell {
        ell: Option<u64>,
        expansionary: bool,
    },
    P1,
    P2 {
        witness: u64,
    },
    P3 {
        witness: u64,
    },
    P4 {
        witness: u64,
        use_: u64,
    },
    P5 {
        witness: u64,
        use_: u64,
    },
    R1,
    R2Extract {
        x: u64,
        agitator: u64,
    },
    R2Keep {
        x: u64,
        agitator: u64,
    },
    R2Undefine {
        from: u64,
    },
    /// Enumerate `d_{e,x}` because `Γ(x)` disagrees with `K`.
    R3 {
        x: u64,
        agitator: u64,
    },
    R3a {
        x: u64,
    },
    R3b {
        x: u64,
        agitator: u64,
    },
    R3c {
        x: u64,
        agitator: u64,
        use_: u64,
    },
    /// The node finished extending `Γ`.
    R3End {
        ell: u64,
    },
    C1,
    C2a {
        x: u64,
    },
    C2ai {
        y: u64,
        value: bool,
        use_: u64,
    },
    C2aii {
        y: u64,
        value: bool,
        use_: u64,
        psi_use: u64,
    },
    C2aSkip {
        y: u64,
    },
    C2aEnd,
    C2b {
        x: u64,
        sigma: BinarySegment,
    },
    N1 {
        i: u64,
        x: u64,
        agitator: u64,
    },
    N2 {
        k: u64,
    },
    N3 {
        k: u64,
        restored: bool,
    },
    /// Cycle `k` finished but `D` can no longer return to `dc(k)`.
    N3Cancel {
        k: u64,
    },
    N4 {
        k: u64,
    },
    N4Agitator {
        i: u64,
        agitator: u64,
        action: AgitatorAction,
    },
    N4Phase2 {
        k: u64,
        count: u64,
        dstars: Vec<(u64, u64)>,
    },
    /// An N-node extracted an R-agitator while restoring.
    RestoreExtract {
        owner: u64,
        x: u64,
        agitator: u64,
    },
    Init {
        by: u64,
    },
    Anomaly {
        what: String,
    },
    Continue,
    Stop,
}

fn opt(v: Option<u64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

fn bit(b: bool) -> u8 {
    b as u8
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Ell { ell, expansionary } => {
                write!(f, "ELL {} {}", opt(*ell), bit(*expansionary))
            }
            Item::P1 => f.write_str("P1"),
            Item::P2 { witness } => write!(f, "P2 {witness}"),
            Item::P3 { witness } => write!(f, "P3 {witness}"),
            Item::P4 { witness, use_ } => write!(f, "P4 {witness} {use_}"),
            Item::P5 { witness, use_ } => write!(f, "P5 {witness} {use_}"),
            Item::R1 => f.write_str("R1"),
            Item::R2Extract { x, agitator } => write!(f, "R2 extract {x} {agitator}"),
            Item::R2Keep { x, agitator } => write!(f, "R2 keep {x} {agitator}"),
            Item::R2Undefine { from } => write!(f, "R2 undefine {from}"),
            Item::R3 { x, agitator } => write!(f, "R3 {x} {agitator}"),
            Item::R3a { x } => write!(f, "R3a {x}"),
            Item::R3b { x, agitator } => write!(f, "R3b {x} {agitator}"),
            Item::R3c { x, agitator, use_ } => write!(f, "R3c {x} {agitator} {use_}"),
            Item::R3End { ell } => write!(f, "R3end {ell}"),
            Item::C1 => f.write_str("C1"),
            Item::C2a { x } => write!(f, "C2a {x}"),
            Item::C2ai { y, value, use_ } => write!(f, "C2ai {y} {} {use_}", bit(*value)),
            Item::C2aii {
                y,
                value,
                use_,
                psi_use,
            } => write!(f, "C2aii {y} {} {use_} {psi_use}", bit(*value)),
            Item::C2aSkip { y } => write!(f, "C2askip {y}"),
            Item::C2aEnd => f.write_str("C2aend"),
            Item::C2b { x, sigma } => write!(f, "C2b {x} {sigma}"),
            Item::N1 { i, x, agitator } => write!(f, "N1 {i} {x} {agitator}"),
            Item::N2 { k } => write!(f, "N2 {k}"),
            Item::N3 { k, restored } => write!(f, "N3 {k} {}", bit(*restored)),
            Item::N3Cancel { k } => write!(f, "N3cancel {k}"),
            Item::N4 { k } => write!(f, "N4 {k}"),
            Item::N4Agitator {
                i,
                agitator,
                action,
            } => write!(f, "N4agit {i} {agitator} {action}"),
            Item::N4Phase2 { k, count, dstars } => {
                write!(f, "N4phase2 {k} {count}")?;
                if dstars.is_empty() {
                    f.write_str(" -")
                } else {
                    let list: Vec<String> =
                        dstars.iter().map(|(i, d)| format!("{i}:{d}")).collect();
                    write!(f, " {}", list.join(","))
                }
            }
            Item::RestoreExtract { owner, x, agitator } => write!(f, "RXA {owner} {x} {agitator}"),
            Item::Init { by } => write!(f, "INIT {by}"),
            Item::Anomaly { what } => write!(f, "ANOM {what}"),
            Item::Continue => f.write_str("CONT"),
            Item::Stop => f.write_str("STOP"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub stage: u64,
    pub node: u64,
    pub epoch: u64,
    pub item: Item,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Record {
    Header {
        max_depth: u64,
        horizon: u64,
        seed: u64,
        digest: String,
    },
    Stage(u64),
    Change(ChangeEvent),
    Lachlan(LachlanEntry),
    Axiom {
        role: Role,
        index: u64,
        segment: BinarySegment,
        input: u64,
        output: bool,
        stage: u64,
    },
    Journal {
        id: JournalId,
        element: u64,
        stage: u64,
    },
    Dropped {
        stage: u64,
        index: u64,
        reason: String,
    },
    Event(Event),
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Record::Header {
                max_depth,
                horizon,
                seed,
                digest,
            } => write!(f, "HDR {max_depth} {horizon} {seed} {digest}"),
            Record::Stage(s) => write!(f, "STG {s}"),
            Record::Change(c) => c.fmt(f),
            Record::Lachlan(l) => l.fmt(f),
            Record::Axiom {
                role,
                index,
                segment,
                input,
                output,
                stage,
            } => write!(
                f,
                "AXM {role} {index} {segment} {input} {} {stage}",
                bit(*output)
            ),
            Record::Journal { id, element, stage } => write!(f, "CEJ {id} {element} {stage}"),
            Record::Dropped {
                stage,
                index,
                reason,
            } => write!(f, "DRP {stage} {index} {reason}"),
            Record::Event(ev) => write!(f, "EVT {} {} {} {}", ev.stage, ev.node, ev.epoch, ev.item),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

struct Fields<'a> {
    parts: std::str::SplitWhitespace<'a>,
}

impl<'a> Fields<'a> {
    fn next(&mut self) -> Result<&'a str, String> {
        self.parts.next().ok_or_else(|| "missing field".to_string())
    }

    fn num(&mut self) -> Result<u64, String> {
        let t = self.next()?;
        t.parse()
            .map_err(|_| format!("expected a number, got `{t}`"))
    }

    fn opt_num(&mut self) -> Result<Option<u64>, String> {
        match self.next()? {
            "-" => Ok(None),
            t => t
                .parse()
                .map(Some)
                .map_err(|_| format!("expected a number or `-`, got `{t}`")),
        }
    }

    fn bit(&mut self) -> Result<bool, String> {
        match self.next()? {
            "0" => Ok(false),
            "1" => Ok(true),
            t => Err(format!("expected a bit, got `{t}`")),
        }
    }

    fn segment(&mut self) -> Result<BinarySegment, String> {
        let t = self.next()?;
        BinarySegment::parse_sparse(t).ok_or_else(|| format!("bad segment `{t}`"))
    }

    fn parsed<T: FromStr<Err = String>>(&mut self) -> Result<T, String> {
        self.next()?.parse()
    }

    fn rest(&mut self) -> String {
        self.parts.by_ref().collect::<Vec<_>>().join(" ")
    }

    fn done(mut self) -> Result<(), String> {
        match self.parts.next() {
            None => Ok(()),
            Some(t) => Err(format!("trailing field `{t}`")),
        }
    }
}

fn parse_item(f: &mut Fields<'_>) -> Result<Item, String> {
    let tag = f.next()?;
    Ok(match tag {
        "ELL" => Item::Ell {
            ell: f.opt_num()?,
            expansionary: f.bit()?,
        },
        "P1" => Item::P1,
        "P2" => Item::P2 { witness: f.num()? },
        "P3" => Item::P3 { witness: f.num()? },
        "P4" => Item::P4 {
            witness: f.num()?,
            use_: f.num()?,
        },
        "P5" => Item::P5 {
            witness: f.num()?,
            use_: f.num()?,
        },
        "R1" => Item::R1,
        "R2" => match f.next()? {
            "extract" => Item::R2Extract {
                x: f.num()?,
                agitator: f.num()?,
            },
            "keep" => Item::R2Keep {
                x: f.num()?,
                agitator: f.num()?,
            },
            "undefine" => Item::R2Undefine { from: f.num()? },
            other => return Err(format!("unknown R2 form `{other}`")),
        },
        "R3" => Item::R3 {
            x: f.num()?,
            agitator: f.num()?,
        },
        "R3a" => Item::R3a { x: f.num()? },
        "R3b" => Item::R3b {
            x: f.num()?,
            agitator: f.num()?,
        },
        "R3c" => Item::R3c {
            x: f.num()?,
            agitator: f.num()?,
            use_: f.num()?,
        },
        "R3end" => Item::R3End { ell: f.num()? },
        "C1" => Item::C1,
        "C2a" => Item::C2a { x: f.num()? },
        "C2ai" => Item::C2ai {
            y: f.num()?,
            value: f.bit()?,
            use_: f.num()?,
        },
        "C2aii" => Item::C2aii {
            y: f.num()?,
            value: f.bit()?,
            use_: f.num()?,
            psi_use: f.num()?,
        },
        "C2askip" => Item::C2aSkip { y: f.num()? },
        "C2aend" => Item::C2aEnd,
        "C2b" => Item::C2b {
            x: f.num()?,
            sigma: f.segment()?,
        },
        "N1" => Item::N1 {
            i: f.num()?,
            x: f.num()?,
            agitator: f.num()?,
        },
        "N2" => Item::N2 { k: f.num()? },
        "N3" => Item::N3 {
            k: f.num()?,
            restored: f.bit()?,
        },
        "N3cancel" => Item::N3Cancel { k: f.num()? },
        "N4" => Item::N4 { k: f.num()? },
        "N4agit" => Item::N4Agitator {
            i: f.num()?,
            agitator: f.num()?,
            action: f.parsed()?,
        },
        "N4phase2" => {
            let k = f.num()?;
            let count = f.num()?;
            let list = f.next()?;
            let dstars = if list == "-" {
                Vec::new()
            } else {
                list.split(',')
                    .map(|p| {
                        let (i, d) = p.split_once(':')?;
                        Some((i.parse().ok()?, d.parse().ok()?))
                    })
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| format!("bad d* list `{list}`"))?
            };
            Item::N4Phase2 { k, count, dstars }
        }
        "RXA" => Item::RestoreExtract {
            owner: f.num()?,
            x: f.num()?,
            agitator: f.num()?,
        },
        "INIT" => Item::Init { by: f.num()? },
        "ANOM" => Item::Anomaly { what: f.rest() },
        "CONT" => Item::Continue,
        "STOP" => Item::Stop,
        other => return Err(format!("unknown item tag `{other}`")),
    })
}

impl FromStr for Record {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let mut f = Fields {
            parts: line.split_whitespace(),
        };
        let rec = match f.next()? {
            "HDR" => Record::Header {
                max_depth: f.num()?,
                horizon: f.num()?,
                seed: f.num()?,
                digest: f.next()?.to_string(),
            },
            "STG" => Record::Stage(f.num()?),
            "CHG" => Record::Change(ChangeEvent {
                stage: f.num()?,
                element: f.num()?,
                kind: f.parsed::<ChangeKind>()?,
            }),
            "LCH" => Record::Lachlan(LachlanEntry {
                stage: f.num()?,
                code: f.num()?,
                element: f.num()?,
                first_stage: f.num()?,
            }),
            "AXM" => Record::Axiom {
                role: f.parsed()?,
                index: f.num()?,
                segment: f.segment()?,
                input: f.num()?,
                output: f.bit()?,
                stage: f.num()?,
            },
            "CEJ" => Record::Journal {
                id: f.parsed()?,
                element: f.num()?,
                stage: f.num()?,
            },
            "DRP" => {
                let stage = f.num()?;
                let index = f.num()?;
                return Ok(Record::Dropped {
                    stage,
                    index,
                    reason: f.rest(),
                });
            }
            "EVT" => {
                let stage = f.num()?;
                let node = f.num()?;
                let epoch = f.num()?;
                let item = parse_item(&mut f)?;
                Record::Event(Event {
                    stage,
                    node,
                    epoch,
                    item,
                })
            }
            other => return Err(format!("unknown record tag `{other}`")),
        };
        f.done()?;
        Ok(rec)
    }
}

/// An in-memory trace.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub records: Vec<Record>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: Record) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.records.iter().filter_map(|r| match r {
            Record::Event(e) => Some(e),
            _ => None,
        })
    }

    /// Writes one record per line.
    pub fn write_to(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        for r in &self.records {
            writeln!(out, "{r}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("trace lines are ASCII")
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let records = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                l.parse().map_err(|message| ParseError {
                    line: i + 1,
                    message,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_round_trip() {
        let lines = [
            "HDR 9 100 7 abcd",
            "STG 3",
            "CHG 3 5 Enumerate",
            "LCH 7 39 5 3",
            "AXM Psi 0 4:1,3 2 1 6",
            "CEJ K 3 9",
            "CEJ 2 0 9",
            "DRP 4 1 inconsistent Phi 3",
            "EVT 4 1 0 ELL - 0",
            "EVT 4 1 0 R2 extract 2 17",
            "EVT 4 3 1 C2b 0 6:-",
            "EVT 4 3 1 N4phase2 0 1 0:17,1:40",
            "EVT 4 3 1 N4phase2 0 1 -",
            "EVT 4 3 1 N4agit 0 17 enumerate",
            "EVT 4 2 0 ANOM something odd happened",
            "EVT 4 2 0 STOP",
        ];
        for l in lines {
            let rec: Record = l.parse().unwrap_or_else(|e| panic!("{l}: {e}"));
            assert_eq!(rec.to_string(), l);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!("EVT 1 2".parse::<Record>().is_err());
        assert!("STG 1 2".parse::<Record>().is_err());
        assert!("FOO".parse::<Record>().is_err());
        let err = Trace::parse("STG 1\nCHG x 1 Enumerate\n").unwrap_err();
        assert_eq!(err.line, 2);
    }
}
