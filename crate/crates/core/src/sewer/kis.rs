//! KIS-lite: the line-oriented ASCII sewer database.
//!
//! ```text
//! MANHOLE <Mid> DIAM_CM <float> RECOVERABLE <0|1>
//! PORT <Mid> <idx> PIPE <Pid> ANGLE_DEG <float> INVERT_CM <float>
//! PIPE <Pid> LEN_CM <float> DIAM_CM <float>
//! ```
//!
//! `#` starts a comment, blank lines are ignored, records may appear in any
//! order. Pipe endpoints are inferred from the PORT records naming the pipe.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use super::{Endpoint, Manhole, ManholeId, Pipe, PipeId, Port, PortIndex, SewerGraph};

const HEADER: &str = "# KIS-lite sewer database\n";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KisError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: reference to undeclared {id}")]
    Dangling { line: usize, id: String },
    #[error("line {line}: duplicate {id}")]
    Duplicate { line: usize, id: String },
    #[error("line {line}: ports of {manhole} are not numbered 1..k in bearing order")]
    NonCanonicalPorts { line: usize, manhole: ManholeId },
    #[error("line {line}: {pipe} has more than two endpoints")]
    TooManyEndpoints { line: usize, pipe: PipeId },
    #[error("line {line}: {pipe} enters {manhole} twice")]
    SelfLoop {
        line: usize,
        pipe: PipeId,
        manhole: ManholeId,
    },
    #[error("line {line}: {manhole} has no ports")]
    NoPorts { line: usize, manhole: ManholeId },
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

struct Record<'a> {
    line: usize,
    tokens: Vec<Token<'a>>,
}

impl<'a> Record<'a> {
    fn syntax(&self, column: usize, message: impl Into<String>) -> KisError {
        KisError::Syntax {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn end_column(&self) -> usize {
        self.tokens
            .last()
            .map_or(1, |t| t.column + t.text.len())
    }

    fn expect_len(&self, n: usize) -> Result<(), KisError> {
        match self.tokens.len().cmp(&n) {
            std::cmp::Ordering::Equal => Ok(()),
            std::cmp::Ordering::Less => Err(self.syntax(self.end_column(), "record is truncated")),
            std::cmp::Ordering::Greater => {
                Err(self.syntax(self.tokens[n].column, "unexpected trailing token"))
            }
        }
    }

    fn keyword(&self, i: usize, word: &str) -> Result<(), KisError> {
        let t = &self.tokens[i];
        if t.text == word {
            Ok(())
        } else {
            Err(self.syntax(t.column, format!("expected `{word}`, found `{}`", t.text)))
        }
    }

    fn parse<T: FromStr>(&self, i: usize, what: &str) -> Result<T, KisError> {
        let t = &self.tokens[i];
        t.text
            .parse()
            .map_err(|_| self.syntax(t.column, format!("expected {what}, found `{}`", t.text)))
    }

    fn real(&self, i: usize, valid: impl Fn(f64) -> bool, what: &str) -> Result<f64, KisError> {
        let v: f64 = self.parse(i, "a number")?;
        if v.is_finite() && valid(v) {
            Ok(v)
        } else {
            Err(self.syntax(self.tokens[i].column, format!("{what} out of range")))
        }
    }
}

fn records(text: &str) -> impl Iterator<Item = Record<'_>> {
    text.lines().enumerate().filter_map(|(n, raw)| {
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = Vec::new();
        let mut start = None;
        for (i, c) in content.char_indices() {
            match (c.is_ascii_whitespace(), start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    tokens.push(Token { text: &content[s..i], column: s + 1 });
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            tokens.push(Token { text: &content[s..], column: s + 1 });
        }
        (!tokens.is_empty()).then_some(Record { line: n + 1, tokens })
    })
}

struct PortRecord {
    line: usize,
    manhole: ManholeId,
    port: Port,
}

/// Parses a KIS-lite document into a validated [`SewerGraph`].
pub fn parse_kis(text: &str) -> Result<SewerGraph, KisError> {
    let mut manholes: BTreeMap<ManholeId, (usize, Manhole)> = BTreeMap::new();
    let mut pipes: BTreeMap<PipeId, (usize, Pipe)> = BTreeMap::new();
    let mut ports: Vec<PortRecord> = Vec::new();

    for rec in records(text) {
        match rec.tokens[0].text {
            "MANHOLE" => {
                rec.expect_len(6)?;
                let id: ManholeId = rec.parse(1, "a manhole id")?;
                rec.keyword(2, "DIAM_CM")?;
                let diameter_cm = rec.real(3, |v| v > 0.0, "manhole diameter")?;
                rec.keyword(4, "RECOVERABLE")?;
                let recoverable = match rec.tokens[5].text {
                    "0" => false,
                    "1" => true,
                    other => {
                        return Err(rec.syntax(
                            rec.tokens[5].column,
                            format!("expected 0 or 1, found `{other}`"),
                        ))
                    }
                };
                let m = Manhole { id, diameter_cm, ports: Vec::new(), recoverable };
                match manholes.entry(id) {
                    Entry::Occupied(_) => {
                        return Err(KisError::Duplicate { line: rec.line, id: id.to_string() })
                    }
                    Entry::Vacant(v) => {
                        v.insert((rec.line, m));
                    }
                }
            }
            "PORT" => {
                rec.expect_len(9)?;
                let manhole: ManholeId = rec.parse(1, "a manhole id")?;
                let index: PortIndex = rec.parse(2, "a port index")?;
                if index == 0 {
                    return Err(rec.syntax(rec.tokens[2].column, "port indices start at 1"));
                }
                rec.keyword(3, "PIPE")?;
                let pipe: PipeId = rec.parse(4, "a pipe id")?;
                rec.keyword(5, "ANGLE_DEG")?;
                let angle_deg = rec.real(6, |v| (0.0..360.0).contains(&v), "bearing")?;
                rec.keyword(7, "INVERT_CM")?;
                let invert_offset_cm = rec.real(8, |v| v >= 0.0, "invert offset")?;
                ports.push(PortRecord {
                    line: rec.line,
                    manhole,
                    port: Port { index, pipe, angle_deg, invert_offset_cm },
                });
            }
            "PIPE" => {
                rec.expect_len(6)?;
                let id: PipeId = rec.parse(1, "a pipe id")?;
                rec.keyword(2, "LEN_CM")?;
                let length_cm = rec.real(3, |v| v > 0.0, "pipe length")?;
                rec.keyword(4, "DIAM_CM")?;
                let diameter_cm = rec.real(5, |v| (30.0..=60.0).contains(&v), "pipe diameter")?;
                let p = Pipe { id, length_cm, diameter_cm, endpoints: Vec::new() };
                match pipes.entry(id) {
                    Entry::Occupied(_) => {
                        return Err(KisError::Duplicate { line: rec.line, id: id.to_string() })
                    }
                    Entry::Vacant(v) => {
                        v.insert((rec.line, p));
                    }
                }
            }
            other => {
                return Err(rec.syntax(rec.tokens[0].column, format!("unknown record `{other}`")))
            }
        }
    }

    for pr in &ports {
        let Some((_, m)) = manholes.get_mut(&pr.manhole) else {
            return Err(KisError::Dangling { line: pr.line, id: pr.manhole.to_string() });
        };
        let Some((_, pipe)) = pipes.get_mut(&pr.port.pipe) else {
            return Err(KisError::Dangling { line: pr.line, id: pr.port.pipe.to_string() });
        };
        if m.ports.iter().any(|p| p.index == pr.port.index) {
            return Err(KisError::Duplicate {
                line: pr.line,
                id: format!("{} port {}", pr.manhole, pr.port.index),
            });
        }
        if pipe.touches(pr.manhole) {
            return Err(KisError::SelfLoop { line: pr.line, pipe: pipe.id, manhole: pr.manhole });
        }
        if pipe.endpoints.len() == 2 {
            return Err(KisError::TooManyEndpoints { line: pr.line, pipe: pipe.id });
        }
        pipe.endpoints.push(Endpoint { manhole: pr.manhole, port: pr.port.index });
        pipe.endpoints.sort();
        m.ports.push(pr.port.clone());
    }

    for (line, m) in manholes.values_mut() {
        if m.ports.is_empty() {
            return Err(KisError::NoPorts { line: *line, manhole: m.id });
        }
        m.ports.sort_by_key(|p| p.index);
        let canonical = m.ports.iter().enumerate().all(|(i, p)| p.index as usize == i + 1)
            && m.ports.windows(2).all(|w| w[0].angle_deg < w[1].angle_deg);
        if !canonical {
            return Err(KisError::NonCanonicalPorts { line: *line, manhole: m.id });
        }
    }

    Ok(SewerGraph {
        manholes: manholes.into_iter().map(|(id, (_, m))| (id, m)).collect(),
        pipes: pipes.into_iter().map(|(id, (_, p))| (id, p)).collect(),
    })
}

/// Renders a graph in canonical order: manholes (each followed by its ports),
/// then pipes, both by numeric id.
pub fn serialize_kis(g: &SewerGraph) -> String {
    let mut out = String::from(HEADER);
    for m in g.manholes.values() {
        let _ = writeln!(
            out,
            "MANHOLE {} DIAM_CM {} RECOVERABLE {}",
            m.id,
            m.diameter_cm,
            u8::from(m.recoverable)
        );
        for p in &m.ports {
            let _ = writeln!(
                out,
                "PORT {} {} PIPE {} ANGLE_DEG {} INVERT_CM {}",
                m.id, p.index, p.pipe, p.angle_deg, p.invert_offset_cm
            );
        }
    }
    for p in g.pipes.values() {
        let _ = writeln!(out, "PIPE {} LEN_CM {} DIAM_CM {}", p.id, p.length_cm, p.diameter_cm);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const JUNCTION: &str = "\
MANHOLE M6 DIAM_CM 120 RECOVERABLE 1
PORT M6 1 PIPE P10 ANGLE_DEG 0 INVERT_CM 0
PORT M6 2 PIPE P4 ANGLE_DEG 90 INVERT_CM 0
PORT M6 3 PIPE P5 ANGLE_DEG 180 INVERT_CM 0
PORT M6 4 PIPE P6 ANGLE_DEG 270 INVERT_CM 0
PIPE P10 LEN_CM 550 DIAM_CM 60
PIPE P4 LEN_CM 700 DIAM_CM 60
PIPE P5 LEN_CM 1000 DIAM_CM 60
PIPE P6 LEN_CM 300 DIAM_CM 30
";

    #[test]
    fn four_port_manhole() {
        let g = parse_kis(JUNCTION).unwrap();
        let m6 = g.manhole(ManholeId(6)).unwrap();
        assert_eq!(m6.degree(), 4);
        let pipes: Vec<_> = m6.ports.iter().map(|p| p.pipe.to_string()).collect();
        assert_eq!(pipes, ["P10", "P4", "P5", "P6"]);
        assert_eq!(super::super::manhole_type_designator(m6), "TYPE_4");
        g.validate().unwrap();
    }

    #[test]
    fn empty_document() {
        assert_eq!(parse_kis("").unwrap(), SewerGraph::default());
        assert_eq!(parse_kis("# nothing\n\n   \n").unwrap(), SewerGraph::default());
        assert_eq!(serialize_kis(&SewerGraph::default()), HEADER);
    }

    #[test]
    fn dangling_pipe_names_pipe_and_line() {
        let doc = "MANHOLE M1 DIAM_CM 100 RECOVERABLE 1\nPORT M1 1 PIPE P99 ANGLE_DEG 0 INVERT_CM 0\n";
        let err = parse_kis(doc).unwrap_err();
        assert_eq!(err, KisError::Dangling { line: 2, id: "P99".into() });
        assert!(err.to_string().contains("P99"));
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn syntax_error_is_positioned() {
        let doc = "PIPE P1 LEN_CM abc DIAM_CM 60\n";
        match parse_kis(doc).unwrap_err() {
            KisError::Syntax { line, column, .. } => assert_eq!((line, column), (1, 16)),
            e => panic!("unexpected {e:?}"),
        }
        let doc = "\n  PIPE P1 LEN_CM 10 DIAM_CM\n";
        match parse_kis(doc).unwrap_err() {
            KisError::Syntax { line, column, .. } => assert_eq!((line, column), (2, 28)),
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(parse_kis("VALVE V1\n"), Err(KisError::Syntax { column: 1, .. })));
    }

    #[test]
    fn duplicates_rejected() {
        let doc = "PIPE P1 LEN_CM 10 DIAM_CM 60\nPIPE P1 LEN_CM 10 DIAM_CM 60\n";
        assert_eq!(
            parse_kis(doc).unwrap_err(),
            KisError::Duplicate { line: 2, id: "P1".into() }
        );
    }

    #[test]
    fn ports_must_follow_bearing_order() {
        let doc = "\
MANHOLE M1 DIAM_CM 100 RECOVERABLE 1
PORT M1 1 PIPE P1 ANGLE_DEG 180 INVERT_CM 0
PORT M1 2 PIPE P2 ANGLE_DEG 0 INVERT_CM 0
PIPE P1 LEN_CM 10 DIAM_CM 60
PIPE P2 LEN_CM 10 DIAM_CM 60
";
        assert!(matches!(parse_kis(doc), Err(KisError::NonCanonicalPorts { line: 1, .. })));
        let gap = doc.replace("PORT M1 2", "PORT M1 3").replace("ANGLE_DEG 180", "ANGLE_DEG 10");
        assert!(matches!(parse_kis(&gap), Err(KisError::NonCanonicalPorts { .. })));
    }

    #[test]
    fn third_endpoint_rejected() {
        let mut doc = String::new();
        for m in 1..=3 {
            doc += &format!("MANHOLE M{m} DIAM_CM 100 RECOVERABLE 1\n");
            doc += &format!("PORT M{m} 1 PIPE P1 ANGLE_DEG 0 INVERT_CM 0\n");
        }
        doc += "PIPE P1 LEN_CM 10 DIAM_CM 60\n";
        assert!(matches!(parse_kis(&doc), Err(KisError::TooManyEndpoints { line: 6, .. })));
    }

    #[test]
    fn stub_round_trip() {
        let doc = "\
MANHOLE M1 DIAM_CM 100 RECOVERABLE 0
PORT M1 1 PIPE P1 ANGLE_DEG 12.5 INVERT_CM 3.25
PIPE P1 LEN_CM 250 DIAM_CM 40
";
        let g = parse_kis(doc).unwrap();
        let text = serialize_kis(&g);
        assert_eq!(text.lines().filter(|l| l.starts_with("MANHOLE")).count(), 1);
        assert_eq!(text.lines().filter(|l| l.starts_with("PIPE")).count(), 1);
        assert_eq!(parse_kis(&text).unwrap(), g);
    }

    #[test]
    fn range_checks() {
        assert!(parse_kis("PIPE P1 LEN_CM 0 DIAM_CM 60\n").is_err());
        assert!(parse_kis("PIPE P1 LEN_CM 10 DIAM_CM 61\n").is_err());
        assert!(parse_kis("PIPE P1 LEN_CM NaN DIAM_CM 40\n").is_err());
        assert!(parse_kis("MANHOLE M1 DIAM_CM 100 RECOVERABLE 2\n").is_err());
    }
}
