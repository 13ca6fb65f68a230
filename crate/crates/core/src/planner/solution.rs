//! The solution file: one symbolic action per line, no quantities.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sewer::{ManholeId, PipeId, PortIndex};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SymbolicAction {
    DrivePipeToManhole {
        pipe: PipeId,
        manhole: ManholeId,
    },
    /// Cross `manhole` entering through port `from` and leaving through `to`.
    /// `pipes` lists every incident pipe in port order.
    DriveManhole {
        designator: String,
        from: PortIndex,
        to: PortIndex,
        manhole: ManholeId,
        pipes: Vec<PipeId>,
    },
    TakeWaterSample {
        pipe: PipeId,
    },
    InspectPipe {
        pipe: PipeId,
    },
}

impl SymbolicAction {
    pub fn name(&self) -> String {
        match self {
            SymbolicAction::DrivePipeToManhole { .. } => "DRIVE_PIPE_TO_MANHOLE".into(),
            SymbolicAction::DriveManhole { designator, from, to, .. } => {
                format!("DRIVE_MANHOLE_{designator}_FROM_{from}_TO_{to}")
            }
            SymbolicAction::TakeWaterSample { .. } => "TAKE_WATER_SAMPLE".into(),
            SymbolicAction::InspectPipe { .. } => "INSPECT_PIPE".into(),
        }
    }

    pub fn args(&self) -> Vec<String> {
        match self {
            SymbolicAction::DrivePipeToManhole { pipe, manhole } => {
                vec![pipe.to_string(), manhole.to_string()]
            }
            SymbolicAction::DriveManhole { manhole, pipes, .. } => std::iter::once(manhole.to_string())
                .chain(pipes.iter().map(PipeId::to_string))
                .collect(),
            SymbolicAction::TakeWaterSample { pipe } | SymbolicAction::InspectPipe { pipe } => {
                vec![pipe.to_string()]
            }
        }
    }

    /// Drives and crossings; the actions that move the robot between places.
    pub fn is_traversal(&self) -> bool {
        matches!(
            self,
            SymbolicAction::DrivePipeToManhole { .. } | SymbolicAction::DriveManhole { .. }
        )
    }
}

impl fmt::Display for SymbolicAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())?;
        for a in self.args() {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

pub type SymbolicPlan = Vec<SymbolicAction>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct SolutionError {
    pub line: usize,
    pub message: String,
}

/// Every line is newline-terminated; the empty plan renders as "".
pub fn render_solution(plan: &[SymbolicAction]) -> String {
    plan.iter().map(|a| format!("{a}\n")).collect()
}

fn parse_index(s: &str) -> Option<PortIndex> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || (s.len() > 1 && s.starts_with('0')) {
        return None;
    }
    s.parse().ok().filter(|&i| i >= 1)
}

/// Splits `TYPE_<k>[_TYPE_<L>]_FROM_<i>_TO_<j>` into (designator, k, i, j).
fn parse_crossing(rest: &str) -> Option<(String, usize, PortIndex, PortIndex)> {
    let (designator, ports) = rest.split_once("_FROM_")?;
    let (from, to) = ports.split_once("_TO_")?;
    let body = designator.strip_prefix("TYPE_")?;
    let (k, letter) = match body.split_once("_TYPE_") {
        Some((k, l)) => (k, Some(l)),
        None => (body, None),
    };
    let k = parse_index(k)? as usize;
    if let Some(l) = letter {
        if l.is_empty() || !l.bytes().all(|b| b.is_ascii_uppercase()) {
            return None;
        }
    }
    Some((designator.to_string(), k, parse_index(from)?, parse_index(to)?))
}

pub fn parse_solution(text: &str) -> Result<SymbolicPlan, SolutionError> {
    let mut plan = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let err = |message: String| SolutionError { line: n + 1, message };
        let mut tokens = line.split(' ');
        let name = tokens.next().unwrap_or("");
        let args: Vec<&str> = tokens.collect();
        if args.iter().any(|a| a.is_empty()) || name.is_empty() {
            return Err(err("tokens must be separated by single spaces".into()));
        }
        let pipe = |s: &str| s.parse::<PipeId>().map_err(|e| err(e.to_string()));
        let manhole = |s: &str| s.parse::<ManholeId>().map_err(|e| err(e.to_string()));
        let arity = |want: usize| {
            if args.len() == want {
                Ok(())
            } else {
                Err(err(format!("{name} takes {want} arguments, got {}", args.len())))
            }
        };
        let action = match name {
            "DRIVE_PIPE_TO_MANHOLE" => {
                arity(2)?;
                SymbolicAction::DrivePipeToManhole { pipe: pipe(args[0])?, manhole: manhole(args[1])? }
            }
            "TAKE_WATER_SAMPLE" => {
                arity(1)?;
                SymbolicAction::TakeWaterSample { pipe: pipe(args[0])? }
            }
            "INSPECT_PIPE" => {
                arity(1)?;
                SymbolicAction::InspectPipe { pipe: pipe(args[0])? }
            }
            _ => {
                let Some((designator, k, from, to)) = name
                    .strip_prefix("DRIVE_MANHOLE_")
                    .and_then(parse_crossing)
                else {
                    return Err(err(format!("unknown action `{name}`")));
                };
                arity(k + 1)?;
                if from as usize > k || to as usize > k || from == to {
                    return Err(err(format!("ports {from}->{to} invalid for a {k}-port manhole")));
                }
                SymbolicAction::DriveManhole {
                    designator,
                    from,
                    to,
                    manhole: manhole(args[0])?,
                    pipes: args[1..].iter().map(|a| pipe(a)).collect::<Result<_, _>>()?,
                }
            }
        };
        plan.push(action);
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_line_listing() {
        let text = "DRIVE_MANHOLE_TYPE_4_FROM_3_TO_4 M6 P10 P4 P5 P6\nTAKE_WATER_SAMPLE P6";
        let plan = parse_solution(text).unwrap();
        assert_eq!(plan.len(), 2);
        assert_eq!(
            plan[0],
            SymbolicAction::DriveManhole {
                designator: "TYPE_4".into(),
                from: 3,
                to: 4,
                manhole: ManholeId(6),
                pipes: vec![PipeId(10), PipeId(4), PipeId(5), PipeId(6)],
            }
        );
        assert_eq!(render_solution(&plan), format!("{text}\n"));
    }

    #[test]
    fn empty_text_is_empty_plan() {
        assert!(parse_solution("").unwrap().is_empty());
        assert_eq!(render_solution(&[]), "");
    }

    #[test]
    fn lettered_designator() {
        let plan = parse_solution("DRIVE_MANHOLE_TYPE_3_TYPE_B_FROM_3_TO_1 M3 P5 P2 P1\n").unwrap();
        assert_eq!(plan[0].name(), "DRIVE_MANHOLE_TYPE_3_TYPE_B_FROM_3_TO_1");
    }

    #[test]
    fn grammar_violations_carry_line() {
        let e = parse_solution("INSPECT_PIPE P4\nFLY_TO M3\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(parse_solution("INSPECT_PIPE  P4").is_err());
        assert!(parse_solution("INSPECT_PIPE M4").is_err());
        assert!(parse_solution("DRIVE_PIPE_TO_MANHOLE P4").is_err());
        assert!(parse_solution("DRIVE_MANHOLE_TYPE_2_FROM_1_TO_2 M2 P12").is_err());
        assert!(parse_solution("DRIVE_MANHOLE_TYPE_2_FROM_1_TO_3 M2 P12 P1").is_err());
        assert!(parse_solution("DRIVE_MANHOLE_TYPE_2_FROM_01_TO_2 M2 P12 P1").is_err());
        assert!(parse_solution("TAKE_WATER_SAMPLE").is_err());
    }
}
