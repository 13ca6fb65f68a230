//! Run trace: ordered events, serialised one JSON object per line.

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    PlanEmitted,
    ActionStart,
    JobResult,
    Error,
    RecoveryTransition,
    Replan,
    GoalUpdate,
    Terminal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunEvent {
    pub seq: u64,
    pub t_sim_s: f64,
    pub kind: EventKind,
    pub payload: Value,
}

/// Append-only event log. Sequence numbers start at 1 and have no gaps.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog {
    events: Vec<RunEvent>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends an event. Times earlier than the last event are raised to it.
    pub fn emit(&mut self, t_sim_s: f64, kind: EventKind, payload: impl Serialize) -> u64 {
        let seq = self.events.len() as u64 + 1;
        let t = self.events.last().map_or(t_sim_s, |e| e.t_sim_s.max(t_sim_s));
        let payload = serde_json::to_value(payload).unwrap_or(Value::Null);
        self.events.push(RunEvent { seq, t_sim_s: t, kind, payload });
        seq
    }

    pub fn events(&self) -> &[RunEvent] {
        &self.events
    }

    /// Events with `seq > since`.
    pub fn since(&self, since: u64) -> &[RunEvent] {
        let from = (since as usize).min(self.events.len());
        &self.events[from..]
    }

    pub fn last_seq(&self) -> u64 {
        self.events.len() as u64
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn to_ndjson(&self) -> String {
        to_ndjson(&self.events)
    }
}

pub fn to_ndjson(events: &[RunEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("events serialise"));
        out.push('\n');
    }
    out
}

pub fn parse_ndjson(text: &str) -> Result<Vec<RunEvent>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn seq_and_time_monotone() {
        let mut log = EventLog::new();
        log.emit(5.0, EventKind::ActionStart, json!({"index": 0}));
        log.emit(3.0, EventKind::JobResult, json!({"ok": true}));
        let e = log.events();
        assert_eq!((e[0].seq, e[1].seq), (1, 2));
        assert_eq!(e[1].t_sim_s, 5.0);
        assert_eq!(log.since(1).len(), 1);
        assert!(log.since(9).is_empty());
    }

    #[test]
    fn ndjson_round_trip() {
        let mut log = EventLog::new();
        log.emit(0.0, EventKind::PlanEmitted, json!({"plan": ["INSPECT_PIPE P4"]}));
        log.emit(1.5, EventKind::Terminal, json!({"status": "DONE_COMPLETED"}));
        let text = log.to_ndjson();
        assert!(text.starts_with(r#"{"seq":1,"t_sim_s":0.0,"kind":"PLAN_EMITTED","#));
        assert_eq!(parse_ndjson(&text).unwrap(), log.events());
    }
}
