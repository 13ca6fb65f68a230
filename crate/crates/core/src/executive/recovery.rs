use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RecoveryState {
    Executing,
    #[serde(rename = "PHASE1_BACKUP_RETRY")]
    Phase1BackupRetry,
    #[serde(rename = "PHASE2_LIFT_HEAD")]
    Phase2LiftHead,
    #[serde(rename = "PHASE3_PUSH")]
    Phase3Push,
    Retreat,
    Rebooting,
    Resumed,
    RecoveredAtSafety,
    Stranded,
}

impl RecoveryState {
    pub fn is_terminal(self) -> bool {
        matches!(self, RecoveryState::RecoveredAtSafety | RecoveryState::Stranded)
    }
}

/// What the last attempt reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Signal {
    Ok,
    Blockage,
    Danger,
    Malfunction,
    /// Retreat reached a recoverable manhole.
    Safe,
    /// Retreat found no way out.
    Trapped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("illegal recovery transition from {from:?} on {signal:?}")]
pub struct IllegalTransition {
    pub from: RecoveryState,
    pub signal: Signal,
}

/// The recovery transition table.
pub fn recovery_step(state: RecoveryState, signal: Signal) -> Result<RecoveryState, IllegalTransition> {
    use RecoveryState::*;
    use Signal as S;
    let next = match (state, signal) {
        (s, _) if s.is_terminal() => None,
        (Retreat, S::Safe) => Some(RecoveredAtSafety),
        (Retreat, S::Trapped) => Some(Stranded),
        (Retreat, _) => None,
        (_, S::Danger) => Some(Retreat),
        (Executing, S::Ok) => Some(Executing),
        (Executing | Resumed, S::Blockage) => Some(Phase1BackupRetry),
        (Executing | Resumed | Phase1BackupRetry | Phase2LiftHead | Phase3Push, S::Malfunction) => Some(Rebooting),
        (Phase1BackupRetry | Phase2LiftHead | Phase3Push, S::Ok) => Some(Resumed),
        (Phase1BackupRetry, S::Blockage) => Some(Phase2LiftHead),
        (Phase2LiftHead, S::Blockage) => Some(Phase3Push),
        // persistent: the caller raises the replan request
        (Phase3Push, S::Blockage) => Some(Retreat),
        (Rebooting, S::Ok) => Some(Resumed),
        // one reboot per malfunction
        (Rebooting, S::Malfunction) => Some(Retreat),
        (Rebooting, S::Blockage) => Some(Phase1BackupRetry),
        (Resumed, S::Ok) => Some(Executing),
        _ => None,
    };
    next.ok_or(IllegalTransition { from: state, signal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use RecoveryState::*;

    #[test]
    fn documented_rows() {
        assert_eq!(recovery_step(Executing, Signal::Blockage), Ok(Phase1BackupRetry));
        assert_eq!(recovery_step(Phase2LiftHead, Signal::Ok), Ok(Resumed));
        assert_eq!(recovery_step(Phase3Push, Signal::Danger), Ok(Retreat));
        assert_eq!(recovery_step(Phase3Push, Signal::Blockage), Ok(Retreat));
        assert_eq!(recovery_step(Retreat, Signal::Safe), Ok(RecoveredAtSafety));
    }

    #[test]
    fn phases_never_skip_forward() {
        let mut s = Executing;
        let mut seen = vec![s];
        for _ in 0..4 {
            s = recovery_step(s, Signal::Blockage).unwrap();
            seen.push(s);
        }
        assert_eq!(seen, [Executing, Phase1BackupRetry, Phase2LiftHead, Phase3Push, Retreat]);
    }

    #[test]
    fn terminal_states_reject_everything() {
        for s in [RecoveredAtSafety, Stranded] {
            for sig in [Signal::Ok, Signal::Blockage, Signal::Danger, Signal::Malfunction, Signal::Safe, Signal::Trapped] {
                assert!(recovery_step(s, sig).is_err());
            }
        }
        assert!(recovery_step(Executing, Signal::Safe).is_err());
    }

    #[test]
    fn wire_names() {
        let names: Vec<String> = [Phase1BackupRetry, Phase2LiftHead, Phase3Push, RecoveredAtSafety]
            .iter()
            .map(|s| serde_json::to_string(s).unwrap())
            .collect();
        assert_eq!(names, [r#""PHASE1_BACKUP_RETRY""#, r#""PHASE2_LIFT_HEAD""#, r#""PHASE3_PUSH""#, r#""RECOVERED_AT_SAFETY""#]);
    }
}
