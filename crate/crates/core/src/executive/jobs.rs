use crate::fusion::GroundedAction;
use crate::simulator::{Job, JobKind};

/// Job sequence for one action.
pub fn expand(a: &GroundedAction) -> Vec<Job> {
    match a {
        GroundedAction::DriveToManhole { distance_cm, speed_cm_s, reverse_first, .. } => {
            let kind = if *reverse_first { JobKind::DriveBackward } else { JobKind::DriveForward };
            vec![Job::motion(kind, *speed_cm_s, *distance_cm), Job::simple(JobKind::SenseManhole)]
        }
        GroundedAction::CrossManhole { to_port, distance_cm, speed_cm_s, .. } => {
            vec![Job::cross(*speed_cm_s, *distance_cm, *to_port)]
        }
        GroundedAction::TakeWaterSample { .. } => vec![Job::simple(JobKind::Sample)],
        GroundedAction::InspectPipe { .. } => vec![Job::simple(JobKind::Scan)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sewer::{ManholeId, PipeId};

    #[test]
    fn drive_expansion() {
        let a = GroundedAction::DriveToManhole {
            pipe: PipeId(12),
            direction: ManholeId(2),
            distance_cm: 500.0,
            pipe_diameter_cm: 60.0,
            speed_cm_s: 30.0,
            reverse_first: false,
        };
        assert_eq!(
            expand(&a),
            [Job::motion(JobKind::DriveForward, 30.0, 500.0), Job::simple(JobKind::SenseManhole)]
        );
    }

    #[test]
    fn task_expansion() {
        let s = GroundedAction::TakeWaterSample { pipe: PipeId(6), task_id: None };
        assert_eq!(expand(&s), [Job::simple(JobKind::Sample)]);
        let i = GroundedAction::InspectPipe { pipe: PipeId(4), task_id: None };
        assert_eq!(expand(&i), [Job::simple(JobKind::Scan)]);
    }
}
