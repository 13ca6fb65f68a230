use serde::{Deserialize, Serialize};

use super::{Manhole, PortIndex, SewerError};

/// Slack for comparing derived angles and heights against limits, so that
/// boundary values computed through floating point still pass.
const EPS: f64 = 1e-9;

/// Half-width of the bearing tolerance used when classifying manhole geometry.
const CLASS_TOLERANCE_DEG: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinematicLimits {
    pub max_turn_deg: f64,
    pub max_step_cm: f64,
    pub cruise_speed_cm_s: f64,
    pub max_speed_cm_s: f64,
}

impl Default for KinematicLimits {
    fn default() -> Self {
        Self {
            max_turn_deg: 90.0,
            max_step_cm: 30.0,
            cruise_speed_cm_s: 30.0,
            max_speed_cm_s: 60.0,
        }
    }
}

impl KinematicLimits {
    pub fn is_valid(&self) -> bool {
        self.cruise_speed_cm_s > 0.0
            && self.cruise_speed_cm_s <= self.max_speed_cm_s
            && self.max_turn_deg >= 0.0
            && self.max_step_cm >= 0.0
    }
}

/// Outcome of a traversability check through a manhole.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Traversal {
    Allowed,
    TurnTooSharp { turn_deg: f64 },
    StepTooHigh { step_cm: f64 },
}

impl Traversal {
    pub fn is_allowed(&self) -> bool {
        matches!(self, Traversal::Allowed)
    }

    pub fn reason(&self) -> Option<&'static str> {
        match self {
            Traversal::Allowed => None,
            Traversal::TurnTooSharp { .. } => Some("turn"),
            Traversal::StepTooHigh { .. } => Some("step"),
        }
    }
}

/// Minor arc between two bearings, in `[0, 180]`.
pub fn angular_separation(a_deg: f64, b_deg: f64) -> f64 {
    let d = (a_deg - b_deg).abs() % 360.0;
    d.min(360.0 - d)
}

fn port(m: &Manhole, index: PortIndex) -> Result<&super::Port, SewerError> {
    m.port(index).ok_or(SewerError::UnknownPort {
        manhole: m.id,
        port: index,
    })
}

/// Deviation from straight-through travel when entering through `from` and
/// leaving through `to`: 0 for opposite ports, 180 for a U-turn.
pub fn turn_angle(m: &Manhole, from: PortIndex, to: PortIndex) -> Result<f64, SewerError> {
    let a = port(m, from)?;
    let b = port(m, to)?;
    Ok((180.0 - angular_separation(a.angle_deg, b.angle_deg)).abs())
}

pub fn traversable(
    m: &Manhole,
    from: PortIndex,
    to: PortIndex,
    limits: &KinematicLimits,
) -> Result<Traversal, SewerError> {
    let turn_deg = turn_angle(m, from, to)?;
    let step_cm = (port(m, from)?.invert_offset_cm - port(m, to)?.invert_offset_cm).abs();
    Ok(if turn_deg > limits.max_turn_deg + EPS {
        Traversal::TurnTooSharp { turn_deg }
    } else if step_cm > limits.max_step_cm + EPS {
        Traversal::StepTooHigh { step_cm }
    } else {
        Traversal::Allowed
    })
}

/// Naming token for a manhole inside crossing action names.
///
/// Three-way junctions come in two geometry classes: `A` is the symmetric T
/// (consecutive bearing gaps 90/90/180 within ten degrees), `B` is everything
/// else. Other port counts carry no letter.
pub fn manhole_type_designator(m: &Manhole) -> String {
    let k = m.ports.len();
    if k != 3 {
        return format!("TYPE_{k}");
    }
    let mut gaps: Vec<f64> = (0..k)
        .map(|i| {
            let a = m.ports[i].angle_deg;
            let b = m.ports[(i + 1) % k].angle_deg;
            (b - a).rem_euclid(360.0)
        })
        .collect();
    gaps.sort_by(f64::total_cmp);
    let symmetric_t = gaps
        .iter()
        .zip([90.0, 90.0, 180.0])
        .all(|(g, want)| (g - want).abs() <= CLASS_TOLERANCE_DEG + EPS);
    let letter = if symmetric_t { 'A' } else { 'B' };
    format!("TYPE_3_TYPE_{letter}")
}
