//! Topological sewer map: manholes, pipes and the ports joining them.
//!
//! The map is the robot's only model of the world. Pipes are edges, manholes
//! are junctions, and every pipe mouth inside a manhole is a [`Port`] carrying
//! a survey bearing and the height of the pipe invert above the manhole floor.

mod kinematics;
mod kis;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use kinematics::{
    angular_separation, manhole_type_designator, traversable, turn_angle, KinematicLimits,
    Traversal,
};
pub use kis::{parse_kis, serialize_kis, KisError};

/// 1-based index of a port within its manhole.
pub type PortIndex = u32;

macro_rules! id_type {
    ($name:ident, $prefix:literal, $what:literal) => {
        #[doc = concat!("Identifier of a ", $what, ", rendered `", $prefix, "<n>`.")]
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }

        impl FromStr for $name {
            type Err = IdError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let digits = s
                    .strip_prefix($prefix)
                    .ok_or_else(|| IdError(s.to_string()))?;
                if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(IdError(s.to_string()));
                }
                // Leading zeros would break the render/parse identity.
                if digits.len() > 1 && digits.starts_with('0') {
                    return Err(IdError(s.to_string()));
                }
                digits.parse().map($name).map_err(|_| IdError(s.to_string()))
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

id_type!(PipeId, "P", "pipe");
id_type!(ManholeId, "M", "manhole");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed identifier `{0}`")]
pub struct IdError(pub String);

/// A location a task or a GOTO can point at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Pipe(PipeId),
    Manhole(ManholeId),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Pipe(p) => p.fmt(f),
            Target::Manhole(m) => m.fmt(f),
        }
    }
}

impl FromStr for Target {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.starts_with('P') {
            s.parse().map(Target::Pipe)
        } else {
            s.parse().map(Target::Manhole)
        }
    }
}

impl Serialize for Target {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Target {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One end of a pipe: either a manhole or a dead end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    Manhole(ManholeId),
    Stub,
}

impl fmt::Display for End {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            End::Manhole(m) => m.fmt(f),
            End::Stub => f.write_str("stub"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Port {
    pub index: PortIndex,
    pub pipe: PipeId,
    /// Bearing in `[0, 360)`, clockwise from the manhole's reference bearing.
    pub angle_deg: f64,
    /// Height of the pipe invert above the manhole floor.
    pub invert_offset_cm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manhole {
    pub id: ManholeId,
    pub diameter_cm: f64,
    pub ports: Vec<Port>,
    /// Surface access exists for retrieving the robot here.
    pub recoverable: bool,
}

impl Manhole {
    pub fn port(&self, index: PortIndex) -> Option<&Port> {
        index
            .checked_sub(1)
            .and_then(|i| self.ports.get(i as usize))
            .filter(|p| p.index == index)
    }

    pub fn port_of(&self, pipe: PipeId) -> Option<&Port> {
        self.ports.iter().find(|p| p.pipe == pipe)
    }

    /// Number of incident pipes, the `k` of the type designator.
    pub fn degree(&self) -> usize {
        self.ports.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Endpoint {
    pub manhole: ManholeId,
    pub port: PortIndex,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pipe {
    pub id: PipeId,
    pub length_cm: f64,
    pub diameter_cm: f64,
    /// Zero, one (stub) or two endpoints, ordered by manhole id.
    pub endpoints: Vec<Endpoint>,
}

impl Pipe {
    /// Both ends as seen by a robot inside the pipe. A missing endpoint is a stub.
    pub fn ends(&self) -> [End; 2] {
        let a = self
            .endpoints
            .first()
            .map_or(End::Stub, |e| End::Manhole(e.manhole));
        let b = self
            .endpoints
            .get(1)
            .map_or(End::Stub, |e| End::Manhole(e.manhole));
        [a, b]
    }

    /// The end opposite `end`.
    pub fn other_end(&self, end: End) -> End {
        let [a, b] = self.ends();
        if end == a {
            b
        } else {
            a
        }
    }

    pub fn endpoint_at(&self, manhole: ManholeId) -> Option<Endpoint> {
        self.endpoints.iter().copied().find(|e| e.manhole == manhole)
    }

    pub fn touches(&self, manhole: ManholeId) -> bool {
        self.endpoint_at(manhole).is_some()
    }
}

/// Errors raised by graph queries and structural validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SewerError {
    #[error("unknown manhole {0}")]
    UnknownManhole(ManholeId),
    #[error("unknown pipe {0}")]
    UnknownPipe(PipeId),
    #[error("manhole {manhole} has no port {port}")]
    UnknownPort { manhole: ManholeId, port: PortIndex },
    #[error("invalid graph: {0}")]
    Invalid(String),
}

/// The robot's map.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SewerGraph {
    pub manholes: BTreeMap<ManholeId, Manhole>,
    pub pipes: BTreeMap<PipeId, Pipe>,
}

impl SewerGraph {
    pub fn manhole(&self, id: ManholeId) -> Result<&Manhole, SewerError> {
        self.manholes.get(&id).ok_or(SewerError::UnknownManhole(id))
    }

    pub fn pipe(&self, id: PipeId) -> Result<&Pipe, SewerError> {
        self.pipes.get(&id).ok_or(SewerError::UnknownPipe(id))
    }

    pub fn contains(&self, target: Target) -> bool {
        match target {
            Target::Pipe(p) => self.pipes.contains_key(&p),
            Target::Manhole(m) => self.manholes.contains_key(&m),
        }
    }

    /// Port of `manhole` that `pipe` enters through.
    pub fn port_index(&self, manhole: ManholeId, pipe: PipeId) -> Result<PortIndex, SewerError> {
        self.pipe(pipe)?
            .endpoint_at(manhole)
            .map(|e| e.port)
            .ok_or_else(|| SewerError::Invalid(format!("{pipe} does not enter {manhole}")))
    }

    pub fn recoverable_manholes(&self) -> impl Iterator<Item = ManholeId> + '_ {
        self.manholes.values().filter(|m| m.recoverable).map(|m| m.id)
    }

    /// Checks every structural invariant of the map.
    pub fn validate(&self) -> Result<(), SewerError> {
        let bad = |msg: String| Err(SewerError::Invalid(msg));
        for (id, m) in &self.manholes {
            if *id != m.id {
                return bad(format!("manhole keyed {id} carries id {}", m.id));
            }
            if m.ports.is_empty() {
                return bad(format!("{id} has no ports"));
            }
            if m.diameter_cm.partial_cmp(&0.0) != Some(Ordering::Greater) {
                return bad(format!("{id} diameter must be positive"));
            }
            for (i, port) in m.ports.iter().enumerate() {
                if port.index as usize != i + 1 {
                    return bad(format!("{id} ports are not numbered 1..k"));
                }
                if !(0.0..360.0).contains(&port.angle_deg) {
                    return bad(format!("{id} port {} bearing out of range", port.index));
                }
                if port.invert_offset_cm.partial_cmp(&0.0).is_none_or(Ordering::is_lt) {
                    return bad(format!("{id} port {} invert below floor", port.index));
                }
                if i > 0 && m.ports[i - 1].angle_deg.partial_cmp(&port.angle_deg) != Some(Ordering::Less) {
                    return bad(format!("{id} port bearings not strictly increasing"));
                }
                let Some(pipe) = self.pipes.get(&port.pipe) else {
                    return bad(format!("{id} port {} names unknown {}", port.index, port.pipe));
                };
                let mirrored = pipe
                    .endpoints
                    .iter()
                    .filter(|e| e.manhole == *id && e.port == port.index)
                    .count();
                if mirrored != 1 {
                    return bad(format!("{id} port {} not mirrored by {}", port.index, pipe.id));
                }
            }
        }
        for (id, p) in &self.pipes {
            if *id != p.id {
                return bad(format!("pipe keyed {id} carries id {}", p.id));
            }
            if p.length_cm.partial_cmp(&0.0) != Some(Ordering::Greater) {
                return bad(format!("{id} length must be positive"));
            }
            if !(30.0..=60.0).contains(&p.diameter_cm) {
                return bad(format!("{id} diameter outside 30..=60 cm"));
            }
            if p.endpoints.len() > 2 {
                return bad(format!("{id} has more than two endpoints"));
            }
            if p.endpoints.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("{id} endpoints not canonically ordered"));
            }
            if p.endpoints.len() == 2 && p.endpoints[0].manhole == p.endpoints[1].manhole {
                return bad(format!("{id} loops back into {}", p.endpoints[0].manhole));
            }
            for e in &p.endpoints {
                let ok = self
                    .manholes
                    .get(&e.manhole)
                    .and_then(|m| m.port(e.port))
                    .is_some_and(|port| port.pipe == *id);
                if !ok {
                    return bad(format!("{id} endpoint {}:{} has no port", e.manhole, e.port));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_render_and_parse() {
        assert_eq!(PipeId(12).to_string(), "P12");
        assert_eq!("M6".parse::<ManholeId>().unwrap(), ManholeId(6));
        assert!("P".parse::<PipeId>().is_err());
        assert!("P012".parse::<PipeId>().is_err());
        assert!("M6".parse::<PipeId>().is_err());
        assert_eq!("P4".parse::<Target>().unwrap(), Target::Pipe(PipeId(4)));
        assert_eq!("M9".parse::<Target>().unwrap(), Target::Manhole(ManholeId(9)));
    }

    #[test]
    fn ids_sort_numerically() {
        let mut ids = vec![PipeId(10), PipeId(2), PipeId(1)];
        ids.sort();
        assert_eq!(ids, vec![PipeId(1), PipeId(2), PipeId(10)]);
    }

    #[test]
    fn stub_pipe_ends() {
        let pipe = Pipe {
            id: PipeId(6),
            length_cm: 300.0,
            diameter_cm: 30.0,
            endpoints: vec![Endpoint { manhole: ManholeId(6), port: 4 }],
        };
        assert_eq!(pipe.ends(), [End::Manhole(ManholeId(6)), End::Stub]);
        assert_eq!(pipe.other_end(End::Manhole(ManholeId(6))), End::Stub);
        assert_eq!(pipe.other_end(End::Stub), End::Manhole(ManholeId(6)));
    }
}
