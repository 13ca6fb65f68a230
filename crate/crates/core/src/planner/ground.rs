//! Direct grounding of the sewer domain into a propositional STRIPS task.

use std::collections::HashMap;
use std::fmt;

use super::{BeliefModel, Goal, Place, PlanningState, SymbolicAction};
use crate::sewer::{manhole_type_designator, traversable, End, ManholeId, PipeId, Target};

pub type FactId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Fact {
    At(Place),
    Docked(ManholeId),
    Sampled(PipeId),
    Inspected(PipeId),
    Reached(Target),
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fact::At(p) => write!(f, "(at {p})"),
            Fact::Docked(m) => write!(f, "(docked dock-{m})"),
            Fact::Sampled(p) => write!(f, "(sampled {p})"),
            Fact::Inspected(p) => write!(f, "(inspected {p})"),
            Fact::Reached(Target::Pipe(p)) => write!(f, "(reached-pipe {p})"),
            Fact::Reached(Target::Manhole(m)) => write!(f, "(reached-manhole {m})"),
        }
    }
}

impl From<Goal> for Fact {
    fn from(g: Goal) -> Self {
        match g {
            Goal::Sampled(p) => Fact::Sampled(p),
            Goal::Inspected(p) => Fact::Inspected(p),
            Goal::Reached(t) => Fact::Reached(t),
            Goal::DockedAt(m) => Fact::Docked(m),
        }
    }
}

/// Lifted action schemas shared by direct grounding and the PDDL documents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Schema {
    /// `?p ?m ?from ?to`
    Drive,
    /// `?p ?m ?from ?to ?d`, leaving a docked position.
    DriveUndock,
    /// `?m ?p1 .. ?pk ?from ?to ?d`, one schema per crossing name.
    Cross,
    /// `?from ?to`
    Reverse,
    /// `?p ?x`
    Sample,
    /// `?p ?x`
    Inspect,
}

pub const REVERSE_NAME: &str = "REVERSE_IN_PLACE";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundOp {
    /// Symbolic action name, or [`REVERSE_NAME`].
    pub name: String,
    /// The pipe and manhole ids rendered in the solution file.
    pub args: Vec<String>,
    /// Full schema parameter binding.
    pub params: Vec<String>,
    pub pre: Vec<FactId>,
    pub add: Vec<FactId>,
    pub del: Vec<FactId>,
    pub cost: u32,
}

impl GroundOp {
    /// Expansion order: name, then ids numerically, then the full binding.
    pub fn sort_key(&self) -> (String, Vec<(char, u64)>, String) {
        let ids = self
            .args
            .iter()
            .map(|a| {
                let mut chars = a.chars();
                let kind = chars.next().unwrap_or(' ');
                (kind, chars.as_str().parse().unwrap_or(u64::MAX))
            })
            .collect();
        (self.name.clone(), ids, self.params.join(" "))
    }

    pub fn is_reverse(&self) -> bool {
        self.name == REVERSE_NAME
    }

    /// The solution-file action, `None` for reverses.
    pub fn symbolic(&self) -> Option<SymbolicAction> {
        if self.is_reverse() {
            return None;
        }
        let line = std::iter::once(self.name.clone())
            .chain(self.args.iter().cloned())
            .collect::<Vec<_>>()
            .join(" ");
        super::parse_solution(&line).ok().and_then(|mut p| p.pop())
    }
}

/// A propositional STRIPS task with string-named facts.
#[derive(Clone, Debug, Default)]
pub struct GroundTask {
    pub facts: Vec<String>,
    pub ops: Vec<GroundOp>,
    pub init: Vec<FactId>,
    pub goals: Vec<FactId>,
    index: HashMap<String, FactId>,
    /// Ops keyed by their first precondition.
    pub(crate) by_first_pre: Vec<Vec<u32>>,
    /// Ops keyed by every precondition.
    pub(crate) by_pre: Vec<Vec<u32>>,
}

impl GroundTask {
    pub fn intern(&mut self, fact: &str) -> FactId {
        if let Some(&id) = self.index.get(fact) {
            return id;
        }
        let id = self.facts.len() as FactId;
        self.facts.push(fact.to_string());
        self.index.insert(fact.to_string(), id);
        id
    }

    pub fn fact_id(&self, fact: &str) -> Option<FactId> {
        self.index.get(fact).copied()
    }

    /// Sorts ops into expansion order and builds the lookup tables. Must be
    /// called after the last op is pushed.
    pub fn finish(&mut self) {
        let mut keyed: Vec<_> = std::mem::take(&mut self.ops)
            .into_iter()
            .map(|op| (op.sort_key(), op))
            .collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        self.ops = keyed.into_iter().map(|(_, op)| op).collect();
        self.init.sort_unstable();
        self.init.dedup();
        let n = self.facts.len();
        self.by_first_pre = vec![Vec::new(); n];
        self.by_pre = vec![Vec::new(); n];
        for (i, op) in self.ops.iter().enumerate() {
            if let Some(&f) = op.pre.first() {
                self.by_first_pre[f as usize].push(i as u32);
            }
            let mut pre = op.pre.clone();
            pre.sort_unstable();
            pre.dedup();
            for f in pre {
                self.by_pre[f as usize].push(i as u32);
            }
        }
    }

    /// Op content with fact ids replaced by names, for comparing groundings.
    pub fn op_signatures(&self) -> Vec<String> {
        let names = |ids: &[FactId]| {
            let mut v: Vec<&str> = ids.iter().map(|&f| self.facts[f as usize].as_str()).collect();
            v.sort_unstable();
            v.join(" ")
        };
        self.ops
            .iter()
            .map(|op| {
                format!(
                    "{} [{}] ({}) pre {} add {} del {} cost {}",
                    op.name,
                    op.args.join(" "),
                    op.params.join(" "),
                    names(&op.pre),
                    names(&op.add),
                    names(&op.del),
                    op.cost
                )
            })
            .collect()
    }
}

struct Builder<'a> {
    b: &'a BeliefModel,
    task: GroundTask,
}

impl Builder<'_> {
    fn fact(&mut self, f: Fact) -> FactId {
        self.task.intern(&f.to_string())
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        name: String,
        args: Vec<String>,
        params: Vec<String>,
        pre: Vec<Fact>,
        add: Vec<Fact>,
        del: Vec<Fact>,
        cost: u32,
    ) {
        let pre = pre.into_iter().map(|f| self.fact(f)).collect();
        let add = add.into_iter().map(|f| self.fact(f)).collect();
        let del = del.into_iter().map(|f| self.fact(f)).collect();
        self.task.ops.push(GroundOp { name, args, params, pre, add, del, cost });
    }

    fn drive(&mut self, from: Place) {
        let Place::InPipe { pipe, toward: End::Manhole(m), docked } = from else {
            return;
        };
        let Some(port) = self.b.graph.pipes.get(&pipe).and_then(|p| p.endpoint_at(m)) else {
            return;
        };
        let to = Place::AtManholePort { manhole: m, port: port.port };
        let mut params = vec![pipe.to_string(), m.to_string(), from.name(), to.name()];
        let mut del = vec![Fact::At(from)];
        if let Some(d) = docked {
            params.push(format!("dock-{d}"));
            del.push(Fact::Docked(d));
        }
        self.push(
            "DRIVE_PIPE_TO_MANHOLE".into(),
            vec![pipe.to_string(), m.to_string()],
            params,
            vec![Fact::At(from)],
            vec![Fact::At(to), Fact::Reached(Target::Manhole(m))],
            del,
            1,
        );
    }

    /// Backing out of a port straight through its pipe to the far manhole.
    fn drive_from_port(&mut self, from: Place, pipe: PipeId, far: ManholeId) {
        let Some(port) = self.b.graph.pipes.get(&pipe).and_then(|p| p.endpoint_at(far)) else {
            return;
        };
        let to = Place::AtManholePort { manhole: far, port: port.port };
        self.push(
            "DRIVE_PIPE_TO_MANHOLE".into(),
            vec![pipe.to_string(), far.to_string()],
            vec![pipe.to_string(), far.to_string(), from.name(), to.name()],
            vec![Fact::At(from)],
            vec![Fact::At(to), Fact::Reached(Target::Manhole(far))],
            vec![Fact::At(from)],
            1,
        );
    }

    fn reverse(&mut self, from: Place, to: Place) {
        self.push(
            REVERSE_NAME.into(),
            Vec::new(),
            vec![from.name(), to.name()],
            vec![Fact::At(from)],
            vec![Fact::At(to)],
            vec![Fact::At(from)],
            0,
        );
    }

    fn task_op(&mut self, name: &str, pipe: PipeId, at: Place, effect: Fact) {
        self.push(
            name.into(),
            vec![pipe.to_string()],
            vec![pipe.to_string(), at.name()],
            vec![Fact::At(at)],
            vec![effect],
            Vec::new(),
            1,
        );
    }

    fn pipes(&mut self) {
        let b = self.b;
        for pipe in b.graph.pipes.values().filter(|p| !b.is_blocked(p.id)) {
            let [a, z] = pipe.ends();
            let towards: &[End] = if a == z { &[a][..] } else { &[a, z][..] };
            let mut docks = vec![None];
            docks.extend(pipe.endpoints.iter().map(|e| Some(e.manhole)));
            for &toward in towards {
                for &docked in &docks {
                    let here = Place::InPipe { pipe: pipe.id, toward, docked };
                    self.drive(here);
                    let back = pipe.other_end(toward);
                    if back != toward {
                        self.reverse(here, Place::InPipe { pipe: pipe.id, toward: back, docked });
                    }
                    self.task_op("TAKE_WATER_SAMPLE", pipe.id, here, Fact::Sampled(pipe.id));
                    self.task_op("INSPECT_PIPE", pipe.id, here, Fact::Inspected(pipe.id));
                }
            }
        }
    }

    fn manholes(&mut self) {
        let b = self.b;
        for m in b.graph.manholes.values() {
            let designator = manhole_type_designator(m);
            let mut args = vec![m.id.to_string()];
            args.extend(m.ports.iter().map(|p| p.pipe.to_string()));
            for from in &m.ports {
                let here = Place::AtManholePort { manhole: m.id, port: from.index };
                if !b.is_blocked(from.pipe) {
                    if let Some(pipe) = b.graph.pipes.get(&from.pipe) {
                        if let End::Manhole(far) = pipe.other_end(End::Manhole(m.id)) {
                            self.drive_from_port(here, pipe.id, far);
                        }
                        self.task_op("INSPECT_PIPE", from.pipe, here, Fact::Inspected(from.pipe));
                    }
                }
                for to in &m.ports {
                    if to.index == from.index || b.is_blocked(to.pipe) {
                        continue;
                    }
                    let ok = traversable(m, from.index, to.index, &b.limits)
                        .is_ok_and(|t| t.is_allowed());
                    let Some(pipe) = b.graph.pipes.get(&to.pipe) else { continue };
                    if !ok {
                        continue;
                    }
                    let dest = Place::InPipe {
                        pipe: to.pipe,
                        toward: pipe.other_end(End::Manhole(m.id)),
                        docked: Some(m.id),
                    };
                    let mut params = args.clone();
                    params.extend([here.name(), dest.name(), format!("dock-{}", m.id)]);
                    self.push(
                        format!("DRIVE_MANHOLE_{designator}_FROM_{}_TO_{}", from.index, to.index),
                        args.clone(),
                        params,
                        vec![Fact::At(here)],
                        vec![
                            Fact::At(dest),
                            Fact::Docked(m.id),
                            Fact::Reached(Target::Manhole(m.id)),
                            Fact::Reached(Target::Pipe(to.pipe)),
                        ],
                        vec![Fact::At(here)],
                        1,
                    );
                }
            }
        }
    }
}

/// Facts true in `s`.
pub(crate) fn state_facts(s: &PlanningState) -> Vec<Fact> {
    let mut facts = vec![Fact::At(s.at)];
    if let Place::InPipe { docked: Some(m), .. } = s.at {
        facts.push(Fact::Docked(m));
    }
    facts.extend(s.sampled.iter().map(|&p| Fact::Sampled(p)));
    facts.extend(s.inspected.iter().map(|&p| Fact::Inspected(p)));
    facts.extend(s.reached.iter().map(|&t| Fact::Reached(t)));
    facts
}

/// Enumerates every action instance the belief allows from anywhere.
///
/// Blocked pipes contribute nothing, except that a robot starting inside one
/// may still drive out toward the end it faces.
pub fn ground(b: &BeliefModel, s: &PlanningState, goals: &[Goal]) -> GroundTask {
    let mut builder = Builder { b, task: GroundTask::default() };
    builder.pipes();
    builder.manholes();
    if let Some(pipe) = s.at.pipe() {
        if b.is_blocked(pipe) {
            builder.drive(s.at);
        }
    }
    for f in state_facts(s) {
        let id = builder.fact(f);
        builder.task.init.push(id);
    }
    for &g in goals {
        let id = builder.fact(g.into());
        if !builder.task.goals.contains(&id) {
            builder.task.goals.push(id);
        }
    }
    builder.task.finish();
    builder.task
}
