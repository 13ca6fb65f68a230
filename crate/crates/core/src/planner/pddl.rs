//! PDDL rendering of the grounded sewer world, plus a small STRIPS PDDL
//! parser and grounder that turn the documents back into a [`GroundTask`].
//!
//! The domain is lifted: every action schema is guarded by a static link
//! predicate, and the problem lists the link facts the belief allows. Cross
//! schemas are emitted per crossing name so that the name carries the manhole
//! type and the port pair exactly as the solution file prints it.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use super::ground::{GroundOp, GroundTask, REVERSE_NAME};
use super::{ground, BeliefModel, Goal, PlanningState};

fn link_fact(op: &GroundOp) -> String {
    let pred = if op.is_reverse() {
        "reverse-link".to_string()
    } else if op.name == "DRIVE_PIPE_TO_MANHOLE" {
        if op.params.len() == 5 { "drive-undock-link" } else { "drive-link" }.to_string()
    } else if op.name == "TAKE_WATER_SAMPLE" {
        "sample-site".to_string()
    } else if op.name == "INSPECT_PIPE" {
        "inspect-site".to_string()
    } else {
        format!("link-{}", op.name.to_ascii_lowercase())
    };
    format!("({pred} {})", op.params.join(" "))
}

fn cross_schema(name: &str, k: usize, to: usize) -> String {
    let lower = name.to_ascii_lowercase();
    let pipes: Vec<String> = (1..=k).map(|i| format!("?p{i}")).collect();
    let typed: String = pipes.iter().map(|p| format!(" {p} - pipe")).collect();
    format!(
        "  (:action {lower}\n    :parameters (?m - manhole{typed} ?from - place ?to - place ?d - place)\n    :precondition (and (at ?from) (link-{lower} ?m {} ?from ?to ?d))\n    :effect (and (not (at ?from)) (at ?to) (docked ?d) (reached-manhole ?m) (reached-pipe ?p{to})))\n",
        pipes.join(" ")
    )
}

const FIXED_SCHEMAS: &str = "\
  (:action drive-pipe-to-manhole
    :parameters (?p - pipe ?m - manhole ?from - place ?to - place)
    :precondition (and (at ?from) (drive-link ?p ?m ?from ?to))
    :effect (and (not (at ?from)) (at ?to) (reached-manhole ?m)))
  (:action drive-pipe-to-manhole-undock
    :parameters (?p - pipe ?m - manhole ?from - place ?to - place ?d - place)
    :precondition (and (at ?from) (drive-undock-link ?p ?m ?from ?to ?d))
    :effect (and (not (at ?from)) (not (docked ?d)) (at ?to) (reached-manhole ?m)))
  (:action reverse-in-place
    :parameters (?from - place ?to - place)
    :precondition (and (at ?from) (reverse-link ?from ?to))
    :effect (and (not (at ?from)) (at ?to)))
  (:action take-water-sample
    :parameters (?p - pipe ?x - place)
    :precondition (and (at ?x) (sample-site ?p ?x))
    :effect (sampled ?p))
  (:action inspect-pipe
    :parameters (?p - pipe ?x - place)
    :precondition (and (at ?x) (inspect-site ?p ?x))
    :effect (inspected ?p))
";

/// Renders the domain and problem documents for planning from `s`.
pub fn emit_pddl(b: &BeliefModel, s: &PlanningState, goals: &[Goal]) -> (String, String) {
    let task = ground(b, s, goals);

    // Crossing schemas: name -> (k, to port).
    let mut crossings: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for op in task.ops.iter().filter(|op| op.name.starts_with("DRIVE_MANHOLE_")) {
        let to = op.name.rsplit('_').next().and_then(|t| t.parse().ok()).unwrap_or(0);
        crossings.insert(op.name.clone(), (op.args.len() - 1, to));
    }

    let mut domain = String::from(
        "(define (domain sewer)\n  (:requirements :strips :typing)\n  (:types manhole pipe place)\n  (:predicates\n",
    );
    for p in [
        "(at ?x - place)",
        "(docked ?d - place)",
        "(sampled ?p - pipe)",
        "(inspected ?p - pipe)",
        "(reached-pipe ?p - pipe)",
        "(reached-manhole ?m - manhole)",
        "(drive-link ?p - pipe ?m - manhole ?from - place ?to - place)",
        "(drive-undock-link ?p - pipe ?m - manhole ?from - place ?to - place ?d - place)",
        "(reverse-link ?from - place ?to - place)",
        "(sample-site ?p - pipe ?x - place)",
        "(inspect-site ?p - pipe ?x - place)",
    ] {
        let _ = writeln!(domain, "    {p}");
    }
    for (name, (k, _)) in &crossings {
        let pipes: String = (1..=*k).map(|i| format!(" ?p{i} - pipe")).collect();
        let _ = writeln!(
            domain,
            "    (link-{} ?m - manhole{pipes} ?from - place ?to - place ?d - place)",
            name.to_ascii_lowercase()
        );
    }
    domain.push_str("  )\n");
    domain.push_str(FIXED_SCHEMAS);
    for (name, (k, to)) in &crossings {
        domain.push_str(&cross_schema(name, *k, *to));
    }
    domain.push_str(")\n");

    let manholes: Vec<String> = b.graph.manholes.keys().map(|m| m.to_string()).collect();
    let pipes: Vec<String> = b.graph.pipes.keys().map(|p| p.to_string()).collect();
    let mut places: BTreeSet<String> = BTreeSet::new();
    for op in &task.ops {
        places.extend(
            op.params
                .iter()
                .filter(|p| p.starts_with("in-") || p.starts_with("port-") || p.starts_with("dock-"))
                .cloned(),
        );
    }
    for f in &task.facts {
        for pred in ["(at ", "(docked "] {
            if let Some(rest) = f.strip_prefix(pred) {
                places.insert(rest.trim_end_matches(')').to_string());
            }
        }
    }

    let mut problem = String::from("(define (problem mission)\n  (:domain sewer)\n  (:objects\n");
    let _ = writeln!(problem, "    {} - manhole", manholes.join(" "));
    let _ = writeln!(problem, "    {} - pipe", pipes.join(" "));
    let _ = writeln!(problem, "    {} - place", places.into_iter().collect::<Vec<_>>().join(" "));
    problem.push_str("  )\n  (:init\n");
    for &f in &task.init {
        let _ = writeln!(problem, "    {}", task.facts[f as usize]);
    }
    for op in &task.ops {
        let _ = writeln!(problem, "    {}", link_fact(op));
    }
    problem.push_str("  )\n  (:goal (and");
    for &g in &task.goals {
        let _ = write!(problem, " {}", task.facts[g as usize]);
    }
    problem.push_str("))\n)\n");
    (domain, problem)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PddlError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Semantic(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Sexp {
    Atom(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn line(&self) -> usize {
        match self {
            Sexp::Atom(_, l) | Sexp::List(_, l) => *l,
        }
    }

    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a, _) => Some(a),
            Sexp::List(..) => None,
        }
    }

    fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(v, _) => Some(v),
            Sexp::Atom(..) => None,
        }
    }
}

fn syntax(line: usize, message: impl Into<String>) -> PddlError {
    PddlError::Syntax { line, message: message.into() }
}

fn read_sexp(text: &str) -> Result<Sexp, PddlError> {
    let mut stack: Vec<(Vec<Sexp>, usize)> = Vec::new();
    let mut done: Option<Sexp> = None;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split(';').next().unwrap_or("");
        let spaced = content.replace('(', " ( ").replace(')', " ) ");
        for tok in spaced.split_whitespace() {
            if done.is_some() {
                return Err(syntax(line, "trailing input after document"));
            }
            match tok {
                "(" => stack.push((Vec::new(), line)),
                ")" => {
                    let (items, start) = stack.pop().ok_or_else(|| syntax(line, "unbalanced `)`"))?;
                    let node = Sexp::List(items, start);
                    match stack.last_mut() {
                        Some((parent, _)) => parent.push(node),
                        None => done = Some(node),
                    }
                }
                atom => match stack.last_mut() {
                    Some((parent, _)) => parent.push(Sexp::Atom(atom.to_string(), line)),
                    None => return Err(syntax(line, format!("atom `{atom}` outside a list"))),
                },
            }
        }
    }
    if let Some((_, start)) = stack.last() {
        return Err(syntax(*start, "unclosed `(`"));
    }
    done.ok_or_else(|| syntax(1, "empty document"))
}

/// `?a ?b - t ?c - u` into (name, type) pairs.
fn typed_list(items: &[Sexp]) -> Result<Vec<(String, String)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let tok = items[i].atom().ok_or_else(|| syntax(items[i].line(), "expected a name"))?;
        if tok == "-" {
            let ty = items
                .get(i + 1)
                .and_then(Sexp::atom)
                .ok_or_else(|| syntax(items[i].line(), "missing type after `-`"))?;
            out.extend(pending.drain(..).map(|n| (n, ty.to_string())));
            i += 2;
        } else {
            pending.push(tok.to_string());
            i += 1;
        }
    }
    out.extend(pending.into_iter().map(|n| (n, "object".to_string())));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Atom {
    pred: String,
    args: Vec<String>,
}

fn parse_atom(s: &Sexp) -> Result<Atom, PddlError> {
    let items = s.list().ok_or_else(|| syntax(s.line(), "expected an atom"))?;
    let words: Option<Vec<&str>> = items.iter().map(Sexp::atom).collect();
    let words = words.ok_or_else(|| syntax(s.line(), "nested expression in atom"))?;
    let (pred, args) = words.split_first().ok_or_else(|| syntax(s.line(), "empty atom"))?;
    Ok(Atom { pred: pred.to_string(), args: args.iter().map(|a| a.to_string()).collect() })
}

/// A conjunction of literals; `(and)` and a bare atom are both accepted.
fn parse_conj(s: &Sexp) -> Result<(Vec<Atom>, Vec<Atom>), PddlError> {
    let items = s.list().ok_or_else(|| syntax(s.line(), "expected a formula"))?;
    let parts: Vec<&Sexp> = match items.first().and_then(Sexp::atom) {
        Some("and") => items[1..].iter().collect(),
        _ => vec![s],
    };
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for p in parts {
        let inner = p.list().unwrap_or(&[]);
        if inner.first().and_then(Sexp::atom) == Some("not") {
            let a = inner.get(1).ok_or_else(|| syntax(p.line(), "empty `not`"))?;
            neg.push(parse_atom(a)?);
        } else {
            pos.push(parse_atom(p)?);
        }
    }
    Ok((pos, neg))
}

#[derive(Clone, Debug)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<(String, String)>,
    pre: Vec<Atom>,
    add: Vec<Atom>,
    del: Vec<Atom>,
}

#[derive(Clone, Debug)]
pub struct Domain {
    pub name: String,
    pub types: Vec<String>,
    pub predicates: BTreeMap<String, usize>,
    pub actions: Vec<ActionSchema>,
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub domain: String,
    /// Object name to type.
    pub objects: BTreeMap<String, String>,
    init: Vec<Atom>,
    goal: Vec<Atom>,
}

fn sections(doc: &Sexp, what: &str) -> Result<(String, Vec<Sexp>), PddlError> {
    let items = doc.list().ok_or_else(|| syntax(doc.line(), "expected `(define ...)`"))?;
    if items.first().and_then(Sexp::atom) != Some("define") {
        return Err(syntax(doc.line(), "expected `define`"));
    }
    let head = items.get(1).and_then(Sexp::list).unwrap_or(&[]);
    if head.first().and_then(Sexp::atom) != Some(what) {
        return Err(syntax(doc.line(), format!("expected `({what} <name>)`")));
    }
    let name = head
        .get(1)
        .and_then(Sexp::atom)
        .ok_or_else(|| syntax(doc.line(), "missing name"))?;
    Ok((name.to_string(), items[2..].to_vec()))
}

pub fn parse_domain(text: &str) -> Result<Domain, PddlError> {
    let (name, secs) = sections(&read_sexp(text)?, "domain")?;
    let mut d = Domain { name, types: Vec::new(), predicates: BTreeMap::new(), actions: Vec::new() };
    for sec in &secs {
        let items = sec.list().ok_or_else(|| syntax(sec.line(), "expected a section"))?;
        match items.first().and_then(Sexp::atom) {
            Some(":requirements") => {
                for r in &items[1..] {
                    match r.atom() {
                        Some(":strips" | ":typing") => {}
                        other => {
                            return Err(syntax(r.line(), format!("unsupported requirement {other:?}")))
                        }
                    }
                }
            }
            Some(":types") => d.types = typed_list(&items[1..])?.into_iter().map(|(n, _)| n).collect(),
            Some(":predicates") => {
                for p in &items[1..] {
                    let list = p.list().ok_or_else(|| syntax(p.line(), "expected a predicate"))?;
                    let pname = list
                        .first()
                        .and_then(Sexp::atom)
                        .ok_or_else(|| syntax(p.line(), "predicate name"))?;
                    d.predicates.insert(pname.to_string(), typed_list(&list[1..])?.len());
                }
            }
            Some(":action") => {
                let aname = items
                    .get(1)
                    .and_then(Sexp::atom)
                    .ok_or_else(|| syntax(sec.line(), "action name"))?;
                let mut a = ActionSchema {
                    name: aname.to_string(),
                    params: Vec::new(),
                    pre: Vec::new(),
                    add: Vec::new(),
                    del: Vec::new(),
                };
                let mut i = 2;
                while i + 1 < items.len() {
                    let key = items[i].atom().unwrap_or("");
                    let val = &items[i + 1];
                    match key {
                        ":parameters" => {
                            a.params = typed_list(val.list().ok_or_else(|| syntax(val.line(), "parameter list"))?)?
                        }
                        ":precondition" => {
                            let (pos, neg) = parse_conj(val)?;
                            if !neg.is_empty() {
                                return Err(syntax(val.line(), "negative preconditions are not STRIPS"));
                            }
                            a.pre = pos;
                        }
                        ":effect" => (a.add, a.del) = parse_conj(val)?,
                        other => return Err(syntax(items[i].line(), format!("unknown key `{other}`"))),
                    }
                    i += 2;
                }
                d.actions.push(a);
            }
            other => return Err(syntax(sec.line(), format!("unknown section {other:?}"))),
        }
    }
    Ok(d)
}

pub fn parse_problem(text: &str) -> Result<Problem, PddlError> {
    let (_, secs) = sections(&read_sexp(text)?, "problem")?;
    let mut p = Problem { domain: String::new(), objects: BTreeMap::new(), init: Vec::new(), goal: Vec::new() };
    for sec in &secs {
        let items = sec.list().ok_or_else(|| syntax(sec.line(), "expected a section"))?;
        match items.first().and_then(Sexp::atom) {
            Some(":domain") => {
                p.domain = items.get(1).and_then(Sexp::atom).unwrap_or_default().to_string();
            }
            Some(":objects") => p.objects = typed_list(&items[1..])?.into_iter().collect(),
            Some(":init") => {
                p.init = items[1..].iter().map(parse_atom).collect::<Result<_, _>>()?;
            }
            Some(":goal") => {
                let g = items.get(1).ok_or_else(|| syntax(sec.line(), "empty goal"))?;
                let (pos, neg) = parse_conj(g)?;
                if !neg.is_empty() {
                    return Err(syntax(g.line(), "negative goals are not STRIPS"));
                }
                p.goal = pos;
            }
            other => return Err(syntax(sec.line(), format!("unknown section {other:?}"))),
        }
    }
    Ok(p)
}

fn render(a: &Atom, bind: &HashMap<&str, &str>) -> String {
    let args: Vec<&str> = a.args.iter().map(|x| bind.get(x.as_str()).copied().unwrap_or(x)).collect();
    if args.is_empty() {
        format!("({})", a.pred)
    } else {
        format!("({} {})", a.pred, args.join(" "))
    }
}

/// Symbolic name of a schema: upper case with underscores; the undocking
/// drive variant shares its name with the plain drive.
fn symbolic_name(schema: &str) -> String {
    let up = schema.to_ascii_uppercase().replace('-', "_");
    up.strip_suffix("_UNDOCK").map(str::to_string).unwrap_or(up)
}

/// Grounds a parsed domain and problem into a STRIPS task.
///
/// Static predicates (never in an effect) are evaluated at grounding time and
/// do not appear in the task.
pub fn ground_pddl(d: &Domain, p: &Problem) -> Result<GroundTask, PddlError> {
    if p.domain != d.name {
        return Err(PddlError::Semantic(format!("problem is for domain `{}`", p.domain)));
    }
    let fluent: HashSet<&str> = d
        .actions
        .iter()
        .flat_map(|a| a.add.iter().chain(&a.del))
        .map(|a| a.pred.as_str())
        .collect();
    for a in p.init.iter().chain(&p.goal) {
        match d.predicates.get(&a.pred) {
            Some(&n) if n == a.args.len() => {}
            _ => return Err(PddlError::Semantic(format!("bad atom ({} ...)", a.pred))),
        }
    }
    let mut statics: HashMap<&str, Vec<&Atom>> = HashMap::new();
    for a in p.init.iter().filter(|a| !fluent.contains(a.pred.as_str())) {
        statics.entry(a.pred.as_str()).or_default().push(a);
    }

    let mut task = GroundTask::default();
    for a in &d.actions {
        let params: Vec<&str> = a.params.iter().map(|(n, _)| n.as_str()).collect();
        let mut binds: Vec<HashMap<&str, &str>> = vec![HashMap::new()];
        for pre in a.pre.iter().filter(|x| !fluent.contains(x.pred.as_str())) {
            let facts = statics.get(pre.pred.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            let mut next = Vec::new();
            for bind in &binds {
                'fact: for f in facts {
                    let mut b = bind.clone();
                    for (var, val) in pre.args.iter().zip(&f.args) {
                        if !var.starts_with('?') {
                            if var != val {
                                continue 'fact;
                            }
                            continue;
                        }
                        match b.get(var.as_str()) {
                            Some(&v) if v != val => continue 'fact,
                            Some(_) => {}
                            None => {
                                b.insert(var.as_str(), val.as_str());
                            }
                        }
                    }
                    next.push(b);
                }
            }
            binds = next;
        }
        // Parameters no static precondition pinned down range over their type.
        for (var, ty) in &a.params {
            let objs: Vec<&str> = p
                .objects
                .iter()
                .filter(|(_, t)| *t == ty)
                .map(|(o, _)| o.as_str())
                .collect();
            binds = binds
                .into_iter()
                .flat_map(|b| {
                    if let Some(v) = b.get(var.as_str()) {
                        let ok = p.objects.get(*v) == Some(ty);
                        return if ok { vec![b] } else { vec![] };
                    }
                    objs.iter()
                        .map(|o| {
                            let mut b2 = b.clone();
                            b2.insert(var.as_str(), o);
                            b2
                        })
                        .collect()
                })
                .collect();
        }
        let name = symbolic_name(&a.name);
        let cost = u32::from(name != REVERSE_NAME);
        for bind in binds {
            let mut intern = |atoms: &[Atom], only_fluent: bool| -> Vec<u32> {
                atoms
                    .iter()
                    .filter(|x| !only_fluent || fluent.contains(x.pred.as_str()))
                    .map(|x| task.intern(&render(x, &bind)))
                    .collect()
            };
            let pre = intern(&a.pre, true);
            let add = intern(&a.add, false);
            let del = intern(&a.del, false);
            let values: Vec<String> = params.iter().map(|v| bind[v].to_string()).collect();
            let args = a
                .params
                .iter()
                .zip(&values)
                .filter(|((_, ty), _)| ty == "pipe" || ty == "manhole")
                .map(|(_, v)| v.clone())
                .collect();
            task.ops.push(GroundOp { name: name.clone(), args, params: values, pre, add, del, cost });
        }
    }
    let empty = HashMap::new();
    for a in p.init.iter().filter(|a| fluent.contains(a.pred.as_str())) {
        let id = task.intern(&render(a, &empty));
        task.init.push(id);
    }
    for a in &p.goal {
        let id = task.intern(&render(a, &empty));
        if !task.goals.contains(&id) {
            task.goals.push(id);
        }
    }
    task.finish();
    Ok(task)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mission::goal_state;
    use crate::planner::{goal_atoms, render_solution, solve_ground};
    use crate::sewer::PipeId;

    fn reference() -> (BeliefModel, PlanningState, Vec<Goal>) {
        let b = BeliefModel::new(fixtures::ais_test_env());
        let m = fixtures::reference_mission();
        let s = PlanningState::at_entry(&b.graph, &m);
        (b, s, goal_atoms(&m, &goal_state(&m)))
    }

    #[test]
    fn goal_conjunction() {
        let (b, s, goals) = reference();
        let (_, problem) = emit_pddl(&b, &s, &goals);
        assert!(problem.contains("(:goal (and (sampled P6) (inspected P4) (docked dock-M9)))"));
        let (_, problem) = emit_pddl(&b, &s, &[]);
        assert!(problem.contains("(:goal (and))"));
    }

    #[test]
    fn round_trip_grounding_matches_direct() {
        let (b, s, goals) = reference();
        let (dom, prob) = emit_pddl(&b, &s, &goals);
        let parsed = ground_pddl(&parse_domain(&dom).unwrap(), &parse_problem(&prob).unwrap()).unwrap();
        let direct = ground(&b, &s, &goals);
        assert_eq!(parsed.op_signatures(), direct.op_signatures());
        let names = |t: &GroundTask, ids: &[u32]| {
            let mut v: Vec<String> = ids.iter().map(|&i| t.facts[i as usize].clone()).collect();
            v.sort();
            v
        };
        assert_eq!(names(&parsed, &parsed.init), names(&direct, &direct.init));
        assert_eq!(names(&parsed, &parsed.goals), names(&direct, &direct.goals));
        let plan = solve_ground(&parsed).unwrap().plan;
        assert_eq!(render_solution(&plan), fixtures::REFERENCE_PLAN);
    }

    #[test]
    fn blocked_pipe_absent_from_problem() {
        let (mut b, s, goals) = reference();
        b.block(PipeId(5));
        let (_, problem) = emit_pddl(&b, &s, &goals);
        let links: Vec<&str> = problem.lines().filter(|l| l.contains("link")).collect();
        assert!(!links.is_empty());
        assert!(links.iter().all(|l| !l.contains("in-P5-")));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(read_sexp("(a (b)"), Err(PddlError::Syntax { line: 1, .. })));
        assert!(matches!(read_sexp("(a))"), Err(PddlError::Syntax { .. })));
        assert!(parse_domain("(define (problem x))").is_err());
        let d = "(define (domain d) (:requirements :adl))";
        assert!(parse_domain(d).is_err());
    }

    #[test]
    fn generic_untyped_grounding() {
        let d = parse_domain(
            "(define (domain t) (:requirements :strips)
               (:predicates (on ?x) (off ?x))
               (:action flip :parameters (?x) :precondition (on ?x) :effect (and (not (on ?x)) (off ?x))))",
        )
        .unwrap();
        let p = parse_problem("(define (problem q) (:domain t) (:objects a b) (:init (on a)) (:goal (off a)))").unwrap();
        let t = ground_pddl(&d, &p).unwrap();
        assert_eq!(t.ops.len(), 2);
        assert!(solve_ground(&t).is_some());
    }
}
