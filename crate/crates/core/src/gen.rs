//! Seeded random maps, missions and blockages for property tests and benches.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::mission::{Entry, Mission, Task, TaskKind, DEFAULT_TIME_BUDGET_S};
use crate::sewer::{Endpoint, Manhole, ManholeId, Pipe, PipeId, Port, SewerGraph, Target};

const INVERTS: [f64; 7] = [0.0, 0.0, 0.0, 10.0, 20.0, 30.0, 45.0];
const PIPE_DIAMETERS: [f64; 4] = [30.0, 40.0, 50.0, 60.0];
const MAX_DEGREE: usize = 5;

/// A valid map with between 2 and `max_manholes` manholes, connected, with
/// a few extra loops and dead-end stubs.
pub fn random_graph<R: Rng>(rng: &mut R, max_manholes: u32) -> SewerGraph {
    let n = rng.gen_range(2..=max_manholes.max(2));
    // (a, Some(b)) joins two manholes; (a, None) is a stub.
    let mut links: Vec<(u32, Option<u32>)> = Vec::new();
    let mut degree = vec![0usize; n as usize + 1];
    let mut pairs = BTreeSet::new();
    let mut link = |a: u32, b: Option<u32>, degree: &mut Vec<usize>, links: &mut Vec<(u32, Option<u32>)>| {
        if degree[a as usize] >= MAX_DEGREE || b.is_some_and(|b| degree[b as usize] >= MAX_DEGREE) {
            return false;
        }
        if let Some(b) = b {
            if a == b || !pairs.insert((a.min(b), a.max(b))) {
                return false;
            }
            degree[b as usize] += 1;
        }
        degree[a as usize] += 1;
        links.push((a, b));
        true
    };
    for i in 2..=n {
        loop {
            let j = rng.gen_range(1..i);
            if link(i, Some(j), &mut degree, &mut links) {
                break;
            }
        }
    }
    for _ in 0..rng.gen_range(0..=n / 2) {
        let (a, b) = (rng.gen_range(1..=n), rng.gen_range(1..=n));
        link(a, Some(b), &mut degree, &mut links);
    }
    for _ in 0..rng.gen_range(0..=n / 3) {
        let a = rng.gen_range(1..=n);
        link(a, None, &mut degree, &mut links);
    }

    let mut pipes = BTreeMap::new();
    let mut incident: Vec<Vec<PipeId>> = vec![Vec::new(); n as usize + 1];
    for (i, (a, b)) in links.iter().enumerate() {
        let id = PipeId(i as u32 + 1);
        incident[*a as usize].push(id);
        if let Some(b) = b {
            incident[*b as usize].push(id);
        }
        let length_cm = (rng.gen_range(100.0..1500.0_f64) * 10.0).round() / 10.0;
        let diameter_cm = *PIPE_DIAMETERS.choose(rng).expect("non-empty");
        pipes.insert(id, Pipe { id, length_cm, diameter_cm, endpoints: Vec::new() });
    }

    let mut manholes = BTreeMap::new();
    for m in 1..=n {
        let id = ManholeId(m);
        let mut list = incident[m as usize].clone();
        list.shuffle(rng);
        // Spread ports evenly, then jitter each by up to 20 degrees.
        let k = list.len().max(1) as i32;
        let base = rng.gen_range(0..72) * 5;
        let mut bearings: Vec<f64> = (0..k)
            .map(|i| {
                let jitter = rng.gen_range(-4..=4) * 5;
                f64::from((base + i * 360 / k / 5 * 5 + jitter).rem_euclid(360))
            })
            .collect();
        bearings.sort_by(f64::total_cmp);
        bearings.dedup();
        while bearings.len() < list.len() {
            let b = f64::from(rng.gen_range(0..72) * 5);
            if !bearings.contains(&b) {
                bearings.push(b);
                bearings.sort_by(f64::total_cmp);
            }
        }
        let ports = list
            .iter()
            .zip(&bearings)
            .enumerate()
            .map(|(i, (pipe, angle))| Port {
                index: i as u32 + 1,
                pipe: *pipe,
                angle_deg: *angle,
                invert_offset_cm: *INVERTS.choose(rng).expect("non-empty"),
            })
            .collect::<Vec<_>>();
        for p in &ports {
            pipes
                .get_mut(&p.pipe)
                .expect("pipe exists")
                .endpoints
                .push(Endpoint { manhole: id, port: p.index });
        }
        let diameter_cm = f64::from(rng.gen_range(80..=150));
        manholes.insert(id, Manhole { id, diameter_cm, ports, recoverable: m == 1 || rng.gen_bool(0.6) });
    }
    for p in pipes.values_mut() {
        p.endpoints.sort();
    }
    let g = SewerGraph { manholes, pipes };
    debug_assert!(g.validate().is_ok());
    g
}

/// A mission on `g` with up to `max_tasks` tasks of the given kinds.
pub fn random_mission<R: Rng>(rng: &mut R, g: &SewerGraph, max_tasks: usize, kinds: &[TaskKind]) -> Mission {
    let pipes: Vec<&Pipe> = g.pipes.values().filter(|p| !p.endpoints.is_empty()).collect();
    let entry_pipe = pipes.choose(rng).expect("a connected map has pipes");
    let towards = entry_pipe.endpoints.choose(rng).expect("non-empty").manhole;
    let exits: Vec<ManholeId> = g.recoverable_manholes().collect();
    let exit = *exits.choose(rng).expect("M1 is always recoverable");
    let pipe_ids: Vec<PipeId> = g.pipes.keys().copied().collect();
    let manhole_ids: Vec<ManholeId> = g.manholes.keys().copied().collect();
    let tasks = (0..rng.gen_range(0..=max_tasks))
        .map(|i| {
            let kind = *kinds.choose(rng).expect("kinds given");
            let target = if kind == TaskKind::Goto && rng.gen_bool(0.5) {
                Target::Manhole(*manhole_ids.choose(rng).expect("non-empty"))
            } else {
                Target::Pipe(*pipe_ids.choose(rng).expect("non-empty"))
            };
            Task { id: format!("t{}", i + 1), kind, target }
        })
        .collect();
    Mission {
        entry: Entry { pipe: entry_pipe.id, towards },
        exit,
        time_budget_s: DEFAULT_TIME_BUDGET_S,
        tasks,
    }
}

/// Up to `max` distinct pipes, never the entry pipe.
pub fn random_blockages<R: Rng>(rng: &mut R, g: &SewerGraph, m: &Mission, max: usize) -> BTreeSet<PipeId> {
    let candidates: Vec<PipeId> = g.pipes.keys().copied().filter(|p| *p != m.entry.pipe).collect();
    let k = rng.gen_range(0..=max.min(candidates.len()));
    candidates.choose_multiple(rng, k).copied().collect()
}
