//! Random small models and the property checks shared by the property
//! suites and the acceptance harness.

#![allow(dead_code)]

use proptest::prelude::*;
use rtforge::engine::{self, CheckOptions, VerdictKind};
use rtforge::model::{self, Activation, Policy, Processor, RtModel, Task, TdmaSlot, TimeExpr, ValidatedModel};
use rtforge::pta::{self, PtaNetwork};
use rtforge::translate::{self, NamingScheme, Translation};
use rtforge::{Rational, Valuation};

#[derive(Debug, Clone)]
struct TaskGen {
    cpu: usize,
    kind: u8,
    period: i64,
    offset: i64,
    bcet: i64,
    extra: i64,
    deadline: Option<i64>,
}

fn task_gen() -> impl Strategy<Value = TaskGen> {
    (0..2usize, 0..4u8, 3..9i64, 0..4i64, 1..3i64, 0..2i64, proptest::option::of(1..9i64)).prop_map(
        |(cpu, kind, period, offset, bcet, extra, deadline)| TaskGen {
            cpu,
            kind,
            period,
            offset,
            bcet,
            extra,
            deadline,
        },
    )
}

/// Valid models with 1 to 3 tasks on up to two processors, integer
/// constants below 10. Kind 0-1 periodic, 2 sporadic, 3 triggered by the
/// previous task.
pub fn arb_model() -> impl Strategy<Value = ValidatedModel> {
    (proptest::collection::vec(task_gen(), 1..4), 0..3u8, 0..3u8, 1..3i64).prop_filter_map(
        "invalid",
        |(gens, p0, p1, slot)| {
            let policy = |p: u8| match p {
                0 => Policy::FpsPreemptive,
                1 => Policy::FpsNonPreemptive,
                _ => Policy::Tdma { slots: vec![] },
            };
            let mut processors: Vec<Processor> = [p0, p1]
                .iter()
                .enumerate()
                .map(|(i, p)| Processor { name: format!("P{i}"), policy: policy(*p) })
                .collect();
            let mut tasks = Vec::new();
            let mut deps = Vec::new();
            for (i, g) in gens.iter().enumerate() {
                let name = format!("T{i}");
                let int = TimeExpr::constant;
                let activation = match g.kind {
                    3 if i > 0 => {
                        deps.push((format!("T{}", i - 1), name.clone()));
                        Activation::Triggered
                    }
                    2 => Activation::Sporadic { min_iat: int(g.period), offset: int(g.offset) },
                    _ => Activation::Periodic { period: int(g.period), offset: int(g.offset) },
                };
                let deadline = g.deadline.map(|d| match activation {
                    Activation::Triggered => d,
                    _ => d.min(g.period),
                });
                tasks.push(Task {
                    name,
                    processor: format!("P{}", g.cpu),
                    activation,
                    bcet: int(g.bcet),
                    wcet: int(g.bcet + g.extra),
                    deadline: deadline.map(int),
                    priority: Some(i as i64 + 1),
                });
            }
            for p in &mut processors {
                if let Policy::Tdma { slots } = &mut p.policy {
                    *slots = tasks
                        .iter()
                        .filter(|t| t.processor == p.name)
                        .map(|t| TdmaSlot { task: t.name.clone(), length: TimeExpr::constant(slot) })
                        .collect();
                }
            }
            processors.retain(|p| tasks.iter().any(|t| t.processor == p.name));
            model::validate(RtModel { processors, tasks, dependencies: deps }).ok()
        },
    )
}

pub fn compile(m: &ValidatedModel) -> Translation {
    translate::compile(m, &Default::default())
}

pub fn translation_deterministic(m: &ValidatedModel) -> Result<(), String> {
    let a = rtforge::emit::emit_imitator(&translate::translate(m), "2").map_err(|e| e.to_string())?;
    let b = rtforge::emit::emit_imitator(&translate::translate(m), "2").map_err(|e| e.to_string())?;
    (a == b).then_some(()).ok_or_else(|| "two translations differ".into())
}

/// Two actions and two clocks per task, plus one slot clock per TDMA
/// processor.
pub fn count_laws(m: &ValidatedModel) -> Result<(), String> {
    let net = translate::translate(m);
    let n = m.tasks.len();
    let task_actions = net
        .actions
        .iter()
        .filter(|a| m.tasks.iter().any(|t| **a == NamingScheme::act(&t.name) || **a == NamingScheme::fin(&t.name)))
        .count();
    if task_actions != 2 * n {
        return Err(format!("{task_actions} task actions for {n} tasks"));
    }
    let tdma = m.processors.iter().filter(|p| matches!(p.policy, Policy::Tdma { .. })).count();
    if net.clocks.len() != 2 * n + tdma {
        return Err(format!("{} clocks for {n} tasks and {tdma} TDMA processors", net.clocks.len()));
    }
    Ok(())
}

/// In every scheduler location at most one of its tasks' execution
/// clocks runs, and it is the running task's.
pub fn one_running_clock(m: &ValidatedModel) -> Result<(), String> {
    let tr = compile(m);
    for s in &tr.meta.schedulers {
        let a = &tr.network.automata[s.automaton];
        for (li, l) in a.locations.iter().enumerate() {
            let running: Vec<usize> =
                s.tasks.iter().copied().filter(|t| !l.stopped.contains(&tr.meta.tasks[*t].xexec)).collect();
            if running.len() > 1 {
                return Err(format!("{}.{} runs {running:?}", a.name, l.name));
            }
            let declared = s.locations.get(li).and_then(|sl| sl.running);
            if running.first().copied() != declared && li != s.missed.idx() {
                return Err(format!("{}.{}: clock of {running:?} runs but meta says {declared:?}", a.name, l.name));
            }
        }
    }
    Ok(())
}

pub fn substitute_preserves(m: &ValidatedModel) -> Result<(), String> {
    let (lifted, nominal) = translate::lift_parameters(m);
    let lifted = model::validate(lifted).map_err(|e| e.to_string())?;
    let net = translate::translate(&lifted);
    pta::well_formed(&net).map_err(|e| format!("parametric: {e}"))?;
    let concrete = pta::substitute(&net, &nominal).map_err(|e| e.to_string())?;
    pta::well_formed(&concrete).map_err(|e| format!("substituted: {e}"))?;
    if !concrete.params.is_empty() {
        return Err("parameters left after substitution".into());
    }
    let direct = translate::translate(m);
    if concrete.automata.len() != direct.automata.len() {
        return Err("automaton count changed".into());
    }
    Ok(())
}

fn miss(net: &PtaNetwork, quantum: i64) -> Option<bool> {
    let opts = CheckOptions { quantum, state_limit: 2_000_000, ..Default::default() };
    match engine::check_with(net, &Valuation::new(), &opts).ok()?.kind {
        VerdictKind::Schedulable => Some(false),
        VerdictKind::DeadlineMiss { .. } => Some(true),
        VerdictKind::Inconclusive { .. } => None,
    }
}

/// A finer grid never loses a miss.
pub fn quantum_monotone(m: &ValidatedModel) -> Result<(), String> {
    let net = translate::translate(m);
    match (miss(&net, 1), miss(&net, 2)) {
        (Some(true), Some(false)) => Err("miss at quantum 1, schedulable at 1/2".into()),
        _ => Ok(()),
    }
}

pub fn witness_replays(m: &ValidatedModel) -> Result<(), String> {
    let net = translate::translate(m);
    let v = Valuation::new();
    for quantum in [1, 2] {
        let opts = CheckOptions { quantum, state_limit: 2_000_000, ..Default::default() };
        let verdict = engine::check_with(&net, &v, &opts).map_err(|e| e.to_string())?;
        if let Some(t) = verdict.trace() {
            let check = engine::validate_trace(&net, &v, &t.events).map_err(|e| e.to_string())?;
            if !check.accepted || !check.reached_miss {
                return Err(format!("quantum {quantum}: witness {:?} rejected: {:?}", t.events, check.rejection));
            }
        }
    }
    Ok(())
}

/// Locations reachable within a time horizon agree with and without clock
/// saturation and dead-clock zeroing.
pub fn saturation_equivalent(m: &ValidatedModel, horizon: u16) -> Result<(), String> {
    let net = translate::translate(m);
    let s = engine::scale(&net, &Valuation::new()).map_err(|e| e.to_string())?;
    let reduced = CheckOptions::default();
    let plain = CheckOptions { saturate: false, dead_clock_reduction: false, ..Default::default() };
    let a = engine::reachable_locations(&s, &reduced, Some(horizon)).map_err(|e| e.to_string())?;
    let b = engine::reachable_locations(&s, &plain, Some(horizon)).map_err(|e| e.to_string())?;
    (a == b).then_some(()).ok_or_else(|| format!("{} vs {} location vectors", a.len(), b.len()))
}

pub fn r(n: i64) -> Rational {
    Rational::from_integer(n)
}
