//! Model → automata compilation.
//!
//! Each root task gets an activation automaton, each dependency a
//! three-location relay automaton, each processor one scheduler automaton.
//! All of them talk through the per-task actions `actT`/`finT` and share
//! the clocks `xactT`/`xexecT`.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{derive_rms_priorities, Activation, Policy, RtModel, Task, TimeExpr, ValidatedModel};
use crate::pta::{ActionId, Automaton, Bound, ClockId, CmpOp, Edge, Guard, GuardAtom, LocId, Location, PtaNetwork};
use crate::Valuation;

/// Name of the failure location shared by every scheduler.
pub const DEADLINE_MISSED: &str = "DeadlineMissed";

/// Deterministic, injective derivation of automaton-level names from task
/// and processor names.
pub struct NamingScheme;

impl NamingScheme {
    pub fn act(task: &str) -> String {
        format!("act{task}")
    }
    pub fn fin(task: &str) -> String {
        format!("fin{task}")
    }
    pub fn xact(task: &str) -> String {
        format!("xact{task}")
    }
    pub fn xexec(task: &str) -> String {
        format!("xexec{task}")
    }
    pub fn xslot(processor: &str) -> String {
        format!("xslot{processor}")
    }
    pub fn deadline_miss(processor: &str) -> String {
        format!("DeadlineMiss_{processor}")
    }
    /// Local action of a TDMA scheduler moving to its next slot.
    pub fn rotate(processor: &str) -> String {
        format!("slot_{processor}")
    }
    pub fn period(task: &str) -> String {
        format!("{task}Period")
    }
    pub fn offset(task: &str) -> String {
        format!("{task}Offset")
    }
    pub fn iat(task: &str) -> String {
        format!("{task}IAT")
    }
    pub fn bcet(task: &str) -> String {
        format!("{task}BCET")
    }
    pub fn wcet(task: &str) -> String {
        format!("{task}WCET")
    }
    pub fn deadline(task: &str) -> String {
        format!("{task}Deadline")
    }
    pub fn slot(processor: &str, index: usize) -> String {
        format!("{processor}Slot{index}")
    }
    pub fn activation_automaton(task: &str) -> String {
        format!("activation_{task}")
    }
    pub fn dependency_automaton(pred: &str, succ: &str) -> String {
        format!("dependency_{pred}_{succ}")
    }
    pub fn scheduler_automaton(processor: &str) -> String {
        format!("scheduler_{processor}")
    }
}

const PARAM_KINDS: [&str; 6] = ["Period", "Offset", "IAT", "BCET", "WCET", "Deadline"];

/// Maps a user-supplied parameter name onto one of `known`, accepting the
/// kind-first spelling (`OffsetT1` for `T1Offset`).
pub fn resolve_param<'a>(name: &str, known: impl IntoIterator<Item = &'a str> + Clone) -> Option<&'a str> {
    if let Some(k) = known.clone().into_iter().find(|k| *k == name) {
        return Some(k);
    }
    let swapped = PARAM_KINDS
        .iter()
        .find_map(|kind| name.strip_prefix(kind).filter(|rest| !rest.is_empty()).map(|rest| format!("{rest}{kind}")))?;
    known.into_iter().find(|k| *k == swapped)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TranslateOptions {
    /// Which tasks send their scheduler to `DeadlineMissed` when activated
    /// again while the previous instance is still pending. Runs where an
    /// undetected overrun happens simply block.
    pub overrun_detection: Overrun,
    pub sporadic_release: SporadicRelease,
}

/// When a sporadic task may be activated for the first time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SporadicRelease {
    /// Exactly at its offset, like a periodic task.
    AtOffset,
    /// Any time from its offset on.
    #[default]
    FromOffset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Overrun {
    #[default]
    All,
    /// Only tasks that carry a deadline.
    WithDeadline,
    Off,
}

impl Overrun {
    fn detects(self, has_deadline: bool) -> bool {
        match self {
            Overrun::All => true,
            Overrun::WithDeadline => has_deadline,
            Overrun::Off => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskMeta {
    pub name: String,
    pub processor: String,
    pub act: ActionId,
    pub fin: ActionId,
    pub xact: ClockId,
    pub xexec: ClockId,
    pub deadline: Option<Bound>,
}

/// What a scheduler location means in task terms.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SchedLoc {
    /// Index into [`NetworkMeta::tasks`].
    pub running: Option<usize>,
    pub pending: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchedulerMeta {
    pub processor: String,
    pub automaton: usize,
    /// Task indices, highest priority first (slot order under TDMA).
    pub tasks: Vec<usize>,
    pub locations: Vec<SchedLoc>,
    pub missed: LocId,
    pub miss_action: ActionId,
    /// Edge index → task whose failure the edge reports.
    pub miss_edges: BTreeMap<usize, usize>,
}

/// Structural side conditions on parameter values, `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feasibility {
    pub label: String,
    pub lhs: Bound,
    pub rhs: Bound,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NetworkMeta {
    pub tasks: Vec<TaskMeta>,
    pub schedulers: Vec<SchedulerMeta>,
    pub feasibility: Vec<Feasibility>,
}

impl NetworkMeta {
    pub fn task_index(&self, name: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.name == name)
    }

    pub fn scheduler_of(&self, automaton: usize) -> Option<&SchedulerMeta> {
        self.schedulers.iter().find(|s| s.automaton == automaton)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Translation {
    pub network: PtaNetwork,
    pub meta: NetworkMeta,
}

/// Translates with default options and drops the metadata.
pub fn translate(model: &ValidatedModel) -> PtaNetwork {
    compile(model, &TranslateOptions::default()).network
}

pub fn compile(model: &ValidatedModel, options: &TranslateOptions) -> Translation {
    let owned;
    let model: &RtModel = if model.processors.iter().any(|p| p.policy == Policy::Rms) {
        owned = derive_rms_priorities(model.model().clone()).expect("validated models satisfy the RMS precondition");
        &owned
    } else {
        model
    };
    let mut b = Builder { net: PtaNetwork::default(), meta: NetworkMeta::default(), bcets: vec![], wcets: vec![] };

    for t in &model.tasks {
        let act = b.net.action(&NamingScheme::act(&t.name));
        let fin = b.net.action(&NamingScheme::fin(&t.name));
        let xact = b.net.clock(&NamingScheme::xact(&t.name));
        let xexec = b.net.clock(&NamingScheme::xexec(&t.name));
        b.meta.tasks.push(TaskMeta {
            name: t.name.clone(),
            processor: t.processor.clone(),
            act,
            fin,
            xact,
            xexec,
            deadline: None,
        });
    }
    for p in &model.processors {
        if model.tasks_on(&p.name).next().is_some() {
            b.net.action(&NamingScheme::deadline_miss(&p.name));
        }
    }
    // Parameters are declared task by task so the output order is stable.
    for (i, t) in model.tasks.iter().enumerate() {
        match &t.activation {
            Activation::Periodic { period: a, offset: o } | Activation::Sporadic { min_iat: a, offset: o } => {
                b.bound(a);
                b.bound(o);
            }
            Activation::Triggered => {}
        }
        let (bcet, wcet) = (b.bound(&t.bcet), b.bound(&t.wcet));
        b.bcets.push(bcet);
        b.wcets.push(wcet);
        b.meta.tasks[i].deadline = t.deadline.as_ref().map(|d| b.bound(d));
    }

    for t in &model.tasks {
        match &t.activation {
            Activation::Periodic { .. } => {
                let a = periodic_activation_in(&mut b.net, t);
                b.net.automata.push(a);
            }
            Activation::Sporadic { .. } => {
                let a = sporadic_activation_in(&mut b.net, t, options.sporadic_release);
                b.net.automata.push(a);
            }
            Activation::Triggered => {}
        }
    }
    for (pred, succ) in &model.dependencies {
        let has_deadline = model.task(pred).is_some_and(|t| t.deadline.is_some());
        let a = dependency_in(&mut b.net, pred, succ, options.overrun_detection.detects(has_deadline));
        b.net.automata.push(a);
    }
    for p in &model.processors {
        let tasks: Vec<&Task> = model.tasks_on(&p.name).collect();
        if tasks.is_empty() {
            continue;
        }
        match &p.policy {
            Policy::FpsPreemptive | Policy::Rms => b.fps(&p.name, &by_priority(tasks), true, options),
            Policy::FpsNonPreemptive => b.fps(&p.name, &by_priority(tasks), false, options),
            Policy::Tdma { slots } => {
                let ordered: Vec<(&Task, &TimeExpr)> =
                    slots.iter().filter_map(|s| model.task(&s.task).map(|t| (t, &s.length))).collect();
                b.tdma(&p.name, &ordered, options);
            }
        }
    }

    for t in &model.tasks {
        let (lhs, rhs) = (b.bound(&t.bcet), b.bound(&t.wcet));
        b.meta.feasibility.push(Feasibility { label: format!("{} bcet <= wcet", t.name), lhs, rhs });
        if let (Activation::Periodic { period, .. }, Some(d)) = (&t.activation, &t.deadline) {
            let (lhs, rhs) = (b.bound(d), b.bound(period));
            b.meta.feasibility.push(Feasibility { label: format!("{} deadline <= period", t.name), lhs, rhs });
        }
    }
    Translation { network: b.net, meta: b.meta }
}

fn by_priority(mut tasks: Vec<&Task>) -> Vec<&Task> {
    tasks.sort_by(|a, b| b.priority.cmp(&a.priority).then_with(|| a.name.cmp(&b.name)));
    tasks
}

fn bound_in(net: &mut PtaNetwork, e: &TimeExpr) -> Bound {
    match e {
        TimeExpr::Const(c) => Bound::Const(*c),
        TimeExpr::Param { name, interval } => Bound::Param(net.param(name, *interval)),
    }
}

fn atom(clock: ClockId, op: CmpOp, rhs: Bound) -> GuardAtom {
    GuardAtom::new(clock, op, rhs)
}

fn edge(source: LocId, guard: Guard, action: Option<ActionId>, resets: &[ClockId], target: LocId) -> Edge {
    Edge { source, guard, action, resets: resets.iter().copied().collect(), target }
}

/// Periodic activation automaton for `t`, as a stand-alone network.
pub fn periodic_activation_pta(t: &Task) -> PtaNetwork {
    let mut net = PtaNetwork::default();
    let a = periodic_activation_in(&mut net, t);
    net.automata.push(a);
    net
}

/// Sporadic activation automaton for `t`, as a stand-alone network.
pub fn sporadic_activation_pta(t: &Task, release: SporadicRelease) -> PtaNetwork {
    let mut net = PtaNetwork::default();
    let a = sporadic_activation_in(&mut net, t, release);
    net.automata.push(a);
    net
}

/// Relay automaton for one dependency, as a stand-alone network.
pub fn dependency_pta(pred: &str, succ: &str, options: &TranslateOptions) -> PtaNetwork {
    let mut net = PtaNetwork::default();
    let a = dependency_in(&mut net, pred, succ, options.overrun_detection.detects(true));
    net.automata.push(a);
    net
}

fn periodic_activation_in(net: &mut PtaNetwork, t: &Task) -> Automaton {
    let Activation::Periodic { period, offset } = &t.activation else {
        panic!("periodic_activation_pta on non-periodic task {}", t.name)
    };
    let x = net.clock(&NamingScheme::xact(&t.name));
    let act = net.action(&NamingScheme::act(&t.name));
    let period = bound_in(net, period);
    let offset = bound_in(net, offset);
    let mut a = Automaton::new(NamingScheme::activation_automaton(&t.name));
    let mut l1 = Location::new("l1");
    l1.invariant = Guard::single(atom(x, CmpOp::Le, offset));
    let mut l2 = Location::new("l2");
    l2.invariant = Guard::single(atom(x, CmpOp::Le, period));
    let l1 = a.add_location(l1);
    let l2 = a.add_location(l2);
    a.add_edge(edge(l1, Guard::single(atom(x, CmpOp::Eq, offset)), Some(act), &[x], l2));
    a.add_edge(edge(l2, Guard::single(atom(x, CmpOp::Eq, period)), Some(act), &[x], l2));
    a
}

fn sporadic_activation_in(net: &mut PtaNetwork, t: &Task, release: SporadicRelease) -> Automaton {
    let Activation::Sporadic { min_iat, offset } = &t.activation else {
        panic!("sporadic_activation_pta on non-sporadic task {}", t.name)
    };
    let x = net.clock(&NamingScheme::xact(&t.name));
    let act = net.action(&NamingScheme::act(&t.name));
    let iat = bound_in(net, min_iat);
    let offset = bound_in(net, offset);
    let mut a = Automaton::new(NamingScheme::activation_automaton(&t.name));
    let mut first = Location::new("l1");
    let op = match release {
        SporadicRelease::AtOffset => {
            first.invariant = Guard::single(atom(x, CmpOp::Le, offset));
            CmpOp::Eq
        }
        SporadicRelease::FromOffset => CmpOp::Ge,
    };
    let l1 = a.add_location(first);
    let l2 = a.add_location(Location::new("l2"));
    a.add_edge(edge(l1, Guard::single(atom(x, op, offset)), Some(act), &[x], l2));
    a.add_edge(edge(l2, Guard::single(atom(x, CmpOp::Ge, iat)), Some(act), &[x], l2));
    a
}

fn dependency_in(net: &mut PtaNetwork, pred: &str, succ: &str, overrun: bool) -> Automaton {
    let act_pred = net.action(&NamingScheme::act(pred));
    let fin_pred = net.action(&NamingScheme::fin(pred));
    let act_succ = net.action(&NamingScheme::act(succ));
    let x_succ = net.clock(&NamingScheme::xact(succ));
    let mut a = Automaton::new(NamingScheme::dependency_automaton(pred, succ));
    let l1 = a.add_location(Location::new("l1"));
    let l2 = a.add_location(Location::new("l2"));
    let mut l3 = Location::new("l3");
    l3.urgent = true;
    let l3 = a.add_location(l3);
    a.add_edge(edge(l1, Guard::truth(), Some(act_pred), &[], l2));
    if overrun {
        a.add_edge(edge(l2, Guard::truth(), Some(act_pred), &[], l2));
    }
    a.add_edge(edge(l2, Guard::truth(), Some(fin_pred), &[], l3));
    a.add_edge(edge(l3, Guard::truth(), Some(act_succ), &[x_succ], l1));
    a
}

struct Builder {
    net: PtaNetwork,
    meta: NetworkMeta,
    bcets: Vec<Bound>,
    wcets: Vec<Bound>,
}

/// Per-location data gathered before the automaton is assembled.
struct SchedState {
    name: String,
    running: Option<usize>,
    pending: Vec<usize>,
    extra_invariant: Vec<GuardAtom>,
}

impl Builder {
    fn bound(&mut self, e: &TimeExpr) -> Bound {
        bound_in(&mut self.net, e)
    }

    fn idx(&self, t: &Task) -> usize {
        self.meta.task_index(&t.name).expect("task registered")
    }

    /// Adds the locations of `states` plus `DeadlineMissed`, and returns
    /// the partially built automaton with its metadata.
    fn sched_skeleton(
        &mut self,
        processor: &str,
        tasks: &[usize],
        states: &[SchedState],
    ) -> (Automaton, SchedulerMeta) {
        let mut a = Automaton::new(NamingScheme::scheduler_automaton(processor));
        let all_exec: BTreeSet<ClockId> = tasks.iter().map(|&t| self.meta.tasks[t].xexec).collect();
        let mut locs = Vec::new();
        for s in states {
            let mut l = Location::new(s.name.clone());
            l.stopped = all_exec.clone();
            if let Some(r) = s.running {
                let tm = &self.meta.tasks[r];
                l.stopped.remove(&tm.xexec);
                let wcet = self.wcets[r];
                l.invariant = Guard::single(atom(tm.xexec, CmpOp::Le, wcet));
            }
            for at in &s.extra_invariant {
                l.invariant.atoms.push(*at);
            }
            a.add_location(l);
            locs.push(SchedLoc { running: s.running, pending: s.pending.clone() });
        }
        let mut missed = Location::new(DEADLINE_MISSED);
        missed.stopped = all_exec;
        let missed = a.add_location(missed);
        locs.push(SchedLoc::default());
        let miss_action = self.net.action(&NamingScheme::deadline_miss(processor));
        a.actions.insert(miss_action);
        let meta = SchedulerMeta {
            processor: processor.to_string(),
            automaton: self.net.automata.len(),
            tasks: tasks.to_vec(),
            locations: locs,
            missed,
            miss_action,
            miss_edges: BTreeMap::new(),
        };
        (a, meta)
    }

    /// Overrun and deadline edges out of a location where `pending` tasks
    /// are waiting or running.
    fn miss_edges(
        &self,
        a: &mut Automaton,
        meta: &mut SchedulerMeta,
        from: LocId,
        pending: &[usize],
        options: &TranslateOptions,
    ) {
        for &t in pending {
            let tm = &self.meta.tasks[t];
            if options.overrun_detection.detects(tm.deadline.is_some()) {
                let guard = Guard::single(atom(tm.xexec, CmpOp::Lt, self.wcets[t]));
                meta.miss_edges.insert(a.edges.len(), t);
                a.add_edge(edge(from, guard, Some(tm.act), &[], meta.missed));
            }
        }
        for &t in pending {
            let tm = &self.meta.tasks[t];
            if let Some(d) = tm.deadline {
                meta.miss_edges.insert(a.edges.len(), t);
                a.add_edge(edge(
                    from,
                    Guard::single(atom(tm.xact, CmpOp::Gt, d)),
                    Some(meta.miss_action),
                    &[],
                    meta.missed,
                ));
            }
        }
    }

    /// Fixed-priority scheduler, preemptive or not. `tasks` is ordered
    /// from highest to lowest priority.
    // Loop indices are priority ranks; `ids` is only one of the tables they index.
    #[allow(clippy::needless_range_loop)]
    fn fps(&mut self, processor: &str, tasks: &[&Task], preemptive: bool, options: &TranslateOptions) {
        let ids: Vec<usize> = tasks.iter().map(|t| self.idx(t)).collect();
        let n = ids.len();
        let name_of = |i: usize| self.meta.tasks[i].name.clone();
        let loc_name = |running: Option<usize>, waiting: &[usize]| match running {
            None => "idle".to_string(),
            Some(r) => {
                let mut s = format!("exec{}", name_of(r));
                if !waiting.is_empty() {
                    s.push_str("wait");
                    for w in waiting {
                        s.push_str(&name_of(*w));
                    }
                }
                s
            }
        };

        // Each state is (running position, waiting positions), positions
        // being indices into `ids` (0 = highest priority).
        let mut keys: Vec<(Option<usize>, Vec<usize>)> = Vec::new();
        if preemptive {
            let mut masks: Vec<u32> = (0..1u32 << n).collect();
            masks.sort_by_key(|m| (m.count_ones(), positions(*m, n)));
            for m in masks {
                let ps = positions(m, n);
                match ps.split_first() {
                    None => keys.push((None, vec![])),
                    Some((r, rest)) => keys.push((Some(*r), rest.to_vec())),
                }
            }
        } else {
            keys.push((None, vec![]));
            let mut rest: Vec<(Option<usize>, Vec<usize>)> = Vec::new();
            for r in 0..n {
                for m in 0..1u32 << n {
                    if m & (1 << r) != 0 {
                        continue;
                    }
                    rest.push((Some(r), positions(m, n)));
                }
            }
            rest.sort_by_key(|(r, w)| (w.len(), *r, w.clone()));
            keys.extend(rest);
        }
        let states: Vec<SchedState> = keys
            .iter()
            .map(|(r, w)| {
                let running = r.map(|p| ids[p]);
                let waiting: Vec<usize> = w.iter().map(|p| ids[*p]).collect();
                let mut pending: Vec<usize> = running.into_iter().chain(waiting.iter().copied()).collect();
                pending.sort_by_key(|t| ids.iter().position(|x| x == t));
                SchedState { name: loc_name(running, &waiting), running, pending, extra_invariant: vec![] }
            })
            .collect();
        let index: BTreeMap<(Option<usize>, Vec<usize>), LocId> =
            keys.iter().cloned().enumerate().map(|(i, k)| (k, LocId(i as u32))).collect();
        let (mut a, mut meta) = self.sched_skeleton(processor, &ids, &states);

        for (i, (r, w)) in keys.iter().enumerate() {
            let from = LocId(i as u32);
            let mut members: Vec<usize> = r.iter().copied().chain(w.iter().copied()).collect();
            members.sort();
            for t in 0..n {
                if members.contains(&t) {
                    continue;
                }
                let key = match (preemptive, r) {
                    (_, None) => (Some(t), vec![]),
                    (true, Some(_)) => {
                        let mut all = members.clone();
                        all.push(t);
                        all.sort();
                        (Some(all[0]), all[1..].to_vec())
                    }
                    (false, Some(run)) => {
                        let mut ws = w.clone();
                        ws.push(t);
                        ws.sort();
                        (Some(*run), ws)
                    }
                };
                let tm = &self.meta.tasks[ids[t]];
                a.add_edge(edge(from, Guard::truth(), Some(tm.act), &[tm.xexec], index[&key]));
            }
            if let Some(run) = r {
                let tm = &self.meta.tasks[ids[*run]];
                let bcet = self.bcets[ids[*run]];
                let (key, resets) = match w.split_first() {
                    None => ((None, vec![]), vec![]),
                    Some((h, rest)) => {
                        let resets = if preemptive { vec![] } else { vec![self.meta.tasks[ids[*h]].xexec] };
                        ((Some(*h), rest.to_vec()), resets)
                    }
                };
                a.add_edge(edge(
                    from,
                    Guard::single(atom(tm.xexec, CmpOp::Ge, bcet)),
                    Some(tm.fin),
                    &resets,
                    index[&key],
                ));
            }
            let pending = states[i].pending.clone();
            self.miss_edges(&mut a, &mut meta, from, &pending, options);
        }
        self.net.automata.push(a);
        self.meta.schedulers.push(meta);
    }

    /// TDMA scheduler: one location per (current slot, pending set).
    fn tdma(&mut self, processor: &str, slots: &[(&Task, &TimeExpr)], options: &TranslateOptions) {
        let tasks: Vec<&Task> = slots.iter().map(|(t, _)| *t).collect();
        let ids: Vec<usize> = tasks.iter().map(|t| self.idx(t)).collect();
        let lengths: Vec<Bound> = slots.iter().map(|(_, l)| self.bound(l)).collect();
        let xslot = self.net.clock(&NamingScheme::xslot(processor));
        let rotate = self.net.action(&NamingScheme::rotate(processor));
        let k = ids.len();
        let mut keys: Vec<(usize, u32)> = Vec::new();
        for slot in 0..k {
            let mut masks: Vec<u32> = (0..1u32 << k).collect();
            masks.sort_by_key(|m| (m.count_ones(), positions(*m, k)));
            keys.extend(masks.into_iter().map(|m| (slot, m)));
        }
        let states: Vec<SchedState> = keys
            .iter()
            .map(|&(slot, m)| {
                let pending: Vec<usize> = positions(m, k).into_iter().map(|p| ids[p]).collect();
                let running = (m & (1 << slot) != 0).then_some(ids[slot]);
                let mut name = format!("slot{slot}");
                if pending.is_empty() {
                    name.push_str("idle");
                } else {
                    if let Some(r) = running {
                        name.push_str(&format!("exec{}", self.meta.tasks[r].name));
                    }
                    let waiting: Vec<&usize> = pending.iter().filter(|p| Some(**p) != running).collect();
                    if !waiting.is_empty() {
                        name.push_str("wait");
                        for w in waiting {
                            name.push_str(&self.meta.tasks[*w].name);
                        }
                    }
                }
                SchedState { name, running, pending, extra_invariant: vec![atom(xslot, CmpOp::Le, lengths[slot])] }
            })
            .collect();
        let index: BTreeMap<(usize, u32), LocId> =
            keys.iter().enumerate().map(|(i, k)| (*k, LocId(i as u32))).collect();
        let (mut a, mut meta) = self.sched_skeleton(processor, &ids, &states);
        // The slot clock runs everywhere except in the failure location.
        let missed = meta.missed;
        a.locations[missed.idx()].stopped.insert(xslot);

        for (i, &(slot, m)) in keys.iter().enumerate() {
            let from = LocId(i as u32);
            for t in 0..k {
                if m & (1 << t) == 0 {
                    let tm = &self.meta.tasks[ids[t]];
                    a.add_edge(edge(from, Guard::truth(), Some(tm.act), &[tm.xexec], index[&(slot, m | 1 << t)]));
                }
            }
            if m & (1 << slot) != 0 {
                let tm = &self.meta.tasks[ids[slot]];
                let bcet = self.bcets[ids[slot]];
                a.add_edge(edge(
                    from,
                    Guard::single(atom(tm.xexec, CmpOp::Ge, bcet)),
                    Some(tm.fin),
                    &[],
                    index[&(slot, m & !(1 << slot))],
                ));
            }
            a.add_edge(edge(
                from,
                Guard::single(atom(xslot, CmpOp::Eq, lengths[slot])),
                Some(rotate),
                &[xslot],
                index[&((slot + 1) % k, m)],
            ));
            let pending = states[i].pending.clone();
            self.miss_edges(&mut a, &mut meta, from, &pending, options);
        }
        self.net.automata.push(a);
        self.meta.schedulers.push(meta);
    }
}

fn positions(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask & (1 << i) != 0).collect()
}

/// Replaces every constant of the model by a parameter named after the
/// quantity it sets, returning the lifted model and the valuation that
/// restores the original values.
pub fn lift_parameters(model: &RtModel) -> (RtModel, Valuation) {
    let mut out = model.clone();
    let mut nominal = Valuation::new();
    let mut lift = |e: &mut TimeExpr, name: String| {
        if let TimeExpr::Const(v) = e {
            nominal.insert(name.clone(), *v);
            *e = TimeExpr::param(name);
        }
    };
    for t in &mut out.tasks {
        let n = t.name.clone();
        match &mut t.activation {
            Activation::Periodic { period, offset } => {
                lift(period, NamingScheme::period(&n));
                lift(offset, NamingScheme::offset(&n));
            }
            Activation::Sporadic { min_iat, offset } => {
                lift(min_iat, NamingScheme::iat(&n));
                lift(offset, NamingScheme::offset(&n));
            }
            Activation::Triggered => {}
        }
        lift(&mut t.bcet, NamingScheme::bcet(&n));
        lift(&mut t.wcet, NamingScheme::wcet(&n));
        if let Some(d) = &mut t.deadline {
            lift(d, NamingScheme::deadline(&n));
        }
    }
    for p in &mut out.processors {
        let pn = p.name.clone();
        if let Policy::Tdma { slots } = &mut p.policy {
            for (i, s) in slots.iter_mut().enumerate() {
                lift(&mut s.length, NamingScheme::slot(&pn, i));
            }
        }
    }
    (out, nominal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, Processor, TdmaSlot};
    use crate::pta::well_formed;
    use crate::Rational;

    fn task(name: &str, cpu: &str, prio: i64) -> Task {
        Task {
            name: name.into(),
            processor: cpu.into(),
            activation: Activation::Periodic { period: TimeExpr::constant(10), offset: TimeExpr::constant(0) },
            bcet: TimeExpr::constant(1),
            wcet: TimeExpr::constant(2),
            deadline: Some(TimeExpr::constant(10)),
            priority: Some(prio),
        }
    }

    fn one_cpu(policy: Policy, n: usize) -> RtModel {
        RtModel {
            processors: vec![Processor { name: "P".into(), policy }],
            tasks: (0..n).map(|i| task(&format!("A{i}"), "P", (n - i) as i64)).collect(),
            dependencies: vec![],
        }
    }

    fn scheduler<'a>(tr: &'a Translation, p: &str) -> &'a Automaton {
        tr.network.automaton(&NamingScheme::scheduler_automaton(p)).unwrap()
    }

    fn case_study() -> Translation {
        compile(&validate(crate::casestudy::model()).unwrap(), &TranslateOptions::default())
    }

    #[test]
    fn kind_first_names_resolve() {
        let known = ["T1Offset", "T1WCET"];
        assert_eq!(resolve_param("OffsetT1", known), Some("T1Offset"));
        assert_eq!(resolve_param("T1WCET", known), Some("T1WCET"));
        assert_eq!(resolve_param("Offset", known), None);
        assert_eq!(resolve_param("T2Offset", known), None);
    }

    #[test]
    fn case_study_counts() {
        let tr = case_study();
        let task_actions = tr.network.actions.iter().filter(|a| a.starts_with("act") || a.starts_with("fin")).count();
        assert_eq!(task_actions, 14);
        assert_eq!(tr.network.clocks.len(), 14);
        assert_eq!(tr.network.automata.len(), 3 + 4 + 3);
        well_formed(&tr.network).unwrap();
        let (lifted, _) = lift_parameters(&crate::casestudy::model());
        let lifted = compile(&validate(lifted).unwrap(), &TranslateOptions::default());
        assert!(lifted.network.params.len() <= 28);
        well_formed(&lifted.network).unwrap();
    }

    #[test]
    fn two_task_preemptive_scheduler() {
        let tr = case_study();
        let cpu1 = scheduler(&tr, "CPU1");
        let names: Vec<&str> = cpu1.locations.iter().map(|l| l.name.as_str()).collect();
        assert_eq!(names, ["idle", "execT1", "execT5", "execT1waitT5", DEADLINE_MISSED]);
        let exec_t1 = cpu1.loc(cpu1.location_named("execT1waitT5").unwrap());
        let x5 = tr.network.find_clock("xexecT5").unwrap();
        assert!(exec_t1.stopped.contains(&x5));
        assert_eq!(tr.network.guard_text(&exec_t1.invariant), "xexecT1 <= 5");
        assert_eq!(scheduler(&tr, "CPU2").locations.len(), 9);
    }

    #[test]
    fn location_count_is_two_to_the_n_plus_one() {
        for n in 1..=5 {
            let tr = compile(&validate(one_cpu(Policy::FpsPreemptive, n)).unwrap(), &TranslateOptions::default());
            assert_eq!(scheduler(&tr, "P").locations.len(), (1 << n) + 1, "n = {n}");
            well_formed(&tr.network).unwrap();
        }
    }

    /// Reachable (running, waiting) pairs of an abstract non-preemptive
    /// dispatcher, priorities by index.
    fn nonpreemptive_oracle(n: usize) -> usize {
        let mut seen = BTreeSet::new();
        let mut todo = vec![(None::<usize>, BTreeSet::<usize>::new())];
        while let Some((r, w)) = todo.pop() {
            if !seen.insert((r, w.clone())) {
                continue;
            }
            for t in 0..n {
                if r == Some(t) || w.contains(&t) {
                    continue;
                }
                match r {
                    None => todo.push((Some(t), w.clone())),
                    Some(_) => {
                        let mut w2 = w.clone();
                        w2.insert(t);
                        todo.push((r, w2));
                    }
                }
            }
            if r.is_some() {
                let mut w2 = w.clone();
                let next = w2.iter().next().copied();
                if let Some(h) = next {
                    w2.remove(&h);
                }
                todo.push((next, w2));
            }
        }
        seen.len() + 1
    }

    #[test]
    fn nonpreemptive_matches_oracle() {
        for n in 1..=4 {
            let tr = compile(&validate(one_cpu(Policy::FpsNonPreemptive, n)).unwrap(), &TranslateOptions::default());
            assert_eq!(scheduler(&tr, "P").locations.len(), nonpreemptive_oracle(n), "n = {n}");
        }
        assert_eq!(nonpreemptive_oracle(2), 6);
    }

    #[test]
    fn nonpreemptive_does_not_stop_running_task() {
        let tr = compile(&validate(one_cpu(Policy::FpsNonPreemptive, 2)).unwrap(), &TranslateOptions::default());
        let s = scheduler(&tr, "P");
        let l = s.loc(s.location_named("execA1waitA0").unwrap());
        let x1 = tr.network.find_clock("xexecA1").unwrap();
        assert!(!l.stopped.contains(&x1));
        // Completion hands over to the waiting task and starts its budget.
        let fin = tr.network.find_action("finA1").unwrap();
        let e = s
            .edges
            .iter()
            .find(|e| e.source == s.location_named("execA1waitA0").unwrap() && e.action == Some(fin))
            .unwrap();
        assert_eq!(s.loc(e.target).name, "execA0");
        assert!(e.resets.contains(&tr.network.find_clock("xexecA0").unwrap()));
    }

    #[test]
    fn tdma_hand_simulated() {
        let slots = vec![
            TdmaSlot { task: "A0".into(), length: TimeExpr::constant(3) },
            TdmaSlot { task: "A1".into(), length: TimeExpr::constant(4) },
        ];
        let mut m = one_cpu(Policy::Tdma { slots }, 2);
        for t in &mut m.tasks {
            t.priority = None;
        }
        let tr = compile(&validate(m).unwrap(), &TranslateOptions::default());
        let s = scheduler(&tr, "P");
        assert_eq!(s.locations.len(), 2 * 4 + 1);
        well_formed(&tr.network).unwrap();
        let net = &tr.network;
        let rotate = net.find_action(&NamingScheme::rotate("P")).unwrap();
        // From slot 0 with A1 pending: A1 waits, the slot ends after 3.
        let from = s.location_named("slot0waitA1").unwrap();
        let out: Vec<&Edge> = s.edges.iter().filter(|e| e.source == from).collect();
        let rot = out.iter().find(|e| e.action == Some(rotate)).unwrap();
        assert_eq!(net.guard_text(&rot.guard), "xslotP = 3");
        assert_eq!(s.loc(rot.target).name, "slot1execA1");
        let l = s.loc(from);
        assert!(l.stopped.contains(&net.find_clock("xexecA1").unwrap()));
        assert_eq!(net.guard_text(&l.invariant), "xslotP <= 3");
        // act A0, rotate, overrun A1, deadline A1.
        assert_eq!(out.len(), 4);
    }

    #[test]
    fn fragments() {
        let mut t = task("T", "P", 1);
        t.activation = Activation::Sporadic { min_iat: TimeExpr::constant(20), offset: TimeExpr::constant(0) };
        let exact = sporadic_activation_pta(&t, SporadicRelease::AtOffset);
        let a = &exact.automata[0];
        assert_eq!(exact.guard_text(&a.edges[0].guard), "xactT = 0");
        assert_eq!(exact.guard_text(&a.locations[0].invariant), "xactT <= 0");
        assert_eq!(exact.guard_text(&a.edges[1].guard), "xactT >= 20");
        assert!(a.locations[1].invariant.is_true());
        let late = sporadic_activation_pta(&t, SporadicRelease::FromOffset);
        assert_eq!(late.guard_text(&late.automata[0].edges[0].guard), "xactT >= 0");
        assert!(late.automata[0].locations[0].invariant.is_true());

        let p = periodic_activation_pta(&task("T", "P", 1));
        assert_eq!(p.guard_text(&p.automata[0].edges[1].guard), "xactT = 10");

        let d = dependency_pta("A", "B", &TranslateOptions { overrun_detection: Overrun::Off, ..Default::default() });
        let a = &d.automata[0];
        assert_eq!(a.edges.len(), 3);
        assert!(a.locations[2].urgent);
        assert_eq!(a.edges[2].resets.iter().map(|c| d.clock_name(*c)).collect::<Vec<_>>(), ["xactB"]);
        assert_eq!(dependency_pta("A", "B", &TranslateOptions::default()).automata[0].edges.len(), 4);
    }

    #[test]
    fn rms_orders_by_period() {
        let mut m = one_cpu(Policy::Rms, 2);
        for (t, p) in m.tasks.iter_mut().zip([20, 5]) {
            t.priority = None;
            t.activation = Activation::Periodic { period: TimeExpr::constant(p), offset: TimeExpr::constant(0) };
            t.deadline = None;
        }
        let tr = compile(&validate(m).unwrap(), &TranslateOptions::default());
        assert_eq!(tr.meta.schedulers[0].tasks, vec![1, 0]);
        assert!(scheduler(&tr, "P").location_named("execA1waitA0").is_some());
    }

    #[test]
    fn miss_edges_are_tagged() {
        let tr = case_study();
        let s = &tr.meta.schedulers[0];
        let a = &tr.network.automata[s.automaton];
        for (e, t) in &s.miss_edges {
            assert_eq!(a.edges[*e].target, s.missed);
            assert!(s.tasks.contains(t));
        }
        let into_missed = a.edges.iter().filter(|e| e.target == s.missed).count();
        assert_eq!(into_missed, s.miss_edges.len());
    }

    #[test]
    fn lifting_round_trips() {
        let m = crate::casestudy::model();
        let (lifted, nominal) = lift_parameters(&m);
        for (name, e) in lifted.time_exprs() {
            let p = e.param_name().unwrap_or_else(|| panic!("{name} left constant"));
            assert!(nominal.contains_key(p));
        }
        let t1 = lifted.task("T1").unwrap();
        assert_eq!(t1.wcet.eval(&nominal), Some(Rational::from_integer(5)));
    }

    #[test]
    fn empty_model() {
        let tr = compile(&validate(RtModel::default()).unwrap(), &TranslateOptions::default());
        assert!(tr.network.automata.is_empty());
        well_formed(&tr.network).unwrap();
    }
}
