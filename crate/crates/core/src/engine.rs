//! Concrete semantics for parameter-free networks.
//!
//! [`check_schedulability`] explores the digitized state space: constants
//! are scaled to integers, time advances one grid step at a time, and each
//! clock saturates one step above the largest constant it is compared
//! with. Clocks that no automaton can read before their next reset are
//! zeroed, which keeps equivalent states from being counted twice.
//!
//! [`validate_trace`] replays a timed script with exact rationals instead.

use std::collections::VecDeque;
use std::fmt;

use hashbrown::HashTable;
use rustc_hash::FxHasher;
use serde::Serialize;
use std::hash::{Hash, Hasher};

use crate::pta::{ActionId, CmpOp, Guard, LocId, PtaNetwork, SubstituteError};
use crate::rational::{format_decimal, lcm_of_denominators, Rational};
use crate::translate::{Translation, DEADLINE_MISSED};
use crate::Valuation;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Substitute(#[from] SubstituteError),
    #[error("TOO_MANY_CLOCKS: {0} clocks, at most 128 are supported")]
    TooManyClocks(usize),
    #[error("CONSTANT_TOO_LARGE: scaled constant {0} exceeds the clock range")]
    ConstantTooLarge(String),
    #[error("BAD_QUANTUM: {0}")]
    BadQuantum(String),
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::Substitute(e) => e.code(),
            EngineError::TooManyClocks(_) => "TOO_MANY_CLOCKS",
            EngineError::ConstantTooLarge(_) => "CONSTANT_TOO_LARGE",
            EngineError::BadQuantum(_) => "BAD_QUANTUM",
        }
    }
}

/// A parameter-free network whose constants are all integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaledNetwork {
    pub net: PtaNetwork,
    /// LCM of the denominators of the original constants.
    pub scale: i64,
    /// Grid steps per model unit.
    pub quantum: i64,
}

impl ScaledNetwork {
    /// Original time units per grid step.
    pub fn step(&self) -> Rational {
        Rational::new(1, self.scale * self.quantum)
    }
}

/// Substitutes `v` and rescales all constants to integers.
pub fn scale(net: &PtaNetwork, v: &Valuation) -> Result<ScaledNetwork, EngineError> {
    scale_with_quantum(net, v, 1)
}

/// As [`scale`], with `quantum` grid steps per model unit.
pub fn scale_with_quantum(net: &PtaNetwork, v: &Valuation, quantum: i64) -> Result<ScaledNetwork, EngineError> {
    if quantum < 1 {
        return Err(EngineError::BadQuantum(format!("{quantum} steps per unit")));
    }
    let mut concrete = crate::pta::substitute(net, v)?;
    let scale = lcm_of_denominators(&concrete.constants());
    let factor = Rational::from_integer(scale * quantum);
    for a in &mut concrete.automata {
        let guards = a.locations.iter_mut().map(|l| &mut l.invariant).chain(a.edges.iter_mut().map(|e| &mut e.guard));
        for g in guards {
            for atom in &mut g.atoms {
                if let crate::pta::Bound::Const(c) = &mut atom.rhs {
                    *c *= factor;
                }
            }
        }
    }
    Ok(ScaledNetwork { net: concrete, scale, quantum })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    /// Grid steps per model unit (1 = integer grid).
    pub quantum: i64,
    /// Give up (inconclusive) after this many distinct states.
    pub state_limit: usize,
    pub saturate: bool,
    pub dead_clock_reduction: bool,
}

pub const DEFAULT_STATE_LIMIT: usize = 20_000_000;

impl Default for CheckOptions {
    fn default() -> Self {
        Self { quantum: 1, state_limit: DEFAULT_STATE_LIMIT, saturate: true, dead_clock_reduction: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEvent {
    #[serde(serialize_with = "ser_rational")]
    pub time: Rational,
    /// `None` is a pure delay up to `time`.
    pub action: Option<String>,
}

fn ser_rational<S: serde::Serializer>(v: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_decimal(v))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GanttSegment {
    pub task: String,
    pub processor: String,
    #[serde(serialize_with = "ser_rational")]
    pub start: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub end: Rational,
    /// The instance was still pending when the segment ended.
    pub preempted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MissInfo {
    pub processor: String,
    pub task: String,
    /// Instant the violated deadline expired (activation + deadline), or
    /// the detection time when the task has no deadline.
    #[serde(serialize_with = "ser_rational")]
    pub marker: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub detected: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Release {
    pub task: String,
    pub processor: String,
    #[serde(serialize_with = "ser_rational")]
    pub time: Rational,
}

/// A timed run plus what it means for tasks, once [`annotate`]d.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct TimedTrace {
    pub events: Vec<TraceEvent>,
    /// Processor names, one chart lane each.
    pub lanes: Vec<String>,
    pub gantt: Vec<GanttSegment>,
    pub releases: Vec<Release>,
    pub miss: Option<MissInfo>,
}

impl TimedTrace {
    pub fn from_events(events: Vec<TraceEvent>) -> Self {
        Self { events, ..Self::default() }
    }

    /// Instant of the last event, 0 for an empty trace.
    pub fn end(&self) -> Rational {
        self.events.last().map(|e| e.time).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerdictKind {
    Schedulable,
    DeadlineMiss {
        trace: TimedTrace,
    },
    /// The state limit was hit before the search finished.
    Inconclusive {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub states_explored: usize,
}

impl Verdict {
    pub fn is_schedulable(&self) -> bool {
        matches!(self.kind, VerdictKind::Schedulable)
    }
    pub fn is_miss(&self) -> bool {
        matches!(self.kind, VerdictKind::DeadlineMiss { .. })
    }
    pub fn trace(&self) -> Option<&TimedTrace> {
        match &self.kind {
            VerdictKind::DeadlineMiss { trace } => Some(trace),
            _ => None,
        }
    }
}

// ---- compiled form -----------------------------------------------------

type Mask = u128;

#[derive(Debug, Clone, Copy)]
struct CAtom {
    clock: u16,
    op: CmpOp,
    c: u32,
}

#[derive(Debug, Clone)]
struct CEdge {
    guard: Vec<CAtom>,
    resets: Mask,
    target: u16,
}

#[derive(Debug, Clone)]
struct CLoc {
    urgent: bool,
    target: bool,
    invariant: Vec<CAtom>,
    stopped: Mask,
    live: Mask,
    /// Edges grouped by action id, sorted by action.
    by_action: Vec<(u32, Vec<CEdge>)>,
    silent: Vec<CEdge>,
}

/// Where a successor came from, for witness reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Delay,
    Action(ActionId),
    Silent(usize),
}

pub(crate) struct Compiled {
    n_auto: usize,
    n_clocks: usize,
    caps: Vec<u16>,
    locs: Vec<Vec<CLoc>>,
    declarers: Vec<Vec<usize>>,
    initial: Vec<u16>,
    saturate: bool,
    dead: bool,
}

fn atom_holds(a: &CAtom, v: u16) -> bool {
    a.op.holds(v as u32, a.c)
}

fn guard_holds(g: &[CAtom], clocks: &[u16]) -> bool {
    g.iter().all(|a| atom_holds(a, clocks[a.clock as usize]))
}

fn mask_of<'a>(clocks: impl IntoIterator<Item = &'a crate::pta::ClockId>) -> Mask {
    clocks.into_iter().fold(0, |m, c| m | 1 << c.idx())
}

fn guard_mask(g: &Guard) -> Mask {
    g.atoms.iter().fold(0, |m, a| m | 1 << a.clock.idx())
}

impl Compiled {
    pub(crate) fn new(s: &ScaledNetwork, opts: &CheckOptions) -> Result<Self, EngineError> {
        let net = &s.net;
        let n_clocks = net.clocks.len();
        if n_clocks > 128 {
            return Err(EngineError::TooManyClocks(n_clocks));
        }
        let mut ceil = vec![0i64; n_clocks];
        for atom in net.atoms() {
            if let crate::pta::Bound::Const(c) = atom.rhs {
                let c = c.to_integer();
                ceil[atom.clock.idx()] = ceil[atom.clock.idx()].max(c);
            }
        }
        let mut caps = Vec::with_capacity(n_clocks);
        for (i, c) in ceil.iter().enumerate() {
            if *c + 1 > u16::MAX as i64 {
                return Err(EngineError::ConstantTooLarge(format!("{} on {}", c, net.clocks[i])));
            }
            caps.push((*c + 1) as u16);
        }
        let conv = |g: &Guard| -> Vec<CAtom> {
            g.atoms
                .iter()
                .map(|a| CAtom {
                    clock: a.clock.0 as u16,
                    op: a.op,
                    c: match a.rhs {
                        crate::pta::Bound::Const(c) => c.to_integer() as u32,
                        crate::pta::Bound::Param(_) => unreachable!("scaled networks have no parameters"),
                    },
                })
                .collect()
        };

        // Clocks every firing of an action resets: some declarer resets
        // them on all of its edges carrying the action.
        let declarers = net.declarers();
        let mut always_reset = vec![0 as Mask; net.actions.len()];
        for (act, decl) in declarers.iter().enumerate() {
            for &ai in decl {
                let mut m: Option<Mask> = None;
                for e in net.automata[ai].edges.iter().filter(|e| e.action == Some(ActionId(act as u32))) {
                    let r = mask_of(&e.resets);
                    m = Some(m.map_or(r, |x| x & r));
                }
                always_reset[act] |= m.unwrap_or(0);
            }
        }

        let mut locs = Vec::with_capacity(net.automata.len());
        for a in &net.automata {
            // live[l]: clocks this automaton may read from l before a reset.
            let n = a.locations.len();
            let mut live: Vec<Mask> = a.locations.iter().map(|l| guard_mask(&l.invariant)).collect();
            for e in &a.edges {
                live[e.source.idx()] |= guard_mask(&e.guard);
            }
            loop {
                let mut changed = false;
                for e in &a.edges {
                    let mut reset = mask_of(&e.resets);
                    if let Some(act) = e.action {
                        reset |= always_reset[act.idx()];
                    }
                    let add = live[e.target.idx()] & !reset;
                    if live[e.source.idx()] | add != live[e.source.idx()] {
                        live[e.source.idx()] |= add;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            let mut out = Vec::with_capacity(n);
            for (li, l) in a.locations.iter().enumerate() {
                let mut by_action: Vec<(u32, Vec<CEdge>)> = Vec::new();
                let mut silent = Vec::new();
                for e in a.edges.iter().filter(|e| e.source.idx() == li) {
                    let ce = CEdge { guard: conv(&e.guard), resets: mask_of(&e.resets), target: e.target.0 as u16 };
                    match e.action {
                        None => silent.push(ce),
                        Some(act) => match by_action.iter_mut().find(|(x, _)| *x == act.0) {
                            Some((_, v)) => v.push(ce),
                            None => by_action.push((act.0, vec![ce])),
                        },
                    }
                }
                by_action.sort_by_key(|(a, _)| *a);
                out.push(CLoc {
                    urgent: l.urgent,
                    target: l.name == DEADLINE_MISSED,
                    invariant: conv(&l.invariant),
                    stopped: mask_of(&l.stopped),
                    live: live[li],
                    by_action,
                    silent,
                });
            }
            locs.push(out);
        }
        let mut initial: Vec<u16> = net.automata.iter().map(|a| a.initial.0 as u16).collect();
        initial.extend(std::iter::repeat_n(0u16, n_clocks));
        Ok(Self {
            n_auto: net.automata.len(),
            n_clocks,
            caps,
            locs,
            declarers,
            initial,
            saturate: opts.saturate,
            dead: opts.dead_clock_reduction,
        })
    }

    fn loc(&self, state: &[u16], a: usize) -> &CLoc {
        &self.locs[a][state[a] as usize]
    }

    fn invariants_hold(&self, state: &[u16]) -> bool {
        let clocks = &state[self.n_auto..];
        (0..self.n_auto).all(|a| guard_holds(&self.loc(state, a).invariant, clocks))
    }

    fn is_target(&self, state: &[u16]) -> bool {
        (0..self.n_auto).any(|a| self.loc(state, a).target)
    }

    fn canonicalize(&self, state: &mut [u16]) {
        if !self.dead {
            return;
        }
        let live = (0..self.n_auto).fold(0 as Mask, |m, a| m | self.loc(state, a).live);
        for c in 0..self.n_clocks {
            if live & (1 << c) == 0 {
                state[self.n_auto + c] = 0;
            }
        }
    }

    /// Calls `f` for every successor of `state` with the step that led there.
    pub(crate) fn successors(&self, state: &[u16], buf: &mut Vec<u16>, mut f: impl FnMut(Step, &[u16])) {
        let n = self.n_auto;
        let clocks = &state[n..];
        // Discrete steps, one synchronization vector at a time.
        let mut choice: Vec<&[CEdge]> = Vec::new();
        let mut idx: Vec<usize> = Vec::new();
        for (act, decl) in self.declarers.iter().enumerate() {
            if decl.is_empty() {
                continue;
            }
            choice.clear();
            let mut possible = true;
            for &a in decl {
                let l = self.loc(state, a);
                match l.by_action.binary_search_by_key(&(act as u32), |(x, _)| *x) {
                    Ok(i) => choice.push(&l.by_action[i].1),
                    Err(_) => {
                        possible = false;
                        break;
                    }
                }
            }
            if !possible {
                continue;
            }
            idx.clear();
            idx.resize(decl.len(), 0);
            'combos: loop {
                let mut ok = true;
                for (k, edges) in choice.iter().enumerate() {
                    if !guard_holds(&edges[idx[k]].guard, clocks) {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    buf.clear();
                    buf.extend_from_slice(state);
                    let mut resets: Mask = 0;
                    for (k, &a) in decl.iter().enumerate() {
                        let e = &choice[k][idx[k]];
                        buf[a] = e.target;
                        resets |= e.resets;
                    }
                    for c in 0..self.n_clocks {
                        if resets & (1 << c) != 0 {
                            buf[n + c] = 0;
                        }
                    }
                    if self.invariants_hold(buf) {
                        self.canonicalize(buf);
                        f(Step::Action(ActionId(act as u32)), buf);
                    }
                }
                // Odometer over the edge choices.
                let mut k = 0;
                loop {
                    if k == idx.len() {
                        break 'combos;
                    }
                    idx[k] += 1;
                    if idx[k] < choice[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
            }
        }
        for a in 0..n {
            for e in &self.loc(state, a).silent {
                if !guard_holds(&e.guard, clocks) {
                    continue;
                }
                buf.clear();
                buf.extend_from_slice(state);
                buf[a] = e.target;
                for c in 0..self.n_clocks {
                    if e.resets & (1 << c) != 0 {
                        buf[n + c] = 0;
                    }
                }
                if self.invariants_hold(buf) {
                    self.canonicalize(buf);
                    f(Step::Silent(a), buf);
                }
            }
        }
        // One grid step of delay.
        if (0..n).any(|a| self.loc(state, a).urgent) {
            return;
        }
        let stopped = (0..n).fold(0 as Mask, |m, a| m | self.loc(state, a).stopped);
        buf.clear();
        buf.extend_from_slice(state);
        let mut moved = false;
        for c in 0..self.n_clocks {
            if stopped & (1 << c) != 0 {
                continue;
            }
            let v = buf[n + c];
            let next = if self.saturate { (v + 1).min(self.caps[c]) } else { v.saturating_add(1) };
            if next != v {
                buf[n + c] = next;
                moved = true;
            }
        }
        if !moved && self.saturate {
            return;
        }
        if self.invariants_hold(buf) {
            self.canonicalize(buf);
            f(Step::Delay, buf);
        }
    }

    pub(crate) fn initial_state(&self) -> Option<Vec<u16>> {
        let mut s = self.initial.clone();
        self.canonicalize(&mut s);
        self.invariants_hold(&s).then_some(s)
    }

    pub(crate) fn n_auto(&self) -> usize {
        self.n_auto
    }
}

fn hash_slice(s: &[u16]) -> u64 {
    let mut h = FxHasher::default();
    s.hash(&mut h);
    h.finish()
}

/// Visited-set arena: states stored back to back, indexed by a hash table.
struct Arena {
    width: usize,
    data: Vec<u16>,
    parent: Vec<u32>,
    step: Vec<Step>,
    table: HashTable<u32>,
}

impl Arena {
    fn new(width: usize) -> Self {
        Self { width, data: Vec::new(), parent: Vec::new(), step: Vec::new(), table: HashTable::new() }
    }

    fn len(&self) -> usize {
        self.parent.len()
    }

    fn get(&self, i: usize) -> &[u16] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    /// Inserts `s` if unseen and returns its index.
    fn insert(&mut self, s: &[u16], parent: u32, step: Step) -> Option<u32> {
        let h = hash_slice(s);
        let (w, data) = (self.width, &self.data);
        if self.table.find(h, |&i| &data[i as usize * w..(i as usize + 1) * w] == s).is_some() {
            return None;
        }
        let id = self.parent.len() as u32;
        self.data.extend_from_slice(s);
        self.parent.push(parent);
        self.step.push(step);
        let data = &self.data;
        self.table.insert_unique(h, id, |&i| hash_slice(&data[i as usize * w..(i as usize + 1) * w]));
        Some(id)
    }
}

/// Decides whether a `DeadlineMissed` location is reachable under `v`.
pub fn check_schedulability(net: &PtaNetwork, v: &Valuation) -> Result<Verdict, EngineError> {
    check_with(net, v, &CheckOptions::default())
}

pub fn check_with(net: &PtaNetwork, v: &Valuation, opts: &CheckOptions) -> Result<Verdict, EngineError> {
    let scaled = scale_with_quantum(net, v, opts.quantum)?;
    check_scaled(&scaled, opts)
}

pub fn check_scaled(scaled: &ScaledNetwork, opts: &CheckOptions) -> Result<Verdict, EngineError> {
    let c = Compiled::new(scaled, opts)?;
    let Some(init) = c.initial_state() else {
        return Ok(Verdict { kind: VerdictKind::Schedulable, states_explored: 0 });
    };
    let mut arena = Arena::new(init.len());
    arena.insert(&init, u32::MAX, Step::Delay);
    if c.is_target(&init) {
        return Ok(Verdict {
            kind: VerdictKind::DeadlineMiss { trace: witness(&arena, 0, scaled) },
            states_explored: 1,
        });
    }
    let mut queue = VecDeque::from([0u32]);
    let mut buf = Vec::with_capacity(init.len());
    let mut cur = vec![0u16; init.len()];
    while let Some(i) = queue.pop_front() {
        cur.copy_from_slice(arena.get(i as usize));
        let mut found = None;
        c.successors(&cur, &mut buf, |step, s| {
            if found.is_some() {
                return;
            }
            if let Some(id) = arena.insert(s, i, step) {
                if c.is_target(s) {
                    found = Some(id);
                } else {
                    queue.push_back(id);
                }
            }
        });
        if let Some(id) = found {
            let trace = witness(&arena, id as usize, scaled);
            return Ok(Verdict { kind: VerdictKind::DeadlineMiss { trace }, states_explored: arena.len() });
        }
        if arena.len() > opts.state_limit {
            return Ok(Verdict {
                kind: VerdictKind::Inconclusive {
                    reason: format!("STATE_LIMIT_EXCEEDED: more than {} states", opts.state_limit),
                },
                states_explored: arena.len(),
            });
        }
    }
    Ok(Verdict { kind: VerdictKind::Schedulable, states_explored: arena.len() })
}

fn witness(arena: &Arena, mut id: usize, scaled: &ScaledNetwork) -> TimedTrace {
    let mut steps = Vec::new();
    while arena.parent[id] != u32::MAX {
        steps.push(arena.step[id]);
        id = arena.parent[id] as usize;
    }
    steps.reverse();
    let unit = scaled.step();
    let mut ticks = 0i64;
    let mut events = Vec::new();
    for s in steps {
        match s {
            Step::Delay => ticks += 1,
            Step::Action(a) => events.push(TraceEvent {
                time: unit * Rational::from_integer(ticks),
                action: Some(scaled.net.action_name(a).to_string()),
            }),
            // Silent moves cannot be named in a script; they are replayed
            // implicitly only when forced, so keep the time visible.
            Step::Silent(_) => {}
        }
    }
    let end = unit * Rational::from_integer(ticks);
    if events.last().is_none_or(|e| e.time != end) {
        events.push(TraceEvent { time: end, action: None });
    }
    TimedTrace::from_events(events)
}

/// Set of `(location vector)` reachable with the given options; for tests
/// comparing exploration variants. `horizon` bounds global time in steps.
pub fn reachable_locations(
    scaled: &ScaledNetwork,
    opts: &CheckOptions,
    horizon: Option<u16>,
) -> Result<std::collections::BTreeSet<Vec<u16>>, EngineError> {
    let c = Compiled::new(scaled, opts)?;
    let mut out = std::collections::BTreeSet::new();
    let Some(mut init) = c.initial_state() else { return Ok(out) };
    // An extra trailing slot counts elapsed steps when a horizon is set.
    init.push(0);
    let mut arena = Arena::new(init.len());
    arena.insert(&init, u32::MAX, Step::Delay);
    let mut queue = VecDeque::from([0u32]);
    let mut buf = Vec::new();
    let w = init.len();
    while let Some(i) = queue.pop_front() {
        let cur = arena.get(i as usize).to_vec();
        out.insert(cur[..c.n_auto()].to_vec());
        if arena.len() > opts.state_limit {
            break;
        }
        let time = cur[w - 1];
        c.successors(&cur[..w - 1], &mut buf, |step, s| {
            let mut t = time;
            if step == Step::Delay {
                match horizon {
                    Some(h) if time >= h => return,
                    Some(_) => t += 1,
                    None => {}
                }
            }
            let mut full = s.to_vec();
            full.push(t);
            if let Some(id) = arena.insert(&full, i, step) {
                queue.push_back(id);
            }
        });
    }
    Ok(out)
}

// ---- exact replay --------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub index: usize,
    #[serde(serialize_with = "ser_rational")]
    pub time: Rational,
    pub reason: String,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {} (t = {}): {}", self.index, format_decimal(&self.time), self.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Config {
    locs: Vec<LocId>,
    clocks: Vec<Rational>,
    /// `(automaton, edge index)` pairs taken by the last discrete step.
    fired: Vec<(usize, usize)>,
}

/// Per-step snapshot of one admissible run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayStep {
    pub time: Rational,
    pub action: Option<String>,
    pub locs: Vec<LocId>,
    pub fired: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceCheck {
    pub accepted: bool,
    pub rejection: Option<Rejection>,
    /// Some automaton is in `DeadlineMissed` at the end of the script.
    pub reached_miss: bool,
    pub steps: Vec<ReplayStep>,
}

fn eval_guard_exact(g: &Guard, clocks: &[Rational]) -> bool {
    g.atoms.iter().all(|a| {
        let rhs = match a.rhs {
            crate::pta::Bound::Const(c) => c,
            crate::pta::Bound::Param(_) => unreachable!("substituted"),
        };
        a.op.holds(clocks[a.clock.idx()], rhs)
    })
}

/// Replays `script` with exact rational delays.
///
/// Each entry first lets time pass up to its instant, then fires its
/// action (if any) as a synchronization vector. Every admissible
/// combination of edges is tracked, so nondeterministic choices never cause
/// a spurious rejection.
pub fn validate_trace(net: &PtaNetwork, v: &Valuation, script: &[TraceEvent]) -> Result<TraceCheck, EngineError> {
    let net = crate::pta::substitute(net, v)?;
    let declarers = net.declarers();
    let mut configs = vec![Config {
        locs: net.automata.iter().map(|a| a.initial).collect(),
        clocks: vec![Rational::from_integer(0); net.clocks.len()],
        fired: vec![],
    }];
    let inv_ok =
        |c: &Config| net.automata.iter().zip(&c.locs).all(|(a, l)| eval_guard_exact(&a.loc(*l).invariant, &c.clocks));
    let reject = |index: usize, time: Rational, reason: String, steps: Vec<ReplayStep>| TraceCheck {
        accepted: false,
        rejection: Some(Rejection { index, time, reason }),
        reached_miss: false,
        steps,
    };
    let mut steps = Vec::new();
    if !inv_ok(&configs[0]) {
        return Ok(reject(0, Rational::from_integer(0), "initial state violates an invariant".into(), steps));
    }
    let mut now = Rational::from_integer(0);
    for (index, ev) in script.iter().enumerate() {
        if ev.time < now {
            return Ok(reject(index, ev.time, format!("time goes backwards from {}", format_decimal(&now)), steps));
        }
        let d = ev.time - now;
        if d > Rational::from_integer(0) {
            let mut reason = String::new();
            let mut next = Vec::new();
            for c in &configs {
                if let Some((a, l)) = net.automata.iter().zip(&c.locs).find(|(a, l)| a.loc(**l).urgent) {
                    reason = format!("time cannot elapse in urgent location {}.{}", a.name, a.loc(*l).name);
                    continue;
                }
                let stopped: std::collections::BTreeSet<_> =
                    net.automata.iter().zip(&c.locs).flat_map(|(a, l)| a.loc(*l).stopped.iter().copied()).collect();
                let mut moved = c.clone();
                for (i, x) in moved.clocks.iter_mut().enumerate() {
                    if !stopped.contains(&crate::pta::ClockId(i as u32)) {
                        *x += d;
                    }
                }
                moved.fired.clear();
                match net
                    .automata
                    .iter()
                    .zip(&moved.locs)
                    .find(|(a, l)| !eval_guard_exact(&a.loc(**l).invariant, &moved.clocks))
                {
                    Some((a, l)) => {
                        reason = format!(
                            "delay of {} violates invariant {} of {}.{}",
                            format_decimal(&d),
                            net.guard_text(&a.loc(*l).invariant),
                            a.name,
                            a.loc(*l).name
                        )
                    }
                    None => next.push(moved),
                }
            }
            if next.is_empty() {
                return Ok(reject(index, ev.time, reason, steps));
            }
            configs = next;
        }
        now = ev.time;
        if let Some(name) = &ev.action {
            let Some(act) = net.find_action(name) else {
                return Ok(reject(index, now, format!("unknown action {name}"), steps));
            };
            let decl = &declarers[act.idx()];
            let mut next: Vec<Config> = Vec::new();
            let mut reason = format!("action {name} is not enabled");
            for c in &configs {
                let mut options: Vec<Vec<usize>> = Vec::new();
                for &ai in decl {
                    let a = &net.automata[ai];
                    let enabled: Vec<usize> = a
                        .edges
                        .iter()
                        .enumerate()
                        .filter(|(_, e)| {
                            e.source == c.locs[ai] && e.action == Some(act) && eval_guard_exact(&e.guard, &c.clocks)
                        })
                        .map(|(i, _)| i)
                        .collect();
                    if enabled.is_empty() {
                        let cands: Vec<String> = a
                            .edges
                            .iter()
                            .filter(|e| e.source == c.locs[ai] && e.action == Some(act))
                            .map(|e| net.guard_text(&e.guard))
                            .collect();
                        reason = if cands.is_empty() {
                            format!("{name} not possible in {}.{}", a.name, a.loc(c.locs[ai]).name)
                        } else {
                            format!(
                                "{name} blocked in {}.{}: guard {} fails",
                                a.name,
                                a.loc(c.locs[ai]).name,
                                cands.join(" | ")
                            )
                        };
                    }
                    options.push(enabled);
                }
                if options.iter().any(Vec::is_empty) {
                    continue;
                }
                let mut idx = vec![0usize; options.len()];
                loop {
                    let mut n = c.clone();
                    n.fired.clear();
                    for (k, &ai) in decl.iter().enumerate() {
                        let e = &net.automata[ai].edges[options[k][idx[k]]];
                        n.locs[ai] = e.target;
                        for r in &e.resets {
                            n.clocks[r.idx()] = Rational::from_integer(0);
                        }
                        n.fired.push((ai, options[k][idx[k]]));
                    }
                    if inv_ok(&n) {
                        if !next.iter().any(|x| x.locs == n.locs && x.clocks == n.clocks) {
                            next.push(n);
                        }
                    } else {
                        reason = format!("{name} leads to a location whose invariant fails");
                    }
                    let mut k = 0;
                    while k < idx.len() {
                        idx[k] += 1;
                        if idx[k] < options[k].len() {
                            break;
                        }
                        idx[k] = 0;
                        k += 1;
                    }
                    if k == idx.len() {
                        break;
                    }
                }
            }
            if next.is_empty() {
                return Ok(reject(index, now, reason, steps));
            }
            configs = next;
        }
        steps.push(ReplayStep {
            time: now,
            action: ev.action.clone(),
            locs: configs[0].locs.clone(),
            fired: configs[0].fired.clone(),
        });
    }
    let reached_miss =
        configs.iter().any(|c| net.automata.iter().zip(&c.locs).any(|(a, l)| a.loc(*l).name == DEADLINE_MISSED));
    Ok(TraceCheck { accepted: true, rejection: None, reached_miss, steps })
}

/// Fills in the Gantt segments and miss information of `trace` by
/// replaying it on `tr`. Returns the replay result.
pub fn annotate(tr: &Translation, v: &Valuation, trace: &mut TimedTrace) -> Result<TraceCheck, EngineError> {
    let check = validate_trace(&tr.network, v, &trace.events)?;
    let g = extract_gantt(tr, v, &check);
    trace.lanes = tr.meta.schedulers.iter().map(|s| s.processor.clone()).collect();
    trace.gantt = g.segments;
    trace.releases = g.releases;
    trace.miss = g.miss;
    Ok(check)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GanttInfo {
    pub segments: Vec<GanttSegment>,
    pub releases: Vec<Release>,
    pub miss: Option<MissInfo>,
}

/// Per-processor execution segments from scheduler location occupancy.
pub fn extract_gantt(tr: &Translation, v: &Valuation, check: &TraceCheck) -> GanttInfo {
    let meta = &tr.meta;
    let mut segments = Vec::new();
    let mut releases = Vec::new();
    let mut miss = None;
    // Per scheduler: (running task, since).
    let mut open: Vec<Option<(usize, Rational)>> = vec![None; meta.schedulers.len()];
    let mut pending_since: Vec<Option<Rational>> = vec![None; meta.tasks.len()];
    let mut prev_locs: Vec<LocId> = tr.network.automata.iter().map(|a| a.initial).collect();
    let eval = |b: &crate::pta::Bound| match b {
        crate::pta::Bound::Const(c) => Some(*c),
        crate::pta::Bound::Param(p) => v.get(&tr.network.params[p.idx()].name).copied(),
    };
    for step in &check.steps {
        for (si, s) in meta.schedulers.iter().enumerate() {
            let before = &s.locations[prev_locs[s.automaton].idx()];
            let after = &s.locations[step.locs[s.automaton].idx()];
            let into_miss = step.locs[s.automaton] == s.missed && prev_locs[s.automaton] != s.missed;
            if into_miss && miss.is_none() {
                let task =
                    step.fired.iter().find(|(a, _)| *a == s.automaton).and_then(|(_, e)| s.miss_edges.get(e)).copied();
                if let Some(t) = task {
                    let tm = &meta.tasks[t];
                    let marker = match (pending_since[t], tm.deadline.as_ref().and_then(eval)) {
                        (Some(since), Some(d)) => since + d,
                        _ => step.time,
                    };
                    miss = Some(MissInfo {
                        processor: s.processor.clone(),
                        task: tm.name.clone(),
                        marker,
                        detected: step.time,
                    });
                }
            }
            for t in &after.pending {
                if !before.pending.contains(t) {
                    pending_since[*t] = Some(step.time);
                }
            }
            if let Some(name) = &step.action {
                if let Some(t) = s
                    .tasks
                    .iter()
                    .find(|t| meta.tasks[**t].act == tr.network.find_action(name).unwrap_or(s.miss_action))
                {
                    releases.push(Release {
                        task: meta.tasks[*t].name.clone(),
                        processor: s.processor.clone(),
                        time: step.time,
                    });
                }
            }
            let running = if into_miss { None } else { after.running };
            let cur = open[si].map(|(t, _)| t);
            if cur != running {
                if let Some((t, start)) = open[si].take() {
                    if start < step.time {
                        segments.push(GanttSegment {
                            task: meta.tasks[t].name.clone(),
                            processor: s.processor.clone(),
                            start,
                            end: step.time,
                            preempted: after.pending.contains(&t),
                        });
                    }
                }
                open[si] = running.map(|t| (t, step.time));
            }
        }
        prev_locs = step.locs.clone();
    }
    let end = check.steps.last().map(|s| s.time).unwrap_or_default();
    for (si, o) in open.iter().enumerate() {
        if let Some((t, start)) = o {
            if *start < end {
                segments.push(GanttSegment {
                    task: meta.tasks[*t].name.clone(),
                    processor: meta.schedulers[si].processor.clone(),
                    start: *start,
                    end,
                    preempted: false,
                });
            }
        }
    }
    segments.sort_by(|a, b| a.processor.cmp(&b.processor).then(a.start.cmp(&b.start)));
    GanttInfo { segments, releases, miss }
}

/// Parses the `[[time, action], ...]` script format.
pub fn parse_script(text: &str) -> Result<Vec<TraceEvent>, String> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let arr = v.as_array().ok_or("a trace script is a JSON array")?;
    let mut out = Vec::with_capacity(arr.len());
    for (i, item) in arr.iter().enumerate() {
        let pair =
            item.as_array().filter(|p| p.len() == 2).ok_or_else(|| format!("entry {i}: expected [time, action]"))?;
        let time = crate::rational::serde_rational::from_json(&pair[0]).map_err(|e| format!("entry {i}: {e}"))?;
        let action = match &pair[1] {
            serde_json::Value::Null => None,
            serde_json::Value::String(s) => Some(s.clone()),
            other => return Err(format!("entry {i}: action must be a string or null, found {other}")),
        };
        out.push(TraceEvent { time, action });
    }
    Ok(out)
}

pub fn script_json(events: &[TraceEvent]) -> serde_json::Value {
    serde_json::Value::Array(
        events
            .iter()
            .map(|e| {
                let t = if e.time.is_integer() {
                    serde_json::json!(e.time.to_integer())
                } else {
                    serde_json::json!(format_decimal(&e.time))
                };
                serde_json::json!([t, e.action])
            })
            .collect(),
    )
}
