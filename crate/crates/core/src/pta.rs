//! Networks of parametric stopwatch timed automata.
//!
//! Clocks, parameters and actions are declared once at network level and
//! referenced by index from every automaton that uses them, so a name
//! shared by two automata denotes the same object. Locations are local to
//! their automaton.
//!
//! Synchronization: an action fires iff every automaton declaring it takes
//! one edge labelled with it at the same instant; automata that do not
//! declare the action are unaffected.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::rational::{format_decimal, Rational};
use crate::Valuation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ClockId(pub u32);
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ParamId(pub u32);
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ActionId(pub u32);
/// Index of a location inside its automaton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LocId(pub u32);

impl ClockId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}
impl ParamId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}
impl ActionId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}
impl LocId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    /// The operator seen from the other side: `a < b` iff `b > a`.
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Eq => CmpOp::Eq,
            CmpOp::Ge => CmpOp::Le,
            CmpOp::Gt => CmpOp::Lt,
        }
    }

    pub fn holds<T: PartialOrd>(self, lhs: T, rhs: T) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bound {
    Const(Rational),
    Param(ParamId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GuardAtom {
    pub clock: ClockId,
    pub op: CmpOp,
    pub rhs: Bound,
}

impl GuardAtom {
    pub fn new(clock: ClockId, op: CmpOp, rhs: Bound) -> Self {
        Self { clock, op, rhs }
    }

    /// Builds `bound op clock` as a clock-on-left atom, e.g. `WCET >= x`
    /// becomes `x <= WCET`.
    pub fn bound_left(rhs: Bound, op: CmpOp, clock: ClockId) -> Self {
        Self { clock, op: op.flip(), rhs }
    }
}

/// Conjunction of atoms; the empty conjunction is `true`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Guard {
    pub atoms: Vec<GuardAtom>,
}

impl Guard {
    pub fn truth() -> Self {
        Self::default()
    }

    pub fn single(atom: GuardAtom) -> Self {
        Self { atoms: vec![atom] }
    }

    pub fn is_true(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn and(mut self, atom: GuardAtom) -> Self {
        self.atoms.push(atom);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub name: String,
    pub urgent: bool,
    pub invariant: Guard,
    /// Clocks whose rate is 0 while this location is occupied.
    pub stopped: BTreeSet<ClockId>,
}

impl Location {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), urgent: false, invariant: Guard::truth(), stopped: BTreeSet::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub source: LocId,
    pub guard: Guard,
    /// `None` is a silent edge that fires on its own.
    pub action: Option<ActionId>,
    pub resets: BTreeSet<ClockId>,
    pub target: LocId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automaton {
    pub name: String,
    pub locations: Vec<Location>,
    pub initial: LocId,
    pub edges: Vec<Edge>,
    pub actions: BTreeSet<ActionId>,
}

impl Automaton {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            locations: Vec::new(),
            initial: LocId(0),
            edges: Vec::new(),
            actions: BTreeSet::new(),
        }
    }

    pub fn add_location(&mut self, loc: Location) -> LocId {
        self.locations.push(loc);
        LocId(self.locations.len() as u32 - 1)
    }

    pub fn add_edge(&mut self, edge: Edge) {
        if let Some(a) = edge.action {
            self.actions.insert(a);
        }
        self.edges.push(edge);
    }

    pub fn location_named(&self, name: &str) -> Option<LocId> {
        self.locations.iter().position(|l| l.name == name).map(|i| LocId(i as u32))
    }

    pub fn loc(&self, id: LocId) -> &Location {
        &self.locations[id.idx()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamDecl {
    pub name: String,
    pub interval: Option<(Rational, Rational)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PtaNetwork {
    pub clocks: Vec<String>,
    pub params: Vec<ParamDecl>,
    pub actions: Vec<String>,
    pub automata: Vec<Automaton>,
}

impl PtaNetwork {
    pub fn clock(&mut self, name: &str) -> ClockId {
        match self.clocks.iter().position(|c| c == name) {
            Some(i) => ClockId(i as u32),
            None => {
                self.clocks.push(name.to_string());
                ClockId(self.clocks.len() as u32 - 1)
            }
        }
    }

    pub fn action(&mut self, name: &str) -> ActionId {
        match self.actions.iter().position(|c| c == name) {
            Some(i) => ActionId(i as u32),
            None => {
                self.actions.push(name.to_string());
                ActionId(self.actions.len() as u32 - 1)
            }
        }
    }

    pub fn param(&mut self, name: &str, interval: Option<(Rational, Rational)>) -> ParamId {
        match self.params.iter().position(|p| p.name == name) {
            Some(i) => {
                if self.params[i].interval.is_none() {
                    self.params[i].interval = interval;
                }
                ParamId(i as u32)
            }
            None => {
                self.params.push(ParamDecl { name: name.to_string(), interval });
                ParamId(self.params.len() as u32 - 1)
            }
        }
    }

    pub fn find_clock(&self, name: &str) -> Option<ClockId> {
        self.clocks.iter().position(|c| c == name).map(|i| ClockId(i as u32))
    }

    pub fn find_action(&self, name: &str) -> Option<ActionId> {
        self.actions.iter().position(|c| c == name).map(|i| ActionId(i as u32))
    }

    pub fn find_param(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(|i| ParamId(i as u32))
    }

    pub fn automaton(&self, name: &str) -> Option<&Automaton> {
        self.automata.iter().find(|a| a.name == name)
    }

    pub fn action_name(&self, id: ActionId) -> &str {
        &self.actions[id.idx()]
    }

    pub fn clock_name(&self, id: ClockId) -> &str {
        &self.clocks[id.idx()]
    }

    /// For each action, the indices of the automata declaring it.
    pub fn declarers(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.actions.len()];
        for (i, a) in self.automata.iter().enumerate() {
            for act in &a.actions {
                if let Some(v) = out.get_mut(act.idx()) {
                    v.push(i);
                }
            }
        }
        out
    }

    /// Locations named `name`, as `(automaton, location)` pairs.
    pub fn locations_named(&self, name: &str) -> Vec<(usize, LocId)> {
        self.automata.iter().enumerate().filter_map(|(i, a)| a.location_named(name).map(|l| (i, l))).collect()
    }

    /// Every guard and invariant of the network, in declaration order.
    pub fn guards(&self) -> impl Iterator<Item = &Guard> {
        self.automata
            .iter()
            .flat_map(|a| a.locations.iter().map(|l| &l.invariant).chain(a.edges.iter().map(|e| &e.guard)))
    }

    pub fn atoms(&self) -> impl Iterator<Item = &GuardAtom> {
        self.guards().flat_map(|g| g.atoms.iter())
    }

    /// Constants appearing in guards, invariants and parameter intervals.
    pub fn constants(&self) -> Vec<Rational> {
        let mut out: Vec<Rational> = self
            .atoms()
            .filter_map(|a| match a.rhs {
                Bound::Const(c) => Some(c),
                Bound::Param(_) => None,
            })
            .collect();
        for p in &self.params {
            if let Some((lo, hi)) = p.interval {
                out.push(lo);
                out.push(hi);
            }
        }
        out
    }

    pub fn location_count(&self) -> usize {
        self.automata.iter().map(|a| a.locations.len()).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.automata.iter().map(|a| a.edges.len()).sum()
    }

    pub fn bound_text(&self, b: &Bound) -> String {
        match b {
            Bound::Const(c) => format_decimal(c),
            Bound::Param(p) => self.params.get(p.idx()).map(|d| d.name.clone()).unwrap_or_else(|| format!("?p{}", p.0)),
        }
    }

    pub fn guard_text(&self, g: &Guard) -> String {
        if g.is_true() {
            return "true".into();
        }
        g.atoms
            .iter()
            .map(|a| {
                let clock = self.clocks.get(a.clock.idx()).cloned().unwrap_or_else(|| format!("?x{}", a.clock.0));
                format!("{clock} {} {}", a.op.symbol(), self.bound_text(&a.rhs))
            })
            .collect::<Vec<_>>()
            .join(" & ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PtaDiagnosticCode {
    UndeclaredClock,
    UndeclaredParam,
    UndeclaredAction,
    UnknownLocation,
    UndeclaredEdgeAction,
    UnusedAction,
    UrgentInvariant,
    NegativeConstant,
    DuplicateName,
    NoLocations,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PtaDiagnostic {
    pub code: PtaDiagnosticCode,
    pub at: String,
    pub message: String,
}

impl fmt::Display for PtaDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at {}: {}", self.code, self.at, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("network is not well formed: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
pub struct WellFormedErrors(pub Vec<PtaDiagnostic>);

impl WellFormedErrors {
    pub fn codes(&self) -> Vec<PtaDiagnosticCode> {
        self.0.iter().map(|d| d.code).collect()
    }
}

pub fn well_formed(net: &PtaNetwork) -> Result<(), WellFormedErrors> {
    use PtaDiagnosticCode::*;
    let mut out = Vec::new();
    let mut push = |code, at: String, message: String| out.push(PtaDiagnostic { code, at, message });

    for (kind, names) in [
        ("clock", net.clocks.iter().map(String::as_str).collect::<Vec<_>>()),
        ("parameter", net.params.iter().map(|p| p.name.as_str()).collect()),
        ("action", net.actions.iter().map(String::as_str).collect()),
        ("automaton", net.automata.iter().map(|a| a.name.as_str()).collect()),
    ] {
        let mut seen = BTreeSet::new();
        for n in names {
            if !seen.insert(n) {
                push(DuplicateName, format!("{kind} {n}"), "declared twice".into());
            }
        }
    }
    for p in &net.params {
        if let Some((lo, hi)) = p.interval {
            if lo < Rational::from_integer(0) || lo > hi {
                push(NegativeConstant, format!("parameter {}", p.name), "interval is not a non-negative range".into());
            }
        }
    }

    let check_guard = |g: &Guard, at: &str, out: &mut Vec<(PtaDiagnosticCode, String, String)>| {
        for atom in &g.atoms {
            if atom.clock.idx() >= net.clocks.len() {
                out.push((UndeclaredClock, at.to_string(), format!("clock #{} is not declared", atom.clock.0)));
            }
            match atom.rhs {
                Bound::Param(p) if p.idx() >= net.params.len() => {
                    out.push((UndeclaredParam, at.to_string(), format!("parameter #{} is not declared", p.0)));
                }
                Bound::Const(c) if c < Rational::from_integer(0) => {
                    out.push((
                        NegativeConstant,
                        at.to_string(),
                        format!("constant {} is negative", format_decimal(&c)),
                    ));
                }
                _ => {}
            }
        }
    };

    let mut pending: Vec<(PtaDiagnosticCode, String, String)> = Vec::new();
    let mut used_actions = BTreeSet::new();
    for a in &net.automata {
        if a.locations.is_empty() {
            pending.push((NoLocations, format!("automaton {}", a.name), "has no locations".into()));
            continue;
        }
        if a.initial.idx() >= a.locations.len() {
            pending.push((UnknownLocation, format!("automaton {}", a.name), "initial location out of range".into()));
        }
        let mut loc_names = BTreeSet::new();
        for l in &a.locations {
            let at = format!("{}.{}", a.name, l.name);
            if !loc_names.insert(l.name.as_str()) {
                pending.push((DuplicateName, at.clone(), "location declared twice".into()));
            }
            check_guard(&l.invariant, &at, &mut pending);
            if l.urgent && !l.invariant.is_true() {
                pending.push((UrgentInvariant, at.clone(), "urgent locations must have invariant true".into()));
            }
            for c in &l.stopped {
                if c.idx() >= net.clocks.len() {
                    pending.push((UndeclaredClock, at.clone(), format!("stopped clock #{} is not declared", c.0)));
                }
            }
        }
        for act in &a.actions {
            if act.idx() >= net.actions.len() {
                pending.push((
                    UndeclaredAction,
                    format!("automaton {}", a.name),
                    format!("action #{} is not declared", act.0),
                ));
            }
            used_actions.insert(*act);
        }
        for (i, e) in a.edges.iter().enumerate() {
            let at = format!("{} edge {i}", a.name);
            if e.source.idx() >= a.locations.len() || e.target.idx() >= a.locations.len() {
                pending.push((UnknownLocation, at.clone(), "edge endpoint outside the automaton".into()));
            }
            check_guard(&e.guard, &at, &mut pending);
            for c in &e.resets {
                if c.idx() >= net.clocks.len() {
                    pending.push((UndeclaredClock, at.clone(), format!("reset clock #{} is not declared", c.0)));
                }
            }
            if let Some(act) = e.action {
                if act.idx() >= net.actions.len() {
                    pending.push((UndeclaredAction, at.clone(), format!("action #{} is not declared", act.0)));
                } else if !a.actions.contains(&act) {
                    pending.push((
                        UndeclaredEdgeAction,
                        at.clone(),
                        format!("action {} missing from synclabs", net.actions[act.idx()]),
                    ));
                }
            }
        }
    }
    for (i, name) in net.actions.iter().enumerate() {
        if !used_actions.contains(&ActionId(i as u32)) {
            pending.push((UnusedAction, format!("action {name}"), "not declared by any automaton".into()));
        }
    }
    for (code, at, message) in pending {
        push(code, at, message);
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(WellFormedErrors(out))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SubstituteError {
    #[error("MISSING_VALUATION: no value for parameter {0}")]
    MissingValuation(String),
    #[error("OUT_OF_INTERVAL: {name} = {value} lies outside its declared interval")]
    OutOfInterval { name: String, value: String },
    #[error("NEGATIVE_VALUE: {name} = {value} is negative")]
    Negative { name: String, value: String },
}

impl SubstituteError {
    pub fn code(&self) -> &'static str {
        match self {
            SubstituteError::MissingValuation(_) => "MISSING_VALUATION",
            SubstituteError::OutOfInterval { .. } => "OUT_OF_INTERVAL",
            SubstituteError::Negative { .. } => "NEGATIVE_VALUE",
        }
    }
}

/// Resolves every parameter to the value given by `valuation`.
///
/// The result has no parameters and the same locations and edges.
pub fn substitute(net: &PtaNetwork, valuation: &Valuation) -> Result<PtaNetwork, SubstituteError> {
    let mut values = Vec::with_capacity(net.params.len());
    for p in &net.params {
        let v = *valuation.get(&p.name).ok_or_else(|| SubstituteError::MissingValuation(p.name.clone()))?;
        if v < Rational::from_integer(0) {
            return Err(SubstituteError::Negative { name: p.name.clone(), value: format_decimal(&v) });
        }
        if let Some((lo, hi)) = p.interval {
            if v < lo || v > hi {
                return Err(SubstituteError::OutOfInterval { name: p.name.clone(), value: format_decimal(&v) });
            }
        }
        values.push(v);
    }
    let resolve = |g: &Guard| Guard {
        atoms: g
            .atoms
            .iter()
            .map(|a| GuardAtom {
                rhs: match a.rhs {
                    Bound::Param(p) => Bound::Const(values[p.idx()]),
                    c => c,
                },
                ..*a
            })
            .collect(),
    };
    let automata = net
        .automata
        .iter()
        .map(|a| Automaton {
            locations: a.locations.iter().map(|l| Location { invariant: resolve(&l.invariant), ..l.clone() }).collect(),
            edges: a.edges.iter().map(|e| Edge { guard: resolve(&e.guard), ..e.clone() }).collect(),
            ..a.clone()
        })
        .collect();
    Ok(PtaNetwork { clocks: net.clocks.clone(), params: Vec::new(), actions: net.actions.clone(), automata })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Periodic activation automaton, built by hand.
    fn periodic() -> PtaNetwork {
        let mut net = PtaNetwork::default();
        let x = net.clock("xactT");
        let act = net.action("actT");
        let period = net.param("TPeriod", None);
        let offset = net.param("TOffset", None);
        let mut a = Automaton::new("periodic");
        let mut l1 = Location::new("l1");
        l1.invariant = Guard::single(GuardAtom::new(x, CmpOp::Le, Bound::Param(offset)));
        let mut l2 = Location::new("l2");
        l2.invariant = Guard::single(GuardAtom::new(x, CmpOp::Le, Bound::Param(period)));
        let l1 = a.add_location(l1);
        let l2 = a.add_location(l2);
        a.add_edge(Edge {
            source: l1,
            guard: Guard::single(GuardAtom::new(x, CmpOp::Eq, Bound::Param(offset))),
            action: Some(act),
            resets: [x].into(),
            target: l2,
        });
        a.add_edge(Edge {
            source: l2,
            guard: Guard::single(GuardAtom::new(x, CmpOp::Eq, Bound::Param(period))),
            action: Some(act),
            resets: [x].into(),
            target: l2,
        });
        net.automata.push(a);
        net
    }

    fn val(pairs: &[(&str, i64)]) -> Valuation {
        pairs.iter().map(|(k, v)| (k.to_string(), Rational::from_integer(*v))).collect()
    }

    #[test]
    fn periodic_alone_is_well_formed() {
        well_formed(&periodic()).unwrap();
    }

    #[test]
    fn undeclared_clock_reported() {
        let mut net = periodic();
        net.automata[0].edges[0].resets.insert(ClockId(7));
        assert_eq!(well_formed(&net).unwrap_err().codes(), vec![PtaDiagnosticCode::UndeclaredClock]);
    }

    #[test]
    fn urgent_with_invariant_reported() {
        let mut net = periodic();
        net.automata[0].locations[0].urgent = true;
        assert_eq!(well_formed(&net).unwrap_err().codes(), vec![PtaDiagnosticCode::UrgentInvariant]);
    }

    #[test]
    fn unused_action_and_undeclared_edge_action() {
        let mut net = periodic();
        net.action("orphan");
        net.automata[0].actions.clear();
        let codes = well_formed(&net).unwrap_err().codes();
        assert!(codes.contains(&PtaDiagnosticCode::UnusedAction));
        assert!(codes.contains(&PtaDiagnosticCode::UndeclaredEdgeAction));
    }

    #[test]
    fn substitute_periodic() {
        let net = periodic();
        let s = substitute(&net, &val(&[("TPeriod", 10), ("TOffset", 5)])).unwrap();
        assert!(s.params.is_empty());
        assert_eq!(s.guard_text(&s.automata[0].edges[0].guard), "xactT = 5");
        assert_eq!(s.guard_text(&s.automata[0].edges[1].guard), "xactT = 10");
        assert_eq!(s.location_count(), net.location_count());
        assert_eq!(s.edge_count(), net.edge_count());
        well_formed(&s).unwrap();
    }

    #[test]
    fn substitute_zero_everywhere() {
        let s = substitute(&periodic(), &val(&[("TPeriod", 0), ("TOffset", 0)])).unwrap();
        assert!(s.atoms().all(|a| a.rhs == Bound::Const(Rational::from_integer(0))));
    }

    #[test]
    fn substitute_checks_intervals() {
        let mut net = periodic();
        net.params[0].interval = Some((Rational::from_integer(99), Rational::from_integer(101)));
        assert!(substitute(&net, &val(&[("TPeriod", 99), ("TOffset", 5)])).is_ok());
        let err = substitute(&net, &val(&[("TPeriod", 98), ("TOffset", 5)])).unwrap_err();
        assert_eq!(err.code(), "OUT_OF_INTERVAL");
        let err = substitute(&net, &val(&[("TPeriod", 100)])).unwrap_err();
        assert_eq!(err, SubstituteError::MissingValuation("TOffset".into()));
    }

    #[test]
    fn bound_left_normalizes() {
        let atom = GuardAtom::bound_left(Bound::Param(ParamId(0)), CmpOp::Ge, ClockId(1));
        assert_eq!(atom.op, CmpOp::Le);
        assert_eq!(atom.clock, ClockId(1));
    }
}
