//! Real-time system models: processors, tasks, activation patterns and
//! one-to-one task dependencies.
//!
//! A [`RtModel`] is plain data. [`validate`] checks the structural
//! assumptions the translation relies on and yields a [`ValidatedModel`];
//! every violation is reported at once, never just the first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::rational::{format_decimal, Rational};
use crate::Valuation;

/// A timing quantity: either a known constant or a named parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TimeExpr {
    Const(Rational),
    Param { name: String, interval: Option<(Rational, Rational)> },
}

impl TimeExpr {
    pub fn constant(n: i64) -> Self {
        TimeExpr::Const(Rational::from_integer(n))
    }

    pub fn param(name: impl Into<String>) -> Self {
        TimeExpr::Param { name: name.into(), interval: None }
    }

    pub fn as_const(&self) -> Option<Rational> {
        match self {
            TimeExpr::Const(v) => Some(*v),
            TimeExpr::Param { .. } => None,
        }
    }

    pub fn param_name(&self) -> Option<&str> {
        match self {
            TimeExpr::Param { name, .. } => Some(name),
            TimeExpr::Const(_) => None,
        }
    }

    /// Value under a valuation; constants ignore it.
    pub fn eval(&self, valuation: &Valuation) -> Option<Rational> {
        match self {
            TimeExpr::Const(v) => Some(*v),
            TimeExpr::Param { name, .. } => valuation.get(name).copied(),
        }
    }
}

impl fmt::Display for TimeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeExpr::Const(v) => f.write_str(&format_decimal(v)),
            TimeExpr::Param { name, interval: None } => f.write_str(name),
            TimeExpr::Param { name, interval: Some((lo, hi)) } => {
                write!(f, "{name} in [{}, {}]", format_decimal(lo), format_decimal(hi))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Activation {
    Periodic {
        period: TimeExpr,
        offset: TimeExpr,
    },
    /// `offset` is the earliest time of the first activation.
    Sporadic {
        min_iat: TimeExpr,
        offset: TimeExpr,
    },
    /// Activated by the completion of its predecessor.
    Triggered,
}

impl Activation {
    pub fn is_root(&self) -> bool {
        !matches!(self, Activation::Triggered)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub name: String,
    pub processor: String,
    pub activation: Activation,
    pub bcet: TimeExpr,
    pub wcet: TimeExpr,
    pub deadline: Option<TimeExpr>,
    /// Higher value = more urgent.
    pub priority: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Policy {
    FpsPreemptive,
    FpsNonPreemptive,
    Rms,
    Tdma { slots: Vec<TdmaSlot> },
}

impl Policy {
    pub fn is_fixed_priority(&self) -> bool {
        matches!(self, Policy::FpsPreemptive | Policy::FpsNonPreemptive)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TdmaSlot {
    pub task: String,
    pub length: TimeExpr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Processor {
    pub name: String,
    pub policy: Policy,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RtModel {
    pub processors: Vec<Processor>,
    pub tasks: Vec<Task>,
    /// `(predecessor, successor)` pairs.
    pub dependencies: Vec<(String, String)>,
}

impl RtModel {
    pub fn task(&self, name: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.name == name)
    }

    pub fn task_mut(&mut self, name: &str) -> Option<&mut Task> {
        self.tasks.iter_mut().find(|t| t.name == name)
    }

    pub fn processor(&self, name: &str) -> Option<&Processor> {
        self.processors.iter().find(|p| p.name == name)
    }

    pub fn successor(&self, task: &str) -> Option<&str> {
        self.dependencies.iter().find(|(p, _)| p == task).map(|(_, s)| s.as_str())
    }

    pub fn predecessor(&self, task: &str) -> Option<&str> {
        self.dependencies.iter().find(|(_, s)| s == task).map(|(p, _)| p.as_str())
    }

    /// Tasks mapped onto `processor`, in model order.
    pub fn tasks_on<'a>(&'a self, processor: &'a str) -> impl Iterator<Item = &'a Task> + 'a {
        self.tasks.iter().filter(move |t| t.processor == processor)
    }

    /// Chains starting at each root task, following successor links.
    pub fn chains(&self) -> Vec<Vec<&str>> {
        let mut out = Vec::new();
        for task in self.tasks.iter().filter(|t| t.activation.is_root()) {
            let mut chain = vec![task.name.as_str()];
            let mut seen: BTreeSet<&str> = chain.iter().copied().collect();
            let mut cur = task.name.as_str();
            while let Some(next) = self.successor(cur) {
                if !seen.insert(next) {
                    break;
                }
                chain.push(next);
                cur = next;
            }
            out.push(chain);
        }
        out
    }

    /// Every `TimeExpr` of the model with a stable label, in model order.
    pub fn time_exprs(&self) -> Vec<(String, &TimeExpr)> {
        let mut out = Vec::new();
        for t in &self.tasks {
            match &t.activation {
                Activation::Periodic { period, offset } => {
                    out.push((format!("{}.period", t.name), period));
                    out.push((format!("{}.offset", t.name), offset));
                }
                Activation::Sporadic { min_iat, offset } => {
                    out.push((format!("{}.min_iat", t.name), min_iat));
                    out.push((format!("{}.offset", t.name), offset));
                }
                Activation::Triggered => {}
            }
            out.push((format!("{}.bcet", t.name), &t.bcet));
            out.push((format!("{}.wcet", t.name), &t.wcet));
            if let Some(d) = &t.deadline {
                out.push((format!("{}.deadline", t.name), d));
            }
        }
        for p in &self.processors {
            if let Policy::Tdma { slots } = &p.policy {
                for (i, s) in slots.iter().enumerate() {
                    out.push((format!("{}.slot[{i}]", p.name), &s.length));
                }
            }
        }
        out
    }
}

/// A model that passed [`validate`]. Immutable; share freely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedModel(RtModel);

impl ValidatedModel {
    pub fn model(&self) -> &RtModel {
        &self.0
    }

    pub fn into_inner(self) -> RtModel {
        self.0
    }
}

impl std::ops::Deref for ValidatedModel {
    type Target = RtModel;
    fn deref(&self) -> &RtModel {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DiagnosticCode {
    DuplicateTask,
    DuplicateProcessor,
    UnknownProcessor,
    UnknownTask,
    NegativeConstant,
    BadInterval,
    NonPositivePeriod,
    BcetExceedsWcet,
    DeadlineExceedsPeriod,
    MissingPriority,
    DuplicatePriority,
    OutDegree,
    InDegree,
    Cycle,
    SelfDependency,
    TriggeredWithoutPredecessor,
    RootWithPredecessor,
    RmsNonperiodic,
    TdmaSlot,
    ConflictingInterval,
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit enum serializes");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    /// Offending element, e.g. `task T3` or `dependency T1 -> T2`.
    pub element: String,
    pub message: String,
}

impl Diagnostic {
    fn new(code: DiagnosticCode, element: impl Into<String>, message: impl Into<String>) -> Self {
        Self { code, element: element.into(), message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code, self.element, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("model is invalid ({} problem(s)): {}", .0.len(), .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ValidationErrors(pub Vec<Diagnostic>);

impl ValidationErrors {
    pub fn codes(&self) -> Vec<DiagnosticCode> {
        self.0.iter().map(|d| d.code).collect()
    }
}

pub fn validate(model: RtModel) -> Result<ValidatedModel, ValidationErrors> {
    let diags = diagnose(&model);
    if diags.is_empty() {
        Ok(ValidatedModel(model))
    } else {
        Err(ValidationErrors(diags))
    }
}

/// All structural problems of `model`; empty means valid.
pub fn diagnose(model: &RtModel) -> Vec<Diagnostic> {
    use DiagnosticCode::*;
    let mut out = Vec::new();

    let mut proc_names = BTreeSet::new();
    for p in &model.processors {
        if !proc_names.insert(p.name.as_str()) {
            out.push(Diagnostic::new(DuplicateProcessor, format!("processor {}", p.name), "name used twice"));
        }
    }
    let mut task_names = BTreeSet::new();
    for t in &model.tasks {
        if !task_names.insert(t.name.as_str()) {
            out.push(Diagnostic::new(DuplicateTask, format!("task {}", t.name), "name used twice"));
        }
    }

    // time expressions
    let mut intervals: BTreeMap<&str, Option<(Rational, Rational)>> = BTreeMap::new();
    for (label, expr) in model.time_exprs() {
        match expr {
            TimeExpr::Const(v) if *v < Rational::from_integer(0) => {
                out.push(Diagnostic::new(
                    NegativeConstant,
                    label,
                    format!("constant {} is negative", format_decimal(v)),
                ));
            }
            TimeExpr::Const(_) => {}
            TimeExpr::Param { name, interval } => {
                if let Some((lo, hi)) = interval {
                    if *lo < Rational::from_integer(0) || lo > hi {
                        out.push(Diagnostic::new(
                            BadInterval,
                            label.clone(),
                            format!(
                                "interval [{}, {}] of {name} is not a non-negative range",
                                format_decimal(lo),
                                format_decimal(hi)
                            ),
                        ));
                    }
                }
                match intervals.get(name.as_str()) {
                    Some(prev) if interval.is_some() && prev.is_some() && prev != interval => {
                        out.push(Diagnostic::new(
                            ConflictingInterval,
                            label,
                            format!("parameter {name} declared with two different intervals"),
                        ));
                    }
                    Some(Some(_)) => {}
                    _ => {
                        intervals.insert(name, *interval);
                    }
                }
            }
        }
    }

    for t in &model.tasks {
        let el = format!("task {}", t.name);
        if !proc_names.contains(t.processor.as_str()) {
            out.push(Diagnostic::new(
                UnknownProcessor,
                el.clone(),
                format!("processor {} does not exist", t.processor),
            ));
        }
        if let (Some(b), Some(w)) = (t.bcet.as_const(), t.wcet.as_const()) {
            if b > w {
                out.push(Diagnostic::new(
                    BcetExceedsWcet,
                    el.clone(),
                    format!("bcet {} exceeds wcet {}", format_decimal(&b), format_decimal(&w)),
                ));
            }
        }
        if let Activation::Periodic { period, .. } = &t.activation {
            if let Some(p) = period.as_const() {
                if p <= Rational::from_integer(0) {
                    out.push(Diagnostic::new(NonPositivePeriod, el.clone(), "period must be positive"));
                }
                if let Some(d) = t.deadline.as_ref().and_then(TimeExpr::as_const) {
                    if d > p {
                        out.push(Diagnostic::new(
                            DeadlineExceedsPeriod,
                            el.clone(),
                            format!("deadline {} exceeds period {}", format_decimal(&d), format_decimal(&p)),
                        ));
                    }
                }
            }
        }
    }

    // dependencies: chains only
    let mut out_deg: BTreeMap<&str, usize> = BTreeMap::new();
    let mut in_deg: BTreeMap<&str, usize> = BTreeMap::new();
    for (pred, succ) in &model.dependencies {
        let el = format!("dependency {pred} -> {succ}");
        for name in [pred, succ] {
            if !task_names.contains(name.as_str()) {
                out.push(Diagnostic::new(UnknownTask, el.clone(), format!("task {name} does not exist")));
            }
        }
        if pred == succ {
            out.push(Diagnostic::new(SelfDependency, el.clone(), "a task cannot activate itself"));
        }
        *out_deg.entry(pred).or_default() += 1;
        *in_deg.entry(succ).or_default() += 1;
    }
    for (task, n) in &out_deg {
        if *n > 1 {
            out.push(Diagnostic::new(
                OutDegree,
                format!("task {task}"),
                format!("activates {n} successors; only one is allowed"),
            ));
        }
    }
    for (task, n) in &in_deg {
        if *n > 1 {
            out.push(Diagnostic::new(
                InDegree,
                format!("task {task}"),
                format!("activated by {n} predecessors; only one is allowed"),
            ));
        }
    }
    if let Some(task) = find_cycle(model) {
        out.push(Diagnostic::new(Cycle, format!("task {task}"), "dependency cycle"));
    }
    for t in &model.tasks {
        let has_pred = in_deg.contains_key(t.name.as_str());
        match (&t.activation, has_pred) {
            (Activation::Triggered, false) => out.push(Diagnostic::new(
                TriggeredWithoutPredecessor,
                format!("task {}", t.name),
                "triggered task has no predecessor",
            )),
            (Activation::Periodic { .. } | Activation::Sporadic { .. }, true) => out.push(Diagnostic::new(
                RootWithPredecessor,
                format!("task {}", t.name),
                "periodic or sporadic task cannot also be triggered by a predecessor",
            )),
            _ => {}
        }
    }

    // scheduling
    for p in &model.processors {
        let el = format!("processor {}", p.name);
        let tasks: Vec<&Task> = model.tasks_on(&p.name).collect();
        match &p.policy {
            Policy::FpsPreemptive | Policy::FpsNonPreemptive => {
                let mut seen: BTreeMap<i64, &str> = BTreeMap::new();
                for t in &tasks {
                    match t.priority {
                        None => out.push(Diagnostic::new(
                            MissingPriority,
                            format!("task {}", t.name),
                            format!("fixed-priority processor {} needs a priority", p.name),
                        )),
                        Some(prio) => {
                            if let Some(other) = seen.insert(prio, &t.name) {
                                out.push(Diagnostic::new(
                                    DuplicatePriority,
                                    el.clone(),
                                    format!("tasks {other} and {} share priority {prio}", t.name),
                                ));
                            }
                        }
                    }
                }
            }
            Policy::Rms => {
                for t in &tasks {
                    if rms_period(t).is_none() {
                        out.push(Diagnostic::new(
                            RmsNonperiodic,
                            format!("task {}", t.name),
                            "rate-monotonic scheduling needs a periodic task with a constant period",
                        ));
                    }
                }
            }
            Policy::Tdma { slots } => {
                let mut count: BTreeMap<&str, usize> = BTreeMap::new();
                for s in slots {
                    *count.entry(s.task.as_str()).or_default() += 1;
                    match model.task(&s.task) {
                        None => out.push(Diagnostic::new(
                            UnknownTask,
                            el.clone(),
                            format!("slot names unknown task {}", s.task),
                        )),
                        Some(t) if t.processor != p.name => out.push(Diagnostic::new(
                            TdmaSlot,
                            el.clone(),
                            format!("slot task {} runs on {}", s.task, t.processor),
                        )),
                        _ => {}
                    }
                }
                for t in &tasks {
                    let n = count.get(t.name.as_str()).copied().unwrap_or(0);
                    if n != 1 {
                        out.push(Diagnostic::new(
                            TdmaSlot,
                            el.clone(),
                            format!("task {} appears in {n} slots; exactly one is required", t.name),
                        ));
                    }
                }
            }
        }
    }
    out
}

fn find_cycle(model: &RtModel) -> Option<String> {
    for t in &model.tasks {
        let mut seen = BTreeSet::new();
        let mut cur = t.name.as_str();
        while let Some(next) = model.successor(cur) {
            if next == t.name {
                return Some(t.name.clone());
            }
            if !seen.insert(next) {
                break;
            }
            cur = next;
        }
    }
    None
}

fn rms_period(t: &Task) -> Option<Rational> {
    match &t.activation {
        Activation::Periodic { period: TimeExpr::Const(p), .. } => Some(*p),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("RMS_NONPERIODIC: task {task} on rate-monotonic processor {processor} has no constant period")]
pub struct RmsError {
    pub task: String,
    pub processor: String,
}

/// Turns every rate-monotonic processor into a preemptive fixed-priority
/// one. Shorter period means higher priority; equal periods are ordered
/// by ascending task name (the lexicographically smaller name wins).
pub fn derive_rms_priorities(mut model: RtModel) -> Result<RtModel, RmsError> {
    let rms: Vec<String> =
        model.processors.iter().filter(|p| p.policy == Policy::Rms).map(|p| p.name.clone()).collect();
    for proc_name in rms {
        let mut ranked: Vec<(Rational, String)> = Vec::new();
        for t in model.tasks_on(&proc_name) {
            let period =
                rms_period(t).ok_or_else(|| RmsError { task: t.name.clone(), processor: proc_name.clone() })?;
            ranked.push((period, t.name.clone()));
        }
        ranked.sort();
        let n = ranked.len() as i64;
        for (rank, (_, name)) in ranked.iter().enumerate() {
            if let Some(t) = model.task_mut(name) {
                t.priority = Some(n - rank as i64);
            }
        }
        if let Some(p) = model.processors.iter_mut().find(|p| p.name == proc_name) {
            p.policy = Policy::FpsPreemptive;
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casestudy;

    fn periodic(name: &str, cpu: &str, period: i64, prio: i64) -> Task {
        Task {
            name: name.into(),
            processor: cpu.into(),
            activation: Activation::Periodic { period: TimeExpr::constant(period), offset: TimeExpr::constant(0) },
            bcet: TimeExpr::constant(1),
            wcet: TimeExpr::constant(2),
            deadline: Some(TimeExpr::constant(period)),
            priority: Some(prio),
        }
    }

    fn triggered(name: &str, cpu: &str, prio: i64) -> Task {
        Task { activation: Activation::Triggered, deadline: None, ..periodic(name, cpu, 10, prio) }
    }

    fn cpu(name: &str, policy: Policy) -> Processor {
        Processor { name: name.into(), policy }
    }

    #[test]
    fn case_study_is_valid() {
        let m = validate(casestudy::model()).expect("valid");
        assert_eq!(m.processors.len(), 3);
        assert_eq!(m.tasks.len(), 7);
        let chains = m.chains();
        assert!(chains.contains(&vec!["T1", "T2", "T3", "T4"]));
        assert!(chains.contains(&vec!["T6", "T7"]));
        assert!(chains.contains(&vec!["T5"]));
    }

    #[test]
    fn empty_model_is_valid() {
        assert!(validate(RtModel::default()).is_ok());
    }

    #[test]
    fn two_successors_is_out_degree() {
        let m = RtModel {
            processors: vec![cpu("C", Policy::FpsPreemptive)],
            tasks: vec![periodic("A", "C", 10, 3), triggered("B", "C", 2), triggered("D", "C", 1)],
            dependencies: vec![("A".into(), "B".into()), ("A".into(), "D".into())],
        };
        let err = validate(m).unwrap_err();
        assert_eq!(err.codes(), vec![DiagnosticCode::OutDegree]);
    }

    #[test]
    fn reports_every_violation_at_once() {
        let mut bad = periodic("A", "Nowhere", 10, 1);
        bad.bcet = TimeExpr::constant(5);
        bad.wcet = TimeExpr::constant(4);
        bad.deadline = Some(TimeExpr::constant(11));
        let m = RtModel {
            processors: vec![cpu("C", Policy::FpsPreemptive)],
            tasks: vec![bad, triggered("B", "C", 1), triggered("B", "C", 1)],
            dependencies: vec![("X".into(), "B".into())],
        };
        let codes = validate(m).unwrap_err().codes();
        for c in [
            DiagnosticCode::UnknownProcessor,
            DiagnosticCode::BcetExceedsWcet,
            DiagnosticCode::DeadlineExceedsPeriod,
            DiagnosticCode::DuplicateTask,
            DiagnosticCode::DuplicatePriority,
            DiagnosticCode::UnknownTask,
        ] {
            assert!(codes.contains(&c), "missing {c:?} in {codes:?}");
        }
    }

    #[test]
    fn deadline_equal_or_below_period_accepted() {
        let mut t = periodic("A", "C", 10, 1);
        t.deadline = Some(TimeExpr::constant(7));
        let m = RtModel { processors: vec![cpu("C", Policy::FpsPreemptive)], tasks: vec![t], dependencies: vec![] };
        assert!(validate(m).is_ok());
    }

    #[test]
    fn cycles_and_orphans() {
        let m = RtModel {
            processors: vec![cpu("C", Policy::FpsPreemptive)],
            tasks: vec![triggered("A", "C", 1), triggered("B", "C", 2), triggered("Z", "C", 3)],
            dependencies: vec![("A".into(), "B".into()), ("B".into(), "A".into())],
        };
        let codes = validate(m).unwrap_err().codes();
        assert!(codes.contains(&DiagnosticCode::Cycle));
        assert!(codes.contains(&DiagnosticCode::TriggeredWithoutPredecessor));
    }

    #[test]
    fn missing_priority_on_fps() {
        let mut t = periodic("A", "C", 10, 1);
        t.priority = None;
        let m = RtModel { processors: vec![cpu("C", Policy::FpsNonPreemptive)], tasks: vec![t], dependencies: vec![] };
        assert_eq!(validate(m).unwrap_err().codes(), vec![DiagnosticCode::MissingPriority]);
    }

    #[test]
    fn tdma_slots_checked() {
        let m = RtModel {
            processors: vec![cpu(
                "C",
                Policy::Tdma {
                    slots: vec![
                        TdmaSlot { task: "A".into(), length: TimeExpr::constant(2) },
                        TdmaSlot { task: "A".into(), length: TimeExpr::constant(2) },
                    ],
                },
            )],
            tasks: vec![periodic("A", "C", 10, 1), periodic("B", "C", 10, 2)],
            dependencies: vec![],
        };
        let err = validate(m).unwrap_err();
        assert_eq!(err.codes(), vec![DiagnosticCode::TdmaSlot, DiagnosticCode::TdmaSlot]);
    }

    #[test]
    fn rms_shorter_period_wins() {
        let mut a = periodic("A", "C", 20, 0);
        let mut b = periodic("B", "C", 10, 0);
        a.priority = None;
        b.priority = None;
        let m = RtModel { processors: vec![cpu("C", Policy::Rms)], tasks: vec![a, b], dependencies: vec![] };
        let d = derive_rms_priorities(m).unwrap();
        assert_eq!(d.processors[0].policy, Policy::FpsPreemptive);
        assert!(d.task("B").unwrap().priority > d.task("A").unwrap().priority);
        assert!(validate(d).is_ok());
    }

    #[test]
    fn rms_single_task() {
        let m = RtModel {
            processors: vec![cpu("C", Policy::Rms)],
            tasks: vec![periodic("A", "C", 5, 0)],
            dependencies: vec![],
        };
        let d = derive_rms_priorities(m).unwrap();
        assert_eq!(d.processors[0].policy, Policy::FpsPreemptive);
        assert!(d.task("A").unwrap().priority.is_some());
    }

    #[test]
    fn rms_equal_periods_by_name() {
        let m = RtModel {
            processors: vec![cpu("C", Policy::Rms)],
            tasks: vec![periodic("Zeta", "C", 10, 0), periodic("Alpha", "C", 10, 0)],
            dependencies: vec![],
        };
        let d = derive_rms_priorities(m).unwrap();
        assert!(d.task("Alpha").unwrap().priority > d.task("Zeta").unwrap().priority);
    }

    #[test]
    fn rms_rejects_sporadic() {
        let mut t = periodic("A", "C", 10, 0);
        t.activation = Activation::Sporadic { min_iat: TimeExpr::constant(10), offset: TimeExpr::constant(0) };
        let m = RtModel { processors: vec![cpu("C", Policy::Rms)], tasks: vec![t], dependencies: vec![] };
        let err = derive_rms_priorities(m.clone()).unwrap_err();
        assert_eq!(err.task, "A");
        assert_eq!(validate(m).unwrap_err().codes(), vec![DiagnosticCode::RmsNonperiodic]);
    }
}
