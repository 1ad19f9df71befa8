//! Pointwise region synthesis over a parameter grid, and comparison of the
//! result with constraint sets written as linear DNFs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::{self, CheckOptions, EngineError, VerdictKind};
use crate::pta::Bound;
use crate::rational::{format_decimal, parse_rational, Rational};
use crate::translate::Translation;
use crate::Valuation;

pub const DEFAULT_GRID_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SweepError {
    #[error("BAD_AXIS: {0}")]
    BadAxis(String),
    #[error("GRID_CAP_EXCEEDED: {points} points, cap is {cap}")]
    GridCap { points: u128, cap: usize },
    #[error("UNKNOWN_PARAMETER: {0}")]
    UnknownParameter(String),
    #[error("MISSING_VALUATION: no value for parameter {0}")]
    MissingValuation(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl SweepError {
    pub fn code(&self) -> &'static str {
        match self {
            SweepError::BadAxis(_) => "BAD_AXIS",
            SweepError::GridCap { .. } => "GRID_CAP_EXCEEDED",
            SweepError::UnknownParameter(_) => "UNKNOWN_PARAMETER",
            SweepError::MissingValuation(_) => "MISSING_VALUATION",
            SweepError::Engine(e) => e.code(),
        }
    }
}

/// One free parameter ranging over `lo, lo + step, ..., <= hi`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Axis {
    pub param: String,
    #[serde(with = "crate::rational::serde_rational")]
    pub lo: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub hi: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub step: Rational,
}

impl Axis {
    pub fn new(param: impl Into<String>, lo: Rational, hi: Rational, step: Rational) -> Result<Self, SweepError> {
        let param = param.into();
        if lo > hi {
            return Err(SweepError::BadAxis(format!("{param}: lower bound above upper bound")));
        }
        if step <= Rational::from_integer(0) {
            return Err(SweepError::BadAxis(format!("{param}: step must be positive")));
        }
        Ok(Self { param, lo, hi, step })
    }

    pub fn integer(param: impl Into<String>, lo: i64, hi: i64) -> Result<Self, SweepError> {
        Self::new(param, Rational::from_integer(lo), Rational::from_integer(hi), Rational::from_integer(1))
    }

    /// Parses `name=lo:hi[:step]`.
    pub fn parse(spec: &str) -> Result<Self, SweepError> {
        let bad = |m: &str| SweepError::BadAxis(format!("`{spec}`: {m}"));
        let (name, range) = spec.split_once('=').ok_or_else(|| bad("expected name=lo:hi[:step]"))?;
        let parts: Vec<&str> = range.split(':').collect();
        if !(2..=3).contains(&parts.len()) {
            return Err(bad("expected lo:hi or lo:hi:step"));
        }
        let num = |s: &str| parse_rational(s.trim()).map_err(|e| bad(&e.to_string()));
        let step = if parts.len() == 3 { num(parts[2])? } else { Rational::from_integer(1) };
        Self::new(name.trim(), num(parts[0])?, num(parts[1])?, step)
    }

    pub fn len(&self) -> u128 {
        ((self.hi - self.lo) / self.step).floor().to_integer() as u128 + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> impl Iterator<Item = Rational> + '_ {
        (0..self.len() as i64).map(|i| self.lo + self.step * Rational::from_integer(i))
    }

    pub fn contains(&self, v: &Rational) -> bool {
        *v >= self.lo && *v <= self.hi && ((*v - self.lo) / self.step).is_integer()
    }
}

/// The free dimensions of a sweep, first axis outermost.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParameterGrid {
    pub axes: Vec<Axis>,
}

impl ParameterGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self, SweepError> {
        let mut seen = BTreeSet::new();
        for a in &axes {
            if !seen.insert(a.param.clone()) {
                return Err(SweepError::BadAxis(format!("{} appears twice", a.param)));
            }
        }
        Ok(Self { axes })
    }

    pub fn size(&self) -> u128 {
        self.axes.iter().map(Axis::len).product()
    }

    pub fn params(&self) -> Vec<&str> {
        self.axes.iter().map(|a| a.param.as_str()).collect()
    }

    /// Every grid point in row-major order.
    pub fn points(&self) -> Vec<Vec<Rational>> {
        let mut out = vec![vec![]];
        for a in &self.axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    a.values().map(move |v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PointVerdict {
    Schedulable,
    DeadlineMiss,
    /// A structural side condition fails (e.g. BCET above WCET).
    Infeasible,
    Inconclusive,
}

impl fmt::Display for PointVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PointVerdict::Schedulable => "SCHEDULABLE",
            PointVerdict::DeadlineMiss => "DEADLINE_MISS",
            PointVerdict::Infeasible => "INFEASIBLE",
            PointVerdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionPoint {
    /// One value per grid axis.
    pub values: Vec<Rational>,
    pub verdict: PointVerdict,
    pub states: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub grid: ParameterGrid,
    pub fixed: Valuation,
    pub points: Vec<RegionPoint>,
}

impl Region {
    pub fn valuation(&self, p: &RegionPoint) -> Valuation {
        let mut v = self.fixed.clone();
        for (a, x) in self.grid.axes.iter().zip(&p.values) {
            v.insert(a.param.clone(), *x);
        }
        v
    }

    pub fn count(&self, verdict: PointVerdict) -> usize {
        self.points.iter().filter(|p| p.verdict == verdict).count()
    }

    pub fn verdict_at(&self, values: &[Rational]) -> Option<PointVerdict> {
        self.points.iter().find(|p| p.values == values).map(|p| p.verdict)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let fixed: BTreeMap<&String, String> = self.fixed.iter().map(|(k, v)| (k, format_decimal(v))).collect();
        let points: Vec<serde_json::Value> = self
            .points
            .iter()
            .map(|p| {
                let vals: BTreeMap<&str, String> =
                    self.grid.axes.iter().zip(&p.values).map(|(a, v)| (a.param.as_str(), format_decimal(v))).collect();
                serde_json::json!({ "values": vals, "verdict": p.verdict, "states": p.states })
            })
            .collect();
        serde_json::json!({
            "grid": self.grid.axes.iter().map(|a| serde_json::json!({
                "param": a.param,
                "lo": format_decimal(&a.lo),
                "hi": format_decimal(&a.hi),
                "step": format_decimal(&a.step),
            })).collect::<Vec<_>>(),
            "fixed": fixed,
            "points": points,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for a in &self.grid.axes {
            out.push_str(&a.param);
            out.push(',');
        }
        out.push_str("verdict,states\n");
        for p in &self.points {
            for v in &p.values {
                out.push_str(&format_decimal(v));
                out.push(',');
            }
            out.push_str(&format!("{},{}\n", p.verdict, p.states));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepOptions {
    pub check: CheckOptions,
    /// Worker threads; `None` uses every logical CPU.
    pub jobs: Option<usize>,
    pub cap: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { check: CheckOptions::default(), jobs: None, cap: DEFAULT_GRID_CAP }
    }
}

fn bound_value(tr: &Translation, v: &Valuation, b: &Bound) -> Rational {
    match b {
        Bound::Const(c) => *c,
        Bound::Param(p) => v[&tr.network.params[p.idx()].name],
    }
}

/// First failing structural side condition of `tr` under `v`, if any.
pub fn infeasibility(tr: &Translation, v: &Valuation) -> Option<String> {
    tr.meta
        .feasibility
        .iter()
        .find(|f| bound_value(tr, v, &f.lhs) > bound_value(tr, v, &f.rhs))
        .map(|f| f.label.clone())
}

/// Checks every point of `grid`, with the remaining parameters taken from
/// `fixed`. Results come back in grid order whatever the thread count.
pub fn sweep(
    tr: &Translation,
    grid: &ParameterGrid,
    fixed: &Valuation,
    opts: &SweepOptions,
) -> Result<Region, SweepError> {
    let size = grid.size();
    if size > opts.cap as u128 {
        return Err(SweepError::GridCap { points: size, cap: opts.cap });
    }
    for a in &grid.axes {
        if tr.network.find_param(&a.param).is_none() {
            return Err(SweepError::UnknownParameter(a.param.clone()));
        }
    }
    let free: BTreeSet<&str> = grid.params().into_iter().collect();
    for p in &tr.network.params {
        if !free.contains(p.name.as_str()) && !fixed.contains_key(&p.name) {
            return Err(SweepError::MissingValuation(p.name.clone()));
        }
    }
    let mut fixed = fixed.clone();
    fixed.retain(|k, _| !free.contains(k.as_str()));
    let points = grid.points();
    let run = |values: &Vec<Rational>| -> Result<RegionPoint, SweepError> {
        let mut v = fixed.clone();
        for (a, x) in grid.axes.iter().zip(values) {
            v.insert(a.param.clone(), *x);
        }
        if infeasibility(tr, &v).is_some() {
            return Ok(RegionPoint { values: values.clone(), verdict: PointVerdict::Infeasible, states: 0 });
        }
        let verdict = engine::check_with(&tr.network, &v, &opts.check)?;
        let kind = match verdict.kind {
            VerdictKind::Schedulable => PointVerdict::Schedulable,
            VerdictKind::DeadlineMiss { .. } => PointVerdict::DeadlineMiss,
            VerdictKind::Inconclusive { .. } => PointVerdict::Inconclusive,
        };
        Ok(RegionPoint { values: values.clone(), verdict: kind, states: verdict.states_explored })
    };
    let results = map_points(&points, opts.jobs, run);
    let points = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(Region { grid: grid.clone(), fixed, points })
}

#[cfg(feature = "parallel")]
fn map_points<T, R, F>(items: &[T], jobs: Option<usize>, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    if jobs == Some(1) {
        return items.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build();
    match pool {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn map_points<T, R, F>(items: &[T], _jobs: Option<usize>, f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

// ---- constraints -------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("BAD_CONSTRAINT: `{text}`: {message}")]
pub struct ConstraintError {
    pub text: String,
    pub message: String,
}

/// Sum of `coefficient * parameter` terms plus a constant.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinExpr {
    pub terms: BTreeMap<String, Rational>,
    pub constant: Rational,
}

impl LinExpr {
    pub fn eval(&self, v: &Valuation) -> Option<Rational> {
        let mut acc = self.constant;
        for (p, c) in &self.terms {
            acc += *c * *v.get(p)?;
        }
        Some(acc)
    }

    fn sub(mut self, other: &LinExpr) -> LinExpr {
        for (p, c) in &other.terms {
            *self.terms.entry(p.clone()).or_default() -= *c;
        }
        self.terms.retain(|_, c| *c != Rational::from_integer(0));
        self.constant -= other.constant;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Rel {
    fn holds(self, x: Rational) -> bool {
        let z = Rational::from_integer(0);
        match self {
            Rel::Lt => x < z,
            Rel::Le => x <= z,
            Rel::Eq => x == z,
            Rel::Ge => x >= z,
            Rel::Gt => x > z,
        }
    }
}

/// `expr rel 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inequality {
    pub expr: LinExpr,
    pub rel: Rel,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConstraintSet {
    /// Disjunction of conjunctions.
    pub dnf: Vec<Vec<Inequality>>,
    /// Source text of each conjunction, for messages.
    pub text: Vec<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraints {
    dnf: Vec<Vec<String>>,
}

impl ConstraintSet {
    /// `{"dnf": [["4 <= T1WCET", "T1WCET + T4WCET < 9"], ...]}`.
    pub fn from_json(text: &str) -> Result<Self, ConstraintError> {
        let raw: RawConstraints =
            serde_json::from_str(text).map_err(|e| ConstraintError { text: String::new(), message: e.to_string() })?;
        Self::parse(&raw.dnf)
    }

    pub fn parse<S: AsRef<str>>(dnf: &[Vec<S>]) -> Result<Self, ConstraintError> {
        let mut out = ConstraintSet::default();
        for conj in dnf {
            let mut ineqs = Vec::new();
            for c in conj {
                ineqs.extend(parse_chain(c.as_ref())?);
            }
            out.dnf.push(ineqs);
            out.text.push(conj.iter().map(|s| s.as_ref().to_string()).collect());
        }
        Ok(out)
    }

    pub fn params(&self) -> BTreeSet<String> {
        self.dnf.iter().flatten().flat_map(|i| i.expr.terms.keys().cloned()).collect()
    }
}

/// Exact DNF evaluation; a parameter missing from `v` makes its atom false.
pub fn evaluate_constraints(cs: &ConstraintSet, v: &Valuation) -> bool {
    cs.dnf.iter().any(|conj| conj.iter().all(|i| i.expr.eval(v).is_some_and(|x| i.rel.holds(x))))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub values: Vec<Rational>,
    pub verdict: PointVerdict,
    pub expected_schedulable: bool,
}

/// Grid points where the sweep and the constraint set disagree. Infeasible
/// points are skipped; inconclusive ones always count as mismatches.
pub fn compare_region(r: &Region, cs: &ConstraintSet) -> Vec<Mismatch> {
    r.points
        .iter()
        .filter(|p| p.verdict != PointVerdict::Infeasible)
        .filter_map(|p| {
            let expected = evaluate_constraints(cs, &r.valuation(p));
            let got = match p.verdict {
                PointVerdict::Schedulable => Some(true),
                PointVerdict::DeadlineMiss => Some(false),
                _ => None,
            };
            (got != Some(expected)).then(|| Mismatch {
                values: p.values.clone(),
                verdict: p.verdict,
                expected_schedulable: expected,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Rel(Rel),
}

fn tokenize(s: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1
            }
            '*' => {
                out.push(Tok::Star);
                i += 1
            }
            '<' | '>' | '=' | '≤' | '≥' => {
                let next = chars.get(i + 1).copied();
                let (rel, width) = match (c, next) {
                    ('<', Some('=')) => (Rel::Le, 2),
                    ('>', Some('=')) => (Rel::Ge, 2),
                    ('=', Some('=')) => (Rel::Eq, 2),
                    ('<', _) => (Rel::Lt, 1),
                    ('>', _) => (Rel::Gt, 1),
                    ('=', _) => (Rel::Eq, 1),
                    ('≤', _) => (Rel::Le, 1),
                    _ => (Rel::Ge, 1),
                };
                out.push(Tok::Rel(rel));
                i += width;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.' || chars[i] == '/') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                out.push(Tok::Num(parse_rational(&text).map_err(|e| e.to_string())?));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

fn parse_expr(toks: &[Tok]) -> Result<LinExpr, String> {
    if toks.is_empty() {
        return Err("empty side".into());
    }
    let mut e = LinExpr::default();
    let mut i = 0;
    let mut first = true;
    while i < toks.len() {
        let mut sign = Rational::from_integer(1);
        match toks[i] {
            Tok::Plus if !first => i += 1,
            Tok::Minus => {
                sign = -sign;
                i += 1
            }
            _ if first => {}
            _ => return Err("expected + or -".into()),
        }
        first = false;
        match toks.get(i) {
            Some(Tok::Num(n)) => {
                if let (Some(Tok::Star), Some(Tok::Ident(p))) = (toks.get(i + 1), toks.get(i + 2)) {
                    *e.terms.entry(p.clone()).or_default() += sign * *n;
                    i += 3;
                } else if let Some(Tok::Ident(p)) = toks.get(i + 1) {
                    *e.terms.entry(p.clone()).or_default() += sign * *n;
                    i += 2;
                } else {
                    e.constant += sign * *n;
                    i += 1;
                }
            }
            Some(Tok::Ident(p)) => {
                *e.terms.entry(p.clone()).or_default() += sign;
                i += 1;
            }
            _ => return Err("expected a number or a parameter".into()),
        }
    }
    Ok(e)
}

/// Parses `a rel b [rel c ...]` into one inequality per adjacent pair.
fn parse_chain(text: &str) -> Result<Vec<Inequality>, ConstraintError> {
    let err = |message: String| ConstraintError { text: text.to_string(), message };
    let toks = tokenize(text).map_err(err)?;
    let mut sides = vec![vec![]];
    let mut rels = Vec::new();
    for t in toks {
        match t {
            Tok::Rel(r) => {
                rels.push(r);
                sides.push(vec![]);
            }
            t => sides.last_mut().unwrap().push(t),
        }
    }
    if rels.is_empty() {
        return Err(err("no comparison".into()));
    }
    let exprs = sides.iter().map(|s| parse_expr(s)).collect::<Result<Vec<_>, _>>().map_err(err)?;
    Ok(rels
        .iter()
        .enumerate()
        .map(|(i, r)| Inequality { expr: exprs[i].clone().sub(&exprs[i + 1]), rel: *r })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn val(pairs: &[(&str, i64)]) -> Valuation {
        pairs.iter().map(|(k, v)| (k.to_string(), r(*v))).collect()
    }

    fn wcet2d() -> ConstraintSet {
        ConstraintSet::parse(&[vec!["4 <= T1WCET <= 6", "T4WCET >= 1", "T1WCET + T4WCET < 9"]]).unwrap()
    }

    #[test]
    fn evaluate_boundary() {
        assert!(evaluate_constraints(&wcet2d(), &val(&[("T1WCET", 4), ("T4WCET", 4)])));
        assert!(!evaluate_constraints(&wcet2d(), &val(&[("T1WCET", 5), ("T4WCET", 4)])));
        assert!(!evaluate_constraints(&ConstraintSet::default(), &val(&[])));
    }

    #[test]
    fn coefficients_and_rationals() {
        let cs = ConstraintSet::parse(&[vec!["2*A - 3 B + 1/2 > 0", "A = 7/2"]]).unwrap();
        assert!(evaluate_constraints(&cs, &[("A".to_string(), Rational::new(7, 2)), ("B".into(), r(2))].into()));
        assert!(!evaluate_constraints(&cs, &[("A".to_string(), Rational::new(7, 2)), ("B".into(), r(3))].into()));
        assert!(ConstraintSet::parse(&[vec!["A + "]]).is_err());
        assert!(ConstraintSet::parse(&[vec!["A"]]).is_err());
    }

    #[test]
    fn json_form() {
        let cs = ConstraintSet::from_json(r#"{"dnf":[["T1Offset > 1","T1Offset < 8"]]}"#).unwrap();
        assert_eq!(cs.params(), ["T1Offset".to_string()].into());
        assert!(ConstraintSet::from_json(r#"{"dnf":[], "x": 1}"#).is_err());
    }

    #[test]
    fn axis_parsing() {
        let a = Axis::parse("T1WCET=4:8").unwrap();
        assert_eq!(a.values().collect::<Vec<_>>(), (4..=8).map(r).collect::<Vec<_>>());
        let b = Axis::parse("X=0:1:1/2").unwrap();
        assert_eq!(b.len(), 3);
        assert!(Axis::parse("X=3:1").is_err());
        assert!(Axis::parse("X=0:1:0").is_err());
        assert!(Axis::parse("X").is_err());
    }

    #[test]
    fn row_major_points() {
        let g = ParameterGrid::new(vec![Axis::integer("A", 0, 1).unwrap(), Axis::integer("B", 0, 2).unwrap()]).unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1], vec![r(0), r(1)]);
        assert_eq!(ParameterGrid::default().points(), vec![Vec::<Rational>::new()]);
        assert!(ParameterGrid::new(vec![Axis::integer("A", 0, 1).unwrap(), Axis::integer("A", 0, 1).unwrap()]).is_err());
    }

    #[test]
    fn all_schedulable_vs_empty_dnf() {
        let g = ParameterGrid::new(vec![Axis::integer("A", 0, 2).unwrap()]).unwrap();
        let region = Region {
            points: g
                .points()
                .into_iter()
                .map(|values| RegionPoint { values, verdict: PointVerdict::Schedulable, states: 1 })
                .collect(),
            grid: g,
            fixed: Valuation::new(),
        };
        assert_eq!(compare_region(&region, &ConstraintSet::default()).len(), 3);
        let csv = region.to_csv();
        assert!(csv.starts_with("A,verdict,states\n0,SCHEDULABLE,1\n"), "{csv}");
    }
}
