//! IMITATOR input syntax (2.x dialect).
//!
//! Constants are scaled to integers by the LCM of all denominators; the
//! factor is recorded in the header. Output is byte-deterministic: it only
//! depends on declaration order in the network.

use std::fmt::Write;

use crate::pta::{Bound, Guard, PtaNetwork};
use crate::rational::{lcm_of_denominators, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmitError {
    #[error("UNSUPPORTED_CONSTRUCT: {0}")]
    Unsupported(String),
    #[error("UNSUPPORTED_CONSTRUCT: target version `{0}` (only 2.x is supported)")]
    Version(String),
}

impl EmitError {
    pub fn code(&self) -> &'static str {
        "UNSUPPORTED_CONSTRUCT"
    }
}

pub const DEFAULT_TARGET: &str = "2.10";

const KEYWORDS: &[&str] = &[
    "and",
    "automaton",
    "bad",
    "clock",
    "constant",
    "discrete",
    "do",
    "else",
    "end",
    "False",
    "goto",
    "if",
    "in",
    "init",
    "invariant",
    "loc",
    "not",
    "or",
    "parameter",
    "property",
    "stop",
    "sync",
    "synclabs",
    "then",
    "True",
    "unreachable",
    "urgent",
    "var",
    "wait",
    "when",
    "while",
];

fn check_ident(kind: &str, name: &str) -> Result<(), EmitError> {
    let mut chars = name.chars();
    let ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !ok {
        return Err(EmitError::Unsupported(format!("{kind} name `{name}` is not an identifier")));
    }
    if KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(name)) {
        return Err(EmitError::Unsupported(format!("{kind} name `{name}` is a reserved word")));
    }
    Ok(())
}

struct Scaled {
    factor: i64,
}

impl Scaled {
    fn int(&self, v: &Rational) -> i64 {
        (v * Rational::from_integer(self.factor)).to_integer()
    }
}

fn bound_text(net: &PtaNetwork, s: &Scaled, b: &Bound) -> String {
    match b {
        Bound::Const(c) => s.int(c).to_string(),
        Bound::Param(p) => net.params[p.idx()].name.clone(),
    }
}

fn guard_text(net: &PtaNetwork, s: &Scaled, g: &Guard) -> String {
    if g.is_true() {
        return "True".into();
    }
    g.atoms
        .iter()
        .map(|a| format!("{} {} {}", net.clocks[a.clock.idx()], a.op.symbol(), bound_text(net, s, &a.rhs)))
        .collect::<Vec<_>>()
        .join(" & ")
}

fn banner(out: &mut String, title: &str) {
    out.push_str("(************************************************************)\n");
    let _ = writeln!(out, "(* {title} *)");
    out.push_str("(************************************************************)\n");
}

/// Renders `net` for IMITATOR. `target_version` must be a 2.x version.
pub fn emit_imitator(net: &PtaNetwork, target_version: &str) -> Result<String, EmitError> {
    if target_version != "2" && !target_version.starts_with("2.") {
        return Err(EmitError::Version(target_version.to_string()));
    }
    for c in &net.clocks {
        check_ident("clock", c)?;
    }
    for p in &net.params {
        check_ident("parameter", &p.name)?;
    }
    for a in &net.actions {
        check_ident("action", a)?;
    }
    for a in &net.automata {
        check_ident("automaton", &a.name)?;
        for l in &a.locations {
            check_ident("location", &l.name)?;
        }
    }
    let s = Scaled { factor: lcm_of_denominators(&net.constants()) };

    let mut out = String::new();
    banner(&mut out, "Generated by rtforge for IMITATOR 2.x");
    let _ = writeln!(out, "(* Time scale: constants multiplied by {} *)", s.factor);
    out.push('\n');

    if !net.clocks.is_empty() || !net.params.is_empty() {
        out.push_str("var\n");
        if !net.clocks.is_empty() {
            let _ = writeln!(out, "\t{}\n\t\t: clock;\n", net.clocks.join(",\n\t"));
        }
        if !net.params.is_empty() {
            let names: Vec<&str> = net.params.iter().map(|p| p.name.as_str()).collect();
            let _ = writeln!(out, "\t{}\n\t\t: parameter;\n", names.join(",\n\t"));
        }
    }

    for a in &net.automata {
        out.push('\n');
        banner(&mut out, &format!("automaton {}", a.name));
        let _ = writeln!(out, "automaton {}", a.name);
        let labels: Vec<&str> = a.actions.iter().map(|id| net.actions[id.idx()].as_str()).collect();
        let _ = writeln!(out, "synclabs: {};", labels.join(", "));
        for (li, l) in a.locations.iter().enumerate() {
            out.push('\n');
            if l.urgent {
                out.push_str("urgent ");
            }
            let _ = write!(out, "loc {}: invariant {}", l.name, guard_text(net, &s, &l.invariant));
            if !l.stopped.is_empty() {
                let stopped: Vec<&str> = l.stopped.iter().map(|c| net.clocks[c.idx()].as_str()).collect();
                let _ = write!(out, " stop{{{}}}", stopped.join(", "));
            }
            out.push('\n');
            for e in a.edges.iter().filter(|e| e.source.idx() == li) {
                let _ = write!(out, "\twhen {}", guard_text(net, &s, &e.guard));
                if let Some(act) = e.action {
                    let _ = write!(out, " sync {}", net.actions[act.idx()]);
                }
                if !e.resets.is_empty() {
                    let resets: Vec<String> =
                        e.resets.iter().map(|c| format!("{} := 0", net.clocks[c.idx()])).collect();
                    let _ = write!(out, " do {{{}}}", resets.join(", "));
                }
                let _ = writeln!(out, " goto {};", a.locations[e.target.idx()].name);
            }
        }
        let _ = writeln!(out, "end (* {} *)", a.name);
    }

    out.push('\n');
    banner(&mut out, "Initial state");
    out.push_str("init := True");
    for a in &net.automata {
        let _ = write!(out, "\n\t& loc[{}] = {}", a.name, a.locations[a.initial.idx()].name);
    }
    for c in &net.clocks {
        let _ = write!(out, "\n\t& {c} = 0");
    }
    for p in &net.params {
        match p.interval {
            Some((lo, hi)) => {
                let _ = write!(out, "\n\t& {} >= {} & {} <= {}", p.name, s.int(&lo), p.name, s.int(&hi));
            }
            None => {
                let _ = write!(out, "\n\t& {} >= 0", p.name);
            }
        }
    }
    out.push_str(";\n\n");

    banner(&mut out, "Property");
    let targets: Vec<String> = net
        .locations_named(crate::translate::DEADLINE_MISSED)
        .into_iter()
        .map(|(i, l)| format!("loc[{}] = {}", net.automata[i].name, net.automata[i].loc(l).name))
        .collect();
    if targets.is_empty() {
        out.push_str("(* no DeadlineMissed location: nothing to check *)\n");
    } else {
        let _ = writeln!(out, "property := unreachable {};", targets.join(" or "));
    }
    out.push_str("\nend\n");
    Ok(out)
}
