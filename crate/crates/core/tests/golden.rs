//! Byte-for-byte comparison of emitted IMITATOR models with checked-in
//! files. Run with `RTFORGE_BLESS=1` to rewrite them after an intended
//! change.

use std::path::PathBuf;

use rtforge::casestudy;
use rtforge::emit::{emit_imitator, DEFAULT_TARGET};
use rtforge::model::{validate, Activation, Policy, Processor, RtModel, Task, TimeExpr};
use rtforge::pta::PtaNetwork;
use rtforge::translate::{self, SporadicRelease};

fn golden(name: &str, net: &PtaNetwork) {
    let text = emit_imitator(net, DEFAULT_TARGET).unwrap();
    assert_eq!(text, emit_imitator(net, DEFAULT_TARGET).unwrap(), "{name}: emission not deterministic");
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("RTFORGE_BLESS").is_some() {
        std::fs::write(&path, &text).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(text == expected, "{name} differs from {}", path.display());
}

fn param_task(name: &str, activation: Activation) -> Task {
    Task {
        name: name.into(),
        processor: "CPU".into(),
        activation,
        bcet: TimeExpr::param(format!("{name}BCET")),
        wcet: TimeExpr::param(format!("{name}WCET")),
        deadline: None,
        priority: Some(1),
    }
}

#[test]
fn periodic_fragment() {
    let t = param_task(
        "T",
        Activation::Periodic { period: TimeExpr::param("TPeriod"), offset: TimeExpr::param("TOffset") },
    );
    golden("periodic.imi", &translate::periodic_activation_pta(&t));
}

#[test]
fn sporadic_fragment() {
    let t =
        param_task("T", Activation::Sporadic { min_iat: TimeExpr::param("TIAT"), offset: TimeExpr::param("TOffset") });
    golden("sporadic.imi", &translate::sporadic_activation_pta(&t, SporadicRelease::FromOffset));
    golden("sporadic-at-offset.imi", &translate::sporadic_activation_pta(&t, SporadicRelease::AtOffset));
}

#[test]
fn dependency_fragment() {
    golden("dependency.imi", &translate::dependency_pta("T1", "T2", &Default::default()));
}

#[test]
fn two_task_scheduler() {
    let cs = casestudy::model();
    let m = RtModel {
        processors: vec![Processor { name: "CPU1".into(), policy: Policy::FpsPreemptive }],
        tasks: ["T1", "T5"].iter().map(|n| cs.task(n).unwrap().clone()).collect(),
        dependencies: vec![],
    };
    let (lifted, _) = translate::lift_parameters(&m);
    golden("cpu1.imi", &translate::translate(&validate(lifted).unwrap()));
}

#[test]
fn case_study() {
    let m = validate(casestudy::model()).unwrap();
    golden("casestudy.imi", &translate::translate(&m));
    let (lifted, _) = translate::lift_parameters(m.model());
    golden("casestudy-parametric.imi", &translate::translate(&validate(lifted).unwrap()));
}
