//! Exhaustive search for the execution times of the case study that the
//! published description leaves open (T2, T3, T4 and T6 bounds, T7 BCET).
//!
//! Every candidate is scored against the published observations: nominal
//! schedulability, the two appendix misses and their chronograms, the
//! first chronogram, and the WCET, deadline and offset regions.
//!
//! ```text
//! cargo run --release -p rtforge-core --example calibrate -- [at-offset|from-offset] [all|with-deadline]
//! ```

use rtforge::engine::{self, TimedTrace};
use rtforge::model::{self, RtModel, TimeExpr};
use rtforge::sweep::{compare_region, sweep, Axis, ConstraintSet, ParameterGrid, SweepOptions};
use rtforge::translate::{self, Overrun, SporadicRelease, TranslateOptions, Translation};
use rtforge::{casestudy, Rational, Valuation};

const CRITERIA: [&str; 9] =
    ["nominal", "d11-miss", "a1-script", "a2-miss", "a2-script", "fig2", "wcet-2d", "deadline-2d", "offset"];

fn int(n: i64) -> TimeExpr {
    TimeExpr::Const(Rational::from_integer(n))
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    w2: i64,
    w3: i64,
    w4: i64,
    b6: i64,
    w6: i64,
    b7: i64,
}

fn instantiate(c: &Candidate) -> RtModel {
    let mut m = casestudy::model();
    let set = |m: &mut RtModel, t: &str, b: i64, w: i64| {
        let task = m.task_mut(t).unwrap();
        task.bcet = int(b);
        task.wcet = int(w);
    };
    set(&mut m, "T2", 1, c.w2);
    set(&mut m, "T3", 1, c.w3);
    set(&mut m, "T4", 1, c.w4);
    set(&mut m, "T6", c.b6, c.w6);
    set(&mut m, "T7", c.b7, 15);
    m
}

fn replay(tr: &Translation, v: &Valuation, script: &str) -> Option<TimedTrace> {
    let mut t = TimedTrace::from_events(engine::parse_script(script).ok()?);
    let check = engine::annotate(tr, v, &mut t).ok()?;
    check.accepted.then_some(t)
}

fn region_ok(tr: &Translation, nominal: &Valuation, axes: Vec<Axis>, dnf: &[Vec<&str>]) -> bool {
    let grid = ParameterGrid::new(axes).unwrap();
    let opts = SweepOptions { jobs: Some(1), ..Default::default() };
    let Ok(region) = sweep(tr, &grid, nominal, &opts) else { return false };
    compare_region(&region, &ConstraintSet::parse(dnf).unwrap()).is_empty()
}

fn score(c: &Candidate, release: SporadicRelease, overrun: Overrun) -> [bool; 9] {
    let m = model::validate(instantiate(c)).unwrap();
    let (lifted, nominal) = translate::lift_parameters(&m);
    let lifted = model::validate(lifted).unwrap();
    let tr = translate::compile(&lifted, &TranslateOptions { sporadic_release: release, overrun_detection: overrun });
    let with = |pairs: &[(&str, i64)]| {
        let mut v = nominal.clone();
        for (k, x) in pairs {
            v.insert(k.to_string(), Rational::from_integer(*x));
        }
        v
    };
    let miss = |v: &Valuation| engine::check_schedulability(&tr.network, v).is_ok_and(|r| r.is_miss());
    let marker =
        |t: Option<TimedTrace>, at: i64| t.and_then(|t| t.miss).is_some_and(|m| m.marker == Rational::from_integer(at));
    let d11 = with(&[("T5Deadline", 11)]);
    let a2 = with(&[("T1WCET", 15), ("T1Period", 20), ("T1Deadline", 20)]);
    let fig2 = replay(&tr, &nominal, casestudy::FIG_CHRONOGRAM).is_some_and(|t| {
        let t5: Vec<_> = t.gantt.iter().filter(|s| s.task == "T5").collect();
        t5.len() >= 2 && t5[0].end == Rational::from_integer(5) && t5[1].start == Rational::new(47, 5)
    });
    [
        engine::check_schedulability(&tr.network, &nominal).is_ok_and(|r| r.is_schedulable()),
        miss(&d11),
        marker(replay(&tr, &d11, casestudy::MISS_DEADLINE_11), 11),
        miss(&a2),
        marker(replay(&tr, &a2, casestudy::MISS_LONG_T1), 20),
        fig2,
        region_ok(
            &tr,
            &nominal,
            vec![Axis::integer("T1WCET", 4, 8).unwrap(), Axis::integer("T4WCET", 1, 8).unwrap()],
            &[vec!["4 <= T1WCET <= 6", "T4WCET >= 1", "T1WCET + T4WCET < 9"]],
        ),
        region_ok(
            &tr,
            &nominal,
            vec![Axis::integer("T1Deadline", 1, 15).unwrap(), Axis::integer("T5Deadline", 1, 25).unwrap()],
            &[vec!["5 <= T1Deadline <= 13", "10 <= T5Deadline <= 20"]],
        ),
        region_ok(&tr, &nominal, vec![Axis::integer("T1Offset", 0, 10).unwrap()], &[vec!["1 < T1Offset < 8"]]),
    ]
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let release = match args.first().map(String::as_str) {
        Some("from-offset") => SporadicRelease::FromOffset,
        _ => SporadicRelease::AtOffset,
    };
    let overrun = match args.get(1).map(String::as_str) {
        Some("with-deadline") => Overrun::WithDeadline,
        _ => Overrun::All,
    };
    let mut candidates = Vec::new();
    for w2 in 1..=3 {
        for w3 in 2..=4 {
            for w4 in 1..=3 {
                for b6 in 1..=6 {
                    for w6 in 6..=8 {
                        for b7 in [1, 5, 10] {
                            candidates.push(Candidate { w2, w3, w4, b6, w6, b7 });
                        }
                    }
                }
            }
        }
    }
    println!("# sporadic release {release:?}, overrun {overrun:?}, {} candidates", candidates.len());
    println!("# columns: w2 w3 w4 b6 w6 b7 | {}", CRITERIA.join(" "));
    let mut best: Vec<(usize, Candidate, [bool; 9])> = Vec::new();
    let mut tally = [0usize; 9];
    for c in &candidates {
        let s = score(c, release, overrun);
        for (i, ok) in s.iter().enumerate() {
            tally[i] += *ok as usize;
        }
        let n = s.iter().filter(|x| **x).count();
        let flags: String = s.iter().map(|x| if *x { '1' } else { '.' }).collect();
        println!("{} {} {} {} {} {:>2} | {flags} {n}", c.w2, c.w3, c.w4, c.b6, c.w6, c.b7);
        best.push((n, *c, s));
    }
    best.sort_by_key(|b| std::cmp::Reverse(b.0));
    println!("# per-criterion satisfiable counts:");
    for (name, n) in CRITERIA.iter().zip(tally) {
        println!("#   {name:<12} {n}");
    }
    println!("# best: {:?}", &best[..best.len().min(5)]);
}
