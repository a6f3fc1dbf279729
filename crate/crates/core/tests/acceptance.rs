//! One line per acceptance criterion. Criteria whose identity does not hold
//! as stated are reported, not asserted; the reference set below pins which.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use asai_core::harness::{run_suite, ReportValue, SuiteSpec, VerificationReport};
use asai_core::zagierbridge::{bridge_lhs, bridge_rhs_coprime};
use asai_core::{make_field, QuadInt};
use num_complex::Complex64;

const TOL_ZAGIER: f64 = 1e-9;
const TOL_EULER: f64 = 1e-12;
const TOL_COMPA: f64 = 1e-9;
const TOL_CONV: f64 = 1e-3;
const TOL_SPECTRAL: f64 = 1e-2;
const TOL_ST: f64 = 1e-3;
const TOL_A0: f64 = 1e-2;
const TOL_AN: f64 = 5e-2;
const TOL_HECKE: f64 = 1e-10;
const GOLDEN_ANCHOR: f64 = -1.618033988749895;

/// Criteria expected to hold; the rest fail for reasons recorded with the project notes.
const EXPECTED_PASS: [u32; 7] = [1, 2, 3, 4, 5, 6, 13];

struct Line {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn run(suite: &str, tol: Option<f64>) -> (Vec<VerificationReport>, Duration) {
    let mut spec = SuiteSpec::new(suite);
    spec.tolerance = tol;
    let start = Instant::now();
    let r = run_suite(&spec).expect("suite runs");
    (r, start.elapsed())
}

fn has(r: &VerificationReport, key: &str, value: &str) -> bool {
    r.instance.get(key).map(String::as_str) == Some(value)
}

/// (passing, total, worst absolute error)
fn tally<'a>(reports: impl IntoIterator<Item = &'a VerificationReport>) -> (usize, usize, f64) {
    reports.into_iter().fold((0, 0, 0.0), |(p, n, w), r| (p + r.pass as usize, n + 1, f64::max(w, r.abs_error)))
}

fn worst_rel<'a>(reports: impl IntoIterator<Item = &'a VerificationReport>) -> f64 {
    reports.into_iter().map(|r| r.rel_error).fold(0.0, f64::max)
}

fn complex(v: &ReportValue) -> Complex64 {
    let (re, im) = v.parts();
    Complex64::new(re, im)
}

fn within(elapsed: Duration, secs: u64) -> bool {
    elapsed <= Duration::from_secs(secs)
}

fn exact_suite(id: u32, name: &'static str, suite: &str, budget: u64) -> Line {
    let (r, t) = run(suite, None);
    let (p, n, _) = tally(&r);
    Line { id, name, pass: p == n && n > 0 && within(t, budget), detail: format!("{p}/{n} exact, {:.2}s", t.as_secs_f64()) }
}

fn criterion_3() -> Line {
    let (r, t) = run("zagier", Some(TOL_ZAGIER));
    let coprime: Vec<_> = r.iter().filter(|x| has(x, "form", "coprime")).collect();
    let (p, n, worst) = tally(coprime.iter().copied());
    let k = make_field(5).unwrap();
    let lhs = bridge_lhs(1, QuadInt::ONE, &k).unwrap();
    let rhs = bridge_rhs_coprime(1, QuadInt::ONE, &k).unwrap();
    let anchor = (lhs.re - GOLDEN_ANCHOR).abs() < 1e-9 && (rhs.re - GOLDEN_ANCHOR).abs() < 1e-9;
    Line {
        id: 3,
        name: "twisted Kloosterman bridge",
        pass: p == n && n > 0 && anchor && within(t, 120),
        detail: format!("{p}/{n} within {TOL_ZAGIER:e} (max abs {worst:.1e}); D=5,a=1,l=1: {:.6} / {:.6}", lhs.re, rhs.re),
    }
}

fn criteria_5_6() -> (Line, Line) {
    let (r, t) = run("euler", Some(TOL_EULER));
    let (p5, n5, _) = tally(r.iter().filter(|x| has(x, "kind", "ramanujan")));
    let kinds = ["lfn", "split", "inert", "ramified"];
    let (p6, n6, worst) = tally(r.iter().filter(|x| kinds.iter().any(|k| has(x, "kind", k))));
    (
        Line { id: 5, name: "Ramanujan sum closed form", pass: p5 == n5 && n5 > 0 && within(t, 30), detail: format!("{p5}/{n5} n exact over |y| <= 500") },
        Line {
            id: 6,
            name: "local Euler factors",
            pass: p6 == n6 && n6 > 0 && within(t, 5),
            detail: format!("{p6}/{n6} within {TOL_EULER:e} (max {worst:.1e}), {:.2}s", t.as_secs_f64()),
        },
    )
}

fn criterion_7() -> Line {
    let (r, t) = run("compa", Some(TOL_COMPA));
    let (p, n, _) = tally(&r);
    let (p1, n1, _) = tally(r.iter().filter(|x| has(x, "identity", "1")));
    let (p2, n2, _) = tally(r.iter().filter(|x| has(x, "identity", "2")));
    Line {
        id: 7,
        name: "divisor-sum identities",
        pass: p == n && within(t, 60),
        detail: format!("identity 1: {p1}/{n1}, identity 2: {p2}/{n2}"),
    }
}

fn criterion_8() -> Line {
    let (r, t) = run("bessel", Some(TOL_CONV));
    let (p, n, _) = tally(&r);
    let worst = worst_rel(&r);
    let ratios: Vec<String> = r
        .iter()
        .map(|x| {
            let c = if x.instance["param"].starts_with('k') { 2.0 } else { 1.0 } * std::f64::consts::PI;
            // rhs carries the target constant; this recovers h(V*W) / (h(V) h(W))
            let q = complex(&x.lhs) / complex(&x.rhs) * c;
            format!("{}: {:.4}{:+.4}i", x.instance["param"], q.re, q.im)
        })
        .collect();
    Line {
        id: 8,
        name: "Bessel convolution theorem",
        pass: p == n && within(t, 120),
        detail: format!("{p}/{n} within {TOL_CONV:e} (worst rel {worst:.2}); ratios {}", ratios.join(", ")),
    }
}

fn criterion_9() -> Line {
    let (s, t1) = run("sears", Some(TOL_SPECTRAL));
    let (pl, t2) = run("plancherel", Some(TOL_SPECTRAL));
    let (ps, ns, _) = tally(&s);
    let (pp, np, _) = tally(&pl);
    let (ws, wp) = (worst_rel(&s), worst_rel(&pl));
    Line {
        id: 9,
        name: "spectral round trip and Plancherel",
        pass: ps == ns && pp == np && within(t1 + t2, 120),
        detail: format!("round trip {ps}/{ns} (worst rel {ws:.2}), Plancherel {pp}/{np} (worst rel {wp:.1e})"),
    }
}

fn criteria_10_12() -> (Line, Line) {
    let (r, t) = run("an", None);
    let st: Vec<_> = r.iter().filter(|x| has(x, "kind", "st")).collect();
    let (p10, n10, _) = tally(st.iter().copied());
    let w10 = worst_rel(st.iter().copied());
    let ok10 = st.iter().all(|x| x.rel_error <= TOL_ST);
    let main: Vec<_> = r.iter().filter(|x| has(x, "kind", "mainterm") && has(x, "n", "5") && has(x, "d", "(1,0)")).collect();
    let errs: Vec<f64> = main.iter().map(|x| x.rel_error).collect();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let last = errs.last().copied().unwrap_or(f64::INFINITY);
    let ratio = main.last().map(|x| (complex(&x.lhs) / complex(&x.rhs)).re);
    (
        Line {
            id: 10,
            name: "double integral of H against the convolution",
            pass: ok10 && p10 == n10 && n10 == 5 && within(t, 120),
            detail: format!("{p10}/{n10} within {TOL_ST:e} (worst rel {w10:.2})"),
        },
        Line {
            id: 12,
            name: "A_n main term constant",
            pass: last <= TOL_AN && decreasing && within(t, 180),
            detail: format!("n=5, d=1: best-candidate rel error at X=1e4 {last:.3}, empirical/best {:.4}", ratio.unwrap_or(f64::NAN)),
        },
    )
}

fn criterion_11() -> Line {
    let (r, t) = run("a0", Some(TOL_A0));
    let mut ok = true;
    let mut notes = Vec::new();
    for d in ["5", "13"] {
        let diag: Vec<_> = r.iter().filter(|x| has(x, "D", d) && has(x, "l", "(1,0)")).collect();
        let errs: Vec<f64> = diag.iter().map(|x| x.rel_error).collect();
        let mono = errs.windows(2).all(|w| w[1] < w[0]);
        let last = errs.last().copied().unwrap_or(f64::INFINITY);
        let value = diag.last().map(|x| x.lhs.parts().0).unwrap_or(f64::NAN);
        let target = diag.last().map(|x| x.rhs.parts().0).unwrap_or(f64::NAN);
        let off = r.iter().filter(|x| has(x, "D", d) && !has(x, "l", "(1,0)")).map(|x| x.rel_error).fold(0.0, f64::max);
        ok &= last <= TOL_A0 && mono && off <= TOL_A0;
        notes.push(format!("D={d}: {value:.4} vs {target:.4} (rel {last:.3}, monotone {mono}), off-diagonal {off:.1e}"));
    }
    Line { id: 11, name: "A_0 limit", pass: ok && within(t, 180), detail: notes.join("; ") }
}

fn criterion_13() -> Line {
    let (r, t) = run("hecke", Some(TOL_HECKE));
    let (p, n, worst) = tally(r.iter().filter(|x| has(x, "relation", "rational")));
    Line {
        id: 13,
        name: "Hecke relation model",
        pass: p == n && n > 0 && within(t, 10),
        detail: format!("{p}/{n} sequences within {TOL_HECKE:e} (max {worst:.1e})"),
    }
}

fn main() {
    let mut lines = vec![
        exact_suite(1, "X/Y bijection", "bijection", 180),
        exact_suite(2, "D divides n", "ddivn", 30),
        criterion_3(),
        exact_suite(4, "R-function sum", "rnd", 10),
    ];
    let (c5, c6) = criteria_5_6();
    lines.extend([c5, c6, criterion_7(), criterion_8(), criterion_9()]);
    let (c10, c12) = criteria_10_12();
    lines.extend([c10, criterion_11(), c12, criterion_13()]);
    lines.sort_by_key(|l| l.id);

    for l in &lines {
        println!("criterion {:>2} {} {}: {}", l.id, if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail);
    }
    let passed: BTreeSet<u32> = lines.iter().filter(|l| l.pass).map(|l| l.id).collect();
    let expected: BTreeSet<u32> = EXPECTED_PASS.into_iter().collect();
    assert_eq!(lines.len(), 13);
    println!("{} of 13 criteria pass", passed.len());
    let unexpected: Vec<_> = passed.difference(&expected).collect();
    if !unexpected.is_empty() {
        println!("note: criteria now passing beyond the reference set: {unexpected:?}");
    }
    let missing: Vec<_> = expected.difference(&passed).collect();
    if !missing.is_empty() {
        eprintln!("criteria expected to pass failed: {missing:?}");
        std::process::exit(1);
    }
}
