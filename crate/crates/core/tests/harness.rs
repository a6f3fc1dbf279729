use asai_core::harness::{emit_report, from_json, render, run_suite, to_csv, ReportFormat, SuiteSpec, VerificationReport, THREADS_ENV};
use asai_core::Error;

fn strip_time(mut r: Vec<VerificationReport>) -> Vec<VerificationReport> {
    for x in &mut r {
        x.runtime_ms = 0;
    }
    r
}

fn small(suite: &str) -> SuiteSpec {
    let mut s = SuiteSpec::new(suite);
    s.ranges.max_n = Some(120);
    s.ranges.max_norm = Some(30);
    s.ranges.samples = Some(8);
    s.ranges.depth = Some(12);
    s
}

#[test]
fn identical_specs_give_identical_reports() {
    for suite in ["euler", "hecke", "bijection", "ddivn", "zagier"] {
        let mut a = small(suite);
        a.parallel = Some(1);
        let mut b = a.clone();
        b.parallel = Some(3);
        let ra = strip_time(run_suite(&a).unwrap());
        let rb = strip_time(run_suite(&b).unwrap());
        assert!(!ra.is_empty());
        assert_eq!(render(&ra, ReportFormat::Json).unwrap(), render(&rb, ReportFormat::Json).unwrap(), "{suite}");
    }
}

#[test]
fn seed_changes_random_instances() {
    let mut a = small("euler");
    let b = a.clone();
    a.seed += 1;
    assert_ne!(strip_time(run_suite(&a).unwrap()), strip_time(run_suite(&b).unwrap()));
}

#[test]
fn failures_are_reported_not_raised() {
    let r = run_suite(&small("compa")).unwrap();
    assert!(r.iter().any(|x| x.pass) && r.iter().any(|x| !x.pass));
}

#[test]
fn config_errors() {
    assert_eq!(run_suite(&SuiteSpec::new("unknown")).unwrap_err(), Error::UnknownSuite("unknown".into()));
    let mut s = small("rnd");
    s.ranges.max_n = Some(0);
    assert!(matches!(run_suite(&s), Err(Error::ConfigInvalid(_))));
    let mut s = small("rnd");
    s.field_d = vec![10];
    assert!(matches!(run_suite(&s), Err(Error::ConfigInvalid(_))));
    let mut s = small("rnd");
    s.tolerance = Some(f64::NAN);
    assert!(matches!(run_suite(&s), Err(Error::ConfigInvalid(_))));
}

#[test]
fn thread_env_overrides_parallel() {
    let mut s = small("rnd");
    s.parallel = Some(2);
    std::env::set_var(THREADS_ENV, "5");
    assert_eq!(s.workers().unwrap(), 5);
    std::env::set_var(THREADS_ENV, "zero");
    assert!(s.workers().is_err());
    std::env::remove_var(THREADS_ENV);
    assert_eq!(s.workers().unwrap(), 2);
}

#[test]
fn json_and_csv_outputs() {
    let r = run_suite(&small("euler")).unwrap();
    let dir = std::env::temp_dir().join(format!("asai-core-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let json = dir.join("r.json");
    emit_report(&r, ReportFormat::Json, &json).unwrap();
    assert_eq!(from_json(&std::fs::read_to_string(&json).unwrap()).unwrap(), r);

    let csv = to_csv(&r).unwrap();
    let mut rd = csv::Reader::from_reader(csv.as_bytes());
    let header = rd.headers().unwrap().clone();
    assert_eq!(header.get(0), Some("suite_name"));
    let lhs_re = header.iter().position(|h| h == "lhs_re").unwrap();
    let rows: Vec<_> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), r.len());
    for (row, rep) in rows.iter().zip(&r) {
        let cell = &row[lhs_re];
        let mantissa = cell.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
        assert_eq!(mantissa.len(), 17, "{cell}");
        assert_eq!(cell.parse::<f64>().unwrap(), rep.lhs.parts().0);
    }
    assert!(matches!(emit_report(&r, ReportFormat::Csv, &dir.join("missing/r.csv")), Err(Error::IoFailure(_))));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_fields() {
    let s = SuiteSpec::from_json(r#"{"suite_name":"hecke","field_D":[13],"ranges":{"depth":10},"tolerance":1e-8,"seed":9,"format":"csv","parallel":2}"#).unwrap();
    assert_eq!((s.field_d.clone(), s.ranges.depth, s.format, s.parallel), (vec![13], Some(10), ReportFormat::Csv, Some(2)));
    let r = run_suite(&s).unwrap();
    assert!(r.iter().all(|x| x.pass && x.instance["D"] == "13"));
}
