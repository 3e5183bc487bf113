use std::fs;

use asep_lab::harness::{
    load_records, load_report, persist_report, run_experiment, run_resumable, run_trial, run_trial_traced,
    Aggregate, ExperimentKind, ExperimentSpec, Report, RunOptions, Summary, RECORDS_FILE,
};
use asep_lab::Event;

fn small(kind: ExperimentKind) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(kind);
    spec.n_trials = 60;
    spec.safety = 2.0;
    match kind {
        ExperimentKind::Speed | ExperimentKind::FitAlpha => {
            spec.p = 0.8;
            spec.l = 1;
            spec.t = 15.0;
        }
        ExperimentKind::CouplingAudit => {
            spec.l = 2;
            spec.t = 4.0;
        }
        ExperimentKind::Identity => {}
        ExperimentKind::Block => {
            spec.t = 30.0;
            spec.t_grid = vec![10.0, 20.0];
        }
    }
    spec
}

fn opts(workers: usize, chunk: usize) -> RunOptions {
    RunOptions { workers, chunk }
}

fn assert_same(a: &Report, b: &Report) {
    assert_eq!(a.spec, b.spec);
    assert_eq!(a.summary, b.summary);
    assert_eq!(a.records.len(), b.records.len());
    for (x, y) in a.records.iter().zip(&b.records) {
        assert!(x.same_result(y), "{x:?} vs {y:?}");
    }
}

#[test]
fn reports_do_not_depend_on_scheduling() {
    for kind in ExperimentKind::ALL {
        let spec = small(kind);
        let a = run_experiment(&spec, opts(1, 1024)).unwrap();
        let b = run_experiment(&spec, opts(3, 7)).unwrap();
        assert_same(&a, &b);
    }
}

#[test]
fn traces_are_bit_identical() {
    for kind in [ExperimentKind::Speed, ExperimentKind::CouplingAudit, ExperimentKind::Block] {
        let spec = small(kind);
        let trace = || {
            let mut evs: Vec<Event> = Vec::new();
            run_trial_traced(&spec, 7, &mut |e| evs.push(*e)).unwrap();
            evs.iter()
                .map(|e| (e.time.to_bits(), e.site, e.direction, e.accepted))
                .collect::<Vec<_>>()
        };
        let first = trace();
        assert!(!first.is_empty());
        assert_eq!(first, trace());
    }
}

#[test]
fn speed_records_are_exact() {
    let spec = small(ExperimentKind::Speed);
    for i in 0..10 {
        let rec = run_trial(&spec, i).unwrap();
        let json = serde_json::to_value(&rec).unwrap();
        let position = json["position"].as_i64().unwrap();
        assert_eq!(json["speed"].as_f64().unwrap() * spec.t, position as f64);
    }
}

#[test]
fn aggregation_is_order_free() {
    let spec = small(ExperimentKind::Block);
    let report = run_experiment(&spec, RunOptions::default()).unwrap();
    let aggs: Vec<Aggregate> = report.records.iter().map(Aggregate::from_record).collect();
    let forward = aggs.iter().cloned().try_fold(Aggregate::default(), Aggregate::merge).unwrap();
    let backward = aggs.iter().rev().cloned().try_fold(Aggregate::default(), Aggregate::merge).unwrap();
    let (left, right) = aggs.split_at(17);
    let fold = |xs: &[Aggregate]| xs.iter().cloned().try_fold(Aggregate::default(), Aggregate::merge).unwrap();
    let grouped = fold(right).merge(fold(left)).unwrap();
    assert_eq!(forward, backward);
    assert_eq!(forward, grouped);
    assert_eq!(forward.summarize(&spec).unwrap(), report.summary);
}

#[test]
fn persisted_reports_round_trip() {
    for kind in ExperimentKind::ALL {
        let dir = tempfile::tempdir().unwrap();
        let spec = small(kind);
        let report = run_experiment(&spec, RunOptions::default()).unwrap();
        persist_report(&report, dir.path()).unwrap();
        let back = load_report(dir.path()).unwrap();
        assert_eq!(back.summary, report.summary);
        assert_eq!(back.records, report.records);

        let conf = fs::read_to_string(dir.path().join("spec.conf")).unwrap();
        let again = run_experiment(&ExperimentSpec::from_config(kind, &conf).unwrap(), RunOptions::default()).unwrap();
        assert_same(&report, &again);

        let plot = dir.path().join("curve.csv");
        if matches!(kind, ExperimentKind::Speed | ExperimentKind::FitAlpha) {
            let text = fs::read_to_string(&plot).unwrap();
            let header = text.lines().next().unwrap();
            let cols = if kind == ExperimentKind::FitAlpha { 4 } else { 3 };
            assert_eq!(header.split(',').count(), cols, "{header}");
            let mut prev = vec![-1.0; cols];
            prev[0] = f64::NEG_INFINITY;
            for line in text.lines().skip(1) {
                let row: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
                assert!(row[0] > prev[0]);
                for c in 1..cols {
                    assert!((0.0..=1.0).contains(&row[c]) && row[c] >= prev[c]);
                }
                prev = row;
            }
        } else {
            assert!(!plot.exists());
        }
    }
}

#[test]
fn tampered_summary_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&small(ExperimentKind::Identity), RunOptions::default()).unwrap();
    persist_report(&report, dir.path()).unwrap();
    let records = dir.path().join(RECORDS_FILE);
    let text = fs::read_to_string(&records).unwrap();
    let flipped = text.replacen("\"single_hit\":false", "\"single_hit\":true", 1);
    assert_ne!(flipped, text);
    fs::write(&records, flipped).unwrap();
    assert!(load_report(dir.path()).is_err());
}

#[test]
fn interrupted_runs_resume() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small(ExperimentKind::Speed);
    let full = run_experiment(&spec, RunOptions::default()).unwrap();

    // Simulate an interruption: a prefix of records plus half a line.
    run_resumable(&spec, dir.path(), opts(2, 16)).unwrap();
    let path = dir.path().join(RECORDS_FILE);
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let mut cut: String = lines[..25].iter().map(|l| format!("{l}\n")).collect();
    cut.push_str(&lines[25][..lines[25].len() / 2]);
    fs::write(&path, cut).unwrap();
    assert!(load_records(&path).is_err());

    let resumed = run_resumable(&spec, dir.path(), opts(1, 8)).unwrap();
    assert_same(&full, &resumed);
    assert_eq!(load_records(&path).unwrap().len(), 60);
    for (kept, fresh) in resumed.records[..25].iter().zip(&lines[..25]) {
        assert_eq!(serde_json::to_string(kept).unwrap(), *fresh);
    }

    let mut other = spec.clone();
    other.master_seed += 1;
    assert!(run_resumable(&other, dir.path(), RunOptions::default()).is_err());
}

#[test]
fn trivial_cases() {
    let mut spec = small(ExperimentKind::CouplingAudit);
    spec.t = 0.0;
    let r = run_experiment(&spec, RunOptions::default()).unwrap();
    let Summary::CouplingAudit(s) = &r.summary else { panic!() };
    assert_eq!((s.events_checked, s.identity_violations, s.projection_violations), (0, 0, 0));
    assert!(r.passed());

    let mut spec = small(ExperimentKind::Identity);
    spec.t = 0.0;
    spec.sites = vec![-3, -2];
    spec.colors = vec![1];
    spec.shift = -1;
    let Summary::Identity(s) = run_experiment(&spec, RunOptions::default()).unwrap().summary else { panic!() };
    assert_eq!((s.p_single, s.p_colored), (1.0, 1.0));
    spec.shift = 0;
    let Summary::Identity(s) = run_experiment(&spec, RunOptions::default()).unwrap().summary else { panic!() };
    assert_eq!((s.p_single, s.p_colored), (0.0, 0.0));
}
