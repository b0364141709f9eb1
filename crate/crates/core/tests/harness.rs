use std::process::Command;

use qsd_entropy::coherence::{ix, CoherenceState, StatePreset, N};
use qsd_entropy::harness::{
    asymptotic_rate, classify_collapse, conditional_mean, emit_run, final_state_histogram, petal_point, run_case,
    run_ensemble, run_ensemble_with_threads, sz_plane_point, trajectory_scatter, Case, CaseConfig, CollapseTolerances,
    EnsembleStats, HarnessError, InvariantReport, Manifest, Obs, Outcome, Purify, Quantity, RateWindow, TrajectoryRecord,
    HIST_BINS,
};

fn record(states: Vec<[f64; N]>, entropy: Vec<f64>, outcome: Outcome) -> TrajectoryRecord {
    TrajectoryRecord {
        index: 0,
        states,
        entropy,
        excluded: None,
        outcome,
        first_vanish: None,
        invariants: InvariantReport {
            positivity_failures: 0,
            min_eigenvalue: 0.0,
            max_trace_error: 0.0,
            max_hermitian_error: 0.0,
            max_singlet_constraint: None,
            max_s2_deviation: None,
            max_geometry_violation: 0.0,
        },
    }
}

fn small(case: Case) -> CaseConfig {
    CaseConfig::new(case).with_trajectories(6).with_duration(0.3).with_seed(42)
}

#[test]
fn linear_series_rate() {
    let times: Vec<f64> = (0..=600).map(|j| j as f64 * 0.01).collect();
    let series: Vec<f64> = times.iter().map(|t| 8.0 * t + 1.5).collect();
    let fit = asymptotic_rate(&times, &series, &RateWindow::default()).unwrap();
    assert!((fit.slope - 8.0).abs() < 1e-12);
    assert!((fit.t_start - 4.5).abs() < 1e-12);
    let short = asymptotic_rate(&times[..20], &series[..20], &RateWindow::default());
    assert!(matches!(short, Err(HarnessError::WindowTooShort(5))));
}

#[test]
fn classification_examples() {
    let tol = CollapseTolerances::default();
    let sz_targets = [Outcome::ZupZup, Outcome::ZdownZdown, Outcome::MixedStationary];
    assert_eq!(classify_collapse(&StatePreset::TripletSzPlus.coherence(), &sz_targets, &tol), Outcome::ZupZup);

    // Slightly depolarized stationary state: purity ≈ 0.49.
    let mut s = Outcome::MixedStationary.target().unwrap().s;
    for x in s.iter_mut() {
        *x *= 0.98;
    }
    let st = CoherenceState::new(s);
    assert!((qsd_entropy::coherence::purity(&st) - 0.5).abs() < 0.011);
    assert_eq!(classify_collapse(&st, &sz_targets, &tol), Outcome::MixedStationary);

    let t = [Outcome::ZupZup, Outcome::ZdownZdown, Outcome::TripletZero];
    assert_eq!(classify_collapse(&StatePreset::CaseBSuperposition.coherence(), &t, &tol), Outcome::Unresolved);
}

#[test]
fn conditional_mean_of_one_record_is_its_series() {
    let r = record(vec![[0.0; N]; 3], vec![0.0, 1.0, 2.5], Outcome::ZupZup);
    let m = conditional_mean(std::slice::from_ref(&r), Outcome::ZupZup, Quantity::Entropy, None).unwrap();
    assert_eq!(m, vec![0.0, 1.0, 2.5]);
    let none = conditional_mean(&[r], Outcome::ZdownZdown, Quantity::Entropy, None);
    assert!(matches!(none, Err(HarnessError::EmptySelection)));
}

#[test]
fn collapsed_records_fill_one_histogram_bin() {
    let up = StatePreset::TripletSzPlus.coherence().s;
    let records: Vec<TrajectoryRecord> = (0..7).map(|_| record(vec![up], vec![0.0], Outcome::ZupZup)).collect();
    let h = final_state_histogram(&records, Obs::S12);
    let density = h.density();
    assert_eq!(density.len(), HIST_BINS);
    assert_eq!(density.iter().filter(|d| **d > 0.0).count(), 1);
    assert!((density[HIST_BINS - 1] * h.width() - 1.0).abs() < 1e-12);
}

#[test]
fn scatter_starting_points() {
    let singlet = StatePreset::Singlet.coherence().s;
    assert_eq!(petal_point(&singlet), (0.0, 0.0));
    let r = record(vec![singlet], vec![0.0], Outcome::Unresolved);
    assert_eq!(trajectory_scatter(&[r], Obs::Sx2, Obs::Sz1), vec![(0.0, 0.0)]);

    let xs = [(StatePreset::SxPlusPlus, 1.0), (StatePreset::SxMinusMinus, -1.0), (StatePreset::SxTripletZero, 0.0)];
    for (p, x) in xs {
        let (sx, sz) = sz_plane_point(&p.coherence().s);
        assert!((sx - x).abs() < 1e-12 && sz.abs() < 1e-12, "{p:?}");
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    assert!(run_ensemble(&small(Case::CaseA).with_trajectories(0)).is_err());
    assert!(run_ensemble(&small(Case::CaseA).with_purify(Some(Purify::S2))).is_err());
    let mut cfg = small(Case::Case1);
    cfg.dt = -1.0;
    assert!(matches!(run_ensemble(&cfg), Err(HarnessError::InvalidConfig(_))));
    cfg = small(Case::Case1);
    cfg.a1 = f64::NAN;
    assert!(run_ensemble(&cfg).is_err());
}

#[test]
fn ensembles_do_not_depend_on_thread_count() {
    for case in [Case::Case1, Case::Case2, Case::CaseC] {
        let cfg = small(case);
        let one = run_ensemble_with_threads(&cfg, 1).unwrap();
        let three = run_ensemble_with_threads(&cfg, 3).unwrap();
        assert_eq!(one, three, "{case:?}");
    }
}

#[test]
fn emitted_files_are_reproducible() {
    let cfg = small(Case::CaseA);
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (d, threads) in dirs.iter().zip([1, 2]) {
        let ens = run_ensemble_with_threads(&cfg, threads).unwrap();
        let stats = EnsembleStats::from_ensemble(&ens);
        let m = emit_run(d.path(), &ens, &stats).unwrap();
        assert!(m.complete);
        assert_eq!(Manifest::read(d.path()).unwrap(), m);
    }
    let manifest = Manifest::read(dirs[0].path()).unwrap();
    assert!(manifest.files.contains(&"mean_entropy.csv".to_string()));
    for name in manifest.files.iter().map(String::as_str).chain(["manifest.json"]) {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let text = std::fs::read_to_string(dirs[0].path().join("mean_entropy.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,mean,stderr,n"));
    assert_eq!(lines.next().unwrap().split(',').next(), Some("0.0000000000000000e0"));
}

#[test]
fn dynamical_choice_does_not_touch_states() {
    let base = small(Case::CaseE).with_trajectories(4).with_duration(1.0);
    let a = run_ensemble(&base).unwrap();
    let b = run_ensemble(&base.clone().with_dynamical(vec![ix::S12])).unwrap();
    for (x, y) in a.records.iter().zip(&b.records) {
        assert_eq!(x.states, y.states);
        assert_ne!(x.entropy, y.entropy);
    }
}

#[test]
fn purifying_runs_track_states_only() {
    let cfg = small(Case::CaseD).with_purify(Some(Purify::Sz2));
    let (ens, stats) = run_case(&cfg).unwrap();
    assert!(ens.entropy_unavailable.is_some());
    assert!(stats.mean_entropy.is_none());
    assert!(ens.records.iter().all(|r| r.entropy.is_empty()));
}

#[test]
fn singlet_constraint_and_triplet_sector_are_tracked() {
    let (_, stats) = run_case(&small(Case::Case1)).unwrap();
    assert!(stats.invariants.max_singlet_constraint.unwrap() < 5e-3);
    let (_, stats) = run_case(&small(Case::CaseA)).unwrap();
    assert!(stats.invariants.max_s2_deviation.unwrap() < 5e-3);
    assert!(stats.invariants.max_trace_error < 1e-14);
    assert_eq!(stats.invariants.max_hermitian_error, 0.0);
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qsd-entropy"))
}

#[test]
fn cli_rejects_bad_input() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_str().unwrap();
    for args in [
        vec!["run", "caseZ"],
        vec!["run", "caseA", "--purify", "s2"],
        vec!["run", "caseD", "--purify", "x"],
        vec!["run", "caseA", "--ntraj", "0"],
        vec!["run", "caseA", "--dt=-1"],
        vec!["run", "caseE", "--dyn", "s4"],
    ] {
        let out = cli().args(&args).args(["--out", dir]).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
    assert!(!cli().args(["report", dir]).output().unwrap().status.success());
}

#[test]
fn cli_runs_and_reports() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_str().unwrap();
    let status = cli()
        .args(["run", "caseA", "--ntraj", "3", "--duration", "0.2", "--a", "0.5", "--a", "1", "--threads", "1"])
        .args(["--out", dir])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let base = out.path().join("caseA");
    assert!(base.join("mean_entropy_by_strength.csv").is_file());
    let m = Manifest::read(&base.join("a_0.5")).unwrap();
    assert!(m.complete);
    assert_eq!(m.config.a1, 0.5);

    let status = cli()
        .args(["run", "caseE", "--ntraj", "2", "--duration", "0.2", "--dyn", "s12"])
        .env("QSD_OUT_DIR", dir)
        .output()
        .unwrap();
    assert!(status.status.success());
    let m = Manifest::read(&out.path().join("caseE")).unwrap();
    assert_eq!(m.config.dynamical, vec![ix::S12]);
    assert!(cli().args(["report", dir]).output().unwrap().status.success());
}
