use harsweep::dataset::{generate_synthetic, SyntheticSpec};
use harsweep::ensemble::{EnsembleConfig, OnlineMode};
use harsweep::evaluation::{featurize_users, louo_split, train_fold};
use harsweep::profiling::{estimate_energy, timed_run, EnergySource, PowerLog, PowerModel, TimingBreakdown};
use harsweep::windowing::{classification_count, WindowConfig};

#[test]
fn phase_energy_example() {
    let model = PowerModel {
        sampling_watts: 1.0,
        feature_watts: 2.0,
        classification_watts: 4.0,
        idle_watts: 0.0,
    };
    let t = TimingBreakdown {
        sampling_ns: 2_000_000_000,
        feature_ns: 3_000_000_000,
        classification_ns: 1_000_000_000,
        wall_ns: 6_000_000_000,
        ..Default::default()
    };
    assert!((estimate_energy(&t, &EnergySource::Model(model)).unwrap() - 12.0).abs() < 1e-12);
}

#[test]
fn timed_runs_count_windows_and_integrate_power() {
    let mut spec = SyntheticSpec::new(4, 3, 3, 4000);
    spec.noise_sigma = 0.5;
    spec.segment_length = 700;
    let streams = generate_synthetic(&spec).unwrap();
    let fold = louo_split(&streams).unwrap().remove(1);
    let test = streams.iter().find(|s| s.user_id == fold.test_user).unwrap();
    for (w, o) in [(100, 0.0), (250, 0.5), (500, 0.9)] {
        let cfg = WindowConfig::new(w, o).unwrap();
        let model = train_fold(&fold, &featurize_users(&streams, &cfg, 0.8), &EnsembleConfig::default()).unwrap();
        let profile = timed_run(&model, test, &cfg, OnlineMode::SemiSupervised, 0.8, 5).unwrap();
        let expected = classification_count(test, &cfg, 0.8);
        assert_eq!(profile.repetitions.len(), 5);
        assert!(profile.repetitions.iter().all(|t| t.n_windows == expected));
        assert_eq!(profile.records.len(), expected);

        let first = profile.repetitions[0];
        let end = first.started_at + TimingBreakdown::seconds(first.wall_ns);
        let log = PowerLog::new(vec![(first.started_at - 1.0, 3.0), (end + 1.0, 3.0)]).unwrap();
        let joules = estimate_energy(&first, &EnergySource::Log(log)).unwrap();
        let expected = 3.0 * TimingBreakdown::seconds(first.wall_ns);
        assert!((joules - expected).abs() <= 0.01 * expected, "{joules} vs {expected}");
    }
}

#[test]
fn too_few_repetitions_rejected() {
    let streams = generate_synthetic(&SyntheticSpec::new(1, 2, 2, 1000)).unwrap();
    let cfg = WindowConfig::new(100, 0.0).unwrap();
    let fold = louo_split(&streams).unwrap().remove(0);
    let model = train_fold(&fold, &featurize_users(&streams, &cfg, 0.8), &EnsembleConfig::default()).unwrap();
    assert!(timed_run(&model, &streams[0], &cfg, OnlineMode::SupervisedFrozen, 0.8, 4).is_err());
}
