use std::path::Path;

use electro_coord::config::Scaling;
use electro_coord::metrics::{contraction_diagnostics, run_metrics};
use electro_coord::scenarios::{
    export_representative_days, load_scenario, representative_days, write_wind_csv, SyntheticWind,
};
use electro_coord::sim::{self, audit};
use electro_coord::{load_config, SimConfig};

fn configs() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_configs_match_reference() {
    for (file, n) in [("four_units.json", 4), ("ten_units.json", 10)] {
        let mut cfg = load_config(configs().join(file)).unwrap();
        cfg.rng_seed = 0;
        assert_eq!(cfg, SimConfig::reference(n), "{file}");
    }
}

#[test]
fn file_pipeline_matches_in_memory() {
    let dir = tempfile::tempdir().unwrap();
    let year = SyntheticWind {
        days: 12,
        seed: 9,
        ..SyntheticWind::default()
    }
    .generate();
    let wind_path = dir.path().join("year.csv");
    write_wind_csv(&year, &wind_path).unwrap();
    let set = representative_days(&year, 4, 2, 1).unwrap();
    export_representative_days(&set, dir.path().join("reps")).unwrap();

    let config = SimConfig::reference(4);
    let from_files = load_scenario(dir.path().join("reps"), Some(3), &config).unwrap();
    let direct = electro_coord::scenarios::representative_scenario(&set, 3, &config).unwrap();
    assert_eq!(from_files.profile.samples, direct.profile.samples);
    assert!(from_files.profile.peak() <= config.cluster_rating() * (1.0 + 1e-12));

    for day in [0, 3] {
        let wind = load_scenario(dir.path().join("reps"), Some(day), &config).unwrap().profile;
        let trace = sim::run(&config, &wind).unwrap();
        let a = audit(&trace).unwrap();
        assert_eq!(a.hto_violations, 0);
        assert_eq!(a.replay_mismatches, 0);
        assert!(a.box_excess <= 1e-12);
        assert!(a.one_step_excess <= 1e-12);
        let m = run_metrics(&trace);
        assert_eq!(m.hto_violations, 0);
        assert!(m.energy_utilization > 0.0 && m.energy_utilization <= 1.0);
        let d = contraction_diagnostics(&trace);
        if day == 0 {
            assert!(d.samples > 0 && d.bound_holds(), "{d:?}");
        } else {
            // The calmest representative is almost entirely relaxed.
            assert!(m.relaxed_step_count > 80_000);
            assert_eq!(d.samples, 0);
        }
    }

    // A calendar day straight from the year file, scaled to a fixed peak.
    let mut peak_cfg = config.clone();
    peak_cfg.wind_source.scaling = Scaling::Peak { peak_w: 2000.0 };
    let sc = load_scenario(&wind_path, Some(0), &peak_cfg).unwrap();
    assert_eq!(sc.profile.len(), 86_400);
    assert!(sc.profile.peak() <= 2000.0 * (1.0 + 1e-12));
}

#[test]
fn trace_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = SimConfig::reference(3);
    config.horizon_steps = 500;
    let wind: Vec<f64> = (0..500).map(|k| 1500.0 + 400.0 * (k as f64 / 40.0).sin()).collect();
    let trace = sim::run_samples(&config, &wind, "sine").unwrap();
    let csv = dir.path().join("t.csv");
    let json = dir.path().join("t.json");
    sim::write_trace_csv(&trace, &csv).unwrap();
    sim::write_trace_json(&trace, &json).unwrap();
    assert_eq!(sim::read_trace_csv(&csv).unwrap(), trace.steps);
    assert_eq!(sim::read_trace_json(&json).unwrap(), trace);
}
