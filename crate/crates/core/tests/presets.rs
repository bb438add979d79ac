use std::path::PathBuf;

use mapelites::archive::ScheduleStep;
use mapelites::config::{load_config, Algorithm, ExperimentManifest, Loaded, RunConfig};
use mapelites::experiment::{execute, run_experiment};

fn preset(name: &str) -> Loaded {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("presets").join(name);
    load_config(&p).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn run(name: &str) -> RunConfig {
    match preset(name) {
        Loaded::Run(c) => *c,
        Loaded::Experiment(_) => panic!("{name} is a manifest"),
    }
}

fn manifest(name: &str) -> ExperimentManifest {
    match preset(name) {
        Loaded::Experiment(m) => m,
        Loaded::Run(_) => panic!("{name} is a run config"),
    }
}

#[test]
fn retina_preset_matches_published_parameters() {
    let c = run("retina.toml");
    assert_eq!(c.algorithm, Algorithm::MapElites);
    assert_eq!(c.init_batch, 20_000);
    assert_eq!(c.batch_size, 2_000);
    assert_eq!(c.iterations, 10_000);
    assert_eq!(c.starting_resolution, vec![16, 16]);
    let steps: Vec<(u64, usize)> = c.schedule.iter().map(|s| (s.iteration, s.resolution[0])).collect();
    assert_eq!(steps, [(0, 64), (1250, 128), (2500, 256), (5000, 512)]);
    assert!(c.schedule.iter().all(|s| s.resolution[0] == s.resolution[1]));
    assert_eq!(c.final_resolution(), vec![512, 512]);
    assert_eq!(c.budget, 20_000 + 10_000 * 2_000);
}

#[test]
fn retina_defaults_follow_the_same_program() {
    let c = RunConfig::from_toml_str("domain = \"retina\"\n").unwrap();
    assert_eq!((c.init_batch, c.batch_size, c.iterations), (20_000, 2_000, 10_000));
    assert_eq!(
        c.schedule,
        vec![
            ScheduleStep { iteration: 0, resolution: vec![64, 64] },
            ScheduleStep { iteration: 1250, resolution: vec![128, 128] },
            ScheduleStep { iteration: 2500, resolution: vec![256, 256] },
            ScheduleStep { iteration: 5000, resolution: vec![512, 512] },
        ]
    );
}

#[test]
fn arm_presets_match_published_budgets() {
    let me = run("arm.toml");
    assert_eq!((me.init_batch, me.batch_size, me.iterations), (120, 10, 30));
    assert_eq!(me.budget, 420);
    assert_eq!(me.final_resolution(), vec![64]);

    let grid = run("arm-grid.toml");
    assert_eq!(grid.algorithm, Algorithm::GridSearch);
    assert_eq!(execute(&grid).unwrap().summary.evaluations, 512);

    assert_eq!(run("arm-640.toml").iterations, 52);
    assert_eq!(execute(&run("arm-640.toml")).unwrap().summary.evaluations, 640);
    assert_eq!(execute(&run("arm-grid-729.toml")).unwrap().summary.evaluations, 729);
}

#[test]
fn scaled_retina_manifest_shape() {
    let m = manifest("retina-scaled.toml");
    let names: Vec<&str> = m.treatments.iter().map(|t| t.name.as_str()).collect();
    assert_eq!(names, ["map-elites", "random", "traditional-ea", "ns-lc"]);
    assert_eq!(m.run_count(), 40);
    for t in &m.treatments {
        assert_eq!(t.replicates, 10);
        assert_eq!(t.config.budget, 100_000, "{}", t.name);
        assert_eq!(t.config.final_resolution(), vec![64, 64], "{}", t.name);
    }
}

#[test]
fn arm_experiment_runs_end_to_end() {
    let m = manifest("arm-experiment.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&m, dir.path()).unwrap();
    assert_eq!(out.metrics.len(), 21);
    assert!(out.report.failed.is_empty());
    let me = out.report.treatment("map-elites").unwrap();
    let rnd = out.report.treatment("random").unwrap();
    // coverage is the last metric column
    assert!(me.medians[3].unwrap() >= rnd.medians[3].unwrap());
    assert!(dir.path().join("report.txt").is_file());
}

#[test]
fn synthetic_preset_runs() {
    let c = run("synthetic.toml");
    let r = execute(&c).unwrap();
    assert_eq!(r.summary.evaluations, c.budget);
    assert_eq!(r.summary.resolution, vec![20, 20]);
}
