use learnsim_core::experiments::write_outputs;
use learnsim_core::experiments::{
    execute_run, run_experiment_with_jobs, ExperimentId, ExperimentSpec, Scenario, Sweep,
};
use learnsim_core::{Error, SimConfig};

fn small(id: ExperimentId, n_agents: usize, days: u32, runs: usize) -> ExperimentSpec {
    let base = SimConfig { n_agents, ..SimConfig::default() };
    let mut spec = ExperimentSpec::preset(id, &base);
    spec.base.horizon_days = days;
    spec.n_runs = runs;
    spec
}

#[test]
fn thread_count_does_not_change_results() {
    let spec = small(ExperimentId::E3ContactRate, 150, 10, 3);
    let a = run_experiment_with_jobs(&spec, 1).unwrap();
    let b = run_experiment_with_jobs(&spec, 2).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    for p in &a.points {
        assert_eq!(p.n_runs, 3);
    }
}

#[test]
fn run_seeds_follow_base_seed() {
    let spec = small(ExperimentId::E3ContactRate, 100, 5, 2);
    let r = run_experiment_with_jobs(&spec, 1).unwrap();
    let point = &spec.points().unwrap()[0];
    let direct: Vec<f64> = (0..2)
        .map(|i| {
            let cfg = SimConfig { seed: spec.base_seed + i, ..point.config.clone() };
            *execute_run(&cfg, point.scenario, 0).unwrap().ever_experienced.last().unwrap()
        })
        .collect();
    let s = r.points[0].scalar("final_ever_experienced").unwrap();
    assert!((s.mean - (direct[0] + direct[1]) / 2.0).abs() < 1e-12);
}

#[test]
fn per_run_means_average_to_the_pooled_mean() {
    let spec = small(ExperimentId::E2ExperienceEffect, 80, 3, 3);
    let r = run_experiment_with_jobs(&spec, 1).unwrap();
    let point = &spec.points().unwrap()[1];
    let mut pooled = Vec::new();
    for i in 0..3 {
        let cfg = SimConfig { seed: spec.base_seed + i, ..point.config.clone() };
        pooled.extend(execute_run(&cfg, point.scenario, 0).unwrap().daily_energy_kwh);
    }
    let pooled_mean = pooled.iter().sum::<f64>() / pooled.len() as f64;
    let s = r.points[1].scalar("mean_daily_energy_kwh").unwrap();
    assert!((s.mean - pooled_mean).abs() < 1e-9 * pooled_mean);
    let series = r.points[1].series("daily_energy_kwh").unwrap();
    let series_mean = series.mean.iter().sum::<f64>() / series.mean.len() as f64;
    assert!((series_mean - pooled_mean).abs() < 1e-9 * pooled_mean);
    assert_eq!(r.reductions.len(), 3);
    assert_eq!(r.points[0].label, "baseline");
}

#[test]
fn discontinuers_are_a_subset_of_the_experienced() {
    let spec = small(ExperimentId::E4Discontinuance, 200, 20, 2);
    let points = spec.points().unwrap();
    for i in 0..2 {
        let cfg = SimConfig { seed: spec.base_seed + i, ..points[0].config.clone() };
        let rec = execute_run(&cfg, points[0].scenario, 0).unwrap();
        for a in rec.final_agents.as_ref().unwrap() {
            assert!(!a.discontinued || a.is_experienced());
        }
    }
    let r = run_experiment_with_jobs(&spec, 1).unwrap();
    let d = r.discontinuance.unwrap();
    assert_eq!(d.continuers.agents + d.discontinuers.agents, d.experienced_agents);
    assert!(d.experienced_agents >= 2 * 160);
}

#[test]
fn outputs_have_one_file_per_point_and_kpi() {
    let spec = small(ExperimentId::E3ContactRate, 60, 4, 1);
    let r = run_experiment_with_jobs(&spec, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = write_outputs(&r, dir.path()).unwrap();
    for rate in ["0.5", "0.3", "0.1"] {
        let p = dir.path().join(format!("e3_contact_rate-{rate}_ever_experienced.csv"));
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with(&format!("day,contact_rate={rate} mean,contact_rate={rate} std\n")));
        assert_eq!(text.lines().count(), 1 + 4);
    }
    assert!(files.last().unwrap().ends_with("e3_summary.json"));
}

#[test]
fn invalid_specs_are_rejected() {
    let mut spec = small(ExperimentId::Custom, 10, 2, 0);
    spec.sweep = Some(Sweep { key: "contact_rate".into(), values: vec![0.2, 0.2] });
    spec.scenario = Scenario::Experienced { fraction: 1.5, uplift: 0.0 };
    let Err(Error::InvalidConfig(v)) = spec.validate() else {
        panic!("expected violations");
    };
    let paths: Vec<_> = v.iter().map(|x| x.path.as_str()).collect();
    for p in ["n_runs", "sweep.values", "scenario.fraction"] {
        assert!(paths.contains(&p), "{paths:?}");
    }
    let bad_key: Result<Sweep, _> = "nonsense=1,2".parse::<Sweep>();
    let spec = ExperimentSpec { sweep: bad_key.ok(), n_runs: 1, ..small(ExperimentId::Custom, 10, 2, 1) };
    assert!(spec.sweep.is_none() || spec.validate().is_err());
}
