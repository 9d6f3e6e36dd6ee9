use fvmm::mesh::MeshMode;
use fvmm::scenario::{build_case, case_config, ScenarioFile};
use fvmm::solver::{Simulation, StepReport};

fn run(case: u32, mode: MeshMode, h: f64, steps: usize) -> (Simulation<f64>, Vec<StepReport>) {
    let (mesh, state, cfg) = build_case::<f64>(case, mode, h).unwrap();
    let mut sim = Simulation::new(cfg.problem.clone(), mesh, state);
    let mut reports = Vec::new();
    for _ in 0..steps {
        reports.extend(sim.step(cfg.dt).unwrap());
    }
    (sim, reports)
}

#[test]
fn case2_reduced_balances_mass_every_step() {
    let (sim, reports) = run(2, MeshMode::Reduced, 1.0 / 16.0, 5);
    assert_eq!(reports.len(), 5);
    for r in &reports {
        assert!(r.mass_defect < 1e-12, "{r:?}");
        assert!(r.dgcl < 1e-12, "{r:?}");
        assert!(r.injected > 0.0);
    }
    assert!(sim.state.bulk.saturation.iter().all(|s| (0.0..=1.0).contains(s)));
    // the fracture source fills the interface first
    let sg = sim.state.interface.saturation.iter().copied().fold(0.0, f64::max);
    let sb = sim.state.bulk.saturation.iter().copied().fold(0.0, f64::max);
    assert!(sg > sb, "{sg} {sb}");
}

#[test]
fn case2_full_balances_mass_every_step() {
    let (sim, reports) = run(2, MeshMode::Full, 1.0 / 16.0, 3);
    for r in &reports {
        assert!(r.mass_defect < 1e-12, "{r:?}");
    }
    assert_eq!(sim.mesh.num_interface(), 0);
}

#[test]
fn case1_full_keeps_the_constant_state() {
    let (sim, reports) = run(1, MeshMode::Full, 1.0 / 16.0, 5);
    let dev = sim.state.bulk.saturation.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-10, "{dev:e}");
    assert!(reports.iter().all(|r| r.mass_defect < 1e-12));
}

#[test]
fn case3_squeezes_the_aperture() {
    let (sim, _) = run(3, MeshMode::Reduced, 1.0 / 16.0, 4);
    let cfg = case_config::<f64>(3, MeshMode::Reduced, 1.0 / 16.0).unwrap();
    let s = cfg.problem.schedule.unwrap();
    let t = sim.state.time;
    assert!((t - 0.04).abs() < 1e-12);
    let d_max = sim.state.interface.aperture.iter().copied().fold(0.0, f64::max);
    assert!(d_max <= s.aperture_factor(t) * (1.0 + 1e-12));
    assert!(d_max > 0.9 * s.aperture_factor(t));
}

#[test]
fn single_precision_runs() {
    let (mesh, state, cfg) = build_case::<f32>(1, MeshMode::Reduced, 0.125).unwrap();
    let mut sim = Simulation::new(cfg.problem.clone(), mesh, state);
    sim.step(cfg.dt).unwrap();
    assert!(sim.state.bulk.saturation.iter().all(|s| (s - 1.0).abs() < 1e-4));
}

#[test]
fn scenario_file_drives_a_run() {
    let text = "case = 2\nmode = \"reduced\"\n[time]\nt_end = 0.02\n[mesh]\nh = 0.125\n";
    let cfg = ScenarioFile::parse(text).unwrap().to_config::<f64>(MeshMode::Full, 0.5).unwrap();
    assert_eq!(cfg.mode(), MeshMode::Reduced);
    assert_eq!(cfg.num_steps(), 100);
    let (mesh, state) = cfg.initialize().unwrap();
    let mut sim = Simulation::new(cfg.problem.clone(), mesh, state);
    let before = sim.mass();
    let r = sim.step(cfg.dt).unwrap();
    assert!(sim.mass() > before);
    assert!((r[0].mass_after - r[0].mass_before - r[0].injected + r[0].outflow).abs() < 1e-12);
}
