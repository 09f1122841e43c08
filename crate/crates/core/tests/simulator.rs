use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lieswarm::control::{
    check_theorem3_assumption, AuxVar, ControlSetting, Controller, LicConsensus, RicConsensus, SignCondition,
    UnderactuatedLic,
};
use lieswarm::groups::{Se2, Se3, So3};
use lieswarm::lie::{LieGroup, MANIFOLD_TOL};
use lieswarm::sim::scenario::{run, ControllerKind, InitConfig, RunOutput, ScenarioConfig};
use lieswarm::sim::{simulate, AuxScheme, IntegratorConfig, Outcome, SwarmState};
use lieswarm::{AlgebraVector, CommGraph, GroupKind};

fn start<G: LieGroup>(ctrl: &dyn Controller<G>, n: usize, seed: u64) -> SwarmState<G> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = (0..n).map(|_| G::random(&mut rng, 1.0)).collect();
    let aux = (0..n).map(|_| ctrl.initial_aux(&mut rng, 1.0)).collect();
    SwarmState::new(g, aux)
}

#[test]
fn spatial_velocity_matches_finite_differences() {
    let h = 1e-3;
    let cfg = IntegratorConfig {
        h,
        t_end: 0.5,
        record_every: 1,
        ..Default::default()
    };
    let traj = simulate(start::<Se3>(&LicConsensus, 3, 1), &LicConsensus, &CommGraph::complete(3), &cfg).unwrap();
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    for w in traj.samples.windows(2) {
        for k in 0..3 {
            let (a, b) = (w[0].g[k].homogeneous(), w[1].g[k].homogeneous());
            let fd = (b - a) / h * a.try_inverse().unwrap();
            let xr = w[0].g[k].adjoint(&w[0].xi[k]);
            let hat = (Se3::exp(&(xr * eps)).homogeneous() - Se3::exp(&(xr * -eps)).homogeneous()) / (2.0 * eps);
            worst = worst.max((fd - hat).norm());
        }
    }
    // first-order agreement: error shrinks with h
    assert!(worst < 20.0 * h, "worst {worst:e}");
}

#[test]
fn reprojection_keeps_constraints() {
    let cfg = IntegratorConfig {
        h: 1e-2,
        t_end: 50.0,
        record_every: 100,
        ..Default::default()
    };
    let mut state = start::<So3>(&RicConsensus, 4, 2);
    for a in state.aux.iter_mut() {
        *a = AuxVar::Algebra(a.algebra().unwrap().add_scaled(&AlgebraVector::from_slice(&[20.0, -13.0, 7.0]), 1.0));
    }
    let traj = simulate(state, &RicConsensus, &CommGraph::ring(4), &cfg).unwrap();
    for s in &traj.samples {
        for g in &s.g {
            assert!(g.manifold_error() < MANIFOLD_TOL);
        }
    }
}

#[test]
fn rk4_aux_scheme_converges_faster() {
    let graph = CommGraph::complete(4);
    let state = start::<So3>(&RicConsensus, 4, 3);
    let make = |h: f64, scheme| IntegratorConfig {
        h,
        t_end: 1.0,
        aux_scheme: scheme,
        record_every: 1_000_000,
        ..Default::default()
    };
    let reference = simulate(state.clone(), &RicConsensus, &graph, &make(1e-4, AuxScheme::Rk4)).unwrap();
    let err = |scheme| {
        let t = simulate(state.clone(), &RicConsensus, &graph, &make(0.05, scheme)).unwrap();
        (0..4)
            .map(|k| (t.last().xi[k] - reference.last().xi[k]).norm())
            .fold(0.0, f64::max)
    };
    let (euler, rk4) = (err(AuxScheme::Euler), err(AuxScheme::Rk4));
    assert!(rk4 < 1e-2 * euler, "euler {euler:e} rk4 {rk4:e}");
}

fn underactuated_events<G: LieGroup>(cs: ControlSetting, aux: Option<AlgebraVector>) -> usize {
    let ctrl = UnderactuatedLic { setting: cs };
    let mut state = start::<G>(&ctrl, 3, 5);
    if let Some(a) = aux {
        state.aux = vec![AuxVar::Algebra(a); 3];
    }
    let cfg = IntegratorConfig {
        h: 1e-3,
        t_end: 2.0,
        ..Default::default()
    };
    let traj = simulate(state, &ctrl, &CommGraph::complete(3), &cfg).unwrap();
    assert!(traj.outcome.is_completed());
    traj.events.iter().filter(|e| e.kind == "assumption-violated").map(|e| e.count).sum()
}

#[test]
fn sign_condition_violations_are_logged() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    // SO(3), drift about z, torques about x and y: the margin vanishes identically
    let cs = ControlSetting::new(
        AlgebraVector::from_slice(&[0.0, 0.0, 1.0]),
        vec![AlgebraVector::basis(3, 0), AlgebraVector::basis(3, 1)],
    )
    .unwrap();
    assert_eq!(check_theorem3_assumption::<So3, _>(&cs, &mut rng, 2000, 1.0, 1.0), SignCondition::Equality);
    assert_eq!(underactuated_events::<So3>(cs, None), 0);

    // SE(2) with a single coupled input is violated; starting every agent at the witness logs it
    let s = 0.5f64.sqrt();
    let cs = ControlSetting::new(AlgebraVector::zeros(3), vec![AlgebraVector::from_slice(&[s, 0.0, s])]).unwrap();
    let SignCondition::Violated { witness, value } = check_theorem3_assumption::<Se2, _>(&cs, &mut rng, 2000, 1.0, 1.0)
    else {
        panic!("expected a violation")
    };
    assert!(value > 0.0);
    assert!(underactuated_events::<Se2>(cs, Some(witness)) > 0);
}

#[test]
fn scenario_runs_are_bit_identical() {
    let mut cfg = ScenarioConfig::new(GroupKind::Se3, 4, ControllerKind::Se3SteeringHelical);
    cfg.seed = 42;
    cfg.integrator.t_end = 1.0;
    cfg.integrator.aux_scheme = AuxScheme::Transported;
    let (RunOutput::Se3(a), RunOutput::Se3(b)) = (run(&cfg).unwrap(), run(&cfg).unwrap()) else {
        panic!("wrong group")
    };
    assert_eq!(a.samples, b.samples);
    assert_eq!(a.metrics, b.metrics);
    cfg.seed = 43;
    let RunOutput::Se3(c) = run(&cfg).unwrap() else { panic!() };
    assert_ne!(a.samples[0].g, c.samples[0].g);
}

#[test]
fn tc_initialization_with_open_loop_stays_coordinated() {
    let mut cfg = ScenarioConfig::new(GroupKind::Se2, 5, ControllerKind::OpenLoop);
    cfg.init = InitConfig::Tc {
        xi: vec![1.0, 0.0, 0.5],
        tree: None,
        perturbation: 0.0,
        position_scale: 1.0,
        aux_scale: 1.0,
    };
    cfg.integrator.t_end = 5.0;
    let out = run(&cfg).unwrap();
    assert!(out.final_metrics().v_l < 1e-20);
    assert!(out.final_metrics().v_r == 0.0);
    let rep = out.check_coordination(lieswarm::analysis::CoordinationMode::Tc, 2.0, 1e-6).unwrap();
    assert!(rep.achieved);
}

#[test]
fn explicit_poses_must_be_valid() {
    let mut cfg = ScenarioConfig::new(GroupKind::Se2, 2, ControllerKind::Zero);
    cfg.init = InitConfig::Explicit {
        poses: vec![vec![0.0, 0.0, 0.0], vec![1.0, 2.0]],
        aux: None,
        aux_scale: 1.0,
    };
    let err = run(&cfg).unwrap_err().to_string();
    assert!(err.contains("init.poses[1]"), "{err}");
}

#[test]
fn blow_up_is_reported_not_raised() {
    // straight-line motion at 1e6 per unit time crosses the threshold near t = 1e4
    let mut cfg = ScenarioConfig::new(GroupKind::Se2, 1, ControllerKind::OpenLoop);
    cfg.init = InitConfig::Explicit {
        poses: vec![vec![0.0, 0.0, 0.0]],
        aux: Some(vec![vec![1e6, 0.0, 0.0]]),
        aux_scale: 1.0,
    };
    cfg.integrator.h = 1.0;
    cfg.integrator.t_end = 1e5;
    cfg.integrator.blowup = 1e10;
    let out = run(&cfg).unwrap();
    let Outcome::Aborted { t, .. } = out.outcome() else {
        panic!("expected an abort")
    };
    assert!((9_000.0..=11_000.0).contains(t), "aborted at {t}");
    assert!(out.samples() > 0);
}
