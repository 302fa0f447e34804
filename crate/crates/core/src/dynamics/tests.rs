use super::*;
use crate::oscillator;
use crate::scalar::cis;

fn grid_1d(n: usize, hw: f64) -> Arc<Grid<f64>> {
    Arc::new(Grid::new_1d(n, hw).unwrap())
}

fn grid_2d(n: usize, hw: f64) -> Arc<Grid<f64>> {
    Arc::new(Grid::new_2d(n, hw).unwrap())
}

#[test]
fn stationary_state_only_acquires_a_phase() {
    let grid = grid_1d(128, 10.0);
    let spec = PotentialSpec::harmonic(Dim::One, 0.0);
    let psi = oscillator::state_1d(&grid, 0);
    let cfg = PropagationConfig::new(1e-3, 0.0);
    let traj = propagate_static(&psi, &spec, 2.0, &cfg, &[]).unwrap();
    let expected = psi.clone().scaled(cis(-0.5 * 2.0));
    let o = crate::grid::inner_product(&expected, &traj.final_state).unwrap();
    assert!((o.norm() - 1.0).abs() < 1e-8);
    assert!((o.re - 1.0).abs() < 1e-8, "{o}");
}

#[test]
fn norm_is_conserved_over_many_steps() {
    let grid = grid_1d(256, 12.0);
    let spec = PotentialSpec::one_d(13.4, 0.2, -7.0).unwrap();
    let sched = SweepSchedule::linear(-7.0, -5.0, 0.2, 1).unwrap();
    let psi = oscillator::state_1d(&grid, 0);
    let mut cfg = PropagationConfig::new(1e-3, 50.0);
    cfg.record_stride = 500;
    let traj = propagate(&psi, &spec, &sched, &cfg, &[]).unwrap();
    assert_eq!(traj.times.len(), 21);
    assert!(traj.max_norm_drift() < 1e-10, "{}", traj.max_norm_drift());
}

fn energy_excursion(traj: &Trajectory<f64>) -> f64 {
    let e0 = traj.energy[0];
    traj.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
}

#[test]
fn static_energy_is_conserved_for_a_stationary_condensate() {
    let grid = grid_1d(256, 12.0);
    let spec = PotentialSpec::one_d(6.4, 0.5, -2.0).unwrap();
    let st = imaginary_time_ground_state(&spec, 50.0, grid, &ImaginaryTimeOptions::default()).unwrap();
    let mut cfg = PropagationConfig::new(1e-3, 50.0);
    cfg.record_stride = 500;
    let traj = propagate_static(&st.state, &spec, 10.0, &cfg, &[]).unwrap();
    assert!(energy_excursion(&traj) < 1e-8, "{}", energy_excursion(&traj));
}

#[test]
fn energy_error_is_bounded_and_second_order() {
    let grid = grid_1d(256, 12.0);
    let spec = PotentialSpec::harmonic(Dim::One, 0.0);
    let shifted =
        WaveField::from_fn(grid.clone(), |x, _| C::new((-(x - 1.0) * (x - 1.0) / 2.0).exp(), 0.0)).normalized().unwrap();
    let mut errs = Vec::new();
    for dt in [2e-4, 1e-4] {
        // same duration for both so the sampled oscillation phase matches
        let mut cfg = PropagationConfig::new(dt, 0.0);
        cfg.record_stride = 250;
        let traj = propagate_static(&shifted, &spec, 1.0, &cfg, &[]).unwrap();
        errs.push(energy_excursion(&traj));
    }
    assert!(errs[1] < 1e-8, "{errs:?}");
    let ratio = errs[0] / errs[1];
    assert!((3.5..4.5).contains(&ratio), "{errs:?}");
}

#[test]
fn split_step_agrees_with_crank_nicolson() {
    let grid = grid_1d(256, 10.0);
    let spec = PotentialSpec::one_d(13.4, 0.2, -3.0).unwrap();
    let sched = SweepSchedule::linear(-3.0, -2.0, 1.0, 1).unwrap();
    let psi = oscillator::state_1d(&grid, 0);
    for g in [0.0, 5.0] {
        let mut cfg = PropagationConfig::new(2e-4, g);
        let a = propagate(&psi, &spec, &sched, &cfg, &[]).unwrap();
        cfg.method = Method::CrankNicolson(Laplacian::Spectral);
        let b = propagate(&psi, &spec, &sched, &cfg, &[]).unwrap();
        let f = a.final_state.fidelity(&b.final_state).unwrap();
        assert!(f > 1.0 - 1e-6, "g {g}: fidelity {f}");
    }
}

#[test]
fn finite_difference_oracle_converges_to_spectral() {
    let spec = PotentialSpec::one_d(13.4, 0.4, -3.0).unwrap();
    let sched = SweepSchedule::linear(-3.0, -2.5, 1.0, 1).unwrap();
    let mut losses = Vec::new();
    for n in [128, 512] {
        let grid = grid_1d(n, 8.0);
        let psi = oscillator::state_1d(&grid, 0);
        let mut cfg = PropagationConfig::new(1e-3, 0.0);
        let a = propagate(&psi, &spec, &sched, &cfg, &[]).unwrap();
        cfg.method = Method::CrankNicolson(Laplacian::FiniteDifference);
        let b = propagate(&psi, &spec, &sched, &cfg, &[]).unwrap();
        losses.push(1.0 - a.final_state.fidelity(&b.final_state).unwrap());
    }
    assert!(losses[1] < losses[0] / 8.0, "{losses:?}");
}

#[test]
fn pass_boundaries_are_recorded() {
    let grid = grid_1d(128, 10.0);
    let spec = PotentialSpec::one_d(13.4, 0.2, -7.0).unwrap();
    let sched = SweepSchedule::linear(-7.0, -6.0, 1.0, 3).unwrap();
    let psi = oscillator::state_1d(&grid, 0);
    let mut cfg = PropagationConfig::new(3e-3, 0.0);
    cfg.record_stride = 100;
    let traj = propagate_multi(&psi, &spec, &sched, &cfg, &[OverlapTarget::new("ground", psi.clone())]).unwrap();
    assert_eq!(traj.pass_ends.len(), 3);
    assert_eq!(traj.pass_states.len(), 3);
    for (p, &i) in traj.pass_ends.iter().enumerate() {
        assert!((traj.times[i] - (p + 1) as f64).abs() < 1e-12);
    }
    // 1/3e-3 is not an integer
    assert!(matches!(traj.warnings[0], PropagationWarning::StepAdjusted { .. }));
    assert!((traj.dt_used - 1.0 / 334.0).abs() < 1e-15);
    let last = traj.overlap_at_pass_end("ground", 2).unwrap();
    assert_eq!(last, traj.final_overlap("ground").unwrap());
    let mut csv = Vec::new();
    traj.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("t,norm,energy,ground\n"));
    assert_eq!(text.lines().count(), traj.times.len() + 1);
}

#[test]
fn bad_inputs_are_rejected() {
    let grid = grid_1d(64, 8.0);
    let spec = PotentialSpec::one_d(13.4, 0.2, -7.0).unwrap();
    let sched = SweepSchedule::linear(-7.0, -6.0, 1.0, 1).unwrap();
    let psi = oscillator::state_1d(&grid, 0);
    let cfg = PropagationConfig::new(0.0, 0.0);
    assert!(matches!(propagate(&psi, &spec, &sched, &cfg, &[]), Err(Error::Config(_))));
    let cfg = PropagationConfig::new(1e-3, 0.0);
    let half = psi.clone().scaled(C::new(0.5, 0.0));
    assert!(matches!(propagate(&half, &spec, &sched, &cfg, &[]), Err(Error::Domain(_))));
    let g2 = grid_2d(16, 4.0);
    let psi2 = oscillator::product_2d(&g2, 0, 0);
    assert!(propagate_2d_spiral(&psi, &spec, &sched, &cfg, &[]).is_err());
    let spec2 = PotentialSpec::two_d(25.0, 0.2, 0.6, -3.0).unwrap();
    // schedule without rotation for a rotating spec
    assert!(matches!(propagate(&psi2, &spec2, &sched, &cfg, &[]), Err(Error::Config(_))));
}

#[test]
fn huge_steps_blow_up_with_an_error() {
    let grid = grid_1d(64, 8.0);
    let spec = PotentialSpec::one_d(13.4, 0.2, -7.0).unwrap();
    let sched = SweepSchedule::linear(-7.0, -6.0, 0.1, 1).unwrap();
    let psi = oscillator::state_1d(&grid, 0);
    // attractive collapse with a step far too large: either the norm check or the
    // finiteness check must fire, or the warning must be raised
    let cfg = PropagationConfig::new(0.5, 0.0);
    let traj = propagate(&psi, &spec, &sched, &cfg, &[]).unwrap();
    assert!(traj.warnings.iter().any(|w| matches!(w, PropagationWarning::LargeStep { .. })));
}

#[test]
fn focusing_resonance_is_flagged_only_for_attractive_fine_grids() {
    let spec = PotentialSpec::one_d(13.4, 0.2, -7.0).unwrap();
    let sched = SweepSchedule::linear(-7.0, -6.99, 1.0, 1).unwrap();
    let flagged = |n: usize, g: f64| {
        let grid = grid_1d(n, 12.0);
        let psi = oscillator::state_1d(&grid, 0);
        let traj = propagate(&psi, &spec, &sched, &PropagationConfig::new(1e-3, g), &[]).unwrap();
        traj.warnings.iter().any(|w| matches!(w, PropagationWarning::FocusingResonance { .. }))
    };
    // k_max^2 dt / 2: 2.2 at 512 points, 9.0 at 1024
    assert!(!flagged(512, -5.0));
    assert!(flagged(1024, -5.0));
    assert!(!flagged(1024, 5.0));
}

#[test]
fn lab_and_rotating_frames_agree() {
    let grid = grid_2d(128, 8.0);
    let spec = PotentialSpec::two_d(25.0, 0.4, 0.6, -3.0).unwrap();
    let sched = SweepSchedule::new(-3.0, -1.5, 1.5, 1, 0.6).unwrap();
    let psi = oscillator::product_2d(&grid, 0, 0);
    let targets: Vec<_> = (0..3)
        .map(|l| OverlapTarget::new(format!("l{l}"), oscillator::vortex_2d(&grid, l)))
        .collect();
    let mut cfg = PropagationConfig::new(5e-4, 0.0);
    cfg.record_stride = 5000;
    let lab = propagate_2d_spiral(&psi, &spec, &sched, &cfg, &targets).unwrap();
    cfg.frame = Frame::Rotating;
    let rot = propagate_2d_spiral(&psi, &spec, &sched, &cfg, &targets).unwrap();
    for t in &targets {
        let a = lab.final_overlap(&t.name).unwrap();
        let b = rot.final_overlap(&t.name).unwrap();
        assert!((a - b).abs() < 1e-6, "{}: {a} vs {b}", t.name);
    }
    let la = lab.lz.as_ref().unwrap().last().unwrap();
    let lb = rot.lz.as_ref().unwrap().last().unwrap();
    assert!((la - lb).abs() < 1e-6, "{la} {lb}");
    assert!(*la > 0.01, "the dip should have stirred the cloud: {la}");
}

#[test]
fn imaginary_time_harmonic_ground_states() {
    let opts = ImaginaryTimeOptions::default();
    let g1 = grid_1d(128, 10.0);
    let st = imaginary_time_ground_state(&PotentialSpec::harmonic(Dim::One, 0.0), 0.0, g1.clone(), &opts).unwrap();
    assert!((st.mu - 0.5).abs() < 1e-8, "{}", st.mu);
    assert!(st.state.fidelity(&oscillator::state_1d(&g1, 0)).unwrap() > 1.0 - 1e-8);
    assert!(st.residual_norm < 1e-8);
    let g2 = grid_2d(32, 6.0);
    let st = imaginary_time_ground_state(&PotentialSpec::harmonic(Dim::Two, 0.0), 0.0, g2, &opts).unwrap();
    assert!((st.mu - 1.0).abs() < 1e-8, "{}", st.mu);
}

#[test]
fn imaginary_time_without_polish_reaches_the_split_fixed_point() {
    let opts = ImaginaryTimeOptions { polish: false, ..Default::default() };
    let g1 = grid_1d(128, 10.0);
    let st = imaginary_time_ground_state(&PotentialSpec::harmonic(Dim::One, 0.0), 0.0, g1, &opts).unwrap();
    assert!((st.mu - 0.5).abs() < 1e-8, "{}", st.mu);
}

#[test]
fn imaginary_time_gives_up_with_history() {
    let opts = ImaginaryTimeOptions { max_steps: 20, ..Default::default() };
    let g1 = grid_1d(64, 8.0);
    let err = imaginary_time_ground_state(&PotentialSpec::harmonic(Dim::One, 0.0), 30.0, g1, &opts).unwrap_err();
    match err {
        Error::ImaginaryTime { steps, tail } => {
            assert_eq!(steps, 20);
            assert_eq!(tail.len(), 2);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn thomas_fermi_and_crank_nicolson_oracles() {
    let g = 50.0;
    let spec = PotentialSpec::harmonic(Dim::One, 0.0);
    let st = imaginary_time_ground_state(&spec, g, grid_1d(256, 12.0), &ImaginaryTimeOptions::default()).unwrap();
    let tf = 0.5 * (1.5 * g).powf(2.0 / 3.0);
    assert!(((st.mu - tf) / tf).abs() < 0.05, "{} vs TF {tf}", st.mu);
    let (_, mu_cn) = crank_nicolson_ground_state(grid_1d(512, 12.0), &spec, g, 1e-3, 1e-13, 1_000_000).unwrap();
    assert!((st.mu - mu_cn).abs() < 1e-3, "{} vs CN {mu_cn}", st.mu);
    assert!(st.residual_norm < 1e-8);
}

#[test]
fn observables_of_simple_states() {
    let g2 = grid_2d(64, 8.0);
    let spec = PotentialSpec::harmonic(Dim::Two, 0.0);
    let o = observables(&oscillator::product_2d(&g2, 0, 0), &spec, 0.0).unwrap();
    assert!((o.energy - 1.0).abs() < 1e-10);
    assert!(o.lz.unwrap().abs() < 1e-10);
    let o = observables(&oscillator::vortex_2d(&g2, 1), &spec, 0.0).unwrap();
    assert!((o.lz.unwrap() - 1.0).abs() < 1e-8);
    let g1 = grid_1d(128, 10.0);
    let o = observables(&oscillator::state_1d(&g1, 0), &PotentialSpec::harmonic(Dim::One, 0.0), 2.0).unwrap();
    let quartic = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    assert!((o.energy - (0.5 + quartic)).abs() < 1e-10);
    assert!((o.chemical_potential - (0.5 + 2.0 * quartic)).abs() < 1e-10);
    assert!(o.lz.is_none());
}
