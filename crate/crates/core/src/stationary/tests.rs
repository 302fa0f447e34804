use std::sync::Arc;

use super::*;
use crate::oscillator;
use crate::spectrum::{lowest_eigenpairs, EigenOptions, LinearOperatorSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid_1d(n: usize, hw: f64) -> Arc<Grid<f64>> {
    Arc::new(Grid::new_1d(n, hw).unwrap())
}

#[test]
fn exact_eigenstate_has_zero_residual() {
    let grid = grid_1d(128, 10.0);
    let spec = PotentialSpec::harmonic(crate::Dim::One, 0.0);
    for k in 0..4 {
        let psi = oscillator::state_1d(&grid, k);
        let r = residual(&psi, &spec, 0.0).unwrap();
        assert!(r.residual_norm < 1e-10, "{k}: {}", r.residual_norm);
        assert!((r.mu_tilde - (k as f64 + 0.5)).abs() < 1e-10);
    }
}

#[test]
fn harmonic_ground_state_is_not_a_solution_at_g50() {
    let grid = grid_1d(256, 12.0);
    let spec = PotentialSpec::harmonic(crate::Dim::One, 0.0);
    let psi = oscillator::state_1d(&grid, 0);
    let r = residual(&psi, &spec, 50.0).unwrap();
    // 1/2 + g int phi0^4 dx
    let exact = 0.5 + 50.0 / (2.0 * std::f64::consts::PI).sqrt();
    assert!(r.residual_norm > 0.1);
    assert!((r.mu_tilde - exact).abs() < 1e-10, "{}", r.mu_tilde);
}

fn random_field(grid: &Arc<Grid<f64>>, seed: u64) -> WaveField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    WaveField::from_fn(grid.clone(), |x, _| {
        let env = (-x * x / 4.0).exp();
        C::new(env * rng.gen_range(-1.0..1.0), env * rng.gen_range(-1.0..1.0))
    })
    .normalized()
    .unwrap()
}

#[test]
fn gradient_matches_finite_differences() {
    let grid = grid_1d(64, 6.0);
    let spec = PotentialSpec::one_d(13.4, 0.6, -2.0).unwrap();
    for seed in 0..3 {
        let psi = random_field(&grid, seed);
        let dir = random_field(&grid, 100 + seed);
        let g = 7.0;
        let grad = residual_gradient(&psi, &spec, g).unwrap();
        let analytic = crate::grid::raw_inner_product(grad.amplitudes(), dir.amplitudes()).re * grid.cell_volume();
        let h = 1e-5;
        let shifted = |s: f64| {
            let amps = psi.amplitudes().iter().zip(dir.amplitudes()).map(|(a, d)| *a + *d * s).collect();
            residual_norm_sqr(&WaveField::new(grid.clone(), amps).unwrap(), &spec, g).unwrap()
        };
        let fd = (shifted(-2.0 * h) - 8.0 * shifted(-h) + 8.0 * shifted(h) - shifted(2.0 * h)) / (12.0 * h);
        let rel = (fd - analytic).abs() / analytic.abs();
        assert!(rel < 1e-6, "seed {seed}: analytic {analytic} fd {fd} rel {rel}");
    }
}

#[test]
fn linear_limit_reproduces_eigenvalues() {
    let grid = grid_1d(256, 12.0);
    let spec = PotentialSpec::one_d(13.4, 0.2, -4.0).unwrap();
    let op = LinearOperatorSpec::new(grid.clone(), spec).unwrap();
    let pairs = lowest_eigenpairs(&op, 4, &EigenOptions::default()).unwrap();
    for (k, pair) in pairs.iter().enumerate() {
        let guess = oscillator::state_1d(&grid, k);
        // start from the eigenvector slightly perturbed so the minimizer has work to do
        let guess = WaveField::new(
            grid.clone(),
            pair.state.amplitudes().iter().zip(guess.amplitudes()).map(|(a, b)| *a + *b * 0.05).collect(),
        )
        .unwrap();
        let sol = solve_stationary(&guess, &spec, 0.0, &StationaryOptions::default()).unwrap();
        assert!((sol.mu - pair.energy).abs() < 1e-8, "level {k}: {} vs {}", sol.mu, pair.energy);
    }
}

#[test]
fn first_excited_harmonic_state() {
    let grid = grid_1d(128, 10.0);
    let spec = PotentialSpec::harmonic(crate::Dim::One, 0.0);
    let guess = WaveField::from_fn(grid.clone(), |x, _| C::new(x * (-x * x / 1.6).exp() + 0.01 * (-x * x).exp(), 0.0));
    let opts = StationaryOptions { tol: 1e-10, ..Default::default() };
    let sol = solve_stationary(&guess, &spec, 0.0, &opts).unwrap();
    assert!((sol.mu - 1.5).abs() < 1e-10, "{}", sol.mu);
    assert!(sol.residual_norm < 1e-10);
    assert!(sol.warnings.is_empty());
}

#[test]
fn converged_states_pass_the_residual_check() {
    let grid = grid_1d(256, 12.0);
    let spec = PotentialSpec::harmonic(crate::Dim::One, 0.0);
    let guess = oscillator::state_1d(&grid, 1);
    let sol = continue_in_g(&guess, &spec, 50.0, 5, &StationaryOptions::default()).unwrap();
    let r = residual(&sol.state, &spec, 50.0).unwrap();
    assert!(r.residual_norm < 1e-8);
    assert!((r.mu_tilde - sol.mu).abs() < 1e-9);
    assert!((sol.state.norm_sqr() - 1.0).abs() < 1e-12);
    // still one node: antisymmetric density profile around the center
    let amps = sol.state.amplitudes();
    let n = amps.len();
    assert!((amps[n / 2 - 20].re + amps[n / 2 + 20].re).abs() < 1e-6);
}

#[test]
fn effective_potential_sign_follows_g() {
    let grid = grid_1d(128, 10.0);
    let spec = PotentialSpec::one_d(6.4, 0.5, -2.0).unwrap();
    let state = oscillator::state_1d(&grid, 0);
    let v = grid.sample(|x, y| spec.eval(x, y));
    for (g, sign) in [(0.0, 0.0), (-1.0, -1.0), (50.0, 1.0)] {
        let st = StationaryState { state: state.clone(), mu: 0.0, g, spec, residual_norm: 0.0, warnings: vec![] };
        let veff = effective_potential(&st);
        for (a, b) in veff.iter().zip(&v) {
            assert!((a - b) * sign >= 0.0);
            if g == 0.0 {
                assert_eq!(a, b);
            }
        }
    }
}

#[test]
fn hellmann_feynman_limits() {
    let grid = grid_1d(128, 10.0);
    let state = oscillator::state_1d(&grid, 0);
    let flat = PotentialSpec::one_d(0.0, 0.5, -2.0).unwrap();
    let st = StationaryState { state: state.clone(), mu: 0.5, g: 10.0, spec: flat, residual_norm: 0.0, warnings: vec![] };
    let dv = potential_x0_derivative(&grid, &flat);
    assert_eq!(hellmann_feynman_slope(&st, &dv, &WaveField::zeros(grid.clone())).unwrap(), 0.0);

    let spec = PotentialSpec::one_d(6.4, 0.5, -2.0).unwrap();
    let st = StationaryState { spec, g: 0.0, ..st };
    let dv = potential_x0_derivative(&grid, &spec);
    let expected: f64 = state.density().iter().zip(&dv).map(|(d, w)| d * w).sum::<f64>() * grid.spacing();
    let noise = random_field(&grid, 4);
    assert_eq!(hellmann_feynman_slope(&st, &dv, &noise).unwrap(), expected);
}

#[test]
fn barrier_between_dip_and_center() {
    let spec = PotentialSpec::one_d(6.4, 0.5, -3.0).unwrap();
    let xb = barrier_position(&spec);
    assert!(xb > -3.0 && xb < 0.0);
    let h = 1e-4;
    assert!(spec.eval(xb, 0.0) >= spec.eval(xb - 10.0 * h, 0.0));
    assert!(spec.eval(xb, 0.0) >= spec.eval(xb + 10.0 * h, 0.0));
    let flat = PotentialSpec::one_d(0.0, 0.5, -3.0).unwrap();
    assert_eq!(barrier_position(&flat), -1.5);
}

fn linear_seed(grid: &Arc<Grid<f64>>, spec: &PotentialSpec<f64>, level: usize) -> StationaryState<f64> {
    let op = LinearOperatorSpec::new(grid.clone(), *spec).unwrap();
    let pairs = lowest_eigenpairs(&op, level + 1, &EigenOptions::default()).unwrap();
    let pair = &pairs[level];
    StationaryState {
        state: pair.state.clone(),
        mu: pair.energy,
        g: 0.0,
        spec: *spec,
        residual_norm: pair.residual,
        warnings: vec![],
    }
}

#[test]
fn linear_continuation_matches_eigenvalues() {
    let grid = grid_1d(128, 10.0);
    let spec = PotentialSpec::one_d(6.4, 0.5, -4.0).unwrap();
    let seed = linear_seed(&grid, &spec, 0);
    let opts = ContinuationOptions { ds_max: 0.1, ..Default::default() };
    let branch = continuation_scan(&seed, ContinuationParameter::DipPosition, 0.0, &opts).unwrap();
    assert_eq!(branch.stop, StopReason::Reached);
    assert!(!branch.is_multivalued());
    for p in branch.points.iter().step_by(7) {
        let op = LinearOperatorSpec::new(grid.clone(), spec.with_x0(p.x0)).unwrap();
        let e = lowest_eigenpairs(&op, 1, &EigenOptions::default()).unwrap()[0].energy;
        assert!((p.mu - e).abs() < 1e-6, "x0 {}: {} vs {}", p.x0, p.mu, e);
    }
    assert!(branch.points.last().unwrap().x0.abs() < 1e-12);
}

#[test]
fn coupling_continuation_reaches_target() {
    let grid = grid_1d(128, 10.0);
    let spec = PotentialSpec::harmonic(crate::Dim::One, 0.0);
    let seed = linear_seed(&grid, &spec, 0);
    let opts = ContinuationOptions { ds_max: 0.5, ds_initial: 0.1, ..Default::default() };
    let branch = continuation_scan(&seed, ContinuationParameter::Coupling, 5.0, &opts).unwrap();
    assert_eq!(branch.stop, StopReason::Reached);
    let last = branch.points.last().unwrap();
    assert_eq!(last.g, 5.0);
    let direct = solve_stationary(&seed.state, &spec, 5.0, &StationaryOptions::default()).unwrap();
    assert!((last.mu - direct.mu).abs() < 1e-8);
}

#[test]
fn intersection_of_crossing_segments() {
    let hit = continuation::segment_intersection_for_tests((0.0, 0.0), (1.0, 1.0), (0.0, 1.0), (1.0, 0.0));
    assert_eq!(hit, Some((0.5, 0.5)));
    assert_eq!(continuation::segment_intersection_for_tests((0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)), None);
}
