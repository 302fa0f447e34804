use std::sync::Arc;

use sweepbec::dynamics::{imaginary_time_ground_state, propagate, ImaginaryTimeOptions, OverlapTarget, PropagationConfig};
use sweepbec::{oscillator, Grid32, Potential32, SweepSchedule};

#[test]
fn single_precision_pipeline() {
    let grid = Arc::new(Grid32::new_1d(256, 12.0).unwrap());
    let trap = Potential32::harmonic(sweepbec::Dim::One, 0.0);
    let opts = ImaginaryTimeOptions { tol: 1e-6, polish: false, ..Default::default() };
    let st = imaginary_time_ground_state(&trap, 0.0f32, grid.clone(), &opts).unwrap();
    assert!((st.mu - 0.5).abs() < 1e-4, "{}", st.mu);

    let spec = Potential32::one_d(13.4, 0.2, -7.0).unwrap();
    let sched = SweepSchedule::linear(-7.0f32, -6.0, 0.5, 1).unwrap();
    let target = OverlapTarget::new("n0", oscillator::state_1d(&grid, 0));
    let traj = propagate(&st.state, &spec, &sched, &PropagationConfig::new(1e-3f32, 0.0), &[target]).unwrap();
    assert!(traj.max_norm_drift() < 1e-3);
    assert!(traj.final_overlap("n0").unwrap() > 0.99);
}

#[test]
fn single_and_double_precision_agree() {
    let g64 = Arc::new(sweepbec::Grid64::new_1d(128, 10.0).unwrap());
    let s64 = oscillator::state_1d(&g64, 3);
    let s32: sweepbec::Field32 = s64.cast().unwrap();
    let back: sweepbec::Field64 = s32.cast().unwrap();
    assert!(s64.fidelity(&back).unwrap() > 1.0 - 1e-6);
}
