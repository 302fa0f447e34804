use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Dim, Grid, WaveField};
use crate::hamiltonian::Hamiltonian;
use crate::oscillator;
use crate::potentials::PotentialSpec;
use crate::scalar::{czero, Real};
use crate::stationary::{solve_stationary, StationaryOptions, StationaryState};

use super::split::{Clock, DipPose, SplitStep};
use super::Frame;

#[derive(Debug, Clone, Copy)]
pub struct ImaginaryTimeOptions {
    pub dtau: f64,
    /// Relative change of `mu` per step below which relaxation stops.
    pub tol: f64,
    pub max_steps: usize,
    /// `mu` is evaluated every this many steps; the change is divided by it.
    pub check_every: usize,
    /// Finish with the residual minimizer so the result satisfies the stationary
    /// equation to `polish_tol` rather than up to the splitting error.
    pub polish: bool,
    pub polish_tol: f64,
}

impl Default for ImaginaryTimeOptions {
    fn default() -> Self {
        ImaginaryTimeOptions {
            dtau: 1e-3,
            tol: 1e-12,
            max_steps: 1_000_000,
            check_every: 10,
            polish: true,
            polish_tol: 1e-9,
        }
    }
}

/// Lowest state of `H + g |psi|^2` reached from the oscillator ground state.
pub fn imaginary_time_ground_state<T: Real>(
    spec: &PotentialSpec<T>,
    g: T,
    grid: Arc<Grid<T>>,
    opts: &ImaginaryTimeOptions,
) -> Result<StationaryState<T>> {
    let initial = match grid.dim() {
        Dim::One => oscillator::state_1d(&grid, 0),
        Dim::Two => oscillator::product_2d(&grid, 0, 0),
    };
    relax(&initial, spec, g, opts)
}

/// Imaginary-time relaxation from `initial`. The flow preserves the symmetry sector of
/// the initial state when the potential shares it (e.g. a vortex in a symmetric trap).
pub fn relax<T: Real>(
    initial: &WaveField<T>,
    spec: &PotentialSpec<T>,
    g: T,
    opts: &ImaginaryTimeOptions,
) -> Result<StationaryState<T>> {
    if !(opts.tol > 0.0) || !(opts.dtau > 0.0) || opts.check_every == 0 {
        return Err(Error::Config("imaginary time needs tol > 0, dtau > 0 and check_every > 0".into()));
    }
    let grid = initial.grid().clone();
    if grid.dim() != spec.dim {
        return Err(Error::Config("grid and potential dimensions differ".into()));
    }
    let frame = if spec.omega != T::zero() { Frame::Rotating } else { Frame::Lab };
    let mut stepper = SplitStep::new(grid.clone(), *spec, g, T::lit(opts.dtau), frame, Clock::Imaginary);
    let mut ham = Hamiltonian::new(grid.clone(), spec);
    let dv = grid.cell_volume();
    let pose = DipPose { x0: spec.x0, theta: T::zero() };
    // without interaction the flow is linear and renormalization can wait until the
    // end of a batch
    let (batches, batch) = if g == T::zero() {
        (1, vec![pose; opts.check_every])
    } else {
        (opts.check_every, vec![pose])
    };
    let mut psi = initial.clone().normalized()?.into_amplitudes();
    let mut scratch = vec![czero(); psi.len()];
    let mut mu_of = |psi: &[_], scratch: &mut Vec<_>| {
        ham.apply_gp(psi, g, scratch);
        ham.dot(psi, scratch).re
    };
    let mut mu_prev = mu_of(&psi, &mut scratch);
    let mut history: Vec<f64> = Vec::new();
    let tol = T::lit(opts.tol);
    let mut steps = 0;
    let mut converged = false;
    while steps < opts.max_steps {
        for _ in 0..batches {
            stepper.advance(&mut psi, &batch);
            renormalize(&mut psi, dv)?;
        }
        steps += opts.check_every;
        let mu = mu_of(&psi, &mut scratch);
        if history.len() == 16 {
            history.remove(0);
        }
        history.push(mu.to_f64_lossy());
        let change = ((mu - mu_prev) / mu).abs() / T::from_usize_lossy(opts.check_every);
        mu_prev = mu;
        if change < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::ImaginaryTime { steps, tail: history });
    }
    log::debug!("imaginary time converged after {steps} steps, mu = {mu_prev}");
    let field = WaveField::new(grid.clone(), psi)?;
    if opts.polish {
        let sopts = StationaryOptions { tol: opts.polish_tol, ..Default::default() };
        let mut st = solve_stationary(&field, spec, g, &sopts)?;
        st.warnings.clear();
        return Ok(st);
    }
    let r = crate::stationary::residual(&field, spec, g)?;
    Ok(StationaryState {
        state: field,
        mu: r.mu_tilde,
        g,
        spec: *spec,
        residual_norm: r.residual_norm,
        warnings: Vec::new(),
    })
}

fn renormalize<T: Real>(psi: &mut [crate::scalar::C<T>], dv: T) -> Result<()> {
    let n = (psi.iter().map(|a| a.norm_sqr()).sum::<T>() * dv).sqrt();
    if !(n > T::zero()) || !n.is_finite() {
        return Err(Error::Domain("imaginary-time field collapsed to zero or overflowed".into()));
    }
    let s = T::one() / n;
    psi.iter_mut().for_each(|a| *a = *a * s);
    Ok(())
}
