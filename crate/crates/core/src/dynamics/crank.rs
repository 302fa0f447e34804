//! Crank-Nicolson propagation in 1D, kept as an independent check on the split-step
//! integrator.
//!
//! `(1 + i dt/2 H_mid) psi_new = (1 - i dt/2 H_mid) psi_old` where `H_mid` uses the
//! potential at the step midpoint and `g |(psi_old + psi_new)/2|^2`. The nonlinearity
//! is resolved by fixed-point iteration.
//!
//! Two Laplacians are available. `Spectral` shares the spatial discretization with the
//! split-step code, so the two integrators can be compared at the level of their time
//! errors; the implicit solve is a fixed-point iteration preconditioned by the
//! (diagonal) kinetic part. `FiniteDifference` is the textbook three-point stencil with
//! Dirichlet walls and a tridiagonal solve; it shares no code with the FFT path.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Dim, Grid, Spectral, WaveField};
use crate::hamiltonian::kinetic_diagonal;
use crate::potentials::PotentialSpec;
use crate::scalar::{czero, Real, C};

use super::split::{for_each_in_dip, DipPose};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Laplacian {
    Spectral,
    FiniteDifference,
}

pub(crate) struct CrankNicolson<T: Real> {
    grid: Arc<Grid<T>>,
    spectral: Spectral<T>,
    spec: PotentialSpec<T>,
    laplacian: Laplacian,
    g: T,
    dt: T,
    trap: Vec<T>,
    kin: Vec<T>,
    /// fixed-point tolerance on the max-norm update
    tol: T,
}

const MAX_FIXED_POINT: usize = 200;

impl<T: Real> CrankNicolson<T> {
    pub fn new(grid: Arc<Grid<T>>, spec: PotentialSpec<T>, g: T, dt: T, laplacian: Laplacian) -> Result<Self> {
        if grid.dim() != Dim::One {
            return Err(Error::Unsupported("Crank-Nicolson is implemented in 1D only".into()));
        }
        let trap = grid.sample(|x, y| spec.eval(x, y) - spec.dip(x, y));
        let kin = kinetic_diagonal(&grid);
        Ok(CrankNicolson {
            spectral: Spectral::new(grid.clone()),
            grid,
            spec,
            laplacian,
            g,
            dt,
            trap,
            kin,
            tol: T::epsilon() * T::lit(10.0),
        })
    }

    pub fn potential(&self, x0: T) -> Vec<T> {
        let mut v = self.trap.clone();
        for_each_in_dip(&self.grid, &self.spec, DipPose { x0, theta: T::zero() }, |i, d| v[i] = v[i] + d);
        v
    }

    /// One step per entry of `poses` (the midpoint dip positions).
    pub fn advance(&mut self, psi: &mut [C<T>], poses: &[DipPose<T>]) -> Result<()> {
        for pose in poses {
            let v = self.potential(pose.x0);
            let next = match self.laplacian {
                Laplacian::Spectral => self.step_spectral(psi, &v)?,
                Laplacian::FiniteDifference => self.step_fd(psi, &v)?,
            };
            psi.copy_from_slice(&next);
        }
        Ok(())
    }

    fn mid_potential(&self, v: &[T], old: &[C<T>], new: &[C<T>]) -> Vec<T> {
        let quarter = T::lit(0.25);
        v.iter()
            .zip(old.iter().zip(new))
            .map(|(&vv, (a, b))| vv + self.g * (*a + *b).norm_sqr() * quarter)
            .collect()
    }

    fn step_spectral(&mut self, psi: &[C<T>], v: &[T]) -> Result<Vec<C<T>>> {
        let h = self.dt * T::lit(0.5);
        let i_h = C::new(T::zero(), h);
        let mut psi_hat = psi.to_vec();
        self.spectral.forward(&mut psi_hat);
        let mut new = psi.to_vec();
        for _ in 0..MAX_FIXED_POINT {
            let w = self.mid_potential(v, psi, &new);
            // (1 + i h T) new = psi - i h T psi - i h W (psi + new)
            let mut rhs: Vec<C<T>> =
                psi.iter().zip(&new).zip(&w).map(|((a, b), &ww)| *a - i_h * (*a + *b) * ww).collect();
            self.spectral.forward(&mut rhs);
            for ((r, p), &k) in rhs.iter_mut().zip(&psi_hat).zip(&self.kin) {
                *r = (*r - i_h * *p * k) / (C::new(T::one(), T::zero()) + i_h * k);
            }
            self.spectral.inverse(&mut rhs);
            let change = rhs.iter().zip(&new).map(|(a, b)| (*a - *b).norm()).fold(T::zero(), T::max);
            new = rhs;
            if change <= self.tol {
                return Ok(new);
            }
        }
        Err(Error::NonConvergence { iterations: MAX_FIXED_POINT, best_residual: f64::NAN })
    }

    fn step_fd(&mut self, psi: &[C<T>], v: &[T]) -> Result<Vec<C<T>>> {
        let dx = self.grid.spacing();
        let h = self.dt * T::lit(0.5);
        let off = -T::lit(0.5) / (dx * dx);
        let mut new = psi.to_vec();
        let iterations = if self.g == T::zero() { 1 } else { MAX_FIXED_POINT };
        for _ in 0..iterations {
            let w = self.mid_potential(v, psi, &new);
            let next = fd_solve(psi, &w, off, C::new(T::zero(), h));
            let change = next.iter().zip(&new).map(|(a, b)| (*a - *b).norm()).fold(T::zero(), T::max);
            new = next;
            if change <= self.tol {
                return Ok(new);
            }
        }
        if self.g == T::zero() {
            Ok(new)
        } else {
            Err(Error::NonConvergence { iterations: MAX_FIXED_POINT, best_residual: f64::NAN })
        }
    }
}

/// Solves `(1 + c H) x = (1 - c H) psi` for the tridiagonal `H` with diagonal
/// `-2 off + w` and off-diagonals `off` (Dirichlet walls), by the Thomas algorithm.
fn fd_solve<T: Real>(psi: &[C<T>], w: &[T], off: T, c: C<T>) -> Vec<C<T>> {
    let n = psi.len();
    let one = C::new(T::one(), T::zero());
    let two = T::lit(2.0);
    let h_apply = |j: usize| {
        let left = if j > 0 { psi[j - 1] } else { czero() };
        let right = if j + 1 < n { psi[j + 1] } else { czero() };
        (left + right) * off + psi[j] * (w[j] - two * off)
    };
    let rhs: Vec<C<T>> = (0..n).map(|j| psi[j] - c * h_apply(j)).collect();
    let sub = c * off;
    let mut cprime = vec![czero::<T>(); n];
    let mut dprime = vec![czero::<T>(); n];
    for j in 0..n {
        let diag = one + c * (w[j] - two * off);
        let denom = if j == 0 { diag } else { diag - sub * cprime[j - 1] };
        cprime[j] = sub / denom;
        dprime[j] = if j == 0 { rhs[j] / denom } else { (rhs[j] - sub * dprime[j - 1]) / denom };
    }
    let mut x = vec![czero::<T>(); n];
    x[n - 1] = dprime[n - 1];
    for j in (0..n - 1).rev() {
        x[j] = dprime[j] - cprime[j] * x[j + 1];
    }
    x
}

/// Ground state by imaginary-time Crank-Nicolson with the three-point Laplacian.
///
/// The interaction is frozen at the start of each step and the field is renormalized
/// after it. Stops when `mu` (evaluated with the same stencil) changes by less than
/// `tol` relative per step. Returns the state and `mu`.
pub fn crank_nicolson_ground_state<T: Real>(
    grid: Arc<Grid<T>>,
    spec: &PotentialSpec<T>,
    g: T,
    dtau: T,
    tol: T,
    max_steps: usize,
) -> Result<(WaveField<T>, T)> {
    if grid.dim() != Dim::One {
        return Err(Error::Unsupported("Crank-Nicolson is implemented in 1D only".into()));
    }
    let dx = grid.spacing();
    let off = -T::lit(0.5) / (dx * dx);
    let v = grid.sample(|x, y| spec.eval(x, y));
    let mut psi: Vec<C<T>> = grid.coords().iter().map(|&x| C::new((-x * x / T::lit(2.0)).exp(), T::zero())).collect();
    normalize(&mut psi, dx);
    let c = C::new(dtau * T::lit(0.5), T::zero());
    let mut mu_prev = fd_mu(&psi, &v, off, g, dx);
    let mut history = Vec::new();
    for step in 0..max_steps {
        let w: Vec<T> = v.iter().zip(&psi).map(|(&vv, p)| vv + g * p.norm_sqr()).collect();
        psi = fd_solve(&psi, &w, off, c);
        normalize(&mut psi, dx);
        let mu = fd_mu(&psi, &v, off, g, dx);
        if history.len() == 16 {
            history.remove(0);
        }
        history.push(mu.to_f64_lossy());
        if ((mu - mu_prev) / mu).abs() < tol {
            log::debug!("Crank-Nicolson imaginary time converged after {step} steps");
            return Ok((WaveField::new(grid, psi)?, mu));
        }
        mu_prev = mu;
    }
    Err(Error::ImaginaryTime { steps: max_steps, tail: history })
}

fn normalize<T: Real>(psi: &mut [C<T>], dx: T) {
    let n = (psi.iter().map(|a| a.norm_sqr()).sum::<T>() * dx).sqrt();
    psi.iter_mut().for_each(|a| *a = *a / n);
}

fn fd_mu<T: Real>(psi: &[C<T>], v: &[T], off: T, g: T, dx: T) -> T {
    let n = psi.len();
    let two = T::lit(2.0);
    let mut acc = T::zero();
    for j in 0..n {
        let left = if j > 0 { psi[j - 1] } else { czero() };
        let right = if j + 1 < n { psi[j + 1] } else { czero() };
        let h = (left + right) * off + psi[j] * (v[j] - two * off + g * psi[j].norm_sqr());
        acc = acc + (psi[j].conj() * h).re;
    }
    acc * dx
}
