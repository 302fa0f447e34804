//! Strang split-step propagation.
//!
//! Lab frame (and 1D): `K/2 V K/2` with `K = |k|^2/2` diagonal in Fourier space. The
//! kinetic halves of consecutive steps are merged, so a segment of `m` steps costs
//! `m + 1` transform pairs.
//!
//! Rotating frame (2D): the kinetic part `-1/2 lap - Omega L_z` is split into
//! `A = kx^2/2 + Omega y kx` (diagonal after an x transform at fixed y) and
//! `B = ky^2/2 - Omega x ky` (diagonal after a y transform at fixed x), composed as
//! `A/2 B/2 V B/2 A/2`. Every factor is an exact unitary.
//!
//! The pointwise factor `exp(-i dt (V + g |psi|^2))` is the exact flow of its own
//! sub-problem because `|psi|` does not change under it. The trap part is tabulated;
//! the dip is applied only inside a box of half-width `dip_reach` around its center.

use std::sync::Arc;

use crate::grid::{Dim, Grid, Spectral};
use crate::hamiltonian::kinetic_diagonal;
use crate::potentials::PotentialSpec;
use crate::scalar::{cis, Real, C};

use super::Frame;

/// Real time multiplies by `exp(-i dt E)`; imaginary time by `exp(-dt E)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Clock {
    Real,
    Imaginary,
}

/// Where the dip sits: radial position and rotation angle of its axis.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DipPose<T> {
    pub x0: T,
    pub theta: T,
}

pub(crate) struct SplitStep<T: Real> {
    grid: Arc<Grid<T>>,
    spectral: Spectral<T>,
    spec: PotentialSpec<T>,
    clock: Clock,
    g: T,
    dt: T,
    rotating: bool,
    /// trap part of the potential
    trap: Vec<T>,
    /// `exp(-i dt trap)`, used when `g == 0`
    trap_factor: Vec<C<T>>,
    kin_half: Vec<C<T>>,
    kin_full: Vec<C<T>>,
    /// rotating frame, transposed layout `[iy * n + kx]`
    a_half: Vec<C<T>>,
    a_full: Vec<C<T>>,
    /// rotating frame, `[ix * n + ky]`
    b_half: Vec<C<T>>,
}

impl<T: Real> SplitStep<T> {
    pub fn new(grid: Arc<Grid<T>>, spec: PotentialSpec<T>, g: T, dt: T, frame: Frame, clock: Clock) -> Self {
        let rotating = grid.dim() == Dim::Two && frame == Frame::Rotating && spec.omega != T::zero();
        let trap = grid.sample(|x, y| spec.eval(x, y) - spec.dip(x, y));
        let exp = |e: T| factor(clock, e);
        let trap_factor = trap.iter().map(|&v| exp(dt * v)).collect();
        let (mut kin_half, mut kin_full) = (Vec::new(), Vec::new());
        let (mut a_half, mut a_full, mut b_half) = (Vec::new(), Vec::new(), Vec::new());
        let half = dt * T::lit(0.5);
        if rotating {
            let n = grid.points_per_axis();
            let ks = grid.wavenumbers();
            let xs = grid.coords();
            let om = spec.omega;
            for &y in xs.iter() {
                for &kx in ks.iter() {
                    let e = T::lit(0.5) * kx * kx + om * y * kx;
                    a_half.push(exp(half * e));
                    a_full.push(exp(dt * e));
                }
            }
            for &x in xs.iter() {
                for &ky in ks.iter() {
                    b_half.push(exp(half * (T::lit(0.5) * ky * ky - om * x * ky)));
                }
            }
            debug_assert_eq!(a_half.len(), n * n);
        } else {
            let kd = kinetic_diagonal(&grid);
            kin_half = kd.iter().map(|&e| exp(half * e)).collect();
            kin_full = kd.iter().map(|&e| exp(dt * e)).collect();
        }
        SplitStep {
            spectral: Spectral::new(grid.clone()),
            grid,
            spec,
            clock,
            g,
            dt,
            rotating,
            trap,
            trap_factor,
            kin_half,
            kin_full,
            a_half,
            a_full,
            b_half,
        }
    }

    /// Advances `psi` by `poses.len()` steps; `poses[s]` is the dip at the midpoint of step `s`.
    pub fn advance(&mut self, psi: &mut [C<T>], poses: &[DipPose<T>]) {
        let Some(last) = poses.len().checked_sub(1) else {
            return;
        };
        if self.rotating {
            self.stage_a(psi, true);
            for (s, pose) in poses.iter().enumerate() {
                self.stage_b(psi);
                self.kick(psi, *pose);
                self.stage_b(psi);
                self.stage_a(psi, s == last);
            }
        } else {
            self.kinetic(psi, true);
            for (s, pose) in poses.iter().enumerate() {
                self.kick(psi, *pose);
                self.kinetic(psi, s == last);
            }
        }
    }

    fn kinetic(&mut self, psi: &mut [C<T>], half: bool) {
        self.spectral.forward_transposed(psi);
        let table = if half { &self.kin_half } else { &self.kin_full };
        for (v, f) in psi.iter_mut().zip(table) {
            *v = *v * f;
        }
        self.spectral.inverse_transposed(psi);
    }

    fn stage_a(&mut self, psi: &mut [C<T>], half: bool) {
        let n = self.grid.points_per_axis();
        crate::grid::transpose_square(psi, n);
        self.spectral.forward_y(psi);
        let table = if half { &self.a_half } else { &self.a_full };
        for (v, f) in psi.iter_mut().zip(table) {
            *v = *v * f;
        }
        self.spectral.inverse_y(psi);
        crate::grid::transpose_square(psi, n);
    }

    fn stage_b(&mut self, psi: &mut [C<T>]) {
        self.spectral.forward_y(psi);
        for (v, f) in psi.iter_mut().zip(&self.b_half) {
            *v = *v * f;
        }
        self.spectral.inverse_y(psi);
    }

    /// Pointwise potential and interaction factor over one full step.
    fn kick(&mut self, psi: &mut [C<T>], pose: DipPose<T>) {
        let dt = self.dt;
        if self.g == T::zero() {
            for (p, f) in psi.iter_mut().zip(&self.trap_factor) {
                *p = *p * f;
            }
        } else {
            let g = self.g;
            for (p, &v) in psi.iter_mut().zip(&self.trap) {
                *p = *p * factor(self.clock, dt * (v + g * p.norm_sqr()));
            }
        }
        let clock = self.clock;
        for_each_in_dip(&self.grid, &self.spec, pose, |i, d| psi[i] = psi[i] * factor(clock, dt * d));
    }

    /// Potential sampled at the given pose.
    pub fn potential(&self, pose: DipPose<T>) -> Vec<T> {
        let mut v = self.trap.clone();
        for_each_in_dip(&self.grid, &self.spec, pose, |i, d| v[i] = v[i] + d);
        v
    }
}

fn factor<T: Real>(clock: Clock, e: T) -> C<T> {
    match clock {
        Clock::Real => cis(-e),
        Clock::Imaginary => C::new((-e).exp(), T::zero()),
    }
}

/// Calls `f(index, dip value)` for every grid point within `dip_reach` of the dip
/// center `(x0 cos theta, x0 sin theta)`.
pub(crate) fn for_each_in_dip<T: Real, F: FnMut(usize, T)>(
    grid: &Grid<T>,
    spec: &PotentialSpec<T>,
    pose: DipPose<T>,
    mut f: F,
) {
    let spec = spec.with_x0(pose.x0);
    let strength = spec.dip_strength();
    if strength == T::zero() {
        return;
    }
    let reach = spec.dip_reach();
    let inv = T::one() / (T::lit(2.0) * spec.sigma * spec.sigma);
    let (s, c) = pose.theta.sin_cos();
    let (cx, cy) = (pose.x0 * c, pose.x0 * s);
    let xs = grid.coords();
    let range = |center: T| axis_window(grid, center, reach);
    match grid.dim() {
        Dim::One => {
            for i in range(cx) {
                let d = xs[i] - cx;
                f(i, strength * (-d * d * inv).exp());
            }
        }
        Dim::Two => {
            let n = grid.points_per_axis();
            let ry = range(cy);
            for ix in range(cx) {
                let dx = xs[ix] - cx;
                for iy in ry.clone() {
                    let dy = xs[iy] - cy;
                    f(ix * n + iy, strength * (-(dx * dx + dy * dy) * inv).exp());
                }
            }
        }
    }
}

fn axis_window<T: Real>(grid: &Grid<T>, center: T, reach: T) -> std::ops::Range<usize> {
    let n = grid.points_per_axis();
    let dx = grid.spacing();
    let l = grid.half_width();
    let lo = ((center - reach + l) / dx).floor().to_isize().unwrap_or(0).max(0) as usize;
    let hi = ((center + reach + l) / dx).ceil().to_isize().unwrap_or(0).max(-1) + 1;
    lo.min(n)..(hi.max(0) as usize).min(n)
}
