use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::{Dim, Grid};
use crate::scalar::{Real, C};

/// FFT plans and scratch space for one grid.
///
/// The inverse transforms are normalized, so `inverse(forward(f)) == f`.
/// A workspace is owned by a single propagator or solver; build another one for
/// concurrent work.
pub struct Spectral<T: Real> {
    grid: Arc<Grid<T>>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    scratch: Vec<C<T>>,
    inv_n: T,
}

impl<T: Real> Spectral<T> {
    pub fn new(grid: Arc<Grid<T>>) -> Self {
        let n = grid.points_per_axis();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let scratch = vec![C::new(T::zero(), T::zero()); scratch_len];
        let inv_n = T::one() / T::from_usize_lossy(n);
        Spectral { grid, forward, inverse, scratch, inv_n }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    /// Full forward transform over every axis.
    pub fn forward(&mut self, data: &mut [C<T>]) {
        match self.grid.dim() {
            Dim::One => self.forward.process_with_scratch(data, &mut self.scratch),
            Dim::Two => {
                self.forward_y(data);
                self.forward_x(data);
            }
        }
    }

    /// Full normalized inverse transform over every axis.
    pub fn inverse(&mut self, data: &mut [C<T>]) {
        match self.grid.dim() {
            Dim::One => {
                self.inverse.process_with_scratch(data, &mut self.scratch);
                self.scale(data);
            }
            Dim::Two => {
                self.inverse_x(data);
                self.inverse_y(data);
            }
        }
    }

    /// Full forward transform that leaves a 2D result transposed (`ky` outer, `kx`
    /// inner). Saves one transpose when the caller multiplies by a table that is
    /// symmetric under `kx <-> ky` and transforms straight back with
    /// [`Spectral::inverse_transposed`].
    pub fn forward_transposed(&mut self, data: &mut [C<T>]) {
        match self.grid.dim() {
            Dim::One => self.forward.process_with_scratch(data, &mut self.scratch),
            Dim::Two => {
                let n = self.grid.points_per_axis();
                self.forward.process_with_scratch(data, &mut self.scratch);
                transpose_square(data, n);
                self.forward.process_with_scratch(data, &mut self.scratch);
            }
        }
    }

    pub fn inverse_transposed(&mut self, data: &mut [C<T>]) {
        match self.grid.dim() {
            Dim::One => {
                self.inverse.process_with_scratch(data, &mut self.scratch);
                self.scale(data);
            }
            Dim::Two => {
                let n = self.grid.points_per_axis();
                self.inverse.process_with_scratch(data, &mut self.scratch);
                transpose_square(data, n);
                self.inverse.process_with_scratch(data, &mut self.scratch);
                let s = self.inv_n * self.inv_n;
                data.iter_mut().for_each(|v| *v = *v * s);
            }
        }
    }

    /// Transform along y only (contiguous rows). In 1D this is the full transform.
    pub fn forward_y(&mut self, data: &mut [C<T>]) {
        self.forward.process_with_scratch(data, &mut self.scratch);
    }

    pub fn inverse_y(&mut self, data: &mut [C<T>]) {
        self.inverse.process_with_scratch(data, &mut self.scratch);
        self.scale_rows(data);
    }

    /// Transform along x only (strided axis of a 2D field).
    pub fn forward_x(&mut self, data: &mut [C<T>]) {
        let n = self.grid.points_per_axis();
        transpose_square(data, n);
        self.forward.process_with_scratch(data, &mut self.scratch);
        transpose_square(data, n);
    }

    pub fn inverse_x(&mut self, data: &mut [C<T>]) {
        let n = self.grid.points_per_axis();
        transpose_square(data, n);
        self.inverse.process_with_scratch(data, &mut self.scratch);
        self.scale_rows(data);
        transpose_square(data, n);
    }

    fn scale(&self, data: &mut [C<T>]) {
        for v in data.iter_mut() {
            *v = *v * self.inv_n;
        }
    }

    fn scale_rows(&self, data: &mut [C<T>]) {
        self.scale(data);
    }
}

/// In-place transpose of an `n x n` row-major block.
pub(crate) fn transpose_square<V: Copy>(data: &mut [V], n: usize) {
    debug_assert_eq!(data.len(), n * n);
    const BLOCK: usize = 16;
    for bi in (0..n).step_by(BLOCK) {
        for bj in (bi..n).step_by(BLOCK) {
            for i in bi..(bi + BLOCK).min(n) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + BLOCK).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}
