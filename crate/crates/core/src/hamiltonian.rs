//! Matrix-free application of `H = -1/2 lap + V - Omega L_z` and the GP operator.
//!
//! The kinetic term is diagonal in Fourier space. `L_z = -i (x d/dy - y d/dx)` is applied
//! in mixed representation: each derivative is spectral along its own axis and the
//! coordinate factor is applied pointwise.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::Result;
use crate::grid::{raw_inner_product, Dim, Grid, Spectral, WaveField};
use crate::potentials::PotentialSpec;
use crate::scalar::{czero, Real, C};

pub struct Hamiltonian<T: Real> {
    grid: Arc<Grid<T>>,
    spectral: Spectral<T>,
    potential: Vec<T>,
    omega: T,
    kinetic_diag: Vec<T>,
    buf_a: Vec<C<T>>,
    buf_b: Vec<C<T>>,
}

impl<T: Real> Hamiltonian<T> {
    pub fn new(grid: Arc<Grid<T>>, spec: &PotentialSpec<T>) -> Self {
        let potential = grid.sample(|x, y| spec.eval(x, y));
        let kinetic_diag = kinetic_diagonal(&grid);
        let n = grid.len();
        Hamiltonian {
            spectral: Spectral::new(grid.clone()),
            grid,
            potential,
            omega: spec.omega,
            kinetic_diag,
            buf_a: vec![czero(); n],
            buf_b: vec![czero(); n],
        }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn potential(&self) -> &[T] {
        &self.potential
    }

    pub fn omega(&self) -> T {
        self.omega
    }

    pub fn spectral(&mut self) -> &mut Spectral<T> {
        &mut self.spectral
    }

    /// Resamples the potential (e.g. after moving the dip).
    pub fn set_potential(&mut self, spec: &PotentialSpec<T>) {
        self.potential = self.grid.sample(|x, y| spec.eval(x, y));
        self.omega = spec.omega;
    }

    /// `|k|^2 / 2` in storage order.
    pub fn kinetic_diagonal(&self) -> &[T] {
        &self.kinetic_diag
    }

    /// `out = -1/2 lap psi`.
    pub fn apply_kinetic(&mut self, psi: &[C<T>], out: &mut [C<T>]) {
        out.copy_from_slice(psi);
        self.spectral.forward(out);
        for (v, &k2) in out.iter_mut().zip(&self.kinetic_diag) {
            *v = *v * k2;
        }
        self.spectral.inverse(out);
    }

    /// `out = L_z psi` (zero in 1D).
    pub fn apply_lz(&mut self, psi: &[C<T>], out: &mut [C<T>]) {
        if self.grid.dim() == Dim::One {
            out.iter_mut().for_each(|v| *v = czero());
            return;
        }
        let n = self.grid.points_per_axis();
        let ks = self.grid.wavenumbers().to_vec();
        let xs = self.grid.coords().to_vec();
        // buf_a = d/dy psi
        self.buf_a.copy_from_slice(psi);
        self.spectral.forward_y(&mut self.buf_a);
        for (i, v) in self.buf_a.iter_mut().enumerate() {
            *v = *v * Complex::new(T::zero(), ks[i % n]);
        }
        self.spectral.inverse_y(&mut self.buf_a);
        // buf_b = d/dx psi
        self.buf_b.copy_from_slice(psi);
        self.spectral.forward_x(&mut self.buf_b);
        for (i, v) in self.buf_b.iter_mut().enumerate() {
            *v = *v * Complex::new(T::zero(), ks[i / n]);
        }
        self.spectral.inverse_x(&mut self.buf_b);
        for (i, o) in out.iter_mut().enumerate() {
            let x = xs[i / n];
            let y = xs[i % n];
            let w = self.buf_a[i] * x - self.buf_b[i] * y;
            // -i * w
            *o = Complex::new(w.im, -w.re);
        }
    }

    /// `out = (-1/2 lap + V - Omega L_z) psi`.
    pub fn apply(&mut self, psi: &[C<T>], out: &mut [C<T>]) {
        let rotating = self.grid.dim() == Dim::Two && self.omega != T::zero();
        if rotating {
            let mut lz = vec![czero(); psi.len()];
            self.apply_lz(psi, &mut lz);
            self.apply_kinetic(psi, out);
            for ((o, p), (l, &v)) in out.iter_mut().zip(psi).zip(lz.iter().zip(&self.potential)) {
                *o = *o + *p * v - *l * self.omega;
            }
        } else {
            self.apply_kinetic(psi, out);
            for ((o, p), &v) in out.iter_mut().zip(psi).zip(&self.potential) {
                *o = *o + *p * v;
            }
        }
    }

    /// `out = (H + g |psi|^2) psi`.
    pub fn apply_gp(&mut self, psi: &[C<T>], g: T, out: &mut [C<T>]) {
        self.apply(psi, out);
        if g != T::zero() {
            for (o, p) in out.iter_mut().zip(psi) {
                *o = *o + *p * (g * p.norm_sqr());
            }
        }
    }

    /// Quadrature-weighted `<a|b>` on this grid.
    pub fn dot(&self, a: &[C<T>], b: &[C<T>]) -> C<T> {
        raw_inner_product(a, b) * self.grid.cell_volume()
    }

    /// `<psi|H|psi>` for a field on this grid (no normalization applied).
    pub fn expectation(&mut self, psi: &WaveField<T>) -> Result<T> {
        self.grid.ensure_same(psi.grid())?;
        let mut h = vec![czero(); psi.len()];
        self.apply(psi.amplitudes(), &mut h);
        Ok(self.dot(psi.amplitudes(), &h).re)
    }

    /// `<psi|L_z|psi>`.
    pub fn lz_expectation(&mut self, psi: &WaveField<T>) -> Result<T> {
        self.grid.ensure_same(psi.grid())?;
        let mut l = vec![czero(); psi.len()];
        self.apply_lz(psi.amplitudes(), &mut l);
        Ok(self.dot(psi.amplitudes(), &l).re)
    }
}

pub(crate) fn kinetic_diagonal<T: Real>(grid: &Grid<T>) -> Vec<T> {
    let ks = grid.wavenumbers();
    let half = T::lit(0.5);
    match grid.dim() {
        Dim::One => ks.iter().map(|&k| half * k * k).collect(),
        Dim::Two => {
            let mut out = Vec::with_capacity(grid.len());
            for &kx in ks {
                for &ky in ks {
                    out.push(half * (kx * kx + ky * ky));
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn oscillator_states_are_eigenstates() {
        let grid = Arc::new(Grid::<f64>::new_1d(256, 12.0).unwrap());
        let mut h = Hamiltonian::new(grid.clone(), &PotentialSpec::harmonic(Dim::One, 0.0));
        for n in 0..5 {
            let psi = oscillator::state_1d(&grid, n);
            let mut out = vec![czero(); grid.len()];
            h.apply(psi.amplitudes(), &mut out);
            let e = n as f64 + 0.5;
            let err: f64 = out.iter().zip(psi.amplitudes()).map(|(o, p)| (o - p * e).norm_sqr()).sum();
            assert!(err.sqrt() < 1e-9, "n={n} err={err}");
        }
    }

    #[test]
    fn vortex_state_has_unit_angular_momentum() {
        let grid = Arc::new(Grid::<f64>::new_2d(64, 8.0).unwrap());
        let mut h = Hamiltonian::new(grid.clone(), &PotentialSpec::harmonic(Dim::Two, 0.6));
        for l in 0..4 {
            let psi = oscillator::vortex_2d(&grid, l);
            assert!((h.lz_expectation(&psi).unwrap() - l as f64).abs() < 1e-8);
            let e = h.expectation(&psi).unwrap();
            assert!((e - (l as f64 + 1.0 - 0.6 * l as f64)).abs() < 1e-8, "l={l} e={e}");
        }
    }

    #[test]
    fn hamiltonian_is_hermitian_with_rotation_and_dip() {
        let grid = Arc::new(Grid::<f64>::new_2d(32, 6.0).unwrap());
        let spec = PotentialSpec::two_d(25.0, 0.4, 0.6, -3.0).unwrap();
        let mut h = Hamiltonian::new(grid.clone(), &spec);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut rand_field = || -> Vec<C<f64>> {
            (0..grid.len()).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
        };
        let a = rand_field();
        let b = rand_field();
        let mut ha = vec![czero(); a.len()];
        let mut hb = vec![czero(); a.len()];
        h.apply(&a, &mut ha);
        h.apply(&b, &mut hb);
        let lhs = h.dot(&a, &hb);
        let rhs = h.dot(&b, &ha).conj();
        assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(1.0), "{lhs} {rhs}");
    }
}
