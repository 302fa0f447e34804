use std::sync::Arc;

use num_complex::Complex;

use super::{Grid, Spectral};
use crate::error::{Error, Result};
use crate::scalar::{czero, Real, C};

/// Complex amplitude sampled on a grid, one value per grid point in storage order.
#[derive(Debug, Clone)]
pub struct WaveField<T: Real> {
    grid: Arc<Grid<T>>,
    amps: Vec<C<T>>,
}

impl<T: Real> WaveField<T> {
    pub fn new(grid: Arc<Grid<T>>, amps: Vec<C<T>>) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(Error::Shape(format!(
                "field has {} amplitudes but grid has {} points",
                amps.len(),
                grid.len()
            )));
        }
        Ok(WaveField { grid, amps })
    }

    pub fn zeros(grid: Arc<Grid<T>>) -> Self {
        let amps = vec![czero(); grid.len()];
        WaveField { grid, amps }
    }

    /// Samples `f(x, y)` at every grid point (`y = 0` in 1D).
    pub fn from_fn<F: FnMut(T, T) -> C<T>>(grid: Arc<Grid<T>>, mut f: F) -> Self {
        let amps = grid.points().map(|(x, y)| f(x, y)).collect();
        WaveField { grid, amps }
    }

    pub fn from_real(grid: Arc<Grid<T>>, values: &[T]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex::new(v, T::zero())).collect())
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C<T>] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C<T>> {
        self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// `sum |psi_i|^2 * spacing^dim`.
    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<T>() * self.grid.cell_volume()
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// Rescales to unit norm. Fields already within rounding of unit norm are left
    /// untouched, which makes the operation idempotent bit for bit.
    pub fn normalize(&mut self) -> Result<()> {
        let n2 = self.norm_sqr();
        if !(n2 > T::zero()) || !n2.is_finite() {
            return Err(Error::Domain(format!("cannot normalize a field with squared norm {n2}")));
        }
        if (n2 - T::one()).abs() <= T::normalization_slack() {
            return Ok(());
        }
        let s = T::one() / n2.sqrt();
        for a in &mut self.amps {
            *a = *a * s;
        }
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn scale(&mut self, factor: C<T>) {
        for a in &mut self.amps {
            *a = *a * factor;
        }
    }

    pub fn scaled(mut self, factor: C<T>) -> Self {
        self.scale(factor);
        self
    }

    /// Probability density `|psi|^2` at every grid point.
    pub fn density(&self) -> Vec<T> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `|<self|other>|^2 / (|self|^2 |other|^2)`.
    pub fn fidelity(&self, other: &WaveField<T>) -> Result<T> {
        let ov = inner_product(self, other)?;
        Ok(ov.norm_sqr() / (self.norm_sqr() * other.norm_sqr()))
    }

    /// Norm computed from the spectral coefficients (discrete Parseval).
    pub fn spectral_norm_sqr(&self, spectral: &mut Spectral<T>) -> T {
        let mut buf = self.amps.clone();
        spectral.forward(&mut buf);
        let n_total = T::from_usize_lossy(self.grid.len());
        buf.iter().map(|a| a.norm_sqr()).sum::<T>() * self.grid.cell_volume() / n_total
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    /// Converts the field to another scalar type (e.g. for `f32` runs seeded from `f64`).
    pub fn cast<U: Real>(&self) -> Result<WaveField<U>> {
        let g = &self.grid;
        let grid = Arc::new(Grid::<U>::new(
            g.dim(),
            g.points_per_axis(),
            U::lit(g.half_width().to_f64_lossy()),
        )?);
        let amps = self
            .amps
            .iter()
            .map(|a| Complex::new(U::lit(a.re.to_f64_lossy()), U::lit(a.im.to_f64_lossy())))
            .collect();
        WaveField::new(grid, amps)
    }
}

/// `sum conj(a_i) b_i * spacing^dim`.
pub fn inner_product<T: Real>(a: &WaveField<T>, b: &WaveField<T>) -> Result<C<T>> {
    a.grid.ensure_same(&b.grid)?;
    Ok(raw_inner(&a.amps, &b.amps) * a.grid.cell_volume())
}

pub(crate) fn raw_inner<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    let mut acc = czero::<T>();
    for (x, y) in a.iter().zip(b) {
        acc = acc + x.conj() * y;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Spectral;
    use proptest::prelude::*;

    fn grid(n: usize, l: f64) -> Arc<Grid<f64>> {
        Arc::new(Grid::new_1d(n, l).unwrap())
    }

    fn ho0(x: f64) -> f64 {
        std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp()
    }

    #[test]
    fn normalized_self_overlap_is_one() {
        let g = grid(256, 10.0);
        let psi = WaveField::from_fn(g, |x, _| C::new(ho0(x) * 3.0, 0.5 * x * ho0(x))).normalized().unwrap();
        let ov = inner_product(&psi, &psi).unwrap();
        assert!((ov.re - 1.0).abs() < 1e-12);
        assert!(ov.im.abs() < 1e-15);
    }

    #[test]
    fn ground_and_first_excited_are_orthogonal() {
        let g = grid(512, 12.0);
        let a = WaveField::from_fn(g.clone(), |x, _| C::new(ho0(x), 0.0));
        let b = WaveField::from_fn(g, |x, _| C::new(2f64.sqrt() * x * ho0(x), 0.0));
        assert!(inner_product(&a, &b).unwrap().norm() < 1e-10);
    }

    #[test]
    fn overlap_with_imaginary_multiple() {
        let g = grid(256, 10.0);
        let psi = WaveField::from_fn(g, |x, _| C::new(ho0(x), 0.0)).normalized().unwrap();
        let ipsi = psi.clone().scaled(C::new(0.0, 1.0));
        let ov = inner_product(&psi, &ipsi).unwrap();
        assert!(ov.re.abs() < 1e-15);
        assert!((ov.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = WaveField::<f64>::zeros(grid(64, 5.0));
        let b = WaveField::<f64>::zeros(grid(128, 5.0));
        assert!(matches!(inner_product(&a, &b), Err(Error::Shape(_))));
        assert!(WaveField::new(grid(64, 5.0), vec![czero(); 3]).is_err());
    }

    #[test]
    fn zero_field_cannot_be_normalized() {
        let mut z = WaveField::<f64>::zeros(grid(64, 5.0));
        assert!(z.normalize().is_err());
    }

    fn arb_field(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(vals in arb_field(64)) {
            prop_assume!(vals.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3));
            let g = grid(64, 4.0);
            let f = WaveField::new(g, vals.iter().map(|&(a, b)| C::new(a, b)).collect()).unwrap();
            let once = f.normalized().unwrap();
            prop_assert!((once.norm_sqr() - 1.0).abs() < 1e-12);
            let twice = once.clone().normalized().unwrap();
            prop_assert_eq!(once.amplitudes(), twice.amplitudes());
        }

        #[test]
        fn inner_product_is_conjugate_symmetric(a in arb_field(64), b in arb_field(64)) {
            let g = grid(64, 4.0);
            let fa = WaveField::new(g.clone(), a.iter().map(|&(x, y)| C::new(x, y)).collect()).unwrap();
            let fb = WaveField::new(g, b.iter().map(|&(x, y)| C::new(x, y)).collect()).unwrap();
            let ab = inner_product(&fa, &fb).unwrap();
            let ba = inner_product(&fb, &fa).unwrap();
            prop_assert!((ab - ba.conj()).norm() < 1e-14);
            prop_assert!(inner_product(&fa, &fa).unwrap().im.abs() < 1e-15);
        }

        #[test]
        fn parseval_holds(vals in arb_field(256), two_d in any::<bool>()) {
            let g = if two_d {
                Arc::new(Grid::new_2d(16, 3.0).unwrap())
            } else {
                grid(256, 7.0)
            };
            let f = WaveField::new(g.clone(), vals.iter().map(|&(a, b)| C::new(a, b)).collect()).unwrap();
            let mut sp = Spectral::new(g);
            let direct = f.norm_sqr();
            let spectral = f.spectral_norm_sqr(&mut sp);
            prop_assert!((direct - spectral).abs() <= 1e-10 * direct.max(1.0));
        }
    }
}
