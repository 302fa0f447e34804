//! Analytic harmonic-oscillator eigenstates sampled on a grid.

use std::sync::Arc;

use num_complex::Complex;

use crate::grid::{Dim, Grid, WaveField};
use crate::scalar::Real;

/// Hermite functions `psi_0 .. psi_{count-1}` evaluated at `x`.
pub fn hermite_functions<T: Real>(x: T, count: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let two = T::lit(2.0);
    out.push(T::PI().powf(T::lit(-0.25)) * (-x * x / two).exp());
    if count > 1 {
        out.push(two.sqrt() * x * out[0]);
    }
    for n in 1..count.saturating_sub(1) {
        let nf = T::from_usize_lossy(n);
        let next = (two / (nf + T::one())).sqrt() * x * out[n] - (nf / (nf + T::one())).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// 1D eigenstate `n` (energy `n + 1/2`).
pub fn state_1d<T: Real>(grid: &Arc<Grid<T>>, n: usize) -> WaveField<T> {
    assert_eq!(grid.dim(), Dim::One);
    WaveField::from_fn(grid.clone(), |x, _| Complex::new(hermite_functions(x, n + 1)[n], T::zero()))
}

/// 2D Cartesian product state `psi_a(x) psi_b(y)` (energy `a + b + 1`).
pub fn product_2d<T: Real>(grid: &Arc<Grid<T>>, a: usize, b: usize) -> WaveField<T> {
    assert_eq!(grid.dim(), Dim::Two);
    let m = a.max(b) + 1;
    let table: Vec<Vec<T>> = grid.coords().iter().map(|&x| hermite_functions(x, m)).collect();
    let n = grid.points_per_axis();
    let amps = (0..grid.len())
        .map(|i| Complex::new(table[i / n][a] * table[i % n][b], T::zero()))
        .collect();
    WaveField::new(grid.clone(), amps).expect("length matches grid")
}

/// Nodeless 2D state with angular momentum `l`: `(x + i y)^l exp(-r^2/2) / sqrt(pi l!)`.
/// Energy `|l| + 1` in the lab frame, `|l| + 1 - Omega l` in the rotating frame.
pub fn vortex_2d<T: Real>(grid: &Arc<Grid<T>>, l: i32) -> WaveField<T> {
    assert_eq!(grid.dim(), Dim::Two);
    let m = l.unsigned_abs() as usize;
    let fact: f64 = (1..=m).map(|k| k as f64).product();
    let norm = T::one() / (T::PI() * T::lit(fact)).sqrt();
    WaveField::from_fn(grid.clone(), |x, y| {
        let z = Complex::new(x, if l >= 0 { y } else { -y });
        let mut p = Complex::new(T::one(), T::zero());
        for _ in 0..m {
            p = p * z;
        }
        p * ((-(x * x + y * y) / T::lit(2.0)).exp() * norm)
    })
}

/// Laguerre-Gauss state with `radial` nodes and angular momentum `l`, normalized on the grid.
/// Energy `2 radial + |l| + 1` in the lab frame.
pub fn laguerre_gauss_2d<T: Real>(grid: &Arc<Grid<T>>, radial: usize, l: i32) -> WaveField<T> {
    assert_eq!(grid.dim(), Dim::Two);
    let alpha = T::from_usize_lossy(l.unsigned_abs() as usize);
    let base = vortex_2d(grid, l);
    let amps = grid
        .points()
        .zip(base.amplitudes())
        .map(|((x, y), &b)| b * associated_laguerre(radial, alpha, x * x + y * y))
        .collect();
    WaveField::new(grid.clone(), amps)
        .expect("length matches grid")
        .normalized()
        .expect("non-zero state")
}

fn associated_laguerre<T: Real>(n: usize, alpha: T, x: T) -> T {
    let mut prev = T::one();
    if n == 0 {
        return prev;
    }
    let mut cur = T::one() + alpha - x;
    for k in 1..n {
        let kf = T::from_usize_lossy(k);
        let next = ((T::lit(2.0) * kf + T::one() + alpha - x) * cur - (kf + alpha) * prev) / (kf + T::one());
        prev = cur;
        cur = next;
    }
    cur
}
