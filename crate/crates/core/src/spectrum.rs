//! Low-lying eigenpairs of the single-particle Hamiltonian and their dependence on the
//! dip position.
//!
//! The eigensolver is a preconditioned block iteration of LOBPCG type: each step
//! builds the subspace `[X, K^-1 R, P]` (current vectors, preconditioned residuals,
//! previous search directions) and does a Rayleigh-Ritz projection in it. The
//! preconditioner `K = |k|^2/2 + c` is diagonal in Fourier space. All arithmetic is
//! complex so the rotating-frame operator is handled as the Hermitian matrix it is.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Dim, Grid, WaveField};
use crate::hamiltonian::Hamiltonian;
use crate::linalg::hermitian_eigen;
use crate::oscillator;
use crate::potentials::PotentialSpec;
use crate::scalar::{czero, Real, C};

#[derive(Debug, Clone)]
pub struct LinearOperatorSpec<T: Real> {
    pub grid: Arc<Grid<T>>,
    pub potential: PotentialSpec<T>,
}

impl<T: Real> LinearOperatorSpec<T> {
    pub fn new(grid: Arc<Grid<T>>, potential: PotentialSpec<T>) -> Result<Self> {
        potential.validate()?;
        if grid.dim() != potential.dim {
            return Err(Error::Config("grid and potential dimensions differ".into()));
        }
        Ok(LinearOperatorSpec { grid, potential })
    }

    pub fn omega(&self) -> T {
        self.potential.omega
    }

    pub fn with_x0(&self, x0: T) -> Self {
        LinearOperatorSpec { grid: self.grid.clone(), potential: self.potential.with_x0(x0) }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair<T: Real> {
    pub energy: T,
    pub state: WaveField<T>,
    pub residual: T,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Convergence threshold on `||H psi - E psi|| / max(1, |E|)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Extra block vectors beyond the requested count.
    pub guard: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { tol: 1e-9, max_iter: 3000, guard: 3 }
    }
}

/// The `count` lowest eigenpairs, ascending in energy.
pub fn lowest_eigenpairs<T: Real>(
    op: &LinearOperatorSpec<T>,
    count: usize,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair<T>>> {
    let mut ham = Hamiltonian::new(op.grid.clone(), &op.potential);
    let guesses = initial_guesses(op, count + opts.guard);
    let (pairs, _) = block_eigensolve(&mut ham, guesses, count, opts)?;
    Ok(pairs)
}

/// Oscillator states ranked by energy in the (rotating) trap plus a Gaussian seated in the
/// dip, with a small deterministic perturbation so no symmetry sector is missed.
fn initial_guesses<T: Real>(op: &LinearOperatorSpec<T>, block: usize) -> Vec<Vec<C<T>>> {
    let grid = &op.grid;
    let spec = &op.potential;
    let mut out: Vec<Vec<C<T>>> = Vec::with_capacity(block);
    let with_dip = spec.u0 > T::zero() && spec.dip_strength() < T::zero();
    let n_trap = if with_dip { block - 1 } else { block };
    match grid.dim() {
        Dim::One => {
            for n in 0..n_trap {
                out.push(oscillator::state_1d(grid, n).into_amplitudes());
            }
        }
        Dim::Two => {
            let omega = spec.omega.to_f64_lossy();
            let mut labels = Vec::new();
            for radial in 0..8usize {
                for l in -12i32..=12 {
                    let e = 2.0 * radial as f64 + l.abs() as f64 + 1.0 - omega * l as f64;
                    labels.push((e, radial, l));
                }
            }
            labels.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
            for &(_, radial, l) in labels.iter().take(n_trap) {
                out.push(oscillator::laguerre_gauss_2d(grid, radial, l).into_amplitudes());
            }
        }
    }
    if with_dip {
        let x0 = spec.x0;
        let width = spec.sigma;
        let dip = WaveField::from_fn(grid.clone(), |x, y| {
            let r2 = (x - x0) * (x - x0) + y * y;
            Complex::new((-r2 / (T::lit(2.0) * width * width)).exp(), T::zero())
        });
        out.push(dip.into_amplitudes());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let eps = T::lit(1e-4);
    for v in &mut out {
        for (a, (x, y)) in v.iter_mut().zip(grid.points()) {
            let env = (-(x * x + y * y) / T::lit(8.0)).exp();
            let re = T::lit(rng.gen_range(-1.0..1.0));
            let im = T::lit(rng.gen_range(-1.0..1.0));
            *a = *a + Complex::new(re, im) * (eps * env);
        }
    }
    out
}

/// Block eigensolver on an assembled Hamiltonian. Returns the converged pairs and the
/// full final block (useful for warm starts).
pub(crate) fn block_eigensolve<T: Real>(
    ham: &mut Hamiltonian<T>,
    initial: Vec<Vec<C<T>>>,
    count: usize,
    opts: &EigenOptions,
) -> Result<(Vec<EigenPair<T>>, Vec<Vec<C<T>>>)> {
    let grid = ham.grid().clone();
    let m = initial.len();
    if count == 0 || m < count || m * 4 > grid.len() {
        return Err(Error::Config(format!(
            "eigenpair count {count} (block {m}) incompatible with grid of {} points",
            grid.len()
        )));
    }
    let dv = grid.cell_volume();
    let mut x = orthonormalize(ham, Vec::new(), initial, dv);
    if x.len() < m {
        return Err(Error::Domain("initial block is rank deficient".into()));
    }
    let mut ax: Vec<Vec<C<T>>> = x.iter().map(|v| apply(ham, v)).collect();
    let mut p: Vec<Vec<C<T>>> = Vec::new();
    let vmin = ham.potential().iter().fold(T::infinity(), |a, &b| a.min(b));
    let kin = ham.kinetic_diagonal().to_vec();
    let tol = T::lit(opts.tol);

    // initial Rayleigh-Ritz
    let (mut lambda, xs, axs, _) = rayleigh_ritz(ham, &x, &ax, &[], &[], m, dv);
    x = xs;
    ax = axs;
    let mut worst = T::infinity();

    for iter in 0..opts.max_iter {
        let residuals: Vec<Vec<C<T>>> = (0..m)
            .map(|i| ax[i].iter().zip(&x[i]).map(|(a, b)| *a - *b * lambda[i]).collect())
            .collect();
        let res_norms: Vec<T> = residuals.iter().map(|r| norm(r, dv)).collect();
        worst = (0..count)
            .map(|i| res_norms[i] / lambda[i].abs().max(T::one()))
            .fold(T::zero(), |a, b| a.max(b));
        if worst < tol {
            let pairs = (0..count)
                .map(|i| EigenPair {
                    energy: lambda[i],
                    state: WaveField::new(grid.clone(), x[i].clone()).expect("grid length"),
                    residual: res_norms[i],
                })
                .collect();
            log::debug!("eigensolver converged in {iter} iterations");
            return Ok((pairs, x));
        }
        // preconditioned residuals for every vector that is not yet converged
        let shift = (lambda[m - 1] - vmin).max(T::one());
        let mut w = Vec::new();
        for i in 0..m {
            if res_norms[i] / lambda[i].abs().max(T::one()) < tol * T::lit(0.01) {
                continue;
            }
            let mut r = residuals[i].clone();
            ham.spectral().forward(&mut r);
            for (v, &k2) in r.iter_mut().zip(&kin) {
                *v = *v / (k2 + shift);
            }
            ham.spectral().inverse(&mut r);
            w.push(r);
        }
        let mut extra = w;
        extra.append(&mut p);
        let basis_extra = orthonormalize(ham, x.clone(), extra, dv);
        let a_extra: Vec<Vec<C<T>>> = basis_extra.iter().map(|v| apply(ham, v)).collect();
        let (l, xs, axs, ps) = rayleigh_ritz(ham, &x, &ax, &basis_extra, &a_extra, m, dv);
        lambda = l;
        x = xs;
        ax = axs;
        p = ps;
        // keep the block orthonormal against accumulated rounding
        if iter % 20 == 19 {
            x = orthonormalize(ham, Vec::new(), x, dv);
            ax = x.iter().map(|v| apply(ham, v)).collect();
            let (l, xs, axs, _) = rayleigh_ritz(ham, &x, &ax, &[], &[], m, dv);
            lambda = l;
            x = xs;
            ax = axs;
        }
    }
    Err(Error::EigenNonConvergence { iterations: opts.max_iter, residual: worst.to_f64_lossy() })
}

fn apply<T: Real>(ham: &mut Hamiltonian<T>, v: &[C<T>]) -> Vec<C<T>> {
    let mut out = vec![czero(); v.len()];
    ham.apply(v, &mut out);
    out
}

fn norm<T: Real>(v: &[C<T>], dv: T) -> T {
    (v.iter().map(|a| a.norm_sqr()).sum::<T>() * dv).sqrt()
}

fn dot<T: Real>(a: &[C<T>], b: &[C<T>], dv: T) -> C<T> {
    crate::grid::raw_inner_product(a, b) * dv
}

/// Gram-Schmidt (two passes) of `candidates` against the orthonormal `fixed` set and each
/// other; near-dependent candidates are dropped. Returns only the new vectors when
/// `fixed` is non-empty, otherwise the orthonormalized candidates.
fn orthonormalize<T: Real>(
    _ham: &Hamiltonian<T>,
    fixed: Vec<Vec<C<T>>>,
    candidates: Vec<Vec<C<T>>>,
    dv: T,
) -> Vec<Vec<C<T>>> {
    let mut accepted: Vec<Vec<C<T>>> = Vec::new();
    let drop_tol = T::lit(1e-10);
    for mut v in candidates {
        let start = norm(&v, dv);
        if !(start > T::zero()) {
            continue;
        }
        for _ in 0..2 {
            for q in fixed.iter().chain(accepted.iter()) {
                let c = dot(q, &v, dv);
                for (a, b) in v.iter_mut().zip(q) {
                    *a = *a - *b * c;
                }
            }
        }
        let nv = norm(&v, dv);
        if nv > drop_tol * start {
            let s = T::one() / nv;
            v.iter_mut().for_each(|a| *a = *a * s);
            accepted.push(v);
        }
    }
    accepted
}

type RitzOutput<T> = (Vec<T>, Vec<Vec<C<T>>>, Vec<Vec<C<T>>>, Vec<Vec<C<T>>>);

/// Rayleigh-Ritz in span(x, extra); returns the lowest `m` Ritz values, vectors, their
/// images, and the new search directions (the `extra` components of the Ritz vectors).
fn rayleigh_ritz<T: Real>(
    _ham: &Hamiltonian<T>,
    x: &[Vec<C<T>>],
    ax: &[Vec<C<T>>],
    extra: &[Vec<C<T>>],
    a_extra: &[Vec<C<T>>],
    m: usize,
    dv: T,
) -> RitzOutput<T> {
    let basis: Vec<&Vec<C<T>>> = x.iter().chain(extra.iter()).collect();
    let images: Vec<&Vec<C<T>>> = ax.iter().chain(a_extra.iter()).collect();
    let s = basis.len();
    let mut gram = vec![czero::<T>(); s * s];
    for i in 0..s {
        for j in i..s {
            let v = dot(basis[i], images[j], dv);
            gram[i * s + j] = v;
            gram[j * s + i] = v.conj();
        }
    }
    let (vals, vecs) = hermitian_eigen(s, &gram);
    let n = x[0].len();
    let nx = x.len();
    let mut lam = Vec::with_capacity(m);
    let mut xs = Vec::with_capacity(m);
    let mut axs = Vec::with_capacity(m);
    let mut ps = Vec::new();
    for k in 0..m {
        lam.push(T::lit(vals[k]));
        let coeffs: Vec<C<T>> =
            vecs[k].iter().map(|c| Complex::new(T::lit(c.re), T::lit(c.im))).collect();
        let mut v = vec![czero(); n];
        let mut av = vec![czero(); n];
        let mut pv = vec![czero(); n];
        for (b, (bv, iv)) in basis.iter().zip(images.iter()).enumerate() {
            let c = coeffs[b];
            for idx in 0..n {
                v[idx] = v[idx] + bv[idx] * c;
                av[idx] = av[idx] + iv[idx] * c;
                if b >= nx {
                    pv[idx] = pv[idx] + bv[idx] * c;
                }
            }
        }
        xs.push(v);
        axs.push(av);
        if !extra.is_empty() {
            ps.push(pv);
        }
    }
    (lam, xs, axs, ps)
}

/// Energies along a scan of dip positions, one curve per level in ascending order.
#[derive(Debug, Clone)]
pub struct LevelCurve<T> {
    pub x0: Vec<T>,
    pub energy: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct LevelScan<T> {
    pub x0: Vec<T>,
    /// `energies[level][point]`.
    pub energies: Vec<Vec<T>>,
    /// Measured `<L_z>` per level and point (2D only).
    pub lz: Option<Vec<Vec<T>>>,
    /// For each step `i -> i+1` and each level of point `i`, the level of point `i+1`
    /// with the largest eigenvector overlap.
    pub overlap_successor: Vec<Vec<usize>>,
}

impl<T: Real> LevelScan<T> {
    pub fn curve(&self, level: usize) -> LevelCurve<T> {
        LevelCurve { x0: self.x0.clone(), energy: self.energies[level].clone() }
    }

    pub fn curves(&self) -> Vec<LevelCurve<T>> {
        (0..self.energies.len()).map(|l| self.curve(l)).collect()
    }

    /// CSV with columns `x0,E_0,...,E_{count-1}`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "x0")?;
        for l in 0..self.energies.len() {
            write!(out, ",E_{l}")?;
        }
        writeln!(out)?;
        for (i, x0) in self.x0.iter().enumerate() {
            write!(out, "{:.10e}", x0.to_f64_lossy())?;
            for level in &self.energies {
                write!(out, ",{:.15e}", level[i].to_f64_lossy())?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Eigenvalues for each dip position in `x0_values` (monotone). Points are solved in
/// order with each one warm-started from the previous block, which also yields the
/// overlap-based level tracking.
pub fn level_scan<T: Real>(
    template: &LinearOperatorSpec<T>,
    x0_values: &[T],
    count: usize,
    opts: &EigenOptions,
) -> Result<LevelScan<T>> {
    if x0_values.is_empty() {
        return Err(Error::Config("empty x0 list".into()));
    }
    let increasing = x0_values.windows(2).all(|w| w[1] > w[0]);
    let decreasing = x0_values.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(Error::Config("x0 values must be strictly monotone".into()));
    }
    let two_d = template.grid.dim() == Dim::Two;
    let mut energies = vec![Vec::with_capacity(x0_values.len()); count];
    let mut lz = if two_d { Some(vec![Vec::with_capacity(x0_values.len()); count]) } else { None };
    let mut successors = Vec::new();
    let mut warm: Option<Vec<Vec<C<T>>>> = None;
    let mut prev_states: Option<Vec<WaveField<T>>> = None;
    let mut ham = Hamiltonian::new(template.grid.clone(), &template.potential);

    for &x0 in x0_values {
        let op = template.with_x0(x0);
        ham.set_potential(&op.potential);
        let mut guesses = initial_guesses(&op, count + opts.guard);
        if let Some(prev) = warm.take() {
            // previous block first, then the fresh dip-seated guess to catch new bound states
            let dip_guess = guesses.pop();
            guesses = prev;
            if let Some(d) = dip_guess {
                guesses.pop();
                guesses.push(d);
            }
        }
        let (pairs, block) = block_eigensolve(&mut ham, guesses, count, opts)
            .map_err(|e| Error::AtDipCenter { x0: x0.to_f64_lossy(), source: Box::new(e) })?;
        for (l, pair) in pairs.iter().enumerate() {
            energies[l].push(pair.energy);
            if let Some(lz) = lz.as_mut() {
                lz[l].push(ham.lz_expectation(&pair.state)?);
            }
        }
        let states: Vec<WaveField<T>> = pairs.into_iter().map(|p| p.state).collect();
        if let Some(prev) = prev_states.as_ref() {
            let mut succ = Vec::with_capacity(count);
            for a in prev {
                let mut best = (0, T::zero());
                for (j, b) in states.iter().enumerate() {
                    let f = a.fidelity(b)?;
                    if f > best.1 {
                        best = (j, f);
                    }
                }
                succ.push(best.0);
            }
            successors.push(succ);
        }
        prev_states = Some(states);
        warm = Some(block);
    }
    Ok(LevelScan { x0: x0_values.to_vec(), energies, lz, overlap_successor: successors })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvoidedCrossing<T> {
    pub x0_star: T,
    pub gap: T,
}

/// Location and size of the narrowest interior gap between two curves sampled at the
/// same dip positions, refined by a parabola through the three samples around it.
pub fn find_avoided_crossing<T: Real>(a: &LevelCurve<T>, b: &LevelCurve<T>) -> Result<AvoidedCrossing<T>> {
    if a.x0.len() != b.x0.len() || a.x0.iter().zip(&b.x0).any(|(p, q)| p != q) {
        return Err(Error::Shape("curves must share the same x0 sampling".into()));
    }
    let gap: Vec<T> = a.energy.iter().zip(&b.energy).map(|(p, q)| (*q - *p).abs()).collect();
    let mut best: Option<usize> = None;
    for i in 1..gap.len().saturating_sub(1) {
        if gap[i] < gap[i - 1] && gap[i] < gap[i + 1] && best.map_or(true, |j| gap[i] < gap[j]) {
            best = Some(i);
        }
    }
    let i = best.ok_or(Error::NoCrossing)?;
    let (x1, x2, x3) = (a.x0[i - 1], a.x0[i], a.x0[i + 1]);
    let (y1, y2, y3) = (gap[i - 1], gap[i], gap[i + 1]);
    // Newton divided differences
    let d12 = (y2 - y1) / (x2 - x1);
    let d23 = (y3 - y2) / (x3 - x2);
    let curv = (d23 - d12) / (x3 - x1);
    if !(curv > T::zero()) {
        return Ok(AvoidedCrossing { x0_star: x2, gap: y2 });
    }
    let slope_at_x2 = d12 + curv * (x2 - x1);
    let lo = x1.min(x3);
    let hi = x1.max(x3);
    let xs = (x2 - slope_at_x2 / (T::lit(2.0) * curv)).max(lo).min(hi);
    let value = y2 + slope_at_x2 * (xs - x2) + curv * (xs - x2) * (xs - x2);
    Ok(AvoidedCrossing { x0_star: xs, gap: value.max(T::zero()) })
}

/// Evenly spaced dip positions from `start` to `end` inclusive.
pub fn x0_range<T: Real>(start: T, end: T, step: T) -> Vec<T> {
    let n = ((end - start).abs() / step).round().to_usize().unwrap_or(0);
    let dir = (end - start).signum();
    (0..=n).map(|i| start + dir * step * T::from_usize_lossy(i)).collect()
}
