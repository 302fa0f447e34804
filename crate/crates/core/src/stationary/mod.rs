//! Stationary solutions of `H phi + g |phi|^2 phi = mu phi`, found by minimizing the
//! squared norm of the residual
//!
//! ```text
//! r = H phi + g |phi|^2 phi - mu~ phi,      mu~ = <phi| H + g |phi|^2 |phi>
//! ```
//!
//! over normalized fields. Excited states are saddle points of the energy but plain
//! minima (zeros) of `|r|^2`, so a descent method converges to them from a close
//! enough guess.
//!
//! The minimizer is a preconditioned Polak-Ribiere conjugate gradient on the unit
//! sphere: real and imaginary parts are the coordinates, each accepted step is
//! retracted by renormalization, and the step length starts from the Gauss-Newton
//! estimate of the linearized residual.

mod continuation;

pub use continuation::{
    continuation_scan, retrace, Branch, BranchPoint, ContinuationOptions, ContinuationParameter, SelfIntersection,
    StopReason,
};


use crate::error::{Error, Result};
use crate::grid::{inner_product, Grid, WaveField};
use crate::hamiltonian::Hamiltonian;
use crate::potentials::PotentialSpec;
use crate::scalar::{czero, Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverWarning {
    /// The solution has fidelity below 0.5 with the initial guess.
    BranchEscape,
}

#[derive(Debug, Clone)]
pub struct StationaryState<T: Real> {
    pub state: WaveField<T>,
    pub mu: T,
    pub g: T,
    pub spec: PotentialSpec<T>,
    pub residual_norm: T,
    pub warnings: Vec<SolverWarning>,
}

#[derive(Debug, Clone)]
pub struct Residual<T: Real> {
    pub phi: WaveField<T>,
    pub mu_tilde: T,
    pub residual_norm: T,
}

/// `phi = H psi + g |psi|^2 psi - mu~ psi` together with `mu~` and `|phi|`.
///
/// The candidate is expected to be normalized; `mu~` is the plain expectation value and
/// is not divided by the norm.
pub fn residual<T: Real>(candidate: &WaveField<T>, spec: &PotentialSpec<T>, g: T) -> Result<Residual<T>> {
    let mut ham = Hamiltonian::new(candidate.grid().clone(), spec);
    let eval = Evaluation::new(&mut ham, candidate.amplitudes(), g);
    let residual_norm = eval.f.sqrt();
    let phi = WaveField::new(candidate.grid().clone(), eval.r)?;
    Ok(Residual { phi, mu_tilde: eval.mu, residual_norm })
}

/// Everything the minimizer needs at one iterate.
struct Evaluation<T: Real> {
    /// `H phi`
    h_phi: Vec<C<T>>,
    r: Vec<C<T>>,
    mu: T,
    /// `|r|^2`
    f: T,
}

impl<T: Real> Evaluation<T> {
    fn new(ham: &mut Hamiltonian<T>, phi: &[C<T>], g: T) -> Self {
        let dv = ham.grid().cell_volume();
        let mut h_phi = vec![czero(); phi.len()];
        ham.apply(phi, &mut h_phi);
        let mut gp = h_phi.clone();
        if g != T::zero() {
            for (o, p) in gp.iter_mut().zip(phi) {
                *o = *o + *p * (g * p.norm_sqr());
            }
        }
        let mu = ham.dot(phi, &gp).re;
        let r: Vec<C<T>> = gp.iter().zip(phi).map(|(a, p)| *a - *p * mu).collect();
        let f = r.iter().map(|a| a.norm_sqr()).sum::<T>() * dv;
        Evaluation { h_phi, r, mu, f }
    }
}

/// `(J - mu) v` where `J v = H v + 2 g |phi|^2 v + g phi^2 conj(v)` is the real-linear
/// derivative of the GP operator at `phi`. `J` is self-adjoint for `Re<.,.>`.
fn apply_jacobian_shifted<T: Real>(
    ham: &mut Hamiltonian<T>,
    phi: &[C<T>],
    g: T,
    mu: T,
    v: &[C<T>],
) -> Vec<C<T>> {
    let mut out = vec![czero(); v.len()];
    ham.apply(v, &mut out);
    for ((o, p), w) in out.iter_mut().zip(phi).zip(v) {
        let mut acc = *o - *w * mu;
        if g != T::zero() {
            acc = acc + *w * (T::lit(2.0) * g * p.norm_sqr()) + (*p * *p) * w.conj() * g;
        }
        *o = acc;
    }
    out
}

/// Gradient of `F(psi) = |r(psi)|^2` with respect to the real coordinates `(Re psi, Im psi)`,
/// expressed as a complex field `G` such that `dF = Re<G, d psi>` (quadrature-weighted).
/// Valid everywhere, not only on the unit sphere.
pub fn residual_gradient<T: Real>(
    candidate: &WaveField<T>,
    spec: &PotentialSpec<T>,
    g: T,
) -> Result<WaveField<T>> {
    let mut ham = Hamiltonian::new(candidate.grid().clone(), spec);
    let phi = candidate.amplitudes();
    let eval = Evaluation::new(&mut ham, phi, g);
    let grad = full_gradient(&mut ham, phi, g, &eval);
    WaveField::new(candidate.grid().clone(), grad)
}

fn full_gradient<T: Real>(ham: &mut Hamiltonian<T>, phi: &[C<T>], g: T, eval: &Evaluation<T>) -> Vec<C<T>> {
    let two = T::lit(2.0);
    let jr = apply_jacobian_shifted(ham, phi, g, eval.mu, &eval.r);
    let r_dot_phi = ham.dot(&eval.r, phi).re;
    // d mu = 2 Re< H phi + 2 g |phi|^2 phi, d phi >
    jr.iter()
        .zip(&eval.h_phi)
        .zip(phi)
        .map(|((j, h), p)| {
            let dmu = *h + *p * (two * g * p.norm_sqr());
            *j * two - dmu * (T::lit(4.0) * r_dot_phi)
        })
        .collect()
}

/// Scalar evaluation of `|r|^2` for any field (used by finite-difference checks).
pub fn residual_norm_sqr<T: Real>(candidate: &WaveField<T>, spec: &PotentialSpec<T>, g: T) -> Result<T> {
    let mut ham = Hamiltonian::new(candidate.grid().clone(), spec);
    Ok(Evaluation::new(&mut ham, candidate.amplitudes(), g).f)
}

#[derive(Debug, Clone, Copy)]
pub struct StationaryOptions {
    /// Target residual norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Iterations without a 1% improvement of the best residual before giving up.
    pub stagnation_window: usize,
    /// Conjugate-gradient restart period.
    pub restart: usize,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        StationaryOptions { tol: 1e-9, max_iter: 200_000, stagnation_window: 4000, restart: 200 }
    }
}

/// Minimizes `|r|^2` from `guess` until the residual norm drops below `opts.tol`.
pub fn solve_stationary<T: Real>(
    guess: &WaveField<T>,
    spec: &PotentialSpec<T>,
    g: T,
    opts: &StationaryOptions,
) -> Result<StationaryState<T>> {
    if !(opts.tol > 0.0) {
        return Err(Error::Config("stationary tolerance must be positive".into()));
    }
    if guess.grid().dim() != spec.dim {
        return Err(Error::Config("guess and potential dimensions differ".into()));
    }
    let grid = guess.grid().clone();
    let dv = grid.cell_volume();
    let mut ham = Hamiltonian::new(grid.clone(), spec);
    let kin = ham.kinetic_diagonal().to_vec();
    let vmin = ham.potential().iter().fold(T::infinity(), |a, &b| a.min(b));
    let tol = T::lit(opts.tol);

    let mut phi = guess.clone().normalized()?.into_amplitudes();
    let mut eval = Evaluation::new(&mut ham, &phi, g);
    let mut best = eval.f.sqrt();
    let mut best_iter = 0usize;
    let mut prev_grad: Option<Vec<C<T>>> = None;
    let mut prev_z: Option<Vec<C<T>>> = None;
    let mut dir: Vec<C<T>> = vec![czero(); phi.len()];
    let mut since_restart = 0usize;

    for iter in 0..opts.max_iter {
        let res = eval.f.sqrt();
        if res < tol {
            let state = WaveField::new(grid.clone(), phi)?;
            let mut warnings = Vec::new();
            if state.fidelity(guess)? < T::lit(0.5) {
                warnings.push(SolverWarning::BranchEscape);
            }
            log::debug!("stationary solver converged in {iter} iterations, mu = {}", eval.mu);
            return Ok(StationaryState { state, mu: eval.mu, g, spec: *spec, residual_norm: res, warnings });
        }
        if res < best * T::lit(0.99) {
            best = res;
            best_iter = iter;
        } else if iter - best_iter > opts.stagnation_window {
            return Err(Error::NonConvergence { iterations: iter, best_residual: best.to_f64_lossy() });
        }

        let mut grad = full_gradient(&mut ham, &phi, g, &eval);
        project_tangent(&mut grad, &phi, dv);
        // preconditioner (|k|^2/2 + c)^-2, then back to the tangent space
        let shift = (eval.mu - vmin).max(T::one());
        let mut z = grad.clone();
        ham.spectral().forward(&mut z);
        for (v, &k2) in z.iter_mut().zip(&kin) {
            let d = k2 + shift;
            *v = *v / (d * d);
        }
        ham.spectral().inverse(&mut z);
        project_tangent(&mut z, &phi, dv);

        let gz = re_dot(&grad, &z, dv);
        let beta = match (&prev_grad, &prev_z) {
            (Some(pg), Some(pz)) if since_restart < opts.restart => {
                let num = grad.iter().zip(pg).zip(&z).map(|((a, b), c)| ((*a - *b).conj() * c).re).sum::<T>() * dv;
                let den = re_dot(pg, pz, dv);
                if den > T::zero() {
                    (num / den).max(T::zero())
                } else {
                    T::zero()
                }
            }
            _ => T::zero(),
        };
        project_tangent(&mut dir, &phi, dv);
        for (d, zz) in dir.iter_mut().zip(&z) {
            *d = *d * beta - *zz;
        }
        since_restart = if beta == T::zero() { 0 } else { since_restart + 1 };
        if re_dot(&grad, &dir, dv) >= T::zero() {
            for (d, zz) in dir.iter_mut().zip(&z) {
                *d = -*zz;
            }
            since_restart = 0;
        }

        // Gauss-Newton step length from the linearized residual
        let two = T::lit(2.0);
        let mut q = apply_jacobian_shifted(&mut ham, &phi, g, eval.mu, &dir);
        let dmu = eval
            .h_phi
            .iter()
            .zip(&phi)
            .zip(&dir)
            .map(|((h, p), d)| ((*h + *p * (two * g * p.norm_sqr())).conj() * d).re)
            .sum::<T>()
            * dv
            * two;
        for (qq, p) in q.iter_mut().zip(&phi) {
            *qq = *qq - *p * dmu;
        }
        let qq = re_dot(&q, &q, dv);
        let mut alpha = if qq > T::zero() { -re_dot(&eval.r, &q, dv) / qq } else { T::zero() };
        if !(alpha > T::zero()) || !alpha.is_finite() {
            alpha = -gz / (re_dot(&grad, &grad, dv).max(T::min_positive_value()));
            alpha = alpha.abs().max(T::lit(1e-12));
        }

        let mut accepted = false;
        for _ in 0..30 {
            let trial = retract(&phi, &dir, alpha, dv);
            let trial_eval = Evaluation::new(&mut ham, &trial, g);
            if trial_eval.f < eval.f {
                phi = trial;
                eval = trial_eval;
                accepted = true;
                break;
            }
            alpha = alpha * T::lit(0.5);
        }
        if !accepted {
            if since_restart == 0 && prev_grad.is_none() {
                return Err(Error::NonConvergence { iterations: iter, best_residual: best.to_f64_lossy() });
            }
            // restart from steepest descent
            prev_grad = None;
            prev_z = None;
            dir.iter_mut().for_each(|d| *d = czero());
            since_restart = 0;
            continue;
        }
        prev_grad = Some(grad);
        prev_z = Some(z);
    }
    Err(Error::NonConvergence { iterations: opts.max_iter, best_residual: best.to_f64_lossy() })
}

fn re_dot<T: Real>(a: &[C<T>], b: &[C<T>], dv: T) -> T {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum::<T>() * dv
}

fn project_tangent<T: Real>(v: &mut [C<T>], phi: &[C<T>], dv: T) {
    let c = re_dot(phi, v, dv);
    for (a, p) in v.iter_mut().zip(phi) {
        *a = *a - *p * c;
    }
}

fn retract<T: Real>(phi: &[C<T>], dir: &[C<T>], alpha: T, dv: T) -> Vec<C<T>> {
    let mut out: Vec<C<T>> = phi.iter().zip(dir).map(|(p, d)| *p + *d * alpha).collect();
    let n = (out.iter().map(|a| a.norm_sqr()).sum::<T>() * dv).sqrt();
    let s = T::one() / n;
    out.iter_mut().for_each(|a| *a = *a * s);
    out
}

/// Pointwise `V + g |phi|^2`.
pub fn effective_potential<T: Real>(state: &StationaryState<T>) -> Vec<T> {
    let spec = &state.spec;
    state
        .state
        .grid()
        .points()
        .zip(state.state.amplitudes())
        .map(|((x, y), a)| spec.eval(x, y) + state.g * a.norm_sqr())
        .collect()
}

/// `d mu / d x0 = <phi| dV/dx0 + g (dphi/dx0) phi* + g phi (dphi*/dx0) |phi>`.
pub fn hellmann_feynman_slope<T: Real>(
    state: &StationaryState<T>,
    dv_dx0: &[T],
    dstate_dx0: &WaveField<T>,
) -> Result<T> {
    let field = &state.state;
    field.grid().ensure_same(dstate_dx0.grid())?;
    if dv_dx0.len() != field.len() {
        return Err(Error::Shape("dV/dx0 length differs from the grid".into()));
    }
    let dvol = field.grid().cell_volume();
    let g = state.g;
    let total = field
        .amplitudes()
        .iter()
        .zip(dstate_dx0.amplitudes())
        .zip(dv_dx0)
        .map(|((p, d), &w)| {
            let dens = p.norm_sqr();
            let d_dens = (*d * p.conj() + *p * d.conj()).re;
            dens * (w + g * d_dens)
        })
        .sum::<T>();
    Ok(total * dvol)
}

/// `dV/dx0` sampled on a grid.
pub fn potential_x0_derivative<T: Real>(grid: &Grid<T>, spec: &PotentialSpec<T>) -> Vec<T> {
    grid.sample(|x, y| spec.d_dx0(x, y))
}

/// Fraction of the norm at `x < x_barrier`.
pub fn localization_left<T: Real>(state: &WaveField<T>, x_barrier: T) -> T {
    let dv = state.grid().cell_volume();
    state
        .grid()
        .points()
        .zip(state.amplitudes())
        .filter(|((x, _), _)| *x < x_barrier)
        .map(|(_, a)| a.norm_sqr())
        .sum::<T>()
        * dv
}

/// Position of the potential maximum separating the dip from the trap center in 1D:
/// the local maximum of `V` between `x0` and `0`, or `x0 / 2` when there is none.
pub fn barrier_position<T: Real>(spec: &PotentialSpec<T>) -> T {
    let x0 = spec.x0;
    if x0 >= T::zero() {
        return x0 / T::lit(2.0);
    }
    let samples = 2000usize;
    let mut best: Option<(T, T)> = None;
    let mut prev = (x0, spec.eval(x0, T::zero()));
    let mut cur = {
        let x = x0 - x0 / T::from_usize_lossy(samples);
        (x, spec.eval(x, T::zero()))
    };
    for i in 2..=samples {
        let x = x0 - x0 * T::from_usize_lossy(i) / T::from_usize_lossy(samples);
        let next = (x, spec.eval(x, T::zero()));
        if cur.1 > prev.1 && cur.1 >= next.1 && best.map_or(true, |b| cur.1 > b.1) {
            best = Some(cur);
        }
        prev = cur;
        cur = next;
    }
    best.map(|b| b.0).unwrap_or(x0 / T::lit(2.0))
}

/// Follows a stationary state from `g = 0` (a linear eigenstate) to `g_target` in
/// `steps` equal increments, solving at each increment from the previous solution.
pub fn continue_in_g<T: Real>(
    linear_state: &WaveField<T>,
    spec: &PotentialSpec<T>,
    g_target: T,
    steps: usize,
    opts: &StationaryOptions,
) -> Result<StationaryState<T>> {
    let steps = steps.max(1);
    let mut current = solve_stationary(linear_state, spec, T::zero(), opts)?;
    for k in 1..=steps {
        let g = g_target * T::from_usize_lossy(k) / T::from_usize_lossy(steps);
        let next = solve_stationary(&current.state, spec, g, opts)?;
        current = next;
    }
    Ok(current)
}

/// Overlap `|<a|b>|^2` for normalized fields.
pub fn population<T: Real>(target: &WaveField<T>, state: &WaveField<T>) -> Result<T> {
    Ok(inner_product(target, state)?.norm_sqr())
}

/// Real-valued copy of a field whose phase is (close to) uniform: the global phase is
/// removed so that the largest amplitude is real and positive.
pub fn remove_global_phase<T: Real>(field: &WaveField<T>) -> WaveField<T> {
    let peak = field
        .amplitudes()
        .iter()
        .copied()
        .fold(czero::<T>(), |a, b| if b.norm_sqr() > a.norm_sqr() { b } else { a });
    if peak.norm_sqr() == T::zero() {
        return field.clone();
    }
    let phase = peak.conj() / peak.norm();
    field.clone().scaled(phase)
}

#[cfg(test)]
mod tests;
