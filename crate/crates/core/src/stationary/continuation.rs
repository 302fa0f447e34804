//! Pseudo-arclength continuation of real 1D stationary states.
//!
//! Unknowns are `u = (phi, mu, p)` with `p` either the dip position or the coupling.
//! Each step predicts along the unit tangent and corrects with Newton's method on
//!
//! ```text
//! H(p) phi + g phi^3 - mu phi = 0
//! (|phi|^2 - 1) / 2           = 0
//! t . (u - u_prev)            = ds
//! ```
//!
//! The Jacobian is assembled densely (spectral kinetic matrix plus diagonal terms) and
//! solved by LU. Turning points in `p` are regular points of this system, so loops are
//! traversed as one connected curve.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{barrier_position, StationaryState};
use crate::error::{Error, Result};
use crate::grid::{Dim, Grid, WaveField};
use crate::hamiltonian::kinetic_diagonal;
use crate::linalg::solve_real;
use crate::potentials::PotentialSpec;
use crate::scalar::{Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContinuationParameter {
    /// dip position `x0`
    DipPosition,
    /// interaction strength `g`
    Coupling,
}

#[derive(Debug, Clone, Copy)]
pub struct ContinuationOptions {
    pub ds_initial: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_points: usize,
    /// Newton stops once the weighted norm of the equations is below this.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Minimum fidelity between consecutive states.
    pub fidelity_min: f64,
    /// How far the parameter may leave `[start, end]` before tracing stops.
    pub overshoot: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            ds_initial: 0.02,
            ds_min: 1e-6,
            ds_max: 0.05,
            max_points: 20_000,
            newton_tol: 1e-10,
            max_newton: 12,
            fidelity_min: 0.9,
            overshoot: 1.0,
        }
    }
}

impl ContinuationOptions {
    fn validate(&self) -> Result<()> {
        let ok = self.ds_min > 0.0
            && self.ds_initial >= self.ds_min
            && self.ds_max >= self.ds_initial
            && self.newton_tol > 0.0
            && self.max_newton > 0
            && self.max_points > 1
            && (0.0..1.0).contains(&self.fidelity_min)
            && self.overshoot >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("inconsistent continuation options {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    /// The end of the requested parameter range was reached.
    Reached,
    /// The branch left the parameter window without reaching the end.
    OutOfRange,
    MaxPoints,
    /// The corrector failed below the minimum step.
    CorrectorFailure { p: f64, ds: f64 },
}

#[derive(Debug, Clone)]
pub struct BranchPoint<T: Real> {
    pub x0: T,
    pub g: T,
    pub mu: T,
    pub arclength: T,
    pub residual_norm: T,
    pub localization_left: T,
    pub state: WaveField<T>,
    /// `d phi / dp` from the branch tangent; infinite slopes show up at folds.
    pub dstate_dp: WaveField<T>,
    /// `d mu / dp` from the branch tangent.
    pub dmu_dp: T,
    /// parameter component of the unit tangent
    pub tangent_p: T,
}

impl<T: Real> BranchPoint<T> {
    pub fn parameter(&self, which: ContinuationParameter) -> T {
        match which {
            ContinuationParameter::DipPosition => self.x0,
            ContinuationParameter::Coupling => self.g,
        }
    }

    pub fn to_stationary(&self, spec: &PotentialSpec<T>) -> StationaryState<T> {
        StationaryState {
            state: self.state.clone(),
            mu: self.mu,
            g: self.g,
            spec: spec.with_x0(self.x0),
            residual_norm: self.residual_norm,
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Branch<T: Real> {
    pub label: String,
    pub parameter: ContinuationParameter,
    pub spec: PotentialSpec<T>,
    pub points: Vec<BranchPoint<T>>,
    pub stop: StopReason,
}

/// Crossing of two non-adjacent segments of a branch in the `(x0, mu)` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfIntersection {
    /// Index of the first point of the earlier segment and the interpolation weight in it.
    pub first: (usize, f64),
    pub second: (usize, f64),
    pub x0: f64,
    pub mu: f64,
}

impl<T: Real> Branch<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices `i` where the parameter direction reverses between points `i` and `i + 1`.
    pub fn folds(&self) -> Vec<usize> {
        self.points
            .windows(2)
            .enumerate()
            .filter(|(_, w)| (w[0].tangent_p * w[1].tangent_p) < T::zero())
            .map(|(i, _)| i)
            .collect()
    }

    /// True when some parameter value is visited more than once.
    pub fn is_multivalued(&self) -> bool {
        !self.folds().is_empty()
    }

    pub fn self_intersections(&self) -> Vec<SelfIntersection> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .map(|p| (p.parameter(self.parameter).to_f64_lossy(), p.mu.to_f64_lossy()))
            .collect();
        let mut found = Vec::new();
        for i in 0..pts.len().saturating_sub(1) {
            for j in i + 2..pts.len().saturating_sub(1) {
                if let Some((a, b)) = segment_intersection(pts[i], pts[i + 1], pts[j], pts[j + 1]) {
                    let x0 = pts[i].0 + a * (pts[i + 1].0 - pts[i].0);
                    let mu = pts[i].1 + a * (pts[i + 1].1 - pts[i].1);
                    found.push(SelfIntersection { first: (i, a), second: (j, b), x0, mu });
                }
            }
        }
        found
    }

    /// Linear interpolation of the left-well fraction at a fractional position.
    pub fn localization_at(&self, (i, w): (usize, f64)) -> f64 {
        let a = self.points[i].localization_left.to_f64_lossy();
        let b = self.points[(i + 1).min(self.points.len() - 1)].localization_left.to_f64_lossy();
        a + w * (b - a)
    }

    pub fn write_csv<W: Write>(&self, branch_id: usize, out: &mut W, header: bool) -> Result<()> {
        if header {
            writeln!(out, "branch_id,arclength,x0,mu,residual_norm,localization_left,g")?;
        }
        for p in &self.points {
            writeln!(
                out,
                "{branch_id},{},{},{},{:e},{},{}",
                p.arclength,
                p.x0,
                p.mu,
                p.residual_norm.to_f64_lossy(),
                p.localization_left,
                p.g
            )?;
        }
        Ok(())
    }
}

fn segment_intersection(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> Option<(f64, f64)> {
    let r = (p2.0 - p1.0, p2.1 - p1.1);
    let s = (q2.0 - q1.0, q2.1 - q1.1);
    let den = r.0 * s.1 - r.1 * s.0;
    if den.abs() < 1e-300 {
        return None;
    }
    let qp = (q1.0 - p1.0, q1.1 - p1.1);
    let a = (qp.0 * s.1 - qp.1 * s.0) / den;
    let b = (qp.0 * r.1 - qp.1 * r.0) / den;
    if (0.0..1.0).contains(&a) && (0.0..1.0).contains(&b) {
        Some((a, b))
    } else {
        None
    }
}

/// The discretized problem in `f64`.
struct System<T: Real> {
    grid: Arc<Grid<T>>,
    spec: PotentialSpec<T>,
    parameter: ContinuationParameter,
    x: Vec<f64>,
    dx: f64,
    /// dense kinetic matrix, circulant
    kinetic: DMatrix<f64>,
    /// `(g, x0)` held fixed for the parameter that is not continued
    g_fixed: f64,
    x0_fixed: f64,
}

impl<T: Real> System<T> {
    fn new(grid: Arc<Grid<T>>, spec: PotentialSpec<T>, parameter: ContinuationParameter, g: f64) -> Self {
        let n = grid.len();
        let x: Vec<f64> = grid.coords().iter().map(|v| v.to_f64_lossy()).collect();
        let dx = grid.spacing().to_f64_lossy();
        let kd: Vec<f64> = kinetic_diagonal(&grid).iter().map(|v| v.to_f64_lossy()).collect();
        let ks: Vec<f64> = grid.wavenumbers().iter().map(|v| v.to_f64_lossy()).collect();
        // first column of the circulant: c_m = (1/n) sum_k (k^2/2) cos(k x_m), x_m = m dx
        let col: Vec<f64> = (0..n)
            .map(|m| {
                let xm = m as f64 * dx;
                kd.iter().zip(&ks).map(|(e, k)| e * (k * xm).cos()).sum::<f64>() / n as f64
            })
            .collect();
        let kinetic = DMatrix::from_fn(n, n, |i, j| col[(i + n - j) % n]);
        System { x0_fixed: spec.x0.to_f64_lossy(), grid, spec, parameter, x, dx, kinetic, g_fixed: g }
    }

    fn n(&self) -> usize {
        self.x.len()
    }

    fn split(&self, p: f64) -> (f64, f64) {
        match self.parameter {
            ContinuationParameter::DipPosition => (p, self.g_fixed),
            ContinuationParameter::Coupling => (self.x0_fixed, p),
        }
    }

    fn spec_at(&self, x0: f64) -> PotentialSpec<T> {
        self.spec.with_x0(T::lit(x0))
    }

    fn potential(&self, x0: f64) -> (Vec<f64>, Vec<f64>) {
        let s = self.spec_at(x0);
        let v = self.x.iter().map(|&x| s.eval(T::lit(x), T::zero()).to_f64_lossy()).collect();
        let dv = self.x.iter().map(|&x| s.d_dx0(T::lit(x), T::zero()).to_f64_lossy()).collect();
        (v, dv)
    }

    /// Equations `G` (n entries) and `N`, plus the Jacobian block with columns
    /// `(phi, mu, p)` and rows `(G, N)`.
    fn equations(&self, u: &[f64], with_jacobian: bool) -> (Vec<f64>, Option<DMatrix<f64>>) {
        let n = self.n();
        let phi = &u[..n];
        let mu = u[n];
        let p = u[n + 1];
        let (x0, g) = self.split(p);
        let (v, dv) = self.potential(x0);
        let phi_vec = DVector::from_column_slice(phi);
        let t_phi = &self.kinetic * &phi_vec;
        let mut f = vec![0.0; n + 1];
        for i in 0..n {
            f[i] = t_phi[i] + (v[i] + g * phi[i] * phi[i] - mu) * phi[i];
        }
        f[n] = 0.5 * (phi.iter().map(|a| a * a).sum::<f64>() * self.dx - 1.0);
        if !with_jacobian {
            return (f, None);
        }
        let mut jac = DMatrix::<f64>::zeros(n + 1, n + 2);
        jac.view_mut((0, 0), (n, n)).copy_from(&self.kinetic);
        for i in 0..n {
            jac[(i, i)] += v[i] + 3.0 * g * phi[i] * phi[i] - mu;
            jac[(i, n)] = -phi[i];
            jac[(i, n + 1)] = match self.parameter {
                ContinuationParameter::DipPosition => dv[i] * phi[i],
                ContinuationParameter::Coupling => phi[i] * phi[i] * phi[i],
            };
            jac[(n, i)] = phi[i] * self.dx;
        }
        (f, Some(jac))
    }

    /// Weighted inner product: quadrature weight on the field part.
    fn wdot(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.n();
        a[..n].iter().zip(&b[..n]).map(|(x, y)| x * y).sum::<f64>() * self.dx + a[n] * b[n] + a[n + 1] * b[n + 1]
    }

    fn bordered(&self, jac: DMatrix<f64>, row: &[f64]) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::<f64>::zeros(n + 2, n + 2);
        m.view_mut((0, 0), (n + 1, n + 2)).copy_from(&jac);
        for (j, r) in row.iter().enumerate() {
            m[(n + 1, j)] = *r;
        }
        m
    }

    /// Unit tangent at a converged point; `hint` fixes orientation, or `None` to use
    /// the parameter direction `sign`.
    fn tangent(&self, u: &[f64], hint: Option<&[f64]>, sign: f64) -> Result<Vec<f64>> {
        let n = self.n();
        let (_, jac) = self.equations(u, true);
        let row: Vec<f64> = match hint {
            Some(t) => self.weighted(t),
            None => {
                let mut e = vec![0.0; n + 2];
                e[n + 1] = 1.0;
                e
            }
        };
        let m = self.bordered(jac.expect("jacobian requested"), &row);
        let mut rhs = DVector::<f64>::zeros(n + 2);
        rhs[n + 1] = 1.0;
        let t = solve_real(m, rhs)?;
        let mut t: Vec<f64> = t.iter().copied().collect();
        let norm = self.wdot(&t, &t).sqrt();
        let s = if hint.is_none() && sign < 0.0 { -1.0 } else { 1.0 };
        t.iter_mut().for_each(|a| *a *= s / norm);
        Ok(t)
    }

    fn weighted(&self, t: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut w = t.to_vec();
        w[..n].iter_mut().for_each(|a| *a *= self.dx);
        w
    }

    /// Newton iteration with the last equation `row . u = rhs`.
    fn newton(&self, mut u: Vec<f64>, row: &[f64], rhs: f64, tol: f64, max_iter: usize) -> Option<(Vec<f64>, usize)> {
        let n = self.n();
        for it in 0..=max_iter {
            let (f, jac) = self.equations(&u, true);
            let extra = row.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() - rhs;
            let norm = (f[..n].iter().map(|a| a * a).sum::<f64>() * self.dx + f[n] * f[n] + extra * extra).sqrt();
            if !norm.is_finite() {
                return None;
            }
            if norm < tol {
                return Some((u, it));
            }
            if it == max_iter {
                break;
            }
            let m = self.bordered(jac.expect("jacobian requested"), row);
            let mut b = DVector::<f64>::zeros(n + 2);
            for i in 0..=n {
                b[i] = -f[i];
            }
            b[n + 1] = -extra;
            let delta = solve_real(m, b).ok()?;
            for (a, d) in u.iter_mut().zip(delta.iter()) {
                *a += d;
            }
        }
        None
    }

    fn residual_norm(&self, u: &[f64]) -> f64 {
        let n = self.n();
        let (f, _) = self.equations(u, false);
        (f[..n].iter().map(|a| a * a).sum::<f64>() * self.dx).sqrt()
    }

    fn point(&self, u: &[f64], t: &[f64], arclength: f64) -> Result<BranchPoint<T>> {
        let n = self.n();
        let (x0, g) = self.split(u[n + 1]);
        let state = WaveField::new(self.grid.clone(), u[..n].iter().map(|&a| C::new(T::lit(a), T::zero())).collect())?;
        let tp = t[n + 1];
        let dstate = WaveField::new(
            self.grid.clone(),
            t[..n].iter().map(|&a| C::new(T::lit(a / tp), T::zero())).collect(),
        )?;
        let barrier = barrier_position(&self.spec_at(x0));
        Ok(BranchPoint {
            x0: T::lit(x0),
            g: T::lit(g),
            mu: T::lit(u[n]),
            arclength: T::lit(arclength),
            residual_norm: T::lit(self.residual_norm(u)),
            localization_left: super::localization_left(&state, barrier),
            state,
            dstate_dp: dstate,
            dmu_dp: T::lit(t[n] / tp),
            tangent_p: T::lit(tp),
        })
    }

    fn fidelity(&self, a: &[f64], b: &[f64]) -> f64 {
        let o = a[..self.n()].iter().zip(&b[..self.n()]).map(|(x, y)| x * y).sum::<f64>() * self.dx;
        o * o
    }
}

fn real_seed<T: Real>(seed: &StationaryState<T>) -> Result<Vec<f64>> {
    let field = super::remove_global_phase(&seed.state);
    let re: Vec<f64> = field.amplitudes().iter().map(|a| a.re.to_f64_lossy()).collect();
    let im_norm: f64 = field.amplitudes().iter().map(|a| a.im.to_f64_lossy().powi(2)).sum::<f64>();
    let re_norm: f64 = re.iter().map(|a| a * a).sum::<f64>();
    if im_norm > 1e-10 * re_norm {
        return Err(Error::Unsupported("continuation requires a real-valued seed state".into()));
    }
    Ok(re)
}

/// Traces the branch through `seed` from its current parameter value towards `p_end`.
///
/// The returned branch may be truncated; `Branch::stop` says why. The first point is the
/// seed re-converged on the dense discretization.
pub fn continuation_scan<T: Real>(
    seed: &StationaryState<T>,
    parameter: ContinuationParameter,
    p_end: T,
    opts: &ContinuationOptions,
) -> Result<Branch<T>> {
    opts.validate()?;
    let grid = seed.state.grid().clone();
    if grid.dim() != Dim::One {
        return Err(Error::Unsupported("continuation is implemented for 1D states".into()));
    }
    if seed.spec.omega != T::zero() && seed.spec.dim == Dim::Two {
        return Err(Error::Unsupported("continuation of rotating states".into()));
    }
    let sys = System::new(grid, seed.spec, parameter, seed.g.to_f64_lossy());
    let p_start = match parameter {
        ContinuationParameter::DipPosition => seed.spec.x0,
        ContinuationParameter::Coupling => seed.g,
    }
    .to_f64_lossy();
    let mut u0 = real_seed(seed)?;
    u0.push(seed.mu.to_f64_lossy());
    u0.push(p_start);
    trace(&sys, u0, None, p_start, p_end.to_f64_lossy(), opts, format!("{parameter:?}"))
}

/// Continues backwards from the last point of `branch` until the parameter returns to
/// the value at its first point.
pub fn retrace<T: Real>(branch: &Branch<T>, g: T, opts: &ContinuationOptions) -> Result<Branch<T>> {
    opts.validate()?;
    let last = branch.points.last().ok_or_else(|| Error::Domain("empty branch".into()))?;
    let first = &branch.points[0];
    let grid = last.state.grid().clone();
    let spec = match branch.parameter {
        ContinuationParameter::DipPosition => branch.spec.with_x0(last.x0),
        ContinuationParameter::Coupling => branch.spec,
    };
    let sys = System::new(grid, spec, branch.parameter, g.to_f64_lossy());
    let mut u0: Vec<f64> = last.state.amplitudes().iter().map(|a| a.re.to_f64_lossy()).collect();
    u0.push(last.mu.to_f64_lossy());
    let p_last = last.parameter(branch.parameter).to_f64_lossy();
    u0.push(p_last);
    // reversed tangent
    let mut hint: Vec<f64> = last.dstate_dp.amplitudes().iter().map(|a| a.re.to_f64_lossy()).collect();
    hint.push(last.dmu_dp.to_f64_lossy());
    hint.push(1.0);
    let tp = last.tangent_p.to_f64_lossy();
    hint.iter_mut().for_each(|a| *a *= -tp);
    let p_first = first.parameter(branch.parameter).to_f64_lossy();
    let label = format!("{} (retraced)", branch.label);
    trace(&sys, u0, Some(hint), p_last, p_first, opts, label)
}

fn trace<T: Real>(
    sys: &System<T>,
    u_seed: Vec<f64>,
    hint: Option<Vec<f64>>,
    p_start: f64,
    p_end: f64,
    opts: &ContinuationOptions,
    label: String,
) -> Result<Branch<T>> {
    let n = sys.n();
    let direction = if p_end >= p_start { 1.0 } else { -1.0 };
    let lo = p_start.min(p_end) - opts.overshoot;
    let hi = p_start.max(p_end) + opts.overshoot;

    // re-converge the seed with p fixed
    let mut fix = vec![0.0; n + 2];
    fix[n + 1] = 1.0;
    let (mut u, _) = sys
        .newton(u_seed, &fix, p_start, opts.newton_tol, 4 * opts.max_newton)
        .ok_or(Error::NonConvergence { iterations: 4 * opts.max_newton, best_residual: f64::NAN })?;
    let mut t = match hint {
        Some(h) => {
            let h = {
                let mut h = h;
                let norm = sys.wdot(&h, &h).sqrt();
                h.iter_mut().for_each(|a| *a /= norm);
                h
            };
            sys.tangent(&u, Some(&h), direction)?
        }
        None => sys.tangent(&u, None, direction)?,
    };

    let mut points = vec![sys.point(&u, &t, 0.0)?];
    let mut arclength = 0.0;
    let mut ds = opts.ds_initial;
    let stop;
    loop {
        if points.len() >= opts.max_points {
            stop = StopReason::MaxPoints;
            break;
        }
        let predictor: Vec<f64> = u.iter().zip(&t).map(|(a, b)| a + ds * b).collect();
        let row = sys.weighted(&t);
        let rhs = row.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() + ds;
        let corrected = sys
            .newton(predictor, &row, rhs, opts.newton_tol, opts.max_newton)
            .filter(|(v, _)| sys.fidelity(v, &u) > opts.fidelity_min);
        let Some((u_new, iters)) = corrected else {
            ds *= 0.5;
            if ds < opts.ds_min {
                stop = StopReason::CorrectorFailure { p: u[n + 1], ds };
                break;
            }
            continue;
        };
        let p_prev = u[n + 1];
        let p_new = u_new[n + 1];
        if (p_new - p_end) * (p_prev - p_end) <= 0.0 && p_new != p_prev {
            // land exactly on p_end
            let w = (p_end - p_prev) / (p_new - p_prev);
            let guess: Vec<f64> = u.iter().zip(&u_new).map(|(a, b)| a + w * (b - a)).collect();
            if let Some((u_end, _)) = sys.newton(guess, &fix, p_end, opts.newton_tol, 4 * opts.max_newton) {
                let t_end = sys.tangent(&u_end, Some(&t), direction)?;
                let delta: Vec<f64> = u_end.iter().zip(&u).map(|(a, b)| a - b).collect();
                arclength += sys.wdot(&delta, &delta).sqrt();
                points.push(sys.point(&u_end, &t_end, arclength)?);
                stop = StopReason::Reached;
                break;
            }
        }
        let t_new = sys.tangent(&u_new, Some(&t), direction)?;
        arclength += ds;
        points.push(sys.point(&u_new, &t_new, arclength)?);
        u = u_new;
        t = t_new;
        if !(lo..=hi).contains(&u[n + 1]) {
            stop = StopReason::OutOfRange;
            break;
        }
        if iters <= 3 {
            ds = (ds * 1.3).min(opts.ds_max);
        }
    }
    log::debug!("branch {label}: {} points, stop {:?}", points.len(), stop);
    Ok(Branch { label, parameter: sys.parameter, spec: sys.spec, points, stop })
}

#[cfg(test)]
pub(super) fn segment_intersection_for_tests(
    p1: (f64, f64),
    p2: (f64, f64),
    q1: (f64, f64),
    q2: (f64, f64),
) -> Option<(f64, f64)> {
    segment_intersection(p1, p2, q1, q2)
}
