//! Real-time propagation of the GP equation under a moving dip, imaginary-time
//! relaxation, and observables.

mod crank;
mod imaginary;
mod split;

pub use crank::{crank_nicolson_ground_state, Laplacian};
pub use imaginary::{imaginary_time_ground_state, relax, ImaginaryTimeOptions};

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Dim, Grid, WaveField};
use crate::hamiltonian::{kinetic_diagonal, Hamiltonian};
use crate::potentials::{PotentialSpec, SweepSchedule};
use crate::scalar::{czero, Real, C};

use crank::CrankNicolson;
use split::{Clock, DipPose, SplitStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    SplitStep,
    /// 1D only
    CrankNicolson(Laplacian),
}

/// Frame for 2D spirals. In the lab frame the dip rotates at `Omega`; in the rotating
/// frame it moves radially and `-Omega L_z` enters the kinetic factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Lab,
    Rotating,
}

#[derive(Debug, Clone, Copy)]
pub struct PropagationConfig<T> {
    pub dt: T,
    pub g: T,
    pub method: Method,
    pub frame: Frame,
    /// steps between recorded diagnostics
    pub record_stride: usize,
}

impl<T: Real> PropagationConfig<T> {
    pub fn new(dt: T, g: T) -> Self {
        PropagationConfig { dt, g, method: Method::SplitStep, frame: Frame::Lab, record_stride: 1000 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::Config(format!("time step must be positive, got {}", self.dt)));
        }
        if !self.g.is_finite() {
            return Err(Error::Config("g must be finite".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// A state whose overlap `|<target|psi(t)>|^2` is recorded along the trajectory.
#[derive(Debug, Clone)]
pub struct OverlapTarget<T: Real> {
    pub name: String,
    pub state: WaveField<T>,
}

impl<T: Real> OverlapTarget<T> {
    pub fn new(name: impl Into<String>, state: WaveField<T>) -> Self {
        OverlapTarget { name: name.into(), state }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PropagationWarning {
    /// `dt |V_min|` above 0.1 somewhere along the sweep.
    LargeStep { dt: f64, v_min: f64 },
    /// The requested step did not divide a pass; this one was used.
    StepAdjusted { requested: f64, used: f64 },
    /// Attractive interaction with `dt k_max^2 / 2 > pi`: the split-step scheme has
    /// spurious resonant instabilities in this regime, so refining the grid needs a
    /// smaller step too.
    FocusingResonance { dt: f64, k_max: f64 },
}

#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub norm: Vec<T>,
    pub energy: Vec<T>,
    /// `<L_z>`, 2D only
    pub lz: Option<Vec<T>>,
    /// `(name, |<target|psi>|^2 per recorded time)`
    pub overlaps: Vec<(String, Vec<T>)>,
    /// indices into `times` at the end of each pass
    pub pass_ends: Vec<usize>,
    /// state at the end of each pass
    pub pass_states: Vec<WaveField<T>>,
    pub final_state: WaveField<T>,
    pub frame: Frame,
    /// Angle of the rotating frame at the final time. A lab-frame state equals the
    /// rotating-frame state rotated by this angle.
    pub final_angle: T,
    pub dt_used: T,
    pub warnings: Vec<PropagationWarning>,
}

impl<T: Real> Trajectory<T> {
    pub fn overlap_series(&self, name: &str) -> Option<&[T]> {
        self.overlaps.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// Overlap with `name` at the end of pass `pass` (0-based).
    pub fn overlap_at_pass_end(&self, name: &str, pass: usize) -> Option<T> {
        let idx = *self.pass_ends.get(pass)?;
        self.overlap_series(name).map(|s| s[idx])
    }

    pub fn final_overlap(&self, name: &str) -> Option<T> {
        self.overlap_series(name).and_then(|s| s.last().copied())
    }

    pub fn max_norm_drift(&self) -> T {
        self.norm.iter().map(|&n| (n - T::one()).abs()).fold(T::zero(), T::max)
    }

    /// Columns `t, norm, energy, <overlap names>..., Lz` (the last only in 2D).
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        write!(out, "t,norm,energy")?;
        for (name, _) in &self.overlaps {
            write!(out, ",{name}")?;
        }
        if self.lz.is_some() {
            write!(out, ",Lz")?;
        }
        writeln!(out)?;
        for i in 0..self.times.len() {
            write!(out, "{},{},{}", self.times[i], self.norm[i], self.energy[i])?;
            for (_, s) in &self.overlaps {
                write!(out, ",{}", s[i])?;
            }
            if let Some(lz) = &self.lz {
                write!(out, ",{}", lz[i])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables<T> {
    pub norm: T,
    /// `<H> + g/2 int |psi|^4`, with `-Omega L_z` in `H` for a rotating 2D spec
    pub energy: T,
    /// `<H> + g int |psi|^4`
    pub chemical_potential: T,
    pub lz: Option<T>,
}

pub fn observables<T: Real>(state: &WaveField<T>, spec: &PotentialSpec<T>, g: T) -> Result<Observables<T>> {
    let grid = state.grid();
    if grid.dim() != spec.dim {
        return Err(Error::Config("state and potential dimensions differ".into()));
    }
    let mut ham = Hamiltonian::new(grid.clone(), spec);
    let h = ham.expectation(state)?;
    let quartic = state.amplitudes().iter().map(|a| a.norm_sqr() * a.norm_sqr()).sum::<T>() * grid.cell_volume();
    let lz = match grid.dim() {
        Dim::One => None,
        Dim::Two => Some(ham.lz_expectation(state)?),
    };
    Ok(Observables {
        norm: state.norm_sqr(),
        energy: h + g * quartic * T::lit(0.5),
        chemical_potential: h + g * quartic,
        lz,
    })
}

/// How the dip moves: a sweep schedule or a fixed position held for a duration.
#[derive(Debug, Clone, Copy)]
enum Motion<T: Real> {
    Sweep(SweepSchedule<T>),
    Static { x0: T, duration: T, omega: T },
}

impl<T: Real> Motion<T> {
    fn passes(&self) -> usize {
        match self {
            Motion::Sweep(s) => s.passes,
            Motion::Static { .. } => 1,
        }
    }

    fn pass_duration(&self) -> T {
        match self {
            Motion::Sweep(s) => s.pass_duration(),
            Motion::Static { duration, .. } => *duration,
        }
    }

    fn omega(&self) -> T {
        match self {
            Motion::Sweep(s) => s.omega,
            Motion::Static { omega, .. } => *omega,
        }
    }

    /// Dip position at `t`, where `t` lies inside pass `pass`.
    fn x0(&self, pass: usize, t: T) -> Result<T> {
        match self {
            Motion::Sweep(s) => {
                // evaluate relative to the pass start so rounding cannot spill into the
                // neighbouring pass
                let tau = t - s.pass_duration() * T::from_usize_lossy(pass);
                let tau = tau.max(T::zero()).min(s.pass_duration());
                let dir = (s.x0_end - s.x0_start).signum();
                let x = s.x0_start + s.speed * tau * dir;
                let (lo, hi) = if dir > T::zero() { (s.x0_start, s.x0_end) } else { (s.x0_end, s.x0_start) };
                Ok(x.max(lo).min(hi))
            }
            Motion::Static { x0, .. } => Ok(*x0),
        }
    }

    fn sample_positions(&self) -> Vec<T> {
        match self {
            Motion::Sweep(s) => (0..=16)
                .map(|i| s.x0_start + (s.x0_end - s.x0_start) * T::from_usize_lossy(i) / T::lit(16.0))
                .collect(),
            Motion::Static { x0, .. } => vec![*x0],
        }
    }
}

/// Propagates `initial` through every pass of `sched`.
///
/// In 2D the dip follows a spiral: radial motion `x0(t)` in the frame rotating at
/// `sched.omega`, which must equal `spec.omega`.
pub fn propagate<T: Real>(
    initial: &WaveField<T>,
    spec: &PotentialSpec<T>,
    sched: &SweepSchedule<T>,
    cfg: &PropagationConfig<T>,
    targets: &[OverlapTarget<T>],
) -> Result<Trajectory<T>> {
    sched.validate()?;
    if spec.dim == Dim::One && sched.omega != T::zero() {
        return Err(Error::Config("a 1D sweep cannot rotate".into()));
    }
    if spec.dim == Dim::Two && sched.omega != spec.omega {
        return Err(Error::Config(format!(
            "schedule rotates at {} but the potential expects {}",
            sched.omega, spec.omega
        )));
    }
    run(initial, spec, Motion::Sweep(*sched), cfg, targets)
}

/// [`propagate`] for schedules with several passes; the state at the end of each pass
/// is kept in `Trajectory::pass_states`.
pub fn propagate_multi<T: Real>(
    initial: &WaveField<T>,
    spec: &PotentialSpec<T>,
    sched: &SweepSchedule<T>,
    cfg: &PropagationConfig<T>,
    targets: &[OverlapTarget<T>],
) -> Result<Trajectory<T>> {
    propagate(initial, spec, sched, cfg, targets)
}

/// [`propagate`] restricted to 2D; `cfg.frame` picks the frame.
pub fn propagate_2d_spiral<T: Real>(
    initial: &WaveField<T>,
    spec: &PotentialSpec<T>,
    sched: &SweepSchedule<T>,
    cfg: &PropagationConfig<T>,
    targets: &[OverlapTarget<T>],
) -> Result<Trajectory<T>> {
    if spec.dim != Dim::Two || initial.grid().dim() != Dim::Two {
        return Err(Error::Config("spiral sweeps are 2D".into()));
    }
    propagate(initial, spec, sched, cfg, targets)
}

/// Evolution with the dip held at `spec.x0` for `duration`. In 2D the lab frame sees it
/// rotate at `spec.omega`.
pub fn propagate_static<T: Real>(
    initial: &WaveField<T>,
    spec: &PotentialSpec<T>,
    duration: T,
    cfg: &PropagationConfig<T>,
    targets: &[OverlapTarget<T>],
) -> Result<Trajectory<T>> {
    if !(duration > T::zero()) {
        return Err(Error::Config("duration must be positive".into()));
    }
    let omega = if spec.dim == Dim::Two { spec.omega } else { T::zero() };
    run(initial, spec, Motion::Static { x0: spec.x0, duration, omega }, cfg, targets)
}

enum Engine<T: Real> {
    Split(SplitStep<T>),
    Crank(CrankNicolson<T>),
}

fn run<T: Real>(
    initial: &WaveField<T>,
    spec: &PotentialSpec<T>,
    motion: Motion<T>,
    cfg: &PropagationConfig<T>,
    targets: &[OverlapTarget<T>],
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    spec.validate()?;
    let grid = initial.grid().clone();
    if grid.dim() != spec.dim {
        return Err(Error::Config("initial state and potential dimensions differ".into()));
    }
    for t in targets {
        grid.ensure_same(t.state.grid())?;
    }
    let norm0 = initial.norm_sqr();
    if (norm0 - T::one()).abs() > T::lit(1e-8).max(T::epsilon() * T::lit(100.0)) {
        return Err(Error::Domain(format!("initial state has norm^2 {norm0}, expected 1")));
    }

    let passes = motion.passes();
    let pass_duration = motion.pass_duration();
    let steps_per_pass = {
        let raw = (pass_duration / cfg.dt - T::lit(1e-9)).ceil();
        raw.to_usize().unwrap_or(1).max(1)
    };
    let dt = pass_duration / T::from_usize_lossy(steps_per_pass);
    let mut warnings = Vec::new();
    if ((dt - cfg.dt) / cfg.dt).abs() > T::lit(1e-12) {
        warnings.push(PropagationWarning::StepAdjusted { requested: cfg.dt.to_f64_lossy(), used: dt.to_f64_lossy() });
    }
    let v_min = motion
        .sample_positions()
        .into_iter()
        .map(|x0| {
            let s = spec.with_x0(x0);
            grid.sample(|x, y| s.eval(x, y)).into_iter().fold(T::infinity(), T::min)
        })
        .fold(T::infinity(), T::min);
    if dt * v_min.abs() > T::lit(0.1) {
        log::warn!("dt |V_min| = {} exceeds 0.1", dt * v_min.abs());
        warnings.push(PropagationWarning::LargeStep { dt: dt.to_f64_lossy(), v_min: v_min.to_f64_lossy() });
    }
    let k_max = grid.k_max();
    if cfg.g < T::zero() && dt * k_max * k_max / T::lit(2.0) > T::PI() {
        log::warn!("dt k_max^2 / 2 = {} exceeds pi with g < 0", dt * k_max * k_max / T::lit(2.0));
        warnings.push(PropagationWarning::FocusingResonance { dt: dt.to_f64_lossy(), k_max: k_max.to_f64_lossy() });
    }

    let omega = motion.omega();
    let rotating_frame = grid.dim() == Dim::Two && cfg.frame == Frame::Rotating;
    let mut engine = match cfg.method {
        Method::SplitStep => Engine::Split(SplitStep::new(grid.clone(), *spec, cfg.g, dt, cfg.frame, Clock::Real)),
        Method::CrankNicolson(lap) => {
            if grid.dim() != Dim::One {
                return Err(Error::Unsupported("Crank-Nicolson propagation is 1D only".into()));
            }
            Engine::Crank(CrankNicolson::new(grid.clone(), *spec, cfg.g, dt, lap)?)
        }
    };
    let pose_at = |pass: usize, t: T| -> Result<DipPose<T>> {
        let x0 = motion.x0(pass, t)?;
        let theta = if grid.dim() == Dim::Two && !rotating_frame { omega * t } else { T::zero() };
        Ok(DipPose { x0, theta })
    };

    let mut rec = Recorder::new(grid.clone(), spec, cfg.g, targets, rotating_frame, omega, dt);
    let mut psi = initial.amplitudes().to_vec();
    rec.record(&psi, T::zero(), &pose_at(0, T::zero())?, &engine)?;
    let mut pass_ends = Vec::with_capacity(passes);
    let mut pass_states = Vec::with_capacity(passes);
    let mut poses = Vec::with_capacity(cfg.record_stride);
    for pass in 0..passes {
        let t_pass = pass_duration * T::from_usize_lossy(pass);
        let mut done = 0usize;
        while done < steps_per_pass {
            let m = cfg.record_stride.min(steps_per_pass - done);
            poses.clear();
            for s in 0..m {
                let t_mid = t_pass + dt * (T::from_usize_lossy(done + s) + T::lit(0.5));
                poses.push(pose_at(pass, t_mid)?);
            }
            match &mut engine {
                Engine::Split(k) => k.advance(&mut psi, &poses),
                Engine::Crank(k) => k.advance(&mut psi, &poses)?,
            }
            done += m;
            let t = if done == steps_per_pass {
                pass_duration * T::from_usize_lossy(pass + 1)
            } else {
                t_pass + dt * T::from_usize_lossy(done)
            };
            rec.record(&psi, t, &pose_at(pass, t)?, &engine)?;
        }
        pass_ends.push(rec.times.len() - 1);
        pass_states.push(WaveField::new(grid.clone(), psi.clone())?);
    }
    let total = pass_duration * T::from_usize_lossy(passes);
    let final_state = WaveField::new(grid, psi)?;
    Ok(Trajectory {
        times: rec.times,
        norm: rec.norm,
        energy: rec.energy,
        lz: rec.lz,
        overlaps: rec.overlaps,
        pass_ends,
        pass_states,
        final_state,
        frame: cfg.frame,
        final_angle: omega * total,
        dt_used: dt,
        warnings,
    })
}

struct Recorder<'a, T: Real> {
    grid: Arc<Grid<T>>,
    ham: Hamiltonian<T>,
    kin: Vec<T>,
    g: T,
    dt_hint: T,
    rotating: bool,
    omega: T,
    targets: &'a [OverlapTarget<T>],
    times: Vec<T>,
    norm: Vec<T>,
    energy: Vec<T>,
    lz: Option<Vec<T>>,
    overlaps: Vec<(String, Vec<T>)>,
    buf: Vec<C<T>>,
}

impl<'a, T: Real> Recorder<'a, T> {
    fn new(
        grid: Arc<Grid<T>>,
        spec: &PotentialSpec<T>,
        g: T,
        targets: &'a [OverlapTarget<T>],
        rotating: bool,
        omega: T,
        dt: T,
    ) -> Self {
        let two_d = grid.dim() == Dim::Two;
        Recorder {
            ham: Hamiltonian::new(grid.clone(), spec),
            kin: kinetic_diagonal(&grid),
            buf: vec![czero(); grid.len()],
            grid,
            g,
            dt_hint: dt,
            rotating,
            omega,
            targets,
            times: Vec::new(),
            norm: Vec::new(),
            energy: Vec::new(),
            lz: two_d.then(Vec::new),
            overlaps: targets.iter().map(|t| (t.name.clone(), Vec::new())).collect(),
        }
    }

    fn record(&mut self, psi: &[C<T>], t: T, pose: &DipPose<T>, engine: &Engine<T>) -> Result<()> {
        let dv = self.grid.cell_volume();
        if psi.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Instability { time: t.to_f64_lossy(), dt: self.dt_hint.to_f64_lossy() });
        }
        let norm = psi.iter().map(|a| a.norm_sqr()).sum::<T>() * dv;
        if (norm - T::one()).abs() > T::lit(1e-6).max(T::epsilon() * T::lit(1e4)) {
            return Err(Error::Unitarity { time: t.to_f64_lossy(), drift: (norm - T::one()).to_f64_lossy() });
        }
        let potential = match engine {
            Engine::Split(k) => k.potential(*pose),
            Engine::Crank(k) => k.potential(pose.x0),
        };
        // kinetic energy by Parseval
        self.buf.copy_from_slice(psi);
        self.ham.spectral().forward(&mut self.buf);
        let total = T::from_usize_lossy(self.grid.len());
        let kinetic = self.buf.iter().zip(&self.kin).map(|(a, &k)| a.norm_sqr() * k).sum::<T>() * dv / total;
        let half_g = self.g * T::lit(0.5);
        let pot = psi
            .iter()
            .zip(&potential)
            .map(|(a, &v)| {
                let d = a.norm_sqr();
                d * (v + half_g * d)
            })
            .sum::<T>()
            * dv;
        let mut energy = kinetic + pot;
        if let Some(lz) = self.lz.as_mut() {
            let mut out = vec![czero(); psi.len()];
            self.ham.apply_lz(psi, &mut out);
            let l = self.ham.dot(psi, &out).re;
            lz.push(l);
            if self.rotating {
                energy = energy - self.omega * l;
            }
        }
        self.times.push(t);
        self.norm.push(norm);
        self.energy.push(energy);
        for (target, (_, series)) in self.targets.iter().zip(self.overlaps.iter_mut()) {
            let o = crate::grid::raw_inner_product(target.state.amplitudes(), psi) * dv;
            series.push(o.norm_sqr());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
