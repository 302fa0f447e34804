//! Harmonic trap plus a moving Gaussian dip, and the sweep schedules that move it.
//!
//! 1D: `V(x) = x^2/2 + U0 * a(x0) * exp(-(x - x0)^2 / (2 sigma^2))` with `a = arctan` by default.
//!
//! 2D: `V(x, y) = (x^2 + y^2)/2 + U0 * a(x0) * exp(-((x - x0)^2 + y^2) / (2 sigma^2))` with
//! `a(x0) = -sqrt(arctan|x0|)` by default. Both displacements sit under one minus sign so the
//! dip is localized in both directions.

use crate::error::{Error, Result};
use crate::grid::Dim;
use crate::scalar::Real;

/// Signed dip amplitude as a function of the dip center, in units of `U0`.
#[derive(Clone, Copy)]
pub enum Amplitude<T> {
    /// `arctan(x0)`: negative (a well) for `x0 < 0`.
    Arctan,
    /// `-sqrt(arctan|x0|)`.
    NegSqrtArctanAbs,
    /// Any other smooth profile with its derivative.
    Custom { value: fn(T) -> T, slope: fn(T) -> T },
}

impl<T: Real> Amplitude<T> {
    pub fn default_for(dim: Dim) -> Self {
        match dim {
            Dim::One => Amplitude::Arctan,
            Dim::Two => Amplitude::NegSqrtArctanAbs,
        }
    }

    pub fn value(&self, x0: T) -> T {
        match self {
            Amplitude::Arctan => x0.atan(),
            Amplitude::NegSqrtArctanAbs => -x0.abs().atan().sqrt(),
            Amplitude::Custom { value, .. } => value(x0),
        }
    }

    /// `d value / d x0`. The square-root profile is singular at `x0 = 0`; zero is returned there.
    pub fn slope(&self, x0: T) -> T {
        match self {
            Amplitude::Arctan => T::one() / (T::one() + x0 * x0),
            Amplitude::NegSqrtArctanAbs => {
                let a = x0.abs().atan();
                if a == T::zero() {
                    T::zero()
                } else {
                    -x0.signum() / (T::lit(2.0) * a.sqrt() * (T::one() + x0 * x0))
                }
            }
            Amplitude::Custom { slope, .. } => slope(x0),
        }
    }
}

impl<T> std::fmt::Debug for Amplitude<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Amplitude::Arctan => f.write_str("Arctan"),
            Amplitude::NegSqrtArctanAbs => f.write_str("NegSqrtArctanAbs"),
            Amplitude::Custom { .. } => f.write_str("Custom"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PotentialSpec<T> {
    pub dim: Dim,
    pub u0: T,
    pub sigma: T,
    /// Rotation frequency of the frame (2D only).
    pub omega: T,
    pub x0: T,
    pub amplitude: Amplitude<T>,
}

impl<T: Real> PotentialSpec<T> {
    pub fn new(dim: Dim, u0: T, sigma: T, omega: T, x0: T) -> Result<Self> {
        let spec = PotentialSpec { dim, u0, sigma, omega, x0, amplitude: Amplitude::default_for(dim) };
        spec.validate()?;
        Ok(spec)
    }

    pub fn one_d(u0: T, sigma: T, x0: T) -> Result<Self> {
        Self::new(Dim::One, u0, sigma, T::zero(), x0)
    }

    pub fn two_d(u0: T, sigma: T, omega: T, x0: T) -> Result<Self> {
        Self::new(Dim::Two, u0, sigma, omega, x0)
    }

    /// Plain harmonic trap (no dip).
    pub fn harmonic(dim: Dim, omega: T) -> Self {
        PotentialSpec {
            dim,
            u0: T::zero(),
            sigma: T::one(),
            omega,
            x0: T::zero(),
            amplitude: Amplitude::default_for(dim),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > T::zero()) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.u0 >= T::zero()) {
            return Err(Error::Config(format!("U0 must be non-negative, got {}", self.u0)));
        }
        if !(self.omega >= T::zero()) {
            return Err(Error::Config(format!("Omega must be non-negative, got {}", self.omega)));
        }
        if self.dim == Dim::One && self.omega != T::zero() {
            return Err(Error::Config("Omega must be zero in 1D".into()));
        }
        if !self.x0.is_finite() {
            return Err(Error::Config("x0 must be finite".into()));
        }
        Ok(())
    }

    pub fn with_x0(mut self, x0: T) -> Self {
        self.x0 = x0;
        self
    }

    pub fn with_amplitude(mut self, amplitude: Amplitude<T>) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// Signed prefactor of the Gaussian, `U0 * a(x0)`.
    pub fn dip_strength(&self) -> T {
        self.u0 * self.amplitude.value(self.x0)
    }

    /// Radius beyond which the Gaussian factor is below `1e-18` relative.
    pub fn dip_reach(&self) -> T {
        self.sigma * T::lit(9.1)
    }

    /// Potential at `(x, y)`; `y` is ignored in 1D.
    pub fn eval(&self, x: T, y: T) -> T {
        match self.dim {
            Dim::One => potential_1d(x, self),
            Dim::Two => potential_2d(x, y, self),
        }
    }

    /// Only the dip term (no trap).
    pub fn dip(&self, x: T, y: T) -> T {
        let dx = x - self.x0;
        let r2 = match self.dim {
            Dim::One => dx * dx,
            Dim::Two => dx * dx + y * y,
        };
        self.dip_strength() * (-r2 / (T::lit(2.0) * self.sigma * self.sigma)).exp()
    }

    /// `dV/dx0` at `(x, y)`.
    pub fn d_dx0(&self, x: T, y: T) -> T {
        let s2 = self.sigma * self.sigma;
        let dx = x - self.x0;
        let r2 = match self.dim {
            Dim::One => dx * dx,
            Dim::Two => dx * dx + y * y,
        };
        let gauss = (-r2 / (T::lit(2.0) * s2)).exp();
        self.u0 * gauss * (self.amplitude.slope(self.x0) + self.amplitude.value(self.x0) * dx / s2)
    }
}

/// `x^2/2 + U0 a(x0) exp(-(x-x0)^2 / (2 sigma^2))`.
pub fn potential_1d<T: Real>(x: T, spec: &PotentialSpec<T>) -> T {
    debug_assert_eq!(spec.dim, Dim::One);
    let dx = x - spec.x0;
    x * x / T::lit(2.0)
        + spec.dip_strength() * (-(dx * dx) / (T::lit(2.0) * spec.sigma * spec.sigma)).exp()
}

/// `(x^2+y^2)/2 + U0 a(x0) exp(-((x-x0)^2 + y^2) / (2 sigma^2))`.
pub fn potential_2d<T: Real>(x: T, y: T, spec: &PotentialSpec<T>) -> T {
    debug_assert_eq!(spec.dim, Dim::Two);
    let dx = x - spec.x0;
    (x * x + y * y) / T::lit(2.0)
        + spec.dip_strength() * (-(dx * dx + y * y) / (T::lit(2.0) * spec.sigma * spec.sigma)).exp()
}

/// Piecewise-linear trajectory of the dip center, repeated `passes` times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSchedule<T> {
    pub x0_start: T,
    pub x0_end: T,
    pub speed: T,
    pub passes: usize,
    /// Lab-frame rotation rate of the dip (2D spiral); zero for a straight sweep.
    pub omega: T,
}

impl<T: Real> SweepSchedule<T> {
    pub fn new(x0_start: T, x0_end: T, speed: T, passes: usize, omega: T) -> Result<Self> {
        let s = SweepSchedule { x0_start, x0_end, speed, passes, omega };
        s.validate()?;
        Ok(s)
    }

    pub fn linear(x0_start: T, x0_end: T, speed: T, passes: usize) -> Result<Self> {
        Self::new(x0_start, x0_end, speed, passes, T::zero())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.speed > T::zero()) || !self.speed.is_finite() {
            return Err(Error::Config(format!("sweep speed must be positive, got {}", self.speed)));
        }
        if self.passes == 0 {
            return Err(Error::Config("sweep needs at least one pass".into()));
        }
        if self.x0_start == self.x0_end {
            return Err(Error::Config("sweep start and end coincide".into()));
        }
        if !(self.omega >= T::zero()) {
            return Err(Error::Config(format!("Omega must be non-negative, got {}", self.omega)));
        }
        Ok(())
    }

    pub fn pass_duration(&self) -> T {
        (self.x0_end - self.x0_start).abs() / self.speed
    }

    pub fn total_duration(&self) -> T {
        self.pass_duration() * T::from_usize_lossy(self.passes)
    }

    /// Pass index (0-based) active at time `t`; the final instant belongs to the last pass.
    pub fn pass_index(&self, t: T) -> usize {
        let p = (t / self.pass_duration()).floor().to_usize().unwrap_or(0);
        p.min(self.passes - 1)
    }

    /// Dip center at time `t`.
    pub fn position(&self, t: T) -> Result<T> {
        let total = self.total_duration();
        if !(t >= T::zero()) || t > total {
            return Err(Error::Domain(format!("time {t} outside schedule [0, {total}]")));
        }
        let p = self.pass_index(t);
        let tau = t - self.pass_duration() * T::from_usize_lossy(p);
        let dir = (self.x0_end - self.x0_start).signum();
        let x0 = self.x0_start + self.speed * tau * dir;
        // clamp rounding overshoot at the pass end
        let (lo, hi) = if dir > T::zero() {
            (self.x0_start, self.x0_end)
        } else {
            (self.x0_end, self.x0_start)
        };
        Ok(x0.max(lo).min(hi))
    }

    /// Rotation angle of the dip in the lab frame at time `t`.
    pub fn angle(&self, t: T) -> T {
        self.omega * t
    }
}

/// Potential in the lab frame for a dip that moves radially as `x0(t)` in the frame
/// rotating at `sched.omega`: the probe point is rotated by `-omega t` before evaluation.
pub fn lab_frame_potential_2d<T: Real>(
    x: T,
    y: T,
    t: T,
    spec: &PotentialSpec<T>,
    sched: &SweepSchedule<T>,
) -> Result<T> {
    if spec.dim != Dim::Two {
        return Err(Error::Config("lab-frame spiral potential needs a 2D spec".into()));
    }
    let x0 = sched.position(t)?;
    let (s, c) = sched.angle(t).sin_cos();
    let xr = x * c + y * s;
    let yr = -x * s + y * c;
    Ok(potential_2d(xr, yr, &spec.with_x0(x0)))
}
