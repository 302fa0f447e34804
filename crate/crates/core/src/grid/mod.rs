//! Uniform periodic grids in harmonic-oscillator units and complex fields on them.
//!
//! Lengths are measured in `sqrt(hbar / m omega)` and times in `1 / omega`, so the
//! trap potential is `r^2 / 2` everywhere in the crate.
//!
//! Wavenumbers follow the standard FFT ordering: index `j < n/2` carries
//! `j * dk`, index `j >= n/2` carries `(j - n) * dk`, with `dk = pi / half_width`.
//! The Nyquist entry is therefore `-pi / spacing`.
//!
//! Two-dimensional fields are stored row-major with the x index outermost:
//! `index(ix, iy) = ix * n + iy`.

mod dump;
mod field;
mod spectral;

pub use dump::{read_field, write_field, FIELD_MAGIC};
pub use field::{inner_product, WaveField};
pub(crate) use field::raw_inner as raw_inner_product;
pub use spectral::Spectral;
pub(crate) use spectral::transpose_square;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    One,
    Two,
}

impl Dim {
    pub fn from_usize(d: usize) -> Result<Self> {
        match d {
            1 => Ok(Dim::One),
            2 => Ok(Dim::Two),
            other => Err(Error::Config(format!("dimension must be 1 or 2, got {other}"))),
        }
    }

    pub fn as_usize(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Grid<T> {
    dim: Dim,
    points_per_axis: usize,
    half_width: T,
    spacing: T,
    coords: Vec<T>,
    wavenumbers: Vec<T>,
}

impl<T: Real> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.points_per_axis == other.points_per_axis
            && self.half_width == other.half_width
    }
}

impl<T: Real> Grid<T> {
    /// Builds a grid on `[-half_width, half_width)` with `points_per_axis` samples per axis.
    pub fn new(dim: Dim, points_per_axis: usize, half_width: T) -> Result<Self> {
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(Error::Config(format!(
                "points_per_axis must be a power of two >= 8, got {points_per_axis}"
            )));
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::Config(format!("half_width must be positive, got {half_width}")));
        }
        let n = points_per_axis;
        let spacing = (half_width + half_width) / T::from_usize_lossy(n);
        let coords = (0..n).map(|j| -half_width + T::from_usize_lossy(j) * spacing).collect();
        let dk = T::PI() / half_width;
        let wavenumbers = (0..n)
            .map(|j| {
                if j < n / 2 {
                    T::from_usize_lossy(j) * dk
                } else {
                    -(T::from_usize_lossy(n - j) * dk)
                }
            })
            .collect();
        Ok(Grid { dim, points_per_axis: n, half_width, spacing, coords, wavenumbers })
    }

    pub fn new_1d(points: usize, half_width: T) -> Result<Self> {
        Self::new(Dim::One, points, half_width)
    }

    pub fn new_2d(points_per_axis: usize, half_width: T) -> Result<Self> {
        Self::new(Dim::Two, points_per_axis, half_width)
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    /// Coordinates along a single axis (both axes share them in 2D).
    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    /// Wavenumbers along a single axis, FFT ordering.
    pub fn wavenumbers(&self) -> &[T] {
        &self.wavenumbers
    }

    pub fn k_max(&self) -> T {
        T::PI() / self.spacing
    }

    pub fn len(&self) -> usize {
        match self.dim {
            Dim::One => self.points_per_axis,
            Dim::Two => self.points_per_axis * self.points_per_axis,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index of `(ix, iy)` in a 2D field.
    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.points_per_axis + iy
    }

    /// Quadrature weight of a single grid cell, `spacing^dim`.
    pub fn cell_volume(&self) -> T {
        match self.dim {
            Dim::One => self.spacing,
            Dim::Two => self.spacing * self.spacing,
        }
    }

    /// Samples a scalar function at every grid point in storage order.
    ///
    /// In 1D the closure receives `(x, 0)`.
    pub fn sample<F: FnMut(T, T) -> T>(&self, mut f: F) -> Vec<T> {
        match self.dim {
            Dim::One => self.coords.iter().map(|&x| f(x, T::zero())).collect(),
            Dim::Two => {
                let mut out = Vec::with_capacity(self.len());
                for &x in &self.coords {
                    for &y in &self.coords {
                        out.push(f(x, y));
                    }
                }
                out
            }
        }
    }

    /// Position of each grid point in storage order.
    pub fn points(&self) -> impl Iterator<Item = (T, T)> + '_ {
        let n = self.points_per_axis;
        let dim = self.dim;
        (0..self.len()).map(move |i| match dim {
            Dim::One => (self.coords[i], T::zero()),
            Dim::Two => (self.coords[i / n], self.coords[i % n]),
        })
    }

    pub(crate) fn ensure_same(&self, other: &Grid<T>) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "grid mismatch: {}D/{} points/half-width {} vs {}D/{} points/half-width {}",
                self.dim.as_usize(),
                self.points_per_axis,
                self.half_width,
                other.dim.as_usize(),
                other.points_per_axis,
                other.half_width
            )))
        }
    }
}
