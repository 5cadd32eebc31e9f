//! Uniform periodic angle grid and Fourier pseudospectral operators.
//!
//! Every field in the crate lives on a [`ThetaGrid`] with `n` equispaced
//! samples of `[0, 2π)`. Differentiation and the constant-coefficient
//! operator `L f = -(f'''' + 2 f'' + f)` are diagonal in Fourier space and are
//! applied by FFT, which makes them exact for trigonometric polynomials of
//! degree below `n / 2`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{FlowError, Result};
use crate::scalar::Scalar;

/// Smallest accepted grid.
pub const MIN_GRID_SIZE: usize = 8;

/// Multiple of machine epsilon (relative to the sup norm of a field) below
/// which Fourier coefficients are treated as round-off before differentiation.
pub const CHOP_FACTOR: f64 = 8.0;

/// Default sample count used by the CLI and the reproduction scenarios.
pub const DEFAULT_GRID_SIZE: usize = 256;

/// Uniform grid `θ_j = 2πj/n`, together with cached FFT plans.
pub struct ThetaGrid<T: Scalar> {
    n: usize,
    spacing: T,
    theta: Vec<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Scalar> fmt::Debug for ThetaGrid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ThetaGrid")
            .field("n", &self.n)
            .field("spacing", &self.spacing)
            .finish()
    }
}

impl<T: Scalar> PartialEq for ThetaGrid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

/// Builds a shared grid of `n` samples. `n` must be even and at least 8.
pub fn make_grid<T: Scalar>(n: usize) -> Result<Arc<ThetaGrid<T>>> {
    ThetaGrid::new(n).map(Arc::new)
}

impl<T: Scalar> ThetaGrid<T> {
    pub fn new(n: usize) -> Result<Self> {
        if !n.is_multiple_of(2) {
            return Err(FlowError::InvalidArgument(format!(
                "grid size must be even, got {n}"
            )));
        }
        if n < MIN_GRID_SIZE {
            return Err(FlowError::InvalidArgument(format!(
                "grid size must be at least {MIN_GRID_SIZE}, got {n}"
            )));
        }
        let spacing = T::TAU() / T::from_usize_lossy(n);
        let theta = (0..n).map(|j| T::from_usize_lossy(j) * spacing).collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            spacing,
            theta,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    /// Largest representable wavenumber, `n / 2`.
    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    /// Signed wavenumber carried by FFT bin `bin`; the Nyquist bin maps to `+n/2`.
    pub fn wavenumber(&self, bin: usize) -> i64 {
        if bin <= self.n / 2 {
            bin as i64
        } else {
            bin as i64 - self.n as i64
        }
    }

    /// Unnormalized forward DFT of real samples.
    pub fn forward(&self, values: &[T]) -> Vec<Complex<T>> {
        debug_assert_eq!(values.len(), self.n);
        let mut buf: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse DFT, normalized by `1/n`, keeping the real part.
    pub fn inverse(&self, mut coeffs: Vec<Complex<T>>) -> Vec<T> {
        debug_assert_eq!(coeffs.len(), self.n);
        self.inverse.process(&mut coeffs);
        let scale = T::one() / T::from_usize_lossy(self.n);
        coeffs.into_iter().map(|c| c.re * scale).collect()
    }

    /// Multiplies every Fourier coefficient by `symbol(k, is_nyquist)`.
    pub fn apply_symbol<F>(&self, values: &[T], symbol: F) -> Vec<T>
    where
        F: Fn(i64, bool) -> Complex<T>,
    {
        let mut coeffs = self.forward(values);
        let nyq = self.n / 2;
        for (bin, c) in coeffs.iter_mut().enumerate() {
            *c = *c * symbol(self.wavenumber(bin), bin == nyq);
        }
        self.inverse(coeffs)
    }

    /// Like [`apply_symbol`](Self::apply_symbol), but first discards
    /// coefficients at the rounding floor of the samples, `|ĉ_k|/n ≤
    /// CHOP_FACTOR·ε·max|f|`. High-order symbols would otherwise amplify that
    /// noise by `k⁴`.
    pub fn apply_symbol_chopped<F>(&self, values: &[T], symbol: F) -> Vec<T>
    where
        F: Fn(i64, bool) -> Complex<T>,
    {
        let mut coeffs = self.forward(values);
        let sup = values.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
        let floor = T::lit(CHOP_FACTOR) * T::epsilon() * sup * T::from_usize_lossy(self.n);
        let nyq = self.n / 2;
        for (bin, c) in coeffs.iter_mut().enumerate() {
            *c = if c.norm() <= floor {
                Complex::new(T::zero(), T::zero())
            } else {
                *c * symbol(self.wavenumber(bin), bin == nyq)
            };
        }
        self.inverse(coeffs)
    }

    /// Periodic trapezoid rule, exact for trigonometric polynomials of degree < n.
    pub fn integrate(&self, values: &[T]) -> T {
        values.iter().fold(T::zero(), |acc, &v| acc + v) * self.spacing
    }
}

/// Real samples of a 2π-periodic function on a shared grid.
#[derive(Clone, Debug)]
pub struct Field<T: Scalar> {
    grid: Arc<ThetaGrid<T>>,
    values: Vec<T>,
}

impl<T: Scalar> Field<T> {
    /// Validated constructor: the sample count must match and all values be finite.
    pub fn new(grid: Arc<ThetaGrid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(FlowError::InvalidArgument(format!(
                "field has {} samples, grid has {}",
                values.len(),
                grid.n()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(FlowError::InvalidArgument(format!(
                "non-finite sample at index {j}"
            )));
        }
        Ok(Self { grid, values })
    }

    /// Unchecked constructor for internal results whose finiteness is monitored
    /// separately (e.g. a time step that may blow up).
    pub(crate) fn from_raw(grid: Arc<ThetaGrid<T>>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Self { grid, values }
    }

    pub fn from_fn(grid: Arc<ThetaGrid<T>>, f: impl Fn(T) -> T) -> Self {
        let values = grid.theta().iter().map(|&t| f(t)).collect();
        Self { grid, values }
    }

    pub fn constant(grid: Arc<ThetaGrid<T>>, value: T) -> Self {
        let values = vec![value; grid.n()];
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<ThetaGrid<T>>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn grid(&self) -> &Arc<ThetaGrid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_raw(
            self.grid.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Pointwise combination. Panics if the fields live on different grids.
    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.grid.n(), other.grid.n(), "fields on different grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::from_raw(self.grid.clone(), values)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    /// `a·self + b·other`.
    pub fn axpby(&self, a: T, other: &Self, b: T) -> Self {
        self.zip_with(other, |x, y| a * x + b * y)
    }

    pub fn integral(&self) -> T {
        self.grid.integrate(&self.values)
    }

    /// Continuous L2 norm `sqrt(∫ f² dθ)` by grid quadrature.
    pub fn l2_norm(&self) -> T {
        let sq: Vec<T> = self.values.iter().map(|&v| v * v).collect();
        self.grid.integrate(&sq).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Minimum value and its index. NaN samples count as the minimum.
    pub fn min_with_index(&self) -> (T, usize) {
        let mut best = (self.values[0], 0);
        for (j, &v) in self.values.iter().enumerate() {
            if v.is_nan() {
                return (v, j);
            }
            if v < best.0 {
                best = (v, j);
            }
        }
        best
    }

    pub fn min(&self) -> T {
        self.min_with_index().0
    }

    /// Spectral (band-limited) interpolation onto another grid.
    pub fn resample(&self, target: &Arc<ThetaGrid<T>>) -> Self {
        if target.n() == self.grid.n() {
            return Self::from_raw(target.clone(), self.values.clone());
        }
        let src = self.grid.forward(&self.values);
        let (n_src, n_dst) = (self.grid.n(), target.n());
        let keep = n_src.min(n_dst) / 2;
        let mut dst = vec![Complex::new(T::zero(), T::zero()); n_dst];
        let ratio = T::from_usize_lossy(n_dst) / T::from_usize_lossy(n_src);
        for k in 0..keep {
            dst[k] = src[k] * ratio;
            if k > 0 {
                dst[n_dst - k] = src[n_src - k] * ratio;
            }
        }
        // Shared Nyquist content is split evenly between +/- keep.
        let half = T::lit(0.5);
        let nyq = src[keep] * ratio;
        if n_dst > n_src {
            dst[keep] = nyq * half;
            dst[n_dst - keep] = nyq * half;
        } else {
            let other = src[n_src - keep] * ratio;
            dst[keep] = nyq + other;
        }
        Self::from_raw(target.clone(), target.inverse(dst))
    }
}

/// Spectral derivative of order 1 to 4.
///
/// Coefficients at the round-off floor are dropped (see
/// [`ThetaGrid::apply_symbol_chopped`]). Odd-order derivatives discard the Nyquist coefficient, which has no
/// real-valued derivative.
pub fn differentiate<T: Scalar>(f: &Field<T>, order: u32) -> Result<Field<T>> {
    if !(1..=4).contains(&order) {
        return Err(FlowError::InvalidArgument(format!(
            "derivative order must be 1..=4, got {order}"
        )));
    }
    let values = f.grid().apply_symbol_chopped(f.values(), |k, nyquist| {
        if nyquist && order % 2 == 1 {
            return Complex::new(T::zero(), T::zero());
        }
        let ik = Complex::new(T::zero(), T::from_i64(k).unwrap());
        ik.powu(order)
    });
    Ok(Field::from_raw(f.grid().clone(), values))
}

/// Fourier symbol of `L = -(∂⁴ + 2∂² + 1)` at wavenumber `k`: `-(k²-1)²`.
pub fn linear_symbol<T: Scalar>(k: i64) -> T {
    let k2 = T::from_i64(k * k).unwrap();
    let m = k2 - T::one();
    -(m * m)
}

/// `L f = -(f'''' + 2 f'' + f)`.
pub fn apply_linear_operator<T: Scalar>(f: &Field<T>) -> Field<T> {
    let values = f.grid().apply_symbol_chopped(f.values(), |k, _| {
        Complex::new(linear_symbol::<T>(k), T::zero())
    });
    Field::from_raw(f.grid().clone(), values)
}

/// Per-wavenumber amplitudes `k = 0..=n/2`, normalized so that `a·cos(kθ)`
/// has amplitude `|a|` at `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSpectrum<T: Scalar> {
    pub amplitudes: Vec<T>,
}

impl<T: Scalar> ModeSpectrum<T> {
    pub fn amplitude(&self, k: usize) -> T {
        self.amplitudes[k]
    }

    /// Mean square of the sampled field recovered from the amplitudes.
    pub fn mean_square(&self) -> T {
        let last = self.amplitudes.len() - 1;
        let half = T::lit(0.5);
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(k, &a)| {
                if k == 0 || k == last {
                    a * a
                } else {
                    half * a * a
                }
            })
            .fold(T::zero(), |s, v| s + v)
    }

    /// Largest amplitude at wavenumbers `k >= from`.
    pub fn max_from(&self, from: usize) -> T {
        self.amplitudes
            .iter()
            .skip(from)
            .fold(T::zero(), |m, &a| m.max(a))
    }
}

pub fn mode_amplitudes<T: Scalar>(f: &Field<T>) -> ModeSpectrum<T> {
    let grid = f.grid();
    let n = grid.n();
    let coeffs = grid.forward(f.values());
    let inv_n = T::one() / T::from_usize_lossy(n);
    let two = T::lit(2.0);
    let amplitudes = (0..=n / 2)
        .map(|k| {
            let a = coeffs[k].norm() * inv_n;
            if k == 0 || k == n / 2 {
                a
            } else {
                two * a
            }
        })
        .collect();
    ModeSpectrum { amplitudes }
}
