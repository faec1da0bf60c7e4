use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[-L/2, L/2)` with cached FFT plans.
///
/// Wavenumbers use the standard FFT ordering `0, 1, .., n/2-1, -n/2, .., -1`
/// (times `2π/L`), so the Nyquist mode `-n/2` appears exactly once. Odd
/// derivatives drop the Nyquist mode, even derivatives keep it.
pub struct Grid {
    n: usize,
    length: f64,
    dx: f64,
    x: Vec<f64>,
    wavenumbers: Vec<f64>,
    odd_wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .field("dx", &self.dx)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Arc<Grid>> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n must be a power of two >= 16, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "length must be finite and positive, got {length}"
            )));
        }
        let dx = length / n as f64;
        let x = (0..n).map(|j| -0.5 * length + j as f64 * dx).collect();
        let scale = 2.0 * PI / length;
        let half = n / 2;
        let wavenumbers: Vec<f64> = (0..n)
            .map(|m| {
                if m < half {
                    m as f64 * scale
                } else {
                    (m as f64 - n as f64) * scale
                }
            })
            .collect();
        let mut odd_wavenumbers = wavenumbers.clone();
        odd_wavenumbers[half] = 0.0;

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Arc::new(Grid {
            n,
            length,
            dx,
            x,
            wavenumbers,
            odd_wavenumbers,
            forward,
            inverse,
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Wavenumbers with the Nyquist entry zeroed, used for odd-order symbols.
    pub fn odd_wavenumbers(&self) -> &[f64] {
        &self.odd_wavenumbers
    }

    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.n);
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    pub fn forward_complex(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Inverse transform (normalized) returning the real part.
    pub fn inverse_real(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let mut buf = spectrum.to_vec();
        self.inverse.process(&mut buf);
        let norm = 1.0 / self.n as f64;
        buf.iter().map(|c| c.re * norm).collect()
    }

    /// Inverse transform in place, without normalization.
    pub fn inverse_complex(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
    }

    /// Spectral derivative of the given order.
    pub fn derivative(&self, values: &[f64], order: u32) -> Vec<f64> {
        let mut spec = self.forward(values);
        self.apply_derivative(&mut spec, order);
        self.inverse_real(&spec)
    }

    /// Multiply a spectrum by `(iξ)^order` in place.
    pub fn apply_derivative(&self, spec: &mut [Complex64], order: u32) {
        let ks = if order % 2 == 1 {
            &self.odd_wavenumbers
        } else {
            &self.wavenumbers
        };
        let unit = match order % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        for (c, &k) in spec.iter_mut().zip(ks) {
            *c *= unit * k.powi(order as i32);
        }
    }

    /// `u(x - s)` by an exact spectral translation; periodic in `s`.
    pub fn translate(&self, values: &[f64], s: f64) -> Vec<f64> {
        let mut spec = self.forward(values);
        self.apply_translation(&mut spec, s);
        self.inverse_real(&spec)
    }

    pub fn apply_translation(&self, spec: &mut [Complex64], s: f64) {
        let nyq = self.nyquist_index();
        for (m, c) in spec.iter_mut().enumerate() {
            let k = self.wavenumbers[m];
            if m == nyq {
                // keeps real fields real; equals (-1)^j for grid shifts
                *c *= (k * s).cos();
            } else {
                *c *= Complex64::from_polar(1.0, -k * s);
            }
        }
    }

    /// Trapezoidal rule on the periodic grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.dx * values.iter().sum::<f64>()
    }

    /// `∫ |∂ₓ u|²` via Parseval on the odd-symbol derivative.
    pub fn grad_sq_from_spectrum(&self, spec: &[Complex64]) -> f64 {
        let s: f64 = spec
            .iter()
            .zip(&self.odd_wavenumbers)
            .map(|(c, &k)| k * k * c.norm_sqr())
            .sum();
        s * self.dx / self.n as f64
    }
}
