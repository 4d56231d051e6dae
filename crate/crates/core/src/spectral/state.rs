use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::SpectralGrid;

/// Zero-mean real function on the torus, stored by its Fourier coefficients
/// `û_n = (1/2π)∫ u e^{-inx} dx` for `1 ≤ n ≤ M`. Negative modes are the
/// conjugates and `û_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealState {
    coeffs: Vec<Complex64>,
}

impl RealState {
    pub fn zeros(m: usize) -> Self {
        Self { coeffs: vec![Complex64::new(0.0, 0.0); m] }
    }

    /// `coeffs[k]` is `û_{k+1}`.
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// `û_n` for any integer `n`, zero outside `[-M, M]`.
    pub fn coeff(&self, n: i64) -> Complex64 {
        match n {
            0 => Complex64::new(0.0, 0.0),
            n if n > 0 => self.coeffs.get(n as usize - 1).copied().unwrap_or_default(),
            n => self.coeffs.get((-n) as usize - 1).map(|c| c.conj()).unwrap_or_default(),
        }
    }

    /// Truncates or zero-pads to `m` modes.
    pub fn resized(&self, m: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(m, Complex64::new(0.0, 0.0));
        Self { coeffs }
    }

    /// `u(· + θ)`.
    pub fn translated(&self, theta: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * Complex64::from_polar(1.0, (k + 1) as f64 * theta))
            .collect();
        Self { coeffs }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    /// `sqrt((1/2π)∫ (u - v)²)` over the common modes (zero padding).
    pub fn l2_distance(&self, other: &Self) -> f64 {
        let m = self.modes().max(other.modes());
        let s: f64 = (1..=m as i64).map(|n| (self.coeff(n) - other.coeff(n)).norm_sqr()).sum();
        (2.0 * s).sqrt()
    }

    /// `(1/2π)∫ u²`.
    pub fn l2_norm_sqr(&self) -> f64 {
        2.0 * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Direct evaluation of the Fourier series at `x`.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.coeffs.iter().enumerate().map(|(k, c)| 2.0 * (c * Complex64::from_polar(1.0, (k + 1) as f64 * x)).re).sum()
    }

    /// Values on the uniform grid of `g`.
    pub fn sample(&self, g: &SpectralGrid) -> Vec<f64> {
        g.to_physical(&self.coeffs)
    }

    /// Index of the last mode with `|û_n| ≥ threshold` (0 when none).
    pub fn decay_index(&self, threshold: f64) -> usize {
        self.coeffs.iter().rposition(|c| c.norm() >= threshold).map_or(0, |k| k + 1)
    }

    fn map_symbol(&self, f: impl Fn(f64) -> Complex64) -> Self {
        let coeffs = self.coeffs.iter().enumerate().map(|(k, c)| c * f((k + 1) as f64)).collect();
        Self { coeffs }
    }
}

/// Hilbert transform, symbol `-i sgn(n)`.
pub fn hilbert(u: &RealState) -> RealState {
    u.map_symbol(|_| Complex64::new(0.0, -1.0))
}

/// `∂ₓ`, symbol `in`.
pub fn derivative(u: &RealState) -> RealState {
    u.map_symbol(|n| Complex64::new(0.0, n))
}

/// Zero-mean primitive `∂ₓ⁻¹`, symbol `1/(in)`.
pub fn antiderivative(u: &RealState) -> RealState {
    u.map_symbol(|n| Complex64::new(0.0, -1.0 / n))
}

/// Projects grid samples `u(2πj/G)` onto zero mean and the modes `1..=m`.
pub fn project_zero_mean(samples: &[f64], m: usize) -> RealState {
    let g = SpectralGrid::with_size(samples.len());
    let mut coeffs = g.to_spectral(samples);
    coeffs.resize(m, Complex64::new(0.0, 0.0));
    RealState { coeffs }
}

/// Grid points `2πj/G`.
pub fn grid_points(size: usize) -> Vec<f64> {
    (0..size).map(|j| 2.0 * PI * j as f64 / size as f64).collect()
}
