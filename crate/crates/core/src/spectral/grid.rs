use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Uniform collocation grid with its FFT plans. Owned per run.
#[derive(Clone)]
pub struct SpectralGrid {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid").field("size", &self.size).finish()
    }
}

impl SpectralGrid {
    /// Smallest power of two strictly above `3M`. Quadratic products are then
    /// alias-free on modes `≤ M` and cubic means are exact.
    pub fn for_modes(m: usize) -> Self {
        Self::with_size((3 * m + 1).next_power_of_two().max(4))
    }

    pub fn with_size(size: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { size, forward: planner.plan_fft_forward(size), inverse: planner.plan_fft_inverse(size) }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Largest mode a product of two `m`-mode states resolves exactly.
    pub fn dealiased_for(&self, m: usize) -> bool {
        self.size > 3 * m
    }

    /// Samples `u(2πj/G)` from `û_1..û_M` (modes at or above `G/2` are dropped).
    pub fn to_physical(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.size];
        let half = self.size / 2;
        for (k, c) in coeffs.iter().enumerate().take(half.saturating_sub(1)) {
            let n = k + 1;
            buf[n] = *c;
            buf[self.size - n] = c.conj();
        }
        self.inverse.process(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// `û_1..û_{G/2-1}` from grid samples.
    pub fn to_spectral(&self, samples: &[f64]) -> Vec<Complex64> {
        assert_eq!(samples.len(), self.size, "sample count must match grid size");
        let mut buf: Vec<Complex64> = samples.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.size as f64;
        buf[1..self.size / 2].iter().map(|z| z * scale).collect()
    }

    /// Mean over the grid, `(1/G) Σ_j v_j`.
    pub fn mean(values: &[f64]) -> f64 {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sizes_exceed_three_m() {
        assert_eq!(SpectralGrid::for_modes(1).size(), 4);
        assert_eq!(SpectralGrid::for_modes(64).size(), 256);
        assert_eq!(SpectralGrid::for_modes(85).size(), 256);
        assert_eq!(SpectralGrid::for_modes(86).size(), 512);
        assert!(SpectralGrid::for_modes(128).dealiased_for(128));
    }

    #[test]
    fn roundtrip() {
        let g = SpectralGrid::with_size(16);
        let c = vec![Complex64::new(0.1, 0.2), Complex64::new(-0.3, 0.05), Complex64::new(0.0, 0.4)];
        let back = g.to_spectral(&g.to_physical(&c));
        for (a, b) in c.iter().zip(&back) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-15);
        }
        assert!(back[3..].iter().all(|z| z.norm() < 1e-15));
    }
}
