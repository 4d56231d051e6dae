//! Browser bindings: Poisson initial data with their Lax gaps, a stepping
//! simulation, and stability certificates.
//!
//! The plain functions return `Result<_, String>` and are tested natively;
//! the `#[wasm_bindgen]` wrappers only convert errors.

use bo_lab::birkhoff::GapSequence;
use bo_lab::lax::{extract_gaps, GapOptions};
use bo_lab::resonance::{full_certificate, CertificateConstants};
use bo_lab::spectral::{
    grid_points, observables, poisson_state, Perturbation, PoissonKernel, RealState, SpectralGrid, Stepper,
};
use wasm_bindgen::prelude::*;

const MAX_MODES: usize = 512;

fn kernels(radii: &[f64], alphas: &[f64]) -> Result<Vec<PoissonKernel>, String> {
    if radii.is_empty() || radii.len() != alphas.len() {
        return Err(format!("need matching radii and phases, got {} and {}", radii.len(), alphas.len()));
    }
    Ok(radii.iter().zip(alphas).map(|(r, a)| PoissonKernel::new(*r, *a)).collect())
}

fn check_modes(m: usize) -> Result<(), String> {
    if !(4..=MAX_MODES).contains(&m) {
        return Err(format!("modes must lie in 4..={MAX_MODES}, got {m}"));
    }
    Ok(())
}

fn samples(u: &RealState, points: usize) -> Vec<f64> {
    grid_points(points).iter().map(|x| u.evaluate(*x)).collect()
}

/// Values of a sum of Poisson kernels at `points` equispaced nodes of `[0, 2π)`.
pub fn profile(radii: &[f64], alphas: &[f64], modes: usize, points: usize) -> Result<Vec<f64>, String> {
    check_modes(modes)?;
    let u = poisson_state(&kernels(radii, alphas)?, modes).map_err(|e| e.to_string())?;
    Ok(samples(&u, points))
}

/// First `n_max` gaps of the Lax spectrum of the same datum.
pub fn gaps(radii: &[f64], alphas: &[f64], modes: usize, n_max: usize) -> Result<Vec<f64>, String> {
    check_modes(modes)?;
    let u = poisson_state(&kernels(radii, alphas)?, modes).map_err(|e| e.to_string())?;
    let opts = GapOptions { max_size: 512, ..GapOptions::default() };
    Ok(extract_gaps(&u, n_max, &opts).map_err(|e| e.to_string())?.gaps)
}

/// Certificate JSON for leading gaps `gamma0` (no tail).
pub fn certificate(gamma0: &[f64], epsilon: f64, e_min: f64, e_max: f64) -> Result<String, String> {
    let g = GapSequence::new(gamma0.to_vec()).map_err(|e| e.to_string())?;
    let c = full_certificate(&g, 0.0, epsilon, e_min, e_max, &CertificateConstants::default())
        .map_err(|e| e.to_string())?;
    serde_json::to_string(&c).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = poissonProfile)]
pub fn poisson_profile(radii: Vec<f64>, alphas: Vec<f64>, modes: usize, points: usize) -> Result<Vec<f64>, JsError> {
    profile(&radii, &alphas, modes, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = laxGaps)]
pub fn lax_gaps(radii: Vec<f64>, alphas: Vec<f64>, modes: usize, n_max: usize) -> Result<Vec<f64>, JsError> {
    gaps(&radii, &alphas, modes, n_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = stabilityCertificate)]
pub fn stability_certificate(gamma0: Vec<f64>, epsilon: f64, e_min: f64, e_max: f64) -> Result<String, JsError> {
    certificate(&gamma0, epsilon, e_min, e_max).map_err(|e| JsError::new(&e))
}

/// Benjamin-Ono flow from a Poisson datum, optionally rotated on the first mode.
#[wasm_bindgen]
pub struct Simulation {
    stepper: Stepper,
    perturbation: Perturbation,
    grid: SpectralGrid,
    h0: f64,
}

impl Simulation {
    pub fn create(radii: &[f64], alphas: &[f64], modes: usize, dt: f64, epsilon: f64) -> Result<Self, String> {
        check_modes(modes)?;
        let u = poisson_state(&kernels(radii, alphas)?, modes).map_err(|e| e.to_string())?;
        let perturbation = if epsilon == 0.0 { Perturbation::none() } else { Perturbation::gassot(epsilon) };
        let grid = SpectralGrid::for_modes(modes);
        let h0 = observables(&u, &perturbation, &grid).h_total;
        let stepper = Stepper::new(&u, &perturbation, dt, grid.clone(), 1e6).map_err(|e| e.to_string())?;
        Ok(Self { stepper, perturbation, grid, h0 })
    }

    pub fn advance(&mut self, steps: u32) -> Result<(), String> {
        for _ in 0..steps {
            self.stepper.advance().map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    pub fn current_gaps(&self, n_max: usize) -> Result<Vec<f64>, String> {
        let opts = GapOptions { max_size: 512, ..GapOptions::default() };
        Ok(extract_gaps(&self.stepper.state(), n_max, &opts).map_err(|e| e.to_string())?.gaps)
    }
}

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(radii: Vec<f64>, alphas: Vec<f64>, modes: usize, dt: f64, epsilon: f64) -> Result<Simulation, JsError> {
        Self::create(&radii, &alphas, modes, dt, epsilon).map_err(|e| JsError::new(&e))
    }

    pub fn step(&mut self, steps: u32) -> Result<(), JsError> {
        self.advance(steps).map_err(|e| JsError::new(&e))
    }

    pub fn time(&self) -> f64 {
        self.stepper.time()
    }

    pub fn profile(&self, points: usize) -> Vec<f64> {
        samples(&self.stepper.state(), points)
    }

    /// `|H_total(t) - H_total(0)| / |H_total(0)|`.
    #[wasm_bindgen(js_name = energyDrift)]
    pub fn energy_drift(&self) -> f64 {
        let h = observables(&self.stepper.state(), &self.perturbation, &self.grid).h_total;
        ((h - self.h0) / self.h0).abs()
    }

    pub fn gaps(&self, n_max: usize) -> Result<Vec<f64>, JsError> {
        self.current_gaps(n_max).map_err(|e| JsError::new(&e))
    }
}
