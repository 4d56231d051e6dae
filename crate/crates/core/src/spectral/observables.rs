use serde::{Deserialize, Serialize};

use super::grid::SpectralGrid;
use super::perturbation::Perturbation;
use super::state::RealState;

/// Conserved and monitored functionals of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    #[serde(rename = "H_BO")]
    pub h_bo: f64,
    pub momentum: f64,
    #[serde(rename = "P_value")]
    pub p_value: f64,
    #[serde(rename = "H_total")]
    pub h_total: f64,
}

/// `H_BO = Σ n|û_n|² - (1/3)(1/2π)∫u³`, momentum `(1/2π)∫u²`, `P`, and
/// `H_total = H_BO + εP`. The cubic mean is exact on grids above `3M`.
pub fn observables(u: &RealState, p: &Perturbation, grid: &SpectralGrid) -> Observables {
    let quadratic: f64 = u.coeffs().iter().enumerate().map(|(k, c)| (k + 1) as f64 * c.norm_sqr()).sum();
    let samples = u.sample(grid);
    let cubic = SpectralGrid::mean(&samples.iter().map(|v| v * v * v).collect::<Vec<_>>());
    let h_bo = quadratic - cubic / 3.0;
    let p_value = p.value(u, grid);
    Observables { h_bo, momentum: u.l2_norm_sqr(), p_value, h_total: h_bo + p.epsilon * p_value }
}
