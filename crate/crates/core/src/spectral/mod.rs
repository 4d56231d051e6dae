//! Pseudo-spectral simulation of the (perturbed) Benjamin-Ono equation
//! `u_t = H u_xx - (u²)_x` on the torus.

mod evolve;
mod grid;
mod initial;
mod observables;
mod perturbation;
mod state;

pub use evolve::{bo_rhs, evolve, IntegratorConfig, Scheme, Stepper, Trajectory};
pub use grid::SpectralGrid;
pub use initial::{calibrate_gaps, poisson_state, Calibration, PoissonKernel};
pub use observables::{observables, Observables};
pub use perturbation::{
    perturbation_field, CoefficientTable, GradientFamily, GradientTerm, Perturbation, PerturbationKind, YProfile,
};
pub use state::{antiderivative, derivative, grid_points, hilbert, project_zero_mean, RealState};
