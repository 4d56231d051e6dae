use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::SpectralGrid;
use super::state::{antiderivative, grid_points, RealState};
use crate::error::{Error, Result};

/// Trigonometric polynomial `c(x) = a_0 + Σ_k (a_k cos kx + b_k sin kx)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CoefficientTable {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl CoefficientTable {
    pub fn constant(a: f64) -> Self {
        Self { constant: a, ..Self::default() }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let c: f64 = self.cos.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * x).cos()).sum();
        let s: f64 = self.sin.iter().enumerate().map(|(k, b)| b * ((k + 1) as f64 * x).sin()).sum();
        self.constant + c + s
    }

    fn is_finite(&self) -> bool {
        self.constant.is_finite() && self.cos.iter().chain(&self.sin).all(|v| v.is_finite())
    }
}

/// Dependence of the potential on `y = ∂ₓ⁻¹u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "type", content = "param")]
pub enum YProfile {
    /// `y^p`
    Power(u32),
    /// `cos(k y)`
    Cos(f64),
    /// `sin(k y)`
    Sin(f64),
}

impl YProfile {
    fn value(self, y: f64) -> f64 {
        match self {
            YProfile::Power(p) => y.powi(p as i32),
            YProfile::Cos(k) => (k * y).cos(),
            YProfile::Sin(k) => (k * y).sin(),
        }
    }

    fn derivative(self, y: f64) -> f64 {
        match self {
            YProfile::Power(0) => 0.0,
            YProfile::Power(p) => p as f64 * y.powi(p as i32 - 1),
            YProfile::Cos(k) => -k * (k * y).sin(),
            YProfile::Sin(k) => k * (k * y).cos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradientTerm {
    pub coefficient: CoefficientTable,
    pub profile: YProfile,
}

/// Potential `F(x, y) = Σ c_j(x) g_j(y)`. The perturbation is
/// `P(u) = (1/2π)∫ F(x, ∂ₓ⁻¹u) dx` and its field uses `f = ∂_y F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GradientFamily {
    pub terms: Vec<GradientTerm>,
}

impl GradientFamily {
    pub fn potential(&self, x: f64, y: f64) -> f64 {
        self.terms.iter().map(|t| t.coefficient.eval(x) * t.profile.value(y)).sum()
    }

    pub fn force(&self, x: f64, y: f64) -> f64 {
        self.terms.iter().map(|t| t.coefficient.eval(x) * t.profile.derivative(y)).sum()
    }
}

const MAX_POWER: u32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationKind {
    #[default]
    None,
    /// Rotation of the first mode, `ε(⟨u,sin⟩cos x - ⟨u,cos⟩sin x)`.
    Gassot,
    Gradient(GradientFamily),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    #[serde(default)]
    pub kind: PerturbationKind,
    #[serde(default)]
    pub epsilon: f64,
    /// Sign `s` of the gradient field `s ε Π₀ f(x, ∂ₓ⁻¹u)`. With `-1` the
    /// field is the Gardner field of `εP` and `H_BO + εP` is conserved.
    #[serde(default = "default_sign")]
    pub sign: f64,
}

fn default_sign() -> f64 {
    -1.0
}

impl Default for Perturbation {
    fn default() -> Self {
        Self::none()
    }
}

impl Perturbation {
    pub fn none() -> Self {
        Self { kind: PerturbationKind::None, epsilon: 0.0, sign: -1.0 }
    }

    pub fn gassot(epsilon: f64) -> Self {
        Self { kind: PerturbationKind::Gassot, epsilon, sign: -1.0 }
    }

    pub fn gradient(family: GradientFamily, epsilon: f64) -> Self {
        Self { kind: PerturbationKind::Gradient(family), epsilon, sign: -1.0 }
    }

    pub fn with_sign(mut self, sign: f64) -> Self {
        self.sign = sign;
        self
    }

    pub fn is_active(&self) -> bool {
        self.epsilon != 0.0 && !matches!(self.kind, PerturbationKind::None)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() {
            return Err(Error::UnsupportedPerturbation(format!("epsilon {} is not finite", self.epsilon)));
        }
        if let PerturbationKind::Gradient(family) = &self.kind {
            if self.sign != 1.0 && self.sign != -1.0 {
                return Err(Error::UnsupportedPerturbation(format!("sign must be +1 or -1, got {}", self.sign)));
            }
            for t in &family.terms {
                if !t.coefficient.is_finite() {
                    return Err(Error::UnsupportedPerturbation("non-finite coefficient".into()));
                }
                match t.profile {
                    YProfile::Power(p) if p > MAX_POWER => {
                        return Err(Error::UnsupportedPerturbation(format!(
                            "power {p} exceeds the supported degree {MAX_POWER}"
                        )))
                    }
                    YProfile::Cos(k) | YProfile::Sin(k) if !k.is_finite() => {
                        return Err(Error::UnsupportedPerturbation("non-finite frequency".into()))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// `P(u)`, the unscaled perturbing Hamiltonian.
    pub fn value(&self, u: &RealState, grid: &SpectralGrid) -> f64 {
        match &self.kind {
            PerturbationKind::None => 0.0,
            PerturbationKind::Gassot => 0.5 * u.coeff(1).norm_sqr(),
            PerturbationKind::Gradient(family) => {
                let v = antiderivative(u).sample(grid);
                let x = grid_points(grid.size());
                SpectralGrid::mean(&x.iter().zip(&v).map(|(x, y)| family.potential(*x, *y)).collect::<Vec<_>>())
            }
        }
    }
}

/// Adds the perturbing field of `u` into `out` (same number of modes).
pub(crate) fn add_field(u: &RealState, p: &Perturbation, grid: &SpectralGrid, out: &mut [Complex64]) {
    if !p.is_active() {
        return;
    }
    match &p.kind {
        PerturbationKind::None => {}
        PerturbationKind::Gassot => {
            if let (Some(o), Some(c)) = (out.first_mut(), u.coeffs().first()) {
                *o += Complex64::new(0.0, 0.5 * p.epsilon) * c;
            }
        }
        PerturbationKind::Gradient(family) => {
            let v = antiderivative(u).sample(grid);
            let f: Vec<f64> = grid_points(grid.size()).iter().zip(&v).map(|(x, y)| family.force(*x, *y)).collect();
            let fhat = grid.to_spectral(&f);
            let scale = p.sign * p.epsilon;
            for (o, c) in out.iter_mut().zip(fhat) {
                *o += c * scale;
            }
        }
    }
}

/// The perturbing vector field of `p` at `u`.
pub fn perturbation_field(u: &RealState, p: &Perturbation, grid: &SpectralGrid) -> Result<RealState> {
    p.validate()?;
    let mut out = RealState::zeros(u.modes());
    add_field(u, p, grid, out.coeffs_mut());
    Ok(out)
}
