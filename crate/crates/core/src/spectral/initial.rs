use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::state::RealState;
use crate::error::{Error, Result};
use crate::lax::{extract_gaps, GapOptions};

/// Shifted Poisson kernel `P_r(x + α) - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonKernel {
    pub r: f64,
    #[serde(default)]
    pub alpha: f64,
}

impl PoissonKernel {
    pub fn new(r: f64, alpha: f64) -> Self {
        Self { r, alpha }
    }

    /// Closed form `(1-r²)/(1-2r cos(x+α)+r²) - 1`.
    pub fn profile(&self, x: f64) -> f64 {
        let r = self.r;
        (1.0 - r * r) / (1.0 - 2.0 * r * (x + self.alpha).cos() + r * r) - 1.0
    }
}

/// `u = Σ_j (P_{r_j}(x + α_j) - 1)`, with `û_n = Σ_j r_j^n e^{i n α_j}`.
pub fn poisson_state(kernels: &[PoissonKernel], m: usize) -> Result<RealState> {
    for k in kernels {
        if !(k.r > 0.0 && k.r < 1.0) {
            return Err(Error::ParamDomain(format!("Poisson radius must lie in (0, 1), got {}", k.r)));
        }
        if !k.alpha.is_finite() {
            return Err(Error::ParamDomain(format!("Poisson shift must be finite, got {}", k.alpha)));
        }
    }
    let coeffs = (1..=m)
        .map(|n| kernels.iter().map(|k| Complex64::from_polar(k.r.powi(n as i32), n as f64 * k.alpha)).sum())
        .collect();
    Ok(RealState::from_coeffs(coeffs))
}

/// Poisson parameters reproducing prescribed leading gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub kernels: Vec<PoissonKernel>,
    pub achieved: Vec<f64>,
    pub iterations: usize,
}

const MAX_ITER: usize = 40;
const R_MAX: f64 = 0.995;

/// Radii from the symmetric functions `a = r_1 + r_2`, `b = r_1 r_2`.
fn radii_from_symmetric(a: f64, b: f64) -> Option<[f64; 2]> {
    let disc = a * a - 4.0 * b;
    if disc < -1e-12 || b <= 0.0 {
        return None;
    }
    let d = disc.max(0.0).sqrt();
    let (r1, r2) = ((a + d) / 2.0, (a - d) / 2.0);
    (r2 > 0.0 && r1 < R_MAX).then_some([r1, r2])
}

/// `Σ_n |û_n|²` of the two-kernel state, which equals `γ_1 + 2γ_2`.
fn two_kernel_mass(a: f64, b: f64) -> Option<f64> {
    let [r1, r2] = radii_from_symmetric(a, b)?;
    Some(r1 * r1 / (1.0 - r1 * r1) + r2 * r2 / (1.0 - r2 * r2) + 2.0 * b / (1.0 - b))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Finds unshifted radii whose Lax-extracted gaps match `targets` within
/// `tol`. Supports one and two gaps.
///
/// The two-gap map is symmetric in the radii, so the search runs in
/// `(r_1 + r_2, r_1 r_2)` where it is regular across `r_1 = r_2`.
pub fn calibrate_gaps(targets: &[f64], tol: f64, m: usize) -> Result<Calibration> {
    let n = targets.len();
    if !(1..=2).contains(&n) {
        return Err(Error::ParamDomain(format!("calibration supports 1 or 2 gaps, got {n}")));
    }
    if let Some(g) = targets.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
        return Err(Error::ParamDomain(format!("target gaps must be positive, got {g}")));
    }
    if !(tol > 0.0) {
        return Err(Error::ParamDomain(format!("tolerance must be positive, got {tol}")));
    }
    let opts = GapOptions::default();
    let to_radii = |x: &[f64]| -> Option<Vec<f64>> {
        if n == 1 {
            (x[0] > 0.0 && x[0] < R_MAX).then(|| vec![x[0]])
        } else {
            radii_from_symmetric(x[0], x[1]).map(|r| r.to_vec())
        }
    };
    let gaps_of = |x: &[f64]| -> Result<Option<Vec<f64>>> {
        let Some(r) = to_radii(x) else { return Ok(None) };
        let kernels: Vec<PoissonKernel> = r.iter().map(|r| PoissonKernel::new(*r, 0.0)).collect();
        let u = poisson_state(&kernels, m)?;
        Ok(Some(extract_gaps(&u, n, &opts)?.gaps))
    };

    // one kernel carries γ_1 = r²/(1 - r²) exactly; with two, γ_2 ≈ 1.7 (r_1 r_2)²
    // and the mass identity fixes r_1 + r_2
    let mut x: Vec<f64> = if n == 1 {
        vec![(targets[0] / (1.0 + targets[0])).sqrt()]
    } else {
        let mass = targets[0] + 2.0 * targets[1];
        // equal radii r carry mass 4r²/(1 - r²), the least for a given product
        let b = (targets[1] / 1.7).sqrt().min(mass / (4.0 + mass));
        let (mut lo, mut hi) = (2.0 * b.sqrt(), 1.0 + b);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            match two_kernel_mass(mid, b) {
                Some(v) if v <= mass => lo = mid,
                _ => hi = mid,
            }
        }
        vec![lo, b]
    };

    let mut current =
        gaps_of(&x)?.ok_or_else(|| Error::NoConvergence(format!("no admissible starting point for {targets:?}")))?;
    for iter in 1..=MAX_ITER {
        let err = max_abs_diff(&current, targets);
        if err <= tol {
            let kernels = to_radii(&x).unwrap().iter().map(|r| PoissonKernel::new(*r, 0.0)).collect();
            return Ok(Calibration { kernels, achieved: current, iterations: iter });
        }
        let res: Vec<f64> = current.iter().zip(targets).map(|(a, b)| a - b).collect();
        let mut jac = [[0.0; 2]; 2];
        for j in 0..n {
            let h = 1e-6 * x[j].abs().max(1e-3);
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let (gp, gm, width) = match (gaps_of(&xp)?, gaps_of(&xm)?) {
                (Some(p), Some(q)) => (p, q, 2.0 * h),
                (Some(p), None) => (p, current.clone(), h),
                (None, Some(q)) => (current.clone(), q, h),
                (None, None) => return Err(Error::NoConvergence("calibration left the admissible radii".into())),
            };
            for i in 0..n {
                jac[i][j] = (gp[i] - gm[i]) / width;
            }
        }
        let step: Vec<f64> = if n == 1 {
            vec![res[0] / jac[0][0]]
        } else {
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            vec![(jac[1][1] * res[0] - jac[0][1] * res[1]) / det, (jac[0][0] * res[1] - jac[1][0] * res[0]) / det]
        };
        if step.iter().any(|s| !s.is_finite()) {
            return Err(Error::NoConvergence("singular Jacobian in gap calibration".into()));
        }
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(v, s)| v - lambda * s).collect();
            if let Some(g) = gaps_of(&trial)? {
                if max_abs_diff(&g, targets) < err {
                    x = trial;
                    current = g;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-4 {
                return Err(Error::NoConvergence(format!(
                    "gap calibration stalled at residual {err:e} for targets {targets:?}"
                )));
            }
        }
    }
    Err(Error::NoConvergence(format!("gap calibration did not reach tolerance {tol:e} for targets {targets:?}")))
}
