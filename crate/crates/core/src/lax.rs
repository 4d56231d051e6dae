//! Actions of a state from the spectrum of the truncated Lax operator
//! `L_u = D - T_u` on the Hardy space.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::birkhoff::{self, GapSequence, ReferenceTorus, TorusChartPoint};
use crate::error::{Error, Result};
use crate::spectral::{RealState, Trajectory};

/// `L[n, m] = n δ_{nm} - û_{n-m}` for `0 ≤ n, m < size`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaxTruncation {
    pub size: usize,
    pub matrix: DMatrix<Complex64>,
}

impl LaxTruncation {
    pub fn hermitian_deviation(&self) -> f64 {
        let m = &self.matrix;
        let mut worst: f64 = 0.0;
        for i in 0..self.size {
            for j in 0..self.size {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

pub fn build_lax(u: &RealState, size: usize) -> Result<LaxTruncation> {
    if size < 2 {
        return Err(Error::SizeTooSmall { size, min: 2 });
    }
    let matrix = DMatrix::from_fn(size, size, |n, m| {
        let diag = if n == m { Complex64::new(n as f64, 0.0) } else { Complex64::new(0.0, 0.0) };
        diag - u.coeff(n as i64 - m as i64)
    });
    Ok(LaxTruncation { size, matrix })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapOptions {
    /// Starting truncation; `None` uses [`default_size`].
    #[serde(default)]
    pub size: Option<usize>,
    #[serde(default = "default_max_size")]
    pub max_size: usize,
    /// Accepted change of the gaps under one doubling of the truncation.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Negative gaps above `-clamp_tol` are rounding and set to zero.
    #[serde(default = "default_tol")]
    pub clamp_tol: f64,
}

fn default_max_size() -> usize {
    1024
}

fn default_tol() -> f64 {
    1e-10
}

impl Default for GapOptions {
    fn default() -> Self {
        Self { size: None, max_size: default_max_size(), tol: default_tol(), clamp_tol: default_tol() }
    }
}

impl GapOptions {
    pub fn with_size(size: usize) -> Self {
        Self { size: Some(size), ..Self::default() }
    }
}

/// `max(128, 4 M_decay)` with `M_decay` the last mode where `|û_n| ≥ 1e-14`.
pub fn default_size(u: &RealState) -> usize {
    (4 * u.decay_index(1e-14)).max(128)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub gaps: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    #[serde(rename = "truncationResidual")]
    pub truncation_residual: f64,
    #[serde(rename = "clampedCount")]
    pub clamped_count: usize,
    pub size: usize,
    pub converged: bool,
}

fn raw_gaps(ev: &[f64], n_max: usize) -> Vec<f64> {
    (1..=n_max).map(|n| ev[n] - ev[n - 1] - 1.0).collect()
}

/// Gap estimate that reports non-convergence in the `converged` flag.
pub fn estimate_gaps(u: &RealState, n_max: usize, opts: &GapOptions) -> Result<GapEstimate> {
    let mut size = opts.size.unwrap_or_else(|| default_size(u));
    if size < n_max + 2 {
        return Err(Error::SizeTooSmall { size, min: n_max + 2 });
    }
    let mut ev = build_lax(u, size)?.eigenvalues();
    let mut gaps = raw_gaps(&ev, n_max);
    let mut residual = f64::INFINITY;
    while 2 * size <= opts.max_size {
        let next_ev = build_lax(u, 2 * size)?.eigenvalues();
        let next = raw_gaps(&next_ev, n_max);
        residual = gaps.iter().zip(&next).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        if residual < opts.tol {
            break;
        }
        size *= 2;
        ev = next_ev;
        gaps = next;
    }
    let mut clamped = 0;
    for g in gaps.iter_mut() {
        if *g < 0.0 && *g >= -opts.clamp_tol {
            *g = 0.0;
            clamped += 1;
        }
    }
    let converged = residual < opts.tol && gaps.iter().all(|g| *g >= 0.0);
    Ok(GapEstimate { gaps, eigenvalues: ev, truncation_residual: residual, clamped_count: clamped, size, converged })
}

/// Gaps `γ_n = λ_n - λ_{n-1} - 1`, `1 ≤ n ≤ n_max`, with doubling of the
/// truncation until the gaps settle below `opts.tol`.
pub fn extract_gaps(u: &RealState, n_max: usize, opts: &GapOptions) -> Result<GapEstimate> {
    let est = estimate_gaps(u, n_max, opts)?;
    if !est.converged {
        return Err(Error::NoConvergence(format!(
            "gap truncation residual {:e} at size {} (tol {:e}, max size {})",
            est.truncation_residual, est.size, opts.tol, opts.max_size
        )));
    }
    Ok(est)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSample {
    pub t: f64,
    pub gaps: Vec<f64>,
    /// `Σ_{N<n≤nMax} n² γ_n`.
    pub tail_energy: f64,
    pub h_omega: Option<f64>,
    #[serde(rename = "H4")]
    pub h4: Option<f64>,
    pub max_drift: f64,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionTrajectory {
    pub n_max: usize,
    pub n_lead: usize,
    pub samples: Vec<ActionSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionSummary {
    pub max_drift: f64,
    pub tail_max: f64,
    pub h_omega_max: Option<f64>,
    #[serde(rename = "H4_max")]
    pub h4_max: Option<f64>,
    pub all_converged: bool,
}

impl ActionTrajectory {
    pub fn summary(&self) -> ActionSummary {
        let fold = |f: &dyn Fn(&ActionSample) -> Option<f64>| {
            self.samples.iter().filter_map(f).fold(None, |a: Option<f64>, v| Some(a.map_or(v, |a| a.max(v))))
        };
        ActionSummary {
            max_drift: fold(&|s| Some(s.max_drift)).unwrap_or(0.0),
            tail_max: fold(&|s| Some(s.tail_energy)).unwrap_or(0.0),
            h_omega_max: fold(&|s| s.h_omega),
            h4_max: fold(&|s| s.h4),
            all_converged: self.samples.iter().all(|s| s.converged),
        }
    }
}

#[cfg(feature = "parallel")]
fn map_samples<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_samples<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Gaps, tail energy, drift and (given a reference torus) the Lyapunov
/// functions `h_ω` and `H_4` at every sample of `traj`.
pub fn actions_along(
    traj: &Trajectory,
    n_max: usize,
    n_lead: usize,
    reference: Option<&ReferenceTorus>,
    opts: &GapOptions,
) -> Result<ActionTrajectory> {
    if let Some(r) = reference {
        if r.modes() != n_lead {
            return Err(Error::DimensionMismatch { expected: n_lead, found: r.modes() });
        }
    }
    if n_lead > n_max {
        return Err(Error::ParamDomain(format!("N = {n_lead} exceeds nMax = {n_max}")));
    }
    let estimates: Vec<Result<GapEstimate>> = map_samples(traj.len(), |i| estimate_gaps(&traj.states[i], n_max, opts));
    let mut samples = Vec::with_capacity(traj.len());
    let mut initial: Option<Vec<f64>> = None;
    for (t, est) in traj.times.iter().zip(estimates) {
        let est = est?;
        let start = initial.get_or_insert_with(|| est.gaps.clone());
        let max_drift = est.gaps.iter().zip(start.iter()).fold(0.0f64, |a, (g, g0)| a.max((g - g0).abs()));
        let tail_energy = (n_lead + 1..=n_max).map(|n| (n * n) as f64 * est.gaps[n - 1]).sum();
        let (h_omega, h4) = match reference {
            Some(r) => {
                let g = GapSequence::new(est.gaps.iter().map(|g| g.max(0.0)).collect())?;
                let p = TorusChartPoint::from_gaps(&g, r);
                (Some(birkhoff::h_omega(&p, r)?), Some(birkhoff::h4_of_point(&p)))
            }
            None => (None, None),
        };
        samples.push(ActionSample {
            t: *t,
            gaps: est.gaps,
            tail_energy,
            h_omega,
            h4,
            max_drift,
            residual: est.truncation_residual,
            converged: est.converged,
        });
    }
    Ok(ActionTrajectory { n_max, n_lead, samples })
}
