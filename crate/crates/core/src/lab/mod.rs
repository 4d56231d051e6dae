//! Batch experiments: initial data, runs, action extraction, certificates and sweeps.

pub mod config;
pub mod io;

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::birkhoff::{GapSequence, ReferenceTorus};
use crate::error::{Error, Result};
use crate::lax::{actions_along, extract_gaps, ActionSummary, ActionTrajectory, GapEstimate};
use crate::resonance::{full_certificate, StabilityCertificate};
use crate::spectral::{
    calibrate_gaps, evolve, observables, poisson_state, Calibration, Observables, PoissonKernel, RealState,
    SpectralGrid, Trajectory,
};

pub use config::{ExperimentConfig, InitialSpec, PerturbationSpec, ReferenceSpec};

/// Initial state with its measured gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedInitial {
    pub kernels: Vec<PoissonKernel>,
    pub calibration: Option<Calibration>,
    pub state: RealState,
    pub gaps: GapEstimate,
}

impl PreparedInitial {
    /// Leading `N` gaps.
    pub fn leading(&self, n: usize) -> GapSequence {
        GapSequence::new(self.gaps.gaps.iter().take(n).copied().collect()).expect("extracted gaps are clamped")
    }

    /// `Σ_{N<n≤nMax} n² γ_n` at `t = 0`.
    pub fn tail_energy(&self, n: usize) -> f64 {
        self.gaps.gaps.iter().enumerate().skip(n).map(|(i, g)| ((i + 1) * (i + 1)) as f64 * g).sum()
    }
}

pub fn prepare_initial(cfg: &ExperimentConfig) -> Result<PreparedInitial> {
    let (kernels, calibration) = match &cfg.initial {
        InitialSpec::Poisson(k) => (k.clone(), None),
        InitialSpec::TargetGaps { gaps, tol } => {
            let c = calibrate_gaps(gaps, *tol, cfg.modes)?;
            (c.kernels.clone(), Some(c))
        }
    };
    let state = poisson_state(&kernels, cfg.modes)?;
    let gaps = extract_gaps(&state, cfg.n_max, &cfg.gap_options())?;
    Ok(PreparedInitial { kernels, calibration, state, gaps })
}

/// Sampled trajectory with its observables.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub epsilon: f64,
    pub trajectory: Trajectory,
    pub observables: Vec<Observables>,
    pub grid_size: usize,
}

impl RunOutput {
    /// `max_t |H_total(t) - H_total(0)| / |H_total(0)|`.
    pub fn relative_energy_drift(&self) -> f64 {
        let h0 = self.observables[0].h_total;
        self.observables.iter().map(|o| ((o.h_total - h0) / h0).abs()).fold(0.0, f64::max)
    }
}

pub fn simulate_run(cfg: &ExperimentConfig, u0: &RealState, epsilon: f64) -> Result<RunOutput> {
    let p = cfg.perturbation.with_epsilon(epsilon);
    let integ = cfg.integrator();
    let trajectory = evolve(u0, &p, &integ)?;
    let grid = integ.grid_for(u0.modes())?;
    let observables = trajectory.states.iter().map(|u| observables(u, &p, &grid)).collect();
    Ok(RunOutput { epsilon, trajectory, observables, grid_size: grid.size() })
}

pub fn certificate_for(
    cfg: &ExperimentConfig,
    initial: &PreparedInitial,
    epsilon: f64,
) -> Result<StabilityCertificate> {
    full_certificate(&initial.leading(cfg.n), initial.tail_energy(cfg.n), epsilon, cfg.e_min, cfg.e_max, &cfg.constants)
}

pub fn reference_for(cfg: &ExperimentConfig, initial: &PreparedInitial, epsilon: f64) -> Result<ReferenceTorus> {
    match &cfg.reference {
        ReferenceSpec::Initial => ReferenceTorus::from_gaps(&initial.leading(cfg.n)),
        ReferenceSpec::GammaStar(g) => ReferenceTorus::new(g.clone()),
        ReferenceSpec::Certificate => {
            let cert = certificate_for(cfg, initial, epsilon)?;
            if !cert.resonant_valid {
                return Err(Error::ParamDomain("certificate resonant torus lies outside the gap cone".into()));
            }
            ReferenceTorus::new(cert.gamma_star)
        }
    }
}

pub fn actions_for(
    cfg: &ExperimentConfig,
    traj: &Trajectory,
    reference: Option<&ReferenceTorus>,
) -> Result<ActionTrajectory> {
    actions_along(traj, cfg.n_max, cfg.n, reference, &cfg.gap_options())
}

/// `h_ω ≤ R²` and `H_4 ≤ R⁴` at every sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Confinement {
    #[serde(rename = "Rsq")]
    pub rsq: f64,
    pub h_omega_max: f64,
    #[serde(rename = "H4_max")]
    pub h4_max: f64,
    pub h_omega_ok: bool,
    #[serde(rename = "H4_ok")]
    pub h4_ok: bool,
}

impl Confinement {
    pub fn check(actions: &ActionTrajectory, rsq: f64) -> Self {
        let s = actions.summary();
        let h_omega_max = s.h_omega_max.unwrap_or(f64::NAN);
        let h4_max = s.h4_max.unwrap_or(f64::NAN);
        Self { rsq, h_omega_max, h4_max, h_omega_ok: h_omega_max <= rsq, h4_ok: h4_max <= rsq * rsq }
    }

    pub fn holds(&self) -> bool {
        self.h_omega_ok && self.h4_ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub epsilon: f64,
    pub error: Option<String>,
    pub max_drift: Option<f64>,
    pub tail_max: Option<f64>,
    pub h_omega_max: Option<f64>,
    #[serde(rename = "H4_max")]
    pub h4_max: Option<f64>,
    pub energy_drift: Option<f64>,
    pub q: Option<u64>,
    #[serde(rename = "gammaStar")]
    pub gamma_star: Option<Vec<f64>>,
    pub confinement: Option<Confinement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slopes {
    pub drift: Option<f64>,
    pub tail: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub exponent: f64,
    pub calibration_epsilon: f64,
    /// `C` with `drift(ε) ≤ C ε^p`, fixed at the largest ε.
    pub drift_constant: f64,
    /// Separate constant for the tail energy, fixed the same way.
    pub tail_constant: f64,
    pub monotone: bool,
    pub drift_ok: bool,
    pub tail_ok: bool,
    /// Tail energy measured against the drift envelope itself.
    pub tail_within_drift_envelope: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub runs: Vec<SweepEntry>,
    pub slopes: Slopes,
    pub bound_check: Option<BoundCheck>,
    pub notes: Vec<String>,
}

/// Sweep results kept in memory alongside the report.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub report: SweepReport,
    pub runs: Vec<Option<(RunOutput, ActionTrajectory)>>,
}

/// Least-squares slope of `log v` against `log ε`. `None` when the ε are
/// not distinct or a value is not positive.
pub fn loglog_slope(eps: &[f64], vals: &[f64]) -> Option<f64> {
    if eps.len() < 2 || vals.iter().any(|v| !(*v > 0.0)) || eps.iter().any(|e| !(*e > 0.0)) {
        return None;
    }
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx < 1e-12 {
        return None;
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

fn run_one_epsilon(
    cfg: &ExperimentConfig,
    initial: &PreparedInitial,
    epsilon: f64,
) -> Result<(SweepEntry, RunOutput, ActionTrajectory)> {
    let cert = certificate_for(cfg, initial, epsilon)?;
    let reference = if cert.resonant_valid { Some(ReferenceTorus::new(cert.gamma_star.clone())?) } else { None };
    let run = simulate_run(cfg, &initial.state, epsilon)?;
    let actions = actions_for(cfg, &run.trajectory, reference.as_ref())?;
    let s = actions.summary();
    let confinement = reference.as_ref().map(|_| Confinement::check(&actions, cert.rsq));
    let entry = SweepEntry {
        epsilon,
        error: None,
        max_drift: Some(s.max_drift),
        tail_max: Some(s.tail_max),
        h_omega_max: s.h_omega_max,
        h4_max: s.h4_max,
        energy_drift: Some(run.relative_energy_drift()),
        q: Some(cert.q),
        gamma_star: cert.resonant_valid.then(|| cert.gamma_star.clone()),
        confinement,
    };
    Ok((entry, run, actions))
}

#[cfg(feature = "parallel")]
fn map_epsilons<T: Send>(eps: &[f64], f: impl Fn(f64) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    eps.par_iter().map(|e| f(*e)).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_epsilons<T: Send>(eps: &[f64], f: impl Fn(f64) -> T + Sync + Send) -> Vec<T> {
    eps.iter().map(|e| f(*e)).collect()
}

/// Runs every ε of the config from the same initial datum, each against the
/// resonant torus of its own certificate, and checks the power-law envelope.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    cfg.validate_sweep()?;
    let initial = prepare_initial(cfg)?;
    let results = map_epsilons(&cfg.epsilon, |e| run_one_epsilon(cfg, &initial, e));

    let mut entries = Vec::new();
    let mut runs = Vec::new();
    for (eps, r) in cfg.epsilon.iter().zip(results) {
        match r {
            Ok((entry, run, actions)) => {
                entries.push(entry);
                runs.push(Some((run, actions)));
            }
            Err(e) => {
                entries.push(SweepEntry {
                    epsilon: *eps,
                    error: Some(e.to_string()),
                    max_drift: None,
                    tail_max: None,
                    h_omega_max: None,
                    h4_max: None,
                    energy_drift: None,
                    q: None,
                    gamma_star: None,
                    confinement: None,
                });
                runs.push(None);
            }
        }
    }

    let mut notes = Vec::new();
    let ok: Vec<&SweepEntry> = entries.iter().filter(|e| e.error.is_none()).collect();
    if ok.len() < entries.len() {
        notes.push(format!("{} of {} runs failed", entries.len() - ok.len(), entries.len()));
    }
    let eps: Vec<f64> = ok.iter().map(|e| e.epsilon).collect();
    let drift: Vec<f64> = ok.iter().map(|e| e.max_drift.unwrap()).collect();
    let tail: Vec<f64> = ok.iter().map(|e| e.tail_max.unwrap()).collect();
    let slopes = Slopes { drift: loglog_slope(&eps, &drift), tail: loglog_slope(&eps, &tail) };
    let distinct = eps.windows(2).any(|w| w[0] != w[1]) || eps.iter().any(|e| *e != eps[0]);
    if !distinct || slopes.drift.is_none() {
        notes.push("DegenerateSweep: epsilon values are not distinct or drifts vanish; slope fit rejected".into());
    }

    let exponent = 1.0 / (2.0 * (cfg.n as f64 + 1.0));
    let bound_check = (!ok.is_empty() && distinct).then(|| {
        let mut order: Vec<usize> = (0..ok.len()).collect();
        order.sort_by(|a, b| eps[*b].total_cmp(&eps[*a]));
        let top = order[0];
        let scale = eps[top].powf(exponent);
        let drift_constant = drift[top] / scale;
        let tail_constant = tail[top] / scale;
        let slack = 1.0 + 1e-12;
        let env = |e: f64, c: f64| c * e.powf(exponent) * slack;
        BoundCheck {
            exponent,
            calibration_epsilon: eps[top],
            drift_constant,
            tail_constant,
            monotone: order.windows(2).all(|w| drift[w[1]] <= drift[w[0]]),
            drift_ok: (0..ok.len()).all(|i| drift[i] <= env(eps[i], drift_constant)),
            tail_ok: (0..ok.len()).all(|i| tail[i] <= env(eps[i], tail_constant)),
            tail_within_drift_envelope: (0..ok.len()).all(|i| tail[i] <= env(eps[i], drift_constant)),
        }
    });

    Ok(SweepOutcome { report: SweepReport { n: cfg.n, runs: entries, slopes, bound_check, notes }, runs })
}

/// Run manifest written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub status: String,
    pub blowup_time: Option<f64>,
    pub wall_time_s: f64,
    pub grid: Option<usize>,
    pub samples: usize,
    pub outputs: Vec<String>,
    pub kernels: Vec<PoissonKernel>,
}

impl Manifest {
    fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: cfg.clone(),
            status: "ok".into(),
            blowup_time: None,
            wall_time_s: 0.0,
            grid: None,
            samples: 0,
            outputs: Vec::new(),
            kernels: Vec::new(),
        }
    }
}

/// Outcome of `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub epsilon: f64,
    pub samples: usize,
    pub energy_drift: f64,
    pub h_bo_drift: f64,
}

/// Runs the first epsilon of the config and writes `trajectory.csv`,
/// `coeffs/` and `manifest.json` under `out`.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<SimulateSummary> {
    let start = Instant::now();
    std::fs::create_dir_all(out)?;
    let mut manifest = Manifest::new("simulate", cfg);
    let initial = prepare_initial(cfg)?;
    manifest.kernels = initial.kernels.clone();
    let epsilon = cfg.epsilon[0];
    let run = match simulate_run(cfg, &initial.state, epsilon) {
        Ok(r) => r,
        Err(Error::BlowupDetected { time }) => {
            manifest.status = "blowup".into();
            manifest.blowup_time = Some(time);
            manifest.wall_time_s = start.elapsed().as_secs_f64();
            io::write_json(&out.join(io::MANIFEST), &manifest)?;
            return Err(Error::BlowupDetected { time });
        }
        Err(e) => return Err(e),
    };
    io::write_trajectory_csv(&out.join(io::TRAJECTORY_CSV), &run.trajectory.times, &run.observables)?;
    io::write_coefficient_dumps(out, &run.trajectory)?;
    let h0 = run.observables[0].h_bo;
    let h_bo_drift = run.observables.iter().map(|o| ((o.h_bo - h0) / h0).abs()).fold(0.0, f64::max);
    manifest.grid = Some(run.grid_size);
    manifest.samples = run.trajectory.len();
    manifest.outputs = vec![io::TRAJECTORY_CSV.into(), io::COEFF_DIR.into()];
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    io::write_json(&out.join(io::MANIFEST), &manifest)?;
    Ok(SimulateSummary {
        epsilon,
        samples: run.trajectory.len(),
        energy_drift: run.relative_energy_drift(),
        h_bo_drift,
    })
}

/// Extracts actions from the coefficient dumps in `dir` and writes
/// `actions.csv` and `actions_summary.json` there.
pub fn cmd_actions(cfg: &ExperimentConfig, dir: &Path) -> Result<ActionSummary> {
    let traj = io::read_coefficient_dumps(dir)?;
    if traj.is_empty() {
        return Err(Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, "no samples to analyse")));
    }
    let initial = prepare_initial(cfg)?;
    let reference = reference_for(cfg, &initial, cfg.epsilon[0])?;
    let actions = actions_for(cfg, &traj, Some(&reference))?;
    io::write_actions_csv(&dir.join(io::ACTIONS_CSV), &actions)?;
    let summary = actions.summary();
    io::write_json(&dir.join(io::ACTIONS_SUMMARY), &summary)?;
    Ok(summary)
}

/// Writes one certificate per epsilon (`certificate.json` for the first,
/// `certificates.json` with all of them when there are several).
pub fn cmd_certificate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<StabilityCertificate>> {
    std::fs::create_dir_all(out)?;
    let initial = prepare_initial(cfg)?;
    let certs = cfg.epsilon.iter().map(|e| certificate_for(cfg, &initial, *e)).collect::<Result<Vec<_>>>()?;
    io::write_json(&out.join(io::CERTIFICATE), &certs[0])?;
    if certs.len() > 1 {
        io::write_json(&out.join("certificates.json"), &certs)?;
    }
    Ok(certs)
}

/// Human-readable table of every hypothesis of a certificate.
pub fn flag_table(c: &StabilityCertificate) -> String {
    let mut s = format!(
        "epsilon = {:e}  Q = {}  q = {}  k = {:?}  gamma* = {:?}  R^2 = {:.6}  mu = {:.6}\n",
        c.epsilon, c.q_param, c.q, c.k, c.gamma_star, c.rsq, c.mu
    );
    s.push_str(&format!("{:<30} {:>14} {:>3} {:>14}  {}\n", "hypothesis", "lhs", "", "rhs", "result"));
    for f in &c.hypothesis_flags {
        s.push_str(&format!(
            "{:<30} {:>14.6e} {:>3} {:>14.6e}  {}\n",
            f.name,
            f.lhs,
            f.relation.symbol(),
            f.rhs,
            if f.pass { "pass" } else { "FAIL" }
        ));
    }
    s.push_str(&format!(
        "T_normalform = {:e}  T_theorem = {:e}  (constants are configurable, not derived)\n",
        c.time_estimate_normalform, c.time_estimate_theorem
    ));
    s
}

/// Runs the sweep, writes per-epsilon outputs under `out/eps_<i>/` and
/// `sweep_report.json`.
pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<SweepReport> {
    let start = Instant::now();
    let outcome = run_sweep(cfg)?;
    std::fs::create_dir_all(out)?;
    for (i, run) in outcome.runs.iter().enumerate() {
        if let Some((run, actions)) = run {
            let dir = out.join(format!("eps_{i}"));
            std::fs::create_dir_all(&dir)?;
            io::write_trajectory_csv(&dir.join(io::TRAJECTORY_CSV), &run.trajectory.times, &run.observables)?;
            io::write_actions_csv(&dir.join(io::ACTIONS_CSV), actions)?;
        }
    }
    io::write_json(&out.join(io::SWEEP_REPORT), &outcome.report)?;
    let mut manifest = Manifest::new("sweep", cfg);
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.outputs = vec![io::SWEEP_REPORT.into()];
    io::write_json(&out.join(io::MANIFEST), &manifest)?;
    Ok(outcome.report)
}

/// Grid used for a config's observables.
pub fn grid_for(cfg: &ExperimentConfig) -> Result<SpectralGrid> {
    cfg.integrator().grid_for(cfg.modes)
}
