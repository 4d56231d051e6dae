//! Built-in acceptance suite.
//!
//! Criteria are numbered 1 to 10. The fast subset (1, 2, 3, 4, 10) runs in a
//! few seconds; the others integrate the PDE and take from seconds to minutes.

use std::f64::consts::TAU;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::birkhoff::{expansion_residual, frequencies, gaps_from_frequencies, GapSequence, ReferenceTorus};
use crate::error::{Error, Result};
use crate::lab::{run_sweep, ExperimentConfig, InitialSpec, PerturbationSpec, ReferenceSpec};
use crate::lax::{estimate_gaps, extract_gaps, GapOptions};
use crate::resonance::{
    appendix_constants, choose_q, dirichlet, full_certificate, CertificateConstants, StabilityCertificate,
};
use crate::spectral::{
    evolve, observables, poisson_state, IntegratorConfig, Perturbation, PerturbationKind, PoissonKernel, RealState,
    Scheme,
};

pub const FAST: [u8; 5] = [1, 2, 3, 4, 10];
pub const ALL: [u8; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

/// Pass thresholds; every field can be overridden by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub roundtrip: f64,
    pub expansion: f64,
    pub dirichlet_slack: f64,
    pub lax_zero: f64,
    pub finite_gap: f64,
    pub iso_gap: f64,
    pub iso_energy: f64,
    pub wave_mismatch: f64,
    pub wave_speed: f64,
    pub conservation: f64,
    /// Expected reduction of the error when `dt` is halved.
    pub order: f64,
    /// Accepted multiplicative band around `order`.
    pub order_band: f64,
    pub mu_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            roundtrip: 1e-12,
            expansion: 1e-12,
            dirichlet_slack: 1e-12,
            lax_zero: 1e-12,
            finite_gap: 1e-8,
            iso_gap: 1e-5,
            iso_energy: 1e-9,
            wave_mismatch: 1e-6,
            wave_speed: 1e-3,
            conservation: 1e-8,
            order: 16.0,
            order_band: 2.5,
            mu_rel: 1e-6,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 13] = [
        "roundtrip",
        "expansion",
        "dirichlet_slack",
        "lax_zero",
        "finite_gap",
        "iso_gap",
        "iso_energy",
        "wave_mismatch",
        "wave_speed",
        "conservation",
        "order",
        "order_band",
        "mu_rel",
    ];

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "roundtrip" => &mut self.roundtrip,
            "expansion" => &mut self.expansion,
            "dirichlet_slack" => &mut self.dirichlet_slack,
            "lax_zero" => &mut self.lax_zero,
            "finite_gap" => &mut self.finite_gap,
            "iso_gap" => &mut self.iso_gap,
            "iso_energy" => &mut self.iso_energy,
            "wave_mismatch" => &mut self.wave_mismatch,
            "wave_speed" => &mut self.wave_speed,
            "conservation" => &mut self.conservation,
            "order" => &mut self.order,
            "order_band" => &mut self.order_band,
            "mu_rel" => &mut self.mu_rel,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match self.slot(name) {
            Some(v) => {
                *v = value;
                Ok(())
            }
            None => Err(Error::Config(format!("unknown tolerance {name:?}; known: {}", Self::NAMES.join(", ")))),
        }
    }

    /// Parses `name=value`.
    pub fn apply(&mut self, assignment: &str) -> Result<()> {
        let (name, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected name=value, got {assignment:?}")))?;
        let value: f64 =
            value.trim().parse().map_err(|e| Error::Config(format!("bad tolerance value {value:?}: {e}")))?;
        self.set(name.trim(), value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub elapsed_s: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:>2} {:<28} {} ({:.1} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed_s
        )
    }
}

pub fn criterion_name(id: u8) -> &'static str {
    match id {
        1 => "gap/frequency roundtrip",
        2 => "expansion identity",
        3 => "Dirichlet approximation",
        4 => "Lax baseline",
        5 => "isospectrality",
        6 => "traveling wave",
        7 => "energy conservation",
        8 => "scaling sweep",
        9 => "Lyapunov confinement",
        10 => "certificate arithmetic",
        _ => "unknown",
    }
}

/// Runs the selected criteria in order. Criterion 9 reuses the sweep of
/// criterion 8 when both are selected.
pub fn run_criteria(ids: &[u8], tol: &Tolerances, seed: u64) -> Vec<CriterionOutcome> {
    let mut sweep: Option<(f64, Result<SweepFacts>)> = None;
    let mut out = Vec::new();
    for &id in ids {
        let start = Instant::now();
        let res: Result<(bool, String)> = match id {
            1 => roundtrip(tol, seed),
            2 => expansion(tol, seed),
            3 => dirichlet_bound(tol, seed),
            4 => lax_baseline(tol),
            5 => isospectrality(tol),
            6 => traveling_wave(tol),
            7 => conservation(tol),
            8 | 9 => {
                let (cost, facts) = sweep.get_or_insert_with(|| {
                    let s = Instant::now();
                    let f = sweep_facts();
                    (s.elapsed().as_secs_f64(), f)
                });
                let elapsed_before = *cost;
                *cost = 0.0;
                let r = match facts {
                    Ok(f) if id == 8 => Ok(f.scaling()),
                    Ok(f) => Ok(f.confinement()),
                    Err(e) => Err(Error::Config(e.to_string())),
                };
                out.push(finish(id, r, start.elapsed().as_secs_f64().max(elapsed_before)));
                continue;
            }
            10 => certificate_arithmetic(tol),
            _ => Err(Error::Config(format!("no criterion {id}"))),
        };
        out.push(finish(id, res, start.elapsed().as_secs_f64()));
    }
    out
}

fn finish(id: u8, res: Result<(bool, String)>, elapsed_s: f64) -> CriterionOutcome {
    let (pass, detail) = match res {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionOutcome { id, name: criterion_name(id).into(), pass, detail, elapsed_s }
}

/// Table of failed criteria, empty when all pass.
pub fn failure_table(outcomes: &[CriterionOutcome]) -> String {
    let failed: Vec<_> = outcomes.iter().filter(|o| !o.pass).collect();
    if failed.is_empty() {
        return String::new();
    }
    let mut s = format!("{:<4} {:<28} {}\n", "id", "criterion", "detail");
    for o in failed {
        s.push_str(&format!("{:<4} {:<28} {}\n", o.id, o.name, o.detail));
    }
    s
}

fn random_gaps(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // (0, 1]
    (0..n).map(|_| 1.0 - rng.random::<f64>()).collect()
}

fn roundtrip(tol: &Tolerances, seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=8);
        let g = GapSequence::new(random_gaps(&mut rng, n))?;
        let back = gaps_from_frequencies(&frequencies(&g))?;
        for (a, b) in g.as_slice().iter().zip(back.as_slice()) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok((worst <= tol.roundtrip, format!("max error {worst:.3e} (tol {:.0e})", tol.roundtrip)))
}

fn expansion(tol: &Tolerances, seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let m = rng.random_range(1..=32);
        let n = rng.random_range(1..=m.min(8));
        let g = GapSequence::new(random_gaps(&mut rng, m))?;
        let r = ReferenceTorus::new(random_gaps(&mut rng, n))?;
        worst = worst.max(expansion_residual(&g, &r));
    }
    Ok((worst < tol.expansion, format!("max residual {worst:.3e} (tol {:.0e})", tol.expansion)))
}

fn dirichlet_bound(tol: &Tolerances, seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3);
    let mut worst = f64::NEG_INFINITY;
    let mut q_ok = true;
    for _ in 0..1000 {
        let n = rng.random_range(1..=3);
        let q_max = if rng.random::<bool>() { 10.0 } else { 100.0 };
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let a = dirichlet(&y, q_max)?;
        // independent recomputation of the error of k/q
        let err = y.iter().zip(&a.k).map(|(v, k)| (v - *k as f64 / a.q as f64).abs()).fold(0.0, f64::max);
        let bound = 1.0 / (a.q as f64 * q_max.powf(1.0 / n as f64));
        worst = worst.max(err - bound);
        q_ok &= a.q >= 1 && a.q as f64 <= q_max;
    }
    let pass = worst <= tol.dirichlet_slack && q_ok;
    Ok((pass, format!("max excess over bound {worst:.3e}, q <= Q: {q_ok}")))
}

fn lax_baseline(tol: &Tolerances) -> Result<(bool, String)> {
    let fixed = |s| GapOptions { size: Some(s), max_size: s, ..GapOptions::default() };
    let zero = estimate_gaps(&RealState::zeros(32), 62, &fixed(64))?;
    let zero_max = zero.gaps.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    let u = poisson_state(&[PoissonKernel::new(0.5, 0.0)], 64)?;
    let one = estimate_gaps(&u, 32, &fixed(128))?;
    let tail_max = one.gaps[1..].iter().fold(0.0f64, |a, g| a.max(g.abs()));
    let pass = zero_max < tol.lax_zero && tail_max < tol.finite_gap;
    Ok((pass, format!("zero state max gap {zero_max:.2e}, one-gap state max gamma_n (n>=2) {tail_max:.2e}")))
}

fn relative_drift(values: &[f64]) -> f64 {
    let v0 = values[0];
    values.iter().map(|v| ((v - v0) / v0).abs()).fold(0.0, f64::max)
}

fn isospectrality(tol: &Tolerances) -> Result<(bool, String)> {
    let u0 = poisson_state(&[PoissonKernel::new(0.4, 0.0), PoissonKernel::new(0.3, 1.0)], 256)?;
    let cfg = IntegratorConfig::new(1e-3, 50.0, 1000);
    let traj = evolve(&u0, &Perturbation::none(), &cfg)?;
    let grid = cfg.grid_for(256)?;
    let h: Vec<f64> = traj.states.iter().map(|u| observables(u, &Perturbation::none(), &grid).h_bo).collect();
    let opts = GapOptions::default();
    let g0 = extract_gaps(&u0, 2, &opts)?.gaps;
    let mut gap_drift = 0.0f64;
    for u in &traj.states {
        let g = extract_gaps(u, 2, &opts)?.gaps;
        for (a, b) in g.iter().zip(&g0) {
            gap_drift = gap_drift.max(((a - b) / b).abs());
        }
    }
    let h_drift = relative_drift(&h);
    let pass = gap_drift < tol.iso_gap && h_drift < tol.iso_energy;
    Ok((pass, format!("gaps {:.4?}, gap drift {gap_drift:.2e}, H_BO drift {h_drift:.2e}", g0)))
}

/// `‖u - v(·+θ)‖` and its minimiser over `θ`, by a grid scan refined with
/// golden-section search.
pub fn best_shift(u: &RealState, v: &RealState) -> (f64, f64) {
    let f = |th: f64| u.l2_distance(&v.translated(th));
    let scan = 2048;
    let (mut best, mut fbest) = (0.0, f64::INFINITY);
    for i in 0..scan {
        let th = TAU * i as f64 / scan as f64;
        let fv = f(th);
        if fv < fbest {
            best = th;
            fbest = fv;
        }
    }
    let h = TAU / scan as f64;
    let (mut a, mut b) = (best - h, best + h);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let th = 0.5 * (a + b);
    (th.rem_euclid(TAU), f(th))
}

fn traveling_wave(tol: &Tolerances) -> Result<(bool, String)> {
    let m = 64;
    let u0 = poisson_state(&[PoissonKernel::new(0.5, 0.0)], m)?;
    let t_final = 10.0;
    let traj = evolve(&u0, &Perturbation::none(), &IntegratorConfig::new(1e-3, t_final, 100))?;
    let (_, u_t) = traj.last().expect("nonempty trajectory");
    let (_, mismatch) = best_shift(u_t, &u0);
    // speed from the unwrapped phase of mode 1
    let phase = |u: &RealState| u.coeff(1).arg();
    let mut unwrapped = 0.0;
    let mut prev = phase(&u0);
    for u in &traj.states[1..] {
        let p = phase(u);
        let mut d = p - prev;
        d -= TAU * (d / TAU).round();
        unwrapped += d;
        prev = p;
    }
    let speed = unwrapped.abs() / t_final;
    let gamma1 = extract_gaps(&u0, 1, &GapOptions::default())?.gaps[0];
    let expected = (1.0 - 2.0 * gamma1).abs();
    let pass = mismatch < tol.wave_mismatch && (speed - expected).abs() < tol.wave_speed;
    Ok((pass, format!("shift mismatch {mismatch:.2e}, speed {speed:.6} vs |1-2 gamma_1| = {expected:.6}")))
}

fn conservation(tol: &Tolerances) -> Result<(bool, String)> {
    let m = 64;
    let u0 = poisson_state(&[PoissonKernel::new(0.5, 0.0)], m)?;
    let p = Perturbation::gassot(1e-2);
    let run = |dt: f64| -> Result<(f64, RealState)> {
        let cfg = IntegratorConfig::new(dt, 10.0, (0.1 / dt).round() as usize);
        let traj = evolve(&u0, &p, &cfg)?;
        let grid = cfg.grid_for(m)?;
        let h: Vec<f64> = traj.states.iter().map(|u| observables(u, &p, &grid).h_total).collect();
        Ok((relative_drift(&h), traj.states.last().unwrap().clone()))
    };
    // Coarse enough that the drift stays above rounding at both steps.
    let (d1, u1) = run(2.5e-3)?;
    let (d2, u2) = run(1.25e-3)?;
    let (_, uref) = run(3.125e-4)?;
    let ratio = d1 / d2;
    let err_ratio = u1.l2_distance(&uref) / u2.l2_distance(&uref);
    let band = |r: f64| r >= tol.order / tol.order_band && r <= tol.order * tol.order_band;
    let pass = d1 < tol.conservation && band(ratio) && band(err_ratio);
    Ok((
        pass,
        format!("drift {d1:.2e} (dt=2.5e-3), {d2:.2e} (dt=1.25e-3), drift ratio {ratio:.1}, solution error ratio {err_ratio:.1}"),
    ))
}

/// Experiment shared by criteria 8 and 9.
pub fn sweep_config() -> ExperimentConfig {
    ExperimentConfig {
        n: 1,
        e_min: 0.1,
        e_max: 1.0,
        epsilon: vec![1e-2, 1e-3, 1e-4],
        perturbation: PerturbationSpec { kind: PerturbationKind::Gassot, sign: -1.0 },
        initial: InitialSpec::TargetGaps { gaps: vec![0.318], tol: 1e-12 },
        modes: 64,
        dt: 1e-3,
        scheme: Scheme::default(),
        t_final: 200.0,
        sample_stride: 1000,
        n_max: 8,
        lax_size: None,
        lax_max_size: 1024,
        lax_tol: 1e-10,
        reference: ReferenceSpec::Certificate,
        constants: CertificateConstants::default(),
        output: None,
        seed: 0,
    }
}

struct SweepFacts {
    report: crate::lab::SweepReport,
}

fn sweep_facts() -> Result<SweepFacts> {
    let outcome = run_sweep(&sweep_config())?;
    Ok(SweepFacts { report: outcome.report })
}

impl SweepFacts {
    fn scaling(&self) -> (bool, String) {
        let r = &self.report;
        let drifts: Vec<String> = r
            .runs
            .iter()
            .map(|e| format!("{:.0e}:{}", e.epsilon, e.max_drift.map_or("err".into(), |d| format!("{d:.2e}"))))
            .collect();
        let tails: Vec<String> =
            r.runs.iter().map(|e| e.tail_max.map_or("err".into(), |d| format!("{d:.2e}"))).collect();
        let Some(b) = &r.bound_check else {
            return (false, format!("no bound check: {:?}", r.notes));
        };
        let all_ran = r.runs.iter().all(|e| e.error.is_none());
        let pass = all_ran && b.monotone && b.drift_ok && b.tail_ok;
        (
            pass,
            format!(
                "drift {} slope {:.2}; tail {} (own constant ok {}, drift constant ok {}); monotone {}",
                drifts.join(" "),
                r.slopes.drift.unwrap_or(f64::NAN),
                tails.join(" "),
                b.tail_ok,
                b.tail_within_drift_envelope,
                b.monotone
            ),
        )
    }

    fn confinement(&self) -> (bool, String) {
        let run = self.report.runs.iter().find(|e| e.epsilon == 1e-4);
        match run.and_then(|e| e.confinement.map(|c| (e, c))) {
            Some((e, c)) => (
                c.holds(),
                format!(
                    "gamma* {:?}: max h_omega {:.2e} <= R^2 {:.3}, max H4 {:.2e} <= R^4 {:.3}",
                    e.gamma_star.clone().unwrap_or_default(),
                    c.h_omega_max,
                    c.rsq,
                    c.h4_max,
                    c.rsq * c.rsq
                ),
            ),
            None => (false, "epsilon = 1e-4 run has no resonant reference".into()),
        }
    }
}

fn certificate_arithmetic(tol: &Tolerances) -> Result<(bool, String)> {
    let a = appendix_constants(1.0, 2.0, 1.0, 1.0, 1.0)?;
    let exact = 1_093.085_980_502_216_4_f64;
    let mu_ok = ((a.mu - exact) / exact).abs() <= tol.mu_rel && a.e_sharp == 1.0;
    let q = choose_q(1e-4, 1, 1.0, 1.0);
    let cert =
        full_certificate(&GapSequence::new(vec![0.318])?, 0.0, 1e-4, 0.1, 1.0, &CertificateConstants::default())?;
    let json = serde_json::to_string(&cert)?;
    let back: StabilityCertificate = serde_json::from_str(&json)?;
    let roundtrip_ok = back.hypothesis_flags == cert.hypothesis_flags && back.recheck() == cert.hypothesis_flags;
    let pass = mu_ok && q == 10.0 && roundtrip_ok;
    Ok((pass, format!("mu {:.9}, E# {}, Q {q}, JSON flags identical {roundtrip_ok}", a.mu, a.e_sharp)))
}
