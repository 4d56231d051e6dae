//! Resonant tori near a finite-gap torus and the constants of the
//! exponential-stability certificate.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::birkhoff::{self, FrequencyVector, GapSequence, ReferenceTorus};
use crate::error::{Error, Result};

/// Constants the stability estimates leave unspecified. All default to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateConstants {
    #[serde(rename = "muStar", default = "one")]
    pub mu_star: f64,
    #[serde(rename = "K", default = "one")]
    pub k: f64,
    #[serde(rename = "Ktilde", default = "one")]
    pub k_tilde: f64,
    #[serde(rename = "C4", default = "one")]
    pub c4: f64,
    #[serde(rename = "C5", default = "one")]
    pub c5: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for CertificateConstants {
    fn default() -> Self {
        Self { mu_star: 1.0, k: 1.0, k_tilde: 1.0, c4: 1.0, c5: 1.0 }
    }
}

/// Simultaneous rational approximation `y ≈ k / q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalApproximant {
    pub q: u64,
    pub k: Vec<i64>,
    #[serde(rename = "errBound")]
    pub err_bound: f64,
    #[serde(rename = "errActual")]
    pub err_actual: f64,
    /// False only when floating-point rounding prevented every `q ≤ Q` from
    /// meeting the bound; the closest candidate is returned instead.
    #[serde(rename = "boundMet")]
    pub bound_met: bool,
}

fn approximate_with(y: &[f64], q: u64) -> (Vec<i64>, f64) {
    let qf = q as f64;
    let k: Vec<i64> = y.iter().map(|v| (qf * v).round_ties_even() as i64).collect();
    let err = y.iter().zip(&k).map(|(v, kn)| (v - *kn as f64 / qf).abs()).fold(0.0, f64::max);
    (k, err)
}

/// Exhaustive Dirichlet search: the smallest `q ∈ [1, ⌊Q⌋]` with
/// `max_n |y_n - k_n/q| ≤ 1/(q Q^{1/N})`, `k_n` the nearest integer to `q y_n`
/// (ties to even).
pub fn dirichlet(y: &[f64], q_max: f64) -> Result<RationalApproximant> {
    if y.is_empty() {
        return Err(Error::ParamDomain("Dirichlet search needs at least one frequency".into()));
    }
    if !(q_max >= 1.0) || !q_max.is_finite() {
        return Err(Error::ParamDomain(format!("Dirichlet parameter Q must be >= 1, got {q_max}")));
    }
    if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::ParamDomain(format!("non-finite frequency {bad}")));
    }
    let root = q_max.powf(1.0 / y.len() as f64);
    let mut best: Option<RationalApproximant> = None;
    for q in 1..=(q_max.floor() as u64) {
        let (k, err) = approximate_with(y, q);
        let bound = 1.0 / (q as f64 * root);
        if err <= bound {
            return Ok(RationalApproximant { q, k, err_bound: bound, err_actual: err, bound_met: true });
        }
        if best.as_ref().is_none_or(|b| err < b.err_actual) {
            best = Some(RationalApproximant { q, k, err_bound: bound, err_actual: err, bound_met: false });
        }
    }
    Ok(best.expect("q = 1 is always a candidate"))
}

/// Resonant torus `y* = k/q` with its gaps `γ*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonantTorus {
    #[serde(rename = "yStar")]
    pub y_star: Vec<f64>,
    /// Empty when the rational frequencies leave the gap cone.
    #[serde(rename = "gammaStar")]
    pub gamma_star: Vec<f64>,
    pub valid: bool,
    pub q: u64,
    /// Guaranteed `|γ*_n - γ_n⁰| ≤ 4/(q Q^{1/N})`.
    #[serde(rename = "distanceBound")]
    pub distance_bound: f64,
}

impl ResonantTorus {
    pub fn reference(&self) -> Option<ReferenceTorus> {
        if self.valid {
            ReferenceTorus::new(self.gamma_star.clone()).ok()
        } else {
            None
        }
    }
}

pub fn build_resonant_torus(approx: &RationalApproximant, n: usize) -> Result<ResonantTorus> {
    if approx.k.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: approx.k.len() });
    }
    let y_star: Vec<f64> = approx.k.iter().map(|k| *k as f64 / approx.q as f64).collect();
    let (gamma_star, valid) = match birkhoff::gaps_from_frequencies(&FrequencyVector::new(y_star.clone())) {
        Ok(g) => {
            let open = g.in_open_cone();
            (g.as_slice().to_vec(), open)
        }
        Err(_) => (Vec::new(), false),
    };
    Ok(ResonantTorus { y_star, gamma_star, valid, q: approx.q, distance_bound: 4.0 * approx.err_bound })
}

/// Dirichlet parameter balancing the two contributions to `μ`:
/// `Q = (max{K̃/(40N³E_M)², 1} ε)^{-N/(2(N+1))}`.
pub fn choose_q(epsilon: f64, n: usize, e_max: f64, k_tilde: f64) -> f64 {
    let n3 = (n * n * n) as f64;
    let factor = (k_tilde / (40.0 * n3 * e_max).powi(2)).max(1.0);
    let exponent = n as f64 / (2.0 * (n as f64 + 1.0));
    // 1 / x^p rather than x^{-p}: exact at decimal powers like 1e-4^{1/4}
    1.0 / (factor * epsilon).powf(exponent)
}

/// `ε₂`, `R²` and `μ` of a resonant torus with denominator `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceScales {
    pub eps2: f64,
    pub rsq: f64,
    pub mu: f64,
}

pub fn certificate_constants(q: u64, q_max: f64, n: usize, e_max: f64, epsilon: f64) -> Result<ResonanceScales> {
    if q == 0 || !(q_max >= 1.0) || n == 0 {
        return Err(Error::ParamDomain(format!("need q >= 1, Q >= 1, N >= 1 (got {q}, {q_max}, {n})")));
    }
    let n3 = (n * n * n) as f64;
    let scale = q as f64 * q_max.powf(1.0 / n as f64);
    let eps2 = 10.0 * n3 / scale;
    let rsq = 40.0 * n3 * e_max / scale;
    if rsq == 0.0 || !rsq.is_finite() {
        return Err(Error::DivisionGuard("R^2 is zero or non-finite"));
    }
    let mu = (rsq + epsilon / rsq) * q as f64;
    Ok(ResonanceScales { eps2, rsq, mu })
}

/// Constants of the periodic-flow normal form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixConstants {
    pub mu: f64,
    pub e_sharp: f64,
    /// `μ < 1/2`.
    pub mu_small: bool,
}

pub fn appendix_constants(e: f64, e0: f64, omega0: f64, omega_p: f64, omega: f64) -> Result<AppendixConstants> {
    if !(omega > 0.0) {
        return Err(Error::ParamDomain(format!("period frequency must be positive, got {omega}")));
    }
    let mu = 64.0 * E * PI * (omega0 + omega_p) / omega;
    let denom = 9.0 * omega_p + 5.0 * omega0;
    let second = if denom == 0.0 { 0.0 } else { 2.0 * omega_p * (3.0 * e + e0) / denom };
    Ok(AppendixConstants { mu, e_sharp: e.max(second), mu_small: mu < 0.5 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityTimes {
    #[serde(with = "extended_float")]
    pub normal_form: f64,
    #[serde(with = "extended_float")]
    pub theorem: f64,
}

/// `T_nf = R⁴/(Kε) exp(μ*/μ)` and `T_thm = C₄ exp(C₅ ε^{-1/(2(N+1))})`.
/// Overflow saturates to `+∞`.
#[allow(clippy::too_many_arguments)]
pub fn stability_times(
    rsq: f64,
    epsilon: f64,
    mu: f64,
    mu_star: f64,
    k: f64,
    c4: f64,
    c5: f64,
    n: usize,
) -> StabilityTimes {
    let sat = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
    let normal_form = sat(rsq * rsq / (k * epsilon) * (mu_star / mu).exp());
    let theorem = sat(c4 * (c5 / epsilon.powf(1.0 / (2.0 * (n as f64 + 1.0)))).exp());
    StabilityTimes { normal_form, theorem }
}

/// Comparison recorded in a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
}

impl Relation {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Lt => lhs < rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
        }
    }
}

/// One hypothesis inequality `lhs relation rhs`, both sides recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisFlag {
    pub name: String,
    #[serde(with = "extended_float")]
    pub lhs: f64,
    pub relation: Relation,
    #[serde(with = "extended_float")]
    pub rhs: f64,
    pub pass: bool,
}

impl HypothesisFlag {
    fn new(name: impl Into<String>, lhs: f64, relation: Relation, rhs: f64) -> Self {
        Self { name: name.into(), lhs, relation, rhs, pass: relation.holds(lhs, rhs) }
    }
}

/// Everything needed to re-derive the stability claim for one finite-gap torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "E_m")]
    pub e_min: f64,
    #[serde(rename = "E_M")]
    pub e_max: f64,
    pub epsilon: f64,
    #[serde(rename = "Ktilde")]
    pub k_tilde: f64,
    #[serde(rename = "K")]
    pub k_const: f64,
    #[serde(rename = "C4")]
    pub c4: f64,
    #[serde(rename = "C5")]
    pub c5: f64,
    pub gamma0: Vec<f64>,
    pub tail_energy: f64,
    pub y0: Vec<f64>,
    #[serde(rename = "Q")]
    pub q_param: f64,
    pub q: u64,
    pub k: Vec<i64>,
    #[serde(rename = "errBound")]
    pub err_bound: f64,
    #[serde(rename = "errActual")]
    pub err_actual: f64,
    #[serde(rename = "yStar")]
    pub y_star: Vec<f64>,
    #[serde(rename = "gammaStar")]
    pub gamma_star: Vec<f64>,
    pub resonant_valid: bool,
    #[serde(rename = "Rsq")]
    pub rsq: f64,
    pub eps1: f64,
    pub eps2: f64,
    #[serde(with = "extended_float")]
    pub mu: f64,
    #[serde(rename = "muStar")]
    pub mu_star: f64,
    /// `1/Q^{1/N} + ε Q^{2+1/N}`, the bracket controlling `μ` up to a constant.
    #[serde(with = "extended_float")]
    pub mu_dirichlet_bracket: f64,
    #[serde(with = "extended_float")]
    pub h_omega_0_bound: f64,
    #[serde(rename = "H4_0_bound", with = "extended_float")]
    pub h4_0_bound: f64,
    #[serde(with = "extended_float")]
    pub time_estimate_normalform: f64,
    #[serde(with = "extended_float")]
    pub time_estimate_theorem: f64,
    /// The time estimates depend on constants that are configuration, not derived.
    pub constants_configurable: bool,
    pub hypothesis_flags: Vec<HypothesisFlag>,
}

impl StabilityCertificate {
    pub fn all_pass(&self) -> bool {
        self.hypothesis_flags.iter().all(|f| f.pass)
    }

    pub fn flag(&self, name: &str) -> Option<&HypothesisFlag> {
        self.hypothesis_flags.iter().find(|f| f.name == name)
    }

    /// Recomputes every hypothesis from the stored scalar fields.
    pub fn recheck(&self) -> Vec<HypothesisFlag> {
        hypothesis_flags(self)
    }

    /// True when every stored flag matches its recomputation.
    pub fn is_consistent(&self) -> bool {
        let fresh = self.recheck();
        fresh.len() == self.hypothesis_flags.len()
            && fresh
                .iter()
                .zip(&self.hypothesis_flags)
                .all(|(a, b)| a.name == b.name && a.pass == b.pass && a.relation == b.relation)
    }
}

fn hypothesis_flags(c: &StabilityCertificate) -> Vec<HypothesisFlag> {
    use Relation::*;
    let mut flags = Vec::new();
    for (i, g) in c.gamma0.iter().enumerate() {
        flags.push(HypothesisFlag::new(format!("gap_lower[{}]", i + 1), c.e_min, Le, *g));
        flags.push(HypothesisFlag::new(format!("gap_upper[{}]", i + 1), *g, Le, c.e_max));
    }
    flags.push(HypothesisFlag::new("energy_ceiling_at_least_one", 1.0, Le, c.e_max));
    flags.push(HypothesisFlag::new("dirichlet_bound", c.err_actual, Le, c.err_bound));
    let n = c.n as f64;
    flags.push(HypothesisFlag::new("q_range_lower", (n * n * c.e_max).powf(-n), Le, c.q_param));
    let min_gap = if c.resonant_valid { c.gamma_star.iter().copied().fold(f64::INFINITY, f64::min) } else { 0.0 };
    flags.push(HypothesisFlag::new("resonant_torus_in_cone", 0.0, Lt, min_gap));
    flags.push(HypothesisFlag::new("tail_energy_small", c.tail_energy, Le, c.eps2));
    let scale = c.q as f64 * c.q_param.powf(1.0 / n);
    flags.push(HypothesisFlag::new("h_omega_initial", c.h_omega_0_bound, Le, 40.0 * n.powi(3) * c.e_max / scale));
    flags.push(HypothesisFlag::new("h4_initial", c.h4_0_bound, Le, 2.0 * c.eps2 * c.eps2));
    flags.push(HypothesisFlag::new("mu_small", c.mu, Lt, c.mu_star / 2.0));
    flags.push(HypothesisFlag::new("eps_q_small", c.epsilon * c.q as f64, Le, c.rsq / c.k_const));
    flags.push(HypothesisFlag::new("eps_r4_small", c.epsilon, Le, c.rsq * c.rsq / c.k_tilde));
    flags
}

/// Upper bounds for `h_ω(0)` and `H_4(0)` from the leading offsets and the
/// tail energy `Σ_{n>N} n² γ_n`, assuming nothing else about the tail.
fn initial_lyapunov_bounds(gamma0: &[f64], torus: &ResonantTorus, tail_energy: f64) -> (f64, f64) {
    let n = gamma0.len();
    if !torus.valid {
        return (f64::INFINITY, f64::INFINITY);
    }
    let offsets: Vec<f64> = gamma0.iter().zip(&torus.gamma_star).map(|(g, s)| g - s).collect();
    let y_star = birkhoff::frequencies(&GapSequence::new(torus.gamma_star.clone()).expect("valid torus"));
    let lead: f64 = offsets
        .iter()
        .enumerate()
        .map(|(i, x)| (((i + 1) * (i + 1)) as f64 + 2.0 * y_star.get(i + 1).abs()) * x.abs())
        .sum();
    let np1 = (n + 1) as f64;
    let h_omega = lead + tail_energy * (1.0 + 2.0 * y_star.get(n).abs() / (np1 * np1));

    // s_l of the tail is at most tail_energy / max(l, N+1)²
    let tail_sum = tail_energy / (np1 * np1);
    let lead_sums = birkhoff::tail_sums(&offsets);
    let mut h4: f64 = lead_sums.iter().map(|s| (s.abs() + tail_sum).powi(2)).sum();
    let inverse_quartic: f64 = (n + 1..n + 100_000).map(|l| (l as f64).powi(-4)).sum();
    h4 += tail_energy * tail_energy * inverse_quartic;
    (h_omega, h4)
}

/// Runs the whole resonance pipeline for the leading gaps `γ⁰` of a torus.
///
/// Failed hypotheses, including a resonant torus outside the gap cone, are
/// recorded as flags rather than errors.
pub fn full_certificate(
    gamma0: &GapSequence,
    tail_energy: f64,
    epsilon: f64,
    e_min: f64,
    e_max: f64,
    constants: &CertificateConstants,
) -> Result<StabilityCertificate> {
    let n = gamma0.len();
    if n == 0 {
        return Err(Error::ParamDomain("certificate needs N >= 1".into()));
    }
    if !(epsilon > 0.0) || !(e_max > 0.0) || !(tail_energy >= 0.0) {
        return Err(Error::ParamDomain(format!(
            "need epsilon > 0, E_M > 0, tail energy >= 0 (got {epsilon}, {e_max}, {tail_energy})"
        )));
    }
    let y0 = birkhoff::frequencies(gamma0);
    let q_param = choose_q(epsilon, n, e_max, constants.k_tilde);
    let approx = dirichlet(y0.as_slice(), q_param)?;
    let torus = build_resonant_torus(&approx, n)?;
    let scales = certificate_constants(approx.q, q_param, n, e_max, epsilon)?;
    let times =
        stability_times(scales.rsq, epsilon, scales.mu, constants.mu_star, constants.k, constants.c4, constants.c5, n);
    let (h_omega_0_bound, h4_0_bound) = initial_lyapunov_bounds(gamma0.as_slice(), &torus, tail_energy);
    let root = q_param.powf(1.0 / n as f64);

    let mut cert = StabilityCertificate {
        n,
        e_min,
        e_max,
        epsilon,
        k_tilde: constants.k_tilde,
        k_const: constants.k,
        c4: constants.c4,
        c5: constants.c5,
        gamma0: gamma0.as_slice().to_vec(),
        tail_energy,
        y0: y0.as_slice().to_vec(),
        q_param,
        q: approx.q,
        k: approx.k.clone(),
        err_bound: approx.err_bound,
        err_actual: approx.err_actual,
        y_star: torus.y_star.clone(),
        gamma_star: torus.gamma_star.clone(),
        resonant_valid: torus.valid,
        rsq: scales.rsq,
        eps1: scales.rsq,
        eps2: scales.eps2,
        mu: scales.mu,
        mu_star: constants.mu_star,
        mu_dirichlet_bracket: 1.0 / root + epsilon * q_param.powf(2.0 + 1.0 / n as f64),
        h_omega_0_bound,
        h4_0_bound,
        time_estimate_normalform: times.normal_form,
        time_estimate_theorem: times.theorem,
        constants_configurable: true,
        hypothesis_flags: Vec::new(),
    };
    cert.hypothesis_flags = hypothesis_flags(&cert);
    Ok(cert)
}

/// Serialises non-finite floats as the strings `"inf"`, `"-inf"`, `"nan"` so
/// that saturated time estimates survive a JSON round trip.
pub mod extended_float {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("not a float: {other}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    /// Independent brute force: every q ≤ Q and every k within ±1 of q·y.
    fn brute_force(y: &[f64], q_max: f64) -> (u64, Vec<i64>, f64) {
        let root = q_max.powf(1.0 / y.len() as f64);
        for q in 1..=(q_max.floor() as u64) {
            let mut ks = Vec::new();
            let mut worst: f64 = 0.0;
            for v in y {
                let centre = (q as f64 * v).floor() as i64;
                let (k, e) = (centre - 1..=centre + 2)
                    .map(|k| (k, (v - k as f64 / q as f64).abs()))
                    .fold((0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
                ks.push(k);
                worst = worst.max(e);
            }
            if worst <= 1.0 / (q as f64 * root) {
                return (q, ks, worst);
            }
        }
        panic!("no approximant found");
    }

    #[test]
    fn dirichlet_single_frequency() {
        let (q, k, err) = brute_force(&[0.318], 10.0);
        assert_eq!((q, k.clone()), (3, vec![1]));
        let a = dirichlet(&[0.318], 10.0).unwrap();
        assert_eq!((a.q, a.k), (q, k));
        assert_abs_diff_eq!(a.err_actual, err, epsilon = 1e-15);
        assert_abs_diff_eq!(a.err_actual, 0.015333333333333332, epsilon = 1e-12);
        assert!(a.err_actual <= 1.0 / 30.0);
        assert!(a.bound_met);
    }

    #[test]
    fn dirichlet_exact_resonance() {
        let a = dirichlet(&[2.0, -1.0, 5.0], 37.0).unwrap();
        assert_eq!((a.q, a.k, a.err_actual), (1, vec![2, -1, 5], 0.0));
    }

    #[test]
    fn dirichlet_inclusive_bound_picks_smallest_q() {
        // q = 1 meets 1/(1·√4) = 0.5 with equality, so it wins over q = 2, 4
        let (q, _, err) = brute_force(&[0.5, 0.25], 4.0);
        assert_eq!((q, err), (1, 0.5));
        let a = dirichlet(&[0.5, 0.25], 4.0).unwrap();
        assert_eq!((a.q, a.k.clone(), a.err_actual, a.err_bound), (1, vec![0, 0], 0.5, 0.5));
    }

    #[test]
    fn dirichlet_rejects_bad_input() {
        assert!(dirichlet(&[0.1], 0.5).is_err());
        assert!(dirichlet(&[], 10.0).is_err());
        assert!(dirichlet(&[f64::NAN], 10.0).is_err());
    }

    #[test]
    fn resonant_torus_examples() {
        // y⁰ = (0.75, 1) is already rational with q = 4
        let a = RationalApproximant { q: 4, k: vec![3, 4], err_bound: 0.1, err_actual: 0.0, bound_met: true };
        let t = build_resonant_torus(&a, 2).unwrap();
        assert_eq!(t.gamma_star, vec![0.5, 0.25]);
        assert!(t.valid);

        let a = RationalApproximant { q: 3, k: vec![1], err_bound: 0.1, err_actual: 0.0, bound_met: true };
        let t = build_resonant_torus(&a, 1).unwrap();
        assert_abs_diff_eq!(t.gamma_star[0], 1.0 / 3.0, epsilon = 1e-16);

        let a = RationalApproximant { q: 1, k: vec![1, 3], err_bound: 0.1, err_actual: 0.0, bound_met: true };
        let t = build_resonant_torus(&a, 2).unwrap();
        assert!(!t.valid);
        assert!(t.reference().is_none());
    }

    #[test]
    fn choose_q_examples() {
        assert_eq!(choose_q(1e-4, 1, 1.0, 1.0), 10.0);
        assert_eq!(choose_q(1.0, 3, 1.0, 1.0), 1.0);
        assert_relative_eq!(choose_q(1e-6, 2, 1.0, 1.0), 100.0, max_relative = 1e-14);
        // K̃ above (40 N³ E_M)² changes the balance
        let big = choose_q(1e-4, 1, 1.0, 6400.0);
        assert_relative_eq!(big, (4.0f64 * 1e-4).powf(-0.25), max_relative = 1e-14);
    }

    #[test]
    fn certificate_constant_examples() {
        let s = certificate_constants(1, 10.0, 1, 1.0, 1e-4).unwrap();
        assert_abs_diff_eq!(s.eps2, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.rsq, 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.mu, 4.0 + 1e-4 / 4.0, epsilon = 1e-15);

        let s = certificate_constants(3, 10.0, 1, 1.0, 1e-4).unwrap();
        assert_abs_diff_eq!(s.rsq, 40.0 / 30.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.mu, (40.0 / 30.0 + 7.5e-5) * 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.mu, 4.0002, epsilon = 1e-4);

        // balanced point ε = R⁴ gives μ = 2 R² q
        let r = certificate_constants(2, 10.0, 1, 1.0, 1.0).unwrap().rsq;
        let s = certificate_constants(2, 10.0, 1, 1.0, r * r).unwrap();
        assert_relative_eq!(s.mu, 2.0 * r * 2.0, max_relative = 1e-15);

        assert!(matches!(certificate_constants(1, 10.0, 1, 0.0, 1e-4), Err(Error::DivisionGuard(_))));
    }

    #[test]
    fn appendix_constant_examples() {
        let a = appendix_constants(1.0, 2.0, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(a.mu, 128.0 * E * PI, max_relative = 1e-15);
        assert_abs_diff_eq!(a.mu, 1093.09, epsilon = 5e-3);
        assert_eq!(a.e_sharp, 1.0);
        assert!(!a.mu_small);

        let a = appendix_constants(0.7, 3.0, 2.0, 0.0, 4.0).unwrap();
        assert_relative_eq!(a.mu, 64.0 * E * PI * 2.0 / 4.0, max_relative = 1e-15);
        assert_eq!(a.e_sharp, 0.7);
        assert!(appendix_constants(1.0, 1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn stability_time_examples() {
        let t = stability_times(1.0, 1e-4, 2.0, 2.0, 1.0, 1.0, 1.0, 1);
        assert_relative_eq!(t.normal_form, 1e4 * E, max_relative = 1e-14);
        let t = stability_times(1.0, 1e-4, 1e12, 1e-12, 1.0, 1.0, 1.0, 1);
        assert_relative_eq!(t.normal_form, 1e4, max_relative = 1e-12);
        let t = stability_times(1.0, 1e-4, 1e-6, 1.0, 1.0, 1.0, 1.0, 1);
        assert_eq!(t.normal_form, f64::INFINITY);
        // log T_thm = log C4 + C5 ε^{-1/4}
        let t = stability_times(1.0, 1e-8, 1.0, 1.0, 1.0, 1.0, 1.0, 1);
        assert_relative_eq!(t.theorem.ln(), 100.0, max_relative = 1e-12);
    }

    #[test]
    fn certificate_all_flags_pass_for_resonant_data() {
        let g = GapSequence::new(vec![1.0]).unwrap();
        let c = full_certificate(&g, 0.0, 1e-10, 0.5, 1.0, &CertificateConstants::default()).unwrap();
        assert_eq!((c.q, c.k.clone(), c.err_actual), (1, vec![1], 0.0));
        assert!(c.all_pass(), "{:#?}", c.hypothesis_flags);
        assert!(c.is_consistent());
    }

    #[test]
    fn certificate_follows_dirichlet_example() {
        let g = GapSequence::new(vec![0.318]).unwrap();
        let c = full_certificate(&g, 0.0, 1e-4, 0.1, 1.0, &CertificateConstants::default()).unwrap();
        assert_eq!(c.q_param, 10.0);
        assert_eq!((c.q, c.k.clone()), (3, vec![1]));
        assert_abs_diff_eq!(c.gamma_star[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.rsq, 4.0 / 3.0, epsilon = 1e-15);
        assert_eq!(c.eps1, c.rsq);
        assert!(c.flag("gap_lower[1]").unwrap().pass);
        assert!(!c.flag("mu_small").unwrap().pass);
        assert!(c.is_consistent());
    }

    #[test]
    fn certificate_flags_energy_window_violation() {
        let g = GapSequence::new(vec![1.5]).unwrap();
        let c = full_certificate(&g, 0.0, 1e-6, 0.1, 1.0, &CertificateConstants::default()).unwrap();
        assert!(!c.flag("gap_upper[1]").unwrap().pass);
        assert!(!c.all_pass());
    }

    #[test]
    fn certificate_json_roundtrip_keeps_flags() {
        let g = GapSequence::new(vec![0.4, 0.05]).unwrap();
        let c = full_certificate(&g, 1e-3, 1e-3, 0.01, 1.0, &CertificateConstants::default()).unwrap();
        let text = serde_json::to_string_pretty(&c).unwrap();
        for key in
            ["\"N\"", "\"E_m\"", "\"Ktilde\"", "\"gammaStar\"", "\"Rsq\"", "\"H4_0_bound\"", "\"hypothesis_flags\""]
        {
            assert!(text.contains(key), "missing {key}");
        }
        let back: StabilityCertificate = serde_json::from_str(&text).unwrap();
        assert_eq!(back.hypothesis_flags, c.hypothesis_flags);
        assert!(back.is_consistent());
    }

    #[test]
    fn infinite_times_survive_json() {
        let g = GapSequence::new(vec![1.0]).unwrap();
        let mut c = full_certificate(&g, 0.0, 1e-10, 0.5, 1.0, &CertificateConstants::default()).unwrap();
        c.time_estimate_theorem = f64::INFINITY;
        let back: StabilityCertificate = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back.time_estimate_theorem, f64::INFINITY);
    }

    proptest! {
        #[test]
        fn dirichlet_guarantee(n in 1usize..4, q_big in prop::bool::ANY, seed in prop::collection::vec(0.0f64..1.0, 3)) {
            let q_max = if q_big { 100.0 } else { 10.0 };
            let y: Vec<f64> = seed[..n].iter().map(|v| v * (n * n) as f64).collect();
            let a = dirichlet(&y, q_max).unwrap();
            prop_assert!(a.q >= 1 && a.q as f64 <= q_max);
            prop_assert!(a.err_actual <= 1.0 / (a.q as f64 * q_max.powf(1.0 / n as f64)) + 1e-12);
            let (q, _, _) = brute_force(&y, q_max);
            prop_assert_eq!(q, a.q);
        }

        #[test]
        fn choose_q_is_nonincreasing(n in 1usize..5, e1 in 1e-12f64..1.0, e2 in 1e-12f64..1.0, em in 1.0f64..5.0) {
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            prop_assert!(choose_q(lo, n, em, 1.0) >= choose_q(hi, n, em, 1.0));
        }

        #[test]
        fn resonant_torus_stays_close(g in prop::collection::vec(0.1f64..1.0, 1..4), q_big in prop::bool::ANY) {
            let n = g.len();
            let q_max = if q_big { 100.0 } else { 10.0 };
            let y0 = birkhoff::frequencies(&GapSequence::new(g.clone()).unwrap());
            let a = dirichlet(y0.as_slice(), q_max).unwrap();
            let t = build_resonant_torus(&a, n).unwrap();
            prop_assume!(t.valid);
            for (s, g0) in t.gamma_star.iter().zip(&g) {
                prop_assert!((s - g0).abs() <= 4.0 / (a.q as f64 * q_max.powf(1.0 / n as f64)) + 1e-12);
            }
        }

        #[test]
        fn certificate_recheck_is_faithful(
            g in prop::collection::vec(0.05f64..1.5, 1..4),
            tail in 0.0f64..0.1,
            log_eps in -10.0f64..-1.0,
        ) {
            let c = full_certificate(&GapSequence::new(g).unwrap(), tail, 10f64.powf(log_eps), 0.1, 1.0, &CertificateConstants::default()).unwrap();
            let back: StabilityCertificate = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
            prop_assert!(back.is_consistent());
        }
    }
}
