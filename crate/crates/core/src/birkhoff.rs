//! Closed-form arithmetic of the Benjamin-Ono integrable structure.
//!
//! Everything here works on finitely truncated sequences. Index `i` of a
//! stored vector is the mode `n = i + 1`; modes beyond the stored length are
//! zero.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Small negative gaps within this tolerance are clamped to zero.
pub const GAP_CLAMP_TOL: f64 = 1e-14;

/// Nonnegative actions `γ_1..γ_M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GapSequence(Vec<f64>);

impl GapSequence {
    /// Validates and stores a gap sequence. Entries in `[-GAP_CLAMP_TOL, 0)`
    /// are clamped to zero; anything more negative is rejected.
    pub fn new(mut gaps: Vec<f64>) -> Result<Self> {
        for (i, g) in gaps.iter_mut().enumerate() {
            if !g.is_finite() || *g < -GAP_CLAMP_TOL {
                return Err(Error::NegativeGap { index: i + 1, value: *g });
            }
            if *g < 0.0 {
                *g = 0.0;
            }
        }
        Ok(Self(gaps))
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    /// Truncation index `M`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Gap of mode `n` (1-based), zero beyond the truncation.
    pub fn get(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        self.0.get(n - 1).copied().unwrap_or(0.0)
    }

    /// The first `n` gaps, zero-padded if the sequence is shorter.
    pub fn leading(&self, n: usize) -> GapSequence {
        GapSequence((1..=n).map(|k| self.get(k)).collect())
    }

    /// Weighted energy `Σ n² γ_n` over modes `n > from`.
    pub fn weighted_tail(&self, from: usize) -> f64 {
        self.0.iter().enumerate().skip(from).map(|(i, g)| ((i + 1) * (i + 1)) as f64 * g).sum()
    }

    /// True when every stored gap is strictly positive (open gap cone).
    pub fn in_open_cone(&self) -> bool {
        self.0.iter().all(|&g| g > 0.0)
    }
}

/// Tail sums `s_l = Σ_{k≥l} x_k` for `l = 1..len`. Works on signed offsets too.
pub fn tail_sums(x: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; x.len()];
    let mut acc = 0.0;
    for i in (0..x.len()).rev() {
        acc += x[i];
        s[i] = acc;
    }
    s
}

/// Partial sums `s_l(γ)`, nonincreasing and nonnegative.
pub fn partial_sums(g: &GapSequence) -> Vec<f64> {
    tail_sums(g.as_slice())
}

/// Frequency modulations `y_1..y_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrequencyVector(Vec<f64>);

impl FrequencyVector {
    pub fn new(y: Vec<f64>) -> Self {
        Self(y)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `y_n` with the N-gap extension `y_n = y_N` for `n > N`.
    pub fn get(&self, n: usize) -> f64 {
        match n {
            0 => 0.0,
            _ if n <= self.0.len() => self.0[n - 1],
            _ => self.0.last().copied().unwrap_or(0.0),
        }
    }

    /// Frequencies `ω_n = n² - 2 y_n` for the stored modes.
    pub fn omegas(&self) -> Vec<f64> {
        self.0.iter().enumerate().map(|(i, y)| ((i + 1) * (i + 1)) as f64 - 2.0 * y).collect()
    }

    /// `ω_n` for any mode, using the N-gap extension beyond the stored length.
    pub fn omega(&self, n: usize) -> f64 {
        (n * n) as f64 - 2.0 * self.get(n)
    }
}

fn cumulative(x: &[f64]) -> Vec<f64> {
    x.iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// `y_n = Σ_{l≤n} s_l(γ)` for every stored mode.
pub fn frequencies(g: &GapSequence) -> FrequencyVector {
    FrequencyVector(cumulative(&partial_sums(g)))
}

/// Inverse of [`frequencies`] for an N-gap state: `γ_n = 2y_n - y_{n+1} - y_{n-1}`
/// with `y_0 = 0` and `y_{N+1} = y_N`.
///
/// Fails with [`Error::InvalidFrequency`] when a gap falls below
/// `-GAP_CLAMP_TOL`; boundary values are clamped to zero. Whether the result
/// lies in the open cone is checked by [`GapSequence::in_open_cone`].
pub fn gaps_from_frequencies(y: &FrequencyVector) -> Result<GapSequence> {
    let n = y.len();
    let mut gaps = Vec::with_capacity(n);
    for k in 1..=n {
        let g = 2.0 * y.get(k) - y.get(k + 1) - y.get(k - 1);
        if !g.is_finite() || g < -GAP_CLAMP_TOL {
            return Err(Error::InvalidFrequency { index: k, value: g });
        }
        gaps.push(g.max(0.0));
    }
    Ok(GapSequence(gaps))
}

/// The pieces of `H_BO = H_2 - H_4` in Birkhoff variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hamiltonians {
    pub h2: f64,
    pub h4: f64,
    pub h_bo: f64,
}

/// Quartic part `Σ_n s_n(x)²` for arbitrary (possibly signed) offsets.
pub fn quartic(x: &[f64]) -> f64 {
    tail_sums(x).iter().map(|s| s * s).sum()
}

pub fn hamiltonians(g: &GapSequence) -> Hamiltonians {
    let h2 = g.weighted_tail(0);
    let h4 = quartic(g.as_slice());
    Hamiltonians { h2, h4, h_bo: h2 - h4 }
}

/// Reference finite-gap torus with gaps `γ*` and frequency modulations `y*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTorus {
    gamma_star: Vec<f64>,
    y_star: Vec<f64>,
}

impl ReferenceTorus {
    pub fn new(gamma_star: Vec<f64>) -> Result<Self> {
        if gamma_star.is_empty() {
            return Err(Error::ParamDomain("reference torus needs N >= 1 gaps".into()));
        }
        let g = GapSequence::new(gamma_star)?;
        let y_star = frequencies(&g).0;
        Ok(Self { gamma_star: g.0, y_star })
    }

    pub fn from_gaps(g: &GapSequence) -> Result<Self> {
        Self::new(g.as_slice().to_vec())
    }

    /// Number of leading modes `N`.
    pub fn modes(&self) -> usize {
        self.gamma_star.len()
    }

    pub fn gamma_star(&self) -> &[f64] {
        &self.gamma_star
    }

    pub fn y_star(&self) -> &[f64] {
        &self.y_star
    }

    /// `n² - 2 y*_n` with `y*_n = y*_N` beyond the leading modes.
    pub fn linear_frequency(&self, n: usize) -> f64 {
        let nn = self.modes();
        let y = if n <= nn { self.y_star[n - 1] } else { self.y_star[nn - 1] };
        (n * n) as f64 - 2.0 * y
    }

    /// Strict bounds `E_m < γ*_n < E_M`.
    pub fn within_energy_window(&self, e_min: f64, e_max: f64) -> bool {
        self.gamma_star.iter().all(|&g| e_min < g && g < e_max)
    }

    /// The a priori frequency bound `|y*_n| ≤ n (N - (n-1)/2) E_M`.
    pub fn frequency_bound_holds(&self, e_max: f64) -> bool {
        let nn = self.modes() as f64;
        self.y_star.iter().enumerate().all(|(i, y)| {
            let n = (i + 1) as f64;
            y.abs() <= n * (nn - (n - 1.0) / 2.0) * e_max * (1.0 + 1e-12)
        })
    }
}

/// Point of the action-angle chart around a reference torus: offsets `I`,
/// angles `φ` on the leading modes and complex pairs `(ξ_n, η_n)` on the tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusChartPoint {
    pub offsets: Vec<f64>,
    pub angles: Vec<f64>,
    pub tail: Vec<(Complex64, Complex64)>,
}

impl TorusChartPoint {
    pub fn new(offsets: Vec<f64>, angles: Vec<f64>, tail: Vec<(Complex64, Complex64)>) -> Result<Self> {
        if offsets.len() != angles.len() {
            return Err(Error::DimensionMismatch { expected: offsets.len(), found: angles.len() });
        }
        Ok(Self { offsets, angles, tail })
    }

    /// Point on the reference torus itself (`I = 0`, `φ = 0`, empty tail up to `m`).
    pub fn origin(n: usize, m: usize) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self { offsets: vec![0.0; n], angles: vec![0.0; n], tail: vec![(zero, zero); m.saturating_sub(n)] }
    }

    /// Chart point with real tail `ξ_n = η_n = sqrt(γ_n)` built from gaps.
    pub fn from_gaps(g: &GapSequence, reference: &ReferenceTorus) -> Self {
        let n = reference.modes();
        let offsets = (1..=n).map(|k| g.get(k) - reference.gamma_star[k - 1]).collect();
        let tail = (n + 1..=g.len().max(n))
            .map(|k| {
                let a = Complex64::new(g.get(k).sqrt(), 0.0);
                (a, a)
            })
            .collect();
        Self { offsets, angles: vec![0.0; n], tail }
    }

    /// Number of leading modes `N`.
    pub fn modes(&self) -> usize {
        self.offsets.len()
    }

    /// Reality: `η_n = conj(ξ_n)` on the tail and finite real angles.
    pub fn is_real(&self, tol: f64) -> bool {
        self.angles.iter().all(|a| a.is_finite())
            && self.offsets.iter().all(|i| i.is_finite())
            && self.tail.iter().all(|(x, e)| (x.conj() - e).norm() <= tol)
    }

    /// Tail gaps `ξ_n η_n` (complex in general, real on real points).
    pub fn tail_products(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.tail.iter().map(|(x, e)| x * e)
    }

    /// Full offset vector: `I_n` on leading modes, `Re(ξ_n η_n)` on the tail.
    pub fn full_offsets(&self) -> Vec<f64> {
        self.offsets.iter().copied().chain(self.tail_products().map(|p| p.re)).collect()
    }
}

fn check_modes(p: &TorusChartPoint, reference: &ReferenceTorus) -> Result<()> {
    if p.modes() != reference.modes() {
        return Err(Error::DimensionMismatch { expected: reference.modes(), found: p.modes() });
    }
    Ok(())
}

/// Linearised Hamiltonian at the reference torus,
/// `h_ω = Σ_{n≤N} (n² - 2y*_n) I_n + Σ_{n>N} (n² - 2y*_N) ξ_n η_n`.
pub fn h_omega(p: &TorusChartPoint, reference: &ReferenceTorus) -> Result<f64> {
    check_modes(p, reference)?;
    let n = p.modes();
    let lead: f64 = p.offsets.iter().enumerate().map(|(i, x)| reference.linear_frequency(i + 1) * x).sum();
    let tail: f64 = p.tail_products().enumerate().map(|(j, g)| reference.linear_frequency(n + 1 + j) * g.re).sum();
    Ok(lead + tail)
}

/// Quartic Lyapunov function `H_4(I)` of a chart point.
pub fn h4_of_point(p: &TorusChartPoint) -> f64 {
    quartic(&p.full_offsets())
}

/// Residual of the expansion of `H_BO` about a reference torus. Vanishes up
/// to rounding for every gap sequence.
///
/// Both sides are large sums that cancel, so they are accumulated in
/// double-double arithmetic; the residual then reflects the formula and not
/// the summation order.
pub fn expansion_residual(g: &GapSequence, reference: &ReferenceTorus) -> f64 {
    let n = reference.modes();
    let m = g.len().max(n);
    let gamma: Vec<Dd> = (1..=m).map(|k| Dd::from(g.get(k))).collect();
    let star: Vec<Dd> = (1..=m).map(|k| Dd::from(if k <= n { reference.gamma_star[k - 1] } else { 0.0 })).collect();
    let offsets: Vec<Dd> = gamma.iter().zip(&star).map(|(a, b)| *a - *b).collect();

    let tails = |x: &[Dd]| -> Vec<Dd> {
        let mut acc = Dd::ZERO;
        let mut out = vec![Dd::ZERO; x.len()];
        for (k, v) in x.iter().enumerate().rev() {
            acc = acc + *v;
            out[k] = acc;
        }
        out
    };
    let square_sum = |s: &[Dd]| s.iter().fold(Dd::ZERO, |a, v| a + *v * *v);
    let h_bo = |x: &[Dd]| {
        let h2 = x.iter().enumerate().fold(Dd::ZERO, |a, (k, v)| a + Dd::from(((k + 1) * (k + 1)) as f64) * *v);
        h2 - square_sum(&tails(x))
    };

    // y*_n with the N-gap extension y*_n = y*_N for n > N
    let s_star = tails(&star);
    let mut y_star = vec![Dd::ZERO; m];
    let mut acc = Dd::ZERO;
    for k in 0..m {
        if k < n {
            acc = acc + s_star[k];
        }
        y_star[k] = acc;
    }
    let linear = offsets.iter().enumerate().fold(Dd::ZERO, |a, (k, x)| {
        let w = Dd::from(((k + 1) * (k + 1)) as f64) - Dd::from(2.0) * y_star[k];
        a + w * *x
    });
    let expanded = h_bo(&star) + linear - square_sum(&tails(&offsets));
    (h_bo(&gamma) - expanded).to_f64().abs()
}

/// Unevaluated sum `hi + lo` carrying about 106 bits.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn renorm(hi: f64, lo: f64) -> Dd {
        let s = hi + lo;
        Dd { hi: s, lo: lo - (s - hi) }
    }
}

impl From<f64> for Dd {
    fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }
}

impl std::ops::Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = Dd::two_sum(self.hi, o.hi);
        let (t, f) = Dd::two_sum(self.lo, o.lo);
        let r = Dd::renorm(s, e + t);
        Dd::renorm(r.hi, r.lo + f)
    }
}

impl std::ops::Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl std::ops::Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl std::ops::Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::renorm(p, e + (self.hi * o.lo + self.lo * o.hi))
    }
}

/// Angle representative in `(-π, π]`.
pub fn wrap_signed(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Angle representative in `[0, 2π)`.
pub fn wrap_positive(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Weighted phase-space norm with scale `r`:
/// `Σ n²|I_n|/r + r sup|φ_n| + sqrt(Σ_{n>N} n²(|ξ_n|² + |η_n|²))`.
pub fn phase_norm(p: &TorusChartPoint, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::ParamDomain(format!("norm scale must be positive, got {r}")));
    }
    let n = p.modes();
    let actions: f64 = p.offsets.iter().enumerate().map(|(i, x)| ((i + 1) * (i + 1)) as f64 * x.abs()).sum::<f64>() / r;
    let angles = p.angles.iter().map(|a| wrap_signed(*a).abs()).fold(0.0, f64::max) * r;
    let tail: f64 = p
        .tail
        .iter()
        .enumerate()
        .map(|(j, (x, e))| {
            let k = (n + 1 + j) as f64;
            k * k * (x.norm_sqr() + e.norm_sqr())
        })
        .sum();
    Ok(actions + angles + tail.sqrt())
}

/// Membership in the confinement domain: `H_4(I) ≤ ε₁²` and `h_ω ≤ ε₁`.
pub fn in_confinement_domain(p: &TorusChartPoint, reference: &ReferenceTorus, eps1: f64) -> Result<bool> {
    let hw = h_omega(p, reference)?;
    Ok(h4_of_point(p) <= eps1 * eps1 && hw <= eps1)
}

/// Maps a chart point to full Birkhoff pairs `(ξ_n, η_n)`, `n = 1..M`.
pub fn chart_to_birkhoff(p: &TorusChartPoint, reference: &ReferenceTorus) -> Result<Vec<(Complex64, Complex64)>> {
    check_modes(p, reference)?;
    let mut out = Vec::with_capacity(p.modes() + p.tail.len());
    for (i, (x, phi)) in p.offsets.iter().zip(&p.angles).enumerate() {
        let action = x + reference.gamma_star[i];
        if action < 0.0 {
            return Err(Error::ChartDomain { index: i + 1, value: action });
        }
        let rho = action.sqrt();
        out.push((Complex64::from_polar(rho, *phi), Complex64::from_polar(rho, -phi)));
    }
    out.extend_from_slice(&p.tail);
    Ok(out)
}

/// Inverse of [`chart_to_birkhoff`]; angles come back in `[0, 2π)`.
pub fn birkhoff_to_chart(pairs: &[(Complex64, Complex64)], reference: &ReferenceTorus) -> Result<TorusChartPoint> {
    let n = reference.modes();
    if pairs.len() < n {
        return Err(Error::DimensionMismatch { expected: n, found: pairs.len() });
    }
    let offsets = pairs[..n].iter().zip(&reference.gamma_star).map(|((x, e), g)| (x * e).re - g).collect();
    let angles = pairs[..n].iter().map(|(x, _)| wrap_positive(x.arg())).collect();
    Ok(TorusChartPoint { offsets, angles, tail: pairs[n..].to_vec() })
}

/// Exact unperturbed flow on the angles: `φ_n(t) = φ_n(0) + ω_n(γ) t mod 2π`.
/// The gaps are constant along this flow.
pub fn unperturbed_flow(g: &GapSequence, phi0: &[f64], t: f64) -> Vec<f64> {
    let y = frequencies(&g.leading(phi0.len().max(g.len())));
    phi0.iter().enumerate().map(|(i, phi)| wrap_positive(phi + y.omega(i + 1) * t)).collect()
}

/// Tangent vector in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartTangent {
    pub offsets: Vec<f64>,
    pub angles: Vec<f64>,
    pub tail: Vec<(Complex64, Complex64)>,
}

/// Hamiltonian vector field of `H_4(I)`: `(0, 2y_n, 2i y_n ξ_n, -2i y_n η_n)`,
/// with `y_n` evaluated on the point's own offsets and tail gaps.
pub fn h4_vector_field(p: &TorusChartPoint) -> ChartTangent {
    let y = cumulative(&tail_sums(&p.full_offsets()));
    let n = p.modes();
    let i2 = Complex64::new(0.0, 2.0);
    ChartTangent {
        offsets: vec![0.0; n],
        angles: y[..n].iter().map(|v| 2.0 * v).collect(),
        tail: p.tail.iter().zip(&y[n..]).map(|((x, e), v)| (i2 * v * x, -i2 * v * e)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn gaps(v: &[f64]) -> GapSequence {
        GapSequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn partial_sums_examples() {
        assert_eq!(partial_sums(&gaps(&[1.0, 0.0, 0.0])), vec![1.0, 0.0, 0.0]);
        assert_eq!(partial_sums(&gaps(&[0.5, 0.25])), vec![0.75, 0.25]);
        assert_eq!(partial_sums(&GapSequence::zeros(4)), vec![0.0; 4]);
    }

    #[test]
    fn frequencies_examples() {
        let y = frequencies(&gaps(&[1.0, 0.0, 0.0]));
        assert_eq!(y.as_slice(), &[1.0, 1.0, 1.0]);
        assert_eq!(y.omegas()[..2], [-1.0, 2.0]);

        let y = frequencies(&gaps(&[0.5, 0.25]));
        assert_eq!(y.as_slice(), &[0.75, 1.0]);
        assert_eq!(y.omegas(), vec![-0.5, 2.0]);

        let y = frequencies(&GapSequence::zeros(3));
        assert_eq!(y.omegas(), vec![1.0, 4.0, 9.0]);
    }

    #[test]
    fn n_gap_frequencies_saturate() {
        let y = frequencies(&gaps(&[0.3, 0.2, 0.0, 0.0, 0.0]));
        assert_eq!(y.get(3), y.get(2));
        assert_eq!(y.get(5), y.get(2));
    }

    #[test]
    fn gaps_from_frequencies_examples() {
        let g = gaps_from_frequencies(&FrequencyVector::new(vec![0.75, 1.0])).unwrap();
        assert_eq!(g.as_slice(), &[0.5, 0.25]);
        let g = gaps_from_frequencies(&FrequencyVector::new(vec![1.0])).unwrap();
        assert_eq!(g.as_slice(), &[1.0]);
        match gaps_from_frequencies(&FrequencyVector::new(vec![1.0, 3.0])) {
            Err(Error::InvalidFrequency { index: 1, value }) => assert_eq!(value, -1.0),
            other => panic!("expected InvalidFrequency, got {other:?}"),
        }
    }

    #[test]
    fn boundary_gap_is_clamped_not_rejected() {
        let g = gaps_from_frequencies(&FrequencyVector::new(vec![0.5, 1.0 + 5e-15])).unwrap();
        assert_eq!(g.get(1), 0.0);
        assert!(!g.in_open_cone());
    }

    #[test]
    fn hamiltonian_examples() {
        let h = hamiltonians(&gaps(&[1.0, 0.0, 0.0]));
        assert_eq!((h.h2, h.h4, h.h_bo), (1.0, 1.0, 0.0));
        let h = hamiltonians(&gaps(&[0.5, 0.25]));
        assert_eq!((h.h2, h.h4, h.h_bo), (1.5, 0.625, 0.875));
        let h = hamiltonians(&GapSequence::zeros(3));
        assert_eq!((h.h2, h.h4, h.h_bo), (0.0, 0.0, 0.0));
    }

    #[test]
    fn h_omega_examples() {
        let reference = ReferenceTorus::new(vec![1.0]).unwrap();
        assert_eq!(reference.y_star(), &[1.0]);

        let p = TorusChartPoint::origin(1, 4);
        assert_eq!(h_omega(&p, &reference).unwrap(), 0.0);

        let mut p = TorusChartPoint::origin(1, 1);
        p.offsets[0] = 0.1;
        assert_abs_diff_eq!(h_omega(&p, &reference).unwrap(), -0.1, epsilon = 1e-15);

        let xi = Complex64::from_polar(0.1, 0.7);
        let p = TorusChartPoint::new(vec![0.0], vec![0.0], vec![(xi, xi.conj())]).unwrap();
        assert_abs_diff_eq!(h_omega(&p, &reference).unwrap(), 0.02, epsilon = 1e-15);

        let bad = TorusChartPoint::origin(2, 2);
        assert!(matches!(h_omega(&bad, &reference), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn expansion_identity_examples() {
        let reference = ReferenceTorus::new(vec![0.4, 0.1]).unwrap();
        assert!(expansion_residual(&gaps(&[0.4, 0.1]), &reference) < 1e-15);
        let zero = ReferenceTorus::new(vec![0.0]).unwrap();
        assert!(expansion_residual(&gaps(&[0.2, 0.3, 0.1]), &zero) < 1e-15);
    }

    #[test]
    fn phase_norm_examples() {
        let p = TorusChartPoint::origin(2, 5);
        assert_eq!(phase_norm(&p, 1.0).unwrap(), 0.0);

        let p = TorusChartPoint::new(vec![0.2], vec![0.0], vec![]).unwrap();
        assert_abs_diff_eq!(phase_norm(&p, 0.5).unwrap(), 0.4, epsilon = 1e-15);

        let xi = Complex64::new(0.1, 0.0);
        let p = TorusChartPoint::new(vec![0.0], vec![0.0], vec![(xi, xi)]).unwrap();
        assert_abs_diff_eq!(phase_norm(&p, 1.0).unwrap(), (4.0f64 * 0.02).sqrt(), epsilon = 1e-15);

        // angle enters through its representative in (-π, π]
        let p = TorusChartPoint::new(vec![0.0], vec![TAU - 0.25], vec![]).unwrap();
        assert_abs_diff_eq!(phase_norm(&p, 2.0).unwrap(), 0.5, epsilon = 1e-14);
        assert!(phase_norm(&p, 0.0).is_err());
    }

    #[test]
    fn confinement_domain_examples() {
        let reference = ReferenceTorus::new(vec![1.0]).unwrap();
        let p = TorusChartPoint::origin(1, 3);
        assert!(in_confinement_domain(&p, &reference, 1e-9).unwrap());

        let p = TorusChartPoint::new(vec![0.1], vec![0.0], vec![]).unwrap();
        assert!(!in_confinement_domain(&p, &reference, 0.05).unwrap());
        assert!(in_confinement_domain(&p, &reference, 0.2).unwrap());
    }

    #[test]
    fn chart_examples() {
        let reference = ReferenceTorus::new(vec![4.0, 1.0]).unwrap();
        let p = TorusChartPoint::origin(2, 2);
        let b = chart_to_birkhoff(&p, &reference).unwrap();
        assert_eq!(b[0].0, Complex64::new(2.0, 0.0));
        assert_eq!(b[1].1, Complex64::new(1.0, 0.0));

        let reference = ReferenceTorus::new(vec![1.0]).unwrap();
        let p = TorusChartPoint::new(vec![0.0], vec![PI / 2.0], vec![]).unwrap();
        let b = chart_to_birkhoff(&p, &reference).unwrap();
        assert_abs_diff_eq!((b[0].0 - Complex64::i()).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((b[0].1 + Complex64::i()).norm(), 0.0, epsilon = 1e-15);

        let p = TorusChartPoint::new(vec![-2.0], vec![0.0], vec![]).unwrap();
        assert!(matches!(chart_to_birkhoff(&p, &reference), Err(Error::ChartDomain { index: 1, .. })));
    }

    #[test]
    fn unperturbed_flow_examples() {
        let g = gaps(&[1.0]);
        let phi0 = [0.3];
        assert_abs_diff_eq!(unperturbed_flow(&g, &phi0, 0.0)[0], 0.3, epsilon = 1e-15);
        let moved = unperturbed_flow(&g, &phi0, PI);
        assert_abs_diff_eq!(moved[0], wrap_positive(0.3 - PI), epsilon = 1e-14);
        let back = unperturbed_flow(&g, &moved, -PI);
        assert_abs_diff_eq!(back[0], 0.3, epsilon = 1e-14);
    }

    #[test]
    fn h4_field_examples() {
        let p = TorusChartPoint::origin(1, 3);
        let f = h4_vector_field(&p);
        assert!(f.angles.iter().all(|&a| a == 0.0));
        assert!(f.tail.iter().all(|(a, b)| a.norm() == 0.0 && b.norm() == 0.0));

        let xi = Complex64::new(0.5, 0.0);
        let p = TorusChartPoint::new(vec![0.5], vec![0.0], vec![(xi, xi)]).unwrap();
        let f = h4_vector_field(&p);
        assert_abs_diff_eq!(f.angles[0], 1.5, epsilon = 1e-15);
        assert_eq!(f.offsets, vec![0.0]);
    }

    /// Complex quartic `Σ s_n²` with `s` built from complex products; the
    /// independent route used by the finite-difference check below.
    fn quartic_complex(offsets: &[f64], tail: &[(Complex64, Complex64)]) -> Complex64 {
        let terms: Vec<Complex64> =
            offsets.iter().map(|&x| Complex64::new(x, 0.0)).chain(tail.iter().map(|(a, b)| a * b)).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut total = Complex64::new(0.0, 0.0);
        for t in terms.iter().rev() {
            acc += t;
            total += acc * acc;
        }
        total
    }

    fn arb_point() -> impl Strategy<Value = TorusChartPoint> {
        (1usize..4, 0usize..6).prop_flat_map(|(n, tail)| {
            (
                prop::collection::vec(-0.5f64..0.5, n),
                prop::collection::vec(0.0f64..TAU, n),
                prop::collection::vec((0.0f64..0.5, 0.0f64..TAU), tail),
            )
                .prop_map(|(offsets, angles, tail)| {
                    let tail = tail
                        .into_iter()
                        .map(|(r, a)| {
                            let x = Complex64::from_polar(r, a);
                            (x, x.conj())
                        })
                        .collect();
                    TorusChartPoint { offsets, angles, tail }
                })
        })
    }

    proptest! {
        #[test]
        fn roundtrip_gaps_frequencies(g in prop::collection::vec(0.0f64..1.0, 1..12)) {
            let seq = gaps(&g);
            let back = gaps_from_frequencies(&frequencies(&seq)).unwrap();
            for (a, b) in back.as_slice().iter().zip(&g) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn h4_nonnegative_and_zero_only_at_origin(g in prop::collection::vec(0.0f64..1.0, 1..12)) {
            let seq = gaps(&g);
            let h = hamiltonians(&seq);
            let total: f64 = g.iter().sum();
            prop_assert!(h.h4 >= 0.0);
            prop_assert!(h.h4 <= total * total * g.len() as f64 + 1e-12);
            prop_assert_eq!(h.h4 == 0.0, g.iter().all(|&v| v == 0.0));
        }

        #[test]
        fn expansion_identity(
            g in prop::collection::vec(0.0f64..1.0, 1..32),
            star in prop::collection::vec(0.0f64..1.0, 1..8),
        ) {
            let reference = ReferenceTorus::new(star.clone()).unwrap();
            prop_assert!(expansion_residual(&gaps(&g), &reference) < 1e-12);

            // plain f64 evaluation through the public Hamiltonians, at rounding scale
            let m = g.len().max(star.len());
            let offsets: Vec<f64> = (1..=m)
                .map(|k| gaps(&g).get(k) - star.get(k - 1).copied().unwrap_or(0.0))
                .collect();
            let linear: f64 = offsets.iter().enumerate().map(|(i, x)| reference.linear_frequency(i + 1) * x).sum();
            let lhs = hamiltonians(&gaps(&g)).h_bo;
            let rhs = hamiltonians(&gaps(&star)).h_bo + linear - quartic(&offsets);
            let scale = hamiltonians(&gaps(&g)).h2 + hamiltonians(&gaps(&star)).h2 + 1.0;
            prop_assert!((lhs - rhs).abs() < 1e-14 * scale);
        }

        #[test]
        fn unperturbed_flow_keeps_invariants(
            g in prop::collection::vec(0.01f64..1.0, 1..5),
            t in -20.0f64..20.0,
        ) {
            let seq = gaps(&g);
            let reference = ReferenceTorus::new(g.clone()).unwrap();
            let phi0 = vec![0.1; g.len()];
            let phi = unperturbed_flow(&seq, &phi0, t);
            // gaps untouched, so every function of the gaps is unchanged
            let p0 = TorusChartPoint::new(vec![0.0; g.len()], phi0, vec![]).unwrap();
            let p1 = TorusChartPoint::new(vec![0.0; g.len()], phi.clone(), vec![]).unwrap();
            prop_assert_eq!(h_omega(&p0, &reference).unwrap(), h_omega(&p1, &reference).unwrap());
            prop_assert_eq!(h4_of_point(&p0), h4_of_point(&p1));
            let back = unperturbed_flow(&seq, &phi, -t);
            for b in back {
                prop_assert!(wrap_signed(b - 0.1).abs() < 1e-9);
            }
        }

        #[test]
        fn h4_field_preserves_tail_products(p in arb_point()) {
            let f = h4_vector_field(&p);
            for ((x, e), (dx, de)) in p.tail.iter().zip(&f.tail) {
                prop_assert!((dx * e + x * de).norm() < 1e-15);
            }
        }

        #[test]
        fn h4_is_conserved_along_its_field(p in arb_point()) {
            let f = h4_vector_field(&p);
            // H4 is a quartic polynomial along the line, so the five-point stencil is exact
            let h = 0.25;
            let shifted = |s: f64| {
                let offsets: Vec<f64> = p.offsets.iter().zip(&f.offsets).map(|(a, b)| a + s * b).collect();
                let tail: Vec<_> = p.tail.iter().zip(&f.tail).map(|((x, e), (dx, de))| (x + dx * s, e + de * s)).collect();
                quartic_complex(&offsets, &tail)
            };
            let derivative = (-shifted(2.0 * h) + 8.0 * shifted(h) - 8.0 * shifted(-h) + shifted(-2.0 * h)) / (12.0 * h);
            prop_assert!(derivative.norm() < 1e-12, "{derivative}");
        }

        #[test]
        fn phase_norm_is_a_norm_on_the_linear_part(
            a in arb_point(),
            lambda in -3.0f64..3.0,
            r in 0.1f64..2.0,
        ) {
            let zero_angles = |p: &TorusChartPoint| TorusChartPoint { angles: vec![0.0; p.modes()], ..p.clone() };
            let a = zero_angles(&a);
            let scaled = TorusChartPoint {
                offsets: a.offsets.iter().map(|x| lambda * x).collect(),
                angles: a.angles.clone(),
                tail: a.tail.iter().map(|(x, e)| (x * lambda, e * lambda)).collect(),
            };
            let na = phase_norm(&a, r).unwrap();
            prop_assert!((phase_norm(&scaled, r).unwrap() - lambda.abs() * na).abs() <= 1e-12 * (1.0 + na));

            let b = TorusChartPoint {
                offsets: a.offsets.iter().map(|x| 0.3 - x).collect(),
                angles: a.angles.clone(),
                tail: a.tail.iter().map(|(x, e)| (x * 0.5 + 0.1, e * 0.5 + 0.1)).collect(),
            };
            let sum = TorusChartPoint {
                offsets: a.offsets.iter().zip(&b.offsets).map(|(x, y)| x + y).collect(),
                angles: a.angles.clone(),
                tail: a.tail.iter().zip(&b.tail).map(|((x, e), (y, f))| (x + y, e + f)).collect(),
            };
            prop_assert!(phase_norm(&sum, r).unwrap() <= na + phase_norm(&b, r).unwrap() + 1e-12);
        }

        #[test]
        fn angle_term_is_homogeneous(phi in -1.5f64..1.5, lambda in 0.0f64..2.0, r in 0.1f64..3.0) {
            let p = TorusChartPoint::new(vec![0.0], vec![phi], vec![]).unwrap();
            let q = TorusChartPoint::new(vec![0.0], vec![lambda * phi], vec![]).unwrap();
            prop_assert!((phase_norm(&q, r).unwrap() - lambda * phase_norm(&p, r).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn chart_roundtrip(p in arb_point(), star in prop::collection::vec(0.6f64..1.0, 3)) {
            let reference = ReferenceTorus::new(star[..p.modes()].to_vec()).unwrap();
            let b = chart_to_birkhoff(&p, &reference).unwrap();
            let back = birkhoff_to_chart(&b, &reference).unwrap();
            for (x, y) in back.offsets.iter().zip(&p.offsets) {
                prop_assert!((x - y).abs() < 1e-14);
            }
            for (x, y) in back.angles.iter().zip(&p.angles) {
                prop_assert!(wrap_signed(x - y).abs() < 1e-12);
            }
            prop_assert_eq!(back.tail, p.tail);
        }
    }
}
