use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lax::GapOptions;
use crate::resonance::CertificateConstants;
use crate::spectral::{IntegratorConfig, Perturbation, PerturbationKind, PoissonKernel, Scheme};

/// Initial datum: explicit Poisson kernels or leading gaps to calibrate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub enum InitialSpec {
    Poisson(Vec<PoissonKernel>),
    TargetGaps {
        gaps: Vec<f64>,
        #[serde(default = "default_calibration_tol")]
        tol: f64,
    },
}

fn default_calibration_tol() -> f64 {
    1e-12
}

/// Perturbation without its size; the sizes come from the epsilon list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    #[serde(default)]
    pub kind: PerturbationKind,
    #[serde(default = "minus_one")]
    pub sign: f64,
}

fn minus_one() -> f64 {
    -1.0
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self { kind: PerturbationKind::None, sign: -1.0 }
    }
}

impl PerturbationSpec {
    pub fn with_epsilon(&self, epsilon: f64) -> Perturbation {
        Perturbation { kind: self.kind.clone(), epsilon, sign: self.sign }
    }
}

/// Torus against which `h_ω` and `H_4` are monitored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub enum ReferenceSpec {
    /// Leading gaps of the initial datum.
    #[default]
    Initial,
    /// Resonant torus of the stability certificate for the run's epsilon.
    Certificate,
    GammaStar(Vec<f64>),
}

/// One experiment, read from a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "E_m")]
    pub e_min: f64,
    #[serde(rename = "E_M")]
    pub e_max: f64,
    pub epsilon: Vec<f64>,
    #[serde(default)]
    pub perturbation: PerturbationSpec,
    pub initial: InitialSpec,
    #[serde(rename = "M")]
    pub modes: usize,
    pub dt: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(rename = "sampleStride")]
    pub sample_stride: usize,
    #[serde(rename = "nMax")]
    pub n_max: usize,
    /// Starting Lax truncation; `None` picks one from the decay of the state.
    #[serde(rename = "M_L", default)]
    pub lax_size: Option<usize>,
    #[serde(rename = "laxMaxSize", default = "default_lax_max")]
    pub lax_max_size: usize,
    #[serde(rename = "laxTol", default = "default_lax_tol")]
    pub lax_tol: f64,
    #[serde(default)]
    pub reference: ReferenceSpec,
    #[serde(default)]
    pub constants: CertificateConstants,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

fn default_lax_max() -> usize {
    1024
}

fn default_lax_tol() -> f64 {
    1e-10
}

impl ExperimentConfig {
    /// Reads a config, or the `config` member of a run manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed JSON: {e}")))?;
        let body = match value.get("config") {
            Some(inner) if value.get("command").is_some() => inner.clone(),
            _ => value,
        };
        let cfg: Self = serde_json::from_value(body).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.n == 0 {
            return fail("N must be at least 1".into());
        }
        if !(self.e_min > 0.0 && self.e_max > self.e_min) {
            return fail(format!("need 0 < E_m < E_M, got {} and {}", self.e_min, self.e_max));
        }
        if self.epsilon.is_empty() {
            return fail("epsilon list must be nonempty".into());
        }
        if let Some(e) = self.epsilon.iter().find(|e| !(**e >= 0.0) || !e.is_finite()) {
            return fail(format!("epsilon values must be finite and nonnegative, got {e}"));
        }
        if self.modes == 0 {
            return fail("M must be positive".into());
        }
        self.integrator().validate()?;
        if self.n_max < self.n {
            return fail(format!("nMax = {} must be at least N = {}", self.n_max, self.n));
        }
        if let Some(s) = self.lax_size {
            if s < self.n_max + 2 {
                return fail(format!("M_L = {s} must exceed nMax + 1"));
            }
        }
        if !(self.lax_tol > 0.0) {
            return fail("laxTol must be positive".into());
        }
        match &self.initial {
            InitialSpec::Poisson(k) if k.is_empty() => return fail("poisson initial data needs a kernel".into()),
            InitialSpec::Poisson(k) => {
                if let Some(bad) = k.iter().find(|k| !(k.r > 0.0 && k.r < 1.0)) {
                    return fail(format!("Poisson radius must lie in (0, 1), got {}", bad.r));
                }
            }
            InitialSpec::TargetGaps { gaps, tol } => {
                if gaps.len() != self.n {
                    return fail(format!("targetGaps has {} entries but N = {}", gaps.len(), self.n));
                }
                if gaps.len() > 2 {
                    return fail("targetGaps calibration supports N = 1 or 2; give poisson kernels instead".into());
                }
                if gaps.iter().any(|g| !(*g > 0.0)) || !(*tol > 0.0) {
                    return fail("target gaps and tolerance must be positive".into());
                }
            }
        }
        if let ReferenceSpec::GammaStar(g) = &self.reference {
            if g.len() != self.n {
                return fail(format!("reference gammaStar has {} entries but N = {}", g.len(), self.n));
            }
        }
        let c = &self.constants;
        if [c.mu_star, c.k, c.k_tilde, c.c4, c.c5].iter().any(|v| !(*v > 0.0)) {
            return fail("certificate constants must be positive".into());
        }
        self.perturbation.with_epsilon(self.epsilon[0]).validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Extra requirement of the sweep command.
    pub fn validate_sweep(&self) -> Result<()> {
        if self.epsilon.len() < 3 {
            return Err(Error::Config(format!("sweep needs at least 3 epsilon values, got {}", self.epsilon.len())));
        }
        Ok(())
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig::new(self.dt, self.t_final, self.sample_stride).with_scheme(self.scheme)
    }

    pub fn gap_options(&self) -> GapOptions {
        GapOptions { size: self.lax_size, max_size: self.lax_max_size, tol: self.lax_tol, ..GapOptions::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SAMPLE: &str = r#"{
        "N": 1, "E_m": 0.1, "E_M": 1.0,
        "epsilon": [0.01],
        "perturbation": {"kind": "gassot"},
        "initial": {"poisson": [{"r": 0.5}]},
        "M": 32, "dt": 0.001, "T": 0.1, "sampleStride": 10, "nMax": 4
    }"#;

    #[test]
    fn parses_sample() {
        let c = ExperimentConfig::from_json(SAMPLE).unwrap();
        assert_eq!(c.perturbation.kind, PerturbationKind::Gassot);
        assert_eq!(c.constants, CertificateConstants::default());
        assert_eq!(c.reference, ReferenceSpec::Initial);
    }

    #[test]
    fn manifest_wrapper_is_accepted() {
        let c = ExperimentConfig::from_json(SAMPLE).unwrap();
        let manifest = serde_json::json!({"command": "simulate", "config": c});
        assert_eq!(ExperimentConfig::from_json(&manifest.to_string()).unwrap(), c);
    }

    #[test]
    fn schema_errors() {
        let bad_dt = SAMPLE.replace("\"dt\": 0.001", "\"dt\": 0.0");
        assert!(matches!(ExperimentConfig::from_json(&bad_dt), Err(Error::Config(_))));
        let unknown = SAMPLE.replace("\"nMax\": 4", "\"nMax\": 4, \"bogus\": 1");
        assert!(matches!(ExperimentConfig::from_json(&unknown), Err(Error::Config(_))));
        let empty = SAMPLE.replace("[0.01]", "[]");
        assert!(matches!(ExperimentConfig::from_json(&empty), Err(Error::Config(_))));
        let c = ExperimentConfig::from_json(SAMPLE).unwrap();
        assert!(matches!(c.validate_sweep(), Err(Error::Config(_))));
        let three = SAMPLE
            .replace("\"N\": 1", "\"N\": 3")
            .replace("\"nMax\": 4", "\"nMax\": 6")
            .replace(r#"{"poisson": [{"r": 0.5}]}"#, r#"{"targetGaps": {"gaps": [0.3, 0.02, 0.001]}}"#);
        assert!(matches!(ExperimentConfig::from_json(&three), Err(Error::Config(m)) if m.contains("N = 1 or 2")));
    }
}
