//! Run configuration: a single TOML file with model, error and analysis
//! blocks plus a root seed. Unknown keys are rejected everywhere; a silent
//! typo in a coefficient name must not be able to corrupt a conclusion.

use crate::dist::ErrorDist;
use crate::error::{Result, TarchError};
use crate::model::{ModelSpec, RegimeCoeffs};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelConfig,
    pub error: ErrorConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub p: usize,
    #[serde(default)]
    pub hyperplanes: Vec<Vec<f64>>,
    pub regimes: Vec<RegimeConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeConfig {
    /// sign pattern against the hyperplanes; empty when there are none
    #[serde(default)]
    pub pattern: Vec<i8>,
    #[serde(default)]
    pub a0: f64,
    pub a: Vec<f64>,
    pub b0: f64,
    pub b: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Gaussian,
    StudentT,
    Laplace,
    Mixture,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorConfig {
    pub family: Family,
    /// degrees of freedom (student-t)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub df: Option<f64>,
    /// scale (laplace)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// mixture base family (gaussian | student-t | laplace)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<Family>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scales: Option<[f64; 2]>,
}

/// Command-specific knobs; every field has a sensible default so config
/// files only state what they change.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    // collapsed-chain estimation
    pub n_steps: usize,
    pub burn_in: usize,
    pub replicates: usize,
    // moment growth
    pub r: f64,
    pub n_max: usize,
    pub particles: usize,
    pub growth_replicates: usize,
    pub grid_points: usize,
    pub stationary_starts: usize,
    // tail index
    pub bracket: [f64; 2],
    pub kappa_tol: f64,
    // full-chain drift
    pub radii: Vec<f64>,
    pub drift_n: usize,
    pub drift_replicates: usize,
    // raw simulation
    pub sim_n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    // companion products
    pub gamma_n: usize,
    pub gamma_replicates: usize,
    // diagnostics
    pub thin: usize,
    pub quad_tol: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            n_steps: 1_000_000,
            burn_in: 10_000,
            replicates: 4,
            r: 2.0,
            n_max: 24,
            particles: 256,
            growth_replicates: 8,
            grid_points: 256,
            stationary_starts: 64,
            bracket: [0.5, 4.0],
            kappa_tol: 0.01,
            radii: vec![1e2, 1e4, 1e6, 1e8],
            drift_n: 20,
            drift_replicates: 400,
            sim_n: 1_000,
            x0: None,
            gamma_n: 100_000,
            gamma_replicates: 8,
            thin: 50,
            quad_tol: 1e-9,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TarchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| TarchError::Config(format!("config parse error: {e}")))
    }

    /// Builds the validated model.
    pub fn build_model(&self) -> Result<ModelSpec> {
        let regimes: Result<Vec<(Vec<i8>, RegimeCoeffs)>> = self
            .model
            .regimes
            .iter()
            .map(|rc| {
                Ok((
                    rc.pattern.clone(),
                    RegimeCoeffs::new(rc.a0, rc.a.clone(), rc.b0, rc.b.clone())?,
                ))
            })
            .collect();
        ModelSpec::new(self.model.p, self.model.hyperplanes.clone(), regimes?)
    }

    /// Builds the error distribution.
    pub fn build_dist(&self) -> Result<ErrorDist> {
        build_family(
            self.error.family,
            self.error.df,
            self.error.scale,
            self.error.base,
            self.error.weights,
            self.error.scales,
        )
    }
}

fn build_base(family: Family, df: Option<f64>, scale: Option<f64>) -> Result<ErrorDist> {
    match family {
        Family::Gaussian => Ok(ErrorDist::gaussian()),
        Family::StudentT => {
            let df = df.ok_or_else(|| TarchError::Config("student-t requires df".into()))?;
            ErrorDist::student_t(df)
        }
        Family::Laplace => ErrorDist::laplace(scale.unwrap_or(1.0)),
        Family::Mixture => Err(TarchError::Config("mixture cannot be its own base".into())),
    }
}

fn build_family(
    family: Family,
    df: Option<f64>,
    scale: Option<f64>,
    base: Option<Family>,
    weights: Option<[f64; 2]>,
    scales: Option<[f64; 2]>,
) -> Result<ErrorDist> {
    match family {
        Family::Mixture => {
            let base = base.ok_or_else(|| TarchError::Config("mixture requires base".into()))?;
            let weights = weights.ok_or_else(|| TarchError::Config("mixture requires weights".into()))?;
            let scales = scales.ok_or_else(|| TarchError::Config("mixture requires scales".into()))?;
            let base = build_base(base, df, scale)?;
            ErrorDist::scale_mixture(base, (weights[0], weights[1]), (scales[0], scales[1]))
        }
        _ => {
            if base.is_some() || weights.is_some() || scales.is_some() {
                return Err(TarchError::Config(
                    "base/weights/scales are only valid for family = \"mixture\"".into(),
                ));
            }
            build_base(family, df, scale)
        }
    }
}
