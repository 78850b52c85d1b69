//! Experiment configuration, read from TOML.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cmv::{parse_descriptor, IndexParity, VerblunskySequence};
use crate::dynamics::BasePoint;
use crate::hyperbolicity::{ClassifyParams, SearchParams, SplittingParams};
use crate::johnson::unit;
use crate::linalg::C64;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub grid_size: usize,
    pub schedule: Vec<usize>,
    pub epsilon: f64,
    pub slack: f64,
    pub projective_grid: usize,
    pub omega_density: usize,
    pub refine_starts: usize,
    pub splitting_tol: f64,
    pub n_limit: usize,
    pub fit_horizon: usize,
    /// Bisection width for band edges, radians.
    pub edge_tol: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let c = ClassifyParams::default();
        ScanConfig {
            grid_size: 720,
            schedule: c.schedule,
            epsilon: c.search.epsilon,
            slack: c.search.slack,
            projective_grid: c.search.projective_grid,
            omega_density: c.search.omega_density,
            refine_starts: c.search.refine_starts,
            splitting_tol: c.splitting.tol,
            n_limit: c.splitting.n_limit,
            fit_horizon: c.splitting.fit_horizon,
            edge_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationConfig {
    /// Window half-sizes `N`; each window is `[−2N, 2N+1]`.
    pub sizes: Vec<usize>,
    /// Boundary phases as fractions of a turn, `η = e^{2πit}` at both cuts.
    pub boundary_phase_turns: Vec<f64>,
    /// Factorization convention checked by `verify`.
    pub parity: IndexParity,
    /// Base points for spectra; empty means the sequence's default point.
    pub base_points: Vec<BasePoint>,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            sizes: vec![64, 128, 256],
            boundary_phase_turns: vec![0.0, 0.25, 0.5, 0.75],
            parity: IndexParity::Standard,
            base_points: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Random triples for the identity checks.
    pub samples: usize,
    /// Random matrices for the singular-direction checks.
    pub matrix_samples: usize,
    /// Length of the window used for the factorization check.
    pub window_length: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { samples: 10_000, matrix_samples: 1_000, window_length: 12 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Path of a sequence descriptor file, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<VerblunskySequence>,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub truncation: TruncationConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(skip)]
    resolved: Option<VerblunskySequence>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let seq = VerblunskySequence::constant(crate::linalg::c(0.5, 0.0));
        ExperimentConfig {
            seed: 0,
            output_dir: None,
            descriptor: None,
            sequence: Some(seq.clone()),
            scan: ScanConfig::default(),
            truncation: TruncationConfig::default(),
            verify: VerifyConfig::default(),
            resolved: Some(seq),
        }
    }
}

impl ExperimentConfig {
    pub fn for_sequence(seq: VerblunskySequence) -> Self {
        ExperimentConfig { sequence: Some(seq.clone()), resolved: Some(seq), ..Default::default() }
    }

    /// Parses `text`; a `descriptor` path is resolved against `base_dir`.
    pub fn parse(text: &str, origin: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: crate::cmv::toml_diagnostic(text, &e),
        })?;
        let seq = match (&cfg.sequence, &cfg.descriptor) {
            (Some(_), Some(_)) => return Err(ConfigError::Invalid("give either `sequence` or `descriptor`, not both".into())),
            (None, None) => return Err(ConfigError::Invalid("missing `sequence` table or `descriptor` path".into())),
            (Some(s), None) => {
                s.validate().map_err(|e| ConfigError::Invalid(format!("sequence: {e}")))?;
                s.clone()
            }
            (None, Some(p)) => {
                let path = base_dir.join(p);
                let shown = path.display().to_string();
                let body = std::fs::read_to_string(&path).map_err(|source| ConfigError::Io { path: shown.clone(), source })?;
                parse_descriptor(&body).map_err(|e| match e {
                    crate::cmv::CmvError::Parse(m) => ConfigError::Parse { path: shown, message: m },
                    other => ConfigError::Invalid(format!("{shown}: {other}")),
                })?
            }
        };
        cfg.resolved = Some(seq);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: shown.clone(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, &shown, base)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.scan;
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if s.grid_size < 16 {
            return bad(format!("scan.grid_size = {} must be at least 16", s.grid_size));
        }
        if s.schedule.is_empty() || s.schedule.contains(&0) {
            return bad("scan.schedule must be a nonempty list of positive integers".into());
        }
        for (name, v) in [("epsilon", s.epsilon), ("slack", s.slack), ("splitting_tol", s.splitting_tol), ("edge_tol", s.edge_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("scan.{name} = {v} must be positive"));
            }
        }
        if !(s.slack < s.epsilon) {
            return bad("scan.slack must be below scan.epsilon".into());
        }
        for (name, v) in [("projective_grid", s.projective_grid), ("omega_density", s.omega_density), ("refine_starts", s.refine_starts), ("n_limit", s.n_limit), ("fit_horizon", s.fit_horizon)] {
            if v == 0 {
                return bad(format!("scan.{name} must be positive"));
            }
        }
        if s.projective_grid < 2 {
            return bad("scan.projective_grid must be at least 2".into());
        }
        let t = &self.truncation;
        if t.sizes.contains(&0) {
            return bad("truncation.sizes must be positive".into());
        }
        if t.boundary_phase_turns.is_empty() || t.boundary_phase_turns.iter().any(|x| !x.is_finite()) {
            return bad("truncation.boundary_phase_turns must be a nonempty list of finite numbers".into());
        }
        if self.verify.window_length < 4 || self.verify.window_length % 2 != 0 {
            return bad("verify.window_length must be even and at least 4".into());
        }
        Ok(())
    }

    pub fn sequence(&self) -> &VerblunskySequence {
        self.resolved.as_ref().or(self.sequence.as_ref()).expect("validated config has a sequence")
    }

    pub fn classify_params(&self) -> ClassifyParams {
        let s = &self.scan;
        ClassifyParams {
            schedule: s.schedule.clone(),
            search: SearchParams {
                epsilon: s.epsilon,
                slack: s.slack,
                projective_grid: s.projective_grid,
                omega_density: s.omega_density,
                refine_starts: s.refine_starts,
                ..Default::default()
            },
            splitting: SplittingParams {
                n_limit: s.n_limit,
                tol: s.splitting_tol,
                omega_density: s.omega_density,
                fit_horizon: s.fit_horizon,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    pub fn theta_grid(&self) -> Vec<f64> {
        (0..self.scan.grid_size).map(|k| TAU * k as f64 / self.scan.grid_size as f64).collect()
    }

    pub fn boundary_phases(&self) -> Vec<(f64, (C64, C64))> {
        self.truncation.boundary_phase_turns.iter().map(|&t| (t, (unit(TAU * t), unit(TAU * t)))).collect()
    }

    pub fn base_points(&self) -> Vec<BasePoint> {
        if self.truncation.base_points.is_empty() {
            vec![self.sequence().default_base_point()]
        } else {
            self.truncation.base_points.clone()
        }
    }
}
