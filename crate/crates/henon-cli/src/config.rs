use std::path::{Path, PathBuf};

use henon::geometry::{accumulation_guess, log_grid, SweepSettings};
use henon::maps::{family_2d_distorted, family_t, toy_model, HenonMap};
use henon::renorm::Settings;
use henon::universality::doubling::FEIGENBAUM_POINT;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Deepest tower accepted; `b^{2^n}` leaves the double range soon after.
pub const DEPTH_CAP: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// `(c − x² − b y (1 + k x), x)`.
    Planar,
    /// `(c − x² − b y, x, b₂ z + γ y)`.
    Toy,
    /// The toy model with `t z` added to the first coordinate.
    Perturbed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    /// Planar Jacobian: `b` of the planar family, `b₁` of the toy models.
    pub b: f64,
    #[serde(default)]
    pub distortion: f64,
    #[serde(default)]
    pub b2: f64,
    #[serde(default)]
    pub coupling: f64,
    #[serde(default)]
    pub t: f64,
    #[serde(default = "default_t_range")]
    pub t_range: f64,
    /// Fixed parameter; tuned to the accumulation point when absent.
    #[serde(default)]
    pub c: Option<f64>,
}

fn default_t_range() -> f64 {
    1e-3
}

impl FamilySpec {
    pub fn is_spatial(&self) -> bool {
        self.kind != FamilyKind::Planar
    }

    /// The same family with its planar Jacobian replaced.
    pub fn with_b(&self, b: f64) -> Self {
        Self { b, ..self.clone() }
    }

    pub fn build(&self, c: f64, budget: f64) -> henon::Result<HenonMap> {
        match self.kind {
            FamilyKind::Planar => family_2d_distorted(c, self.b, self.distortion, budget),
            FamilyKind::Toy => toy_model(c, self.b, self.b2, self.coupling, budget),
            FamilyKind::Perturbed => {
                family_t(&toy_model(c, self.b, self.b2, self.coupling, budget)?, self.t, self.t_range)
            }
        }
    }

    pub fn seed_parameter(&self) -> f64 {
        if self.b > 0.0 {
            accumulation_guess(self.b)
        } else {
            FEIGENBAUM_POINT
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Largest accepted conjugacy defect per level.
    pub conjugacy: f64,
    /// Stopping change of the graph transform.
    pub surface: f64,
    pub surface_iters: usize,
    /// Sample count for defect checks.
    pub samples: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { conjugacy: 1e-8, surface: 1e-13, surface_iters: 40, samples: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub b_min: f64,
    pub b_max: f64,
    pub count: usize,
    pub ks: Vec<usize>,
    pub window: [f64; 2],
    pub tune_depth: usize,
    pub n_max: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            b_min: 1e-3,
            b_max: 1e-1,
            count: 64,
            ks: vec![1, 2, 3, 4],
            window: [0.5, 2.0],
            tune_depth: 6,
            n_max: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: FamilySpec,
    #[serde(default)]
    pub settings: Settings,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_depth() -> usize {
    6
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.settings.validate().map_err(|e| invalid(e.to_string()))?;
        let tol = &self.tolerances;
        positive("tolerances.conjugacy", tol.conjugacy)?;
        positive("tolerances.surface", tol.surface)?;
        if tol.surface_iters == 0 || tol.samples == 0 {
            return Err(invalid("surface_iters and samples must be positive"));
        }
        if self.depth == 0 || self.depth > DEPTH_CAP {
            return Err(invalid(format!("depth {} outside 1..={DEPTH_CAP}", self.depth)));
        }
        let fam = &self.family;
        if !(fam.b >= 0.0 && fam.b.is_finite()) {
            return Err(invalid(format!("family.b = {} must be nonnegative", fam.b)));
        }
        if fam.is_spatial() && !(fam.b2 > 0.0 && fam.b2 < 1.0) {
            return Err(invalid(format!("family.b2 = {} must lie in (0, 1)", fam.b2)));
        }
        if fam.kind == FamilyKind::Perturbed {
            positive("family.t_range", fam.t_range)?;
            if fam.t.abs() >= fam.t_range {
                return Err(invalid("family.t must lie inside the t range"));
            }
        }
        let g = &self.grid;
        if !(g.b_min > 0.0 && g.b_max > g.b_min) || g.count < 2 {
            return Err(invalid("grid needs 0 < b_min < b_max and count >= 2"));
        }
        if g.ks.is_empty() || g.ks.contains(&0) {
            return Err(invalid("grid.ks must be nonempty and start at 1"));
        }
        if !(g.window[0] > 0.0 && g.window[1] > g.window[0]) {
            return Err(invalid("grid.window must be an increasing positive pair"));
        }
        if g.tune_depth == 0 || g.tune_depth > DEPTH_CAP {
            return Err(invalid(format!("grid.tune_depth outside 1..={DEPTH_CAP}")));
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn b_grid(&self) -> Vec<f64> {
        log_grid(self.grid.b_min, self.grid.b_max, self.grid.count).expect("validated grid")
    }

    pub fn sweep_settings(&self) -> SweepSettings {
        SweepSettings {
            ks: self.grid.ks.clone(),
            window: (self.grid.window[0], self.grid.window[1]),
            tune_depth: self.grid.tune_depth,
            n_max: self.grid.n_max,
            budget: self.settings.budget,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = r#"{"family": {"kind": "toy", "b": 0.01, "b2": 1e-5, "coupling": 1e-3}}"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::parse(TOY).unwrap();
        assert_eq!(cfg.depth, 6);
        assert_eq!(cfg.grid.count, 64);
        assert!(cfg.family.is_spatial());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(ExperimentConfig::parse("{"), Err(ConfigError::Schema(_))));
        assert!(matches!(
            ExperimentConfig::parse(r#"{"family": {"kind": "planar", "b": 0.01}, "bogus": 1}"#),
            Err(ConfigError::Schema(_))
        ));
        let deep = r#"{"family": {"kind": "planar", "b": 0.01}, "depth": 11}"#;
        assert!(matches!(ExperimentConfig::parse(deep), Err(ConfigError::Invalid(_))));
        let tol = r#"{"family": {"kind": "planar", "b": 0.01}, "tolerances": {"conjugacy": 0}}"#;
        assert!(matches!(ExperimentConfig::parse(tol), Err(ConfigError::Invalid(_))));
        let flat = r#"{"family": {"kind": "toy", "b": 0.01}}"#;
        assert!(matches!(ExperimentConfig::parse(flat), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::parse(TOY).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }
}
