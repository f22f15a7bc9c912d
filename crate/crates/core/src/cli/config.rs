//! Run configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cross_section::SectionSpec;
use crate::dynamics::{ForcingModel, RhoSigma, SimulationConfig};
use crate::material::{MaterialModel, MaterialSpec};
use crate::profile::{Profile, SpaceTimeField};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {}", .violations.join("; "))]
    Invalid { path: String, violations: Vec<String> },
}

impl ConfigError {
    pub fn violations(&self) -> &[String] {
        match self {
            ConfigError::Io { .. } => &[],
            ConfigError::Invalid { violations, .. } => violations,
        }
    }
}

fn default_length() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

fn default_stride() -> usize {
    1
}

fn default_newton_tol() -> f64 {
    1e-12
}

fn default_newton_max() -> usize {
    25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RodConfig {
    #[serde(default = "default_length")]
    pub length: f64,
    pub n_elem: usize,
    /// Keep the membrane coupling `½|v′|²` (false gives the linear regime).
    #[serde(default = "default_true")]
    pub kirchhoff: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max")]
    pub newton_max: usize,
}

/// Initial data: a linearized eigenmode scaled so that its largest nodal deflection is `amplitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    /// 1-based index in the ascending spectrum.
    pub index: usize,
    pub amplitude: f64,
    /// Restrict to the `v₂` (2) or `v₃` (3) spectrum.
    #[serde(default)]
    pub component: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// Interpolated in the Hermite space.
    #[serde(default)]
    pub v2: Profile,
    #[serde(default)]
    pub v3: Profile,
    /// L²-projected onto the Hermite space.
    #[serde(default)]
    pub vel2: Profile,
    #[serde(default)]
    pub vel3: Profile,
    #[serde(default)]
    pub mode: Option<ModeConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    /// Only present so that it can be rejected with a precise message.
    #[serde(default, skip_serializing)]
    pub f1: Option<serde_json::Value>,
    #[serde(default)]
    pub f2: SpaceTimeField,
    #[serde(default)]
    pub f3: SpaceTimeField,
    #[serde(default)]
    pub rho2: SpaceTimeField,
    #[serde(default)]
    pub rho3: SpaceTimeField,
    #[serde(default)]
    pub sigma: SpaceTimeField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoConfig {
    #[serde(default = "default_stride")]
    pub output_stride: usize,
}

impl Default for IoConfig {
    fn default() -> Self {
        Self { output_stride: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub material: MaterialSpec,
    pub section: SectionSpec,
    #[serde(default)]
    pub rod: Option<RodConfig>,
    #[serde(default)]
    pub dynamics: Option<DynamicsConfig>,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub io: IoConfig,
    /// Directory against which relative paths resolve; set by [`parse_config`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    /// Every semantic violation, each prefixed with its key path.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Err(e) = self.material.build() {
            out.push(match e {
                crate::material::MaterialError::InvalidParameter { name, reason } => {
                    format!("material.{name}: {reason}")
                }
                other => format!("material.voigt: {other}"),
            });
        }
        match &self.section {
            SectionSpec::Disk { resolution } | SectionSpec::Square { resolution } if *resolution == 0 => {
                out.push("section.resolution: must be >= 1".into())
            }
            SectionSpec::Rectangle { resolution, aspect } => {
                if *resolution == 0 {
                    out.push("section.resolution: must be >= 1".into());
                }
                if !(aspect.is_finite() && *aspect > 0.0) {
                    out.push(format!("section.aspect: must be > 0, got {aspect}"));
                }
            }
            _ => {}
        }
        if let Some(rod) = &self.rod {
            if !(rod.length.is_finite() && rod.length > 0.0) {
                out.push(format!("rod.length: must be > 0, got {}", rod.length));
            }
            if rod.n_elem < 2 {
                out.push(format!("rod.n_elem: must be >= 2, got {}", rod.n_elem));
            }
        }
        if let Some(d) = &self.dynamics {
            if !(d.dt.is_finite() && d.dt > 0.0) {
                out.push(format!("dynamics.dt: must be > 0, got {}", d.dt));
            }
            if !(d.t_final.is_finite() && d.t_final >= 0.0) {
                out.push(format!("dynamics.t_final: must be >= 0, got {}", d.t_final));
            }
            if !(d.newton_tol.is_finite() && d.newton_tol > 0.0) {
                out.push(format!("dynamics.newton_tol: must be > 0, got {}", d.newton_tol));
            }
            if d.newton_max == 0 {
                out.push("dynamics.newton_max: must be >= 1".into());
            }
        }
        let profiles = [
            ("initial.v2", &self.initial.v2),
            ("initial.v3", &self.initial.v3),
            ("initial.vel2", &self.initial.vel2),
            ("initial.vel3", &self.initial.vel3),
        ];
        for (key, p) in profiles {
            if let Err(e) = p.validate() {
                out.push(format!("{key}: {e}"));
            }
        }
        if let Some(m) = &self.initial.mode {
            if m.index == 0 {
                out.push("initial.mode.index: must be >= 1".into());
            }
            if !m.amplitude.is_finite() {
                out.push("initial.mode.amplitude: must be finite".into());
            }
            if let Some(c) = m.component {
                if c != 2 && c != 3 {
                    out.push(format!("initial.mode.component: must be 2 or 3, got {c}"));
                }
            }
        }
        if self.forcing.f1.is_some() {
            out.push("forcing.f1: the axial force density must vanish (f1 = 0); remove the key".into());
        }
        let fields = [
            ("forcing.f2", &self.forcing.f2),
            ("forcing.f3", &self.forcing.f3),
            ("forcing.rho2", &self.forcing.rho2),
            ("forcing.rho3", &self.forcing.rho3),
            ("forcing.sigma", &self.forcing.sigma),
        ];
        for (key, f) in fields {
            if let Err(e) = f.validate() {
                out.push(format!("{key}: {e}"));
            }
        }
        if self.io.output_stride == 0 {
            out.push("io.output_stride: must be >= 1".into());
        }
        out
    }

    pub fn material_model(&self) -> MaterialModel {
        self.material.build().expect("validated")
    }

    pub fn forcing_model(&self) -> ForcingModel {
        ForcingModel {
            f2: self.forcing.f2.clone(),
            f3: self.forcing.f3.clone(),
        }
    }

    pub fn rho_sigma(&self) -> RhoSigma {
        RhoSigma {
            rho2: self.forcing.rho2.clone(),
            rho3: self.forcing.rho3.clone(),
            sigma: self.forcing.sigma.clone(),
        }
    }

    /// `None` when the dynamics block is absent.
    pub fn simulation(&self) -> Option<SimulationConfig> {
        self.dynamics.map(|d| SimulationConfig {
            dt: d.dt,
            t_final: d.t_final,
            newton_tol: d.newton_tol,
            newton_max: d.newton_max,
            output_stride: self.io.output_stride,
        })
    }
}

/// Parses and validates a configuration; all semantic violations are reported together.
pub fn parse_config_str(text: &str, origin: &Path) -> Result<RunConfig, ConfigError> {
    let invalid = |violations| ConfigError::Invalid {
        path: origin.display().to_string(),
        violations,
    };
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let msg = e.inner().to_string();
        invalid(vec![if path == "." { msg } else { format!("{path}: {msg}") }])
    })?;
    cfg.base_dir = origin.parent().map(Path::to_path_buf).unwrap_or_default();
    let violations = cfg.violations();
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(invalid(violations))
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        parse_config_str(text, Path::new("cfg.json"))
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse(r#"{"material": {"lambda": 1, "mu": 1}, "section": {"shape": "disk", "resolution": 4}}"#)
            .unwrap();
        assert_eq!(cfg.material.stress_mode, crate::material::StressMode::Nonlinear);
        assert_eq!(cfg.io.output_stride, 1);
        assert!(cfg.rod.is_none());
    }

    #[test]
    fn violations_are_collected_with_key_paths() {
        let err = parse(
            r#"{"material": {"lambda": 1, "mu": -1}, "section": {"shape": "square", "resolution": 0},
                "rod": {"n_elem": 1}, "forcing": {"f1": {"space": {"kind": "constant", "value": 1}}}}"#,
        )
        .unwrap_err();
        let v = err.violations();
        assert!(v.iter().any(|s| s.starts_with("material.mu")), "{v:?}");
        assert!(v.iter().any(|s| s.starts_with("section.resolution")));
        assert!(v.iter().any(|s| s.starts_with("rod.n_elem")));
        assert!(v.iter().any(|s| s.starts_with("forcing.f1") && s.contains("f1 = 0")));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse(r#"{"material": {"lambda": 1, "mu": 1, "nu": 3}, "section": {"shape": "disk", "resolution": 4}}"#)
            .unwrap_err();
        assert!(err.to_string().contains("material"), "{err}");
        assert!(err.to_string().contains("nu"), "{err}");
    }
}
