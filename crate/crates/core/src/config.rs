//! The shared JSON configuration. Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, Pi2Settings, Tolerances};
use crate::lax::LaxConfig;
use crate::potentials::FamilySpec;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PrecisionDefaults {
    /// Fixed working digits; `None` uses the per-n rule.
    pub digits: Option<usize>,
    pub validate: bool,
}

impl Default for PrecisionDefaults {
    fn default() -> Self {
        PrecisionDefaults {
            digits: None,
            validate: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Pi2Defaults {
    pub t: f64,
    pub l: f64,
    pub mesh: f64,
    pub tol: f64,
}

impl Default for Pi2Defaults {
    fn default() -> Self {
        Pi2Defaults {
            t: 0.0,
            l: 40.0,
            mesh: 0.02,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct LaxDefaults {
    pub seed_radius: Option<f64>,
    pub window: (f64, f64),
    pub taylor_order: usize,
    pub formal_terms: usize,
}

impl Default for LaxDefaults {
    fn default() -> Self {
        let d = LaxConfig::default();
        LaxDefaults {
            seed_radius: d.seed_radius,
            window: d.window,
            taylor_order: d.taylor_order,
            formal_terms: d.formal_terms,
        }
    }
}

impl LaxDefaults {
    pub fn to_lax(&self) -> LaxConfig {
        LaxConfig {
            seed_radius: self.seed_radius,
            window: self.window,
            taylor_order: self.taylor_order,
            formal_terms: self.formal_terms,
            ..LaxConfig::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct HarnessDefaults {
    pub n_list: Vec<usize>,
    pub s0: f64,
    pub t0: f64,
    pub u_grid: Vec<f64>,
    pub v_grid: Vec<f64>,
    pub bulk_grid: Vec<f64>,
    pub edge_grid: Vec<f64>,
    pub sanity_n: usize,
    pub tolerances: Tolerances,
}

impl Default for HarnessDefaults {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        HarnessDefaults {
            n_list: e.n_list,
            s0: e.s0,
            t0: e.t0,
            u_grid: e.u_grid,
            v_grid: e.v_grid,
            bulk_grid: e.bulk_grid,
            edge_grid: e.edge_grid,
            sanity_n: e.sanity_n,
            tolerances: e.tolerances,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GlobalConfig {
    pub family: FamilySpec,
    pub support_guess: (f64, f64),
    pub precision: PrecisionDefaults,
    pub pi2: Pi2Defaults,
    pub lax: LaxDefaults,
    pub harness: HarnessDefaults,
    pub output_dir: PathBuf,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        GlobalConfig {
            family: FamilySpec::example(),
            support_guess: (-1.5, 1.5),
            precision: PrecisionDefaults::default(),
            pi2: Pi2Defaults::default(),
            lax: LaxDefaults::default(),
            harness: HarnessDefaults::default(),
            output_dir: PathBuf::from("."),
        }
    }
}

impl GlobalConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: GlobalConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Validates every field before any computation starts.
    pub fn validate(&self) -> Result<()> {
        crate::potentials::DeformedFamily::from_spec(&self.family)?;
        if !(self.support_guess.0 < self.support_guess.1) {
            return Err(Error::Config("support_guess must be an increasing pair".into()));
        }
        if let Some(d) = self.precision.digits {
            if d < 30 {
                return Err(Error::Config(format!("precision.digits must be >= 30, got {d}")));
            }
        }
        let p = &self.pi2;
        if !(p.l >= 20.0) || !(p.mesh > 0.0 && p.mesh <= 0.05) || !(p.tol > 0.0) {
            return Err(Error::Config(format!(
                "pi2 needs l >= 20, 0 < mesh <= 0.05, tol > 0 (got l = {}, mesh = {}, tol = {})",
                p.l, p.mesh, p.tol
            )));
        }
        if !(self.lax.window.0 < self.lax.window.1) || self.lax.taylor_order < 4 {
            return Err(Error::Config("lax.window must increase and taylor_order >= 4".into()));
        }
        self.experiment().validate_fields()
    }

    pub fn experiment(&self) -> ExperimentConfig {
        let h = &self.harness;
        ExperimentConfig {
            family: self.family.clone(),
            n_list: h.n_list.clone(),
            s0: h.s0,
            t0: h.t0,
            u_grid: h.u_grid.clone(),
            v_grid: h.v_grid.clone(),
            bulk_grid: h.bulk_grid.clone(),
            edge_grid: h.edge_grid.clone(),
            sanity_n: h.sanity_n,
            tolerances: h.tolerances.clone(),
            pi2: Pi2Settings {
                l: self.pi2.l,
                mesh: self.pi2.mesh,
                tol: self.pi2.tol,
            },
            digits: self.precision.digits,
            validate: self.precision.validate,
            support_guess: self.support_guess,
        }
    }
}
