//! Run configuration: flat TOML with one section per engine module.
//! Unknown keys are rejected so typos fail loudly instead of silently
//! falling back to defaults.

use serde::{Deserialize, Serialize};

use mlsw_core::harness::{DifferenceMetric, Projection};
use mlsw_core::profile::{ContinuousProfile, RhoTerm, Term};

pub const DEFAULT_LENGTH: f64 = 4.0 * std::f64::consts::PI;

fn default_length() -> f64 {
    DEFAULT_LENGTH
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub length: f64,
    pub points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            length: default_length(),
            points: 256,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayersSection {
    pub n: usize,
    pub rho_surf: f64,
    pub rho_bott: f64,
}

impl Default for LayersSection {
    fn default() -> Self {
        Self {
            n: 2,
            rho_surf: 1.0,
            rho_bott: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileSection {
    /// One of `default`, `small`, `rest`, `custom`.
    pub preset: String,
    pub h: Vec<Term>,
    pub u: Vec<Term>,
    pub hbar: Vec<RhoTerm>,
    pub ubar: Vec<RhoTerm>,
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self {
            preset: "default".into(),
            h: vec![],
            u: vec![],
            hbar: vec![],
            ubar: vec![],
        }
    }
}

impl ProfileSection {
    pub fn build(&self, length: f64) -> Result<ContinuousProfile, String> {
        match self.preset.as_str() {
            "default" => Ok(ContinuousProfile::preset_default(length)),
            "small" => Ok(ContinuousProfile::preset_small(length)),
            "rest" => Ok(ContinuousProfile::preset_rest(length)),
            "custom" => Ok(ContinuousProfile {
                h: self.h.clone(),
                u: self.u.clone(),
                hbar: self.hbar.clone(),
                ubar: self.ubar.clone(),
            }),
            other => Err(format!(
                "unknown profile preset '{other}' (expected default, small, rest or custom)"
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub kappa: f64,
    pub h_star: f64,
    pub cfl: f64,
    pub t_end: f64,
    pub dealias: bool,
    pub s: u32,
    pub output_interval: f64,
    pub fixed_dt: Option<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            kappa: 0.05,
            h_star: 0.5,
            cfl: 0.4,
            t_end: 1.0,
            dealias: true,
            s: 3,
            output_interval: 0.1,
            fixed_dt: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConsistencySection {
    pub n_list: Vec<usize>,
    pub s: u32,
    pub slope_window: [f64; 2],
}

impl Default for ConsistencySection {
    fn default() -> Self {
        Self {
            n_list: vec![8, 16, 32, 64, 128],
            s: 3,
            slope_window: [-2.25, -1.75],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergeSection {
    pub n_list: Vec<usize>,
    pub n_ref: usize,
    pub ratio: usize,
    pub s: u32,
    pub t_end: f64,
    pub metric: DifferenceMetric,
    pub projection: Projection,
    pub slope_window: [f64; 2],
}

impl Default for ConvergeSection {
    fn default() -> Self {
        Self {
            n_list: vec![5, 15, 45],
            n_ref: 135,
            ratio: 3,
            s: 3,
            t_end: 0.5,
            metric: DifferenceMetric::Instantaneous,
            projection: Projection::Sample,
            slope_window: [-2.3, -1.7],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionSection {
    pub modes: Vec<u32>,
    pub kappa: f64,
    pub hbar: f64,
    pub amplitude: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub tolerance: f64,
}

impl Default for DispersionSection {
    fn default() -> Self {
        Self {
            modes: vec![1, 2, 3],
            kappa: 0.1,
            hbar: 1.0,
            amplitude: 1e-6,
            t_end: 20.0,
            cfl: 0.3,
            tolerance: 0.01,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub grid: GridSection,
    pub layers: LayersSection,
    pub profile: ProfileSection,
    pub solver: SolverSection,
    pub consistency: ConsistencySection,
    pub converge: ConvergeSection,
    pub dispersion: DispersionSection,
}

impl RunConfig {
    pub fn load(path: Option<&std::path::Path>) -> Result<Self, String> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
                toml::from_str(&text).map_err(|e| format!("config {}: {e}", p.display()))
            }
        }
    }
}
