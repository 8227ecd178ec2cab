//! Job specification files.

use serde::Deserialize;

use renewal_core::lattice::{PowerLawSpec, WilliamsonSpec};
use renewal_core::numerics::geom_grid;
use renewal_core::{LatticeDist, RegVarFn};

use crate::fail::{Fail, WithPath};

/// Distribution builders, one key per family.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    PowerLaw(PowerLawSpec),
    Williamson(WilliamsonSpec),
    Explicit(ExplicitSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitSpec {
    #[serde(default = "one")]
    pub h: f64,
    #[serde(default)]
    pub a: f64,
    pub j_min: i64,
    pub masses: Vec<f64>,
    pub ell: RegVarFn,
    #[serde(default)]
    pub rho: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl DistSpec {
    pub fn build(&self, path: &str) -> Result<LatticeDist, Fail> {
        match self {
            DistSpec::PowerLaw(s) => LatticeDist::power_law(s).at(&format!("{path}.power_law")),
            DistSpec::Williamson(s) => LatticeDist::williamson(s).at(&format!("{path}.williamson")),
            DistSpec::Explicit(s) => LatticeDist::explicit(s.h, s.a, s.j_min, s.masses.clone(), s.ell.clone(), s.rho)
                .at(&format!("{path}.explicit")),
        }
    }
}

/// Either explicit points or a geometric grid.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Points(Vec<f64>),
    Geometric { lo: f64, hi: f64, points: usize },
}

impl Grid {
    pub fn values(&self, path: &str) -> Result<Vec<f64>, Fail> {
        let v = match self {
            Grid::Points(v) => v.clone(),
            Grid::Geometric { lo, hi, points } => {
                if !(*lo > 0.0 && hi > lo && *points >= 2) {
                    return Err(Fail::invalid(path, "need 0 < lo < hi and at least two points"));
                }
                geom_grid(*lo, *hi, *points)
            }
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(Fail::invalid(path, "grid must be non-empty and finite"));
        }
        Ok(v)
    }
}

/// The whole spec file. Task parameters stay untyped until the task is known.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    #[serde(default)]
    pub task: Option<String>,
    pub distribution: DistSpec,
    #[serde(default)]
    pub params: serde_json::Value,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Lost-mass and clamp-ledger budget of convolution tasks.
    #[serde(default)]
    pub budget: Option<f64>,
}

/// Decode `value` into `T`, reporting the failing field as a path under `root`.
pub fn decode<T: serde::de::DeserializeOwned>(value: &serde_json::Value, root: &str) -> Result<T, Fail> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." { root.to_string() } else { format!("{root}.{inner}") };
        Fail::invalid(&path, &e.into_inner().to_string())
    })
}
