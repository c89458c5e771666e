//! Scenario configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::OmegaConvention;
use crate::error::{Error, Result};
use crate::model::{build_potential, GridSpec, PotentialFamily, PotentialField, DEFAULT_NODE_CAP};
use crate::sparse::SymSparse;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario_id: String,
    #[serde(default)]
    pub seed: u64,
    pub grid: Option<GridSection>,
    pub potential: Option<PotentialFamily>,
    /// Explicit pencil; replaces `grid` and `potential` for pure counting.
    pub pencil: Option<PencilSection>,
    #[serde(default)]
    pub levels: LevelsSection,
    #[serde(default)]
    pub sweeps: SweepSection,
    #[serde(default)]
    pub constants: ConstantsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: Vec<usize>,
    #[serde(default = "default_node_cap")]
    pub node_cap: usize,
}

fn default_node_cap() -> usize {
    DEFAULT_NODE_CAP
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PencilSection {
    /// Dense rows of the stiffness matrix.
    pub stiffness: Vec<Vec<f64>>,
    /// Diagonal of the mass matrix.
    pub mass: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsSection {
    #[serde(default = "default_energies")]
    pub energies: Vec<f64>,
    #[serde(default)]
    pub allow_positive: bool,
}

fn default_energies() -> Vec<f64> {
    vec![-1.0]
}

impl Default for LevelsSection {
    fn default() -> Self {
        LevelsSection {
            energies: default_energies(),
            allow_positive: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaScale {
    /// Grid values are used as given.
    #[default]
    Absolute,
    /// Grid values multiply the smallest Dirichlet eigenvalue.
    Dirichlet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_count: usize,
    pub lambda_scale: LambdaScale,
    /// Integrability exponent `p` of `(V - e)_-`.
    pub p: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
    /// `λ` used for the Schrödinger comparison.
    pub reduction_lambda: f64,
    pub b_samples: usize,
    pub poisson_samples: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            lambda_min: 0.5,
            lambda_max: 4.0,
            lambda_count: 8,
            lambda_scale: LambdaScale::Dirichlet,
            p: 3.0,
            t_min: 0.01,
            t_max: 10.0,
            t_count: 7,
            reduction_lambda: 1.0,
            b_samples: 200,
            poisson_samples: 2000,
        }
    }
}

impl SweepSection {
    pub fn lambda_grid(&self) -> Vec<f64> {
        log_grid(self.lambda_min, self.lambda_max, self.lambda_count)
    }

    pub fn t_grid(&self) -> Vec<f64> {
        log_grid(self.t_min, self.t_max, self.t_count)
    }
}

/// `count` log-spaced points from `a` to `b` inclusive.
pub fn log_grid(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let (la, lb) = (a.ln(), b.ln());
            (0..count)
                .map(|k| {
                    if k == 0 {
                        a
                    } else if k + 1 == count {
                        b
                    } else {
                        (la + (lb - la) * k as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    pub lieb_constant: Option<f64>,
    /// Trace-Sobolev remainder; estimated when absent.
    pub b: Option<f64>,
    /// Poisson-kernel constant; estimated when absent.
    pub c_p: Option<f64>,
    #[serde(default)]
    pub omega_convention: OmegaConvention,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.scenario_id.is_empty() || self.scenario_id.contains([',', '"', '\n']) {
            return bad("scenario_id must be nonempty without commas or quotes");
        }
        match (&self.pencil, &self.grid, &self.potential) {
            (Some(p), None, None) => {
                let n = p.mass.len();
                if p.stiffness.len() != n || p.stiffness.iter().any(|r| r.len() != n) {
                    return bad("pencil stiffness must be square and match the mass length");
                }
            }
            (None, Some(_), Some(_)) => {}
            (Some(_), _, _) => return bad("[pencil] excludes [grid] and [potential]"),
            _ => return bad("need either [grid] with [potential], or [pencil]"),
        }
        let s = &self.sweeps;
        if !(s.lambda_min > 0.0 && s.lambda_max >= s.lambda_min) || s.lambda_count == 0 {
            return bad("lambda sweep needs 0 < lambda_min <= lambda_max and lambda_count >= 1");
        }
        if !(s.t_min > 0.0 && s.t_max >= s.t_min) {
            return bad("t sweep needs 0 < t_min <= t_max");
        }
        if !(s.p >= 1.0) {
            return bad("p must be at least 1");
        }
        if !(s.reduction_lambda >= 1.0) {
            return bad("reduction_lambda must be at least 1");
        }
        if self.levels.energies.is_empty() || self.levels.energies.iter().any(|e| !e.is_finite()) {
            return bad("levels.energies must be a nonempty list of finite numbers");
        }
        if !self.levels.allow_positive && self.levels.energies.iter().any(|&e| e > 0.0) {
            return bad("positive energies need levels.allow_positive = true");
        }
        if let Some(l) = self.constants.lieb_constant {
            if !(l > 0.0) {
                return bad("lieb_constant must be positive");
            }
        }
        if let Some(c) = self.constants.c_p {
            if !(c >= 1.0) {
                return bad("c_p must be at least 1");
            }
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<GridSpec> {
        let g = self
            .grid
            .as_ref()
            .ok_or_else(|| Error::Config("scenario has no [grid]".into()))?;
        GridSpec::with_cap(g.lower.clone(), g.upper.clone(), g.resolution.clone(), g.node_cap)
    }

    pub fn build_field(&self) -> Result<PotentialField> {
        let fam = self
            .potential
            .as_ref()
            .ok_or_else(|| Error::Config("scenario has no [potential]".into()))?;
        build_potential(fam, &self.build_grid()?)
    }

    /// The explicit `(K, M)` of a `[pencil]` section.
    pub fn explicit_pencil(&self) -> Option<(SymSparse, Vec<f64>)> {
        self.pencil.as_ref().map(|p| {
            let n = p.mass.len();
            let entries = (0..n).flat_map(|i| {
                (i..n).filter_map(move |j| {
                    let v = 0.5 * (p.stiffness[i][j] + p.stiffness[j][i]);
                    (v != 0.0).then_some((i, j, v))
                })
            });
            (SymSparse::from_triplets(n, entries.collect::<Vec<_>>()), p.mass.clone())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
scenario_id = "t"
[grid]
lower = [0.0, 0.0]
upper = [1.0, 1.0]
resolution = [9, 9]
[potential]
family = "gaussian_well"
center = [0.5, 0.5]
width = 0.1
depth = 50.0
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.levels.energies, vec![-1.0]);
        assert_eq!(c.sweeps.lambda_scale, LambdaScale::Dirichlet);
        assert_eq!(c.constants.omega_convention, OmegaConvention::SphereArea);
        let again = ScenarioConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(
            ScenarioConfig::from_toml("scenario_id = 3"),
            Err(Error::Config(_))
        ));
        let unknown = MINIMAL.replace("gaussian_well", "square_well");
        assert!(ScenarioConfig::from_toml(&unknown).is_err());
        let positive = format!("{MINIMAL}\n[levels]\nenergies = [0.5]\n");
        assert!(ScenarioConfig::from_toml(&positive).is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.01, 10.0, 4);
        assert_eq!(g.len(), 4);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[3], 10.0);
        assert!((g[1] - 0.1).abs() < 1e-12);
    }
}
