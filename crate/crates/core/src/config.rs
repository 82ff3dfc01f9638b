//! Run configuration, loadable from TOML. Every field has a default, so an
//! empty file is a valid config.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::language::LlmConfig;
use crate::scene::{SceneParams, SensorConfig};
use crate::valuemaps::DwfeAggregate;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub eps_m: f64,
    pub min_samples: usize,
    /// Sightings within this distance of an island name it.
    pub name_radius_m: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            eps_m: 1.0,
            min_samples: 1,
            name_radius_m: 2.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    #[default]
    Cooccurrence,
    Random,
    Llm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShfConfig {
    /// Follow and avoid queries per step, each.
    pub k: u32,
    pub eta: f64,
    pub oracle: OracleKind,
}

impl Default for ShfConfig {
    fn default() -> Self {
        Self {
            k: 5,
            eta: 1.0,
            oracle: OracleKind::Cooccurrence,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValueMapConfig {
    pub dwfe_aggregate: DwfeAggregate,
    /// Revisit penalty on cells near the executed path.
    pub trajectory_penalty: bool,
    pub trajectory_radius_m: f64,
    pub trajectory_lambda: f64,
}

impl Default for ValueMapConfig {
    fn default() -> Self {
        Self {
            dwfe_aggregate: DwfeAggregate::Sum,
            trajectory_penalty: false,
            trajectory_radius_m: 0.3,
            trajectory_lambda: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub c_min: f64,
    /// Obstacle inflation used for planning, in cells.
    pub inflation_cells: i32,
    pub max_waypoint_spacing_m: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            c_min: crate::planner::C_MIN,
            inflation_cells: 2,
            max_waypoint_spacing_m: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub max_steps: u32,
    /// Steps without getting closer to one target before it is given up.
    pub stall_steps: u32,
    /// Cells within this distance of a given-up target are not selected again.
    pub blacklist_radius_m: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            max_steps: 500,
            stall_steps: 12,
            blacklist_radius_m: 0.5,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub sensor: SensorConfig,
    pub cluster: ClusterConfig,
    pub valuemap: ValueMapConfig,
    pub shf: ShfConfig,
    pub planner: PlannerConfig,
    pub agent: AgentConfig,
    pub llm: LlmConfig,
    pub scenes: SceneParams,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.sensor.n_rays == 0 || !(self.sensor.max_range_m > 0.0) || !(self.sensor.fov_deg > 0.0) {
            return bad("sensor needs at least one ray, a positive range and a positive field of view".into());
        }
        if !(self.cluster.eps_m > 0.0) || self.cluster.min_samples == 0 {
            return bad(format!(
                "cluster eps_m must be positive and min_samples at least 1 (got {} and {})",
                self.cluster.eps_m, self.cluster.min_samples
            ));
        }
        if self.shf.k == 0 {
            return bad("shf.k must be at least 1".into());
        }
        if !(self.planner.c_min > 0.0) || self.planner.inflation_cells < 0 {
            return bad("planner.c_min must be positive and inflation_cells non-negative".into());
        }
        if self.agent.max_steps == 0 {
            return bad("agent.max_steps must be at least 1".into());
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        format!("{:x}", Sha256::digest(&json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_file_is_default() {
        let text = include_str!("../../../objnav.toml");
        assert_eq!(Config::from_toml(text).unwrap(), Config::default());
    }

    #[test]
    fn empty_file_is_default() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn overrides_and_unknown_keys() {
        let c = Config::from_toml("[shf]\nk = 3\n[cluster]\neps_m = 0.5\n").unwrap();
        assert_eq!(c.shf.k, 3);
        assert_eq!(c.cluster.eps_m, 0.5);
        assert!(Config::from_toml("[shf]\nkk = 3\n").is_err());
        assert!(Config::from_toml("[shf]\nk = 0\n").is_err());
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = Config::default();
        let mut b = a.clone();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.shf.eta = 2.0;
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }
}
