//! The declarative config file (TOML).

use std::path::{Path, PathBuf};

use goldilocks_core::simulation::WorldConfig;
use serde::{Deserialize, Serialize};

use crate::store::DEFAULT_SNAPSHOT_EVERY;

pub const DEFAULT_PARTITION_SIZE: usize = 10;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Master seed for every random draw.
    pub seed: u64,
    pub service: ServiceSettings,
    pub simulation: SimulationSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSettings {
    pub data_dir: PathBuf,
    pub bind: String,
    /// Items per annotator sequence.
    pub partition_size: usize,
    pub snapshot_every: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSettings {
    pub replications: usize,
    pub world: WorldConfig,
}

impl Default for ServiceSettings {
    fn default() -> Self {
        ServiceSettings {
            data_dir: PathBuf::from("goldilocks-data"),
            bind: "127.0.0.1:8080".into(),
            partition_size: DEFAULT_PARTITION_SIZE,
            snapshot_every: DEFAULT_SNAPSHOT_EVERY,
        }
    }
}

impl Default for SimulationSettings {
    fn default() -> Self {
        SimulationSettings { replications: 100, world: WorldConfig::default() }
    }
}

impl Settings {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(toml::from_str(&text)?)
    }

    /// Applies a command-line seed, which also seeds the simulated world.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self.simulation.world.seed = self.seed;
        self
    }
}
