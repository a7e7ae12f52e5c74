use serde::{Deserialize, Serialize};

use crate::cba::MiningConfig;
use crate::leveling::{LevelScheme, UserRequest};
use crate::qos::Schema;

use super::DataError;

/// Engine settings plus the user's request, read from one JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Class coefficients, one per QoS level.
    pub levels: LevelScheme,
    pub mining: MiningConfig,
    /// Equal-width discretization bins per attribute.
    pub bins: u32,
    /// Services need a utility strictly above this to be considered.
    pub threshold: f64,
    pub seed: u64,
    pub request: UserRequest,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            levels: LevelScheme::default(),
            mining: MiningConfig::default(),
            bins: 4,
            threshold: 0.25,
            seed: 42,
            request: UserRequest::default(),
        }
    }
}

impl EngineConfig {
    /// Range checks that do not need the attribute schema.
    pub fn validate(&self) -> Result<(), DataError> {
        self.mining.validate()?;
        if self.bins < 2 {
            return Err(DataError::InvalidConfig(format!("bins must be >= 2, got {}", self.bins)));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(DataError::InvalidConfig(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        Ok(())
    }

    pub fn validate_for(&self, schema: &Schema) -> Result<(), DataError> {
        self.validate()?;
        self.request.validate(schema)?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}
