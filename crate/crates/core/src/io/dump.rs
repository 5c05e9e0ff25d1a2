//! Final-state dumps: one JSON document tagged by algorithm.
//!
//! ```text
//! {"format": "mslp-state v1", "algorithm": "sdlp", "instance": "...",
//!  "sampler": {...}, "run": {...}}
//! {"format": "mslp-state v1", "algorithm": "sddp", "instance": "...",
//!  "result": {...}}
//! ```
//!
//! Floats are written with round-trip precision, so a reloaded SDLP state
//! continues exactly as the original run would have.

use crate::error::{MslpError, Result};
use crate::process::SamplerState;
use crate::sddp::SddpResult;
use crate::sdlp::SdlpRunState;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const DUMP_FORMAT: &str = "mslp-state v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum StateDump {
    Sdlp {
        format: String,
        instance: String,
        sampler: SamplerState,
        run: Box<SdlpRunState>,
    },
    Sddp {
        format: String,
        instance: String,
        result: Box<SddpResult>,
    },
}

impl StateDump {
    pub fn sdlp(instance: &str, sampler: SamplerState, run: SdlpRunState) -> Self {
        StateDump::Sdlp {
            format: DUMP_FORMAT.into(),
            instance: instance.into(),
            sampler,
            run: Box::new(run),
        }
    }

    pub fn sddp(instance: &str, result: SddpResult) -> Self {
        StateDump::Sddp {
            format: DUMP_FORMAT.into(),
            instance: instance.into(),
            result: Box::new(result),
        }
    }

    pub fn instance(&self) -> &str {
        match self {
            StateDump::Sdlp { instance, .. } | StateDump::Sddp { instance, .. } => instance,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: StateDump = serde_json::from_str(text)?;
        let format = match &dump {
            StateDump::Sdlp { format, .. } | StateDump::Sddp { format, .. } => format,
        };
        if format != DUMP_FORMAT {
            return Err(MslpError::Invalid(format!("unsupported dump format `{}`", format)));
        }
        Ok(dump)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
