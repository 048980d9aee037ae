use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::admm::AdmmParams;
use crate::channel::{ChannelParams, SystemConfig};
use crate::error::{Error, Result};
use crate::power::PowerModel;
use crate::projections::Architecture;

/// Which reference precoders are evaluated next to the hybrid designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Baselines {
    /// Fully digital block diagonalization (`arch = digital` rows).
    pub fully_digital: bool,
    /// The same ADMM run with `mu = 0` for every architecture (`<arch>-mu0` rows).
    pub admm_mu0: bool,
}

impl Default for Baselines {
    fn default() -> Self {
        Baselines {
            fully_digital: true,
            admm_mu0: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub channel: ChannelParams,
    pub architectures: Vec<Architecture>,
    #[serde(default)]
    pub admm: AdmmParams,
    pub snr_grid_db: Vec<f64>,
    pub n_trials: usize,
    /// TOML integers stop at `i64::MAX`; larger seeds may be given as a decimal string.
    #[serde(default, deserialize_with = "seed_from_int_or_str")]
    pub master_seed: u64,
    #[serde(default)]
    pub baselines: Baselines,
    #[serde(default)]
    pub power: PowerModel,
    #[serde(default = "default_output")]
    pub output_path: String,
}

fn seed_from_int_or_str<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> std::result::Result<u64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(u64),
        Str(String),
    }
    match Raw::deserialize(d)? {
        Raw::Int(v) => Ok(v),
        Raw::Str(s) => s.trim().parse().map_err(|_| {
            serde::de::Error::custom(format!(
                "master_seed `{s}` is not an unsigned 64-bit integer"
            ))
        }),
    }
}

fn default_output() -> String {
    "results.csv".into()
}

const REQUIRED: [&str; 8] = [
    "system.n_tx",
    "system.n_rx",
    "system.n_users",
    "system.n_streams",
    "system.n_rf_tx",
    "architectures",
    "snr_grid_db",
    "n_trials",
];

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.channel.validate()?;
        self.admm.validate()?;
        if self.n_trials == 0 {
            return Err(Error::config("n_trials", "must be at least 1"));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::config(
                "snr_grid_db",
                "must list at least one SNR point",
            ));
        }
        if let Some(i) = self.snr_grid_db.iter().position(|s| !s.is_finite()) {
            return Err(Error::config(format!("snr_grid_db[{i}]"), "must be finite"));
        }
        if self.architectures.is_empty() && !self.baselines.fully_digital {
            return Err(Error::config("architectures", "nothing to evaluate"));
        }
        for (i, arch) in self.architectures.iter().enumerate() {
            arch.validate(self.system.n_tx, self.system.n_rf_tx)
                .map_err(|e| match e {
                    Error::Config { reason, .. } => {
                        Error::config(format!("architectures[{i}]"), reason)
                    }
                    other => Error::config(format!("architectures[{i}]"), other.to_string()),
                })?;
        }
        let s = &self.system;
        if (s.n_users - 1) * s.n_rx + s.n_streams > s.n_tx {
            return Err(Error::Infeasible(format!(
                "block diagonalization needs (N_u - 1) N_rx + N_s <= N_tx, got {} > {}",
                (s.n_users - 1) * s.n_rx + s.n_streams,
                s.n_tx
            )));
        }
        if self.power.p_ps.is_empty() {
            return Err(Error::config(
                "power.p_ps",
                "needs at least the 1-bit entry",
            ));
        }
        Ok(())
    }
}

/// Reads, parses and validates a TOML experiment file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Parse { reason, .. } => Error::Parse {
            path: path.display().to_string(),
            reason,
        },
        other => other,
    })
}

/// Parses and validates TOML text.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let parse_err = |reason: String| Error::Parse {
        path: "<config>".into(),
        reason,
    };
    let table: toml::Table = toml::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    for key in REQUIRED {
        let mut node = Some(&table);
        let mut found = None;
        for part in key.split('.') {
            found = node.and_then(|t| t.get(part));
            node = found.and_then(|v| v.as_table());
        }
        if found.is_none() {
            return Err(parse_err(format!("missing field `{key}`")));
        }
    }
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}
