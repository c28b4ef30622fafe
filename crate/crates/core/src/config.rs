//! Configuration: one TOML document with a table per module.
//!
//! Loading starts from a preset, merges the file on top and then applies
//! `key=value` overrides, so any key left out keeps its default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::gmm::EstimationOptions;
use crate::model::ModelOptions;
use crate::params::{flat_state_count, CalibratedParams, EstimatedParams, GridSpec, TypeWeights};
use crate::preferences::ShifterSchedule;
use crate::shocks::ShockParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Full grids and ages up to 100.
    #[default]
    Paper,
    /// Small grids and ages up to 80.
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub calibrated: CalibratedParams,
    pub estimated: EstimatedParams,
    pub shifters: ShifterSchedule,
    pub shocks: ShockParams,
    pub grid: GridSpec,
    pub types: TypeWeights,
    pub options: ModelOptions,
    pub estimation: EstimationOptions,
}

impl ModelParams {
    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Paper => Self::default(),
            Preset::Desk => {
                let mut p = Self::default();
                p.grid = GridSpec::desk();
                p.calibrated.j_max = 80;
                p
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.calibrated.validate()?;
        self.estimated.validate()?;
        self.grid.validate()?;
        self.types.validate()?;
        self.shocks.sigma_eps().check_psd()?;
        self.shocks.sigma_e().check_psd()?;
        Ok(())
    }

    /// States per child-state branch.
    pub fn states_per_branch(&self) -> usize {
        flat_state_count(&self.grid, self.calibrated.n_ages())
    }

    /// Parse a TOML document layered over `preset`.
    pub fn from_toml_str(text: &str, preset: Preset) -> Result<Self> {
        let file: toml::Table = toml::from_str(text).map_err(|e| ModelError::Config(e.to_string()))?;
        let mut base = to_table(&Self::preset(preset))?;
        merge(&mut base, file);
        from_table(base)
    }

    /// Load an optional config file, then apply `key=value` overrides.
    pub fn load(path: Option<&Path>, preset: Preset, overrides: &[String]) -> Result<Self> {
        let mut params = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ModelError::Io {
                    path: p.to_path_buf(),
                    source,
                })?;
                Self::from_toml_str(&text, preset)?
            }
            None => Self::preset(preset),
        };
        for kv in overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| ModelError::Config(format!("override `{kv}` is not key=value")))?;
            params = params.with_override(k.trim(), v.trim())?;
        }
        params.validate()?;
        Ok(params)
    }

    /// Copy with one dotted key replaced, e.g. `calibrated.rr_pl`, `0.75`.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self> {
        let mut table = to_table(self)?;
        let parts: Vec<&str> = key.split('.').collect();
        if parts.len() != 2 || parts.iter().any(|p| p.is_empty()) {
            return Err(ModelError::Config(format!("override key `{key}` must be section.field")));
        }
        let section = table
            .get_mut(parts[0])
            .and_then(|v| v.as_table_mut())
            .ok_or_else(|| ModelError::Config(format!("unknown section `{}`", parts[0])))?;
        if !section.contains_key(parts[1]) {
            return Err(ModelError::Config(format!("unknown key `{key}`")));
        }
        section.insert(parts[1].to_string(), parse_scalar(value));
        from_table(table)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| ModelError::Config(e.to_string()))
    }
}

fn to_table(p: &ModelParams) -> Result<toml::Table> {
    toml::Table::try_from(p).map_err(|e| ModelError::Config(e.to_string()))
}

fn from_table(t: toml::Table) -> Result<ModelParams> {
    toml::Value::Table(t)
        .try_into()
        .map_err(|e: toml::de::Error| ModelError::Config(e.to_string()))
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Read a value as TOML; bare words fall back to strings.
fn parse_scalar(s: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {s}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(s.to_string())),
        Err(_) => toml::Value::String(s.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::PlMode;

    #[test]
    fn empty_file_gives_preset() {
        assert_eq!(ModelParams::from_toml_str("", Preset::Paper).unwrap(), ModelParams::default());
        let desk = ModelParams::from_toml_str("", Preset::Desk).unwrap();
        assert_eq!(desk.grid.n_assets, 21);
        assert_eq!(desk.calibrated.j_max, 80);
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let p = ModelParams::from_toml_str("[calibrated]\nrr_pl = 0.75\n[grid]\nn_assets = 31\n", Preset::Desk).unwrap();
        assert_eq!(p.calibrated.rr_pl, 0.75);
        assert_eq!(p.calibrated.beta, 0.96);
        assert_eq!(p.grid.n_assets, 31);
        assert_eq!(p.grid.n_leisure, 5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ModelParams::from_toml_str("[calibrated]\nbogus = 1\n", Preset::Paper).is_err());
        assert!(ModelParams::default().with_override("calibrated.bogus", "1").is_err());
        assert!(ModelParams::default().with_override("rr_pl", "1").is_err());
    }

    #[test]
    fn overrides_parse_numbers_and_words() {
        let p = ModelParams::load(
            None,
            Preset::Paper,
            &["calibrated.wage=1.1".into(), "options.pl_mode=literal".into()],
        )
        .unwrap();
        assert_eq!(p.calibrated.wage, 1.1);
        assert_eq!(p.options.pl_mode, PlMode::Literal);
    }

    #[test]
    fn round_trip_through_toml() {
        let p = ModelParams::preset(Preset::Desk);
        let text = p.to_toml_string().unwrap();
        assert_eq!(ModelParams::from_toml_str(&text, Preset::Paper).unwrap(), p);
    }

    #[test]
    fn paper_preset_count() {
        assert_eq!(ModelParams::preset(Preset::Paper).states_per_branch(), 334_611);
    }
}
