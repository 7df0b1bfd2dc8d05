//! TOML configuration. Every key is optional so that a file and command-line
//! flags can be layered; the caller decides which wins.
//!
//! ```toml
//! system = "beta:27/11"
//! n = 50000
//! h = 0.007
//! kernel = "epanechnikov"
//! noise = "uniform:0.3"
//! grid = 200
//! seed = 7
//! ```
//!
//! Table files hold a `[defaults]` table and one `[[spec]]` entry per row.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{BandwidthSpec, ExperimentSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub label: Option<String>,
    pub system: Option<String>,
    pub n: Option<usize>,
    pub h: Option<f64>,
    pub xi: Option<f64>,
    pub kernel: Option<String>,
    pub noise: Option<String>,
    pub grid: Option<usize>,
    pub region: Option<String>,
    pub window: Option<[f64; 2]>,
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    pub burnin: Option<usize>,
    pub out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

impl ConfigFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse("config", text, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read(path)?)
    }

    /// Keys set in `top` replace those in `self`.
    pub fn overlay(self, top: &ConfigFile) -> ConfigFile {
        let top = top.clone();
        ConfigFile {
            label: top.label.or(self.label),
            system: top.system.or(self.system),
            n: top.n.or(self.n),
            // h and xi exclude each other: a bandwidth on top replaces both.
            h: if top.h.is_some() || top.xi.is_some() {
                top.h
            } else {
                self.h
            },
            xi: if top.h.is_some() || top.xi.is_some() {
                top.xi
            } else {
                self.xi
            },
            kernel: top.kernel.or(self.kernel),
            noise: top.noise.or(self.noise),
            grid: top.grid.or(self.grid),
            region: top.region.or(self.region),
            window: top.window.or(self.window),
            seed: top.seed.or(self.seed),
            replications: top.replications.or(self.replications),
            burnin: top.burnin.or(self.burnin),
            out: top.out.or(self.out),
        }
    }

    pub fn to_spec(&self) -> Result<ExperimentSpec> {
        let system = self
            .system
            .as_deref()
            .ok_or_else(|| Error::invalid("system", "missing"))?
            .parse()?;
        let n = self.n.ok_or_else(|| Error::invalid("n", "missing"))?;
        let bandwidth = match (self.h, self.xi) {
            (Some(h), None) => BandwidthSpec::Fixed(h),
            (None, Some(xi)) => BandwidthSpec::Schedule(xi),
            (Some(_), Some(_)) => return Err(Error::invalid("h", "give either h or xi, not both")),
            (None, None) => return Err(Error::invalid("h", "missing bandwidth (h or xi)")),
        };
        let mut spec = ExperimentSpec::new(system, n, bandwidth);
        if let Some(label) = &self.label {
            spec.label = label.clone();
        }
        if let Some(k) = &self.kernel {
            spec.kernel = k.parse()?;
        }
        if let Some(noise) = &self.noise {
            spec.noise = noise.parse()?;
        }
        if let Some(grid) = self.grid {
            spec.grid = grid;
        }
        if let Some(region) = &self.region {
            spec.region = region.parse()?;
        }
        spec.window = self.window.or(spec.window);
        spec.seed = self.seed.unwrap_or(spec.seed);
        spec.replications = self.replications.unwrap_or(spec.replications);
        spec.burnin = self.burnin.unwrap_or(spec.burnin);
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableFile {
    #[serde(default)]
    pub defaults: ConfigFile,
    #[serde(default)]
    pub spec: Vec<ConfigFile>,
}

impl TableFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse("table", text, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read(path)?)
    }

    /// Each entry layered over the defaults and then under `overrides`.
    /// Unlabelled entries are labelled `row/<index>`.
    pub fn to_specs(&self, overrides: &ConfigFile) -> Result<Vec<ExperimentSpec>> {
        self.spec
            .iter()
            .enumerate()
            .map(|(i, entry)| {
                let mut merged = self.defaults.clone().overlay(entry).overlay(overrides);
                if merged.label.is_none() {
                    merged.label = Some(format!("row/{i}"));
                }
                merged.to_spec()
            })
            .collect()
    }
}
