//! Run configuration: TOML file, environment override, validation.
//!
//! ```toml
//! problem = "example2"
//! alpha = 1.0
//! theta = 0.4
//! levels = 5
//! max_dofs = 100000
//! h = 3
//! output_dir = "results"
//! vtk = true
//! ```
//!
//! Every key is optional. `MIXED_DBC_OUTPUT_DIR` overrides `output_dir`
//! from the file; explicit command-line flags override both.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const OUTPUT_DIR_ENV: &str = "MIXED_DBC_OUTPUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    pub alpha: f64,
    pub theta: f64,
    /// Number of uniform levels, starting at `h = 2^-2`.
    pub levels: usize,
    pub max_dofs: usize,
    /// Dyadic mesh exponent for single solves, `h = 2^-h`.
    pub h: u32,
    pub output_dir: PathBuf,
    pub vtk: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: "example1".into(),
            alpha: 1.0,
            theta: 0.4,
            levels: 5,
            max_dofs: 100_000,
            h: 3,
            output_dir: PathBuf::from("output"),
            vtk: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Applies `MIXED_DBC_OUTPUT_DIR` when it is set and non-empty.
    pub fn apply_env(&mut self) {
        self.apply_output_override(std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from));
    }

    fn apply_output_override(&mut self, dir: Option<PathBuf>) {
        if let Some(d) = dir.filter(|d| !d.as_os_str().is_empty()) {
            self.output_dir = d;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha must be a positive number, got {}", self.alpha)));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        if self.levels < 1 {
            return Err(Error::Config("levels must be at least 1".into()));
        }
        if self.h > 12 {
            return Err(Error::Config(format!("h exponent {} is too fine (at most 12)", self.h)));
        }
        Ok(())
    }
}
