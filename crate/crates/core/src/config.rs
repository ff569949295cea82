//! Run settings: built-in defaults, optionally overridden by a TOML file,
//! overridden in turn by command-line flags.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::features::{AnalysisConfig, DEFAULT_ALPHA, DEFAULT_FMAX, DEFAULT_FMIN, DEFAULT_ORDER};
use crate::hmm::DEFAULT_STATES;
use crate::train::DEFAULT_ITERATIONS;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Parse { path: String, reason: String },
    #[error("invalid setting: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub states: usize,
    pub iters: usize,
    /// Speaking rate; 2.0 halves state durations.
    pub rate: f64,
    pub seed: u64,
    pub order: usize,
    pub alpha: f64,
    pub fmin: f64,
    pub fmax: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            states: DEFAULT_STATES,
            iters: DEFAULT_ITERATIONS,
            rate: 1.0,
            seed: 0,
            order: DEFAULT_ORDER,
            alpha: DEFAULT_ALPHA,
            fmin: DEFAULT_FMIN,
            fmax: DEFAULT_FMAX,
        }
    }
}

/// Partial settings, as read from a file or from flags.
#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub states: Option<usize>,
    pub iters: Option<usize>,
    pub rate: Option<f64>,
    pub seed: Option<u64>,
    pub order: Option<usize>,
    pub alpha: Option<f64>,
    pub fmin: Option<f64>,
    pub fmax: Option<f64>,
}

impl Overrides {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let origin = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: origin.clone(),
            source,
        })?;
        Self::parse(&text, &origin)
    }

    fn apply(&self, s: &mut Settings) {
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { s.$f = v; } )* };
        }
        take!(states, iters, rate, seed, order, alpha, fmin, fmax);
    }
}

impl Settings {
    /// Defaults, then `file`, then `flags`.
    pub fn resolve(file: Option<&Overrides>, flags: &Overrides) -> Result<Self, ConfigError> {
        let mut s = Settings::default();
        if let Some(f) = file {
            f.apply(&mut s);
        }
        flags.apply(&mut s);
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.states == 0 {
            return bad("states must be at least 1".into());
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return bad(format!("rate must be positive, got {}", self.rate));
        }
        if self.order == 0 || !(0.0..1.0).contains(&self.alpha) {
            return bad(format!(
                "order {} must be >= 1 and alpha {} in [0, 1)",
                self.order, self.alpha
            ));
        }
        if !(self.fmin > 0.0 && self.fmin < self.fmax) {
            return bad(format!(
                "need 0 < fmin ({}) < fmax ({})",
                self.fmin, self.fmax
            ));
        }
        Ok(())
    }

    pub fn analysis(&self) -> AnalysisConfig {
        AnalysisConfig {
            order: self.order,
            alpha: self.alpha,
            fmin: self.fmin,
            fmax: self.fmax,
            ..Default::default()
        }
    }

    /// Multiplier applied to duration means.
    pub fn duration_factor(&self) -> f64 {
        1.0 / self.rate
    }
}
