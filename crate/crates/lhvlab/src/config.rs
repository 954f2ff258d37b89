use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;

/// Largest local dimension for commands that build matrices.
pub const MAX_MATRIX_DIM: usize = 64;
/// Smallest sample count accepted by verify commands.
pub const MIN_VERIFY_SAMPLES: u64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Bounds,
    VerifyProjective,
    VerifyNielsen,
    VerifyPovm,
    VerifyChsh,
    Crossover,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bounds => "bounds",
            Command::VerifyProjective => "verify-projective",
            Command::VerifyNielsen => "verify-nielsen",
            Command::VerifyPovm => "verify-povm",
            Command::VerifyChsh => "verify-chsh",
            Command::Crossover => "crossover",
        }
    }

    pub fn is_verify(self) -> bool {
        matches!(
            self,
            Command::VerifyProjective
                | Command::VerifyNielsen
                | Command::VerifyPovm
                | Command::VerifyChsh
        )
    }

    pub fn default_dims(self) -> Vec<usize> {
        match self {
            Command::Bounds => vec![2, 3, 4, 10, 100],
            Command::VerifyChsh => vec![2, 3, 4, 5, 6],
            _ => vec![2, 3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub dims: Vec<usize>,
    pub samples: u64,
    pub seed: u64,
    pub sigma_tolerance: f64,
    pub format: Format,
    pub output_path: Option<PathBuf>,
    pub chunk_size: u64,
    /// Random measurement pairs (or target states) per dimension.
    pub cases: usize,
    /// See-saw restarts for verify-chsh.
    pub restarts: usize,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            dims: command.default_dims(),
            samples: 1_000_000,
            seed: 0,
            sigma_tolerance: 5.0,
            format: Format::Text,
            output_path: None,
            chunk_size: lhv_core::montecarlo::DEFAULT_CHUNK_SIZE,
            cases: 3,
            restarts: 20,
        }
    }

    /// Checks the invariants every command relies on. The message is meant
    /// for a usage error.
    pub fn validate(&self) -> Result<(), String> {
        if self.dims.is_empty() {
            return Err("--dims must list at least one dimension".into());
        }
        if let Some(d) = self.dims.iter().find(|&&d| d < 2) {
            return Err(format!("every dimension must be at least 2, got {d}"));
        }
        if self.command.is_verify() {
            if self.samples < MIN_VERIFY_SAMPLES {
                return Err(format!(
                    "verify commands need --samples ≥ {MIN_VERIFY_SAMPLES}"
                ));
            }
            if let Some(d) = self.dims.iter().find(|&&d| d > MAX_MATRIX_DIM) {
                return Err(format!(
                    "d = {d} refused: verify commands build d²×d² matrices and are capped at d = {MAX_MATRIX_DIM}"
                ));
            }
        }
        if self.sigma_tolerance.is_nan() || self.sigma_tolerance < 1.0 {
            return Err("--sigma-tol must be at least 1".into());
        }
        if self.chunk_size == 0 {
            return Err("--chunk-size must be positive".into());
        }
        if self.restarts == 0 {
            return Err("--restarts must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        for c in Command::value_variants() {
            assert!(RunConfig::new(*c).validate().is_ok());
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = RunConfig::new(Command::VerifyProjective);
        cfg.dims = vec![];
        assert!(cfg.validate().is_err());
        cfg.dims = vec![1];
        assert!(cfg.validate().is_err());
        cfg.dims = vec![65];
        assert!(cfg.validate().unwrap_err().contains("capped"));
        cfg.dims = vec![2];
        cfg.samples = 999;
        assert!(cfg.validate().is_err());
        cfg.samples = 1000;
        cfg.sigma_tolerance = 0.5;
        assert!(cfg.validate().is_err());

        let mut bounds = RunConfig::new(Command::Bounds);
        bounds.dims = vec![1_000_000];
        bounds.samples = 1;
        assert!(bounds.validate().is_ok());
    }
}
