//! Run configuration: a TOML file merged under command-line flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use opentri_core::{Error, Result};

/// Values read from a config file. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<String>,
    pub manifold: Option<String>,
    pub check: Option<String>,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub tolerance: ToleranceSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub n: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub model: Option<String>,
    pub manifold: Option<String>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: String,
    pub manifold: Option<String>,
    pub check: Option<String>,
    pub n: usize,
    pub seed: u64,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    /// `0` means all available cores.
    pub workers: usize,
}

impl RunConfig {
    /// Output directory, `out` when none is configured.
    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn resolve(file: FileConfig, flags: Overrides) -> Result<Self> {
        let cfg = Self {
            model: flags.model.or(file.model).unwrap_or_else(|| "euclidean".into()),
            manifold: flags.manifold.or(file.manifold),
            check: file.check,
            n: flags.n.or(file.sampling.n).unwrap_or(100),
            seed: flags.seed.or(file.sampling.seed).unwrap_or(0),
            tol: flags.tol.or(file.tolerance.tol),
            out: flags.out.or(file.output.dir),
            workers: flags.workers.or(file.output.workers).unwrap_or(0),
        };
        if let Some(t) = cfg.tol {
            if t.is_nan() || t < 0.0 {
                return Err(Error::Config(format!("tolerance must be non-negative, got {t}")));
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file = FileConfig::parse(
            "model = \"gauss\"\nmanifold = \"flat3\"\n[sampling]\nn = 5\nseed = 3\n[output]\nworkers = 2\n",
        )
        .unwrap();
        let flags = Overrides { model: Some("hyperbolic".into()), n: Some(9), ..Overrides::default() };
        let cfg = RunConfig::resolve(file, flags).unwrap();
        assert_eq!(cfg.model, "hyperbolic");
        assert_eq!(cfg.manifold.as_deref(), Some("flat3"));
        assert_eq!((cfg.n, cfg.seed, cfg.workers), (9, 3, 2));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(FileConfig::parse("colour = 1"), Err(Error::Config(_))));
        assert!(matches!(FileConfig::parse("[sampling]\nsize = 1"), Err(Error::Config(_))));
    }

    #[test]
    fn negative_tolerance_is_rejected() {
        let flags = Overrides { tol: Some(-1.0), ..Overrides::default() };
        assert!(RunConfig::resolve(FileConfig::default(), flags).is_err());
    }
}
