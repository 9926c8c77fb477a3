use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::absa::DEFAULT_SILVER_THRESHOLD;
use crate::backend::{HttpTransport, RetryPolicy};
use crate::error::{Error, Result};
use crate::frames::SamplingConfig;
use crate::scenes::DEFAULT_TEMPLATE_VERSION;
use crate::transcripts::DEFAULT_PROBE_WINDOW_S;

pub const MAX_WORKERS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestSource {
    pub path: PathBuf,
    pub outlet: String,
    #[serde(default)]
    pub display_name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workers {
    pub asr: usize,
    pub absa: usize,
    pub vlm: usize,
}

impl Default for Workers {
    fn default() -> Self {
        Workers {
            asr: 4,
            absa: crate::absa::DEFAULT_ABSA_WORKERS,
            vlm: crate::scenes::DEFAULT_VLM_WORKERS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetryConfig {
    pub max_retries: u32,
    pub base_s: f64,
}

impl Default for RetryConfig {
    fn default() -> Self {
        RetryConfig {
            max_retries: 3,
            base_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    /// Frames drawn for the manual check.
    pub n: usize,
    /// Annotation sheet; defaults to `<store>/eval/sheet.csv`.
    #[serde(default)]
    pub sheet: Option<PathBuf>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { n: 799, sheet: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub template: String,
    /// Pin a backend model version; otherwise taken from `/info`.
    #[serde(default)]
    pub model_version: Option<String>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            template: DEFAULT_TEMPLATE_VERSION.into(),
            model_version: None,
        }
    }
}

fn default_threshold() -> f64 {
    DEFAULT_SILVER_THRESHOLD
}

fn default_seed() -> u64 {
    799
}

fn default_window() -> f64 {
    DEFAULT_PROBE_WINDOW_S
}

fn default_media_dir() -> PathBuf {
    PathBuf::from("media")
}

/// Everything a pipeline run needs. Relative paths are resolved against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub store_root: PathBuf,
    pub backend_url: String,
    /// Replaces the builtin lexicon, or extends it with `lexicon_merge`.
    #[serde(default)]
    pub lexicon_path: Option<PathBuf>,
    #[serde(default)]
    pub lexicon_merge: bool,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default = "default_threshold")]
    pub absa_threshold: f64,
    #[serde(default)]
    pub workers: Workers,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_media_dir")]
    pub media_dir: PathBuf,
    #[serde(default = "default_window")]
    pub probe_window_s: f64,
    #[serde(default)]
    pub manifests: Vec<ManifestSource>,
    #[serde(default)]
    pub scenes: SceneConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub retry: RetryConfig,
}

impl PipelineConfig {
    pub fn new(store_root: impl Into<PathBuf>, backend_url: &str) -> Self {
        PipelineConfig {
            store_root: store_root.into(),
            backend_url: backend_url.into(),
            lexicon_path: None,
            lexicon_merge: false,
            sampling: SamplingConfig::default(),
            absa_threshold: DEFAULT_SILVER_THRESHOLD,
            workers: Workers::default(),
            seed: default_seed(),
            media_dir: default_media_dir(),
            probe_window_s: DEFAULT_PROBE_WINDOW_S,
            manifests: Vec::new(),
            scenes: SceneConfig::default(),
            eval: EvalConfig::default(),
            retry: RetryConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Load, resolve relative paths against the file's directory, validate.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.store_root);
        fix(&mut self.media_dir);
        if let Some(p) = self.lexicon_path.as_mut() {
            fix(p);
        }
        if let Some(p) = self.eval.sheet.as_mut() {
            fix(p);
        }
        for m in &mut self.manifests {
            fix(&mut m.path);
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("asr", self.workers.asr), ("absa", self.workers.absa), ("vlm", self.workers.vlm)] {
            if !(1..=MAX_WORKERS).contains(&n) {
                return Err(Error::Config(format!("workers.{name} must be in 1..={MAX_WORKERS}, got {n}")));
            }
        }
        if !(self.absa_threshold > 0.0 && self.absa_threshold <= 1.0) {
            return Err(Error::Config(format!("absa_threshold must be in (0, 1], got {}", self.absa_threshold)));
        }
        if !(self.probe_window_s.is_finite() && self.probe_window_s > 0.0) {
            return Err(Error::Config(format!("probe_window_s must be positive, got {}", self.probe_window_s)));
        }
        if !(self.retry.base_s.is_finite() && self.retry.base_s >= 0.0) {
            return Err(Error::Config(format!("retry.base_s must be non-negative, got {}", self.retry.base_s)));
        }
        HttpTransport::new(&self.backend_url).map_err(|e| Error::Config(format!("backend_url: {e}")))?;
        self.sampling.validate().map_err(|e| Error::Config(format!("sampling: {e}")))?;
        Ok(())
    }

    pub fn set_workers(&mut self, n: usize) {
        self.workers = Workers { asr: n, absa: n, vlm: n };
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_retries: self.retry.max_retries,
            base_delay: Duration::from_secs_f64(self.retry.base_s),
        }
    }

    pub fn sheet_path(&self) -> PathBuf {
        self.eval
            .sheet
            .clone()
            .unwrap_or_else(|| self.store_root.join("eval").join("sheet.csv"))
    }
}
