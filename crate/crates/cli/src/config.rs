//! Run configuration: one TOML file names every artifact and threshold.
//!
//! ```toml
//! [paths]
//! corpus = "corpus.jsonl"
//! dictionary = "dict.txt"
//! whitelist = "whitelist.txt"
//! lexicon = "thematic.txt"
//! ne_counts = "ne_counts.tsv"
//! out_dir = "out"
//!
//! [pmi]
//! alpha = 1.0
//! include_tags = false
//!
//! [generate]
//! enable_infobox = true
//!
//! [verify]
//! tau_j = 0.01
//! theta = 0.9
//!
//! [eval]
//! seed = 42
//! ```
//!
//! Relative paths resolve against the config file's directory. Validation
//! checks that every artifact an enabled stage needs actually exists.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use taxoforge_core::verification::VerifyConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    pub dictionary: PathBuf,
    pub whitelist: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub ne_counts: Option<PathBuf>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PmiSection {
    pub alpha: f64,
    /// Count tag strings as additional compounds in the PMI corpus.
    pub include_tags: bool,
}

impl Default for PmiSection {
    fn default() -> Self {
        PmiSection {
            alpha: taxoforge_core::pmi::DEFAULT_ALPHA,
            include_tags: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSection {
    pub enable_bracket: bool,
    pub enable_abstract: bool,
    pub enable_infobox: bool,
    pub enable_tag: bool,
}

impl Default for GenerateSection {
    fn default() -> Self {
        GenerateSection {
            enable_bracket: true,
            enable_abstract: true,
            enable_infobox: true,
            enable_tag: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { seed: 42 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    #[serde(default)]
    pub pmi: PmiSection,
    #[serde(default)]
    pub generate: GenerateSection,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub eval: EvalSection,
    /// SHA-256 of the config file bytes; filled in by [`PipelineConfig::load`].
    #[serde(skip)]
    pub config_hash: String,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut config: PipelineConfig = toml::from_str(
            std::str::from_utf8(&bytes).context("config file is not UTF-8")?,
        )
        .with_context(|| format!("cannot parse config file {}", path.display()))?;
        config.config_hash = hex_digest(&bytes);
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        resolve(&mut self.paths.corpus);
        resolve(&mut self.paths.dictionary);
        resolve(&mut self.paths.out_dir);
        for optional in [
            &mut self.paths.whitelist,
            &mut self.paths.lexicon,
            &mut self.paths.ne_counts,
        ]
        .into_iter()
        .flatten()
        {
            resolve(optional);
        }
    }

    /// Every enabled stage must find its artifacts, and thresholds must be
    /// in range.
    pub fn validate(&self) -> Result<()> {
        self.verify.validate()?;
        if !(self.pmi.alpha > 0.0) {
            bail!("pmi.alpha must be positive, got {}", self.pmi.alpha);
        }
        let must_exist = |what: &str, path: &Path| -> Result<()> {
            if !path.exists() {
                bail!("{what} file not found: {}", path.display());
            }
            Ok(())
        };
        must_exist("corpus", &self.paths.corpus)?;
        must_exist("dictionary", &self.paths.dictionary)?;
        let require = |what: &str, path: &Option<PathBuf>, rule: &str| -> Result<()> {
            match path {
                Some(path) => must_exist(what, path),
                None => bail!("paths.{what} is required while {rule} is enabled"),
            }
        };
        if self.generate.enable_infobox {
            require("whitelist", &self.paths.whitelist, "generate.enable_infobox")?;
        }
        if self.verify.enable_thematic {
            require("lexicon", &self.paths.lexicon, "verify.enable_thematic")?;
        }
        if self.verify.enable_ne {
            require("ne_counts", &self.paths.ne_counts, "verify.enable_ne")?;
        }
        Ok(())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
