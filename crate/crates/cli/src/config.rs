use std::fs;
use std::path::{Path, PathBuf};

use corrtrack::features::{BlockSpec, FeatureProviderConfig};
use corrtrack::tracker::TrackerConfig;
use corrtrack::{Error, Result};
use serde::Deserialize;

use crate::{FeatureKind, TrackArgs};

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn load_tracker_config(path: Option<&Path>) -> Result<TrackerConfig> {
    match path {
        Some(p) => read_toml(p),
        None => Ok(TrackerConfig::default()),
    }
}

/// Tracker configuration for `track`: file values overridden by flags.
pub fn track_config(args: &TrackArgs, file: Option<&Path>) -> Result<TrackerConfig> {
    let mut cfg = load_tracker_config(file)?;
    let (blocks, semantic) = match &cfg.features {
        FeatureProviderConfig::Fmap {
            blocks, semantic_block, ..
        } => (blocks.clone(), semantic_block.clone()),
        FeatureProviderConfig::Hog { .. } => (Vec::new(), None),
    };
    let kind = args.features.unwrap_or(match cfg.features {
        FeatureProviderConfig::Hog { .. } => FeatureKind::Hog,
        FeatureProviderConfig::Fmap { .. } => FeatureKind::Fmap,
    });
    cfg.features = match kind {
        FeatureKind::Hog => {
            let cell = match (&cfg.features, args.hog_cell) {
                (_, Some(c)) => c,
                (FeatureProviderConfig::Hog { cell }, None) => *cell,
                _ => 4,
            };
            FeatureProviderConfig::Hog { cell }
        }
        FeatureKind::Fmap => {
            let dir = match (&cfg.features, &args.fmap_dir) {
                (_, Some(d)) => d.clone(),
                (FeatureProviderConfig::Fmap { dir, .. }, None) => dir.clone(),
                _ => return Err(Error::Config("--features fmap requires --fmap-dir".into())),
            };
            FeatureProviderConfig::Fmap {
                dir,
                blocks,
                semantic_block: args.semantic_block.clone().or(semantic),
            }
        }
    };
    if let Some(lr) = args.learning_rate {
        cfg.learning_rate = lr;
    }
    if let Some(n) = args.cg_iterations {
        cfg.cg_iterations = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProviderEntry {
    Hog {
        name: String,
        #[serde(default)]
        cell: Option<usize>,
    },
    /// `dir` holds one subdirectory of FMAP files per sequence.
    Fmap {
        name: String,
        dir: PathBuf,
        #[serde(default)]
        blocks: Vec<BlockSpec>,
        #[serde(default)]
        semantic_block: Option<String>,
    },
    GtEcho {
        name: String,
    },
    ConstantBox {
        name: String,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankManifest {
    /// Shared tracker settings for the hog and fmap providers.
    #[serde(default)]
    pub tracker: Option<TrackerConfig>,
    #[serde(default, rename = "provider")]
    pub providers: Vec<ProviderEntry>,
}

pub fn load_rank_manifest(path: &Path, base_config: Option<&Path>) -> Result<(RankManifest, TrackerConfig)> {
    let manifest: RankManifest = read_toml(path)?;
    if manifest.providers.is_empty() {
        return Err(Error::Config(format!("{} lists no providers", path.display())));
    }
    let mut names: Vec<&str> = manifest.providers.iter().map(ProviderEntry::name).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Config(format!("provider name {:?} appears twice", w[0])));
    }
    let base = match &manifest.tracker {
        Some(t) => t.clone(),
        None => load_tracker_config(base_config)?,
    };
    Ok((manifest, base))
}

impl ProviderEntry {
    pub fn name(&self) -> &str {
        match self {
            ProviderEntry::Hog { name, .. }
            | ProviderEntry::Fmap { name, .. }
            | ProviderEntry::GtEcho { name }
            | ProviderEntry::ConstantBox { name } => name,
        }
    }

    /// Harness provider; relative directories resolve against `root`.
    pub fn resolve(&self, base: &TrackerConfig, root: &Path) -> Result<corrtrack::bench::Provider> {
        use corrtrack::bench::Provider;
        let name = self.name().to_string();
        let tracker = |features: FeatureProviderConfig| -> Result<Provider> {
            let config = TrackerConfig {
                features,
                ..base.clone()
            };
            config.validate()?;
            Ok(Provider::Tracker {
                name: name.clone(),
                config,
            })
        };
        match self {
            ProviderEntry::Hog { cell, .. } => tracker(FeatureProviderConfig::Hog {
                cell: cell.unwrap_or(4),
            }),
            ProviderEntry::Fmap {
                dir,
                blocks,
                semantic_block,
                ..
            } => tracker(FeatureProviderConfig::Fmap {
                dir: root.join(dir),
                blocks: blocks.clone(),
                semantic_block: semantic_block.clone(),
            }),
            ProviderEntry::GtEcho { .. } => Ok(Provider::GtEcho { name }),
            ProviderEntry::ConstantBox { .. } => Ok(Provider::ConstantBox { name }),
        }
    }
}
