use std::path::PathBuf;

use anyhow::Result;
use csembed::classifier::ClassifierConfig;
use csembed::config::KeyValues;
use csembed::embeddings::CbowConfig;

/// Flags shared by every subcommand.
#[derive(clap::Args, Debug, Clone, Default)]
pub struct Global {
    /// Random seed for every seeded stage (overrides the config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (overrides the config file).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Flat `key = value` file with stage settings.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

fn all_keys() -> Vec<&'static str> {
    let mut keys: Vec<&str> = CbowConfig::KEYS.iter().chain(ClassifierConfig::KEYS).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    keys
}

impl Global {
    /// Config-file entries for `keys`, with `flags` and the global flags
    /// applied on top. Keys unknown to every stage are rejected.
    pub fn resolve(&self, keys: &[&str], flags: &KeyValues) -> Result<KeyValues> {
        let file = match &self.config {
            Some(path) => KeyValues::load(path)?,
            None => KeyValues::default(),
        };
        file.reject_unknown(&all_keys())?;
        let mut kv = file.subset(keys).merged(flags);
        if let Some(seed) = self.seed {
            kv.set("seed", seed);
        }
        if let (Some(w), true) = (self.workers, keys.contains(&"workers")) {
            kv.set("workers", w);
        }
        Ok(kv)
    }
}

/// Prints a resolved configuration to standard error.
pub fn echo(stage: &str, kv: &KeyValues) {
    eprintln!("[{stage}] resolved configuration:");
    for (k, v) in kv.iter() {
        eprintln!("[{stage}]   {k} = {v}");
    }
}

/// Collects `Some` flag values into key-value form.
#[derive(Default)]
pub struct Flags(KeyValues);

impl Flags {
    pub fn opt<T: ToString>(mut self, key: &str, value: Option<T>) -> Self {
        if let Some(v) = value {
            self.0.set(key, v);
        }
        self
    }

    pub fn into_inner(self) -> KeyValues {
        self.0
    }
}
