//! Experiment configuration: JSON file, then `--set key=value`, then flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::classify::{Classifier, StabilityConfig};
use crate::error::{Error, Result};
use crate::mc::McConfig;
use crate::measures::io::load_dataset_dir;
use crate::measures::{MeasureDataset, SyntheticSpec};
use crate::nystrom::NystromOptions;

/// Size used for synthetic datasets when neither the spec nor `n` gives one.
pub const DEFAULT_SYNTHETIC_N: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mc,
    Nystrom,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Top-level seed; every random stage derives its own from it.
    pub seed: u64,
    /// Pool size for transport solves. Never written to manifests.
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
    pub dataset: Option<PathBuf>,
    pub synthetic: Option<String>,
    pub n: Option<usize>,
    /// Seed for synthetic dataset generation, kept apart from `seed` so the
    /// same data can be re-sampled under different top-level seeds.
    pub data_seed: u64,
    /// Pixel threshold for image datasets.
    pub threshold: f64,
    pub algorithm: Option<Algorithm>,
    pub rate: Option<f64>,
    pub columns: Option<usize>,
    pub fractions: Option<Vec<f64>>,
    pub trials: usize,
    pub energy: f64,
    pub dimension: Option<usize>,
    pub test_fraction: f64,
    pub classifiers: Vec<Classifier>,
    pub mc: McConfig,
    pub nystrom: NystromOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = StabilityConfig::default();
        Self {
            seed: 0,
            workers: None,
            dataset: None,
            synthetic: None,
            n: None,
            data_seed: 0,
            threshold: 0.0,
            algorithm: None,
            rate: None,
            columns: None,
            fractions: None,
            trials: 20,
            energy: s.energy,
            dimension: None,
            test_fraction: s.test_fraction,
            classifiers: s.classifiers,
            mc: McConfig::default(),
            nystrom: NystromOptions::default(),
        }
    }
}

pub const DEFAULT_FRACTIONS: [f64; 6] = [0.05, 0.1, 0.2, 0.3, 0.5, 1.0];

impl ExperimentConfig {
    /// Layers `file`, then each `key=value` override, then `flags` over the defaults.
    pub fn resolve(
        file: Option<&Path>,
        sets: &[String],
        flags: Map<String, Value>,
    ) -> Result<Self> {
        let mut root = match file {
            Some(p) => match serde_json::from_str::<Value>(&std::fs::read_to_string(p)?)? {
                Value::Object(m) => m,
                _ => return Err(Error::Config("config file must hold a JSON object".into())),
            },
            None => Map::new(),
        };
        for s in sets {
            let (key, raw) = s
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{s}`")))?;
            let value =
                serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut root, key.trim(), value)?;
        }
        for (k, v) in flags {
            root.insert(k, v);
        }
        serde_json::from_value(Value::Object(root)).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn workers(&self) -> usize {
        self.workers
            .or_else(|| std::env::var("WASSMATRIX_WORKERS").ok()?.parse().ok())
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }

    pub fn stability(&self) -> StabilityConfig {
        StabilityConfig {
            energy: self.energy,
            dimension: self.dimension,
            test_fraction: self.test_fraction,
            classifiers: self.classifiers.clone(),
            nystrom: self.nystrom.clone(),
            seed: self.seed,
        }
    }

    pub fn has_source(&self) -> bool {
        self.dataset.is_some() || self.synthetic.is_some()
    }

    /// Loads the configured dataset; without any source, random translations of size `n`.
    pub fn load_dataset(&self) -> Result<MeasureDataset> {
        match (&self.dataset, &self.synthetic) {
            (Some(_), Some(_)) => Err(Error::Config(
                "give either a dataset or a synthetic spec".into(),
            )),
            (Some(dir), None) => load_dataset_dir(dir, self.threshold),
            (None, spec) => {
                let spec = spec.as_deref().unwrap_or("translations");
                SyntheticSpec::parse(spec, self.n.unwrap_or(DEFAULT_SYNTHETIC_N))?
                    .generate(self.data_seed)
            }
        }
    }

    pub fn check_sampling(&self) -> Result<()> {
        if self.rate.is_some() && self.columns.is_some() {
            return Err(Error::Config(
                "rate and columns are mutually exclusive".into(),
            ));
        }
        if self.fractions.is_some() {
            return Err(Error::Config("fractions only apply to classify".into()));
        }
        Ok(())
    }
}

fn set_path(root: &mut Map<String, Value>, key: &str, value: Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty());
    let last = last.ok_or_else(|| Error::Config(format!("empty key in `{key}`")))?;
    let mut node = root;
    for p in parts {
        let entry = node
            .entry(p.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
        node = entry
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("`{p}` is not a table in `{key}`")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}
