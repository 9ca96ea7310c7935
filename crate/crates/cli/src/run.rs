//! Run configuration, output directory resolution, manifests and exit codes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use srl_transfer::baselines::FactorizationConfig;
use srl_transfer::corpus::{AugmentConfig, FilterConfig, IdentifyConfig, SyntheticConfig};
use srl_transfer::evaluation::{BcConfig, SupervisedConfig};
use srl_transfer::trainer::{Ablation, TrainingConfig};
use thiserror::Error;

use crate::args::TrainingFlags;

pub const OUT_ENV: &str = "SRLT_OUT";
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] srl_transfer::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Data(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use srl_transfer::Error as E;
        match self {
            CliError::Io { .. } | CliError::Core(E::Io(_)) => 3,
            CliError::Config(_) | CliError::Core(E::Config(_)) => 4,
            CliError::Core(E::Diverged(_) | E::NonFinite(_)) => 5,
            CliError::Data(_) | CliError::Core(_) => 6,
        }
    }
}

pub fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(srl_transfer::Error::from)?;
    text.push('\n');
    write_text(path, &text)
}

/// Every tunable of every subcommand; absent sections keep their defaults.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub synthetic: SyntheticConfig,
    pub training: TrainingConfig,
    pub filter: FilterConfig,
    pub identify: IdentifyConfig,
    pub augment: AugmentConfig,
    pub bc: BcConfig,
    pub factorization: FactorizationConfig,
    pub evaluation: SupervisedConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, seed: Option<u64>) -> CliResult<Self> {
        let mut cfg = match path {
            Some(p) => toml::from_str(&read_text(p)?).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
            None => RunConfig::default(),
        };
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.training.seed = cfg.seed;
        cfg.factorization.seed = cfg.seed;
        Ok(cfg)
    }

    pub fn apply_training_flags(&mut self, flags: &TrainingFlags) -> CliResult<()> {
        for &a in &flags.ablate {
            self.training = self.training.clone().ablate(Ablation::from(a));
        }
        if let Some(a) = flags.alpha {
            self.training.objective.alpha = a;
        }
        if let Some(t) = flags.temperature {
            self.training.objective.temperature = t;
        }
        self.training.validate()?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        hex(&serde_json::to_vec(self).expect("run config serializes to JSON"))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> CliResult<String> {
    Ok(hex(&fs::read(path).map_err(io_err(path))?))
}

pub fn resolve_out_dir(explicit: Option<&Path>, command: &str) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let root = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
            root.join(command)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Versions {
    pub srlt: String,
    pub srl_transfer: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub arguments: Vec<String>,
    pub seed: u64,
    pub config_hash: String,
    pub config: RunConfig,
    pub versions: Versions,
    /// Input path -> SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Output path relative to the run directory -> SHA-256.
    pub outputs: BTreeMap<String, String>,
}

/// Tracks inputs and outputs of one subcommand invocation.
pub struct Run {
    pub dir: PathBuf,
    pub config: RunConfig,
    command: String,
    arguments: Vec<String>,
    inputs: BTreeMap<String, String>,
    outputs: Vec<PathBuf>,
}

impl Run {
    pub fn new(dir: PathBuf, config: RunConfig, command: &str, arguments: Vec<String>) -> CliResult<Self> {
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Run { dir, config, command: command.to_string(), arguments, inputs: BTreeMap::new(), outputs: Vec::new() })
    }

    pub fn input(&mut self, path: &Path) -> CliResult<PathBuf> {
        self.inputs.insert(path.display().to_string(), file_digest(path)?);
        Ok(path.to_path_buf())
    }

    /// Path of an output file, recorded for the manifest.
    pub fn output(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.outputs.push(PathBuf::from(name));
        p
    }

    /// Records every regular file below `name`, which the caller has already written.
    pub fn output_tree(&mut self, name: &str) -> CliResult<()> {
        let mut stack = vec![PathBuf::from(name)];
        while let Some(rel) = stack.pop() {
            let abs = self.dir.join(&rel);
            if abs.is_dir() {
                let mut entries: Vec<_> = fs::read_dir(&abs)
                    .map_err(io_err(&abs))?
                    .map(|e| e.map(|e| rel.join(e.file_name())))
                    .collect::<Result<_, _>>()
                    .map_err(io_err(&abs))?;
                entries.sort();
                stack.extend(entries);
            } else if abs.is_file() {
                self.outputs.push(rel);
            }
        }
        Ok(())
    }

    pub fn finish(self) -> CliResult<Manifest> {
        let mut outputs = BTreeMap::new();
        for rel in self.outputs.iter().filter(|r| self.dir.join(r).is_file()) {
            outputs.insert(rel.display().to_string(), file_digest(&self.dir.join(rel))?);
        }
        let manifest = Manifest {
            command: self.command,
            arguments: self.arguments,
            seed: self.config.seed,
            config_hash: self.config.digest(),
            config: self.config,
            versions: Versions {
                srlt: env!("CARGO_PKG_VERSION").to_string(),
                srl_transfer: srl_transfer::VERSION.to_string(),
            },
            inputs: self.inputs,
            outputs,
        };
        write_json(&self.dir.join(MANIFEST), &manifest)?;
        Ok(manifest)
    }
}
