//! Run configuration: one TOML file with a section per concern, plus flag
//! overrides applied on top.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fugnn_core::experiment::{EigenConfig, EigenMethod};
use fugnn_core::graph::{OperatorMode, SbmConfig};
use fugnn_core::model::ModelConfig;
use fugnn_core::trainer::TrainConfig;

use crate::error::CliError;

/// Where the graph comes from. Without `edges` and `nodes` the synthetic
/// generator in `sbm` is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub edges: Option<PathBuf>,
    pub nodes: Option<PathBuf>,
    /// JSON masks; when absent every seed draws its own splits.
    pub splits: Option<PathBuf>,
    pub sensitive: String,
    pub label: String,
    pub sbm: SbmConfig,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            edges: None,
            nodes: None,
            splits: None,
            sensitive: "sensitive".into(),
            label: "label".into(),
            sbm: SbmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigSection {
    pub k: usize,
    pub method: EigenMethod,
    pub operator: OperatorMode,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub dense_limit: usize,
}

impl Default for EigSection {
    fn default() -> Self {
        let e = EigenConfig::default();
        Self {
            k: 8,
            method: EigenMethod::Fes,
            operator: OperatorMode::SymNormalized,
            tol: e.tol,
            max_iter: e.max_iter,
            seed: e.seed,
            dense_limit: e.dense_limit,
        }
    }
}

impl EigSection {
    pub fn solver(&self) -> EigenConfig {
        EigenConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
            dense_limit: self.dense_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub patience: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Also train the propagation baseline on the same inputs.
    pub baseline: bool,
    pub baseline_steps: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            seeds: vec![0, 1, 2, 3, 4],
            epochs: t.epochs,
            lr: t.lr,
            weight_decay: t.weight_decay,
            patience: t.patience,
            beta1: t.beta1,
            beta2: t.beta2,
            adam_eps: t.adam_eps,
            baseline: true,
            baseline_steps: 10,
        }
    }
}

impl TrainSection {
    pub fn trainer(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            lr: self.lr,
            weight_decay: self.weight_decay,
            seed: self.seeds.first().copied().unwrap_or(0),
            beta1: self.beta1,
            beta2: self.beta2,
            adam_eps: self.adam_eps,
            patience: self.patience,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeSection {
    pub n: usize,
    pub gap_min: f64,
    pub l_max: usize,
    /// Multiplicity of the top eigenvalue in the repeated-eigenvalue check.
    pub j: usize,
    pub decay_l_min: usize,
    pub decay_l_max: usize,
    pub seed: u64,
}

impl Default for AnalyzeSection {
    fn default() -> Self {
        Self {
            n: 60,
            gap_min: 1.5,
            l_max: 200,
            j: 2,
            decay_l_min: 0,
            decay_l_max: 30,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub ks: Vec<usize>,
    /// Append `K = n` to `ks`.
    pub include_n: bool,
    /// Time both eigensolvers at `eig.k`.
    pub runtime: bool,
}

impl Default for BenchSection {
    fn default() -> Self {
        let mut ks: Vec<usize> = (1..=10).collect();
        ks.push(100);
        Self {
            ks,
            include_n: true,
            runtime: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Parent of every run directory.
    pub output_dir: Option<PathBuf>,
    pub data: DataSection,
    pub eig: EigSection,
    pub model: ModelConfig,
    pub train: TrainSection,
    pub analyze: AnalyzeSection,
    pub bench: BenchSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("runs"))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.eig.k == 0 {
            return bad("eig.k must be at least 1".into());
        }
        if self.train.seeds.is_empty() {
            return bad("train.seeds must not be empty".into());
        }
        if self.bench.ks.contains(&0) {
            return bad("bench.ks entries must be at least 1".into());
        }
        if self.data.edges.is_some() != self.data.nodes.is_some() {
            return bad("data.edges and data.nodes must be given together".into());
        }
        if self.data.edges.is_none() {
            self.data.sbm.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        self.train.trainer().validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    /// Hex SHA-256 of the command name and the serialized configuration.
    pub fn content_hash(&self, command: &str) -> String {
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update(b"\n");
        h.update(self.to_toml().as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `<output_dir>/<command>-<first 16 hex digits of the hash>`.
    pub fn run_dir(&self, command: &str) -> PathBuf {
        let hash = self.content_hash(command);
        self.output_dir().join(format!("{command}-{}", &hash[..16]))
    }
}

fn parse_operator(s: &str) -> Result<OperatorMode, String> {
    s.parse()
}

fn parse_method(s: &str) -> Result<EigenMethod, String> {
    s.parse()
}

/// Flags shared by every command; each overrides one configuration key.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML configuration file; defaults apply without one.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Edge list of an on-disk dataset (with --nodes).
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Node table of an on-disk dataset (with --edges).
    #[arg(long)]
    pub nodes: Option<PathBuf>,
    /// JSON split masks for an on-disk dataset.
    #[arg(long)]
    pub splits: Option<PathBuf>,
    /// Node count of the synthetic graph.
    #[arg(long)]
    pub n: Option<usize>,
    /// Seed of the synthetic graph.
    #[arg(long)]
    pub graph_seed: Option<u64>,
    /// Number of retained eigenpairs.
    #[arg(short)]
    pub k: Option<usize>,
    /// FES (truncated Lanczos) or WE (whole dense decomposition).
    #[arg(long, value_parser = parse_method)]
    pub method: Option<EigenMethod>,
    /// sym-normalized or raw-adjacency.
    #[arg(long, value_parser = parse_operator)]
    pub operator: Option<OperatorMode>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub d_e: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Comma-separated training seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Comma-separated K values for the sweep.
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
}

impl Overrides {
    /// Loads the configuration file (if any) and applies every given flag.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($flag:expr => $($field:tt)+) => {
                if let Some(v) = $flag.clone() {
                    cfg.$($field)+ = v;
                }
            };
        }
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = Some(dir.clone());
        }
        if let Some(p) = &self.edges {
            cfg.data.edges = Some(p.clone());
        }
        if let Some(p) = &self.nodes {
            cfg.data.nodes = Some(p.clone());
        }
        if let Some(p) = &self.splits {
            cfg.data.splits = Some(p.clone());
        }
        set!(self.n => data.sbm.n);
        set!(self.graph_seed => data.sbm.seed);
        set!(self.k => eig.k);
        set!(self.method => eig.method);
        set!(self.operator => eig.operator);
        set!(self.layers => model.layers);
        set!(self.d_e => model.d_e);
        set!(self.heads => model.heads);
        set!(self.epochs => train.epochs);
        set!(self.lr => train.lr);
        set!(self.seeds => train.seeds);
        set!(self.ks => bench.ks);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[eig]\nkk = 3\n").is_err());
        assert!(RunConfig::from_toml("colour = 1\n").is_err());
    }

    #[test]
    fn zero_k_is_rejected() {
        let cfg = RunConfig::from_toml("[eig]\nk = 0\n").unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn hash_depends_on_command_and_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.eig.k = 9;
        assert_ne!(a.content_hash("eig"), b.content_hash("eig"));
        assert_ne!(a.content_hash("eig"), a.content_hash("train"));
        assert_eq!(a.content_hash("eig"), a.clone().content_hash("eig"));
    }

    #[test]
    fn flags_override_file_values() {
        let o = Overrides {
            k: Some(3),
            seeds: Some(vec![7]),
            ..Default::default()
        };
        let cfg = o.resolve().unwrap();
        assert_eq!(cfg.eig.k, 3);
        assert_eq!(cfg.train.seeds, vec![7]);
    }
}
