//! Run configuration (TOML).

use crate::algorithm::{AlgorithmConfig, GammaConfig, RoundsConfig};
use crate::compressor::CompressorSpec;
use crate::error::{Error, Result};
use crate::problem::{
    gen_least_squares, gen_logistic, gen_zero_chain, Assignment, OracleSpec, Problem,
};
use crate::wire::CostModel;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemConfig {
    /// One of `least_squares`, `logistic`, `zero_chain`.
    pub name: String,
    /// Data-generation seed, independent of the per-trial seeds.
    pub seed: u64,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    /// Chain scale (zero_chain only).
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub assignment: Option<Assignment>,
    /// Target smoothness (zero_chain only).
    #[serde(default)]
    pub smoothness: Option<f64>,
}

impl ProblemConfig {
    pub fn build(&self) -> Result<Problem> {
        match self.name.as_str() {
            "least_squares" => Ok(Problem::new(gen_least_squares(
                self.seed,
                self.d.unwrap_or(30),
                self.n.unwrap_or(32),
                self.m.unwrap_or(1000),
            ))),
            "logistic" => Ok(Problem::new(gen_logistic(
                self.seed,
                self.d.unwrap_or(30),
                self.n.unwrap_or(32),
                self.m.unwrap_or(1000),
            ))),
            "zero_chain" => Ok(Problem::new(gen_zero_chain(
                self.lambda.unwrap_or(1.0),
                self.d.unwrap_or(30),
                self.assignment.unwrap_or_default(),
                self.n.unwrap_or(4),
                self.smoothness
                    .unwrap_or(crate::problem::zero_chain::L_0),
            )?)),
            other => Err(Error::config(
                "problem.name",
                format!("unknown problem `{other}`"),
            )),
        }
    }

    /// Oracle used when the config does not name one.
    pub fn default_oracle(&self) -> OracleSpec {
        match self.name.as_str() {
            "zero_chain" => OracleSpec::Exact,
            _ => OracleSpec::Minibatch { batch: 1 },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompressorsConfig {
    pub worker: CompressorSpec,
    #[serde(default = "identity_spec")]
    pub server: CompressorSpec,
}

fn identity_spec() -> CompressorSpec {
    CompressorSpec::Identity
}

impl Default for CompressorsConfig {
    fn default() -> Self {
        CompressorsConfig {
            worker: CompressorSpec::Identity,
            server: CompressorSpec::Identity,
        }
    }
}

/// One algorithm to run, with optional per-algorithm compressor override.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgorithmEntry {
    pub name: String,
    #[serde(default)]
    pub gamma: GammaConfig,
    #[serde(default, rename = "R")]
    pub rounds: RoundsConfig,
    #[serde(default)]
    pub compressors: Option<CompressorsConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BudgetConfig {
    /// Gradient queries == communication rounds per worker.
    #[serde(rename = "T")]
    pub t: u64,
    #[serde(default = "one")]
    pub n_trials: u64,
    #[serde(default)]
    pub base_seed: u64,
    /// Metric logging stride in communication rounds.
    #[serde(default = "one")]
    pub metric_every: u64,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub oracle: Option<OracleSpec>,
    /// Single algorithm...
    #[serde(default)]
    pub algorithm: Option<AlgorithmEntry>,
    /// ...or several compared on the same problem and budget.
    #[serde(default)]
    pub algorithms: Vec<AlgorithmEntry>,
    #[serde(default)]
    pub compressors: CompressorsConfig,
    pub budget: BudgetConfig,
    #[serde(default)]
    pub cost_model: CostModel,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text)
            .map_err(|e| Error::config("<config>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithm.is_none() && self.algorithms.is_empty() {
            return Err(Error::config(
                "algorithm",
                "provide [algorithm] or at least one [[algorithms]] entry",
            ));
        }
        if self.algorithm.is_some() && !self.algorithms.is_empty() {
            return Err(Error::config(
                "algorithm",
                "use either [algorithm] or [[algorithms]], not both",
            ));
        }
        if self.budget.t == 0 {
            return Err(Error::config("budget.T", "must be positive"));
        }
        if self.budget.n_trials == 0 {
            return Err(Error::config("budget.n_trials", "must be positive"));
        }
        if self.budget.metric_every == 0 {
            return Err(Error::config("budget.metric_every", "must be positive"));
        }
        for entry in self.entries() {
            crate::algorithm::algorithm_by_name(&entry.name)?;
        }
        Ok(())
    }

    pub fn entries(&self) -> Vec<&AlgorithmEntry> {
        match &self.algorithm {
            Some(single) => vec![single],
            None => self.algorithms.iter().collect(),
        }
    }

    /// Resolves one entry into a full runtime algorithm config.
    pub fn algorithm_config(&self, entry: &AlgorithmEntry) -> AlgorithmConfig {
        let comps = entry.compressors.as_ref().unwrap_or(&self.compressors);
        AlgorithmConfig {
            name: entry.name.clone(),
            gamma: entry.gamma,
            rounds: entry.rounds,
            worker_compressor: comps.worker.clone(),
            server_compressor: comps.server.clone(),
            budget_t: self.budget.t,
        }
    }

    pub fn oracle(&self) -> OracleSpec {
        self.oracle.unwrap_or_else(|| self.problem.default_oracle())
    }
}
