use momf_core::acquisition::{AcquisitionKind, CostModel};
use momf_core::design::DesignMethod;
use momf_core::pareto::Direction;
use serde::{Deserialize, Serialize};

use super::CampaignError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Benchmark,
    Dataset,
}

/// Missing-value handling for dataset-mode tables.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Imputation {
    #[default]
    DropRows,
    Mean,
    Median,
    Constant(f64),
}

fn one() -> usize {
    1
}

fn unit_beta() -> f64 {
    1.0
}

fn default_mc() -> usize {
    512
}

/// One campaign, as written in a config file or an API body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub mode: Mode,
    /// Registered benchmark name (benchmark mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<String>,
    /// Input dimension for benchmarks defined in any dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Source table (dataset mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    /// Input columns X (dataset mode).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<String>,
    /// Objective columns Y (dataset mode).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objectives: Vec<String>,
    /// One per objective; defaults to maximize in dataset mode. Benchmarks
    /// carry their own.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub directions: Vec<Direction>,
    /// `[[lo, hi], ...]` per input. Benchmarks default to their domain and
    /// datasets to the observed range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<CostModel>,
    pub iterations: usize,
    pub init_n: usize,
    #[serde(default)]
    pub init_method: DesignMethod,
    /// Defaults to EI for one objective and EHVI (qEHVI when `q > 1`) otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acquisition: Option<AcquisitionKind>,
    #[serde(default = "one")]
    pub q: usize,
    #[serde(default = "unit_beta")]
    pub beta: f64,
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    #[serde(default)]
    pub imputation: Imputation,
    /// Hypervolume reference point in user directions; derived when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_point: Option<Vec<f64>>,
    /// Fill the `wall_ms` column. Off by default so exports are reproducible.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub record_wall_time: bool,
}

impl CampaignConfig {
    pub fn benchmark(name: &str, iterations: usize, init_n: usize, seed: u64) -> Self {
        CampaignConfig {
            mode: Mode::Benchmark,
            benchmark: Some(name.to_string()),
            dim: None,
            table: None,
            inputs: Vec::new(),
            objectives: Vec::new(),
            directions: Vec::new(),
            bounds: None,
            fidelity: None,
            iterations,
            init_n,
            init_method: DesignMethod::Lhs,
            acquisition: None,
            q: 1,
            beta: 1.0,
            mc_samples: 512,
            seed,
            budget: None,
            imputation: Imputation::DropRows,
            reference_point: None,
            record_wall_time: false,
        }
    }

    pub fn dataset(table: &str, inputs: &[&str], objectives: &[&str], iterations: usize, init_n: usize) -> Self {
        CampaignConfig {
            mode: Mode::Dataset,
            benchmark: None,
            table: Some(table.to_string()),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            objectives: objectives.iter().map(|s| s.to_string()).collect(),
            ..CampaignConfig::benchmark("", iterations, init_n, 0)
        }
    }

    /// Parses JSON text, reporting the path of the first offending field.
    pub fn from_json(text: &str) -> Result<Self, CampaignError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CampaignError::Config(format!("{path}: {}", e.inner()))
        })
    }

    /// Checks everything that does not need the benchmark registry or a store.
    pub fn check(&self) -> Result<(), CampaignError> {
        let bad = |m: &str| Err(CampaignError::Config(m.to_string()));
        if self.iterations == 0 {
            return bad("iterations must be positive");
        }
        if self.init_n < 2 {
            return bad("init_n must be at least 2");
        }
        if self.q == 0 {
            return bad("q must be at least 1");
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return bad("beta must be finite and non-negative");
        }
        if self.mc_samples < 128 {
            return bad("mc_samples must be at least 128");
        }
        if let Some(b) = self.budget {
            if !(b.is_finite() && b > 0.0) {
                return bad("budget must be a positive number");
            }
        }
        if let Some(f) = &self.fidelity {
            f.validate().map_err(|e| CampaignError::Config(e.to_string()))?;
        }
        if let Some(b) = &self.bounds {
            if b.iter().any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
                return bad("every bound must be a finite interval with lo < hi");
            }
        }
        if let Imputation::Constant(v) = self.imputation {
            if !v.is_finite() {
                return bad("the imputation constant must be finite");
            }
        }
        match self.mode {
            Mode::Benchmark => {
                if self.benchmark.is_none() {
                    return bad("benchmark mode needs a benchmark name");
                }
                if self.table.is_some() || !self.inputs.is_empty() || !self.objectives.is_empty() {
                    return bad("table, inputs and objectives belong to dataset mode");
                }
            }
            Mode::Dataset => {
                if self.benchmark.is_some() {
                    return bad("dataset mode does not take a benchmark");
                }
                if self.table.is_none() || self.inputs.is_empty() || self.objectives.is_empty() {
                    return bad("dataset mode needs table, inputs and objectives");
                }
                if !self.directions.is_empty() && self.directions.len() != self.objectives.len() {
                    return bad("directions must have one entry per objective");
                }
                if self.bounds.as_ref().is_some_and(|b| b.len() != self.inputs.len()) {
                    return bad("bounds must have one entry per input");
                }
            }
        }
        Ok(())
    }
}
