use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rmtl_core::{
    ConstrainedClass, EstimationSettings, HypothesisVector, SolverConfig, SyntheticFamily, TaskFamily, Theorem,
    MAX_ENUMERATED_TASKS,
};

use crate::CliError;

/// Either a synthetic Gaussian family or an explicit task list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilyConfig {
    Synthetic(SyntheticFamily),
    Explicit(TaskFamily),
}

impl FamilyConfig {
    pub fn build(&self) -> rmtl_core::Result<TaskFamily> {
        match self {
            FamilyConfig::Synthetic(s) => s.build(),
            FamilyConfig::Explicit(f) => {
                f.validate()?;
                Ok(f.clone())
            }
        }
    }
}

/// One threshold for every task, or one per task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum XiSpec {
    Uniform(f64),
    PerTask(Vec<f64>),
}

impl XiSpec {
    pub fn expand(&self, task_count: usize) -> Vec<f64> {
        match self {
            XiSpec::Uniform(x) => vec![*x; task_count],
            XiSpec::PerTask(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CandidateConfig {
    /// Total candidate budget, including the solver output and explicit members.
    pub count: usize,
    /// Add the solver output.
    pub include_solution: bool,
    /// Explicit members, each a list of per-task weight rows.
    pub explicit: Vec<Vec<Vec<f64>>>,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        CandidateConfig {
            count: 16,
            include_solution: true,
            explicit: Vec::new(),
        }
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_theorems() -> Vec<Theorem> {
    Theorem::ALL.to_vec()
}

fn default_verify_trials() -> usize {
    10_000
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("rmtl-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub family: FamilyConfig,
    pub class: ConstrainedClass,
    /// Sample sizes per task, strictly increasing.
    pub n_values: Vec<usize>,
    pub xi: Vec<XiSpec>,
    #[serde(default)]
    pub candidates: CandidateConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_theorems")]
    pub theorems: Vec<Theorem>,
    /// Monte-Carlo trials for the joint-probability checks.
    #[serde(default = "default_verify_trials")]
    pub verify_trials: usize,
    /// Also run the symmetrization check in every cell.
    #[serde(default)]
    pub symmetrization: bool,
    /// Sum groups over this many task clusters instead of all tasks.
    #[serde(default)]
    pub cluster_k: Option<usize>,
    #[serde(default)]
    pub estimation: EstimationSettings,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
}

fn invalid(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Config(format!("field `{field}`: {}", reason.into()))
}

impl ExperimentConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", origin.display())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        ExperimentConfig::parse(&text, path)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seeds = vec![seed];
        }
        if let Some(t) = o.trials {
            self.estimation.trials = t;
            self.verify_trials = t;
        }
    }

    /// Checks every sub-config and returns the built family.
    pub fn validate(&self) -> Result<TaskFamily, CliError> {
        let family = self.family.build().map_err(|e| CliError::Config(format!("family: {e}")))?;
        self.class.validate().map_err(|e| CliError::Config(format!("class: {e}")))?;
        self.estimation.validate().map_err(|e| CliError::Config(format!("estimation: {e}")))?;
        self.solver.validate().map_err(|e| CliError::Config(format!("solver: {e}")))?;
        let m = family.task_count();
        if self.n_values.is_empty() {
            return Err(invalid("n_values", "need at least one sample size"));
        }
        if self.n_values[0] == 0 || self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("n_values", "must be positive and strictly increasing"));
        }
        if self.xi.is_empty() {
            return Err(invalid("xi", "need at least one threshold"));
        }
        for (k, x) in self.xi.iter().enumerate() {
            let v = x.expand(m);
            if v.len() != m {
                return Err(invalid(&format!("xi[{k}]"), format!("need {m} per-task values, got {}", v.len())));
            }
            if v.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
                return Err(invalid(&format!("xi[{k}]"), "thresholds must be positive"));
            }
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "need at least one seed"));
        }
        if self.theorems.is_empty() {
            return Err(invalid("theorems", "enable at least one theorem"));
        }
        if self.verify_trials == 0 {
            return Err(invalid("verify_trials", "must be positive"));
        }
        let c = &self.candidates;
        if c.count == 0 || c.count < c.explicit.len() + c.include_solution as usize {
            return Err(invalid("candidates.count", "budget must cover the solver output and explicit members"));
        }
        for (k, rows) in c.explicit.iter().enumerate() {
            let field = format!("candidates.explicit[{k}]");
            let h = HypothesisVector::from_rows(rows.clone()).map_err(|e| invalid(&field, e.to_string()))?;
            if h.task_count() != m || h.dim() != family.input_dim {
                return Err(invalid(&field, format!("need {m} rows of length {}", family.input_dim)));
            }
            if !self.class.contains(&h) {
                return Err(invalid(&field, "lies outside the constrained class"));
            }
        }
        match self.cluster_k {
            Some(k) if k == 0 || k > m.min(MAX_ENUMERATED_TASKS) => {
                return Err(invalid("cluster_k", format!("need 1 <= k <= {}", m.min(MAX_ENUMERATED_TASKS))));
            }
            None if m > MAX_ENUMERATED_TASKS => {
                return Err(invalid("cluster_k", format!("{m} tasks exceed the group budget of {MAX_ENUMERATED_TASKS}; set cluster_k")));
            }
            _ => {}
        }
        Ok(family)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Output directory, under `root` when it is relative and a root is given.
    pub fn resolve_output(&self, root: Option<&Path>) -> PathBuf {
        match root {
            Some(r) if self.output_dir.is_relative() => r.join(&self.output_dir),
            _ => self.output_dir.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"
n_values = [20]
xi = [0.5]

[family]
kind = "synthetic"
task_count = 1
input_dim = 2
relatedness = 0.5
noise_std = 0.1
seed = 3

[class]
base_radius = 1.0
coupling = "norm-ball"
budget = 1.0
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = ExperimentConfig::parse(MINIMAL, Path::new("x.toml")).unwrap();
        let fam = cfg.validate().unwrap();
        assert_eq!(fam.task_count(), 1);
        assert_eq!(cfg.theorems.len(), 4);
        let back = ExperimentConfig::parse(&cfg.to_toml().unwrap(), Path::new("y.toml")).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn errors_name_the_field() {
        let bad = MINIMAL.replace("n_values = [20]", "n_values = [20, 10]");
        let cfg = ExperimentConfig::parse(&bad, Path::new("x.toml")).unwrap();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("n_values"), "{err}");
        let typo = MINIMAL.replace("xi = [0.5]", "xi = [0.5]\nsedes = [1]");
        let err = ExperimentConfig::parse(&typo, Path::new("x.toml")).unwrap_err().to_string();
        assert!(err.contains("sedes") && err.contains("line"), "{err}");
    }

    #[test]
    fn overrides_change_the_hash() {
        let mut cfg = ExperimentConfig::parse(MINIMAL, Path::new("x.toml")).unwrap();
        let h = cfg.hash();
        cfg.apply(&Overrides { seed: Some(9), trials: None });
        assert_eq!(cfg.seeds, vec![9]);
        assert_ne!(cfg.hash(), h);
        let root = Path::new("/tmp/root");
        assert_eq!(cfg.resolve_output(Some(root)), root.join("rmtl-out"));
    }
}
