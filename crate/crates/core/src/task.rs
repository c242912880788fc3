//! Task families, multi-task datasets and risk functionals.
//!
//! A [`TaskFamily`] is a generative description of `M` related regression
//! tasks sharing an input dimension `d`. Each task draws inputs either from
//! an isotropic Gaussian or from a finite support, labels them with its own
//! linear rule `y = x·w* + σε`, and may share its draws with an earlier
//! task (a *linked* task sees exactly the same `(x, ε)` stream).
//!
//! Task indices are zero-based throughout the crate.

use std::io::Write;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, streams, Rng};

/// Bounded loss. Only the clipped squared loss is provided.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    #[serde(default)]
    pub kind: LossKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    /// `clamp((prediction - label)^2, lower, upper)`.
    #[default]
    ClippedSquared,
}

impl Default for LossSpec {
    fn default() -> Self {
        LossSpec::unit()
    }
}

impl LossSpec {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        let loss = LossSpec {
            kind: LossKind::ClippedSquared,
            lower,
            upper,
        };
        loss.validate()?;
        Ok(loss)
    }

    /// Squared loss clipped to `[0, 1]`.
    pub fn unit() -> Self {
        LossSpec {
            kind: LossKind::ClippedSquared,
            lower: 0.0,
            upper: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(Error::config("loss", "range bounds must be finite with lower < upper"));
        }
        Ok(())
    }

    /// Width `b - a` of the loss range.
    pub fn range(&self) -> f64 {
        self.upper - self.lower
    }

    #[inline]
    pub fn value(&self, prediction: f64, label: f64) -> f64 {
        let r = prediction - label;
        (r * r).clamp(self.lower, self.upper)
    }

    /// Derivative with respect to the prediction; zero where the loss is clipped.
    #[inline]
    pub fn derivative(&self, prediction: f64, label: f64) -> f64 {
        let r = prediction - label;
        let sq = r * r;
        if sq > self.lower && sq < self.upper {
            2.0 * r
        } else {
            0.0
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Input distribution of one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TaskInput {
    /// `x ~ N(mean, scale^2 I)`.
    Gaussian { mean: Vec<f64>, scale: f64 },
    /// `x` drawn from a finite support with the given probabilities.
    Discrete {
        points: Vec<Vec<f64>>,
        probs: Vec<f64>,
    },
}

/// Where a task's `(x, ε)` draws come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskSource {
    Own(TaskInput),
    /// Reuse the draws of an earlier task, sample for sample.
    SharedWith(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub source: TaskSource,
    /// True labeling weights `w*`.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFamily {
    pub input_dim: usize,
    pub noise_std: f64,
    /// Relatedness knob the weights were generated with (informational for
    /// explicit families).
    #[serde(default)]
    pub relatedness: f64,
    pub tasks: Vec<TaskSpec>,
}

/// Parameters of a synthetic Gaussian family with a relatedness knob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticFamily {
    pub task_count: usize,
    pub input_dim: usize,
    /// `ρ` in `w*_m = ρ·w̄ + (1-ρ)·u_m`.
    pub relatedness: f64,
    pub noise_std: f64,
    #[serde(default = "default_weight_scale")]
    pub weight_scale: f64,
    #[serde(default)]
    pub mean_shift: f64,
    #[serde(default = "default_input_scale")]
    pub input_scale: f64,
    pub seed: u64,
}

fn default_weight_scale() -> f64 {
    0.5
}

fn default_input_scale() -> f64 {
    1.0
}

impl SyntheticFamily {
    pub fn build(&self) -> Result<TaskFamily> {
        if self.task_count == 0 {
            return Err(Error::config("task_count", "must be at least 1"));
        }
        if self.input_dim == 0 {
            return Err(Error::config("input_dim", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.relatedness) {
            return Err(Error::config("relatedness", "must lie in [0, 1]"));
        }
        let d = self.input_dim;
        let scale = self.weight_scale / (d as f64).sqrt();
        let mut wr = seed::rng(seed::derive_seed(self.seed, streams::FAMILY_WEIGHTS));
        let mut mr = seed::rng(seed::derive_seed(self.seed, streams::FAMILY_MEANS));
        let center: Vec<f64> = (0..d).map(|_| scale * normal(&mut wr)).collect();
        let rho = self.relatedness;
        let tasks = (0..self.task_count)
            .map(|_| {
                let weights = center
                    .iter()
                    .map(|&c| rho * c + (1.0 - rho) * scale * normal(&mut wr))
                    .collect();
                let mean = (0..d).map(|_| self.mean_shift * normal(&mut mr)).collect();
                TaskSpec {
                    source: TaskSource::Own(TaskInput::Gaussian {
                        mean,
                        scale: self.input_scale,
                    }),
                    weights,
                }
            })
            .collect();
        let family = TaskFamily {
            input_dim: d,
            noise_std: self.noise_std,
            relatedness: rho,
            tasks,
        };
        family.validate()?;
        Ok(family)
    }
}

#[inline]
fn normal(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

impl TaskFamily {
    /// A family of `weights.len()` tasks that all draw inputs from the same
    /// finite support, each with its own independent stream.
    pub fn discrete(points: Vec<Vec<f64>>, probs: Vec<f64>, weights: Vec<Vec<f64>>) -> Result<Self> {
        let d = points.first().map_or(0, Vec::len);
        let input = TaskInput::Discrete { points, probs };
        let family = TaskFamily {
            input_dim: d,
            noise_std: 0.0,
            relatedness: 0.0,
            tasks: weights
                .into_iter()
                .map(|w| TaskSpec {
                    source: TaskSource::Own(input.clone()),
                    weights: w,
                })
                .collect(),
        };
        family.validate()?;
        Ok(family)
    }

    /// Makes task `task` reuse the draws of task `source`.
    pub fn with_shared_draws(mut self, task: usize, source: usize) -> Result<Self> {
        if task >= self.tasks.len() {
            return Err(Error::config("tasks", format!("no task {task}")));
        }
        self.tasks[task].source = TaskSource::SharedWith(source);
        self.validate()?;
        Ok(self)
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::config("tasks", "a family needs at least one task"));
        }
        if self.input_dim == 0 {
            return Err(Error::config("input_dim", "must be at least 1"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::config("noise_std", "must be finite and nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.relatedness) {
            return Err(Error::config("relatedness", "must lie in [0, 1]"));
        }
        let d = self.input_dim;
        for (m, task) in self.tasks.iter().enumerate() {
            if task.weights.len() != d {
                return Err(Error::config(
                    format!("tasks[{m}].weights"),
                    format!("expected {d} entries, found {}", task.weights.len()),
                ));
            }
            match &task.source {
                TaskSource::SharedWith(src) if *src >= m => {
                    return Err(Error::config(
                        format!("tasks[{m}].source"),
                        "a task may only share draws with an earlier task",
                    ));
                }
                TaskSource::SharedWith(_) => {}
                TaskSource::Own(TaskInput::Gaussian { mean, scale }) => {
                    if mean.len() != d {
                        return Err(Error::config(
                            format!("tasks[{m}].source.mean"),
                            format!("expected {d} entries, found {}", mean.len()),
                        ));
                    }
                    if !(*scale >= 0.0 && scale.is_finite()) {
                        return Err(Error::config(format!("tasks[{m}].source.scale"), "must be nonnegative"));
                    }
                }
                TaskSource::Own(TaskInput::Discrete { points, probs }) => {
                    if points.is_empty() || points.len() != probs.len() {
                        return Err(Error::config(
                            format!("tasks[{m}].source.points"),
                            "needs a nonempty support with one probability per point",
                        ));
                    }
                    if let Some(p) = points.iter().find(|p| p.len() != d) {
                        return Err(Error::config(
                            format!("tasks[{m}].source.points"),
                            format!("point of dimension {} in a family of dimension {d}", p.len()),
                        ));
                    }
                    let total: f64 = probs.iter().sum();
                    if probs.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                        return Err(Error::config(
                            format!("tasks[{m}].source.probs"),
                            "probabilities must be nonnegative and sum to 1",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Family of the listed tasks (strictly increasing indices). Selected
    /// tasks that read a common stream keep sharing it.
    pub fn restrict(&self, tasks: &[usize]) -> Result<TaskFamily> {
        if tasks.is_empty() || tasks.windows(2).any(|w| w[0] >= w[1]) || tasks.iter().any(|&m| m >= self.tasks.len()) {
            return Err(Error::config("tasks", "need strictly increasing valid task indices"));
        }
        let mut specs: Vec<TaskSpec> = Vec::with_capacity(tasks.len());
        for (k, &m) in tasks.iter().enumerate() {
            let root = self.root(m);
            let source = match tasks[..k].iter().position(|&p| self.root(p) == root) {
                Some(first) => TaskSource::SharedWith(first),
                None => TaskSource::Own(self.input(m).clone()),
            };
            specs.push(TaskSpec {
                source,
                weights: self.tasks[m].weights.clone(),
            });
        }
        let family = TaskFamily {
            tasks: specs,
            ..self.clone()
        };
        family.validate()?;
        Ok(family)
    }

    /// Index of the task whose stream task `m` reads from.
    pub fn root(&self, m: usize) -> usize {
        let mut r = m;
        while let TaskSource::SharedWith(src) = self.tasks[r].source {
            r = src;
        }
        r
    }

    /// Distinct draw streams, each with the tasks reading from it.
    pub fn streams(&self) -> Vec<(usize, Vec<usize>)> {
        let mut out: Vec<(usize, Vec<usize>)> = Vec::new();
        for m in 0..self.tasks.len() {
            let r = self.root(m);
            match out.iter_mut().find(|(root, _)| *root == r) {
                Some((_, members)) => members.push(m),
                None => out.push((r, vec![m])),
            }
        }
        out
    }

    fn input(&self, m: usize) -> &TaskInput {
        match &self.tasks[self.root(m)].source {
            TaskSource::Own(input) => input,
            TaskSource::SharedWith(_) => unreachable!("root task owns its input"),
        }
    }

    /// Finite support of task `m`'s samples `(x, y)` when labels are
    /// noise-free and inputs discrete.
    pub fn discrete_support(&self, m: usize) -> Option<Vec<(Vec<f64>, f64, f64)>> {
        if self.noise_std != 0.0 {
            return None;
        }
        match self.input(m) {
            TaskInput::Discrete { points, probs } => Some(
                points
                    .iter()
                    .zip(probs)
                    .map(|(x, &p)| (x.clone(), dot(x, &self.tasks[m].weights), p))
                    .collect(),
            ),
            TaskInput::Gaussian { .. } => None,
        }
    }

    /// Probability table of a stream's support, shared by all its tasks.
    pub(crate) fn stream_support_probs(&self, root: usize) -> Option<Vec<f64>> {
        if self.noise_std != 0.0 {
            return None;
        }
        match self.input(root) {
            TaskInput::Discrete { probs, .. } => Some(probs.clone()),
            TaskInput::Gaussian { .. } => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        (0..self.task_count()).all(|m| self.discrete_support(m).is_some())
    }

    /// Draws one input of stream `root` into `x` and returns its noise draw.
    pub(crate) fn draw_point(&self, root: usize, rng: &mut Rng, x: &mut [f64]) -> f64 {
        match self.input(root) {
            TaskInput::Gaussian { mean, scale } => {
                for (xi, mu) in x.iter_mut().zip(mean) {
                    *xi = mu + scale * normal(rng);
                }
            }
            TaskInput::Discrete { points, probs } => {
                let k = pick(probs, rng.random::<f64>());
                x.copy_from_slice(&points[k]);
            }
        }
        normal(rng)
    }

    /// Label of task `m` at input `x` with standard noise draw `eps`.
    #[inline]
    pub(crate) fn label(&self, m: usize, x: &[f64], eps: f64) -> f64 {
        dot(x, &self.tasks[m].weights) + self.noise_std * eps
    }

    fn draw_stream(&self, root: usize, members: &[usize], n: usize, rng: &mut Rng, out: &mut MultiTaskDataset) {
        let mut x = vec![0.0; self.input_dim];
        for _ in 0..n {
            let eps = self.draw_point(root, rng, &mut x);
            for &m in members {
                let y = self.label(m, &x, eps);
                let t = &mut out.tasks[m];
                t.xs.extend_from_slice(&x);
                t.ys.push(y);
            }
        }
    }

    /// Draws `n` samples per task from a single caller-owned generator.
    pub fn draw_dataset(&self, n: usize, rng: &mut Rng) -> MultiTaskDataset {
        let mut out = MultiTaskDataset::empty(self.task_count(), self.input_dim, n);
        for (root, members) in self.streams() {
            self.draw_stream(root, &members, n, rng, &mut out);
        }
        out
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let family: TaskFamily = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        family.validate()?;
        Ok(family)
    }
}

/// Index selected by a uniform draw `u` from a probability vector.
pub(crate) fn pick(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // rounding left `acc` slightly below 1; take the last point with mass
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// `N` samples of one task, inputs stored row-major.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TaskSamples {
    pub dim: usize,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl TaskSamples {
    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    #[inline]
    pub fn x(&self, n: usize) -> &[f64] {
        &self.xs[n * self.dim..(n + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.xs.chunks_exact(self.dim).zip(self.ys.iter().copied())
    }

    /// Clipped loss of the linear predictor `w` on every sample.
    pub fn losses(&self, w: &[f64], loss: &LossSpec) -> Vec<f64> {
        self.iter().map(|(x, y)| loss.value(dot(x, w), y)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiTaskDataset {
    pub sample_size: usize,
    pub tasks: Vec<TaskSamples>,
}

impl MultiTaskDataset {
    fn empty(m: usize, d: usize, n: usize) -> Self {
        MultiTaskDataset {
            sample_size: n,
            tasks: (0..m)
                .map(|_| TaskSamples {
                    dim: d,
                    xs: Vec::with_capacity(n * d),
                    ys: Vec::with_capacity(n),
                })
                .collect(),
        }
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn input_dim(&self) -> usize {
        self.tasks.first().map_or(0, |t| t.dim)
    }

    /// Writes the dataset as CSV with header `task,row,y,x0..x{d-1}`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.input_dim();
        let mut header = String::from("task,row,y");
        for k in 0..d {
            header.push_str(&format!(",x{k}"));
        }
        writeln!(w, "{header}")?;
        for (m, task) in self.tasks.iter().enumerate() {
            for (n, (x, y)) in task.iter().enumerate() {
                write!(w, "{m},{n},{y}")?;
                for v in x {
                    write!(w, ",{v}")?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

/// Draws `n` i.i.d. samples per task. Each stream uses its own derived
/// seed, so the output is a pure function of `(family, n, seed)`.
pub fn generate_tasks(family: &TaskFamily, n: usize, seed: u64) -> Result<MultiTaskDataset> {
    family.validate()?;
    if n == 0 {
        return Err(Error::config("sample_size", "must be at least 1"));
    }
    let mut out = MultiTaskDataset::empty(family.task_count(), family.input_dim, n);
    for (root, members) in family.streams() {
        let mut rng = seed::rng(seed::derive_path(seed, &[streams::DATA, root as u64]));
        family.draw_stream(root, &members, n, &mut rng, &mut out);
    }
    Ok(out)
}

/// `(1/N) Σ ℓ(f(x_n), y_n)`.
pub fn empirical_risk<F>(f: F, samples: &TaskSamples, loss: &LossSpec) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if samples.is_empty() {
        return Err(Error::Domain("empirical risk of an empty sample set".into()));
    }
    let total: f64 = samples.iter().map(|(x, y)| loss.value(f(x), y)).sum();
    Ok((total / samples.len() as f64).clamp(loss.lower, loss.upper))
}

/// Default held-out sample size used as the expected-risk oracle.
pub const DEFAULT_ORACLE_N: usize = 10_000;

/// Monte-Carlo approximation of the expected risk of `f` on task `task`.
///
/// Computed as the empirical risk on an independent draw of `oracle_n`
/// samples; its standard error is at most [`oracle_standard_error`].
pub fn expected_risk<F>(f: F, family: &TaskFamily, task: usize, loss: &LossSpec, oracle_n: usize, seed: u64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if task >= family.task_count() {
        return Err(Error::config("task", format!("no task {task}")));
    }
    let data = generate_tasks(family, oracle_n, seed::derive_seed(seed, streams::ORACLE))?;
    empirical_risk(f, &data.tasks[task], loss)
}

/// Upper bound `(b - a) / (2 √n)` on the standard error of an `n`-sample
/// risk estimate.
pub fn oracle_standard_error(loss: &LossSpec, oracle_n: usize) -> f64 {
    loss.range() / (2.0 * (oracle_n as f64).sqrt())
}

/// Exact expected risk for a task with finite support and noise-free labels.
pub fn exact_expected_risk<F>(f: F, family: &TaskFamily, task: usize, loss: &LossSpec) -> Option<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let support = family.discrete_support(task)?;
    Some(support.iter().map(|(x, y, p)| p * loss.value(f(x), *y)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_family(m: usize, rho: f64, sigma: f64) -> TaskFamily {
        SyntheticFamily {
            task_count: m,
            input_dim: 3,
            relatedness: rho,
            noise_std: sigma,
            weight_scale: 0.5,
            mean_shift: 0.2,
            input_scale: 1.0,
            seed: 11,
        }
        .build()
        .unwrap()
    }

    #[test]
    fn noise_free_labels_are_exact() {
        let family = gaussian_family(1, 0.0, 0.0);
        let data = generate_tasks(&family, 5, 7).unwrap();
        let w = &family.tasks[0].weights;
        assert_eq!(data.tasks[0].len(), 5);
        for (x, y) in data.tasks[0].iter() {
            assert_eq!(y, dot(x, w));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let family = gaussian_family(3, 0.4, 0.1);
        let a = generate_tasks(&family, 20, 99).unwrap();
        let b = generate_tasks(&family, 20, 99).unwrap();
        assert_eq!(a, b);
        let c = generate_tasks(&family, 20, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn full_relatedness_shares_weights() {
        let family = gaussian_family(3, 1.0, 0.1);
        assert_eq!(family.tasks[0].weights, family.tasks[1].weights);
        assert_eq!(family.tasks[1].weights, family.tasks[2].weights);
        let unrelated = gaussian_family(3, 0.0, 0.1);
        assert_ne!(unrelated.tasks[0].weights, unrelated.tasks[1].weights);
    }

    #[test]
    fn invalid_dimensions_name_the_field() {
        let err = SyntheticFamily {
            task_count: 0,
            input_dim: 2,
            relatedness: 0.5,
            noise_std: 0.0,
            weight_scale: 1.0,
            mean_shift: 0.0,
            input_scale: 1.0,
            seed: 0,
        }
        .build()
        .unwrap_err();
        assert!(err.to_string().contains("task_count"));
        let family = gaussian_family(1, 0.0, 0.0);
        assert!(generate_tasks(&family, 0, 1).unwrap_err().to_string().contains("sample_size"));
        let mut bad = family.clone();
        bad.tasks[0].weights.push(1.0);
        assert!(bad.validate().unwrap_err().to_string().contains("tasks[0].weights"));
    }

    #[test]
    fn empirical_risk_cases() {
        let family = gaussian_family(1, 0.0, 0.0);
        let data = generate_tasks(&family, 50, 3).unwrap();
        let w = family.tasks[0].weights.clone();
        let loss = LossSpec::unit();
        assert_eq!(empirical_risk(|x| dot(x, &w), &data.tasks[0], &loss).unwrap(), 0.0);

        // constant 0 predictor on four labels equal to 1
        let ones = TaskSamples {
            dim: 1,
            xs: vec![0.0, 1.0, 2.0, 3.0],
            ys: vec![1.0; 4],
        };
        assert_eq!(empirical_risk(|_| 0.0, &ones, &loss).unwrap(), 1.0);

        let single = TaskSamples {
            dim: 1,
            xs: vec![0.5],
            ys: vec![0.2],
        };
        let f = |x: &[f64]| 0.3 * x[0];
        assert_eq!(empirical_risk(f, &single, &loss).unwrap(), loss.value(0.15, 0.2));

        let empty = TaskSamples {
            dim: 1,
            ..Default::default()
        };
        assert!(matches!(empirical_risk(f, &empty, &loss), Err(Error::Domain(_))));
    }

    #[test]
    fn expected_risk_degenerate_cases() {
        let loss = LossSpec::unit();
        let family = gaussian_family(2, 0.3, 0.0);
        let w = family.tasks[1].weights.clone();
        assert_eq!(expected_risk(|x| dot(x, &w), &family, 1, &loss, 10_000, 5).unwrap(), 0.0);

        let ones = TaskFamily::discrete(vec![vec![1.0]], vec![1.0], vec![vec![1.0]]).unwrap();
        assert_eq!(expected_risk(|_| 0.0, &ones, 0, &loss, 10_000, 5).unwrap(), 1.0);
        assert_eq!(exact_expected_risk(|_| 0.0, &ones, 0, &loss), Some(1.0));
    }

    #[test]
    fn expected_risk_matches_gaussian_integral() {
        // residual r = x·Δ - σε ~ N(μ·Δ, s²|Δ|² + σ²); E r² is the oracle.
        let family = gaussian_family(1, 0.0, 0.05);
        let w_true = family.tasks[0].weights.clone();
        let delta = [0.05, -0.04, 0.03];
        let w: Vec<f64> = w_true.iter().zip(&delta).map(|(a, b)| a + b).collect();
        let TaskSource::Own(TaskInput::Gaussian { mean, scale }) = &family.tasks[0].source else {
            unreachable!()
        };
        let shift = dot(mean, &delta);
        let var = scale * scale * dot(&delta, &delta) + 0.05f64.powi(2);
        let analytic = shift * shift + var;

        let loss = LossSpec::unit();
        let oracle_n = 200_000;
        let mc = expected_risk(|x| dot(x, &w), &family, 0, &loss, oracle_n, 17).unwrap();
        // standard deviation of r² for a normal residual
        let sd = (2.0 * var * var + 4.0 * shift * shift * var).sqrt();
        let se = sd / (oracle_n as f64).sqrt();
        assert!((mc - analytic).abs() < 3.0 * se, "mc {mc} analytic {analytic} se {se}");
    }

    #[test]
    fn shared_draws_copy_the_stream() {
        let family = TaskFamily::discrete(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec![0.2, 0.3, 0.5],
            vec![vec![1.0], vec![-1.0]],
        )
        .unwrap()
        .with_shared_draws(1, 0)
        .unwrap();
        let data = generate_tasks(&family, 30, 4).unwrap();
        assert_eq!(data.tasks[0].xs, data.tasks[1].xs);
        for (a, b) in data.tasks[0].ys.iter().zip(&data.tasks[1].ys) {
            assert_eq!(*a, -b);
        }
        assert!(family.with_shared_draws(0, 1).is_err());
    }

    #[test]
    fn csv_export_layout() {
        let family = gaussian_family(2, 0.5, 0.1);
        let data = generate_tasks(&family, 2, 1).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "task,row,y,x0,x1,x2");
        assert_eq!(lines.len(), 1 + 4);
        assert!(lines[3].starts_with("1,0,"));
    }

    #[test]
    fn family_toml_round_trip() {
        let family = gaussian_family(2, 0.5, 0.1)
            .with_shared_draws(1, 0)
            .unwrap();
        let text = family.to_toml().unwrap();
        assert_eq!(TaskFamily::from_toml(&text).unwrap(), family);
    }
}
