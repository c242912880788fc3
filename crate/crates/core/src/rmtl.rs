//! Hard-constrained multi-task empirical risk minimization.
//!
//! Minimizes `Σ_m E_N^[m] ℓ(x·w_m, y)` over a [`ConstrainedClass`] by
//! projected gradient descent with a sufficient-decrease backtracking line
//! search. Where the loss is clipped its gradient is taken to be zero,
//! which is a valid subgradient of the clipped squared loss.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{project_to_class, ConstrainedClass, HypothesisVector};
use crate::seed::{self, streams};
use crate::task::{dot, empirical_risk, MultiTaskDataset, TaskSamples};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Initial (and largest) step size of the line search.
    pub step_size: f64,
    /// Stop once an accepted step lowers the objective by less than this.
    pub tolerance: f64,
    /// Extra runs from random feasible starting points.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 5_000,
            step_size: 0.5,
            tolerance: 1e-8,
            restarts: 0,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::config("max_iterations", "must be positive"));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::config("step_size", "must be positive and finite"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::config("tolerance", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub solution: HypothesisVector,
    pub per_task_risks: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SolveResult {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn objective(data: &MultiTaskDataset, w: &HypothesisVector, class: &ConstrainedClass) -> f64 {
    data.tasks
        .iter()
        .enumerate()
        .map(|(m, t)| task_risk(t, w.task(m), class))
        .sum()
}

fn task_risk(t: &TaskSamples, w: &[f64], class: &ConstrainedClass) -> f64 {
    t.iter().map(|(x, y)| class.loss.value(dot(x, w), y)).sum::<f64>() / t.len() as f64
}

fn gradient(data: &MultiTaskDataset, w: &HypothesisVector, class: &ConstrainedClass) -> Result<HypothesisVector> {
    let mut g = HypothesisVector::zeros(w.task_count(), w.dim());
    for (m, t) in data.tasks.iter().enumerate() {
        let inv = 1.0 / t.len() as f64;
        let wm = w.task(m);
        let gm = g.task_mut(m);
        for (x, y) in t.iter() {
            let dl = class.loss.derivative(dot(x, wm), y) * inv;
            if dl != 0.0 {
                gm.iter_mut().zip(x).for_each(|(a, xi)| *a += dl * xi);
            }
        }
    }
    if g.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite gradient".into()));
    }
    Ok(g)
}

struct Run {
    best: HypothesisVector,
    best_value: f64,
    iterations: usize,
    converged: bool,
}

fn descend(data: &MultiTaskDataset, class: &ConstrainedClass, cfg: &SolverConfig, start: HypothesisVector) -> Result<Run> {
    let mut w = project_to_class(&start, class);
    let mut value = objective(data, &w, class);
    let mut step = cfg.step_size;
    let mut run = Run {
        best: w.clone(),
        best_value: value,
        iterations: 0,
        converged: false,
    };
    for it in 1..=cfg.max_iterations {
        run.iterations = it;
        let g = gradient(data, &w, class)?;
        let mut accepted = None;
        let mut eta = step;
        for _ in 0..50 {
            let mut trial = w.clone();
            trial
                .as_mut_slice()
                .iter_mut()
                .zip(g.as_slice())
                .for_each(|(a, gi)| *a -= eta * gi);
            let trial = project_to_class(&trial, class);
            let d: Vec<f64> = trial.as_slice().iter().zip(w.as_slice()).map(|(a, b)| a - b).collect();
            let model = value + dot(g.as_slice(), &d) + dot(&d, &d) / (2.0 * eta);
            let tv = objective(data, &trial, class);
            if tv <= model + 1e-15 * value.abs().max(1.0) && tv <= value {
                accepted = Some((trial, tv, eta));
                break;
            }
            eta *= 0.5;
        }
        let Some((next, next_value, eta)) = accepted else {
            // no descent direction left: w is stationary up to the line search
            run.converged = true;
            break;
        };
        debug_assert!(next_value <= value);
        let decrease = value - next_value;
        w = next;
        value = next_value;
        if value < run.best_value {
            run.best = w.clone();
            run.best_value = value;
        }
        step = (eta * 1.25).min(cfg.step_size);
        if decrease < cfg.tolerance {
            run.converged = true;
            break;
        }
    }
    Ok(run)
}

/// Projected-gradient solve of the constrained multi-task problem.
///
/// The first run starts at the origin (projected), each restart from a
/// random projected point. The best iterate over all runs is returned,
/// the earliest one on ties.
pub fn solve_rmtl(data: &MultiTaskDataset, class: &ConstrainedClass, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    class.validate()?;
    let (m, d) = (data.task_count(), data.input_dim());
    if m == 0 || d == 0 || data.tasks.iter().any(|t| t.is_empty() || t.dim != d) {
        return Err(Error::config("data", "every task needs samples of a common positive dimension"));
    }
    let mut rng = seed::rng(seed::derive_seed(cfg.seed, streams::SOLVER_RESTART));
    let mut best: Option<Run> = None;
    let mut total_iterations = 0;
    for r in 0..=cfg.restarts {
        let mut start = HypothesisVector::zeros(m, d);
        if r > 0 {
            let s = class.base_radius / (d as f64).sqrt();
            start
                .as_mut_slice()
                .iter_mut()
                .for_each(|w| *w = s * rng.sample::<f64, _>(StandardNormal));
        }
        let run = descend(data, class, cfg, start)?;
        total_iterations += run.iterations;
        if best.as_ref().is_none_or(|b| run.best_value < b.best_value) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one run");
    let per_task_risks = (0..m)
        .map(|k| empirical_risk(|x| dot(x, best.best.task(k)), &data.tasks[k], &class.loss))
        .collect::<Result<Vec<_>>>()?;
    Ok(SolveResult {
        objective: per_task_risks.iter().sum(),
        solution: best.best,
        per_task_risks,
        iterations: total_iterations,
        converged: best.converged,
    })
}

/// Minimum-norm least-squares weights over the given samples, pooled.
pub fn least_squares<'a, I>(tasks: I) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = &'a TaskSamples>,
{
    let mut rows: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut dim = None;
    for t in tasks {
        if *dim.get_or_insert(t.dim) != t.dim {
            return Err(Error::config("data", "tasks disagree on the input dimension"));
        }
        rows.extend_from_slice(&t.xs);
        ys.extend_from_slice(&t.ys);
    }
    let d = dim.unwrap_or(0);
    if ys.is_empty() || d == 0 {
        return Err(Error::Domain("least squares on an empty sample".into()));
    }
    let x = DMatrix::from_row_slice(ys.len(), d, &rows);
    let y = DVector::from_vec(ys);
    let svd = x.svd(true, true);
    let sol = svd.solve(&y, 1e-12).map_err(|e| Error::Numeric(e.to_string()))?;
    Ok(sol.iter().copied().collect())
}
