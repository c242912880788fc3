//! Empirical task-relatedness measures.
//!
//! For a task group `G` with complement `Ḡ` and thresholds `ξ`, the
//! dependence gap of a pair of events is `Pr{A | B} - Pr{A}` with
//! `A = {every task in G deviates by more than ξ}` and
//! `B = {every task in Ḡ deviates by at most ξ}`. It is estimated from
//! counts over independent trials as `J/P - K/T`, where `J` counts `A ∧ B`,
//! `K` counts `A` and `P` counts `B`.
//!
//! * ODDM uses the observed discrepancy `|E f - f(z)|` of a single fresh
//!   observation and takes the maximum over candidates.
//! * EDDM uses the subsample discrepancy `max_f |E_L f - E_N f|` on a fixed
//!   reference sample.
//!
//! Expected risks come from the exact support sum when the family is
//! discrete and noise-free, and from a fixed reference sample otherwise.

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::McEstimate;
use crate::group::GroupIndex;
use crate::hypothesis::{CandidateSet, ConstrainedClass};
use crate::rmtl::least_squares;
use crate::seed::{self, streams, Rng};
use crate::task::{dot, exact_expected_risk, generate_tasks, MultiTaskDataset, TaskFamily, DEFAULT_ORACLE_N};

/// Smallest trial count accepted by the dependence estimators.
pub const MIN_DEPENDENCE_TRIALS: usize = 100;
/// Smallest trial count accepted by [`estimate_cov`].
pub const MIN_COV_TRIALS: usize = 1_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    /// `A ∧ B`.
    pub joint: u64,
    /// `A`.
    pub marginal: u64,
    /// `B`.
    pub conditioning: u64,
    pub trials: u64,
}

impl EventCounts {
    pub fn add(&mut self, a: bool, b: bool) {
        self.trials += 1;
        self.marginal += a as u64;
        self.conditioning += b as u64;
        self.joint += (a && b) as u64;
    }

    pub fn value(&self) -> Option<f64> {
        dependence_value(self.joint, self.marginal, self.conditioning, self.trials)
    }

    pub fn standard_error(&self) -> Option<f64> {
        if self.conditioning == 0 || self.trials == 0 {
            return None;
        }
        let pc = self.joint as f64 / self.conditioning as f64;
        let pa = self.marginal as f64 / self.trials as f64;
        let var = pc * (1.0 - pc) / self.conditioning as f64 + pa * (1.0 - pa) / self.trials as f64;
        Some(var.max(0.0).sqrt())
    }

    fn merged(&self, o: &EventCounts) -> EventCounts {
        EventCounts {
            joint: self.joint + o.joint,
            marginal: self.marginal + o.marginal,
            conditioning: self.conditioning + o.conditioning,
            trials: self.trials + o.trials,
        }
    }
}

/// `(J/T) / (P/T) - K/T`; `None` when the conditioning event never occurred.
pub fn dependence_value(joint: u64, marginal: u64, conditioning: u64, trials: u64) -> Option<f64> {
    if conditioning == 0 || trials == 0 {
        return None;
    }
    let t = trials as f64;
    let v = (joint as f64 / t) / (conditioning as f64 / t) - marginal as f64 / t;
    Some(v.clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Oddm,
    Eddm,
}

/// Dependence gap estimate with the counts it was computed from.
///
/// For ODDM the reported counts are those of the maximizing candidate;
/// `per_candidate` keeps every candidate's counts so that estimates from
/// disjoint trial batches merge exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceEstimate {
    pub measure: Measure,
    pub group: GroupIndex,
    pub value: Option<f64>,
    pub defined: bool,
    pub standard_error: Option<f64>,
    pub joint: u64,
    pub marginal: u64,
    pub conditioning: u64,
    pub trials: u64,
    pub seed: u64,
    pub candidate_count: usize,
    /// Candidate achieving the maximum (ODDM only).
    pub selected: Option<usize>,
    pub per_candidate: Vec<EventCounts>,
}

impl DependenceEstimate {
    fn from_parts(measure: Measure, group: GroupIndex, seed: u64, candidate_count: usize, per_candidate: Vec<EventCounts>) -> Self {
        let mut best: Option<(usize, f64)> = None;
        if measure == Measure::Oddm {
            for (c, counts) in per_candidate.iter().enumerate() {
                if let Some(v) = counts.value() {
                    if best.is_none_or(|(_, b)| v > b) {
                        best = Some((c, v));
                    }
                }
            }
        } else if let Some(v) = per_candidate[0].value() {
            best = Some((0, v));
        }
        let pick = best.map_or(0, |(c, _)| c);
        let counts = per_candidate[pick];
        DependenceEstimate {
            measure,
            group,
            value: best.map(|(_, v)| v),
            defined: best.is_some(),
            standard_error: counts.standard_error(),
            joint: counts.joint,
            marginal: counts.marginal,
            conditioning: counts.conditioning,
            trials: counts.trials,
            seed,
            candidate_count,
            selected: if measure == Measure::Oddm { best.map(|(c, _)| c) } else { None },
            per_candidate,
        }
    }

    /// Pools two estimates of the same quantity from disjoint trials.
    pub fn merge(&self, other: &DependenceEstimate) -> Result<DependenceEstimate> {
        if self.measure != other.measure || self.group != other.group || self.per_candidate.len() != other.per_candidate.len() {
            return Err(Error::Domain("merging estimates of different quantities".into()));
        }
        let pooled = self
            .per_candidate
            .iter()
            .zip(&other.per_candidate)
            .map(|(a, b)| a.merged(b))
            .collect();
        Ok(DependenceEstimate::from_parts(
            self.measure,
            self.group.clone(),
            self.seed.min(other.seed),
            self.candidate_count,
            pooled,
        ))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Expected risk of every candidate component: `risks[m][c]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskTable {
    pub risks: Vec<Vec<f64>>,
    pub exact: bool,
    pub reference_size: usize,
}

/// Exact expected risks for discrete noise-free families; otherwise the
/// empirical risk on one reference draw of `reference_size` samples.
pub fn expected_risk_table(
    family: &TaskFamily,
    class: &ConstrainedClass,
    candidates: &CandidateSet,
    reference_size: usize,
    seed: u64,
) -> Result<RiskTable> {
    check_candidates(family, candidates)?;
    let m_count = family.task_count();
    if family.is_discrete() {
        let risks = (0..m_count)
            .map(|m| {
                candidates
                    .components(m)
                    .iter()
                    .map(|w| exact_expected_risk(|x| dot(x, w), family, m, &class.loss).expect("discrete family"))
                    .collect()
            })
            .collect();
        return Ok(RiskTable {
            risks,
            exact: true,
            reference_size: 0,
        });
    }
    if reference_size == 0 {
        return Err(Error::config("reference_size", "must be positive"));
    }
    let data = generate_tasks(family, reference_size, seed::derive_seed(seed, streams::REFERENCE))?;
    let risks = (0..m_count)
        .map(|m| {
            candidates
                .components(m)
                .iter()
                .map(|w| mean(&data.tasks[m].losses(w, &class.loss)))
                .collect()
        })
        .collect();
    Ok(RiskTable {
        risks,
        exact: false,
        reference_size,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn check_candidates(family: &TaskFamily, candidates: &CandidateSet) -> Result<()> {
    family.validate()?;
    if candidates.is_empty() {
        return Err(Error::config("candidates", "candidate set is empty"));
    }
    if candidates.task_count() != family.task_count() || candidates.dim() != family.input_dim {
        return Err(Error::config("candidates", "candidate shape does not match the task family"));
    }
    Ok(())
}

fn check_xi(xi: &[f64], m: usize) -> Result<()> {
    if xi.len() != m {
        return Err(Error::config("xi", format!("expected {m} thresholds, got {}", xi.len())));
    }
    if xi.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::config("xi", "thresholds must be positive and finite"));
    }
    Ok(())
}

/// One fresh observation per stream: inputs `xs[m]` and labels `ys[m]`.
pub(crate) struct Observation {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
}

impl Observation {
    pub fn new(family: &TaskFamily) -> Self {
        Observation {
            xs: vec![vec![0.0; family.input_dim]; family.task_count()],
            ys: vec![0.0; family.task_count()],
        }
    }

    pub fn draw(&mut self, family: &TaskFamily, task_streams: &[(usize, Vec<usize>)], rng: &mut Rng) {
        let mut x = vec![0.0; family.input_dim];
        for (root, members) in task_streams {
            let eps = family.draw_point(*root, rng, &mut x);
            for &m in members {
                self.xs[m].copy_from_slice(&x);
                self.ys[m] = family.label(m, &x, eps);
            }
        }
    }
}

/// Observed discrepancy dependence measure of `group`, maximized over
/// candidates.
pub fn estimate_oddm(
    family: &TaskFamily,
    class: &ConstrainedClass,
    candidates: &CandidateSet,
    group: &GroupIndex,
    xi: &[f64],
    trials: usize,
    seed: u64,
) -> Result<DependenceEstimate> {
    let risks = expected_risk_table(family, class, candidates, DEFAULT_ORACLE_N, seed)?;
    estimate_oddm_with(family, class, candidates, &risks, group, xi, trials, seed)
}

/// [`estimate_oddm`] against a precomputed risk table.
#[allow(clippy::too_many_arguments)]
pub fn estimate_oddm_with(
    family: &TaskFamily,
    class: &ConstrainedClass,
    candidates: &CandidateSet,
    risks: &RiskTable,
    group: &GroupIndex,
    xi: &[f64],
    trials: usize,
    seed: u64,
) -> Result<DependenceEstimate> {
    check_candidates(family, candidates)?;
    let m_count = family.task_count();
    check_xi(xi, m_count)?;
    check_group(group, m_count)?;
    if trials < MIN_DEPENDENCE_TRIALS {
        return Err(Error::config("trials", format!("need at least {MIN_DEPENDENCE_TRIALS}")));
    }
    let task_streams = family.streams();
    let mut rng = seed::rng(seed::derive_path(seed, &[streams::TRIALS, group.mask() as u64]));
    let mut obs = Observation::new(family);
    let mut counts = vec![EventCounts::default(); candidates.len()];
    for _ in 0..trials {
        obs.draw(family, &task_streams, &mut rng);
        for (c, h) in candidates.members().iter().enumerate() {
            let mut a = true;
            let mut b = true;
            for m in 0..m_count {
                let s = (risks.risks[m][c] - class.loss.value(dot(&obs.xs[m], h.task(m)), obs.ys[m])).abs();
                if group.contains(m) {
                    a &= s > xi[m];
                } else {
                    b &= s <= xi[m];
                }
            }
            counts[c].add(a, b);
        }
    }
    Ok(DependenceEstimate::from_parts(Measure::Oddm, group.clone(), seed, candidates.len(), counts))
}

fn check_group(group: &GroupIndex, m: usize) -> Result<()> {
    if group.task_count() != m || group.is_empty() {
        return Err(Error::config("group", "group does not index this family's tasks"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EddmConfig {
    /// Subsample size `L`, with `1 ≤ L < N`.
    pub subsample_size: usize,
    pub xi: Vec<f64>,
}

impl EddmConfig {
    /// `L = ⌊N/2⌋` (at least 1).
    pub fn half(n: usize, xi: Vec<f64>) -> Self {
        EddmConfig {
            subsample_size: (n / 2).max(1),
            xi,
        }
    }

    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        if self.subsample_size == 0 || self.subsample_size >= n {
            return Err(Error::config("subsample_size", format!("need 1 <= L < N = {n}")));
        }
        check_xi(&self.xi, m)
    }
}

/// Losses of every candidate component on every reference sample:
/// `table[m][c][n]`, plus the full-sample means `means[m][c]`.
pub(crate) struct LossMatrix {
    pub table: Vec<Vec<Vec<f64>>>,
    pub means: Vec<Vec<f64>>,
}

impl LossMatrix {
    pub fn new(data: &MultiTaskDataset, class: &ConstrainedClass, candidates: &CandidateSet) -> Self {
        let table: Vec<Vec<Vec<f64>>> = (0..data.task_count())
            .map(|m| {
                candidates
                    .components(m)
                    .iter()
                    .map(|w| data.tasks[m].losses(w, &class.loss))
                    .collect()
            })
            .collect();
        let means = table.iter().map(|per| per.iter().map(|l| mean(l)).collect()).collect();
        LossMatrix { table, means }
    }
}

/// Empirical discrepancy dependence measure of `group` at sample size `n`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_eddm(
    family: &TaskFamily,
    class: &ConstrainedClass,
    candidates: &CandidateSet,
    group: &GroupIndex,
    cfg: &EddmConfig,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<DependenceEstimate> {
    check_candidates(family, candidates)?;
    let m_count = family.task_count();
    cfg.validate(n, m_count)?;
    check_group(group, m_count)?;
    if trials < MIN_DEPENDENCE_TRIALS {
        return Err(Error::config("trials", format!("need at least {MIN_DEPENDENCE_TRIALS}")));
    }
    let reference = generate_tasks(family, n, seed::derive_seed(seed, streams::REFERENCE))?;
    let losses = LossMatrix::new(&reference, class, candidates);
    let task_streams = family.streams();
    let mut rng = seed::rng(seed::derive_path(seed, &[streams::SUBSAMPLE, group.mask() as u64]));
    let l = cfg.subsample_size;
    let mut counts = EventCounts::default();
    let mut t_hat = vec![0.0; m_count];
    for _ in 0..trials {
        for (_, members) in &task_streams {
            // linked tasks share their samples, so they share the subsample
            let idx = index::sample(&mut rng, n, l);
            for &m in members {
                t_hat[m] = losses.table[m]
                    .iter()
                    .zip(&losses.means[m])
                    .map(|(row, full)| {
                        let part: f64 = idx.iter().map(|k| row[k]).sum::<f64>() / l as f64;
                        (part - full).abs()
                    })
                    .fold(0.0, f64::max);
            }
        }
        let a = group.members().iter().all(|&m| t_hat[m] > cfg.xi[m]);
        let b = group.complement().iter().all(|&m| t_hat[m] <= cfg.xi[m]);
        counts.add(a, b);
    }
    Ok(DependenceEstimate::from_parts(Measure::Eddm, group.clone(), seed, candidates.len(), vec![counts]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub candidate: usize,
    pub trials: usize,
    pub exact: bool,
}

/// Largest covariance over candidates of the two tasks' losses at paired
/// fresh observations.
pub fn estimate_cov(
    family: &TaskFamily,
    class: &ConstrainedClass,
    candidates: &CandidateSet,
    i: usize,
    j: usize,
    trials: usize,
    seed: u64,
) -> Result<CovEstimate> {
    check_candidates(family, candidates)?;
    let m_count = family.task_count();
    if i >= m_count || j >= m_count {
        return Err(Error::config("task", format!("tasks {i}, {j} out of range for {m_count} tasks")));
    }
    if trials < MIN_COV_TRIALS {
        return Err(Error::config("trials", format!("need at least {MIN_COV_TRIALS}")));
    }
    let task_streams = family.streams();
    let mut rng = seed::rng(seed::derive_path(seed, &[streams::TRIALS, 1 << 20, i as u64, j as u64]));
    let mut obs = Observation::new(family);
    let c_count = candidates.len();
    let mut a = vec![vec![0.0; trials]; c_count];
    let mut b = vec![vec![0.0; trials]; c_count];
    for t in 0..trials {
        obs.draw(family, &task_streams, &mut rng);
        for (c, h) in candidates.members().iter().enumerate() {
            a[c][t] = class.loss.value(dot(&obs.xs[i], h.task(i)), obs.ys[i]);
            b[c][t] = class.loss.value(dot(&obs.xs[j], h.task(j)), obs.ys[j]);
        }
    }
    let mut best: Option<CovEstimate> = None;
    for c in 0..c_count {
        let (ma, mb) = (mean(&a[c]), mean(&b[c]));
        let prods: Vec<f64> = a[c].iter().zip(&b[c]).map(|(x, y)| (x - ma) * (y - mb)).collect();
        let cov = prods.iter().sum::<f64>() / (trials - 1) as f64;
        let mp = mean(&prods);
        let var = prods.iter().map(|p| (p - mp) * (p - mp)).sum::<f64>() / (trials - 1) as f64;
        let est = CovEstimate {
            value: cov,
            standard_error: (var / trials as f64).sqrt(),
            candidate: c,
            trials,
            exact: false,
        };
        if best.is_none_or(|b| est.value > b.value) {
            best = Some(est);
        }
    }
    Ok(best.expect("nonempty candidates"))
}

/// Exact covariance for discrete noise-free families: `None` otherwise.
pub fn exact_cov(family: &TaskFamily, class: &ConstrainedClass, candidates: &CandidateSet, i: usize, j: usize) -> Option<CovEstimate> {
    let (si, sj) = (family.discrete_support(i)?, family.discrete_support(j)?);
    let linked = family.root(i) == family.root(j);
    let mut best: Option<CovEstimate> = None;
    for (c, h) in candidates.members().iter().enumerate() {
        let fi: Vec<f64> = si.iter().map(|(x, y, _)| class.loss.value(dot(x, h.task(i)), *y)).collect();
        let fj: Vec<f64> = sj.iter().map(|(x, y, _)| class.loss.value(dot(x, h.task(j)), *y)).collect();
        let ei: f64 = si.iter().zip(&fi).map(|((_, _, p), f)| p * f).sum();
        let ej: f64 = sj.iter().zip(&fj).map(|((_, _, p), f)| p * f).sum();
        let value = if linked {
            si.iter()
                .zip(fi.iter().zip(&fj))
                .map(|((_, _, p), (a, b))| p * (a - ei) * (b - ej))
                .sum()
        } else {
            0.0
        };
        let est = CovEstimate {
            value,
            standard_error: 0.0,
            candidate: c,
            trials: 0,
            exact: true,
        };
        if best.is_none_or(|b| est.value > b.value) {
            best = Some(est);
        }
    }
    best
}

/// `max_f Pr{s_λ ≤ 2ξ_λ for every λ in tasks}` with `s` the observed
/// discrepancy. Exact for discrete noise-free families; otherwise a
/// Monte-Carlo frequency over `trials` fresh observations. An empty task
/// list is the sure event.
#[allow(clippy::too_many_arguments)]
pub fn small_prob_factor(
    family: &TaskFamily,
    class: &ConstrainedClass,
    candidates: &CandidateSet,
    risks: &RiskTable,
    tasks: &[usize],
    xi: &[f64],
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_candidates(family, candidates)?;
    check_xi(xi, family.task_count())?;
    if tasks.is_empty() {
        return Ok(McEstimate::exact(1.0));
    }
    let in_set = |m: usize| tasks.contains(&m);
    let task_streams = family.streams();
    if family.is_discrete() && risks.exact {
        let mut best: f64 = 0.0;
        for (c, h) in candidates.members().iter().enumerate() {
            let mut prob = 1.0;
            for (root, members) in &task_streams {
                let active: Vec<usize> = members.iter().copied().filter(|&m| in_set(m)).collect();
                if active.is_empty() {
                    continue;
                }
                let supports: Vec<_> = active.iter().map(|&m| family.discrete_support(m).expect("discrete")).collect();
                let probs = family.stream_support_probs(*root).expect("discrete");
                prob *= probs
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| {
                        active.iter().zip(&supports).all(|(&m, sup)| {
                            let (x, y, _) = &sup[k];
                            (risks.risks[m][c] - class.loss.value(dot(x, h.task(m)), *y)).abs() <= 2.0 * xi[m]
                        })
                    })
                    .map(|(_, p)| p)
                    .sum::<f64>();
            }
            best = best.max(prob);
        }
        return Ok(McEstimate::exact(best));
    }
    if trials == 0 {
        return Err(Error::config("trials", "must be positive"));
    }
    let mut rng = seed::rng(seed::derive_path(seed, &[streams::TRIALS, 1 << 21]));
    let mut obs = Observation::new(family);
    let mut hits = vec![0u64; candidates.len()];
    for _ in 0..trials {
        obs.draw(family, &task_streams, &mut rng);
        for (c, h) in candidates.members().iter().enumerate() {
            let ok = tasks.iter().all(|&m| {
                (risks.risks[m][c] - class.loss.value(dot(&obs.xs[m], h.task(m)), obs.ys[m])).abs() <= 2.0 * xi[m]
            });
            hits[c] += ok as u64;
        }
    }
    let top = hits.iter().copied().max().unwrap_or(0);
    Ok(McEstimate::from_counts(top, trials as u64, seed))
}

/// ODDM computed exactly for discrete noise-free families by enumerating
/// the joint support of one observation per stream; `None` when the
/// family is not discrete or the joint support exceeds `limit` outcomes.
pub fn exact_oddm(
    family: &TaskFamily,
    class: &ConstrainedClass,
    candidates: &CandidateSet,
    risks: &RiskTable,
    group: &GroupIndex,
    xi: &[f64],
    limit: usize,
) -> Result<Option<DependenceEstimate>> {
    check_candidates(family, candidates)?;
    let m_count = family.task_count();
    check_xi(xi, m_count)?;
    check_group(group, m_count)?;
    if !family.is_discrete() || !risks.exact {
        return Ok(None);
    }
    let task_streams = family.streams();
    let supports: Vec<_> = (0..m_count).map(|m| family.discrete_support(m).expect("discrete")).collect();
    let sizes: Vec<usize> = task_streams.iter().map(|(root, _)| supports[*root].len()).collect();
    let total = sizes.iter().try_fold(1usize, |acc, &k| acc.checked_mul(k));
    if total.is_none_or(|t| t > limit) {
        return Ok(None);
    }
    let mut best: Option<(usize, f64, [f64; 3])> = None;
    for (c, h) in candidates.members().iter().enumerate() {
        // [Pr{A ∧ B}, Pr{A}, Pr{B}]
        let mut acc = [0.0f64; 3];
        let mut choice = vec![0usize; task_streams.len()];
        loop {
            let mut prob = 1.0;
            let (mut a, mut b) = (true, true);
            for (si, (_, members)) in task_streams.iter().enumerate() {
                let k = choice[si];
                prob *= supports[members[0]][k].2;
                for &m in members {
                    let (x, y, _) = &supports[m][k];
                    let s = (risks.risks[m][c] - class.loss.value(dot(x, h.task(m)), *y)).abs();
                    if group.contains(m) {
                        a &= s > xi[m];
                    } else {
                        b &= s <= xi[m];
                    }
                }
            }
            if a && b {
                acc[0] += prob;
            }
            if a {
                acc[1] += prob;
            }
            if b {
                acc[2] += prob;
            }
            // odometer over the per-stream supports
            let mut i = 0;
            while i < choice.len() {
                choice[i] += 1;
                if choice[i] < sizes[i] {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == choice.len() {
                break;
            }
        }
        if group.is_full() {
            // B is the sure event; keep the identity exact
            acc[0] = acc[1];
            acc[2] = 1.0;
        }
        if acc[2] > 0.0 {
            let v = (acc[0] / acc[2] - acc[1]).clamp(-1.0, 1.0);
            if best.is_none_or(|(_, bv, _)| v > bv) {
                best = Some((c, v, acc));
            }
        }
    }
    Ok(Some(DependenceEstimate {
        measure: Measure::Oddm,
        group: group.clone(),
        value: best.map(|(_, v, _)| v),
        defined: best.is_some(),
        standard_error: best.map(|_| 0.0),
        joint: 0,
        marginal: 0,
        conditioning: 0,
        trials: 0,
        seed: 0,
        candidate_count: candidates.len(),
        selected: best.map(|(c, _, _)| c),
        per_candidate: Vec::new(),
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    /// Cluster label of every task; labels appear in order of first task.
    pub assignment: Vec<usize>,
    /// Task closest to each cluster's centroid.
    pub representatives: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means on per-task least-squares weights with a seeded k-means++ start.
pub fn cluster_tasks(data: &MultiTaskDataset, k: usize, seed: u64) -> Result<Clustering> {
    let m_count = data.task_count();
    if k == 0 || k > m_count {
        return Err(Error::config("cluster_k", format!("need 1 <= k <= {m_count}")));
    }
    let points: Vec<Vec<f64>> = data.tasks.iter().map(|t| least_squares([t])).collect::<Result<_>>()?;
    let mut assignment: Vec<usize> = if k == m_count {
        (0..m_count).collect()
    } else {
        let mut rng = seed::rng(seed::derive_seed(seed, streams::KMEANS));
        let mut centroids = kmeans_pp(&points, k, &mut rng);
        let mut assignment = vec![0; m_count];
        for _ in 0..100 {
            let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
            let mut next = next;
            fill_empty(&points, &mut next, &centroids, k);
            let changed = next != assignment;
            assignment = next;
            centroids = centroids_of(&points, &assignment, k);
            if !changed {
                break;
            }
        }
        assignment
    };
    // canonical labels in order of first appearance
    let mut relabel = vec![usize::MAX; k];
    let mut next_label = 0;
    for a in assignment.iter_mut() {
        if relabel[*a] == usize::MAX {
            relabel[*a] = next_label;
            next_label += 1;
        }
        *a = relabel[*a];
    }
    let centroids = centroids_of(&points, &assignment, k);
    let representatives = (0..k)
        .map(|c| {
            (0..m_count)
                .filter(|&m| assignment[m] == c)
                .min_by(|&a, &b| sq_dist(&points[a], &centroids[c]).total_cmp(&sq_dist(&points[b], &centroids[c])).then(a.cmp(&b)))
                .expect("clusters are nonempty")
        })
        .collect();
    Ok(Clustering {
        assignment,
        representatives,
        centroids,
    })
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    for (c, q) in centroids.iter().enumerate() {
        if sq_dist(p, q) < sq_dist(p, &centroids[best]) {
            best = c;
        }
    }
    best
}

fn kmeans_pp(points: &[Vec<f64>], k: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    let mut chosen = vec![rng.random_range(0..points.len())];
    while chosen.len() < k {
        let d2: Vec<f64> = points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if chosen.contains(&i) {
                    0.0
                } else {
                    chosen.iter().map(|&c| sq_dist(p, &points[c])).fold(f64::INFINITY, f64::min)
                }
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && u < acc {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).expect("positive mass"))
        } else {
            // all remaining points coincide with a chosen one
            let rest: Vec<usize> = (0..points.len()).filter(|i| !chosen.contains(i)).collect();
            rest[rng.random_range(0..rest.len())]
        };
        chosen.push(pick);
    }
    chosen.iter().map(|&i| points[i].clone()).collect()
}

/// Hands every empty cluster the point farthest from its centroid among
/// clusters that can spare one.
fn fill_empty(points: &[Vec<f64>], assignment: &mut [usize], centroids: &[Vec<f64>], k: usize) {
    for c in 0..k {
        if assignment.contains(&c) {
            continue;
        }
        let sizes = |a: &[usize], l: usize| a.iter().filter(|&&x| x == l).count();
        let donor = (0..points.len())
            .filter(|&i| sizes(assignment, assignment[i]) > 1)
            .max_by(|&a, &b| {
                sq_dist(&points[a], &centroids[assignment[a]])
                    .total_cmp(&sq_dist(&points[b], &centroids[assignment[b]]))
                    .then(b.cmp(&a))
            });
        if let Some(i) = donor {
            assignment[i] = c;
        }
    }
}

fn centroids_of(points: &[Vec<f64>], assignment: &[usize], k: usize) -> Vec<Vec<f64>> {
    let d = points[0].len();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignment) {
        counts[a] += 1;
        sums[a].iter_mut().zip(p).for_each(|(s, x)| *s += x);
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            s.iter_mut().for_each(|v| *v /= n as f64);
        }
    }
    sums
}
