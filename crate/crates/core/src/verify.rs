//! Checks of the probability inequalities behind the bounds.
//!
//! Every check produces a [`DominanceVerdict`] comparing a left-hand
//! probability against a right-hand bound. Whenever the outcome space is
//! small enough (at most [`EXACT_OUTCOME_LIMIT`] outcomes) the left-hand
//! side is computed exactly and the verdict tolerance is [`EXACT_TOL`];
//! otherwise it is a Monte-Carlo frequency and the verdict allows three
//! standard errors.
//!
//! Candidate-set suprema make every measured left-hand side a lower bound
//! of its class-wide value, so a held verdict confirms a necessary
//! condition of the inequality, not the inequality itself.

use std::io::Write;

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bounds::{BoundReport, Condition, Quantity};
use crate::error::{Error, Result};
use crate::estimate::McEstimate;
use crate::hypothesis::{CandidateSet, ConstrainedClass};
use crate::relatedness::{LossMatrix, RiskTable};
use crate::seed::{self, streams, Rng};
use crate::task::{dot, TaskFamily};

/// Largest outcome count enumerated exactly.
pub const EXACT_OUTCOME_LIMIT: f64 = 1e6;
pub const EXACT_TOL: f64 = 1e-12;
/// Width of the Monte-Carlo acceptance band, in standard errors.
pub const MC_BAND: f64 = 3.0;
pub const MAX_SUPPORT: usize = 64;

/// Finitely supported random vector with nonnegative entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteVectorDistribution {
    support: Vec<Vec<f64>>,
    probs: Vec<f64>,
    /// Every outcome satisfies `Σ_m s_m ≤ 1`.
    simplex: bool,
}

impl DiscreteVectorDistribution {
    pub fn new(support: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() > MAX_SUPPORT {
            return Err(Error::config("support", format!("need 1..={MAX_SUPPORT} outcomes")));
        }
        if support.len() != probs.len() {
            return Err(Error::config("probs", "one probability per outcome"));
        }
        let m = support[0].len();
        if m == 0 || support.iter().any(|v| v.len() != m) {
            return Err(Error::config("support", "outcomes must share a positive dimension"));
        }
        if support.iter().flatten().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::config("support", "entries must be finite and nonnegative"));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::config("probs", "probabilities must be nonnegative and sum to 1"));
        }
        Ok(DiscreteVectorDistribution {
            support,
            probs,
            simplex: false,
        })
    }

    /// Distribution whose outcomes all lie in `{s ≥ 0, Σ s ≤ 1}`.
    pub fn simplex(support: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        let mut d = DiscreteVectorDistribution::new(support, probs)?;
        if d.support.iter().any(|v| v.iter().sum::<f64>() > 1.0 + EXACT_TOL) {
            return Err(Error::config("support", "simplex outcomes must sum to at most 1"));
        }
        d.simplex = true;
        Ok(d)
    }

    pub fn task_count(&self) -> usize {
        self.support[0].len()
    }

    pub fn support(&self) -> &[Vec<f64>] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn is_simplex(&self) -> bool {
        self.simplex
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mu = vec![0.0; self.task_count()];
        for (v, p) in self.support.iter().zip(&self.probs) {
            mu.iter_mut().zip(v).for_each(|(a, x)| *a += p * x);
        }
        mu
    }

    /// Probability of the outcomes satisfying `pred`.
    pub fn prob(&self, pred: impl Fn(&[f64]) -> bool) -> f64 {
        self.support.iter().zip(&self.probs).filter(|(v, _)| pred(v)).map(|(_, p)| p).sum()
    }

    /// Product distribution of independent `{0, 1}` components with the
    /// given success probabilities (scaled by `scale`).
    pub fn independent_bernoulli(success: &[f64], scale: f64) -> Result<Self> {
        let m = success.len();
        if m == 0 || m > 6 {
            return Err(Error::config("success", "need 1..=6 components"));
        }
        let mut support = Vec::with_capacity(1 << m);
        let mut probs = Vec::with_capacity(1 << m);
        for mask in 0..(1usize << m) {
            let mut p = 1.0;
            let v: Vec<f64> = (0..m)
                .map(|i| {
                    let on = mask & (1 << i) != 0;
                    p *= if on { success[i] } else { 1.0 - success[i] };
                    if on {
                        scale
                    } else {
                        0.0
                    }
                })
                .collect();
            support.push(v);
            probs.push(p);
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        DiscreteVectorDistribution::new(support, probs)
    }
}

/// Result of comparing a probability against its bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceVerdict {
    pub context: String,
    pub lhs: f64,
    pub lhs_standard_error: f64,
    pub exact: bool,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
    pub params: serde_json::Value,
}

impl DominanceVerdict {
    pub fn new(context: impl Into<String>, lhs: &McEstimate, rhs: f64, params: serde_json::Value) -> Self {
        let slack = if lhs.exact { EXACT_TOL } else { MC_BAND * lhs.standard_error };
        DominanceVerdict {
            context: context.into(),
            lhs: lhs.value,
            lhs_standard_error: lhs.standard_error,
            exact: lhs.exact,
            rhs,
            margin: rhs - lhs.value,
            holds: lhs.value <= rhs + slack,
            params,
        }
    }

    /// Recomputes `holds` from the stored fields.
    pub fn recheck(&self) -> bool {
        let slack = if self.exact { EXACT_TOL } else { MC_BAND * self.lhs_standard_error };
        self.lhs <= self.rhs + slack
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

/// Number of ways to split `n` draws over `k` cells.
pub fn composition_count(n: usize, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    // C(n + k - 1, k - 1)
    let mut c = 1.0;
    for i in 1..k {
        c = c * (n + i) as f64 / i as f64;
    }
    c
}

/// Calls `f(counts, probability)` for every multinomial outcome of `n`
/// draws from `probs` with nonzero probability.
pub fn for_each_composition(n: usize, probs: &[f64], mut f: impl FnMut(&[usize], f64)) {
    let lf = ln_factorials(n);
    let ln_p: Vec<f64> = probs.iter().map(|p| p.ln()).collect();
    let mut counts = vec![0usize; probs.len()];
    fn rec(i: usize, left: usize, acc: f64, counts: &mut [usize], ln_p: &[f64], lf: &[f64], f: &mut dyn FnMut(&[usize], f64)) {
        let k = counts.len();
        if i == k - 1 {
            counts[i] = left;
            if left > 0 && ln_p[i] == f64::NEG_INFINITY {
                return;
            }
            let term = if left > 0 { left as f64 * ln_p[i] } else { 0.0 };
            f(counts, (acc + term - lf[left]).exp());
            return;
        }
        for c in 0..=left {
            if c > 0 && ln_p[i] == f64::NEG_INFINITY {
                break;
            }
            counts[i] = c;
            let term = if c > 0 { c as f64 * ln_p[i] } else { 0.0 };
            rec(i + 1, left - c, acc + term - lf[c], counts, ln_p, lf, f);
        }
    }
    rec(0, n, lf[n], &mut counts, &ln_p, &lf, &mut f);
}

/// Multinomial counts of `n` draws, sampled by sequential binomials.
pub fn sample_multinomial(n: usize, probs: &[f64], rng: &mut Rng, counts: &mut [usize]) {
    let mut left = n as u64;
    let mut mass = 1.0;
    let k = probs.len();
    for i in 0..k {
        if i == k - 1 || left == 0 {
            counts[i] = left as usize;
            for c in counts.iter_mut().skip(i + 1) {
                *c = 0;
            }
            break;
        }
        let p = if mass > 0.0 { (probs[i] / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = Binomial::new(left, p).expect("valid binomial").sample(rng);
        counts[i] = c as usize;
        left -= c;
        mass -= probs[i];
    }
}

fn sample_mean(dist: &DiscreteVectorDistribution, counts: &[usize], n: usize) -> Vec<f64> {
    let mut mean = vec![0.0; dist.task_count()];
    for (v, &c) in dist.support.iter().zip(counts) {
        if c > 0 {
            mean.iter_mut().zip(v).for_each(|(a, x)| *a += c as f64 * x);
        }
    }
    mean.iter_mut().for_each(|a| *a /= n as f64);
    mean
}

/// How a left-hand probability is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Exact enumeration when it fits, Monte-Carlo otherwise.
    Auto,
    MonteCarlo,
}

/// Probability over `n` i.i.d. draws that the sample mean satisfies `event`,
/// exact when the composition count permits, Monte-Carlo otherwise.
fn mean_event_prob(
    dist: &DiscreteVectorDistribution,
    n: usize,
    trials: usize,
    seed: u64,
    method: Method,
    event: impl Fn(&[f64]) -> bool,
) -> Result<McEstimate> {
    if n == 0 {
        return Err(Error::config("n", "sample size must be positive"));
    }
    if method == Method::Auto && composition_count(n, dist.support.len()) <= EXACT_OUTCOME_LIMIT {
        let mut p = 0.0;
        for_each_composition(n, &dist.probs, |counts, prob| {
            if event(&sample_mean(dist, counts, n)) {
                p += prob;
            }
        });
        return Ok(McEstimate::exact(p));
    }
    if trials == 0 {
        return Err(Error::config("trials", "Monte-Carlo path needs trials > 0"));
    }
    let mut rng = seed::rng(seed::derive_seed(seed, streams::TRIALS));
    let mut counts = vec![0usize; dist.support.len()];
    let mut hits = 0u64;
    for _ in 0..trials {
        sample_multinomial(n, &dist.probs, &mut rng, &mut counts);
        hits += event(&sample_mean(dist, &counts, n)) as u64;
    }
    Ok(McEstimate::from_counts(hits, trials as u64, seed))
}

fn check_xi(xi: &[f64], m: usize) -> Result<()> {
    if xi.len() != m || xi.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::config("xi", format!("need {m} positive thresholds")));
    }
    Ok(())
}

/// Deviations within this of a threshold count as exceeding it, which
/// can only enlarge the measured probability.
const BOUNDARY_SLACK: f64 = 1e-12;

/// Hoeffding-type vector deviation: `Pr{|E_N f - E f| > ξ}` (every
/// component) against `2^M exp(-2N Σ ξ_m² / (M²(b-a)²))`, for losses given
/// by `dist` with values in `[lower, upper]`.
pub fn verify_vector_deviation(
    dist: &DiscreteVectorDistribution,
    lower: f64,
    upper: f64,
    n: usize,
    xi: &[f64],
    trials: usize,
    seed: u64,
) -> Result<DominanceVerdict> {
    verify_vector_deviation_with(dist, lower, upper, n, xi, trials, seed, Method::Auto)
}

/// [`verify_vector_deviation`] with an explicit computation method.
#[allow(clippy::too_many_arguments)]
pub fn verify_vector_deviation_with(
    dist: &DiscreteVectorDistribution,
    lower: f64,
    upper: f64,
    n: usize,
    xi: &[f64],
    trials: usize,
    seed: u64,
    method: Method,
) -> Result<DominanceVerdict> {
    let m = dist.task_count();
    check_xi(xi, m)?;
    if !(upper > lower) {
        return Err(Error::config("loss", "need lower < upper"));
    }
    if dist.support.iter().flatten().any(|&x| x < lower || x > upper) {
        return Err(Error::Domain("outcomes fall outside the loss range".into()));
    }
    let mu = dist.mean();
    let lhs = mean_event_prob(dist, n, trials, seed, method, |mean| {
        mean.iter().zip(&mu).zip(xi).all(|((a, b), x)| (a - b).abs() > x - BOUNDARY_SLACK)
    })?;
    let range = upper - lower;
    let mm = m as f64;
    let sq: f64 = xi.iter().map(|x| x * x).sum();
    let rhs = 2f64.powi(m as i32) * (-2.0 * n as f64 * sq / (mm * mm * range * range)).exp();
    Ok(DominanceVerdict::new(
        "vector deviation",
        &lhs,
        rhs,
        json!({"task_count": m, "n": n, "xi": xi, "lower": lower, "upper": upper, "trials": trials, "seed": seed}),
    ))
}

/// Simplex-supported deviation: `Pr{|mean - μ| > ξ}` against
/// `2^M exp(-2N Σ ξ_m²)`. Requires `Σ(μ_m + ξ_m) < 1`.
pub fn verify_simplex_deviation(dist: &DiscreteVectorDistribution, n: usize, xi: &[f64], trials: usize, seed: u64) -> Result<DominanceVerdict> {
    let m = dist.task_count();
    check_xi(xi, m)?;
    if !dist.is_simplex() {
        return Err(Error::Precondition("outcomes must lie in the simplex".into()));
    }
    let mu = dist.mean();
    let budget: f64 = mu.iter().zip(xi).map(|(a, b)| a + b).sum();
    if budget >= 1.0 {
        return Err(Error::Precondition(format!("Σ(μ + ξ) = {budget} is not below 1")));
    }
    let lhs = mean_event_prob(dist, n, trials, seed, Method::Auto, |mean| {
        mean.iter().zip(&mu).zip(xi).all(|((a, b), x)| (a - b).abs() > x - BOUNDARY_SLACK)
    })?;
    let sq: f64 = xi.iter().map(|x| x * x).sum();
    let rhs = 2f64.powi(m as i32) * (-2.0 * n as f64 * sq).exp();
    Ok(DominanceVerdict::new(
        "simplex deviation",
        &lhs,
        rhs,
        json!({"task_count": m, "n": n, "xi": xi, "mu": mu, "trials": trials, "seed": seed}),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChebyshevVariant {
    /// Moment term `Σ_{i∈S} E s_i² / Σ_{i∈S} ξ_i²`.
    Plain,
    /// Moment term `(Σ_{i∈S} E s_i² + 2 Σ_{i<j∈S} E s_i s_j) / (Σ_{i∈S} ξ_i)²`.
    Covariance,
}

/// `ψ(S) = Pr{s_i > ξ_i, i ∈ S | s_i ≤ ξ_i, i ∉ S} - Pr{s_i > ξ_i, i ∈ S}`.
///
/// When the conditioning event has probability zero the conditional term
/// is taken as 0, the smallest admissible value.
pub fn psi(dist: &DiscreteVectorDistribution, mask: u32, xi: &[f64]) -> f64 {
    let in_s = |i: usize| mask & (1 << i) != 0;
    let a = |v: &[f64]| v.iter().zip(xi).enumerate().filter(|&(i, _)| in_s(i)).all(|(_, (s, x))| s > x);
    let b = |v: &[f64]| v.iter().zip(xi).enumerate().filter(|&(i, _)| !in_s(i)).all(|(_, (s, x))| s <= x);
    let pa = dist.prob(a);
    let pb = dist.prob(b);
    let pab = dist.prob(|v| a(v) && b(v));
    let cond = if pb > 0.0 { pab / pb } else { 0.0 };
    cond - pa
}

/// Exact vector Chebyshev check: `Pr{s ≰ ξ}` against
/// `Σ_S (ψ(S) + moment term)`.
pub fn verify_vector_chebyshev(dist: &DiscreteVectorDistribution, xi: &[f64], variant: ChebyshevVariant) -> Result<DominanceVerdict> {
    let m = dist.task_count();
    check_xi(xi, m)?;
    if m > 12 {
        return Err(Error::Budget {
            what: "task groups".into(),
            size: m,
            limit: 12,
        });
    }
    let lhs = dist.prob(|v| v.iter().zip(xi).any(|(s, x)| s > x));
    let second: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| dist.prob_weighted(|v| v[i] * v[j])).collect())
        .collect();
    let mut rhs = 0.0;
    let mut terms = Vec::new();
    for mask in 1u32..(1 << m) {
        let idx: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        let moment = match variant {
            ChebyshevVariant::Plain => {
                idx.iter().map(|&i| second[i][i]).sum::<f64>() / idx.iter().map(|&i| xi[i] * xi[i]).sum::<f64>()
            }
            ChebyshevVariant::Covariance => {
                let mut num: f64 = idx.iter().map(|&i| second[i][i]).sum();
                for (a, &i) in idx.iter().enumerate() {
                    for &j in &idx[a + 1..] {
                        num += 2.0 * second[i][j];
                    }
                }
                num / idx.iter().map(|&i| xi[i]).sum::<f64>().powi(2)
            }
        };
        let p = psi(dist, mask, xi);
        rhs += p + moment;
        terms.push(json!({"group": mask, "psi": p, "moment": moment}));
    }
    Ok(DominanceVerdict::new(
        match variant {
            ChebyshevVariant::Plain => "vector chebyshev",
            ChebyshevVariant::Covariance => "vector chebyshev (covariance)",
        },
        &McEstimate::exact(lhs),
        rhs,
        json!({"task_count": m, "xi": xi, "terms": terms}),
    ))
}

impl DiscreteVectorDistribution {
    /// `E g(s)`.
    pub fn prob_weighted(&self, g: impl Fn(&[f64]) -> f64) -> f64 {
        self.support.iter().zip(&self.probs).map(|(v, p)| p * g(v)).sum()
    }
}

/// Small-deviation check: `Pr{Σ_n s_n ≤ Nξ}` (every component) against
/// `2^M Pr{s ≤ 2ξ}`.
pub fn verify_small_deviation(dist: &DiscreteVectorDistribution, n: usize, xi: &[f64], trials: usize, seed: u64) -> Result<DominanceVerdict> {
    let m = dist.task_count();
    check_xi(xi, m)?;
    // sample mean ≤ ξ, with rounding slack on the side of a larger LHS
    let lhs = mean_event_prob(dist, n, trials, seed, Method::Auto, |mean| mean.iter().zip(xi).all(|(a, x)| *a <= x + BOUNDARY_SLACK))?;
    let small = dist.prob(|v| v.iter().zip(xi).all(|(s, x)| *s <= 2.0 * x));
    let rhs = 2f64.powi(m as i32) * small;
    Ok(DominanceVerdict::new(
        "small deviation",
        &lhs,
        rhs,
        json!({"task_count": m, "n": n, "xi": xi, "pr_small": small, "trials": trials, "seed": seed}),
    ))
}

/// Joint event frequencies of the per-task candidate-sup discrepancy
/// `d_m = max_f |E f_m - E_N f_m|`, all on the same outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointSupEstimate {
    /// Some component exceeds its threshold (`d ≰ ξ`).
    pub any: McEstimate,
    /// Every component exceeds its threshold (`d > ξ`).
    pub all: McEstimate,
    /// No component exceeds its threshold (`d ≤ ξ`).
    pub none: McEstimate,
}

/// Per-stream support tables of a discrete family: probabilities and the
/// loss of every candidate component at every support point.
struct StreamTables {
    members: Vec<usize>,
    probs: Vec<f64>,
    /// `losses[k][c][s]` for member `k`, candidate `c`, support point `s`.
    losses: Vec<Vec<Vec<f64>>>,
}

fn stream_tables(family: &TaskFamily, class: &ConstrainedClass, candidates: &CandidateSet) -> Option<Vec<StreamTables>> {
    if !family.is_discrete() {
        return None;
    }
    Some(
        family
            .streams()
            .into_iter()
            .map(|(root, members)| {
                let probs = family.stream_support_probs(root).expect("discrete");
                let losses = members
                    .iter()
                    .map(|&m| {
                        let sup = family.discrete_support(m).expect("discrete");
                        candidates
                            .components(m)
                            .iter()
                            .map(|w| sup.iter().map(|(x, y, _)| class.loss.value(dot(x, w), *y)).collect())
                            .collect()
                    })
                    .collect();
                StreamTables { members, probs, losses }
            })
            .collect(),
    )
}

/// Empirical means `[k][c]` of a count vector over a stream's support.
fn stream_means(t: &StreamTables, counts: &[usize], n: usize) -> Vec<Vec<f64>> {
    t.losses
        .iter()
        .map(|per_c| {
            per_c
                .iter()
                .map(|l| l.iter().zip(counts).map(|(v, &c)| v * c as f64).sum::<f64>() / n as f64)
                .collect()
        })
        .collect()
}

/// Distribution over exceed masks (bit `m` set when task `m` exceeds),
/// convolved across independent streams.
fn convolve_masks(per_stream: Vec<Vec<(u32, f64)>>) -> Vec<(u32, f64)> {
    let mut acc: Vec<(u32, f64)> = vec![(0, 1.0)];
    for dist in per_stream {
        let mut next: Vec<(u32, f64)> = Vec::new();
        for &(a, pa) in &acc {
            for &(b, pb) in &dist {
                let key = a | b;
                match next.iter_mut().find(|(k, _)| *k == key) {
                    Some((_, p)) => *p += pa * pb,
                    None => next.push((key, pa * pb)),
                }
            }
        }
        acc = next;
    }
    acc
}

fn accumulate(dist: &mut Vec<(u32, f64)>, key: u32, p: f64) {
    match dist.iter_mut().find(|(k, _)| *k == key) {
        Some((_, q)) => *q += p,
        None => dist.push((key, p)),
    }
}

fn joint_from_masks(masks: &[(u32, f64)], full: u32) -> JointSupEstimate {
    let none: f64 = masks.iter().filter(|(k, _)| *k == 0).map(|(_, p)| p).sum();
    let all: f64 = masks.iter().filter(|(k, _)| *k == full).map(|(_, p)| p).sum();
    JointSupEstimate {
        any: McEstimate::exact(1.0 - none),
        all: McEstimate::exact(all),
        none: McEstimate::exact(none),
    }
}

fn check_shapes(family: &TaskFamily, candidates: &CandidateSet, risks: &RiskTable, xi: &[f64]) -> Result<()> {
    family.validate()?;
    let m = family.task_count();
    check_xi(xi, m)?;
    if candidates.is_empty() || candidates.task_count() != m || candidates.dim() != family.input_dim {
        return Err(Error::config("candidates", "candidate shape does not match the task family"));
    }
    if risks.risks.len() != m || risks.risks.iter().any(|r| r.len() != candidates.len()) {
        return Err(Error::config("risks", "risk table does not match the candidates"));
    }
    Ok(())
}

/// Per-task candidate-sup discrepancies `max_f |E f_m - E_N f_m|` of one
/// `n`-sample dataset drawn from `rng`.
pub fn sup_discrepancies(
    family: &TaskFamily,
    class: &ConstrainedClass,
    candidates: &CandidateSet,
    risks: &RiskTable,
    n: usize,
    rng: &mut Rng,
) -> Vec<f64> {
    let data = family.draw_dataset(n, rng);
    let losses = LossMatrix::new(&data, class, candidates);
    (0..family.task_count())
        .map(|m| {
            losses.means[m]
                .iter()
                .zip(&risks.risks[m])
                .map(|(e_n, e)| (e - e_n).abs())
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Joint probabilities of large candidate-sup discrepancies over fresh
/// `n`-sample datasets.
///
/// Exact for discrete noise-free families with exact risks when every
/// stream has at most [`EXACT_OUTCOME_LIMIT`] count vectors; Monte-Carlo
/// over `trials` datasets otherwise.
#[allow(clippy::too_many_arguments)]
pub fn mc_joint_sup_prob(
    family: &TaskFamily,
    class: &ConstrainedClass,
    candidates: &CandidateSet,
    risks: &RiskTable,
    n: usize,
    xi: &[f64],
    trials: usize,
    seed: u64,
) -> Result<JointSupEstimate> {
    check_shapes(family, candidates, risks, xi)?;
    if n == 0 {
        return Err(Error::config("n", "sample size must be positive"));
    }
    let m = family.task_count();
    let full = ((1u64 << m) - 1) as u32;
    if risks.exact {
        if let Some(tables) = stream_tables(family, class, candidates) {
            if tables.iter().all(|t| composition_count(n, t.probs.len()) <= EXACT_OUTCOME_LIMIT) {
                let per_stream = tables
                    .iter()
                    .map(|t| {
                        let mut dist = Vec::new();
                        for_each_composition(n, &t.probs, |counts, p| {
                            let means = stream_means(t, counts, n);
                            let mut key = 0u32;
                            for (k, &mt) in t.members.iter().enumerate() {
                                let d = means[k].iter().zip(&risks.risks[mt]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                                if d > xi[mt] {
                                    key |= 1 << mt;
                                }
                            }
                            accumulate(&mut dist, key, p);
                        });
                        dist
                    })
                    .collect();
                return Ok(joint_from_masks(&convolve_masks(per_stream), full));
            }
        }
    }
    if trials == 0 {
        return Err(Error::config("trials", "Monte-Carlo path needs trials > 0"));
    }
    let mut rng = seed::rng(seed::derive_seed(seed, streams::TRIALS));
    let (mut any, mut all) = (0u64, 0u64);
    for _ in 0..trials {
        let d = sup_discrepancies(family, class, candidates, risks, n, &mut rng);
        let exceed = d.iter().zip(xi).filter(|(a, b)| a > b).count();
        any += (exceed > 0) as u64;
        all += (exceed == m) as u64;
    }
    let t = trials as u64;
    Ok(JointSupEstimate {
        any: McEstimate::from_counts(any, t, seed),
        all: McEstimate::from_counts(all, t, seed),
        none: McEstimate::from_counts(t - any, t, seed),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theorem {
    Thm1,
    Thm2,
    Thm3,
    Thm4,
}

impl Theorem {
    pub const ALL: [Theorem; 4] = [Theorem::Thm1, Theorem::Thm2, Theorem::Thm3, Theorem::Thm4];

    pub fn name(&self) -> &'static str {
        match self {
            Theorem::Thm1 => "thm1",
            Theorem::Thm2 => "thm2",
            Theorem::Thm3 => "thm3",
            Theorem::Thm4 => "thm4",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "status", content = "detail")]
pub enum CheckStatus {
    Held,
    Violated,
    /// The theorem's sample-size condition is not verifiably met.
    Withheld(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremCheck {
    pub theorem: Theorem,
    pub status: CheckStatus,
    pub vacuous: bool,
    pub verdict: Option<DominanceVerdict>,
}

impl TheoremCheck {
    pub fn counts_as_evidence(&self) -> bool {
        self.status == CheckStatus::Held && !self.vacuous
    }
}

/// Compares the joint probabilities against a bound report.
///
/// The large-deviation and covariance bounds are checked against `d > ξ`,
/// the small-deviation bound against `d ≤ ξ` and the consistency bound
/// against `d ≰ ξ`. Verdicts are withheld when the theorem's sample-size
/// condition is not satisfied.
pub fn verify_theorem_bounds(report: &BoundReport, lhs: &JointSupEstimate, which: Theorem) -> TheoremCheck {
    let (prob, rhs, condition) = match which {
        Theorem::Thm1 => (&lhs.all, &report.thm1_rhs, Some(report.thm1_condition)),
        Theorem::Thm2 => (&lhs.none, &report.thm2_rhs, None),
        Theorem::Thm3 => (&lhs.any, &report.thm3_rhs, Some(report.thm3_condition)),
        Theorem::Thm4 => (&lhs.all, &report.thm4_rhs, Some(report.thm4_condition)),
    };
    let rhs = match rhs {
        Quantity::Value(v) => v.max(0.0),
        Quantity::Inconclusive(reason) => {
            return TheoremCheck {
                theorem: which,
                status: CheckStatus::Withheld(format!("right-hand side inconclusive: {reason}")),
                vacuous: false,
                verdict: None,
            }
        }
    };
    let params = json!({
        "task_count": report.task_count,
        "n": report.n,
        "xi": report.xi,
        "gamma": report.gamma,
        "gamma2": report.gamma2,
        "upsilon": report.upsilon.value(),
        "upsilon2": report.upsilon2.value(),
        "condition": condition,
        "lhs_seed": prob.seed,
    });
    let verdict = DominanceVerdict::new(which.name(), prob, rhs, params);
    let vacuous = rhs >= 1.0;
    let status = match condition {
        Some(Condition::Satisfied(_)) | None => {
            if verdict.holds {
                CheckStatus::Held
            } else {
                CheckStatus::Violated
            }
        }
        Some(Condition::Violated(n_min)) => CheckStatus::Withheld(format!("condition unmet: N = {} < {n_min:.2}", report.n)),
        Some(Condition::Unsatisfiable) => CheckStatus::Withheld("condition unsatisfiable: 1 - 2Υ ≤ 0".into()),
        Some(Condition::Inconclusive) => CheckStatus::Withheld("condition inconclusive: missing estimates".into()),
    };
    TheoremCheck {
        theorem: which,
        status,
        vacuous,
        verdict: Some(verdict),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetrizationVariant {
    Plain,
    Covariance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizationCheck {
    pub variant: SymmetrizationVariant,
    /// `Pr{d > ξ}` on the real sample.
    pub lhs: McEstimate,
    /// `Pr{max_f |E'_N f - E_N f| > ξ/2}` against a ghost sample.
    pub ghost: McEstimate,
    pub condition: Condition,
    pub status: CheckStatus,
    /// Verdict on `lhs ≤ 2 · ghost`; `None` when withheld.
    pub verdict: Option<DominanceVerdict>,
}

/// Symmetrization check `Pr{d > ξ} ≤ 2 Pr{d' > ξ/2}`, where `d'` compares
/// the sample against an independent ghost sample of the same size.
///
/// `condition` is the matching sample-size condition (plain: `Γ, Υ`;
/// covariance: `Γ₂, Υ + Υ₂`); the verdict is only asserted when it is
/// satisfied.
#[allow(clippy::too_many_arguments)]
pub fn verify_symmetrization(
    family: &TaskFamily,
    class: &ConstrainedClass,
    candidates: &CandidateSet,
    risks: &RiskTable,
    n: usize,
    xi: &[f64],
    trials: usize,
    seed: u64,
    condition: Condition,
    variant: SymmetrizationVariant,
) -> Result<SymmetrizationCheck> {
    check_shapes(family, candidates, risks, xi)?;
    let m = family.task_count();
    let full = ((1u64 << m) - 1) as u32;
    let half: Vec<f64> = xi.iter().map(|x| x / 2.0).collect();
    let exact = stream_tables(family, class, candidates)
            .filter(|_| risks.exact)
            .filter(|tables| tables.iter().all(|t| composition_count(n, t.probs.len()).powi(2) <= EXACT_OUTCOME_LIMIT))
            .map(|tables| {
                let mut real = Vec::new();
                let mut ghost = Vec::new();
                for t in &tables {
                    let mut outcomes: Vec<(Vec<Vec<f64>>, f64)> = Vec::new();
                    for_each_composition(n, &t.probs, |counts, p| outcomes.push((stream_means(t, counts, n), p)));
                    let mut dr = Vec::new();
                    let mut dg = Vec::new();
                    for (means, p) in &outcomes {
                        let mut key = 0u32;
                        for (k, &mt) in t.members.iter().enumerate() {
                            let d = means[k].iter().zip(&risks.risks[mt]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                            if d > xi[mt] {
                                key |= 1 << mt;
                            }
                        }
                        accumulate(&mut dr, key, *p);
                        for (ghost_means, q) in &outcomes {
                            let mut key = 0u32;
                            for (k, &mt) in t.members.iter().enumerate() {
                                let d = means[k].iter().zip(&ghost_means[k]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                                if d > half[mt] {
                                    key |= 1 << mt;
                                }
                            }
                            accumulate(&mut dg, key, p * q);
                        }
                    }
                    real.push(dr);
                    ghost.push(dg);
                }
                (joint_from_masks(&convolve_masks(real), full).all, joint_from_masks(&convolve_masks(ghost), full).all)
            });
    let (lhs, ghost) = match exact {
        Some(pair) => pair,
        None => {
            if trials == 0 {
                return Err(Error::config("trials", "Monte-Carlo path needs trials > 0"));
            }
            let mut rng = seed::rng(seed::derive_seed(seed, streams::GHOST));
            let (mut hits, mut ghost_hits) = (0u64, 0u64);
            for _ in 0..trials {
                let data = family.draw_dataset(n, &mut rng);
                let ghost = family.draw_dataset(n, &mut rng);
                let lm = LossMatrix::new(&data, class, candidates);
                let gm = LossMatrix::new(&ghost, class, candidates);
                let mut real_all = true;
                let mut ghost_all = true;
                for t in 0..m {
                    let d = lm.means[t].iter().zip(&risks.risks[t]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    let g = lm.means[t].iter().zip(&gm.means[t]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    real_all &= d > xi[t];
                    ghost_all &= g > half[t];
                }
                hits += real_all as u64;
                ghost_hits += ghost_all as u64;
            }
            (
                McEstimate::from_counts(hits, trials as u64, seed),
                McEstimate::from_counts(ghost_hits, trials as u64, seed),
            )
        }
    };
    // LHS - 2·ghost carries both sampling errors
    let combined = McEstimate {
        standard_error: (lhs.standard_error.powi(2) + 4.0 * ghost.standard_error.powi(2)).sqrt(),
        exact: lhs.exact && ghost.exact,
        ..lhs
    };
    let params = json!({"task_count": m, "n": n, "xi": xi, "variant": variant, "ghost": ghost.value, "trials": trials, "seed": seed});
    let verdict = DominanceVerdict::new("symmetrization", &combined, 2.0 * ghost.value, params);
    let status = match condition {
        Condition::Satisfied(_) => {
            if verdict.holds {
                CheckStatus::Held
            } else {
                CheckStatus::Violated
            }
        }
        Condition::Violated(n_min) => CheckStatus::Withheld(format!("condition unmet (N = {n} < {n_min:.2})")),
        Condition::Unsatisfiable => CheckStatus::Withheld("condition unsatisfiable (Υ ≥ 1/2)".into()),
        Condition::Inconclusive => CheckStatus::Withheld("condition inconclusive".into()),
    };
    let verdict = if matches!(status, CheckStatus::Withheld(_)) { None } else { Some(verdict) };
    Ok(SymmetrizationCheck {
        variant,
        lhs,
        ghost,
        condition,
        status,
        verdict,
    })
}

/// Appends one JSON object per line.
pub fn write_jsonl<W: Write, T: Serialize>(mut w: W, records: &[T]) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}
