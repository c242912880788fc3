//! Estimation of every bound ingredient for one `(N, ξ)` cell.

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundInputs, GroupTable, PairTable, Thm3Inputs};
use crate::complexity::{cpuen, CpuenResult};
use crate::error::{Error, Result};
use crate::estimate::McEstimate;
use crate::group::{group_masks, GroupIndex, MAX_ENUMERATED_TASKS};
use crate::hypothesis::{CandidateSet, ConstrainedClass};
use crate::relatedness::{
    cluster_tasks, estimate_cov, estimate_eddm, estimate_oddm_with, exact_cov, exact_oddm, expected_risk_table,
    small_prob_factor, Clustering, CovEstimate, DependenceEstimate, EddmConfig, RiskTable, MIN_COV_TRIALS,
};
use crate::seed::{self, streams};
use crate::task::{generate_tasks, TaskFamily};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimationSettings {
    /// Monte-Carlo trials for dependence measures and probability factors.
    pub trials: usize,
    /// Trials for covariance estimates.
    pub cov_trials: usize,
    /// Sample-set draws maximized over by the entropy proxies.
    pub cover_draws: usize,
    /// Exponent of the empirical metric.
    pub metric_p: f64,
    /// Reference sample for expected risks of non-discrete families.
    pub reference_size: usize,
    /// Largest joint support enumerated for exact dependence measures.
    pub exact_limit: usize,
    pub seed: u64,
}

impl Default for EstimationSettings {
    fn default() -> Self {
        EstimationSettings {
            trials: 10_000,
            cov_trials: 10_000,
            cover_draws: 4,
            metric_p: 1.0,
            reference_size: 20_000,
            exact_limit: 1 << 16,
            seed: 0,
        }
    }
}

impl EstimationSettings {
    pub fn validate(&self) -> Result<()> {
        if self.trials < crate::relatedness::MIN_DEPENDENCE_TRIALS {
            return Err(Error::config("trials", format!("need at least {}", crate::relatedness::MIN_DEPENDENCE_TRIALS)));
        }
        if self.cov_trials < MIN_COV_TRIALS {
            return Err(Error::config("cov_trials", format!("need at least {MIN_COV_TRIALS}")));
        }
        if self.cover_draws == 0 {
            return Err(Error::config("cover_draws", "need at least one draw"));
        }
        if !(self.metric_p >= 1.0) {
            return Err(Error::config("metric_p", "must be at least 1"));
        }
        Ok(())
    }
}

/// Everything estimated for one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDetail {
    pub group: String,
    pub mask: u32,
    pub oddm: DependenceEstimate,
    /// Absent when `N < 2` leaves no proper subsample.
    pub eddm: Option<DependenceEstimate>,
    pub cpuen: CpuenResult,
    /// `max_f Pr{s_λ ≤ 2ξ_λ, λ ∉ S}`.
    pub complement_factor: McEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDetail {
    pub i: usize,
    pub j: usize,
    pub estimate: CovEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub inputs: BoundInputs,
    pub risks: RiskTable,
    pub groups: Vec<GroupDetail>,
    pub pairs: Vec<PairDetail>,
    pub small_prob: McEstimate,
    /// Original task index behind each estimated task (identity unless
    /// clustered).
    pub tasks: Vec<usize>,
    pub clustering: Option<Clustering>,
}

impl Estimates {
    /// EDDM per group at this cell's N, in group order.
    pub fn eddm_values(&self) -> Vec<(String, Option<f64>, f64)> {
        self.groups
            .iter()
            .map(|g| match &g.eddm {
                Some(e) => (g.group.clone(), e.value, e.standard_error.unwrap_or(0.0)),
                None => (g.group.clone(), None, 0.0),
            })
            .collect()
    }
}

/// Estimates every bound ingredient at sample size `n` and thresholds `xi`.
///
/// Expected risks are exact for discrete noise-free families; ODDM and
/// covariances are then computed exactly too when the joint support fits
/// `settings.exact_limit`. Entropy proxies use radius `ξ/8` on `2N`-sample
/// sets.
pub fn estimate_bound_inputs(
    family: &TaskFamily,
    class: &ConstrainedClass,
    candidates: &CandidateSet,
    n: usize,
    xi: &[f64],
    settings: &EstimationSettings,
) -> Result<Estimates> {
    estimate_inner(family, class, candidates, n, xi, settings, (0..family.task_count()).collect(), None)
}

/// Like [`estimate_bound_inputs`], but groups range over `k` cluster
/// representatives chosen by k-means on per-task least-squares weights
/// (fit on an `n`-sample draw). Needed once the task count exceeds the
/// group enumeration budget.
pub fn estimate_clustered(
    family: &TaskFamily,
    class: &ConstrainedClass,
    candidates: &CandidateSet,
    n: usize,
    xi: &[f64],
    k: usize,
    settings: &EstimationSettings,
) -> Result<Estimates> {
    if xi.len() != family.task_count() {
        return Err(Error::config("xi", "need one threshold per task"));
    }
    let data = generate_tasks(family, n.max(family.input_dim + 1), seed::derive_seed(settings.seed, streams::KMEANS))?;
    let clustering = cluster_tasks(&data, k, settings.seed)?;
    let mut reps = clustering.representatives.clone();
    reps.sort_unstable();
    let sub_family = family.restrict(&reps)?;
    let sub_candidates = candidates.project_tasks(&reps);
    let sub_xi: Vec<f64> = reps.iter().map(|&m| xi[m]).collect();
    let mut est = estimate_inner(&sub_family, class, &sub_candidates, n, &sub_xi, settings, reps, Some(clustering))?;
    est.inputs.clustered = true;
    Ok(est)
}

#[allow(clippy::too_many_arguments)]
fn estimate_inner(
    family: &TaskFamily,
    class: &ConstrainedClass,
    candidates: &CandidateSet,
    n: usize,
    xi: &[f64],
    settings: &EstimationSettings,
    tasks: Vec<usize>,
    clustering: Option<Clustering>,
) -> Result<Estimates> {
    settings.validate()?;
    family.validate()?;
    class.validate()?;
    let m = family.task_count();
    if m > MAX_ENUMERATED_TASKS {
        return Err(Error::Budget {
            what: "task groups".into(),
            size: m,
            limit: MAX_ENUMERATED_TASKS,
        });
    }
    if n == 0 {
        return Err(Error::config("n", "sample size must be positive"));
    }
    if xi.len() != m || xi.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::config("xi", format!("need {m} positive thresholds")));
    }
    let seed = settings.seed;
    let risks = expected_risk_table(family, class, candidates, settings.reference_size, seed)?;
    let cover_xi: Vec<f64> = xi.iter().map(|x| x / 8.0).collect();

    let mut oddm = GroupTable::empty(m)?;
    let mut eddm = GroupTable::empty(m)?;
    let mut ln_cover = GroupTable::empty(m)?;
    let mut complement = GroupTable::empty(m)?;
    let mut groups = Vec::new();
    for mask in group_masks(m)? {
        let group = GroupIndex::from_mask(m, mask)?;
        let o = match exact_oddm(family, class, candidates, &risks, &group, xi, settings.exact_limit)? {
            Some(e) => e,
            None => estimate_oddm_with(family, class, candidates, &risks, &group, xi, settings.trials, seed)?,
        };
        if let Some(v) = o.value {
            oddm.set(mask, v, o.standard_error.unwrap_or(0.0));
        }
        let e = if n >= 2 {
            let cfg = EddmConfig::half(n, xi.to_vec());
            let est = estimate_eddm(family, class, candidates, &group, &cfg, n, settings.trials, seed)?;
            if let Some(v) = est.value {
                eddm.set(mask, v, est.standard_error.unwrap_or(0.0));
            }
            Some(est)
        } else {
            None
        };
        let cover = cpuen(candidates, family, class, group.members(), &cover_xi, 2 * n, settings.cover_draws, settings.metric_p, seed)?;
        ln_cover.set(mask, cover.value, 0.0);
        let factor = small_prob_factor(family, class, candidates, &risks, &group.complement(), xi, settings.trials, seed)?;
        complement.set(mask, factor.value, factor.standard_error);
        groups.push(GroupDetail {
            group: group.to_string(),
            mask,
            oddm: o,
            eddm: e,
            cpuen: cover,
            complement_factor: factor,
        });
    }

    let mut covariance = PairTable::empty(m);
    let mut pairs = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let est = match exact_cov(family, class, candidates, i, j) {
                Some(c) => c,
                None => estimate_cov(family, class, candidates, i, j, settings.cov_trials, seed)?,
            };
            covariance.set(i, j, est.value);
            pairs.push(PairDetail { i, j, estimate: est });
        }
    }
    let all: Vec<usize> = (0..m).collect();
    let small_prob = small_prob_factor(family, class, candidates, &risks, &all, xi, settings.trials, seed)?;
    let (lower, upper) = (class.loss.lower, class.loss.upper);
    let inputs = BoundInputs {
        n,
        lower,
        upper,
        xi: xi.to_vec(),
        oddm,
        covariance,
        ln_cover: ln_cover.clone(),
        thm3: Thm3Inputs {
            n,
            xi: xi.to_vec(),
            range: upper - lower,
            eddm,
            ln_cover,
            complement_factor: complement,
        },
        small_prob: Some(small_prob.value),
        clustered: false,
    };
    Ok(Estimates {
        inputs,
        risks,
        groups,
        pairs,
        small_prob,
        tasks,
        clustering,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::evaluate;
    use crate::hypothesis::{sample_class, Coupling};
    use crate::task::{LossSpec, SyntheticFamily};

    fn quick() -> EstimationSettings {
        EstimationSettings {
            trials: 500,
            cov_trials: 1_000,
            cover_draws: 2,
            reference_size: 2_000,
            seed: 5,
            ..EstimationSettings::default()
        }
    }

    #[test]
    fn single_task_reduces() {
        let fam = TaskFamily::discrete(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.3, 0.7], vec![vec![0.0, 0.0]]).unwrap();
        let class = ConstrainedClass::new(1.0, Coupling::NormBall, 1.0, LossSpec::unit()).unwrap();
        let cands = sample_class(&class, 1, 2, 6, 1).unwrap();
        let est = estimate_bound_inputs(&fam, &class, &cands, 20, &[0.5], &quick()).unwrap();
        assert_eq!(est.inputs.oddm.get(1), Some(0.0));
        assert!(est.groups[0].oddm.standard_error == Some(0.0));
        let r = evaluate(&est.inputs).unwrap();
        assert_eq!(r.upsilon.value(), Some(0.0));
        assert!(est.risks.exact);
    }

    #[test]
    fn synthetic_family_fills_every_group() {
        let fam = SyntheticFamily {
            task_count: 3,
            input_dim: 2,
            relatedness: 0.5,
            noise_std: 0.1,
            seed: 2,
            weight_scale: 0.5,
            mean_shift: 0.0,
            input_scale: 1.0,
        }
        .build()
        .unwrap();
        let class = ConstrainedClass::new(1.0, Coupling::MeanCoupled, 0.5, LossSpec::unit()).unwrap();
        let cands = sample_class(&class, 3, 2, 5, 1).unwrap();
        let est = estimate_bound_inputs(&fam, &class, &cands, 30, &[0.3, 0.3, 0.3], &quick()).unwrap();
        assert_eq!(est.groups.len(), 7);
        assert!(est.inputs.thm3.ln_cover.missing().is_empty());
        assert!(est.inputs.covariance.get(0, 2).is_some());
        assert_eq!(est.inputs.thm3.complement_factor.get(7), Some(1.0));
        let again = estimate_bound_inputs(&fam, &class, &cands, 30, &[0.3, 0.3, 0.3], &quick()).unwrap();
        assert_eq!(est, again);
        evaluate(&est.inputs).unwrap();
    }

    #[test]
    fn clustering_reduces_the_group_count() {
        let fam = SyntheticFamily {
            task_count: 14,
            input_dim: 2,
            relatedness: 0.9,
            noise_std: 0.1,
            seed: 3,
            weight_scale: 0.5,
            mean_shift: 0.0,
            input_scale: 1.0,
        }
        .build()
        .unwrap();
        let class = ConstrainedClass::new(1.0, Coupling::MeanCoupled, 0.5, LossSpec::unit()).unwrap();
        let cands = sample_class(&class, 14, 2, 4, 1).unwrap();
        let xi = vec![0.3; 14];
        assert!(matches!(estimate_bound_inputs(&fam, &class, &cands, 20, &xi, &quick()), Err(Error::Budget { .. })));
        let est = estimate_clustered(&fam, &class, &cands, 20, &xi, 3, &quick()).unwrap();
        assert_eq!(est.tasks.len(), 3);
        assert_eq!(est.groups.len(), 7);
        assert!(evaluate(&est.inputs).unwrap().clustered);
    }
}
