use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rmtl_core::bounds::{consistency_trend, validity_check, Consistency, Suitability, TrendPoint, ValidityReport};
use rmtl_core::seed::{derive_path, derive_seed, streams};
use rmtl_core::verify::SymmetrizationVariant;
use rmtl_core::{
    estimate_bound_inputs, estimate_clustered, evaluate_bounds, generate_tasks, mc_joint_sup_prob, sample_class, solve_rmtl,
    verify_symmetrization, verify_theorem_bounds, BoundReport, CandidateSet, CheckStatus, HypothesisVector,
    JointSupEstimate, Provenance, TaskFamily, TheoremCheck,
};

use crate::config::ExperimentConfig;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellKey {
    pub n: usize,
    pub xi_index: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub objective: f64,
    pub per_task_risks: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub oddm: Option<f64>,
    pub oddm_standard_error: Option<f64>,
    pub oddm_exact: bool,
    pub eddm: Option<f64>,
    pub eddm_standard_error: Option<f64>,
    pub ln_cpuen: f64,
    pub complement_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizationSummary {
    pub variant: SymmetrizationVariant,
    pub lhs: f64,
    pub ghost: f64,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub n: usize,
    pub xi_index: usize,
    pub xi: Vec<f64>,
    pub seed: u64,
    pub cell_seed: u64,
    pub candidate_count: usize,
    pub solver: Option<SolverSummary>,
    /// Original indices of the tasks the groups range over.
    pub tasks: Vec<usize>,
    pub groups: Vec<GroupSummary>,
    pub report: BoundReport,
    pub joint: Option<JointSupEstimate>,
    pub checks: Vec<TheoremCheck>,
    pub symmetrization: Vec<SymmetrizationSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesVerdict {
    pub xi_index: usize,
    pub seed: u64,
    pub validity: ValidityReport,
    pub consistency: Consistency,
}

/// Seed of one `(N, ξ, seed)` cell.
pub fn cell_seed(key: &CellKey) -> u64 {
    derive_path(key.seed, &[key.n as u64, key.xi_index as u64])
}

fn build_candidates(cfg: &ExperimentConfig, family: &TaskFamily, key: &CellKey, cs: u64) -> Result<(CandidateSet, Option<SolverSummary>), CliError> {
    let class = &cfg.class;
    let m = family.task_count();
    let mut set = CandidateSet::empty();
    for rows in &cfg.candidates.explicit {
        let h = HypothesisVector::from_rows(rows.clone())?;
        set.push(class, h, Provenance::Imported)?;
    }
    let mut summary = None;
    if cfg.candidates.include_solution {
        let data = generate_tasks(family, key.n, derive_seed(cs, streams::DATA))?;
        let solver = rmtl_core::SolverConfig {
            seed: derive_seed(cs, streams::SOLVER_RESTART),
            ..cfg.solver.clone()
        };
        let sol = solve_rmtl(&data, class, &solver)?;
        summary = Some(SolverSummary {
            objective: sol.objective,
            per_task_risks: sol.per_task_risks.clone(),
            iterations: sol.iterations,
            converged: sol.converged,
        });
        set.push(class, sol.solution, Provenance::SolverPath)?;
    }
    let room = cfg.candidates.count.saturating_sub(set.len());
    if room > 0 {
        let extra = sample_class(class, m, family.input_dim, room, derive_seed(cs, streams::CLASS_SAMPLE))?;
        for h in extra.members() {
            set.push(class, h.clone(), Provenance::RandomSample)?;
        }
    }
    Ok((set, summary))
}

pub fn run_cell(cfg: &ExperimentConfig, family: &TaskFamily, key: CellKey) -> Result<CellResult, CliError> {
    let cs = cell_seed(&key);
    let xi = cfg.xi[key.xi_index].expand(family.task_count());
    let (cands, solver) = build_candidates(cfg, family, &key, cs)?;
    let settings = rmtl_core::EstimationSettings {
        seed: cs,
        ..cfg.estimation.clone()
    };
    let est = match cfg.cluster_k {
        Some(k) => estimate_clustered(family, &cfg.class, &cands, key.n, &xi, k, &settings)?,
        None => estimate_bound_inputs(family, &cfg.class, &cands, key.n, &xi, &settings)?,
    };
    let report = evaluate_bounds(&est.inputs)?;
    let groups = est
        .groups
        .iter()
        .map(|g| GroupSummary {
            group: g.group.clone(),
            oddm: g.oddm.value,
            oddm_standard_error: g.oddm.standard_error,
            oddm_exact: g.oddm.per_candidate.is_empty(),
            eddm: g.eddm.as_ref().and_then(|e| e.value),
            eddm_standard_error: g.eddm.as_ref().and_then(|e| e.standard_error),
            ln_cpuen: g.cpuen.value,
            complement_factor: g.complement_factor.value,
        })
        .collect();
    let verify_seed = derive_seed(cs, streams::ORACLE);
    let mut checks = Vec::new();
    let mut joint = None;
    let mut symmetrization = Vec::new();
    if report.clustered {
        for &t in &cfg.theorems {
            checks.push(TheoremCheck {
                theorem: t,
                status: CheckStatus::Withheld("clustered approximation: bounds cover representatives only".into()),
                vacuous: false,
                verdict: None,
            });
        }
    } else {
        let lhs = mc_joint_sup_prob(family, &cfg.class, &cands, &est.risks, key.n, &xi, cfg.verify_trials, verify_seed)?;
        for &t in &cfg.theorems {
            checks.push(verify_theorem_bounds(&report, &lhs, t));
        }
        joint = Some(lhs);
        if cfg.symmetrization {
            let plain = (report.thm1_condition, SymmetrizationVariant::Plain);
            let cov = (report.thm4_condition, SymmetrizationVariant::Covariance);
            for (condition, variant) in [plain, cov] {
                let s = verify_symmetrization(
                    family,
                    &cfg.class,
                    &cands,
                    &est.risks,
                    key.n,
                    &xi,
                    cfg.verify_trials,
                    derive_seed(verify_seed, streams::GHOST),
                    condition,
                    variant,
                )?;
                symmetrization.push(SymmetrizationSummary {
                    variant,
                    lhs: s.lhs.value,
                    ghost: s.ghost.value,
                    status: s.status,
                });
            }
        }
    }
    Ok(CellResult {
        n: key.n,
        xi_index: key.xi_index,
        xi,
        seed: key.seed,
        cell_seed: cs,
        candidate_count: cands.len(),
        solver,
        tasks: est.tasks.clone(),
        groups,
        report,
        joint,
        checks,
        symmetrization,
    })
}

/// Cells in output order: seed, then ξ, then N.
pub fn cell_keys(cfg: &ExperimentConfig) -> Vec<CellKey> {
    let mut keys = Vec::new();
    for &seed in &cfg.seeds {
        for xi_index in 0..cfg.xi.len() {
            for &n in &cfg.n_values {
                keys.push(CellKey { n, xi_index, seed });
            }
        }
    }
    keys
}

/// Runs every cell, in parallel, and returns them in [`cell_keys`] order.
pub fn run_cells(cfg: &ExperimentConfig, family: &TaskFamily) -> Result<Vec<CellResult>, CliError> {
    cell_keys(cfg).into_par_iter().map(|k| run_cell(cfg, family, k)).collect()
}

/// Validity and consistency verdicts of each `(ξ, seed)` series over N.
pub fn series_verdicts(cells: &[CellResult]) -> Vec<SeriesVerdict> {
    let mut keys: Vec<(usize, u64)> = Vec::new();
    for c in cells {
        if !keys.contains(&(c.xi_index, c.seed)) {
            keys.push((c.xi_index, c.seed));
        }
    }
    keys.into_iter()
        .map(|(xi_index, seed)| {
            let series: Vec<&CellResult> = cells.iter().filter(|c| c.xi_index == xi_index && c.seed == seed).collect();
            let last = series.last().expect("nonempty series");
            let group_count = last.groups.len();
            let mut eddm = Vec::new();
            let mut named = Vec::new();
            let mut covers = Vec::new();
            for g in 0..group_count {
                let points: Vec<TrendPoint> = series
                    .iter()
                    .map(|c| TrendPoint {
                        n: c.n,
                        value: c.groups[g].eddm,
                        standard_error: c.groups[g].eddm_standard_error.unwrap_or(0.0),
                    })
                    .collect();
                named.push((last.groups[g].group.clone(), points.clone()));
                eddm.push(points);
                covers.push(series.iter().map(|c| (c.n, c.groups[g].ln_cpuen)).collect::<Vec<_>>());
            }
            let upsilon = last.report.upsilon.value().map(|u| (u, last.report.upsilon_standard_error.unwrap_or(0.0)));
            SeriesVerdict {
                xi_index,
                seed,
                validity: validity_check(upsilon, &named),
                consistency: consistency_trend(&eddm, &covers),
            }
        })
        .collect()
}

/// Worst validity verdict across series.
pub fn overall_validity(series: &[SeriesVerdict]) -> Suitability {
    let mut out = Suitability::Suitable;
    for s in series {
        match s.validity.verdict {
            Suitability::Unsuitable => return Suitability::Unsuitable,
            Suitability::Inconclusive => out = Suitability::Inconclusive,
            Suitability::Suitable => {}
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub held: usize,
    pub violated: usize,
    pub withheld: usize,
    pub vacuous: usize,
}

pub fn tally(cells: &[CellResult]) -> Tally {
    let mut t = Tally::default();
    for check in cells.iter().flat_map(|c| &c.checks) {
        match check.status {
            CheckStatus::Held => t.held += 1,
            CheckStatus::Violated => t.violated += 1,
            CheckStatus::Withheld(_) => t.withheld += 1,
        }
        t.vacuous += (check.vacuous && check.status == CheckStatus::Held) as usize;
    }
    for s in cells.iter().flat_map(|c| &c.symmetrization) {
        if s.status == CheckStatus::Violated {
            t.violated += 1;
        }
    }
    t
}

