//! End-to-end experiment drivers shared by the CLI and the acceptance
//! suite: the active-vs-passive query-budget comparison and the bootstrap
//! coverage study.

use nalgebra::DVector;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::active::{
    passive_audit_baseline, random_orthogonal_design, required_repetitions, run_noisy_audit,
    AuditVerdict, ComplexityEstimate, LinearEcosystem,
};
use crate::disco::{evaluate_pier, fit_weights};
use crate::model::{EcosystemAudit, FitConfig, SampleRole};
use crate::rng::{derive_seed, derive_seed2, rng_from_seed};
use crate::synth::{make_linear_coefficients, sample_responses, TargetKind};
use crate::{Error, Result};

/// Parameters of the paired-hypothesis synthetic family used by the
/// query-budget experiments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActiveVsPassiveSpec {
    pub d: usize,
    pub n_models: usize,
    pub gamma: f64,
    pub sigma: f64,
    pub delta: f64,
    pub constant_c: f64,
    /// Monte-Carlo trials per hypothesis per budget point.
    pub trials: usize,
    /// Error level both arms must reach (per hypothesis).
    pub target_error: f64,
    pub max_repetitions: usize,
    pub max_queries: usize,
    pub seed: u64,
}

impl Default for ActiveVsPassiveSpec {
    fn default() -> Self {
        Self {
            d: 5,
            n_models: 6,
            gamma: 1.0,
            sigma: 0.5,
            delta: 0.05,
            constant_c: 64.0,
            trials: 400,
            target_error: 0.05,
            max_repetitions: 512,
            max_queries: 4096,
            seed: 0,
        }
    }
}

/// Error rates of one arm at one query budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BudgetErrorRow {
    /// Queries per model at this point.
    pub queries_per_model: usize,
    pub error_h0: f64,
    pub error_h1: f64,
}

/// Outcome of the active-vs-passive comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActiveVsPassiveReport {
    pub spec: ActiveVsPassiveSpec,
    /// Repetition budget from the sample-complexity formula, and the
    /// misclassification rates measured at it.
    pub planned: ComplexityEstimate,
    pub planned_error_h0: f64,
    pub planned_error_h1: f64,
    /// Smallest repetition count reaching the target error on both
    /// hypotheses.
    pub minimal_r_active: usize,
    pub minimal_queries_active: usize,
    pub minimal_queries_passive: usize,
    /// Passive queries divided by active queries at matched error.
    pub reduction_ratio: f64,
    pub active_curve: Vec<BudgetErrorRow>,
    pub passive_curve: Vec<BudgetErrorRow>,
}

fn trial_ecosystem(
    d: usize,
    n_models: usize,
    kind: TargetKind,
    sigma: f64,
    trial_seed: u64,
) -> Result<LinearEcosystem> {
    let (betas, _, _) = make_linear_coefficients(d, n_models, kind, derive_seed(trial_seed, 1))?;
    let features = random_orthogonal_design(d, derive_seed(trial_seed, 2));
    LinearEcosystem::new(features, betas, 0, sigma)
}

/// Misclassification rates of the active protocol with `repetitions`
/// queries per design point, over fresh paired ecosystems: in-hull
/// targets under the null, margin-`gamma` targets under the alternative.
pub fn active_error_rates(
    d: usize,
    n_models: usize,
    gamma: f64,
    sigma: f64,
    repetitions: usize,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let errs: Vec<(u32, u32)> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(u32, u32)> {
            let s0 = derive_seed2(seed, 0, t as u64);
            let eco0 = trial_ecosystem(d, n_models, TargetKind::InHull, sigma, s0)?;
            let dec0 = run_noisy_audit(&eco0, gamma, repetitions, derive_seed(s0, 3))?;
            let e0 = (dec0.verdict == AuditVerdict::Unique) as u32;

            let s1 = derive_seed2(seed, 1, t as u64);
            let eco1 = trial_ecosystem(d, n_models, TargetKind::Margin(gamma), sigma, s1)?;
            let dec1 = run_noisy_audit(&eco1, gamma, repetitions, derive_seed(s1, 3))?;
            let e1 = (dec1.verdict == AuditVerdict::NonUnique) as u32;
            Ok((e0, e1))
        })
        .collect::<Result<_>>()?;
    let (sum0, sum1) = errs
        .iter()
        .fold((0u32, 0u32), |(a, b), &(x, y)| (a + x, b + y));
    Ok((sum0 as f64 / trials as f64, sum1 as f64 / trials as f64))
}

/// Same family, passive arm: `n_queries` isotropic Gaussian design points
/// per model, one query each.
pub fn passive_error_rates(
    d: usize,
    n_models: usize,
    gamma: f64,
    sigma: f64,
    n_queries: usize,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let errs: Vec<(u32, u32)> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(u32, u32)> {
            let s0 = derive_seed2(seed, 0, t as u64);
            let eco0 = trial_ecosystem(d, n_models, TargetKind::InHull, sigma, s0)?;
            let dec0 = passive_audit_baseline(&eco0, gamma, n_queries, derive_seed(s0, 4))?;
            let e0 = (dec0.verdict == AuditVerdict::Unique) as u32;

            let s1 = derive_seed2(seed, 1, t as u64);
            let eco1 = trial_ecosystem(d, n_models, TargetKind::Margin(gamma), sigma, s1)?;
            let dec1 = passive_audit_baseline(&eco1, gamma, n_queries, derive_seed(s1, 4))?;
            let e1 = (dec1.verdict == AuditVerdict::NonUnique) as u32;
            Ok((e0, e1))
        })
        .collect::<Result<_>>()?;
    let (sum0, sum1) = errs
        .iter()
        .fold((0u32, 0u32), |(a, b), &(x, y)| (a + x, b + y));
    Ok((sum0 as f64 / trials as f64, sum1 as f64 / trials as f64))
}

/// Scans repetitions upward until both error rates reach `target_error`.
/// Returns the minimal count and the measured curve. Trials share seeds
/// across budgets (common random numbers), keeping the scan stable.
pub fn minimal_active_repetitions(
    spec: &ActiveVsPassiveSpec,
    gamma: f64,
) -> Result<(usize, Vec<BudgetErrorRow>)> {
    let mut curve = Vec::new();
    for r in 1..=spec.max_repetitions {
        let (e0, e1) = active_error_rates(
            spec.d,
            spec.n_models,
            gamma,
            spec.sigma,
            r,
            spec.trials,
            spec.seed,
        )?;
        curve.push(BudgetErrorRow {
            queries_per_model: spec.d * r,
            error_h0: e0,
            error_h1: e1,
        });
        if e0 <= spec.target_error && e1 <= spec.target_error {
            return Ok((r, curve));
        }
    }
    Err(Error::InvalidInput(format!(
        "active arm did not reach {} error within {} repetitions",
        spec.target_error, spec.max_repetitions
    )))
}

/// Scans the passive query budget upward until both error rates reach the
/// target.
pub fn minimal_passive_queries(
    spec: &ActiveVsPassiveSpec,
    gamma: f64,
) -> Result<(usize, Vec<BudgetErrorRow>)> {
    let mut curve = Vec::new();
    let mut q = spec.d;
    while q <= spec.max_queries {
        let (e0, e1) = passive_error_rates(
            spec.d,
            spec.n_models,
            gamma,
            spec.sigma,
            q,
            spec.trials,
            spec.seed,
        )?;
        curve.push(BudgetErrorRow {
            queries_per_model: q,
            error_h0: e0,
            error_h1: e1,
        });
        if e0 <= spec.target_error && e1 <= spec.target_error {
            return Ok((q, curve));
        }
        q += 1;
    }
    Err(Error::InvalidInput(format!(
        "passive arm did not reach {} error within {} queries",
        spec.target_error, spec.max_queries
    )))
}

/// Runs the full comparison: plans the active budget from the complexity
/// formula, verifies its error rates, then measures the minimal budget of
/// both arms at the target error and their ratio.
pub fn run_active_vs_passive(spec: &ActiveVsPassiveSpec) -> Result<ActiveVsPassiveReport> {
    let planned = required_repetitions(
        spec.sigma,
        spec.gamma,
        spec.n_models,
        spec.d,
        spec.delta,
        spec.constant_c,
    )?;
    let (planned_error_h0, planned_error_h1) = active_error_rates(
        spec.d,
        spec.n_models,
        spec.gamma,
        spec.sigma,
        planned.r_required,
        spec.trials,
        derive_seed(spec.seed, 0xA11),
    )?;
    let (minimal_r_active, active_curve) = minimal_active_repetitions(spec, spec.gamma)?;
    let (minimal_queries_passive, passive_curve) = minimal_passive_queries(spec, spec.gamma)?;
    let minimal_queries_active = spec.d * minimal_r_active;
    Ok(ActiveVsPassiveReport {
        spec: spec.clone(),
        planned,
        planned_error_h0,
        planned_error_h1,
        minimal_r_active,
        minimal_queries_active,
        minimal_queries_passive,
        reduction_ratio: minimal_queries_passive as f64 / minimal_queries_active as f64,
        active_curve,
        passive_curve,
    })
}

/// Parameters of the bootstrap coverage study: one fixed synthetic
/// ecosystem, repeatedly refit and re-evaluated on fresh samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageSpec {
    pub d: usize,
    pub n_models: usize,
    /// Coefficient-space margin of the fixed target.
    pub margin: f64,
    /// Response noise added to every logged response.
    pub sigma: f64,
    pub n_fit: usize,
    pub n_eval: usize,
    pub alpha: f64,
    pub n_boot: usize,
    pub replications: usize,
    /// Fresh evaluation draws per replication for the Monte-Carlo
    /// population uniqueness.
    pub population_draws: usize,
    pub seed: u64,
}

impl Default for CoverageSpec {
    fn default() -> Self {
        Self {
            d: 5,
            n_models: 5,
            margin: 0.5,
            sigma: 0.1,
            n_fit: 512,
            n_eval: 512,
            alpha: 0.10,
            n_boot: 1000,
            replications: 200,
            population_draws: 1_000_000,
            seed: 0,
        }
    }
}

/// Coverage of the nominal bootstrap intervals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageReport {
    pub spec: CoverageSpec,
    pub hits: usize,
    pub coverage: f64,
    pub nominal: f64,
    pub mean_ci_width: f64,
}

/// For each replication: fresh fit sample -> fitted weights -> fresh eval
/// sample -> bootstrap interval; the interval is scored against the
/// Monte-Carlo population uniqueness of those same weights, computed from
/// `population_draws` fresh evaluation draws.
pub fn run_bootstrap_coverage(spec: &CoverageSpec) -> Result<CoverageReport> {
    if spec.replications == 0 || spec.population_draws == 0 {
        return Err(Error::InvalidInput(
            "replications and population_draws must be positive".into(),
        ));
    }
    let (betas, _, _) = make_linear_coefficients(
        spec.d,
        spec.n_models,
        TargetKind::Margin(spec.margin),
        derive_seed(spec.seed, 0xC0),
    )?;
    let labels: Vec<String> = std::iter::once("target".to_string())
        .chain((1..spec.n_models).map(|j| format!("peer-{j:02}")))
        .collect();
    let peer_betas = betas.columns(1, spec.n_models - 1).into_owned();
    let target_beta = betas.column(0).into_owned();

    let results: Vec<(bool, f64)> = (0..spec.replications)
        .into_par_iter()
        .map(|rep| -> Result<(bool, f64)> {
            let rep_seed = derive_seed(spec.seed, 1_000 + rep as u64);
            let fit = sample_responses(
                &betas,
                spec.n_fit,
                spec.sigma,
                "fit",
                SampleRole::Fit,
                &labels,
                derive_seed(rep_seed, 1),
            )?;
            let eval = sample_responses(
                &betas,
                spec.n_eval,
                spec.sigma,
                "eval",
                SampleRole::Eval,
                &labels,
                derive_seed(rep_seed, 2),
            )?;
            let target = fit.models[0].clone();
            let peers = fit.models[1..].to_vec();
            let audit = EcosystemAudit::new(target, peers, fit, eval, FitConfig::default())?;
            let sol = fit_weights(&audit)?;
            let report = evaluate_pier(
                &audit,
                &sol.weights,
                spec.alpha,
                spec.n_boot,
                derive_seed(rep_seed, 3),
            )?;

            // Monte-Carlo population uniqueness for these fitted weights.
            let w = sol.weights.as_vector();
            let z: DVector<f64> = &target_beta - &peer_betas * w;
            let mut rng = rng_from_seed(derive_seed(rep_seed, 4));
            let normal = Normal::new(0.0, 1.0).unwrap();
            let mut acc = 0.0;
            for _ in 0..spec.population_draws {
                let mut signal = 0.0;
                for zi in z.iter() {
                    signal += zi * normal.sample(&mut rng);
                }
                let mut noise = 0.0;
                if spec.sigma > 0.0 {
                    noise = spec.sigma * normal.sample(&mut rng);
                    for wj in w.iter() {
                        noise -= wj * spec.sigma * normal.sample(&mut rng);
                    }
                }
                acc += (signal + noise).abs();
            }
            let population = acc / spec.population_draws as f64;
            let hit = report.ci_low <= population && population <= report.ci_high;
            Ok((hit, report.ci_high - report.ci_low))
        })
        .collect::<Result<_>>()?;

    let hits = results.iter().filter(|(h, _)| *h).count();
    let mean_ci_width =
        results.iter().map(|(_, w)| w).sum::<f64>() / spec.replications as f64;
    Ok(CoverageReport {
        spec: spec.clone(),
        hits,
        coverage: hits as f64 / spec.replications as f64,
        nominal: 1.0 - spec.alpha,
        mean_ci_width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn active_error_rates_drop_with_budget() {
        let (e0a, e1a) = active_error_rates(3, 4, 1.0, 0.8, 1, 60, 5).unwrap();
        let (e0b, e1b) = active_error_rates(3, 4, 1.0, 0.8, 32, 60, 5).unwrap();
        assert!(e0b + e1b <= e0a + e1a);
        assert!(e0b <= 0.1 && e1b <= 0.1);
    }

    #[test]
    fn coverage_small_smoke() {
        let spec = CoverageSpec {
            n_fit: 128,
            n_eval: 128,
            n_boot: 200,
            replications: 20,
            population_draws: 20_000,
            ..CoverageSpec::default()
        };
        let report = run_bootstrap_coverage(&spec).unwrap();
        assert!(report.coverage >= 0.6, "coverage {}", report.coverage);
    }
}
