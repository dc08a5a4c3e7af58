//! Ecosystem-level decisions: router substitution impact and greedy
//! pruning with consolidation curves and tail-risk tracking.
//!
//! System error is the mean, over every original model, of that model's
//! MAE against the labels: surviving models answer for themselves,
//! removed models answer through a convex router rebuilt from the current
//! survivors at every step (so earlier substitutions keep degrading as
//! their supporting peers disappear).

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::disco::fit_weights;
use crate::model::{EcosystemAudit, FitConfig, ModelId, ResponseMatrix, SampleRole};
use crate::rng::{derive_seed, rng_from_seed};
use crate::simplex::SimplexWeights;
use crate::stats::{mean_abs_error, quantile};
use crate::{Error, Result};

/// Error metric for substitution decisions. MAE is the built-in choice;
/// the enum is the extension point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorMetric {
    Mae,
}

/// Effect of replacing the target with its convex router.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubstitutionResult {
    pub target: ModelId,
    pub router_weights: SimplexWeights,
    /// `error(router) - error(target)` on the evaluation split; negative
    /// means the router beats the target it replaces.
    pub impact: f64,
    pub metric: ErrorMetric,
}

/// Fits the router on the fit split and scores the swap on the eval split.
pub fn substitution_impact(
    audit: &EcosystemAudit,
    labels_eval: &[f64],
) -> Result<SubstitutionResult> {
    if labels_eval.len() != audit.eval.n_points() {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for {} eval points",
            labels_eval.len(),
            audit.eval.n_points()
        )));
    }
    let sol = match fit_weights(audit) {
        Ok(s) => s,
        Err(Error::SolverDidNotConverge { best, .. }) => *best,
        Err(e) => return Err(e),
    };
    let router: DVector<f64> = audit.peer_matrix(SampleRole::Eval) * sol.weights.as_vector();
    let target = audit.target_column(SampleRole::Eval);
    let impact = mean_abs_error(router.as_slice(), labels_eval)
        - mean_abs_error(target.as_slice(), labels_eval);
    Ok(SubstitutionResult {
        target: audit.target.clone(),
        router_weights: sol.weights,
        impact,
        metric: ErrorMetric::Mae,
    })
}

/// Which model the greedy step removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrunePolicy {
    /// Remove the survivor with the smallest audited uniqueness.
    PierGuided,
    /// Remove a uniformly random survivor.
    Random,
    /// Remove the survivor with the worst standalone error (lowest skill),
    /// ignoring substitution penalties.
    UtilityOnly,
    /// Remove the survivor whose true replacement penalty is smallest
    /// (label access; evaluation-only reference policy).
    OraclePenalty,
}

/// Split, solver and tail-band settings for pruning.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PruneConfig {
    pub fit_fraction: f64,
    pub fit: FitConfig,
    /// Per-target error band; excess degradation is measured beyond
    /// `(1 + band) * own_error`.
    pub band: f64,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            fit_fraction: 0.5,
            fit: FitConfig::default(),
            band: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    pub fraction_pruned: f64,
    pub system_error_increase: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailPoint {
    pub fraction_pruned: f64,
    /// Largest per-target excess beyond the band among removed models.
    pub worst_excess: f64,
    /// 80th percentile of those excesses.
    pub p80_excess: f64,
}

/// Removal order, consolidation curve and tail metrics of one greedy run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PruneTrace {
    pub order: Vec<ModelId>,
    pub curve: Vec<CurvePoint>,
    pub policy: PrunePolicy,
    pub tail: Vec<TailPoint>,
}

impl PruneTrace {
    /// Area under the consolidation curve (trapezoid over pruned
    /// fraction), for policy comparisons.
    pub fn area_under_curve(&self) -> f64 {
        self.curve
            .windows(2)
            .map(|w| {
                0.5 * (w[1].system_error_increase + w[0].system_error_increase)
                    * (w[1].fraction_pruned - w[0].fraction_pruned)
            })
            .sum()
    }
}

struct PruneState {
    fit: ResponseMatrix,
    eval: ResponseMatrix,
    labels_eval: Vec<f64>,
    own_mae: Vec<f64>,
    config: PruneConfig,
}

impl PruneState {
    /// Convex router for `target` over `support` (model indices), fitted
    /// on the fit split; returns eval-split responses and weights.
    fn router(&self, target: usize, support: &[usize]) -> Result<(SimplexWeights, DVector<f64>)> {
        let a_fit = self.fit.columns(support);
        let y_fit = self.fit.column_of(target);
        let lambda = self.config.fit.lambda_for(a_fit.nrows());
        let sol = match crate::simplex::solve_simplex_ls(
            &a_fit,
            &y_fit,
            lambda,
            self.config.fit.solver_tol,
            self.config.fit.solver_max_iters,
        ) {
            Ok(s) => s,
            Err(Error::SolverDidNotConverge { best, .. }) => *best,
            Err(e) => return Err(e),
        };
        let responses = self.eval.columns(support) * sol.weights.as_vector();
        Ok((sol.weights, responses))
    }

    fn router_mae(&self, target: usize, support: &[usize]) -> Result<f64> {
        let (_, responses) = self.router(target, support)?;
        Ok(mean_abs_error(responses.as_slice(), &self.labels_eval))
    }

    /// Mean over all models: survivors answer for themselves, removed
    /// models answer through routers over the survivors.
    fn system_error(&self, survivors: &[usize], removed: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for &s in survivors {
            total += self.own_mae[s];
        }
        for &r in removed {
            total += self.router_mae(r, survivors)?;
        }
        Ok(total / (survivors.len() + removed.len()) as f64)
    }

    /// Audited uniqueness of `target` against the other survivors.
    fn survivor_uniqueness(&self, target: usize, survivors: &[usize]) -> Result<f64> {
        let peers: Vec<usize> = survivors.iter().copied().filter(|&s| s != target).collect();
        let (_, responses) = self.router(target, &peers)?;
        let target_eval = self.eval.column_of(target);
        Ok(mean_abs_error(responses.as_slice(), target_eval.as_slice()))
    }
}

/// Greedily removes models one at a time under `policy`, substituting
/// every removed model with a convex router over the survivors, until the
/// system error increase would exceed `budget` or one model remains.
///
/// Uniqueness is recomputed against the shrinking survivor set at every
/// step: removing peers can only make the remaining models look more
/// unique, and the knee of the curve depends on that recomputation.
pub fn greedy_prune(
    responses: &ResponseMatrix,
    labels: &[f64],
    policy: PrunePolicy,
    budget: f64,
    config: &PruneConfig,
    seed: u64,
) -> Result<PruneTrace> {
    let n = responses.n_models();
    if n < 3 {
        return Err(Error::InvalidInput("pruning needs at least 3 models".into()));
    }
    if labels.len() != responses.n_points() {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for {} points",
            labels.len(),
            responses.n_points()
        )));
    }
    if budget < 0.0 {
        return Err(Error::InvalidInput("budget must be >= 0".into()));
    }
    let (fit_idx, eval_idx) = crate::model::split_indices(
        responses.n_points(),
        config.fit_fraction,
        derive_seed(seed, 0xF17),
    )?;
    let fit = responses.select_rows(&fit_idx, SampleRole::Fit)?;
    let eval = responses.select_rows(&eval_idx, SampleRole::Eval)?;
    let labels_eval: Vec<f64> = eval_idx.iter().map(|&i| labels[i]).collect();
    let own_mae: Vec<f64> = (0..n)
        .map(|j| mean_abs_error(eval.column_of(j).as_slice(), &labels_eval))
        .collect();
    let state = PruneState {
        fit,
        eval,
        labels_eval,
        own_mae,
        config: config.clone(),
    };

    let mut survivors: Vec<usize> = (0..n).collect();
    let mut removed: Vec<usize> = Vec::new();
    let baseline = state.system_error(&survivors, &removed)?;
    let mut order = Vec::new();
    let mut curve = vec![CurvePoint {
        fraction_pruned: 0.0,
        system_error_increase: 0.0,
    }];
    let mut tail = vec![TailPoint {
        fraction_pruned: 0.0,
        worst_excess: 0.0,
        p80_excess: 0.0,
    }];

    let mut step = 0u64;
    while survivors.len() > 1 {
        let victim = match policy {
            PrunePolicy::PierGuided => {
                let mut best = (f64::INFINITY, survivors[0]);
                for &s in &survivors {
                    let u = state.survivor_uniqueness(s, &survivors)?;
                    if u < best.0 {
                        best = (u, s);
                    }
                }
                best.1
            }
            PrunePolicy::Random => {
                let mut rng = rng_from_seed(derive_seed(seed, step));
                survivors[rng.random_range(0..survivors.len())]
            }
            PrunePolicy::UtilityOnly => {
                let mut best = (f64::NEG_INFINITY, survivors[0]);
                for &s in &survivors {
                    if state.own_mae[s] > best.0 {
                        best = (state.own_mae[s], s);
                    }
                }
                best.1
            }
            PrunePolicy::OraclePenalty => {
                let mut best = (f64::INFINITY, survivors[0]);
                for &s in &survivors {
                    let peers: Vec<usize> =
                        survivors.iter().copied().filter(|&x| x != s).collect();
                    let penalty = state.router_mae(s, &peers)? - state.own_mae[s];
                    if penalty < best.0 {
                        best = (penalty, s);
                    }
                }
                best.1
            }
        };

        let next_survivors: Vec<usize> =
            survivors.iter().copied().filter(|&s| s != victim).collect();
        let mut next_removed = removed.clone();
        next_removed.push(victim);
        let err = state.system_error(&next_survivors, &next_removed)?;
        let increase = err - baseline;
        if increase > budget {
            break;
        }

        survivors = next_survivors;
        removed = next_removed;
        order.push(state.fit.models[victim].clone());
        let fraction = removed.len() as f64 / n as f64;
        curve.push(CurvePoint {
            fraction_pruned: fraction,
            system_error_increase: increase,
        });
        let excesses: Vec<f64> = removed
            .iter()
            .map(|&r| -> Result<f64> {
                let e = state.router_mae(r, &survivors)?
                    - (1.0 + config.band) * state.own_mae[r];
                Ok(e.max(0.0))
            })
            .collect::<Result<_>>()?;
        let worst = excesses.iter().cloned().fold(0.0, f64::max);
        tail.push(TailPoint {
            fraction_pruned: fraction,
            worst_excess: worst,
            p80_excess: quantile(&excesses, 0.8),
        });
        step += 1;
    }

    Ok(PruneTrace {
        order,
        curve,
        policy,
        tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{model_ids, SamplePoint, SampleSet};
    use crate::synth::make_governance_ecosystem;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn simple_matrix(cols: Vec<Vec<f64>>, labels: &[&str]) -> ResponseMatrix {
        let n = cols[0].len();
        let points = (0..n)
            .map(|i| SamplePoint::new(format!("p{i}"), i as f64 / n as f64))
            .collect();
        let values = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        ResponseMatrix::new(
            model_ids(labels).unwrap(),
            SampleSet::new(points, SampleRole::Fit),
            values,
        )
        .unwrap()
    }

    #[test]
    fn impact_zero_when_router_replicates_target() {
        // Peer identical to the target: the router reproduces it exactly.
        let t: Vec<f64> = (0..32).map(|i| (i as f64 * 0.2).sin()).collect();
        let m = simple_matrix(vec![t.clone(), t.clone()], &["t", "p"]);
        let audit =
            EcosystemAudit::from_matrix(&m, "t", &[], 0.5, FitConfig::default()).unwrap();
        let labels: Vec<f64> = audit
            .target_column(SampleRole::Eval)
            .iter()
            .copied()
            .collect();
        let res = substitution_impact(&audit, &labels).unwrap();
        assert_abs_diff_eq!(res.impact, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn impact_positive_when_target_is_truth() {
        // Target equals the labels exactly; peers are worse.
        let truth: Vec<f64> = (0..64).map(|i| (i as f64 * 0.1).cos()).collect();
        let off: Vec<f64> = truth.iter().map(|v| v + 0.5).collect();
        let off2: Vec<f64> = truth.iter().map(|v| v - 0.4).collect();
        let m = simple_matrix(vec![truth.clone(), off, off2], &["t", "p1", "p2"]);
        let audit =
            EcosystemAudit::from_matrix(&m, "t", &[], 0.5, FitConfig::default()).unwrap();
        let (_, eval_idx) =
            crate::model::split_indices(64, 0.5, FitConfig::default().rng_seed).unwrap();
        let labels: Vec<f64> = eval_idx.iter().map(|&i| truth[i]).collect();
        let res = substitution_impact(&audit, &labels).unwrap();
        assert!(res.impact > 0.05);
    }

    #[test]
    fn impact_matches_constructed_errors() {
        // Target sits 0.2 above truth everywhere; the single peer sits
        // 0.15 below: impact = 0.15 - 0.2 = -0.05.
        let truth: Vec<f64> = (0..40).map(|i| i as f64 * 0.01).collect();
        let target: Vec<f64> = truth.iter().map(|v| v + 0.2).collect();
        let peer: Vec<f64> = truth.iter().map(|v| v - 0.15).collect();
        let m = simple_matrix(vec![target, peer], &["t", "p"]);
        let audit =
            EcosystemAudit::from_matrix(&m, "t", &[], 0.5, FitConfig::default()).unwrap();
        let (_, eval_idx) =
            crate::model::split_indices(40, 0.5, FitConfig::default().rng_seed).unwrap();
        let labels: Vec<f64> = eval_idx.iter().map(|&i| truth[i]).collect();
        let res = substitution_impact(&audit, &labels).unwrap();
        assert_abs_diff_eq!(res.impact, -0.05, epsilon = 1e-6);
    }

    #[test]
    fn clone_is_pruned_first_at_no_cost() {
        let eco = make_governance_ecosystem(6, 256, 33).unwrap();
        let trace = greedy_prune(
            &eco.responses,
            &eco.labels,
            PrunePolicy::PierGuided,
            f64::INFINITY,
            &PruneConfig::default(),
            33,
        )
        .unwrap();
        let first = &trace.order[0];
        // Either half of the clone pair is a free removal.
        assert!(first.index == eco.clone_index || first.index == 0);
        assert!(trace.curve[1].system_error_increase.abs() <= 1e-6);
    }

    #[test]
    fn zero_budget_stops_before_costly_step() {
        // All-distinct, high-margin models: the first removal costs more
        // than nothing, so a zero budget prunes nothing.
        let a: Vec<f64> = (0..64).map(|i| (i as f64 * 0.3).sin()).collect();
        let b: Vec<f64> = (0..64).map(|i| (i as f64 * 0.3).cos() * 2.0).collect();
        let c: Vec<f64> = (0..64).map(|i| i as f64 * 0.05 - 1.0).collect();
        let labels: Vec<f64> = a.clone();
        let m = simple_matrix(vec![a, b, c], &["a", "b", "c"]);
        let trace = greedy_prune(
            &m,
            &labels,
            PrunePolicy::PierGuided,
            0.0,
            &PruneConfig::default(),
            1,
        )
        .unwrap();
        assert_eq!(trace.order.len(), 0);
        assert_eq!(trace.curve.len(), 1);
    }

    #[test]
    fn pier_guided_first_pick_is_argmin() {
        // The first victim's uniqueness cannot exceed the median of the
        // initial uniqueness values.
        let eco = make_governance_ecosystem(7, 200, 5).unwrap();
        let config = PruneConfig::default();
        let (fit_idx, eval_idx) = crate::model::split_indices(
            eco.responses.n_points(),
            config.fit_fraction,
            derive_seed(5, 0xF17),
        )
        .unwrap();
        let fit = eco.responses.select_rows(&fit_idx, SampleRole::Fit).unwrap();
        let eval = eco
            .responses
            .select_rows(&eval_idx, SampleRole::Eval)
            .unwrap();
        let labels_eval: Vec<f64> = eval_idx.iter().map(|&i| eco.labels[i]).collect();
        let own_mae: Vec<f64> = (0..7)
            .map(|j| mean_abs_error(eval.column_of(j).as_slice(), &labels_eval))
            .collect();
        let state = PruneState {
            fit,
            eval,
            labels_eval,
            own_mae,
            config: config.clone(),
        };
        let survivors: Vec<usize> = (0..7).collect();
        let us: Vec<f64> = survivors
            .iter()
            .map(|&s| state.survivor_uniqueness(s, &survivors).unwrap())
            .collect();
        let trace = greedy_prune(
            &eco.responses,
            &eco.labels,
            PrunePolicy::PierGuided,
            f64::INFINITY,
            &config,
            5,
        )
        .unwrap();
        let first = trace.order[0].index;
        let median = quantile(&us, 0.5);
        assert!(us[first] <= median + 1e-12);
    }

    #[test]
    fn tail_p80_never_exceeds_worst() {
        let eco = make_governance_ecosystem(6, 200, 8).unwrap();
        for policy in [
            PrunePolicy::PierGuided,
            PrunePolicy::Random,
            PrunePolicy::UtilityOnly,
            PrunePolicy::OraclePenalty,
        ] {
            let trace = greedy_prune(
                &eco.responses,
                &eco.labels,
                policy,
                f64::INFINITY,
                &PruneConfig::default(),
                8,
            )
            .unwrap();
            for t in &trace.tail {
                assert!(t.p80_excess <= t.worst_excess + 1e-12);
                assert!(t.worst_excess >= 0.0);
            }
            // Fractions strictly increase along the curve.
            for w in trace.curve.windows(2) {
                assert!(w[1].fraction_pruned > w[0].fraction_pruned);
            }
        }
    }
}
