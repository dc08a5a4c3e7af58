//! Weight fitting and uniqueness estimation on honest splits.
//!
//! The estimator has two halves. On the fitting split it solves the
//! regularised simplex least-squares problem for projection weights; on
//! the disjoint evaluation split it records per-point residuals
//! `Y_target - w^T peers` and summarises them as the mean absolute
//! residual (the uniqueness estimate), with a nonparametric bootstrap
//! interval over evaluation points.
//!
//! The fitted weights double as a stochastic routing policy: sending each
//! query to peer `j` with probability `w_j` reproduces the convex
//! surrogate in expectation, which is what a small uniqueness value
//! certifies.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{EcosystemAudit, SampleRole};
use crate::rng::{derive_seed, rng_from_seed};
use crate::simplex::{solve_simplex_ls, QpSolution, SimplexWeights};
use crate::stats::quantile_sorted;
use crate::{Error, Result};

/// Uniqueness estimate over an evaluation split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PierReport {
    /// Fitted projection weights used for every residual.
    pub weights: SimplexWeights,
    /// Per-evaluation-point residuals, in response units.
    pub residuals: Vec<f64>,
    /// Mean absolute residual.
    pub uniqueness: f64,
    /// Percentile bootstrap interval at level `alpha`.
    pub ci_low: f64,
    pub ci_high: f64,
    pub alpha: f64,
    pub n_fit: usize,
    pub n_eval: usize,
}

/// Inputs of the anchor design error bound, all user-supplied: the
/// uniform peer-response norm bound, Lipschitz constants of the scalarised
/// responses, anchor radii, and the weight estimation error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnchorBound {
    pub c_phi: f64,
    pub l_x: f64,
    pub l_theta: f64,
    pub r_x: f64,
    pub r_theta: f64,
    pub weight_error: f64,
    /// `c_phi * weight_error + 2 l_x r_x + 2 l_theta r_theta`.
    pub bound: f64,
}

impl AnchorBound {
    pub fn new(
        c_phi: f64,
        l_x: f64,
        l_theta: f64,
        r_x: f64,
        r_theta: f64,
        weight_error: f64,
    ) -> Self {
        let bound = c_phi * weight_error + 2.0 * l_x * r_x + 2.0 * l_theta * r_theta;
        Self {
            c_phi,
            l_x,
            l_theta,
            r_x,
            r_theta,
            weight_error,
            bound,
        }
    }
}

/// Concentration summary of a routing policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RouterComplexity {
    /// Effective peer count, `1 / sum w_j^2`.
    pub n_eff: f64,
    /// Sum of the `k` largest weights.
    pub top_k_mass: f64,
    pub k: usize,
}

/// A point in input–dose space, for anchor geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub input: Vec<f64>,
    pub dose: f64,
}

impl DesignPoint {
    pub fn new(input: Vec<f64>, dose: f64) -> Self {
        Self { input, dose }
    }

    fn input_distance(&self, other: &Self) -> Result<f64> {
        if self.input.len() != other.input.len() {
            return Err(Error::ShapeMismatch("input dimensions differ".into()));
        }
        Ok(self
            .input
            .iter()
            .zip(&other.input)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}

/// Fits projection weights on the fitting split only, with the ridge
/// weight from the audit's `lambda_m` schedule.
pub fn fit_weights(audit: &EcosystemAudit) -> Result<QpSolution> {
    let a = audit.peer_matrix(SampleRole::Fit);
    let y = audit.target_column(SampleRole::Fit);
    let lambda = audit.config.lambda_for(a.nrows());
    solve_simplex_ls(
        &a,
        &y,
        lambda,
        audit.config.solver_tol,
        audit.config.solver_max_iters,
    )
}

/// Per-point residuals `Y_target - w^T peers` on the evaluation split.
pub fn pier_residuals(audit: &EcosystemAudit, weights: &SimplexWeights) -> Result<Vec<f64>> {
    if weights.len() != audit.peers.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} weights for {} peers",
            weights.len(),
            audit.peers.len()
        )));
    }
    let peers = audit.peer_matrix(SampleRole::Eval);
    let target = audit.target_column(SampleRole::Eval);
    let surrogate = peers * weights.as_vector();
    Ok((target - surrogate).iter().copied().collect())
}

/// Mean absolute residual on the evaluation split (point estimate only).
pub fn uniqueness(audit: &EcosystemAudit, weights: &SimplexWeights) -> Result<f64> {
    let r = pier_residuals(audit, weights)?;
    Ok(r.iter().map(|x| x.abs()).sum::<f64>() / r.len() as f64)
}

fn percentile_interval(stats: &mut [f64], alpha: f64, point: f64) -> (f64, f64) {
    stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = quantile_sorted(stats, alpha / 2.0);
    let hi = quantile_sorted(stats, 1.0 - alpha / 2.0);
    // The interval is widened (almost never in practice) to contain the
    // point estimate, keeping the report invariant ci_low <= U <= ci_high.
    (lo.min(point), hi.max(point))
}

/// Evaluates uniqueness on the evaluation split with a percentile
/// bootstrap over evaluation points, holding the weights fixed.
///
/// Deterministic given `seed`; replicates draw independent child seeds so
/// the parallel reduction is order-free.
pub fn evaluate_pier(
    audit: &EcosystemAudit,
    weights: &SimplexWeights,
    alpha: f64,
    n_boot: usize,
    seed: u64,
) -> Result<PierReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must be in (0,1), got {alpha}")));
    }
    if n_boot < 2 {
        return Err(Error::InvalidInput("n_boot must be at least 2".into()));
    }
    if audit.eval.n_points() == 0 {
        return Err(Error::InsufficientSample("empty evaluation split".into()));
    }
    let residuals = pier_residuals(audit, weights)?;
    let n = residuals.len();
    let point = residuals.iter().map(|r| r.abs()).sum::<f64>() / n as f64;

    let mut stats: Vec<f64> = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_from_seed(derive_seed(seed, b as u64));
            let mut acc = 0.0;
            for _ in 0..n {
                acc += residuals[rng.random_range(0..n)].abs();
            }
            acc / n as f64
        })
        .collect();
    let (ci_low, ci_high) = percentile_interval(&mut stats, alpha, point);

    Ok(PierReport {
        weights: weights.clone(),
        residuals,
        uniqueness: point,
        ci_low,
        ci_high,
        alpha,
        n_fit: audit.fit.n_points(),
        n_eval: n,
    })
}

/// Two-level bootstrap variant: each replicate resamples the fitting split
/// and refits the weights before resampling the evaluation split, folding
/// fit-side uncertainty into the interval. Costs one solve per replicate.
pub fn evaluate_pier_two_level(
    audit: &EcosystemAudit,
    alpha: f64,
    n_boot: usize,
    seed: u64,
) -> Result<PierReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must be in (0,1), got {alpha}")));
    }
    if n_boot < 2 {
        return Err(Error::InvalidInput("n_boot must be at least 2".into()));
    }
    let fitted = fit_weights(audit)?;
    let residuals = pier_residuals(audit, &fitted.weights)?;
    let n = residuals.len();
    let point = residuals.iter().map(|r| r.abs()).sum::<f64>() / n as f64;

    let a_fit = audit.peer_matrix(SampleRole::Fit);
    let y_fit = audit.target_column(SampleRole::Fit);
    let a_eval = audit.peer_matrix(SampleRole::Eval);
    let y_eval = audit.target_column(SampleRole::Eval);
    let m = a_fit.nrows();
    let lambda = audit.config.lambda_for(m);

    let mut stats: Vec<f64> = (0..n_boot)
        .into_par_iter()
        .map(|b| -> Result<f64> {
            let mut rng = rng_from_seed(derive_seed(seed, b as u64));
            let rows: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
            let a_b = nalgebra::DMatrix::from_fn(m, a_fit.ncols(), |r, c| a_fit[(rows[r], c)]);
            let y_b = DVector::from_fn(m, |r, _| y_fit[rows[r]]);
            let sol = match solve_simplex_ls(
                &a_b,
                &y_b,
                lambda,
                audit.config.solver_tol,
                audit.config.solver_max_iters,
            ) {
                Ok(s) => s,
                Err(Error::SolverDidNotConverge { best, .. }) => *best,
                Err(e) => return Err(e),
            };
            let mut acc = 0.0;
            for _ in 0..n {
                let i = rng.random_range(0..n);
                acc += (y_eval[i] - a_eval.row(i).transpose().dot(sol.weights.as_vector())).abs();
            }
            Ok(acc / n as f64)
        })
        .collect::<Result<_>>()?;
    let (ci_low, ci_high) = percentile_interval(&mut stats, alpha, point);

    Ok(PierReport {
        weights: fitted.weights,
        residuals,
        uniqueness: point,
        ci_low,
        ci_high,
        alpha,
        n_fit: m,
        n_eval: n,
    })
}

/// Anchor-based residual estimate with its design error bound.
///
/// `responses_at_anchor` holds the target's response first, then the peer
/// responses in peer order. Fails if the anchor sits outside the declared
/// radii.
pub fn anchor_pier(
    eval_point: &DesignPoint,
    anchor_point: &DesignPoint,
    responses_at_anchor: &[f64],
    weights: &SimplexWeights,
    bound_inputs: &AnchorBound,
) -> Result<(f64, f64)> {
    if responses_at_anchor.len() != weights.len() + 1 {
        return Err(Error::ShapeMismatch(format!(
            "expected target plus {} peer responses, got {}",
            weights.len(),
            responses_at_anchor.len()
        )));
    }
    let dx = eval_point.input_distance(anchor_point)?;
    let dtheta = (eval_point.dose - anchor_point.dose).abs();
    let slack = 1e-12;
    if dx > bound_inputs.r_x + slack || dtheta > bound_inputs.r_theta + slack {
        return Err(Error::AnchorOutOfRange(format!(
            "input distance {dx:.3e} (radius {:.3e}), dose distance {dtheta:.3e} (radius {:.3e})",
            bound_inputs.r_x, bound_inputs.r_theta
        )));
    }
    let target = responses_at_anchor[0];
    let surrogate: f64 = weights
        .as_slice()
        .iter()
        .zip(&responses_at_anchor[1..])
        .map(|(w, r)| w * r)
        .sum();
    Ok((target - surrogate, bound_inputs.bound))
}

/// Samples a peer index from the routing distribution.
pub fn route_index(weights: &SimplexWeights, rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, w) in weights.as_slice().iter().enumerate() {
        acc += w;
        if u < acc {
            return j;
        }
    }
    weights.len() - 1
}

/// Routes one query: returns the response of a peer drawn with probability
/// `w_j`. The expectation over draws is exactly `w^T peer_responses`.
pub fn stochastic_router(
    weights: &SimplexWeights,
    peer_responses: &[f64],
    seed: u64,
) -> Result<f64> {
    if peer_responses.len() != weights.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} responses for {} weights",
            peer_responses.len(),
            weights.len()
        )));
    }
    let mut rng = rng_from_seed(seed);
    Ok(peer_responses[route_index(weights, &mut rng)])
}

/// Hindsight per-example routing: at each point, the error of the peer
/// closest to the target. A large value means no peer covers the target
/// even with per-example selection.
pub fn oracle_router(
    target_responses: &DVector<f64>,
    peer_matrix: &nalgebra::DMatrix<f64>,
) -> Result<(Vec<f64>, f64)> {
    if peer_matrix.nrows() != target_responses.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} target points but {} peer rows",
            target_responses.len(),
            peer_matrix.nrows()
        )));
    }
    if peer_matrix.ncols() == 0 {
        return Err(Error::ShapeMismatch("no peer columns".into()));
    }
    let per_point: Vec<f64> = (0..peer_matrix.nrows())
        .map(|i| {
            (0..peer_matrix.ncols())
                .map(|j| (target_responses[i] - peer_matrix[(i, j)]).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mean = per_point.iter().sum::<f64>() / per_point.len() as f64;
    Ok((per_point, mean))
}

/// Concentration summary of the routing weights.
pub fn router_complexity(weights: &SimplexWeights, k: usize) -> Result<RouterComplexity> {
    if k == 0 || k > weights.len() {
        return Err(Error::InvalidInput(format!(
            "k must be in 1..={}, got {k}",
            weights.len()
        )));
    }
    Ok(RouterComplexity {
        n_eff: weights.effective_support(),
        top_k_mass: weights.top_k_mass(k),
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{model_ids, FitConfig, ResponseMatrix, SamplePoint, SampleRole, SampleSet};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn matrix_from(values: DMatrix<f64>, labels: &[&str], role: SampleRole) -> ResponseMatrix {
        let points = (0..values.nrows())
            .map(|i| SamplePoint::new(format!("x{i}"), i as f64))
            .collect();
        ResponseMatrix::new(
            model_ids(labels).unwrap(),
            SampleSet::new(points, role),
            values,
        )
        .unwrap()
    }

    fn audit_from(
        fit: DMatrix<f64>,
        eval: DMatrix<f64>,
        labels: &[&str],
        target: usize,
    ) -> EcosystemAudit {
        let fitm = matrix_from(fit, labels, SampleRole::Fit);
        let evalm = matrix_from(eval, labels, SampleRole::Eval);
        let peers = fitm
            .models
            .iter()
            .filter(|m| m.index != target)
            .cloned()
            .collect();
        EcosystemAudit::new(
            fitm.models[target].clone(),
            peers,
            fitm,
            evalm,
            FitConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn clone_target_gets_unit_weight_and_zero_pier() {
        // Target identical to one of two peers, noiseless.
        let t = DVector::from_vec(vec![0.3, -0.7, 1.1, 0.2, 0.9, -0.4]);
        let other = DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5, 0.0, 0.3]);
        let fit = DMatrix::from_columns(&[t.clone(), t.clone(), other.clone()]);
        let eval = fit.clone();
        let audit = audit_from(fit, eval, &["target", "clone", "other"], 0);
        let sol = fit_weights(&audit).unwrap();
        assert!(sol.weights.as_slice()[0] >= 1.0 - 1e-6);
        let rep = evaluate_pier(&audit, &sol.weights, 0.1, 50, 9).unwrap();
        assert!(rep.uniqueness <= 1e-6);
        assert!(rep.ci_low <= rep.uniqueness && rep.uniqueness <= rep.ci_high);
    }

    #[test]
    fn single_zero_peer_constant_target() {
        let c = 0.8;
        let fit = DMatrix::from_fn(8, 2, |_, j| if j == 0 { c } else { 0.0 });
        let eval = fit.clone();
        let audit = audit_from(fit, eval, &["target", "zero"], 0);
        let sol = fit_weights(&audit).unwrap();
        // Objective is the mean squared target plus the vanishing ridge.
        let lambda = audit.config.lambda_for(8);
        assert_abs_diff_eq!(sol.objective, c * c + lambda, epsilon = 1e-12);
        let rep = evaluate_pier(&audit, &sol.weights, 0.1, 100, 1).unwrap();
        assert_abs_diff_eq!(rep.uniqueness, c, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_noise_uniqueness_is_amplitude() {
        // Target = peer + eps with eps in {+a, -a} equally, weights = (1).
        let a = 0.25;
        let peer = DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4]);
        let eps = DVector::from_vec(vec![a, -a, a, -a]);
        let eval = DMatrix::from_columns(&[&peer + &eps, peer.clone()]);
        let fit = DMatrix::from_columns(&[peer.clone(), peer.clone()]);
        let audit = audit_from(fit, eval, &["target", "peer"], 0);
        let w = SimplexWeights::vertex(1, 0);
        let rep = evaluate_pier(&audit, &w, 0.1, 64, 3).unwrap();
        assert_abs_diff_eq!(rep.uniqueness, a, epsilon = 1e-15);
    }

    #[test]
    fn bootstrap_requires_two_replicates() {
        let fit = DMatrix::from_element(4, 2, 1.0);
        let audit = audit_from(fit.clone(), fit, &["t", "p"], 0);
        let w = SimplexWeights::vertex(1, 0);
        assert!(evaluate_pier(&audit, &w, 0.1, 1, 0).is_err());
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let fit = DMatrix::from_fn(16, 2, |i, j| ((i * 3 + j) as f64 * 0.37).sin());
        let audit = audit_from(fit.clone(), fit, &["t", "p"], 0);
        let w = SimplexWeights::vertex(1, 0);
        let a = evaluate_pier(&audit, &w, 0.1, 200, 7).unwrap();
        let b = evaluate_pier(&audit, &w, 0.1, 200, 7).unwrap();
        assert_eq!(a.ci_low, b.ci_low);
        assert_eq!(a.ci_high, b.ci_high);
    }

    #[test]
    fn anchor_bound_formula() {
        let b = AnchorBound::new(1.0, 1.0, 1.0, 0.1, 0.1, 0.0);
        assert_abs_diff_eq!(b.bound, 0.4, epsilon = 1e-15);
    }

    #[test]
    fn anchor_exact_when_anchor_is_eval_point() {
        let p = DesignPoint::new(vec![0.2, 0.4], 0.5);
        let w = SimplexWeights::uniform(2);
        let bound = AnchorBound::new(1.0, 1.0, 1.0, 0.0, 0.0, 0.0);
        let (est, bd) = anchor_pier(&p, &p.clone(), &[1.0, 0.4, 0.8], &w, &bound).unwrap();
        assert_abs_diff_eq!(est, 1.0 - 0.6, epsilon = 1e-15);
        assert_eq!(bd, 0.0);
    }

    #[test]
    fn anchor_out_of_range_rejected() {
        let e = DesignPoint::new(vec![0.0], 0.0);
        let a = DesignPoint::new(vec![0.3], 0.0);
        let w = SimplexWeights::uniform(1);
        let bound = AnchorBound::new(1.0, 1.0, 1.0, 0.1, 0.1, 0.0);
        let err = anchor_pier(&e, &a, &[1.0, 0.0], &w, &bound).unwrap_err();
        assert!(matches!(err, Error::AnchorOutOfRange(_)));
    }

    #[test]
    fn router_degenerate_weights_always_first_peer() {
        let w = SimplexWeights::vertex(2, 0);
        for seed in 0..20 {
            assert_eq!(stochastic_router(&w, &[5.0, -1.0], seed).unwrap(), 5.0);
        }
    }

    #[test]
    fn router_mean_matches_mixture() {
        let w = SimplexWeights::uniform(2);
        let n = 100_000;
        let mut acc = 0.0;
        let mut rng = rng_from_seed(11);
        for _ in 0..n {
            acc += [0.0, 1.0][route_index(&w, &mut rng)];
        }
        let mean = acc / n as f64;
        // Bernoulli(1/2): three sigma is about 0.0047 at n = 1e5.
        assert!((mean - 0.5).abs() < 3.0 * 0.5 / (n as f64).sqrt());
    }

    #[test]
    fn oracle_router_picks_closest_peer() {
        let target = DVector::from_vec(vec![1.0]);
        let peers = DMatrix::from_row_slice(1, 2, &[0.2, 0.9]);
        let (per, mean) = oracle_router(&target, &peers).unwrap();
        assert_abs_diff_eq!(per[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(mean, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn complexity_uniform_and_vertex() {
        let u = SimplexWeights::uniform(4);
        let c = router_complexity(&u, 3).unwrap();
        assert_abs_diff_eq!(c.n_eff, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.top_k_mass, 0.75, epsilon = 1e-12);
        let v = SimplexWeights::vertex(3, 0);
        let c = router_complexity(&v, 3).unwrap();
        assert_abs_diff_eq!(c.n_eff, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.top_k_mass, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn complexity_example_values() {
        let w = SimplexWeights::new(DVector::from_vec(vec![0.5, 0.3, 0.2])).unwrap();
        let c = router_complexity(&w, 2).unwrap();
        assert_abs_diff_eq!(c.n_eff, 1.0 / 0.38, epsilon = 1e-12);
        assert_abs_diff_eq!(c.top_k_mass, 0.8, epsilon = 1e-12);
    }
}
