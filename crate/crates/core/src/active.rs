//! Active auditing in a local linear structural model.
//!
//! Every model's scalarised response is `phi(x,theta)^T beta_j` for a
//! shared feature map of dimension `d`. Querying all models at `d` design
//! points with invertible feature matrix recovers every coefficient
//! vector, turning the uniqueness question into a convex-hull membership
//! test in coefficient space. With noise, each design point is queried `r`
//! times and the averaged responses are inverted; the empirical hull
//! distance is compared against half the presumed margin.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{derive_seed, rng_from_seed};
use crate::simplex::hull_distance;
use crate::{Error, Result};

/// Ground truth of a linear ecosystem: the design feature matrix, one
/// coefficient column per model, the audited target, and the noise scale.
#[derive(Debug, Clone)]
pub struct LinearEcosystem {
    features: DMatrix<f64>,
    betas: DMatrix<f64>,
    target_index: usize,
    sigma: f64,
    condition_number: f64,
}

impl LinearEcosystem {
    pub fn new(
        features: DMatrix<f64>,
        betas: DMatrix<f64>,
        target_index: usize,
        sigma: f64,
    ) -> Result<Self> {
        let d = features.nrows();
        if features.ncols() != d || d == 0 {
            return Err(Error::ShapeMismatch("feature matrix must be square".into()));
        }
        if betas.nrows() != d {
            return Err(Error::ShapeMismatch(
                "coefficient rows must match feature dimension".into(),
            ));
        }
        if betas.ncols() < 2 {
            return Err(Error::InvalidInput("need a target and at least one peer".into()));
        }
        if target_index >= betas.ncols() {
            return Err(Error::InvalidInput("target index out of range".into()));
        }
        if sigma < 0.0 || !sigma.is_finite() {
            return Err(Error::InvalidInput("sigma must be finite and >= 0".into()));
        }
        if features.iter().chain(betas.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite ecosystem entries".into()));
        }
        let svd = features.clone().svd(false, false);
        let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
        let min_sv = svd
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let condition_number = if min_sv > 0.0 { max_sv / min_sv } else { f64::INFINITY };
        Ok(Self {
            features,
            betas,
            target_index,
            sigma,
            condition_number,
        })
    }

    pub fn dimension(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_models(&self) -> usize {
        self.betas.ncols()
    }

    pub fn target_index(&self) -> usize {
        self.target_index
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn betas(&self) -> &DMatrix<f64> {
        &self.betas
    }

    /// Condition number of the feature matrix, reported at construction.
    pub fn condition_number(&self) -> f64 {
        self.condition_number
    }

    pub fn target_beta(&self) -> DVector<f64> {
        self.betas.column(self.target_index).into_owned()
    }

    pub fn peer_betas(&self) -> DMatrix<f64> {
        let peer_cols: Vec<usize> = (0..self.n_models())
            .filter(|&j| j != self.target_index)
            .collect();
        let mut out = DMatrix::zeros(self.dimension(), peer_cols.len());
        for (k, &j) in peer_cols.iter().enumerate() {
            out.set_column(k, &self.betas.column(j));
        }
        out
    }

    /// Replaces the noise scale.
    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    fn require_invertible(&self) -> Result<()> {
        if !self.condition_number.is_finite() || self.condition_number > 1e12 {
            return Err(Error::SingularDesign);
        }
        Ok(())
    }
}

/// Noise law applied to each query; both share the variance proxy
/// `sigma^2` (the theory only needs sub-Gaussian tails).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseModel {
    Gaussian,
    BoundedUniform,
}

impl NoiseModel {
    fn draw(&self, sigma: f64, rng: &mut impl Rng) -> f64 {
        if sigma == 0.0 {
            return 0.0;
        }
        match self {
            NoiseModel::Gaussian => Normal::new(0.0, sigma).unwrap().sample(rng),
            NoiseModel::BoundedUniform => {
                let half = sigma * 3.0f64.sqrt();
                Uniform::new_inclusive(-half, half).unwrap().sample(rng)
            }
        }
    }
}

/// Outcome of one audit run under the half-margin decision rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditDecision {
    pub verdict: AuditVerdict,
    /// Empirical distance from the target estimate to the peer hull.
    pub dist_hat: f64,
    /// Decision threshold, `gamma_presumed / 2`.
    pub threshold: f64,
    pub gamma_presumed: f64,
    /// Repetitions per design point (1 for the passive baseline, which
    /// queries each sampled point once).
    pub repetitions: usize,
    /// Error budget the repetition count was planned for, when known.
    pub delta: Option<f64>,
    /// Total queries across all models: design points x repetitions x N.
    pub queries_total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuditVerdict {
    Unique,
    NonUnique,
}

impl AuditDecision {
    /// Stamps the planned error budget onto the decision.
    pub fn with_budget(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }
}

/// Query budget needed by the repeated-query protocol.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexityEstimate {
    /// `max(1, ceil(c * sigma^2 / gamma^2 * ln(N d / delta)))`.
    pub r_required: usize,
    pub constant_c: f64,
    pub inputs: ComplexityInputs,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexityInputs {
    pub sigma: f64,
    pub gamma: f64,
    pub n_models: usize,
    pub d: usize,
    pub delta: f64,
}

/// Random orthogonal design scaled to row norm `sqrt(d)`, matching the
/// per-query feature energy of the standard isotropic passive design.
/// Condition number 1, which minimises the inversion noise amplification.
pub fn random_orthogonal_design(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from_seed(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let g = DMatrix::from_fn(d, d, |_, _| normal.sample(&mut rng));
    let q = g.qr().q();
    q * (d as f64).sqrt()
}

/// Noiseless coefficient recovery: one query per model per design point,
/// then a single linear solve per model. Exact up to round-off for any
/// invertible feature matrix.
pub fn recover_noiseless(eco: &LinearEcosystem) -> Result<DMatrix<f64>> {
    if eco.sigma() != 0.0 {
        return Err(Error::InvalidInput(
            "noiseless recovery requires sigma = 0".into(),
        ));
    }
    eco.require_invertible()?;
    let responses = &eco.features * &eco.betas;
    let lu = eco.features.clone().lu();
    lu.solve(&responses).ok_or(Error::SingularDesign)
}

/// True uniqueness margin: Euclidean distance from the target coefficient
/// to the convex hull of peer coefficients. Zero exactly when the target
/// is expressible as a peer mixture.
pub fn true_margin(eco: &LinearEcosystem) -> Result<f64> {
    let (dist, _) = hull_distance(&eco.target_beta(), &eco.peer_betas(), 1e-10)?;
    Ok(dist)
}

/// Repetitions per design point sufficient for misclassification
/// probability `delta` at margin `gamma`.
pub fn required_repetitions(
    sigma: f64,
    gamma: f64,
    n_models: usize,
    d: usize,
    delta: f64,
    constant_c: f64,
) -> Result<ComplexityEstimate> {
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(Error::NonPositiveMargin(gamma));
    }
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidInput("sigma must be finite and >= 0".into()));
    }
    if n_models == 0 || d == 0 {
        return Err(Error::InvalidInput("n_models and d must be positive".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput("delta must lie in (0,1)".into()));
    }
    if constant_c <= 0.0 {
        return Err(Error::InvalidInput("constant_c must be positive".into()));
    }
    let raw = constant_c * sigma * sigma / (gamma * gamma)
        * ((n_models * d) as f64 / delta).ln();
    let r_required = (raw.ceil() as usize).max(1);
    Ok(ComplexityEstimate {
        r_required,
        constant_c,
        inputs: ComplexityInputs {
            sigma,
            gamma,
            n_models,
            d,
            delta,
        },
    })
}

fn estimate_betas_noisy(
    eco: &LinearEcosystem,
    repetitions: usize,
    noise: NoiseModel,
    rng: &mut impl Rng,
) -> Result<DMatrix<f64>> {
    let d = eco.dimension();
    let n = eco.n_models();
    let clean = &eco.features * &eco.betas;
    let mut averaged = DMatrix::zeros(d, n);
    for j in 0..n {
        for l in 0..d {
            let mut acc = 0.0;
            for _ in 0..repetitions {
                acc += clean[(l, j)] + noise.draw(eco.sigma(), rng);
            }
            averaged[(l, j)] = acc / repetitions as f64;
        }
    }
    let lu = eco.features.clone().lu();
    lu.solve(&averaged).ok_or(Error::SingularDesign)
}

fn decide(betas_hat: &DMatrix<f64>, target_index: usize, gamma_presumed: f64) -> Result<(AuditVerdict, f64)> {
    let d = betas_hat.nrows();
    let target = betas_hat.column(target_index).into_owned();
    let peer_cols: Vec<usize> = (0..betas_hat.ncols())
        .filter(|&j| j != target_index)
        .collect();
    let mut peers = DMatrix::zeros(d, peer_cols.len());
    for (k, &j) in peer_cols.iter().enumerate() {
        peers.set_column(k, &betas_hat.column(j));
    }
    let (dist, _) = hull_distance(&target, &peers, 1e-10)?;
    let verdict = if dist > gamma_presumed / 2.0 {
        AuditVerdict::Unique
    } else {
        AuditVerdict::NonUnique
    };
    Ok((verdict, dist))
}

/// Runs the repeated-query protocol: `repetitions` noisy queries per model
/// per design point, averaging and inversion, then the half-margin rule on
/// the empirical hull distance. Deterministic given the seed.
pub fn run_noisy_audit(
    eco: &LinearEcosystem,
    gamma_presumed: f64,
    repetitions: usize,
    seed: u64,
) -> Result<AuditDecision> {
    run_noisy_audit_with(eco, gamma_presumed, repetitions, NoiseModel::Gaussian, seed)
}

/// Same protocol with an explicit noise model.
pub fn run_noisy_audit_with(
    eco: &LinearEcosystem,
    gamma_presumed: f64,
    repetitions: usize,
    noise: NoiseModel,
    seed: u64,
) -> Result<AuditDecision> {
    if repetitions == 0 {
        return Err(Error::InvalidInput("repetitions must be >= 1".into()));
    }
    if gamma_presumed <= 0.0 {
        return Err(Error::NonPositiveMargin(gamma_presumed));
    }
    eco.require_invertible()?;
    let mut rng = rng_from_seed(seed);
    let betas_hat = estimate_betas_noisy(eco, repetitions, noise, &mut rng)?;
    let (verdict, dist_hat) = decide(&betas_hat, eco.target_index(), gamma_presumed)?;
    Ok(AuditDecision {
        verdict,
        dist_hat,
        threshold: gamma_presumed / 2.0,
        gamma_presumed,
        repetitions,
        delta: None,
        queries_total: eco.dimension() * repetitions * eco.n_models(),
    })
}

/// Passive comparison arm: design points drawn i.i.d. from the standard
/// isotropic Gaussian feature distribution, one query each, per-model
/// least-squares fits, then the same half-margin rule. Rank-deficient
/// draws are retried up to 10 times.
pub fn passive_audit_baseline(
    eco: &LinearEcosystem,
    gamma_presumed: f64,
    n_queries: usize,
    seed: u64,
) -> Result<AuditDecision> {
    let d = eco.dimension();
    if n_queries < d {
        return Err(Error::InvalidInput(format!(
            "passive baseline needs at least d = {d} queries, got {n_queries}"
        )));
    }
    if gamma_presumed <= 0.0 {
        return Err(Error::NonPositiveMargin(gamma_presumed));
    }
    let normal = Normal::new(0.0, 1.0).unwrap();
    let attempts = 10;
    for attempt in 0..attempts {
        let mut rng = rng_from_seed(derive_seed(seed, attempt as u64));
        let design = DMatrix::from_fn(n_queries, d, |_, _| normal.sample(&mut rng));
        let svd = design.clone().svd(false, false);
        let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
        let min_sv = svd
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_sv <= 1e-10 * max_sv {
            continue;
        }
        let mut betas_hat = DMatrix::zeros(d, eco.n_models());
        for j in 0..eco.n_models() {
            let clean = &design * eco.betas.column(j);
            let y = DVector::from_fn(n_queries, |i, _| {
                clean[i] + NoiseModel::Gaussian.draw(eco.sigma(), &mut rng)
            });
            let (coeffs, _) = crate::simplex::solve_linear_span_ls(&design, &y)?;
            betas_hat.set_column(j, &coeffs);
        }
        let (verdict, dist_hat) = decide(&betas_hat, eco.target_index(), gamma_presumed)?;
        return Ok(AuditDecision {
            verdict,
            dist_hat,
            threshold: gamma_presumed / 2.0,
            gamma_presumed,
            repetitions: 1,
            delta: None,
            queries_total: n_queries * eco.n_models(),
        });
    }
    Err(Error::RankDeficientDesign(attempts))
}

/// One grid row of the minimax harness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimaxRow {
    pub r: usize,
    pub error_h0: f64,
    pub error_h1: f64,
    /// Sum of type I and type II error rates.
    pub summed_error: f64,
    /// Information-theoretic floor `0.5 * exp(-r gamma^2 / (2 sigma^2))`.
    pub floor: f64,
    /// Monte-Carlo standard error of `summed_error`.
    pub mc_std_error: f64,
}

/// Simulates the one-dimensional test `H0: beta = 0` vs `H1: beta = gamma`
/// with the optimal mean-threshold rule and tabulates the summed error
/// against its lower-bound floor for each repetition count in the grid.
pub fn minimax_harness(
    gamma: f64,
    sigma: f64,
    r_grid: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<MinimaxRow>> {
    if gamma <= 0.0 || sigma <= 0.0 || trials == 0 || r_grid.is_empty() {
        return Err(Error::InvalidInput(
            "minimax harness needs positive gamma, sigma, trials and a non-empty grid".into(),
        ));
    }
    if r_grid.iter().any(|&r| r == 0) {
        return Err(Error::InvalidInput("repetition counts must be >= 1".into()));
    }
    let rows: Vec<MinimaxRow> = r_grid
        .par_iter()
        .enumerate()
        .map(|(gi, &r)| {
            let normal = Normal::new(0.0, sigma).unwrap();
            let threshold = gamma / 2.0;
            let mut err0 = 0usize;
            let mut err1 = 0usize;
            for t in 0..trials {
                let mut rng = rng_from_seed(derive_seed(seed, (gi * trials + t) as u64));
                let mean0: f64 =
                    (0..r).map(|_| normal.sample(&mut rng)).sum::<f64>() / r as f64;
                if mean0 >= threshold {
                    err0 += 1;
                }
                let mean1: f64 = gamma
                    + (0..r).map(|_| normal.sample(&mut rng)).sum::<f64>() / r as f64;
                if mean1 < threshold {
                    err1 += 1;
                }
            }
            let p0 = err0 as f64 / trials as f64;
            let p1 = err1 as f64 / trials as f64;
            let floor = 0.5 * (-(r as f64) * gamma * gamma / (2.0 * sigma * sigma)).exp();
            let mc_std_error =
                ((p0 * (1.0 - p0) + p1 * (1.0 - p1)) / trials as f64).sqrt();
            MinimaxRow {
                r,
                error_h0: p0,
                error_h1: p1,
                summed_error: p0 + p1,
                floor,
                mc_std_error,
            }
        })
        .collect();
    Ok(rows)
}

/// One grid row of the detection-versus-estimation harness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionVsEstimationRow {
    pub r: usize,
    /// Estimator accuracy failures `|bhat - beta| >= gamma/2` per hypothesis.
    pub est_fail_h0: f64,
    pub est_fail_h1: f64,
    /// Errors of the induced threshold test per hypothesis.
    pub test_err_h0: f64,
    pub test_err_h1: f64,
    pub summed_test_error: f64,
    /// Whether both estimator failure rates stayed within delta.
    pub accuracy_met: bool,
    /// Test errors are contained in estimator failures trial by trial.
    pub containment_ok: bool,
    /// accuracy_met implies summed test error <= 2 delta.
    pub implication_ok: bool,
}

/// Builds the test `psi = 1{|bhat| >= gamma/2}` from the sample-mean
/// estimator and verifies that estimator accuracy at level `delta`
/// forces test error at level `2 delta`, trial by trial.
pub fn detection_vs_estimation_harness(
    gamma: f64,
    sigma: f64,
    delta: f64,
    r_grid: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<DetectionVsEstimationRow>> {
    if gamma <= 0.0 || sigma < 0.0 || trials == 0 || r_grid.is_empty() {
        return Err(Error::InvalidInput(
            "harness needs positive gamma, non-negative sigma, trials and a grid".into(),
        ));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput("delta must lie in (0,1)".into()));
    }
    let rows = r_grid
        .par_iter()
        .enumerate()
        .map(|(gi, &r)| {
            let threshold = gamma / 2.0;
            let mut est0 = 0usize;
            let mut est1 = 0usize;
            let mut t0 = 0usize;
            let mut t1 = 0usize;
            let mut containment_ok = true;
            for t in 0..trials {
                let mut rng = rng_from_seed(derive_seed(seed, (gi * trials + t) as u64));
                let draw_mean = |rng: &mut rand_chacha::ChaCha8Rng, center: f64| -> f64 {
                    if sigma == 0.0 {
                        return center;
                    }
                    let normal = Normal::new(0.0, sigma).unwrap();
                    center + (0..r).map(|_| normal.sample(rng)).sum::<f64>() / r as f64
                };
                let b0 = draw_mean(&mut rng, 0.0);
                let psi0 = b0.abs() >= threshold;
                let fail0 = (b0 - 0.0).abs() >= threshold;
                if psi0 && !fail0 {
                    containment_ok = false;
                }
                est0 += fail0 as usize;
                t0 += psi0 as usize;

                let b1 = draw_mean(&mut rng, gamma);
                let psi1 = b1.abs() >= threshold;
                let fail1 = (b1 - gamma).abs() >= threshold;
                if !psi1 && !fail1 {
                    containment_ok = false;
                }
                est1 += fail1 as usize;
                t1 += !psi1 as usize;
            }
            let to_rate = |c: usize| c as f64 / trials as f64;
            let (est_fail_h0, est_fail_h1) = (to_rate(est0), to_rate(est1));
            let (test_err_h0, test_err_h1) = (to_rate(t0), to_rate(t1));
            let summed = test_err_h0 + test_err_h1;
            let accuracy_met = est_fail_h0 <= delta && est_fail_h1 <= delta;
            DetectionVsEstimationRow {
                r,
                est_fail_h0,
                est_fail_h1,
                test_err_h0,
                test_err_h1,
                summed_test_error: summed,
                accuracy_met,
                containment_ok,
                implication_ok: !accuracy_met || summed <= 2.0 * delta,
            }
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn diag_eco(d: usize, betas: DMatrix<f64>, target: usize, sigma: f64) -> LinearEcosystem {
        LinearEcosystem::new(DMatrix::identity(d, d), betas, target, sigma).unwrap()
    }

    #[test]
    fn noiseless_recovery_identity_design() {
        let betas = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -1.0, 0.5, 0.0]);
        let eco = diag_eco(2, betas.clone(), 0, 0.0);
        let hat = recover_noiseless(&eco).unwrap();
        assert!((hat - betas).norm() <= 1e-12);
    }

    #[test]
    fn noiseless_recovery_scaled_diagonal() {
        // Features 2I, coefficients all ones: responses are 2, recovery 1.
        let d = 4;
        let features = DMatrix::identity(d, d) * 2.0;
        let betas = DMatrix::from_element(d, 2, 1.0);
        let eco = LinearEcosystem::new(features, betas, 0, 0.0).unwrap();
        let responses = eco.features() * eco.betas();
        assert!(responses.iter().all(|&v| (v - 2.0).abs() < 1e-15));
        let hat = recover_noiseless(&eco).unwrap();
        assert!(hat.iter().all(|&v| (v - 1.0).abs() <= 1e-12));
    }

    #[test]
    fn noiseless_recovery_random_design() {
        let d = 5;
        let features = random_orthogonal_design(d, 31) * 0.7;
        let mut rng = rng_from_seed(8);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let betas = DMatrix::from_fn(d, 4, |_, _| normal.sample(&mut rng));
        let eco = LinearEcosystem::new(features, betas.clone(), 1, 0.0).unwrap();
        let hat = recover_noiseless(&eco).unwrap();
        assert!((hat - betas).norm() <= 1e-9);
    }

    #[test]
    fn singular_design_rejected() {
        let features = DMatrix::from_element(3, 3, 1.0);
        let betas = DMatrix::from_element(3, 2, 1.0);
        let eco = LinearEcosystem::new(features, betas, 0, 0.0).unwrap();
        assert!(matches!(recover_noiseless(&eco), Err(Error::SingularDesign)));
    }

    #[test]
    fn margin_average_of_peers_is_zero() {
        let betas = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 1.0, 0.0, 2.0]);
        let eco = diag_eco(2, betas, 0, 0.0);
        assert!(true_margin(&eco).unwrap() <= 1e-9);
    }

    #[test]
    fn margin_one_dimensional_example() {
        let betas = DMatrix::from_row_slice(1, 2, &[0.5, 0.0]);
        let eco = diag_eco(1, betas, 0, 0.0);
        assert_abs_diff_eq!(true_margin(&eco).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn margin_orthogonal_offset_is_unit() {
        // Target = peer + unit vector orthogonal to the peer affine hull.
        let betas = DMatrix::from_row_slice(
            3,
            3,
            &[
                1.0, 1.0, 2.0, //
                0.0, 0.0, 0.0, //
                1.0, 0.0, 0.0,
            ],
        );
        // Peers span offsets in the x-axis only; the target adds +1 in z.
        let eco = diag_eco(3, betas, 0, 0.0);
        assert_abs_diff_eq!(true_margin(&eco).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn repetitions_formula_and_edge_cases() {
        // sigma = 0 collapses to a single repetition.
        let est = required_repetitions(0.0, 1.0, 5, 3, 0.05, 64.0).unwrap();
        assert_eq!(est.r_required, 1);
        // Doubling gamma divides the pre-ceiling value by 4.
        let base = 64.0 * 1.0 / 0.25 * (15.0f64 / 0.05).ln();
        let est = required_repetitions(1.0, 0.5, 5, 3, 0.05, 64.0).unwrap();
        assert_eq!(est.r_required, base.ceil() as usize);
        assert_eq!(est.r_required, 1461);
        let est2 = required_repetitions(1.0, 1.0, 5, 3, 0.05, 64.0).unwrap();
        assert_eq!(est2.r_required, (base / 4.0).ceil() as usize);
        assert!(matches!(
            required_repetitions(1.0, 0.0, 5, 3, 0.05, 64.0),
            Err(Error::NonPositiveMargin(_))
        ));
    }

    #[test]
    fn repetitions_monotone() {
        let r = |sigma: f64, gamma: f64, n: usize, d: usize, delta: f64| {
            required_repetitions(sigma, gamma, n, d, delta, 64.0)
                .unwrap()
                .r_required
        };
        assert!(r(1.0, 0.5, 5, 3, 0.05) >= r(1.0, 1.0, 5, 3, 0.05));
        assert!(r(2.0, 1.0, 5, 3, 0.05) >= r(1.0, 1.0, 5, 3, 0.05));
        assert!(r(1.0, 1.0, 50, 3, 0.05) >= r(1.0, 1.0, 5, 3, 0.05));
        assert!(r(1.0, 1.0, 5, 30, 0.05) >= r(1.0, 1.0, 5, 3, 0.05));
        assert!(r(1.0, 1.0, 5, 3, 0.005) >= r(1.0, 1.0, 5, 3, 0.05));
    }

    #[test]
    fn noiseless_audit_verdicts() {
        // Target inside hull: non-unique with near-zero distance.
        let inside = DMatrix::from_row_slice(2, 3, &[0.5, 0.0, 1.0, 0.5, 0.0, 1.0]);
        let eco = diag_eco(2, inside, 0, 0.0);
        let dec = run_noisy_audit(&eco, 1.0, 1, 0).unwrap();
        assert_eq!(dec.verdict, AuditVerdict::NonUnique);
        assert!(dec.dist_hat <= 1e-9);
        assert_eq!(dec.queries_total, 2 * 1 * 3);

        // Margin 0.5 in 1-D: unique with distance recovered exactly.
        let apart = DMatrix::from_row_slice(1, 2, &[0.5, 0.0]);
        let eco = diag_eco(1, apart, 0, 0.0);
        let dec = run_noisy_audit(&eco, 0.5, 1, 0).unwrap();
        assert_eq!(dec.verdict, AuditVerdict::Unique);
        assert_abs_diff_eq!(dec.dist_hat, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn passive_baseline_exact_at_sigma_zero() {
        let betas = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, -1.0]);
        let eco = diag_eco(2, betas, 0, 0.0);
        let dec = passive_audit_baseline(&eco, 1.0, 2, 5).unwrap();
        assert_eq!(dec.verdict, AuditVerdict::Unique);
        assert_eq!(dec.repetitions, 1);
        assert_eq!(dec.queries_total, 2 * 3);
        assert!(passive_audit_baseline(&eco, 1.0, 1, 5).is_err());
    }

    #[test]
    fn bounded_uniform_noise_variance_matches_proxy() {
        let mut rng = rng_from_seed(4);
        let sigma = 0.7;
        let n = 200_000;
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for _ in 0..n {
            let x = NoiseModel::BoundedUniform.draw(sigma, &mut rng);
            assert!(x.abs() <= sigma * 3.0f64.sqrt() + 1e-12);
            acc += x;
            acc2 += x * x;
        }
        let var = acc2 / n as f64 - (acc / n as f64).powi(2);
        assert!((var - sigma * sigma).abs() < 0.01);
    }

    #[test]
    fn minimax_floor_values() {
        // r gamma^2 / (2 sigma^2) = 4 at gamma = sigma = 1, r = 8.
        let rows = minimax_harness(1.0, 1.0, &[8], 100, 0).unwrap();
        assert_abs_diff_eq!(rows[0].floor, 0.5 * (-4.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn detection_estimation_containment() {
        let rows =
            detection_vs_estimation_harness(1.0, 1.0, 0.05, &[4, 16], 2_000, 3).unwrap();
        for row in rows {
            assert!(row.containment_ok);
            assert!(row.summed_test_error <= row.est_fail_h0 + row.est_fail_h1 + 1e-12);
            assert!(row.implication_ok);
        }
    }

    #[test]
    fn detection_estimation_noiseless_perfect() {
        let rows = detection_vs_estimation_harness(1.0, 0.0, 0.05, &[1], 100, 0).unwrap();
        assert_eq!(rows[0].summed_test_error, 0.0);
        assert!(rows[0].accuracy_met);
    }
}
