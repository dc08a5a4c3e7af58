//! Seeded generators for controlled ecosystems.
//!
//! Every generator records its ground truth (margin, mixture weights,
//! population uniqueness where it is analytic) alongside the samples, so
//! downstream tests can compare estimates against oracles rather than
//! against other estimates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::active::LinearEcosystem;
use crate::attribution::CoalitionGame;
use crate::disco::{fit_weights, uniqueness, PierReport};
use crate::model::{
    model_ids, EcosystemAudit, FitConfig, ModelId, ResponseMatrix, SamplePoint, SampleRole,
    SampleSet,
};
use crate::rng::{derive_seed, derive_seed2, rng_from_seed};
use crate::simplex::{hull_distance, SimplexWeights};
use crate::{Error, Result};

/// Sweep definition for the peer-saturation experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaturationSpec {
    /// Intrinsic dimension of the latent task.
    pub d: usize,
    /// Peer counts to sweep, strictly increasing.
    pub n_peers_grid: Vec<usize>,
    pub n_fit: usize,
    pub n_eval: usize,
    pub sigma: f64,
    pub seeds: Vec<u64>,
}

impl SaturationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidInput("d must be >= 1".into()));
        }
        if self.n_peers_grid.is_empty()
            || self.n_peers_grid.windows(2).any(|w| w[1] <= w[0])
            || self.n_peers_grid[0] == 0
        {
            return Err(Error::InvalidInput(
                "peer grid must be non-empty, positive and increasing".into(),
            ));
        }
        if self.n_fit < 2 || self.n_eval < 1 || self.seeds.is_empty() {
            return Err(Error::InvalidInput("need samples and seeds".into()));
        }
        if self.sigma < 0.0 {
            return Err(Error::InvalidInput("sigma must be >= 0".into()));
        }
        Ok(())
    }
}

/// How the audited target relates to its peers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TargetKind {
    /// A random convex combination of the peers (margin zero).
    InHull,
    /// Hull-projection point plus `gamma` along the outward normal.
    Margin(f64),
    /// Exact coefficient copy of peer `j` (zero-based peer index).
    CloneOf(usize),
}

/// A generated ecosystem with its ground truth and sampled response logs.
#[derive(Debug, Clone)]
pub struct SyntheticEcosystem {
    pub eco: LinearEcosystem,
    pub audit: EcosystemAudit,
    /// Exact coefficient-space margin used by the construction.
    pub true_margin: f64,
    /// Mixture weights realising the construction, when meaningful.
    pub true_weights: Option<SimplexWeights>,
    /// Analytic population uniqueness under the isotropic Gaussian
    /// evaluation design; only available for noiseless logs.
    pub population_uniqueness: Option<f64>,
}

/// Draws a uniform point on the simplex (normalised exponentials).
fn random_simplex_point(p: usize, rng: &mut impl Rng) -> DVector<f64> {
    let mut w = DVector::from_fn(p, |_, _| -(1.0 - rng.random::<f64>()).ln());
    let sum = w.sum();
    w /= sum;
    w
}

/// Peer coefficients plus a target built per `kind`. Returns the full
/// coefficient matrix (target in column 0), the exact margin, and the
/// construction weights.
pub fn make_linear_coefficients(
    d: usize,
    n_models: usize,
    kind: TargetKind,
    seed: u64,
) -> Result<(DMatrix<f64>, f64, Option<SimplexWeights>)> {
    if d == 0 {
        return Err(Error::InvalidInput("d must be >= 1".into()));
    }
    if n_models < 2 {
        return Err(Error::InvalidInput("need at least two models".into()));
    }
    let p = n_models - 1;
    let mut rng = rng_from_seed(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let peers = DMatrix::from_fn(d, p, |_, _| normal.sample(&mut rng));

    let (target, margin, weights): (DVector<f64>, f64, Option<SimplexWeights>) = match kind {
        TargetKind::InHull => {
            let w = random_simplex_point(p, &mut rng);
            let t = &peers * &w;
            (t, 0.0, Some(SimplexWeights::new(w)?))
        }
        TargetKind::Margin(gamma) => {
            if !(gamma > 0.0) {
                return Err(Error::NonPositiveMargin(gamma));
            }
            // Project a random outside point onto the hull; walking gamma
            // along the outward normal lands exactly gamma away, because
            // the projection onto a convex set is unchanged along that
            // normal direction.
            let mut attempt = 0u64;
            loop {
                let q = DVector::from_fn(d, |_, _| normal.sample(&mut rng));
                let (dist, w) = hull_distance(&q, &peers, 1e-12)?;
                if dist > 1e-6 {
                    let base = &peers * w.as_vector();
                    let unit = (&q - &base) / dist;
                    break (&base + unit * gamma, gamma, Some(w));
                }
                attempt += 1;
                if attempt > 64 {
                    return Err(Error::InvalidInput(
                        "could not find a point outside the peer hull".into(),
                    ));
                }
            }
        }
        TargetKind::CloneOf(j) => {
            if j >= p {
                return Err(Error::InvalidInput(format!(
                    "clone index {j} out of range for {p} peers"
                )));
            }
            (
                peers.column(j).into_owned(),
                0.0,
                Some(SimplexWeights::vertex(p, j)),
            )
        }
    };

    let mut betas = DMatrix::zeros(d, n_models);
    betas.set_column(0, &target);
    for j in 0..p {
        betas.set_column(j + 1, &peers.column(j));
    }
    Ok((betas, margin, weights))
}

pub(crate) fn sample_responses(
    betas: &DMatrix<f64>,
    n_points: usize,
    sigma: f64,
    prefix: &str,
    role: SampleRole,
    labels: &[String],
    seed: u64,
) -> Result<ResponseMatrix> {
    let d = betas.nrows();
    let n_models = betas.ncols();
    let mut rng = rng_from_seed(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut values = DMatrix::zeros(n_points, n_models);
    let mut points = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let phi = DVector::from_fn(d, |_, _| normal.sample(&mut rng));
        let dose: f64 = rng.random();
        points.push(SamplePoint::new(format!("{prefix}-{i:05}"), dose));
        for j in 0..n_models {
            let clean = phi.dot(&betas.column(j).into_owned());
            let noise = if sigma > 0.0 {
                sigma * normal.sample(&mut rng)
            } else {
                0.0
            };
            values[(i, j)] = clean + noise;
        }
    }
    ResponseMatrix::new(
        model_ids(labels)?,
        SampleSet::new(points, role),
        values,
    )
}

fn default_labels(n_models: usize) -> Vec<String> {
    std::iter::once("target".to_string())
        .chain((1..n_models).map(|j| format!("peer-{j:02}")))
        .collect()
}

fn assemble_synthetic(
    betas: DMatrix<f64>,
    margin: f64,
    weights: Option<SimplexWeights>,
    sigma: f64,
    n_fit: usize,
    n_eval: usize,
    seed: u64,
) -> Result<SyntheticEcosystem> {
    let d = betas.nrows();
    let n_models = betas.ncols();
    let labels = default_labels(n_models);
    let fit = sample_responses(
        &betas,
        n_fit,
        sigma,
        "fit",
        SampleRole::Fit,
        &labels,
        derive_seed(seed, 1),
    )?;
    let eval = sample_responses(
        &betas,
        n_eval,
        sigma,
        "eval",
        SampleRole::Eval,
        &labels,
        derive_seed(seed, 2),
    )?;
    let features = crate::active::random_orthogonal_design(d, derive_seed(seed, 3));
    let eco = LinearEcosystem::new(features, betas, 0, sigma)?;
    let target = fit.models[0].clone();
    let peers = fit.models[1..].to_vec();
    let audit = EcosystemAudit::new(target, peers, fit, eval, FitConfig::default())?;
    let population_uniqueness = if sigma == 0.0 {
        Some(margin * (2.0 / std::f64::consts::PI).sqrt())
    } else {
        None
    };
    Ok(SyntheticEcosystem {
        eco,
        audit,
        true_margin: margin,
        true_weights: weights,
        population_uniqueness,
    })
}

/// Generates a linear ecosystem with i.i.d. standard-normal peer
/// coefficients, a target constructed per `kind`, and matched fit/eval
/// response logs sampled under isotropic Gaussian features.
pub fn make_linear_ecosystem(
    d: usize,
    n_models: usize,
    kind: TargetKind,
    sigma: f64,
    n_fit: usize,
    n_eval: usize,
    seed: u64,
) -> Result<SyntheticEcosystem> {
    let (betas, margin, weights) = make_linear_coefficients(d, n_models, kind, seed)?;
    assemble_synthetic(betas, margin, weights, sigma, n_fit, n_eval, seed)
}

/// Saturation-family ecosystem: the target is a fresh Gaussian task and
/// each peer is the target plus an independent standard-normal deviation.
/// Symmetric deviations make the peer hull swallow the target once the
/// peer count passes about twice the intrinsic dimension, which is the
/// collapse the sweep measures.
pub fn make_saturation_ecosystem(
    d: usize,
    n_peers: usize,
    sigma: f64,
    n_fit: usize,
    n_eval: usize,
    seed: u64,
) -> Result<SyntheticEcosystem> {
    if d == 0 || n_peers == 0 {
        return Err(Error::InvalidInput("d and n_peers must be >= 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let target = DVector::from_fn(d, |_, _| normal.sample(&mut rng));
    let mut betas = DMatrix::zeros(d, n_peers + 1);
    betas.set_column(0, &target);
    for j in 0..n_peers {
        let dev = DVector::from_fn(d, |_, _| normal.sample(&mut rng));
        betas.set_column(j + 1, &(&target + dev));
    }
    let peers = betas.columns(1, n_peers).into_owned();
    let (margin, w) = hull_distance(&target, &peers, 1e-10)?;
    assemble_synthetic(betas, margin, Some(w), sigma, n_fit, n_eval, seed)
}

/// One point of the saturation curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaturationPoint {
    pub n_peers: usize,
    pub mean_uniqueness: f64,
}

/// Sweeps the peer count, averaging the audited uniqueness over seeds.
/// Fresh ecosystems with random targets are generated per grid point and
/// audited end to end (fit split, weight fit, eval split).
pub fn run_saturation(spec: &SaturationSpec) -> Result<Vec<SaturationPoint>> {
    spec.validate()?;
    spec.n_peers_grid
        .par_iter()
        .map(|&n_peers| {
            let mut acc = 0.0;
            for (si, &seed) in spec.seeds.iter().enumerate() {
                let synth = make_saturation_ecosystem(
                    spec.d,
                    n_peers,
                    spec.sigma,
                    spec.n_fit,
                    spec.n_eval,
                    derive_seed2(seed, n_peers as u64, si as u64),
                )?;
                let sol = fit_weights(&synth.audit)?;
                acc += uniqueness(&synth.audit, &sol.weights)?;
            }
            Ok(SaturationPoint {
                n_peers,
                mean_uniqueness: acc / spec.seeds.len() as f64,
            })
        })
        .collect()
}

/// Two ecosystems that are indistinguishable from observational logs yet
/// differ in population uniqueness.
///
/// The reference design is uniform on `[0,1]` with `S0 = [0, s0_mass)`.
/// Ecosystem 0 has all responses identically zero; ecosystem 1 gives the
/// target the indicator of the complement of `S0` while all observational
/// queries stay inside `S0`.
#[derive(Debug, Clone, Serialize)]
pub struct NonIdentifiabilityPair {
    pub s0_mass: f64,
    /// Observational logs of the two ecosystems, sampled from the same
    /// design supported on `S0`.
    #[serde(skip)]
    pub logs: [ResponseMatrix; 2],
    /// SHA-256 digests of the serialised logs.
    pub log_digests: [String; 2],
    pub logs_identical: bool,
    /// Population uniqueness under the reference design: exactly 0 and
    /// `1 - s0_mass`.
    pub population_uniqueness: [f64; 2],
}

/// Target response function of ecosystem `k` in the pair.
pub fn nonident_target_response(k: usize, s0_mass: f64, dose: f64) -> f64 {
    if k == 0 {
        0.0
    } else if dose >= s0_mass {
        1.0
    } else {
        0.0
    }
}

fn log_digest(m: &ResponseMatrix) -> String {
    let mut hasher = Sha256::new();
    for p in &m.sample.points {
        hasher.update(p.input_id.as_bytes());
        hasher.update(p.dose.to_le_bytes());
    }
    for model in &m.models {
        hasher.update(model.label.as_bytes());
    }
    for v in m.values.iter() {
        hasher.update(v.to_le_bytes());
    }
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Builds the pair and the demonstration evidence: byte-identical logs
/// plus the diverging population uniqueness values.
pub fn make_nonidentifiability_pair(
    s0_mass: f64,
    n_logs: usize,
    seed: u64,
) -> Result<NonIdentifiabilityPair> {
    if !(s0_mass > 0.0 && s0_mass < 1.0) {
        return Err(Error::InvalidInput("s0_mass must lie in (0,1)".into()));
    }
    if n_logs == 0 {
        return Err(Error::InvalidInput("need at least one log point".into()));
    }
    let labels = vec!["target".to_string(), "peer-01".to_string()];
    let mut rng = rng_from_seed(seed);
    // Observational design Q supported on S0.
    let doses: Vec<f64> = (0..n_logs).map(|_| rng.random::<f64>() * s0_mass).collect();
    let build = |k: usize| -> Result<ResponseMatrix> {
        let points: Vec<SamplePoint> = doses
            .iter()
            .enumerate()
            .map(|(i, &d)| SamplePoint::new(format!("log-{i:05}"), d))
            .collect();
        let values = DMatrix::from_fn(n_logs, 2, |i, j| {
            if j == 0 {
                nonident_target_response(k, s0_mass, doses[i])
            } else {
                0.0
            }
        });
        ResponseMatrix::new(
            model_ids(&labels)?,
            SampleSet::new(points, SampleRole::Eval),
            values,
        )
    };
    let logs = [build(0)?, build(1)?];
    let log_digests = [log_digest(&logs[0]), log_digest(&logs[1])];
    let logs_identical = log_digests[0] == log_digests[1];
    Ok(NonIdentifiabilityPair {
        s0_mass,
        logs,
        log_digests,
        logs_identical,
        population_uniqueness: [0.0, 1.0 - s0_mass],
    })
}

/// The uniqueness-vs-robustness ambiguity pair: a constant residual and a
/// rapidly oscillating one with the same mean magnitude.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustnessPair {
    /// Oscillation amplitude.
    pub c: f64,
    /// Oscillation frequency (full periods over the unit dose interval).
    pub k: u32,
    /// Lipschitz budget met by the constant target (its true constant is 0).
    pub l_low: f64,
    /// Lipschitz constant of the oscillating target, `2 pi K c`.
    pub l_high: f64,
}

/// Dose design for the robustness demonstration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum DoseDesign {
    /// Evenly spaced grid on `[0,1)`.
    Grid,
    /// Uniform random doses, sorted.
    Random { seed: u64 },
}

/// Everything the robustness demonstration produces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustnessDemo {
    pub pair: RobustnessPair,
    pub report_constant: PierReport,
    pub report_oscillatory: PierReport,
    /// Max finite-difference slope of each target along the dose grid.
    pub max_slope_constant: f64,
    pub max_slope_oscillatory: f64,
}

fn robustness_audit(
    f: impl Fn(f64) -> f64,
    doses_fit: &[f64],
    doses_eval: &[f64],
) -> Result<EcosystemAudit> {
    let labels = vec!["target".to_string(), "zero-peer".to_string()];
    let build = |doses: &[f64], prefix: &str, role| -> Result<ResponseMatrix> {
        let points = doses
            .iter()
            .enumerate()
            .map(|(i, &d)| SamplePoint::new(format!("{prefix}-{i:05}"), d))
            .collect();
        let values = DMatrix::from_fn(doses.len(), 2, |i, j| if j == 0 { f(doses[i]) } else { 0.0 });
        ResponseMatrix::new(model_ids(&labels)?, SampleSet::new(points, role), values)
    };
    let fit = build(doses_fit, "fit", SampleRole::Fit)?;
    let eval = build(doses_eval, "eval", SampleRole::Eval)?;
    let target = fit.models[0].clone();
    let peers = vec![fit.models[1].clone()];
    EcosystemAudit::new(target, peers, fit, eval, FitConfig::default())
}

fn max_finite_difference_slope(f: impl Fn(f64) -> f64, doses: &[f64]) -> f64 {
    doses
        .windows(2)
        .map(|w| ((f(w[1]) - f(w[0])) / (w[1] - w[0])).abs())
        .fold(0.0, f64::max)
}

/// Builds the pair against a single zero peer on the unit dose interval
/// and audits both targets. Under a uniform dose design both uniqueness
/// values equal `2c/pi` (up to quadrature error), while the oscillating
/// target's max slope is `2 pi K c` against the constant target's 0.
pub fn make_robustness_pair(
    c: f64,
    k: u32,
    n_eval: usize,
    design: DoseDesign,
) -> Result<RobustnessDemo> {
    if !(c > 0.0) || k == 0 {
        return Err(Error::InvalidInput("need c > 0 and K >= 1".into()));
    }
    if n_eval < 2 {
        return Err(Error::InsufficientSample("need at least 2 eval doses".into()));
    }
    let doses_eval: Vec<f64> = match design {
        DoseDesign::Grid => (0..n_eval).map(|i| i as f64 / n_eval as f64).collect(),
        DoseDesign::Random { seed } => {
            let mut rng = rng_from_seed(seed);
            let mut d: Vec<f64> = (0..n_eval).map(|_| rng.random()).collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            d
        }
    };
    // Fit doses are interleaved with the eval grid: independent points
    // from the same design, honest by construction.
    let doses_fit: Vec<f64> = (0..n_eval)
        .map(|i| (i as f64 + 0.5) / n_eval as f64)
        .collect();

    let level = 2.0 * c / std::f64::consts::PI;
    let constant = move |_theta: f64| level;
    let omega = 2.0 * std::f64::consts::PI * k as f64;
    let oscillatory = move |theta: f64| c * (omega * theta).sin();

    let audit_a = robustness_audit(constant, &doses_fit, &doses_eval)?;
    let audit_b = robustness_audit(oscillatory, &doses_fit, &doses_eval)?;
    let w = SimplexWeights::vertex(1, 0);
    let report_constant = crate::disco::evaluate_pier(&audit_a, &w, 0.1, 200, 17)?;
    let report_oscillatory = crate::disco::evaluate_pier(&audit_b, &w, 0.1, 200, 18)?;

    Ok(RobustnessDemo {
        pair: RobustnessPair {
            c,
            k,
            l_low: 0.0,
            l_high: omega * c,
        },
        report_constant,
        report_oscillatory,
        max_slope_constant: max_finite_difference_slope(constant, &doses_eval),
        max_slope_oscillatory: max_finite_difference_slope(oscillatory, &doses_eval),
    })
}

/// The dominant/clone/specialist ecosystem behind the attribution-vs-audit
/// divergence demonstration, with the labelled task that scores coalitions.
#[derive(Debug, Clone)]
pub struct DivergenceEcosystem {
    pub responses: ResponseMatrix,
    /// Ground-truth labels of the synthetic task.
    pub labels: Vec<f64>,
    /// Best-member coverage game over the three models.
    pub game: CoalitionGame,
    pub dominant: usize,
    pub clone_index: usize,
    pub specialist_index: usize,
}

/// Builds a three-model ecosystem: a dominant model solving the common
/// regime, its exact clone, and a specialist that only covers a rare
/// context slice the others miss. Coalition values are best-member
/// coverage of the labels at tolerance 0.25.
pub fn make_divergence_ecosystem(
    n_points: usize,
    rare_fraction: f64,
    seed: u64,
) -> Result<DivergenceEcosystem> {
    if n_points < 20 {
        return Err(Error::InsufficientSample(
            "divergence ecosystem needs at least 20 points".into(),
        ));
    }
    if !(rare_fraction > 0.0 && rare_fraction < 0.5) {
        return Err(Error::InvalidInput("rare_fraction must lie in (0, 0.5)".into()));
    }
    let mut rng = rng_from_seed(seed);
    let normal = Normal::new(0.0, 0.02).unwrap();
    let labels_m = vec![
        "dominant".to_string(),
        "clone".to_string(),
        "specialist".to_string(),
    ];
    let mut points = Vec::with_capacity(n_points);
    let mut labels = Vec::with_capacity(n_points);
    let mut values = DMatrix::zeros(n_points, 3);
    let rare_from = 1.0 - rare_fraction;
    for i in 0..n_points {
        // The dose doubles as the context coordinate; the rare slice sits
        // at the top of the dose range.
        let dose: f64 = rng.random();
        let y = if rng.random::<f64>() < 0.5 { 0.0 } else { 1.0 };
        let rare = dose >= rare_from;
        let informative = 0.1 + 0.8 * y + normal.sample(&mut rng);
        let uninformative = 0.5 + normal.sample(&mut rng);
        let (dominant, specialist) = if rare {
            (uninformative, 0.1 + 0.8 * y + normal.sample(&mut rng))
        } else {
            (informative, 0.5 + normal.sample(&mut rng))
        };
        values[(i, 0)] = dominant;
        values[(i, 1)] = dominant; // bit-identical clone
        values[(i, 2)] = specialist;
        points.push(SamplePoint::new(format!("q-{i:05}"), dose));
        labels.push(y);
    }
    let responses = ResponseMatrix::new(
        model_ids(&labels_m)?,
        SampleSet::new(points, SampleRole::Fit),
        values,
    )?;
    let game = CoalitionGame::from_accuracy_evaluator(&responses, &labels, 0.25)?;
    Ok(DivergenceEcosystem {
        responses,
        labels,
        game,
        dominant: 0,
        clone_index: 1,
        specialist_index: 2,
    })
}

/// Multi-model ecosystem for pruning studies: one anchor model, its exact
/// clone, and progressively more idiosyncratic specialists around a shared
/// latent task.
#[derive(Debug, Clone)]
pub struct GovernanceEcosystem {
    pub responses: ResponseMatrix,
    pub labels: Vec<f64>,
    pub clone_index: usize,
}

pub fn make_governance_ecosystem(
    n_models: usize,
    n_points: usize,
    seed: u64,
) -> Result<GovernanceEcosystem> {
    if n_models < 3 {
        return Err(Error::InvalidInput("governance ecosystem needs >= 3 models".into()));
    }
    if n_points < 8 {
        return Err(Error::InsufficientSample("need at least 8 points".into()));
    }
    let mut rng = rng_from_seed(seed);
    let normal = Normal::new(0.0, 0.05).unwrap();
    let label_names: Vec<String> = (0..n_models).map(|j| format!("m{j:02}")).collect();
    let mut points = Vec::with_capacity(n_points);
    let mut labels = Vec::with_capacity(n_points);
    let xs: Vec<f64> = (0..n_points)
        .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
        .collect();
    for (i, &x) in xs.iter().enumerate() {
        let truth = x.sin() + 0.3 * (2.0 * x).cos();
        labels.push(truth);
        points.push(SamplePoint::new(format!("s-{i:05}"), x / std::f64::consts::TAU));
    }
    let mut values = DMatrix::zeros(n_points, n_models);
    // Model 0 tracks the truth; model 1 is its exact clone; the rest add
    // growing idiosyncratic components.
    for i in 0..n_points {
        values[(i, 0)] = labels[i] + normal.sample(&mut rng);
        values[(i, 1)] = values[(i, 0)];
    }
    for j in 2..n_models {
        let amplitude = 0.1 + 0.7 * (j - 2) as f64 / (n_models - 2).max(1) as f64;
        let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
        let freq = (j - 1) as f64;
        for i in 0..n_points {
            values[(i, j)] = labels[i]
                + amplitude * (freq * xs[i] + phase).sin()
                + normal.sample(&mut rng);
        }
    }
    let responses = ResponseMatrix::new(
        model_ids(&label_names)?,
        SampleSet::new(points, SampleRole::Fit),
        values,
    )?;
    Ok(GovernanceEcosystem {
        responses,
        labels,
        clone_index: 1,
    })
}
