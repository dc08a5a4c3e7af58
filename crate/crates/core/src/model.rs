//! Shared domain types for ecosystems, samples and audit configuration.
//!
//! Responses arrive pre-scalarised: every entry of a [`ResponseMatrix`] is
//! a single real score for one model on one input–dose pair. Producing
//! those scores (running models, applying interventions, scalarising
//! outputs) happens upstream of this crate.
//!
//! All types here are immutable after construction and safe to share
//! across threads.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::rng::rng_from_seed;
use crate::{Error, Result};
use rand::seq::SliceRandom;

/// Identity of one model inside an ecosystem: a unique label plus its
/// column position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelId {
    pub label: String,
    pub index: usize,
}

impl ModelId {
    pub fn new(label: impl Into<String>, index: usize) -> Self {
        Self {
            label: label.into(),
            index,
        }
    }
}

/// Builds a contiguous id list from labels, checking uniqueness.
pub fn model_ids(labels: &[impl AsRef<str>]) -> Result<Vec<ModelId>> {
    let mut seen = std::collections::HashSet::new();
    let mut ids = Vec::with_capacity(labels.len());
    for (i, l) in labels.iter().enumerate() {
        let l = l.as_ref();
        if !seen.insert(l.to_string()) {
            return Err(Error::InvalidInput(format!("duplicate model label {l:?}")));
        }
        ids.push(ModelId::new(l, i));
    }
    Ok(ids)
}

/// An ordered grid of dose values with its maximum spacing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoseGrid {
    values: Vec<f64>,
    spacing: f64,
}

impl DoseGrid {
    /// Strictly increasing dose values; spacing is the largest consecutive
    /// gap (the grid resolution entering the anchor design error bound).
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty dose grid".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite dose value".into()));
        }
        let mut spacing = 0.0f64;
        for w in values.windows(2) {
            let gap = w[1] - w[0];
            if gap <= 0.0 {
                return Err(Error::InvalidInput(
                    "dose grid must be strictly increasing".into(),
                ));
            }
            spacing = spacing.max(gap);
        }
        Ok(Self { values, spacing })
    }

    /// Evenly spaced grid of `n` doses over `[lo, hi]` (inclusive ends).
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 1 || !(hi > lo) {
            return Err(Error::InvalidInput("degenerate uniform dose grid".into()));
        }
        if n == 1 {
            return Self::new(vec![lo]);
        }
        let step = (hi - lo) / (n - 1) as f64;
        Self::new((0..n).map(|i| lo + i as f64 * step).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Whether a sample is used for fitting weights or evaluating residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleRole {
    Fit,
    Eval,
}

/// One queried input–dose pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub input_id: String,
    pub dose: f64,
}

impl SamplePoint {
    pub fn new(input_id: impl Into<String>, dose: f64) -> Self {
        Self {
            input_id: input_id.into(),
            dose,
        }
    }
}

/// A list of sample points tagged with their role.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSet {
    pub points: Vec<SamplePoint>,
    pub role: SampleRole,
}

impl SampleSet {
    pub fn new(points: Vec<SamplePoint>, role: SampleRole) -> Self {
        Self { points, role }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Deterministic disjoint partition of `0..n` into fit and eval index sets.
///
/// The fit side gets `round(n * fit_fraction)` indices, clamped so both
/// sides keep at least one point.
pub fn split_indices(n: usize, fit_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::InsufficientSample(format!(
            "need at least 2 points to split, got {n}"
        )));
    }
    if !(fit_fraction > 0.0 && fit_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "fit_fraction must lie in (0,1), got {fit_fraction}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from_seed(seed));
    let k = ((n as f64 * fit_fraction).round() as usize).clamp(1, n - 1);
    let mut fit = idx[..k].to_vec();
    let mut eval = idx[k..].to_vec();
    fit.sort_unstable();
    eval.sort_unstable();
    Ok((fit, eval))
}

/// Splits a sample set into disjoint fit and eval subsets covering every
/// point. Fitting data is never reused for evaluation downstream.
pub fn split_honest(
    points: &SampleSet,
    fit_fraction: f64,
    seed: u64,
) -> Result<(SampleSet, SampleSet)> {
    let (fit_idx, eval_idx) = split_indices(points.len(), fit_fraction, seed)?;
    let pick = |idx: &[usize], role| {
        SampleSet::new(idx.iter().map(|&i| points.points[i].clone()).collect(), role)
    };
    Ok((
        pick(&fit_idx, SampleRole::Fit),
        pick(&eval_idx, SampleRole::Eval),
    ))
}

/// Dense matrix of scalarised responses: one row per sample point, one
/// column per model, in the order of `models`.
#[derive(Debug, Clone)]
pub struct ResponseMatrix {
    pub models: Vec<ModelId>,
    pub sample: SampleSet,
    pub values: DMatrix<f64>,
}

impl ResponseMatrix {
    pub fn new(models: Vec<ModelId>, sample: SampleSet, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != sample.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} rows but {} sample points",
                values.nrows(),
                sample.len()
            )));
        }
        if values.ncols() != models.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} columns but {} models",
                values.ncols(),
                models.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for (i, m) in models.iter().enumerate() {
            if m.index != i {
                return Err(Error::InvalidInput(format!(
                    "model indices must be contiguous: {:?} at position {i}",
                    m
                )));
            }
            if !seen.insert(m.label.clone()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate model label {:?}",
                    m.label
                )));
            }
        }
        if let Some((r, c)) = first_non_finite(&values) {
            return Err(Error::InvalidInput(format!(
                "non-finite response at row {r}, column {c}"
            )));
        }
        Ok(Self {
            models,
            sample,
            values,
        })
    }

    pub fn n_points(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_models(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_of(&self, model_index: usize) -> DVector<f64> {
        self.values.column(model_index).into_owned()
    }

    pub fn index_of_label(&self, label: &str) -> Option<usize> {
        self.models.iter().position(|m| m.label == label)
    }

    /// Submatrix of the given model columns, in the given order.
    pub fn columns(&self, model_indices: &[usize]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n_points(), model_indices.len());
        for (j, &mi) in model_indices.iter().enumerate() {
            out.set_column(j, &self.values.column(mi));
        }
        out
    }

    /// Restricts to the given rows (preserving order), relabelling the role.
    pub fn select_rows(&self, rows: &[usize], role: SampleRole) -> Result<Self> {
        let points = rows
            .iter()
            .map(|&i| self.sample.points[i].clone())
            .collect();
        let values = DMatrix::from_fn(rows.len(), self.n_models(), |r, c| {
            self.values[(rows[r], c)]
        });
        ResponseMatrix::new(self.models.clone(), SampleSet::new(points, role), values)
    }

    /// Honest split into disjoint fit/eval matrices.
    pub fn split(&self, fit_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        let (fit_idx, eval_idx) = split_indices(self.n_points(), fit_fraction, seed)?;
        Ok((
            self.select_rows(&fit_idx, SampleRole::Fit)?,
            self.select_rows(&eval_idx, SampleRole::Eval)?,
        ))
    }

    /// Reorders model columns by `perm` (new position -> old index),
    /// reindexing the ids to stay contiguous. Audit statistics are
    /// invariant under this relabelling.
    pub fn permute_models(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n_models() {
            return Err(Error::ShapeMismatch("permutation length".into()));
        }
        let models = perm
            .iter()
            .enumerate()
            .map(|(new, &old)| ModelId::new(self.models[old].label.clone(), new))
            .collect();
        ResponseMatrix::new(models, self.sample.clone(), self.columns(perm))
    }
}

fn first_non_finite(m: &DMatrix<f64>) -> Option<(usize, usize)> {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if !m[(r, c)].is_finite() {
                return Some((r, c));
            }
        }
    }
    None
}

/// Solver and regularisation settings for weight fitting.
///
/// The ridge weight decays with the fitting sample size as
/// `lambda0 * m^(-lambda_exponent)`; any exponent above one keeps both
/// `lambda_m` and `m * lambda_m` vanishing as `m` grows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub lambda0: f64,
    pub lambda_exponent: f64,
    pub solver_tol: f64,
    pub solver_max_iters: usize,
    pub rng_seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda0: 1e-3,
            lambda_exponent: 1.5,
            solver_tol: 1e-10,
            solver_max_iters: 100_000,
            rng_seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda0 < 0.0 {
            return Err(Error::InvalidInput("lambda0 must be >= 0".into()));
        }
        if self.lambda_exponent <= 1.0 {
            return Err(Error::InvalidInput(
                "lambda_exponent must exceed 1 so that m * lambda_m -> 0".into(),
            ));
        }
        if !(self.solver_tol > 0.0) || self.solver_max_iters == 0 {
            return Err(Error::InvalidInput("bad solver settings".into()));
        }
        Ok(())
    }

    /// Ridge weight for a fitting sample of size `m`.
    pub fn lambda_for(&self, m: usize) -> f64 {
        self.lambda0 * (m.max(1) as f64).powf(-self.lambda_exponent)
    }
}

/// A target, its peers, and honest fit/eval response matrices sharing the
/// same model columns.
#[derive(Debug, Clone)]
pub struct EcosystemAudit {
    pub target: ModelId,
    pub peers: Vec<ModelId>,
    pub fit: ResponseMatrix,
    pub eval: ResponseMatrix,
    pub config: FitConfig,
}

impl EcosystemAudit {
    pub fn new(
        target: ModelId,
        peers: Vec<ModelId>,
        fit: ResponseMatrix,
        eval: ResponseMatrix,
        config: FitConfig,
    ) -> Result<Self> {
        config.validate()?;
        if peers.is_empty() {
            return Err(Error::InvalidInput("audit needs at least one peer".into()));
        }
        if peers.iter().any(|p| p.index == target.index) {
            return Err(Error::InvalidInput("target cannot be its own peer".into()));
        }
        if fit.models != eval.models {
            return Err(Error::InvalidInput(
                "fit and eval matrices must share the same model columns".into(),
            ));
        }
        for m in std::iter::once(&target).chain(peers.iter()) {
            match fit.models.get(m.index) {
                Some(col) if col.label == m.label => {}
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "model {:?} not found at column {}",
                        m.label, m.index
                    )))
                }
            }
        }
        Ok(Self {
            target,
            peers,
            fit,
            eval,
            config,
        })
    }

    /// Builds an audit by honestly splitting one response matrix. With
    /// `peer_labels` empty, all non-target models become peers.
    pub fn from_matrix(
        matrix: &ResponseMatrix,
        target_label: &str,
        peer_labels: &[String],
        fit_fraction: f64,
        config: FitConfig,
    ) -> Result<Self> {
        let target_idx = matrix
            .index_of_label(target_label)
            .ok_or_else(|| Error::InvalidInput(format!("unknown target {target_label:?}")))?;
        let target = matrix.models[target_idx].clone();
        let peers: Vec<ModelId> = if peer_labels.is_empty() {
            matrix
                .models
                .iter()
                .filter(|m| m.index != target_idx)
                .cloned()
                .collect()
        } else {
            peer_labels
                .iter()
                .map(|l| {
                    matrix
                        .index_of_label(l)
                        .map(|i| matrix.models[i].clone())
                        .ok_or_else(|| Error::InvalidInput(format!("unknown peer {l:?}")))
                })
                .collect::<Result<_>>()?
        };
        let (fit, eval) = matrix.split(fit_fraction, config.rng_seed)?;
        Self::new(target, peers, fit, eval, config)
    }

    pub fn peer_indices(&self) -> Vec<usize> {
        self.peers.iter().map(|p| p.index).collect()
    }

    /// Peer response matrix (rows = points, columns = peers) on one split.
    pub fn peer_matrix(&self, role: SampleRole) -> DMatrix<f64> {
        let src = match role {
            SampleRole::Fit => &self.fit,
            SampleRole::Eval => &self.eval,
        };
        src.columns(&self.peer_indices())
    }

    /// Target response column on one split.
    pub fn target_column(&self, role: SampleRole) -> DVector<f64> {
        let src = match role {
            SampleRole::Fit => &self.fit,
            SampleRole::Eval => &self.eval,
        };
        src.column_of(self.target.index)
    }
}
