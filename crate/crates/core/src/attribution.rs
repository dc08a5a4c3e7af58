//! Exact Shapley attribution over model coalitions, and the report that
//! sets it against the audit view.
//!
//! Shapley value shares a coalition's score fairly; it does not encode
//! substitutability. A model can sit exactly in the convex hull of its
//! peers (zero audited uniqueness) and still collect a large share, and a
//! specialist can carry behaviour nobody else covers while earning almost
//! nothing. The divergence report flags both mismatches.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disco::{fit_weights, uniqueness};
use crate::model::{EcosystemAudit, FitConfig, ModelId, ResponseMatrix};
use crate::stats::quantile;
use crate::{Error, Result};

/// A transferable-utility game over models: one score per coalition,
/// indexed by bitmask over players.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoalitionGame {
    players: Vec<ModelId>,
    values: Vec<f64>,
}

impl CoalitionGame {
    /// `values[mask]` scores the coalition whose members are the set bits
    /// of `mask`. Requires all `2^N` entries, `values[0] = 0`, and finite
    /// scores.
    pub fn new(players: Vec<ModelId>, values: Vec<f64>) -> Result<Self> {
        let n = players.len();
        if n == 0 || n > 20 {
            return Err(Error::InvalidInput(format!(
                "exact enumeration supports 1..=20 players, got {n}"
            )));
        }
        if values.len() != 1usize << n {
            return Err(Error::IncompleteGame(format!(
                "expected {} coalition values, got {}",
                1usize << n,
                values.len()
            )));
        }
        if let Some(mask) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::IncompleteGame(format!(
                "non-finite value for coalition mask {mask:#b}"
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::IncompleteGame("empty coalition must score 0".into()));
        }
        Ok(Self { players, values })
    }

    /// Builds the table by evaluating `f` on every coalition mask.
    pub fn from_fn(players: Vec<ModelId>, f: impl Fn(u32) -> f64) -> Result<Self> {
        let n = players.len();
        if n == 0 || n > 20 {
            return Err(Error::InvalidInput(format!(
                "exact enumeration supports 1..=20 players, got {n}"
            )));
        }
        let values = (0..1u32 << n).map(f).collect();
        Self::new(players, values)
    }

    /// Best-member coverage game over a labelled task: a coalition scores
    /// the fraction of points where at least one member's response lands
    /// within `tol` of the label.
    pub fn from_accuracy_evaluator(
        responses: &ResponseMatrix,
        labels: &[f64],
        tol: f64,
    ) -> Result<Self> {
        if labels.len() != responses.n_points() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} points",
                labels.len(),
                responses.n_points()
            )));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidInput("coverage tolerance must be positive".into()));
        }
        let n = responses.n_models();
        let n_points = responses.n_points();
        let players = responses.models.clone();
        let values = responses.values.clone();
        Self::from_fn(players, |mask| {
            if mask == 0 {
                return 0.0;
            }
            let mut covered = 0usize;
            for i in 0..n_points {
                let hit = (0..n)
                    .filter(|j| mask & (1 << j) != 0)
                    .any(|j| (values[(i, j)] - labels[i]).abs() <= tol);
                covered += hit as usize;
            }
            covered as f64 / n_points as f64
        })
    }

    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    pub fn players(&self) -> &[ModelId] {
        &self.players
    }

    pub fn value(&self, mask: u32) -> f64 {
        self.values[mask as usize]
    }

    pub fn grand_coalition_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Exact Shapley values by subset enumeration.
///
/// Averages each player's marginal contribution over all orderings;
/// satisfies efficiency, symmetry and the dummy axiom by construction.
pub fn shapley_exact(game: &CoalitionGame) -> Result<Vec<f64>> {
    let n = game.n_players();
    // Ordering weight of a coalition of size s not containing the player:
    // s! (n-s-1)! / n! = 1 / (n * C(n-1, s)).
    let weights: Vec<f64> = (0..n).map(|s| 1.0 / (n as f64 * binomial(n - 1, s))).collect();
    let values = (0..n)
        .into_par_iter()
        .map(|i| {
            let bit = 1u32 << i;
            let mut phi = 0.0;
            for mask in 0..(1u32 << n) {
                if mask & bit != 0 {
                    continue;
                }
                let s = mask.count_ones() as usize;
                phi += weights[s] * (game.value(mask | bit) - game.value(mask));
            }
            phi
        })
        .collect();
    Ok(values)
}

/// Per-model verdict of the divergence report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttributionFlag {
    /// Positive Shapley share despite near-zero audited uniqueness.
    RedundantButCredited,
    /// Top-quartile uniqueness with bottom-quartile Shapley share.
    UniqueButUncredited,
    Consistent,
    /// Single-model ecosystem: the audit is undefined.
    NoPeers,
}

/// Thresholds and audit settings for the divergence report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivergenceConfig {
    pub fit_fraction: f64,
    pub fit: FitConfig,
    /// Uniqueness at or below this is treated as redundant.
    pub redundancy_tol: f64,
    /// A Shapley share above this fraction of the maximum counts as
    /// credited.
    pub credit_fraction: f64,
    pub seed: u64,
}

impl Default for DivergenceConfig {
    fn default() -> Self {
        Self {
            fit_fraction: 0.5,
            fit: FitConfig::default(),
            redundancy_tol: 1e-5,
            credit_fraction: 0.1,
            seed: 0,
        }
    }
}

/// Shapley shares, per-model audited uniqueness, and mismatch flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttributionReport {
    pub players: Vec<ModelId>,
    pub shapley: Vec<f64>,
    /// Audited uniqueness per model (each model as target against all
    /// others); `None` when there are no peers.
    pub pier: Vec<Option<f64>>,
    pub flags: Vec<AttributionFlag>,
}

/// Computes Shapley shares from the game and audited uniqueness from the
/// response logs, then flags attribution/audit mismatches.
pub fn divergence_report(
    responses: &ResponseMatrix,
    game: &CoalitionGame,
    config: &DivergenceConfig,
) -> Result<AttributionReport> {
    if game.n_players() != responses.n_models()
        || game
            .players()
            .iter()
            .zip(&responses.models)
            .any(|(a, b)| a.label != b.label)
    {
        return Err(Error::InvalidInput(
            "game players must match response columns".into(),
        ));
    }
    let shapley = shapley_exact(game)?;
    let n = responses.n_models();

    if n == 1 {
        return Ok(AttributionReport {
            players: responses.models.clone(),
            shapley,
            pier: vec![None],
            flags: vec![AttributionFlag::NoPeers],
        });
    }

    let (fit, eval) = responses.split(config.fit_fraction, config.seed)?;
    let pier_values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let target = responses.models[t].clone();
            let peers = responses
                .models
                .iter()
                .filter(|m| m.index != t)
                .cloned()
                .collect();
            let audit =
                EcosystemAudit::new(target, peers, fit.clone(), eval.clone(), config.fit.clone())?;
            let sol = match fit_weights(&audit) {
                Ok(s) => s,
                Err(Error::SolverDidNotConverge { best, .. }) => *best,
                Err(e) => return Err(e),
            };
            uniqueness(&audit, &sol.weights)
        })
        .collect::<Result<_>>()?;

    let max_shapley = shapley.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pier_hi = quantile(&pier_values, 0.75);
    let shapley_lo = quantile(&shapley, 0.25);
    let flags = (0..n)
        .map(|i| {
            if shapley[i] > config.credit_fraction * max_shapley
                && pier_values[i] <= config.redundancy_tol
            {
                AttributionFlag::RedundantButCredited
            } else if pier_values[i] >= pier_hi && shapley[i] <= shapley_lo {
                AttributionFlag::UniqueButUncredited
            } else {
                AttributionFlag::Consistent
            }
        })
        .collect();

    Ok(AttributionReport {
        players: responses.models.clone(),
        shapley,
        pier: pier_values.into_iter().map(Some).collect(),
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::model_ids;
    use approx::assert_abs_diff_eq;

    fn two_player_game() -> CoalitionGame {
        // v({1}) = v({2}) = v({1,2}) = 1: two interchangeable models.
        CoalitionGame::new(
            model_ids(&["m1", "m2"]).unwrap(),
            vec![0.0, 1.0, 1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn interchangeable_pair_splits_credit() {
        let phi = shapley_exact(&two_player_game()).unwrap();
        assert_eq!(phi, vec![0.5, 0.5]);
    }

    #[test]
    fn dummy_player_gets_zero() {
        // Player 2 adds nothing to any coalition.
        let game = CoalitionGame::new(
            model_ids(&["a", "b"]).unwrap(),
            vec![0.0, 0.7, 0.0, 0.7],
        )
        .unwrap();
        let phi = shapley_exact(&game).unwrap();
        assert_abs_diff_eq!(phi[0], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(phi[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn additive_game_recovers_coefficients() {
        // v(S) = sum of per-player contributions: Shapley returns them.
        // Oracle: enumerate all 4! orderings directly.
        let c = [0.4, 0.1, 0.3, 0.2];
        let ids = model_ids(&["a", "b", "c", "d"]).unwrap();
        let game = CoalitionGame::from_fn(ids, |mask| {
            (0..4).filter(|j| mask & (1 << j) != 0).map(|j| c[j]).sum()
        })
        .unwrap();
        let phi = shapley_exact(&game).unwrap();

        let mut oracle = [0.0f64; 4];
        let perms = permutations(&[0, 1, 2, 3]);
        for perm in &perms {
            let mut mask = 0u32;
            for &p in perm {
                let before = game.value(mask);
                mask |= 1 << p;
                oracle[p] += game.value(mask) - before;
            }
        }
        for o in oracle.iter_mut() {
            *o /= perms.len() as f64;
        }
        for j in 0..4 {
            assert_abs_diff_eq!(phi[j], c[j], epsilon = 1e-12);
            assert_abs_diff_eq!(phi[j], oracle[j], epsilon = 1e-12);
        }
    }

    fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
        if items.len() <= 1 {
            return vec![items.to_vec()];
        }
        let mut out = Vec::new();
        for (i, &x) in items.iter().enumerate() {
            let mut rest = items.to_vec();
            rest.remove(i);
            for mut tail in permutations(&rest) {
                tail.insert(0, x);
                out.push(tail);
            }
        }
        out
    }

    #[test]
    fn efficiency_holds() {
        let game = CoalitionGame::new(
            model_ids(&["a", "b", "c"]).unwrap(),
            vec![0.0, 0.2, 0.5, 0.6, 0.1, 0.4, 0.55, 0.9],
        )
        .unwrap();
        let phi = shapley_exact(&game).unwrap();
        assert_abs_diff_eq!(
            phi.iter().sum::<f64>(),
            game.grand_coalition_value(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn incomplete_or_nonzero_empty_rejected() {
        let ids = model_ids(&["a", "b"]).unwrap();
        assert!(CoalitionGame::new(ids.clone(), vec![0.0, 1.0, 1.0]).is_err());
        assert!(CoalitionGame::new(ids.clone(), vec![0.5, 1.0, 1.0, 1.0]).is_err());
        assert!(CoalitionGame::new(ids, vec![0.0, f64::NAN, 1.0, 1.0]).is_err());
    }

    #[test]
    fn divergence_flags_clone_and_specialist() {
        let eco = crate::synth::make_divergence_ecosystem(400, 0.1, 21).unwrap();
        let report =
            divergence_report(&eco.responses, &eco.game, &DivergenceConfig::default()).unwrap();
        assert_eq!(
            report.flags[eco.clone_index],
            AttributionFlag::RedundantButCredited
        );
        assert_eq!(
            report.flags[eco.specialist_index],
            AttributionFlag::UniqueButUncredited
        );
        assert!(report.pier[eco.clone_index].unwrap() <= 1e-5);
        assert!(report.pier[eco.specialist_index].unwrap() > 0.1);
    }

    #[test]
    fn identical_models_equal_shapley_zero_pier() {
        use crate::model::{ResponseMatrix, SamplePoint, SampleRole, SampleSet};
        use nalgebra::DMatrix;
        let n = 40;
        let points = (0..n)
            .map(|i| SamplePoint::new(format!("p{i}"), i as f64 / n as f64))
            .collect();
        let col: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let values = DMatrix::from_fn(n, 3, |i, _| col[i]);
        let responses = ResponseMatrix::new(
            model_ids(&["a", "b", "c"]).unwrap(),
            SampleSet::new(points, SampleRole::Fit),
            values,
        )
        .unwrap();
        let labels: Vec<f64> = col.clone();
        let game = CoalitionGame::from_accuracy_evaluator(&responses, &labels, 0.25).unwrap();
        let report = divergence_report(&responses, &game, &DivergenceConfig::default()).unwrap();
        assert_abs_diff_eq!(report.shapley[0], report.shapley[1], epsilon = 1e-12);
        assert_abs_diff_eq!(report.shapley[1], report.shapley[2], epsilon = 1e-12);
        for p in &report.pier {
            assert!(p.unwrap() <= 1e-8);
        }
    }

    #[test]
    fn single_model_reports_no_peers() {
        use crate::model::{ResponseMatrix, SamplePoint, SampleRole, SampleSet};
        use nalgebra::DMatrix;
        let points = (0..4)
            .map(|i| SamplePoint::new(format!("p{i}"), 0.1 * i as f64))
            .collect();
        let responses = ResponseMatrix::new(
            model_ids(&["only"]).unwrap(),
            SampleSet::new(points, SampleRole::Fit),
            DMatrix::from_element(4, 1, 0.9),
        )
        .unwrap();
        let game = CoalitionGame::new(responses.models.clone(), vec![0.0, 0.9]).unwrap();
        let report = divergence_report(&responses, &game, &DivergenceConfig::default()).unwrap();
        assert_eq!(report.flags, vec![AttributionFlag::NoPeers]);
        assert_eq!(report.pier, vec![None]);
        assert_abs_diff_eq!(report.shapley[0], 0.9, epsilon = 1e-15);
    }
}
