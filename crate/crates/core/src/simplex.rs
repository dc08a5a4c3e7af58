//! Numerical kernel: Euclidean projection onto the probability simplex,
//! simplex-constrained regularised least squares, convex-hull distance,
//! and unconstrained (linear-span) least squares.
//!
//! The constrained solver minimises
//!
//! ```text
//! f(w) = (1/m) * ||y - A w||^2 + lambda * ||w||^2      over the simplex
//! ```
//!
//! with an accelerated projected-gradient loop (FISTA with adaptive
//! restart, step 1/L, L from power iteration) plus an active-set polish
//! that solves the KKT system on the identified support to push the
//! residual to machine precision. Convergence is certified by an explicit
//! KKT residual: on the support all partial derivatives must agree, and
//! off the support they must not undercut the common value.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A point on the probability simplex: non-negative entries summing to
/// one (within 1e-12).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexWeights(DVector<f64>);

impl SimplexWeights {
    pub fn new(w: DVector<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidInput("empty weight vector".into()));
        }
        if w.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidInput(
                "weights must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = w.sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "weights must sum to 1 within 1e-12 (got {sum})"
            )));
        }
        Ok(Self(w))
    }

    /// Uniform mass over `p` coordinates.
    pub fn uniform(p: usize) -> Self {
        Self(DVector::from_element(p, 1.0 / p as f64))
    }

    /// All mass on coordinate `j`.
    pub fn vertex(p: usize, j: usize) -> Self {
        let mut w = DVector::zeros(p);
        w[j] = 1.0;
        Self(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    /// Effective number of peers the mass is spread over, `1 / sum w_j^2`.
    pub fn effective_support(&self) -> f64 {
        1.0 / self.0.iter().map(|w| w * w).sum::<f64>()
    }

    /// Sum of the `k` largest weights.
    pub fn top_k_mass(&self, k: usize) -> f64 {
        let mut v: Vec<f64> = self.0.iter().copied().collect();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        v.iter().take(k).sum()
    }
}

/// Exact Euclidean projection onto the simplex (sort-based).
///
/// Returns the unique `argmin_{w in simplex} ||w - v||_2`. Idempotent on
/// simplex points.
pub fn project_simplex(v: &DVector<f64>) -> Result<SimplexWeights> {
    if v.is_empty() {
        return Err(Error::InvalidInput("cannot project an empty vector".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("projection input must be finite".into()));
    }
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut rho = 0usize;
    let mut tau = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            rho = i + 1;
            tau = t;
        }
    }
    debug_assert!(rho >= 1);
    let w = DVector::from_iterator(v.len(), v.iter().map(|&x| (x - tau).max(0.0)));
    SimplexWeights::new(w)
}

/// Converged solution of the simplex-constrained least-squares problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QpSolution {
    pub weights: SimplexWeights,
    /// Mean squared residual plus the ridge term, at `weights`.
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
}

struct Quadratic {
    /// Hessian `(2/m) A^T A + 2 lambda I`.
    hessian: DMatrix<f64>,
    /// Linear term `-(2/m) A^T y`.
    linear: DVector<f64>,
    /// Constant `y^T y / m`.
    constant: f64,
}

impl Quadratic {
    fn from_ls(a: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Self {
        let m = a.nrows() as f64;
        let mut hessian = a.transpose() * a * (2.0 / m);
        for i in 0..hessian.nrows() {
            hessian[(i, i)] += 2.0 * lambda;
        }
        let linear = a.transpose() * y * (-2.0 / m);
        let constant = y.dot(y) / m;
        Quadratic {
            hessian,
            linear,
            constant,
        }
    }

    fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.hessian * w + &self.linear
    }

    fn objective(&self, w: &DVector<f64>) -> f64 {
        0.5 * w.dot(&(&self.hessian * w)) + self.linear.dot(w) + self.constant
    }
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration, with a
/// small safety factor so 1/L remains a valid gradient step.
fn power_iteration_max_eig(h: &DMatrix<f64>) -> f64 {
    let p = h.nrows();
    // Deterministic start with a mild ramp so it is not orthogonal to the
    // leading eigenvector in symmetric cases.
    let mut v = DVector::from_fn(p, |i, _| 1.0 + 0.01 * (i as f64 + 1.0));
    v /= v.norm();
    let mut eig = 0.0;
    for _ in 0..200 {
        let hv = h * &v;
        let norm = hv.norm();
        if norm <= f64::MIN_POSITIVE {
            return 0.0;
        }
        let new_eig = v.dot(&hv);
        let next = hv / norm;
        if (new_eig - eig).abs() <= 1e-9 * new_eig.abs() {
            return new_eig.max(0.0);
        }
        eig = new_eig;
        v = next;
    }
    eig.max(0.0)
}

/// KKT residual of `w` for the quadratic over the simplex.
///
/// With gradient `g`, multiplier `mu` = support-weighted mean of `g`:
/// support coordinates contribute `|g_j - mu|`, inactive ones
/// `max(0, mu - g_j)`. Zero exactly at a KKT point.
fn kkt_residual(q: &Quadratic, w: &DVector<f64>, activity_tol: f64) -> f64 {
    let g = q.gradient(w);
    let mut mass = 0.0;
    let mut mu = 0.0;
    for j in 0..w.len() {
        if w[j] > activity_tol {
            mass += w[j];
            mu += w[j] * g[j];
        }
    }
    if mass <= 0.0 {
        // Cannot happen on the simplex (some coordinate is >= 1/p), but
        // stay defined.
        return f64::INFINITY;
    }
    mu /= mass;
    let mut res: f64 = 0.0;
    for j in 0..w.len() {
        if w[j] > activity_tol {
            res = res.max((g[j] - mu).abs());
        } else {
            res = res.max(mu - g[j]);
        }
    }
    res.max(0.0)
}

/// Solves the equality-constrained KKT system restricted to `support` and
/// returns the polished point if it is primal feasible. Uses an SVD
/// least-squares solve so rank-deficient supports (duplicate columns with
/// lambda = 0) land on the minimum-norm optimum.
fn active_set_polish(q: &Quadratic, support: &[usize]) -> Option<DVector<f64>> {
    let s = support.len();
    if s == 0 {
        return None;
    }
    let p = q.linear.len();
    let mut kkt = DMatrix::zeros(s + 1, s + 1);
    let mut rhs = DVector::zeros(s + 1);
    for (a, &ja) in support.iter().enumerate() {
        for (b, &jb) in support.iter().enumerate() {
            kkt[(a, b)] = q.hessian[(ja, jb)];
        }
        kkt[(a, s)] = 1.0;
        kkt[(s, a)] = 1.0;
        rhs[a] = -q.linear[ja];
    }
    rhs[s] = 1.0;
    let svd = kkt.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let eps = max_sv * 1e-13 * (s + 1) as f64;
    let sol = svd.solve(&rhs, eps).ok()?;
    // Verify the system was actually solved (it may be inconsistent when
    // the guessed support is wrong).
    if (kkt * &sol - rhs).norm() > 1e-9 * (1.0 + rhs.norm()) {
        return None;
    }
    let mut w = DVector::zeros(p);
    let mut sum = 0.0;
    for (a, &ja) in support.iter().enumerate() {
        let wj = sol[a];
        if wj < -1e-12 {
            return None;
        }
        let wj = wj.max(0.0);
        w[ja] = wj;
        sum += wj;
    }
    if sum <= 0.0 {
        return None;
    }
    w /= sum;
    Some(w)
}

/// Simplex-constrained regularised least squares.
///
/// Minimises `(1/m) ||y - A w||^2 + lambda ||w||^2` over the simplex and
/// certifies the result by its KKT residual. Deterministic. On iteration
/// exhaustion the error carries the best iterate found.
pub fn solve_simplex_ls(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    tol: f64,
    max_iters: usize,
) -> Result<QpSolution> {
    let (m, p) = (a.nrows(), a.ncols());
    if m == 0 || p == 0 {
        return Err(Error::ShapeMismatch(format!(
            "need m >= 1 and p >= 1, got {m} x {p}"
        )));
    }
    if y.len() != m {
        return Err(Error::ShapeMismatch(format!(
            "A has {m} rows but y has {} entries",
            y.len()
        )));
    }
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidInput("lambda must be finite and >= 0".into()));
    }
    if a.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite matrix entries".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }

    let q = Quadratic::from_ls(a, y, lambda);
    let finish = |w: DVector<f64>, iters: usize| -> Result<QpSolution> {
        let res = kkt_residual(&q, &w, tol);
        let resid = y - a * &w;
        let objective = resid.dot(&resid) / m as f64 + lambda * w.dot(&w);
        Ok(QpSolution {
            weights: SimplexWeights::new(w)?,
            objective,
            kkt_residual: res,
            iterations: iters,
        })
    };

    if p == 1 {
        return finish(DVector::from_element(1, 1.0), 0);
    }

    let lipschitz = power_iteration_max_eig(&q.hessian) * 1.02;
    let mut x = DVector::from_element(p, 1.0 / p as f64);
    if lipschitz <= f64::MIN_POSITIVE {
        // Zero curvature: the objective is constant in w.
        return finish(x, 0);
    }
    let step = 1.0 / lipschitz;

    let mut x_prev = x.clone();
    let mut t_prev = 1.0f64;
    let mut best = x.clone();
    let mut best_res = kkt_residual(&q, &x, tol);
    let polish_period = 250usize;

    for iter in 0..max_iters {
        if best_res <= tol {
            return finish(best, iter);
        }
        let t = 0.5 * (1.0 + (1.0 + 4.0 * t_prev * t_prev).sqrt());
        let beta = (t_prev - 1.0) / t;
        let yk = &x + (&x - &x_prev) * beta;
        let x_next = project_simplex(&(&yk - q.gradient(&yk) * step))?.0;

        // Adaptive restart when momentum points uphill.
        if (&yk - &x_next).dot(&(&x_next - &x)) > 0.0 {
            t_prev = 1.0;
        } else {
            t_prev = t;
        }
        x_prev = x;
        x = x_next;

        let res = kkt_residual(&q, &x, tol);
        if res < best_res {
            best_res = res;
            best = x.clone();
        }

        // Snap to the exact optimum on the current support once the
        // iterate is near a face, or periodically.
        if res <= tol * 1e4 || (iter + 1) % polish_period == 0 {
            let support: Vec<usize> = (0..p).filter(|&j| x[j] > tol).collect();
            if let Some(w) = active_set_polish(&q, &support) {
                let pres = kkt_residual(&q, &w, tol);
                if pres < best_res && q.objective(&w) <= q.objective(&best) + 1e-15 {
                    best_res = pres;
                    best = w.clone();
                }
                if pres <= tol {
                    return finish(best, iter + 1);
                }
            }
        }
    }
    if best_res <= tol {
        return finish(best, max_iters);
    }
    let sol = finish(best, max_iters)?;
    Err(Error::SolverDidNotConverge {
        kkt_residual: sol.kkt_residual,
        iterations: max_iters,
        best: Box::new(sol),
    })
}

/// Euclidean distance from `target` to the convex hull of the peer
/// columns, with the witness weights attaining it.
///
/// The distance is zero (within `tol`) exactly when the target lies in the
/// hull. Duplicating peer columns leaves the result unchanged.
pub fn hull_distance(
    target: &DVector<f64>,
    peers: &DMatrix<f64>,
    tol: f64,
) -> Result<(f64, SimplexWeights)> {
    if peers.ncols() == 0 {
        return Err(Error::ShapeMismatch("need at least one peer column".into()));
    }
    if peers.nrows() != target.len() {
        return Err(Error::ShapeMismatch(format!(
            "target has {} coordinates but peers have {} rows",
            target.len(),
            peers.nrows()
        )));
    }
    let kkt_tol = tol.min(1e-10).max(1e-14);
    let sol = match solve_simplex_ls(peers, target, 0.0, kkt_tol, 200_000) {
        Ok(s) => s,
        // The best iterate still provides a valid (upper-bound) witness.
        Err(Error::SolverDidNotConverge { best, .. }) => *best,
        Err(e) => return Err(e),
    };
    let dist = (target - peers * sol.weights.as_vector()).norm();
    Ok((dist, sol.weights))
}

/// Unconstrained least squares over the linear span of the columns of `A`,
/// returning the minimum-norm coefficient vector and the residual norm.
///
/// The span residual can never exceed the simplex residual on the same
/// data: the feasible set only grows.
pub fn solve_linear_span_ls(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return Err(Error::ShapeMismatch("empty design matrix".into()));
    }
    if a.nrows() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "A has {} rows but y has {} entries",
            a.nrows(),
            y.len()
        )));
    }
    let svd = a.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if max_sv <= f64::MIN_POSITIVE {
        return Ok((DVector::zeros(a.ncols()), y.norm()));
    }
    let eps = max_sv * 1e-12 * a.nrows().max(a.ncols()) as f64;
    let coeffs = svd
        .solve(y, eps)
        .map_err(|e| Error::InvalidInput(format!("svd solve failed: {e}")))?;
    let residual = (y - a * &coeffs).norm();
    Ok((coeffs, residual))
}
