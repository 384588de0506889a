//! Conjugate Gaussian posterior over tensor-spline coefficients.
//!
//! With `theta | sigma^2 ~ N(theta0, sigma^2 Lambda0)` and Gaussian noise the
//! posterior is Gaussian with precision `P = B'B + Lambda0^{-1}` (up to
//! `sigma^2`). Every quantity is computed in coefficient space through the
//! Cholesky factor of `P`; the `n x n` matrices of the marginal model are
//! never formed:
//!
//! * `(B Lambda0 B' + I)^{-1} = I - B P^{-1} B'` (Woodbury), used for the
//!   empirical-Bayes noise variance;
//! * `det(B Lambda0 B' + I) = det(P) det(Lambda0)`, used for the model score.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bspline::{check_points, BasisSpec};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::Point;

/// Gaussian prior `N(theta0, sigma^2 diag(lambda0_diag))` on the coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub theta0: Vec<f64>,
    pub lambda0_diag: Vec<f64>,
    /// Spectral bounds `(c1, c2)` every diagonal entry was checked against.
    pub bounds: (f64, f64),
}

impl PriorSpec {
    pub fn new(theta0: Vec<f64>, lambda0_diag: Vec<f64>, c1: f64, c2: f64) -> Result<Self> {
        if !(c1 > 0.0 && c1 <= c2 && c2.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "prior bounds must satisfy 0 < c1 <= c2 < inf, got ({c1}, {c2})"
            )));
        }
        if theta0.len() != lambda0_diag.len() {
            return Err(Error::DimensionMismatch {
                expected: theta0.len(),
                found: lambda0_diag.len(),
            });
        }
        if let Some(bad) = lambda0_diag.iter().find(|&&l| !(c1..=c2).contains(&l)) {
            return Err(Error::InvalidSpec(format!(
                "prior variance {bad} outside [{c1}, {c2}]"
            )));
        }
        if theta0.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidSpec("non-finite prior mean".into()));
        }
        Ok(Self {
            theta0,
            lambda0_diag,
            bounds: (c1, c2),
        })
    }

    /// Constant prior mean and a scalar multiple of the identity.
    pub fn isotropic(dim: usize, mean: f64, variance: f64) -> Result<Self> {
        Self::new(vec![mean; dim], vec![variance; dim], variance, variance)
    }

    /// `theta0 = 0`, `Lambda0 = I`.
    pub fn standard(spec: &BasisSpec) -> Self {
        Self::isotropic(spec.dim(), 0.0, 1.0).expect("unit prior is valid")
    }

    pub fn dim(&self) -> usize {
        self.theta0.len()
    }

    fn log_det_lambda0(&self) -> f64 {
        self.lambda0_diag.iter().map(|l| l.ln()).sum()
    }
}

/// Sufficient statistics of the residual `r = Y - B theta0`.
struct Moments {
    gram: DMatrix<f64>,
    btr: DVector<f64>,
    rtr: f64,
    n: usize,
}

impl Moments {
    fn from_dense(b: &DMatrix<f64>, ys: &[f64], theta0: &[f64]) -> Result<Self> {
        check_data(b.nrows(), ys)?;
        if b.ncols() != theta0.len() {
            return Err(Error::DimensionMismatch {
                expected: theta0.len(),
                found: b.ncols(),
            });
        }
        let r = DVector::from_column_slice(ys) - b * DVector::from_column_slice(theta0);
        Ok(Self {
            gram: b.tr_mul(b),
            btr: b.tr_mul(&r),
            rtr: r.dot(&r),
            n: ys.len(),
        })
    }

    fn from_spline(spec: &BasisSpec, xs: &[Point], ys: &[f64], theta0: &[f64]) -> Result<Self> {
        check_data(xs.len(), ys)?;
        check_points(xs)?;
        let p = spec.dim();
        if theta0.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: theta0.len(),
            });
        }
        let mut gram = DMatrix::zeros(p, p);
        let mut btr = DVector::zeros(p);
        let mut rtr = 0.0;
        let mut idx = Vec::with_capacity(spec.kv1.order() * spec.kv2.order());
        let mut val = Vec::with_capacity(idx.capacity());
        for (&x, &y) in xs.iter().zip(ys) {
            idx.clear();
            val.clear();
            let (a, b) = spec.local(x, 0);
            spec.for_each_nonzero(&a, &b, (0, 0), |j, w| {
                idx.push(j);
                val.push(w);
            });
            let fitted: f64 = idx.iter().zip(&val).map(|(&j, &w)| theta0[j] * w).sum();
            let r = y - fitted;
            rtr += r * r;
            for (k, (&jk, &wk)) in idx.iter().zip(&val).enumerate() {
                btr[jk] += wk * r;
                for (&jl, &wl) in idx[..=k].iter().zip(&val[..=k]) {
                    gram[(jk, jl)] += wk * wl;
                }
            }
        }
        // Only one triangle was accumulated.
        for i in 0..p {
            for j in 0..i {
                let v = gram[(i, j)] + gram[(j, i)];
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        Ok(Self {
            gram,
            btr,
            rtr,
            n: xs.len(),
        })
    }

    fn solve(self, prior: &PriorSpec) -> Result<LinearPosterior> {
        let mut precision = self.gram;
        for (i, l) in prior.lambda0_diag.iter().enumerate() {
            precision[(i, i)] += 1.0 / l;
        }
        let chol = Cholesky::new(precision).ok_or_else(|| {
            Error::Numerical("posterior precision is not positive definite".into())
        })?;
        let u = chol.solve(&self.btr);
        let mean = DVector::from_column_slice(&prior.theta0) + &u;
        let quad = self.rtr - self.btr.dot(&u);
        let sigma2_hat = (quad / self.n as f64).max(0.0);
        let l = chol.unpack();
        let log_det_precision = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(LinearPosterior {
            mean_theta: mean.as_slice().to_vec(),
            precision_chol: l,
            sigma2_hat,
            n: self.n,
            log_det_precision,
            log_det_lambda0: prior.log_det_lambda0(),
        })
    }
}

fn check_data(rows: usize, ys: &[f64]) -> Result<()> {
    if rows != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: rows,
            found: ys.len(),
        });
    }
    if ys.is_empty() {
        return Err(Error::Data("no observations".into()));
    }
    if let Some(i) = ys.iter().position(|y| !y.is_finite()) {
        return Err(Error::Data(format!("non-finite response at row {i}")));
    }
    Ok(())
}

/// Posterior of a Gaussian linear model with an arbitrary dense design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPosterior {
    pub mean_theta: Vec<f64>,
    /// Lower Cholesky factor `L` with `L L' = B'B + Lambda0^{-1}`.
    pub precision_chol: DMatrix<f64>,
    pub sigma2_hat: f64,
    pub n: usize,
    pub log_det_precision: f64,
    pub log_det_lambda0: f64,
}

impl LinearPosterior {
    /// `log det(B Lambda0 B' + I_n)`.
    pub fn log_det_marginal(&self) -> f64 {
        self.log_det_precision + self.log_det_lambda0
    }

    pub fn score(&self) -> ModelScore {
        let log_det = self.log_det_marginal();
        let value = if self.sigma2_hat > 0.0 {
            -(self.n as f64) * self.sigma2_hat.ln() - log_det
        } else {
            f64::INFINITY
        };
        ModelScore {
            value,
            sigma2_hat: self.sigma2_hat,
            log_det,
        }
    }

    /// Draws `theta = mean + sigma L^{-T} z`, `z ~ N(0, I)`.
    pub fn sample(&self, sigma2: f64, seed: u64, count: usize) -> Vec<Vec<f64>> {
        let p = self.mean_theta.len();
        let sigma = sigma2.max(0.0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let z = DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
            let dev = self
                .precision_chol
                .tr_solve_lower_triangular(&z)
                .expect("Cholesky factor has a positive diagonal");
            out.push(
                self.mean_theta
                    .iter()
                    .zip(dev.iter())
                    .map(|(m, d)| m + sigma * d)
                    .collect(),
            );
        }
        out
    }
}

/// Conjugate update for a dense design `b` (rows are observations).
pub fn fit_design(b: &DMatrix<f64>, ys: &[f64], prior: &PriorSpec) -> Result<LinearPosterior> {
    Moments::from_dense(b, ys, &prior.theta0)?.solve(prior)
}

/// Empirical-Bayes noise variance for a dense design.
pub fn empirical_bayes_sigma2(b: &DMatrix<f64>, ys: &[f64], prior: &PriorSpec) -> Result<f64> {
    Ok(fit_design(b, ys, prior)?.sigma2_hat)
}

/// Unnormalized log marginal likelihood `-2n log sigma_hat - log det(B Lambda0 B' + I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    /// `+inf` when the residual to the prior mean vanishes.
    pub value: f64,
    pub sigma2_hat: f64,
    pub log_det: f64,
}

impl ModelScore {
    /// Zero residual: the score is a sentinel, not a likelihood.
    pub fn is_degenerate(&self) -> bool {
        self.sigma2_hat <= 0.0
    }
}

/// Posterior of the tensor-spline regression model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPosterior {
    pub spec: BasisSpec,
    pub prior: PriorSpec,
    pub mean_theta: Vec<f64>,
    pub precision_chol: DMatrix<f64>,
    pub sigma2_hat: f64,
    pub n: usize,
    pub log_det_precision: f64,
}

impl FittedPosterior {
    fn linear(&self) -> LinearPosterior {
        LinearPosterior {
            mean_theta: self.mean_theta.clone(),
            precision_chol: self.precision_chol.clone(),
            sigma2_hat: self.sigma2_hat,
            n: self.n,
            log_det_precision: self.log_det_precision,
            log_det_lambda0: self.prior.log_det_lambda0(),
        }
    }

    /// The posterior-mean surface.
    pub fn mean_field(&self) -> ScalarField {
        ScalarField::new(self.spec.clone(), self.mean_theta.clone())
            .expect("posterior mean matches its basis")
    }

    pub fn score(&self) -> ModelScore {
        self.linear().score()
    }

    /// Posterior draws at noise variance `sigma2`; deterministic in `seed`.
    pub fn sample_theta(&self, sigma2: f64, seed: u64, count: usize) -> Vec<Vec<f64>> {
        self.linear().sample(sigma2, seed, count)
    }

    /// `B'B + Lambda0^{-1}` reassembled from the factor.
    pub fn precision(&self) -> DMatrix<f64> {
        &self.precision_chol * self.precision_chol.transpose()
    }
}

/// Fits the conjugate posterior of the spline model to `(xs, ys)`.
pub fn fit(spec: &BasisSpec, prior: &PriorSpec, xs: &[Point], ys: &[f64]) -> Result<FittedPosterior> {
    if prior.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: prior.dim(),
        });
    }
    let lin = Moments::from_spline(spec, xs, ys, &prior.theta0)?.solve(prior)?;
    Ok(FittedPosterior {
        spec: spec.clone(),
        prior: prior.clone(),
        mean_theta: lin.mean_theta,
        precision_chol: lin.precision_chol,
        sigma2_hat: lin.sigma2_hat,
        n: lin.n,
        log_det_precision: lin.log_det_precision,
    })
}

pub fn sample_theta(post: &FittedPosterior, sigma2: f64, seed: u64, count: usize) -> Vec<Vec<f64>> {
    post.sample_theta(sigma2, seed, count)
}

/// Model score of the spline model with basis `spec`.
pub fn log_model_score(
    spec: &BasisSpec,
    prior: &PriorSpec,
    xs: &[Point],
    ys: &[f64],
) -> Result<ModelScore> {
    Ok(fit(spec, prior, xs, ys)?.score())
}

/// Outcome of a grid search over basis sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub best: (usize, usize),
    pub scores: Vec<((usize, usize), ModelScore)>,
}

/// Picks `(J1, J2)` maximizing the model score.
///
/// Ties go to the smaller `J1 J2`, then the smaller `J1`. Degenerate
/// (zero-residual) candidates rank below every regular one.
pub fn select_j<F>(
    candidates: &[(usize, usize)],
    orders: (usize, usize),
    prior_for: F,
    xs: &[Point],
    ys: &[f64],
) -> Result<Selection>
where
    F: Fn(&BasisSpec) -> PriorSpec + Sync,
{
    if candidates.is_empty() {
        return Err(Error::Config("no candidate basis sizes".into()));
    }
    let scores = candidates
        .par_iter()
        .map(|&(j1, j2)| {
            let spec = BasisSpec::uniform(orders.0, j1, orders.1, j2)?;
            let prior = prior_for(&spec);
            Ok(((j1, j2), log_model_score(&spec, &prior, xs, ys)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let rank = |s: &ModelScore| {
        if s.is_degenerate() {
            f64::NEG_INFINITY
        } else {
            s.value
        }
    };
    let mut best = 0;
    for (i, (j, s)) in scores.iter().enumerate().skip(1) {
        let (bj, bs) = &scores[best];
        let (a, b) = (rank(s), rank(bs));
        let better = a > b
            || (a == b && (j.0 * j.1, j.0) < (bj.0 * bj.1, bj.0));
        if better {
            best = i;
        }
    }
    Ok(Selection {
        best: scores[best].0,
        scores,
    })
}
