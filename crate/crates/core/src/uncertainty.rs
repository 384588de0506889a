//! Credible sets for filaments.
//!
//! Posterior draws of the surface are screened by sup-norm bands on the three
//! second derivatives `f20, f11, f02` around the posterior mean. The band
//! half-widths are `rho` times the `(1 - gamma)` posterior quantiles of the
//! corresponding sup-norm deviations. Surviving draws induce the credible
//! filaments; a Hausdorff ball around the posterior-mean filament gives the
//! second, coarser credible set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bspline::{BasisSpec, LocalBasis};
use crate::error::{Error, Result};
use crate::field::{eval_coeffs, ScalarField, Surface};
use crate::metrics::hausdorff_points;
use crate::posterior::FittedPosterior;
use crate::ridge::{scms, Filament, ScmsConfig};
use crate::Point;

/// Second-derivative multi-indices in band order `k = 1, 2, 3`.
pub const SECOND_DERIVATIVES: [(usize, usize); 3] = [(2, 0), (1, 1), (0, 2)];

pub const DEFAULT_GRID: usize = 64;
pub const DEFAULT_RHO: f64 = 1.2;

const ASCENT_MAX_STEPS: usize = 100;
const ASCENT_MIN_GAIN: f64 = 1e-12;
const ASCENT_FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Grid,
    GridAscent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupNormEstimate {
    pub value: f64,
    pub argmax: Point,
    pub method: SearchMethod,
}

/// Parameters of the credible sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibleSpec {
    pub gamma: f64,
    pub rho: f64,
    /// Sup-norm quantiles for `f20, f11, f02`.
    pub r_quantiles: [f64; 3],
    /// Scale `C / eta` of the Hausdorff radius.
    pub c_over_eta: f64,
}

impl CredibleSpec {
    pub fn new(gamma: f64, rho: f64, r_quantiles: [f64; 3], c_over_eta: f64) -> Result<Self> {
        let spec = Self {
            gamma,
            rho,
            r_quantiles,
            c_over_eta,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the domains of every parameter. `rho` may be any nonnegative
    /// value here so that degenerate bands can be probed; the usual setting
    /// is `rho > 1`.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 0.5) {
            return Err(Error::Config(format!("gamma must lie in (0, 0.5), got {}", self.gamma)));
        }
        if !(self.rho >= 0.0) {
            return Err(Error::Config(format!("rho must be nonnegative, got {}", self.rho)));
        }
        if self.r_quantiles.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::Config(format!(
                "sup-norm quantiles must be finite and nonnegative, got {:?}",
                self.r_quantiles
            )));
        }
        if !(self.c_over_eta > 0.0) {
            return Err(Error::Config(format!("C/eta must be positive, got {}", self.c_over_eta)));
        }
        Ok(())
    }

    /// Band half-width `rho R_k` for derivative `k` (0-based).
    pub fn band(&self, k: usize) -> f64 {
        self.rho * self.r_quantiles[k]
    }

    /// Radius `(C / eta) rho max_k R_k` of the Hausdorff ball.
    pub fn radius(&self) -> f64 {
        let r = self.r_quantiles.iter().copied().fold(0.0, f64::max);
        self.c_over_eta * self.rho * r
    }
}

/// Cached grid evaluation of `D^r` of a spline for many coefficient vectors.
struct GridEvaluator<'a> {
    spec: &'a BasisSpec,
    r: (usize, usize),
    coords: Vec<f64>,
    axis1: Vec<LocalBasis>,
    axis2: Vec<LocalBasis>,
}

impl<'a> GridEvaluator<'a> {
    fn new(spec: &'a BasisSpec, r: (usize, usize), grid_n: usize) -> Result<Self> {
        if grid_n < 8 {
            return Err(Error::Config(format!("sup-norm grid needs at least 8 points per side, got {grid_n}")));
        }
        spec.check_multi_index(r)?;
        let coords: Vec<f64> = (0..grid_n).map(|i| i as f64 / (grid_n - 1) as f64).collect();
        let axis1 = coords.iter().map(|&t| spec.kv1.local(t, r.0)).collect();
        let axis2 = coords.iter().map(|&t| spec.kv2.local(t, r.1)).collect();
        Ok(Self {
            spec,
            r,
            coords,
            axis1,
            axis2,
        })
    }

    fn grid_max(&self, theta: &[f64]) -> (f64, Point) {
        let mut best = (-1.0, [0.0, 0.0]);
        for (i, a) in self.axis1.iter().enumerate() {
            for (j, b) in self.axis2.iter().enumerate() {
                let mut g = 0.0;
                self.spec.for_each_nonzero(a, b, self.r, |idx, w| g += theta[idx] * w);
                let g = g.abs();
                if g > best.0 {
                    best = (g, [self.coords[i], self.coords[j]]);
                }
            }
        }
        best
    }

    fn sup_abs(&self, theta: &[f64]) -> SupNormEstimate {
        let (value, argmax) = self.grid_max(theta);
        let h = |x: Point| eval_coeffs(self.spec, theta, x, self.r).abs();
        let (value, argmax) = ascend(h, argmax, value, 1.0 / (self.coords.len() - 1) as f64);
        SupNormEstimate {
            value,
            argmax,
            method: SearchMethod::GridAscent,
        }
    }
}

/// Projected gradient ascent of `h` on the unit square from `(x, hx)`, with
/// finite-difference gradients and backtracking.
fn ascend(h: impl Fn(Point) -> f64, mut x: Point, mut hx: f64, initial_step: f64) -> (f64, Point) {
    let mut step = initial_step;
    for _ in 0..ASCENT_MAX_STEPS {
        let mut grad = [0.0; 2];
        for k in 0..2 {
            let mut hi = x;
            let mut lo = x;
            hi[k] = (x[k] + ASCENT_FD_STEP).min(1.0);
            lo[k] = (x[k] - ASCENT_FD_STEP).max(0.0);
            grad[k] = (h(hi) - h(lo)) / (hi[k] - lo[k]);
        }
        let norm = grad[0].hypot(grad[1]);
        if !(norm > 0.0) {
            break;
        }
        let dir = [grad[0] / norm, grad[1] / norm];
        let mut improved = None;
        let mut s = step;
        for _ in 0..40 {
            let cand = [
                (x[0] + s * dir[0]).clamp(0.0, 1.0),
                (x[1] + s * dir[1]).clamp(0.0, 1.0),
            ];
            let hc = h(cand);
            if hc > hx {
                improved = Some((cand, hc, s));
                break;
            }
            s *= 0.5;
        }
        match improved {
            Some((cand, hc, s)) => {
                let gain = hc - hx;
                x = cand;
                hx = hc;
                step = (2.0 * s).min(initial_step);
                if gain < ASCENT_MIN_GAIN {
                    break;
                }
            }
            None => break,
        }
    }
    (hx, x)
}

/// `sup_x |D^r a(x) - D^r b(x)|` by grid search refined with local ascent.
pub fn sup_norm_diff(
    field_a: &ScalarField,
    field_b: &ScalarField,
    r: (usize, usize),
    grid_n: usize,
) -> Result<SupNormEstimate> {
    let diff = field_a.difference(field_b)?;
    let eval = GridEvaluator::new(diff.spec(), r, grid_n)?;
    Ok(eval.sup_abs(diff.theta()))
}

/// `(1 - gamma)` empirical quantile: the order statistic of rank
/// `ceil((1 - gamma) m)`.
pub fn empirical_quantile(values: &[f64], gamma: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    // Guard against (1 - gamma) m landing a rounding error above an integer.
    let rank = ((1.0 - gamma) * m as f64 - 1e-9).ceil().clamp(1.0, m as f64) as usize;
    sorted[rank - 1]
}

/// Posterior sup-norm deviations and their quantiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RQuantiles {
    pub gamma: f64,
    pub values: [f64; 3],
    /// Per-draw suprema, one vector per derivative.
    pub suprema: [Vec<f64>; 3],
}

impl RQuantiles {
    /// Quantiles of the same suprema at another level.
    pub fn at_level(&self, gamma: f64) -> [f64; 3] {
        [0, 1, 2].map(|k| empirical_quantile(&self.suprema[k], gamma))
    }
}

/// Sup-norm deviations `sup |D^r (f - f_mean)|` of posterior draws at
/// `sigma^2 = sigma2_hat`, for one multi-index.
pub fn sup_norm_deviations(
    post: &FittedPosterior,
    r: (usize, usize),
    sample_count: usize,
    grid_n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let eval = GridEvaluator::new(&post.spec, r, grid_n)?;
    let draws = post.sample_theta(post.sigma2_hat, seed, sample_count);
    Ok(draws
        .par_iter()
        .map(|theta| {
            let delta: Vec<f64> = theta.iter().zip(&post.mean_theta).map(|(a, b)| a - b).collect();
            eval.sup_abs(&delta).value
        })
        .collect())
}

/// Estimates `R_k` for `k = 1, 2, 3` from `sample_count` posterior draws.
pub fn estimate_r_quantiles(
    post: &FittedPosterior,
    sample_count: usize,
    gamma: f64,
    grid_n: usize,
    seed: u64,
) -> Result<RQuantiles> {
    if sample_count < 20 {
        return Err(Error::Config(format!("need at least 20 posterior draws, got {sample_count}")));
    }
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(Error::Config(format!("gamma must lie in (0, 0.5), got {gamma}")));
    }
    let evals = SECOND_DERIVATIVES
        .iter()
        .map(|&r| GridEvaluator::new(&post.spec, r, grid_n))
        .collect::<Result<Vec<_>>>()?;
    let draws = post.sample_theta(post.sigma2_hat, seed, sample_count);
    let sups: Vec<[f64; 3]> = draws
        .par_iter()
        .map(|theta| {
            let delta: Vec<f64> = theta.iter().zip(&post.mean_theta).map(|(a, b)| a - b).collect();
            [0, 1, 2].map(|k| evals[k].sup_abs(&delta).value)
        })
        .collect();
    let suprema = [0, 1, 2].map(|k| sups.iter().map(|s| s[k]).collect::<Vec<_>>());
    let values = [0, 1, 2].map(|k| empirical_quantile(&suprema[k], gamma));
    Ok(RQuantiles {
        gamma,
        values,
        suprema,
    })
}

/// Band membership of one surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandCheck {
    pub sups: [f64; 3],
    pub per_k: [bool; 3],
    pub inside: bool,
}

fn band_check(sups: [f64; 3], spec: &CredibleSpec) -> BandCheck {
    let per_k = [0, 1, 2].map(|k| sups[k] <= spec.band(k));
    BandCheck {
        sups,
        per_k,
        inside: per_k.iter().all(|&b| b),
    }
}

/// Whether `candidate` lies in all three derivative bands around `center`.
pub fn in_band(
    candidate: &ScalarField,
    center: &ScalarField,
    spec: &CredibleSpec,
    grid_n: usize,
) -> Result<BandCheck> {
    let mut sups = [0.0; 3];
    for (k, &r) in SECOND_DERIVATIVES.iter().enumerate() {
        sups[k] = sup_norm_diff(candidate, center, r, grid_n)?.value;
    }
    Ok(band_check(sups, spec))
}

/// Band screening of fresh posterior draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandScreen {
    pub checks: Vec<BandCheck>,
    /// `None` when no draws were made.
    pub acceptance_fraction: Option<f64>,
}

fn screen_draws(
    post: &FittedPosterior,
    spec: &CredibleSpec,
    draws: &[Vec<f64>],
    grid_n: usize,
) -> Result<BandScreen> {
    spec.validate()?;
    let evals = SECOND_DERIVATIVES
        .iter()
        .map(|&r| GridEvaluator::new(&post.spec, r, grid_n))
        .collect::<Result<Vec<_>>>()?;
    let checks: Vec<BandCheck> = draws
        .par_iter()
        .map(|theta| {
            let delta: Vec<f64> = theta.iter().zip(&post.mean_theta).map(|(a, b)| a - b).collect();
            band_check([0, 1, 2].map(|k| evals[k].sup_abs(&delta).value), spec)
        })
        .collect();
    let accepted = checks.iter().filter(|c| c.inside).count();
    let acceptance_fraction = (!checks.is_empty()).then(|| accepted as f64 / checks.len() as f64);
    Ok(BandScreen {
        checks,
        acceptance_fraction,
    })
}

/// Draws `sample_count` posterior surfaces and checks each against the bands.
pub fn band_acceptance(
    post: &FittedPosterior,
    spec: &CredibleSpec,
    sample_count: usize,
    grid_n: usize,
    seed: u64,
) -> Result<BandScreen> {
    let draws = post.sample_theta(post.sigma2_hat, seed, sample_count);
    screen_draws(post, spec, &draws, grid_n)
}

/// Filaments of posterior draws that pass the bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibleRun {
    pub screen: BandScreen,
    /// `(draw index, filament)` for each accepted draw.
    pub filaments: Vec<(usize, Filament)>,
}

/// Samples the credible set of filaments.
pub fn credible_filaments(
    post: &FittedPosterior,
    spec: &CredibleSpec,
    scms_cfg: &ScmsConfig,
    sample_count: usize,
    grid_n: usize,
    seed: u64,
) -> Result<CredibleRun> {
    scms_cfg.validate()?;
    let draws = post.sample_theta(post.sigma2_hat, seed, sample_count);
    let screen = screen_draws(post, spec, &draws, grid_n)?;
    let accepted: Vec<usize> = screen
        .checks
        .iter()
        .enumerate()
        .filter(|(_, c)| c.inside)
        .map(|(i, _)| i)
        .collect();
    let filaments = accepted
        .into_iter()
        .map(|i| {
            let field = ScalarField::new(post.spec.clone(), draws[i].clone())?;
            Ok((i, scms(&field, scms_cfg)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CredibleRun { screen, filaments })
}

/// Whether `candidate` lies within the Hausdorff ball around `center`.
pub fn in_hausdorff_ball(candidate: &Filament, center: &Filament, spec: &CredibleSpec) -> Result<bool> {
    let d = hausdorff_points(&candidate.ridge_points(), &center.ridge_points())?;
    Ok(d <= spec.radius())
}

/// `C / eta` with `C = sup |grad f|` over the unit square and `eta` the
/// smallest `-lambda` over the filament's ridge points.
pub fn estimate_c_over_eta<S: Surface + ?Sized>(field: &S, filament: &Filament) -> Result<f64> {
    let lambdas: Vec<f64> = filament.converged().map(|r| r.lambda).collect();
    if lambdas.is_empty() {
        return Err(Error::Estimation("filament has no ridge points".into()));
    }
    if let Some(bad) = lambdas.iter().find(|&&l| !(l < 0.0)) {
        return Err(Error::Estimation(format!(
            "filament point with nonnegative eigenvalue {bad}"
        )));
    }
    let eta = lambdas.iter().map(|l| -l).fold(f64::INFINITY, f64::min);
    let c = sup_gradient_norm(field, DEFAULT_GRID).value;
    Ok(c / eta)
}

/// `sup |grad f|` by grid search refined with local ascent.
pub fn sup_gradient_norm<S: Surface + ?Sized>(field: &S, grid_n: usize) -> SupNormEstimate {
    let h = |x: Point| {
        let g = field.jet(x).grad;
        g[0].hypot(g[1])
    };
    let n = grid_n.max(2);
    let mut best = (-1.0, [0.0, 0.0]);
    for i in 0..n {
        for j in 0..n {
            let x = [i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64];
            let v = h(x);
            if v > best.0 {
                best = (v, x);
            }
        }
    }
    let (value, argmax) = ascend(h, best.1, best.0, 1.0 / (n - 1) as f64);
    SupNormEstimate {
        value,
        argmax,
        method: SearchMethod::GridAscent,
    }
}
