//! Filament extraction by subspace-constrained mean shift, and integral
//! curves of the eigenvector field with their hitting times.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::{dot, Surface};
use crate::Point;

/// Number of consecutive clamped iterates after which a seed is abandoned.
pub const MAX_CONSECUTIVE_CLAMPS: usize = 10;

/// Starting points for the mean-shift iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seeds {
    /// `n x n` lattice of cell centres `((i + 0.5) / n, (j + 0.5) / n)`.
    Grid(usize),
    Points(Vec<Point>),
}

impl Seeds {
    pub fn points(&self) -> Vec<Point> {
        match self {
            Seeds::Grid(n) => {
                let n = *n;
                let step = 1.0 / n as f64;
                (0..n)
                    .flat_map(|i| (0..n).map(move |j| [(i as f64 + 0.5) * step, (j as f64 + 0.5) * step]))
                    .collect()
            }
            Seeds::Points(p) => p.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmsConfig {
    /// Step multiplier on the projected gradient.
    pub step_a: f64,
    pub tol_eps: f64,
    /// Seeds with `f <= threshold_tau` are dropped.
    pub threshold_tau: f64,
    pub max_iter: usize,
    pub seeds: Seeds,
}

impl ScmsConfig {
    pub fn new(step_a: f64, tol_eps: f64, threshold_tau: f64) -> Self {
        Self {
            step_a,
            tol_eps,
            threshold_tau,
            max_iter: 10_000,
            seeds: Seeds::Grid(50),
        }
    }

    pub fn with_seeds(mut self, seeds: Seeds) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.step_a > 0.0
            && self.step_a.is_finite()
            && self.tol_eps > 0.0
            && self.max_iter >= 1
            && self.threshold_tau.is_finite();
        if ok {
            Ok(())
        } else {
            Err(crate::Error::Config(format!(
                "invalid mean-shift settings: step {}, tolerance {}, tau {}, max_iter {}",
                self.step_a, self.tol_eps, self.threshold_tau, self.max_iter
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Converged,
    /// Converged to a point where the smaller eigenvalue is not negative.
    RejectedLambda,
    MaxIter,
    DiscardedTau,
    Diverged,
}

impl PointStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointStatus::Converged => "converged",
            PointStatus::RejectedLambda => "rejected_lambda",
            PointStatus::MaxIter => "max_iter",
            PointStatus::DiscardedTau => "discarded_tau",
            PointStatus::Diverged => "diverged",
        }
    }
}

impl std::str::FromStr for PointStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "converged" => PointStatus::Converged,
            "rejected_lambda" => PointStatus::RejectedLambda,
            "max_iter" => PointStatus::MaxIter,
            "discarded_tau" => PointStatus::DiscardedTau,
            "diverged" => PointStatus::Diverged,
            other => return Err(format!("unknown point status `{other}`")),
        })
    }
}

/// Which half of the disjunctive stopping rule ended an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    StepBelowTol,
    ResidualBelowTol,
}

/// Final state of one mean-shift run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilamentPoint {
    pub seed: Point,
    pub point: Point,
    pub status: PointStatus,
    pub lambda: f64,
    pub iterations: usize,
    pub stop: Option<StopReason>,
}

/// Outcome of mean shift over every seed, one record per seed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Filament {
    pub records: Vec<FilamentPoint>,
}

impl Filament {
    pub fn from_records(records: Vec<FilamentPoint>) -> Self {
        Self { records }
    }

    /// Points that converged onto the ridge (negative eigenvalue).
    pub fn ridge_points(&self) -> Vec<Point> {
        self.converged().map(|r| r.point).collect()
    }

    pub fn converged(&self) -> impl Iterator<Item = &FilamentPoint> {
        self.records
            .iter()
            .filter(|r| r.status == PointStatus::Converged)
    }

    pub fn count(&self, status: PointStatus) -> usize {
        self.records.iter().filter(|r| r.status == status).count()
    }

    pub fn is_empty(&self) -> bool {
        self.converged().next().is_none()
    }
}

/// Result of one constrained step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub next: Point,
    pub clamped: bool,
    /// `<V, grad f>` at the starting point.
    pub projection: f64,
}

/// One update `x + a V V' grad f(x)`, clamped to the unit square.
pub fn scms_step<S: Surface + ?Sized>(field: &S, x: Point, step_a: f64) -> Step {
    oriented_step(field, x, step_a, 1.0)
}

fn oriented_step<S: Surface + ?Sized>(field: &S, x: Point, step_a: f64, orientation: f64) -> Step {
    let jet = field.jet(x);
    let v = jet.frame().v;
    let v = [orientation * v[0], orientation * v[1]];
    let projection = dot(v, jet.grad);
    let raw = [
        x[0] + step_a * projection * v[0],
        x[1] + step_a * projection * v[1],
    ];
    let next = [raw[0].clamp(0.0, 1.0), raw[1].clamp(0.0, 1.0)];
    Step {
        next,
        clamped: next != raw,
        projection,
    }
}

fn run_seed<S: Surface + ?Sized>(field: &S, seed: Point, cfg: &ScmsConfig, orientation: f64) -> FilamentPoint {
    let mut record = FilamentPoint {
        seed,
        point: seed,
        status: PointStatus::MaxIter,
        lambda: f64::NAN,
        iterations: 0,
        stop: None,
    };
    if field.value(seed) <= cfg.threshold_tau {
        record.status = PointStatus::DiscardedTau;
        record.lambda = field.frame(seed).lambda_min;
        return record;
    }
    let mut x = seed;
    let mut clamps = 0;
    for it in 0..cfg.max_iter {
        let step = oriented_step(field, x, cfg.step_a, orientation);
        if step.projection.abs() < cfg.tol_eps {
            record.stop = Some(StopReason::ResidualBelowTol);
            record.iterations = it;
            break;
        }
        let moved = (step.next[0] - x[0]).hypot(step.next[1] - x[1]);
        x = step.next;
        record.iterations = it + 1;
        if step.clamped {
            // A clamped iterate can stall on the boundary; that is not convergence.
            clamps += 1;
            if clamps > MAX_CONSECUTIVE_CLAMPS {
                record.status = PointStatus::Diverged;
                break;
            }
            continue;
        }
        clamps = 0;
        if moved < cfg.tol_eps {
            record.stop = Some(StopReason::StepBelowTol);
            break;
        }
    }
    record.point = x;
    record.lambda = field.frame(x).lambda_min;
    if record.stop.is_some() {
        record.status = if record.lambda < 0.0 {
            PointStatus::Converged
        } else {
            PointStatus::RejectedLambda
        };
    }
    record
}

/// Runs mean shift from every seed of `cfg` (in parallel, order preserved).
pub fn scms<S: Surface + ?Sized>(field: &S, cfg: &ScmsConfig) -> Filament {
    scms_oriented(field, cfg, 1.0)
}

fn scms_oriented<S: Surface + ?Sized>(field: &S, cfg: &ScmsConfig, orientation: f64) -> Filament {
    let seeds = cfg.seeds.points();
    let records = seeds
        .par_iter()
        .map(|&s| run_seed(field, s, cfg, orientation))
        .collect();
    Filament { records }
}

/// Sampled integral curve through `start`, in both time directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralCurve {
    pub start: Point,
    /// Increasing; negative times follow `-V`.
    pub times: Vec<f64>,
    pub states: Vec<Point>,
    /// First ridge crossing found in each direction, `(signed time, point)`.
    pub crossings: Vec<(f64, Point)>,
    pub hit: Option<(f64, Point)>,
}

/// Default RK4 step.
pub const DEFAULT_DT: f64 = 1e-3;

const HIT_TOL: f64 = 1e-10;
const MAX_BISECTIONS: usize = 60;

fn aligned<S: Surface + ?Sized>(field: &S, x: Point, reference: [f64; 2]) -> [f64; 2] {
    let v = field.frame(x).v;
    if dot(v, reference) < 0.0 {
        [-v[0], -v[1]]
    } else {
        v
    }
}

fn inside(x: Point) -> bool {
    (0.0..=1.0).contains(&x[0]) && (0.0..=1.0).contains(&x[1])
}

fn rk4<S: Surface + ?Sized>(field: &S, x: Point, dir: [f64; 2], h: f64) -> Point {
    let at = |p: Point| aligned(field, [p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0)], dir);
    let k1 = at(x);
    let k2 = at([x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1]]);
    let k3 = at([x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1]]);
    let k4 = at([x[0] + h * k3[0], x[1] + h * k3[1]]);
    [
        x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Residual against an oriented direction, with the eigenvalue.
fn oriented_residual<S: Surface + ?Sized>(field: &S, x: Point, dir: [f64; 2]) -> (f64, f64) {
    let jet = field.jet(x);
    let frame = jet.frame();
    let v = if dot(frame.v, dir) < 0.0 {
        [-frame.v[0], -frame.v[1]]
    } else {
        frame.v
    };
    (dot(jet.grad, v), frame.lambda_min)
}

struct Branch {
    times: Vec<f64>,
    states: Vec<Point>,
    hit: Option<(f64, Point)>,
}

fn trace_branch<S: Surface + ?Sized>(field: &S, x0: Point, sign: f64, t_max: f64, dt: f64) -> Branch {
    let v0 = field.frame(x0).v;
    let mut dir = [sign * v0[0], sign * v0[1]];
    let mut x = x0;
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut states = vec![x0];
    let mut hit = None;
    let (mut res, lam) = oriented_residual(field, x, dir);
    if res.abs() < HIT_TOL && lam < 0.0 {
        hit = Some((0.0, x0));
    }
    while t < t_max - 1e-15 {
        let h = dt.min(t_max - t);
        let next = rk4(field, x, dir, h);
        if !inside(next) {
            // Boundary crossings within rounding still count.
            let snapped = [next[0].clamp(0.0, 1.0), next[1].clamp(0.0, 1.0)];
            let overshoot = (snapped[0] - next[0]).abs().max((snapped[1] - next[1]).abs());
            if overshoot > 1e-9 {
                break;
            }
        }
        let next = [next[0].clamp(0.0, 1.0), next[1].clamp(0.0, 1.0)];
        let new_dir = aligned(field, next, dir);
        let (next_res, next_lam) = oriented_residual(field, next, dir);
        if hit.is_none() {
            if next_res.abs() < HIT_TOL && next_lam < 0.0 {
                hit = Some((t + h, next));
            } else if res * next_res < 0.0 {
                if let Some((s, p)) = bisect_crossing(field, x, dir, h, res) {
                    if field.frame(p).lambda_min < 0.0 {
                        hit = Some((t + s, p));
                    }
                }
            }
        }
        x = next;
        t += h;
        dir = new_dir;
        res = next_res;
        times.push(t);
        states.push(x);
    }
    Branch { times, states, hit }
}

fn bisect_crossing<S: Surface + ?Sized>(
    field: &S,
    x: Point,
    dir: [f64; 2],
    h: f64,
    res_lo: f64,
) -> Option<(f64, Point)> {
    let (mut lo, mut hi) = (0.0, h);
    let mut best = None;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let p = rk4(field, x, dir, mid);
        let p = [p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0)];
        let (r, _) = oriented_residual(field, p, dir);
        best = Some((mid, p));
        if r.abs() < HIT_TOL {
            break;
        }
        if r * res_lo < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    best
}

/// RK4 integral curve of the sign-aligned eigenvector field through `x0`,
/// traced for `|t| <= t_max` in both directions.
pub fn trace_integral_curve<S: Surface + ?Sized>(field: &S, x0: Point, t_max: f64, dt: f64) -> IntegralCurve {
    let fwd = trace_branch(field, x0, 1.0, t_max, dt);
    let bwd = trace_branch(field, x0, -1.0, t_max, dt);

    let mut times: Vec<f64> = bwd.times[1..].iter().rev().map(|t| -t).collect();
    let mut states: Vec<Point> = bwd.states[1..].iter().rev().copied().collect();
    times.extend(&fwd.times);
    states.extend(&fwd.states);

    let mut crossings = Vec::new();
    if let Some(h) = fwd.hit {
        crossings.push(h);
    }
    if let Some((t, p)) = bwd.hit {
        if t > 0.0 || fwd.hit.is_none() {
            crossings.push((-t, p));
        }
    }
    let mut curve = IntegralCurve {
        start: x0,
        times,
        states,
        crossings,
        hit: None,
    };
    curve.hit = hitting_time(&curve);
    curve
}

/// Ridge crossing with the smallest `|t|`.
pub fn hitting_time(curve: &IntegralCurve) -> Option<(f64, Point)> {
    curve
        .crossings
        .iter()
        .copied()
        .min_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))
}
