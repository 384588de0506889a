//! Synthetic ground truth: closed-form surfaces, noisy samples from them and
//! their reference filaments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::field::{Jet, Surface};
use crate::ridge::{scms, Filament, ScmsConfig};
use crate::Point;

/// Finite-difference step for analytic-field derivatives.
pub const FD_STEP: f64 = 1e-6;

/// Closed-form surface whose derivatives are taken by central differences.
#[derive(Debug, Clone, Copy)]
pub struct AnalyticField {
    f: fn(Point) -> f64,
    step: f64,
}

impl AnalyticField {
    pub fn new(f: fn(Point) -> f64) -> Self {
        Self { f, step: FD_STEP }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn eval(&self, x: Point) -> f64 {
        (self.f)(x)
    }
}

impl Surface for AnalyticField {
    fn value(&self, x: Point) -> f64 {
        (self.f)(x)
    }

    fn jet(&self, x: Point) -> Jet {
        let h = self.step;
        let f = |dx: f64, dy: f64| (self.f)([x[0] + dx, x[1] + dy]);
        let c = f(0.0, 0.0);
        let (xp, xm) = (f(h, 0.0), f(-h, 0.0));
        let (yp, ym) = (f(0.0, h), f(0.0, -h));
        let mixed = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
        Jet {
            value: c,
            grad: [(xp - xm) / (2.0 * h), (yp - ym) / (2.0 * h)],
            hess: [
                (xp - 2.0 * c + xm) / (h * h),
                mixed,
                (yp - 2.0 * c + ym) / (h * h),
            ],
        }
    }
}

/// Normal density with mean 0.5 and standard deviation 0.3.
pub fn ring_density(t: f64) -> f64 {
    const SD: f64 = 0.3;
    let z = (t - 0.5) / SD;
    (-0.5 * z * z).exp() / (SD * (2.0 * std::f64::consts::PI).sqrt())
}

/// `1 + phi(|x|)^(1 + cos^2(angle of x))`, the angle measured from the
/// `x1` axis; points on the `x2` axis (and the origin) take angle pi/2.
pub fn ring_surface(x: Point) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let cos2 = if x[0] == 0.0 { 0.0 } else { x[0] * x[0] / r2 };
    1.0 + ring_density(r2.sqrt()).powf(1.0 + cos2)
}

/// The simulation surface: a ridge along the quarter circle of radius
/// about 0.5, with angle-dependent height.
pub fn paper_surface() -> AnalyticField {
    AnalyticField::new(ring_surface)
}

/// `c + b . x + a11 x1^2 + a12 x1 x2 + a22 x2^2` with exact derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub c: f64,
    pub b: [f64; 2],
    /// `(a11, a12, a22)`.
    pub a: [f64; 3],
}

impl Quadratic {
    pub fn new(c: f64, b: [f64; 2], a: [f64; 3]) -> Self {
        Self { c, b, a }
    }

    /// Multiplies the whole surface by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            c: k * self.c,
            b: [k * self.b[0], k * self.b[1]],
            a: [k * self.a[0], k * self.a[1], k * self.a[2]],
        }
    }
}

impl Surface for Quadratic {
    fn value(&self, x: Point) -> f64 {
        let [a11, a12, a22] = self.a;
        self.c + self.b[0] * x[0] + self.b[1] * x[1] + a11 * x[0] * x[0] + a12 * x[0] * x[1] + a22 * x[1] * x[1]
    }

    fn jet(&self, x: Point) -> Jet {
        let [a11, a12, a22] = self.a;
        Jet {
            value: self.value(x),
            grad: [
                self.b[0] + 2.0 * a11 * x[0] + a12 * x[1],
                self.b[1] + a12 * x[0] + 2.0 * a22 * x[1],
            ],
            hess: [2.0 * a11, a12, 2.0 * a22],
        }
    }
}

/// `n` uniform design points on the unit square with responses
/// `f(x) + N(0, noise_sd^2)`; deterministic in `seed`.
pub fn generate<S: Surface + ?Sized>(
    field: &S,
    n: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<(Vec<Point>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Config("sample size must be positive".into()));
    }
    if !(noise_sd >= 0.0) {
        return Err(Error::Config(format!("noise level must be nonnegative, got {noise_sd}")));
    }
    let noise = Normal::new(0.0, noise_sd)
        .map_err(|e| Error::Config(format!("invalid noise level {noise_sd}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = [rng.random::<f64>(), rng.random::<f64>()];
        let e = noise.sample(&mut rng);
        xs.push(x);
        ys.push(field.value(x) + e);
    }
    Ok((xs, ys))
}

/// Mean-shift filament of a known surface, the reference for error metrics.
pub fn reference_filament<S: Surface + ?Sized>(field: &S, cfg: &ScmsConfig) -> Filament {
    scms(field, cfg)
}
