//! Pointwise differential geometry of a surface: gradient, Hessian, the
//! smaller Hessian eigenvalue with its eigenvector, and the ridge residual.

use serde::{Deserialize, Serialize};

use crate::bspline::BasisSpec;
use crate::error::{Error, Result};
use crate::Point;

/// Eigen gaps below this are treated as repeated eigenvalues.
pub const DEGENERATE_GAP: f64 = 1e-10;

/// Value, gradient and Hessian `(f20, f11, f02)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [f64; 3],
}

impl Jet {
    pub fn frame(&self) -> EigenFrame {
        eigen_min(self.hess[0], self.hess[1], self.hess[2])
    }
}

/// A twice-differentiable surface over the unit square.
///
/// Implementations must accept any point of `[0, 1]^2`; callers never pass
/// points outside it.
pub trait Surface: Sync {
    fn value(&self, x: Point) -> f64;

    fn jet(&self, x: Point) -> Jet;

    fn frame(&self, x: Point) -> EigenFrame {
        self.jet(x).frame()
    }

    /// `<grad f(x), V(x)>` with `V` under the canonical sign convention.
    fn ridge_residual(&self, x: Point) -> f64 {
        let jet = self.jet(x);
        let frame = jet.frame();
        dot(jet.grad, frame.v)
    }
}

impl<S: Surface + ?Sized> Surface for &S {
    fn value(&self, x: Point) -> f64 {
        (**self).value(x)
    }

    fn jet(&self, x: Point) -> Jet {
        (**self).jet(x)
    }
}

/// Smaller eigenvalue of the Hessian and its unit eigenvector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenFrame {
    pub lambda_min: f64,
    pub v: [f64; 2],
    /// Distance between the two eigenvalues.
    pub gap: f64,
}

impl EigenFrame {
    pub fn is_degenerate(&self) -> bool {
        self.gap < DEGENERATE_GAP
    }
}

/// Smaller eigenpair of the symmetric matrix `[[u, v], [v, w]]`.
///
/// The eigenvector is normalized and oriented so that its first nonzero
/// component is positive. Repeated eigenvalues yield the axis vector `(1, 0)`
/// with `gap = 0`.
pub fn eigen_min(u: f64, v: f64, w: f64) -> EigenFrame {
    let s = ((u - w) * (u - w) + 4.0 * v * v).sqrt();
    let lambda_min = 0.5 * (u + w - s);
    if s == 0.0 {
        return EigenFrame {
            lambda_min,
            v: [1.0, 0.0],
            gap: 0.0,
        };
    }
    // (u - w - s, 2v) and (2v, w - u - s) span the same line; pick the one
    // free of cancellation.
    let (a, b) = if u <= w {
        (u - w - s, 2.0 * v)
    } else {
        (2.0 * v, w - u - s)
    };
    let dir = if a.abs() < 1e-14 && b.abs() < 1e-14 {
        if u <= w {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        }
    } else {
        let norm = a.hypot(b);
        [a / norm, b / norm]
    };
    EigenFrame {
        lambda_min,
        v: canonical_sign(dir),
        gap: s,
    }
}

fn canonical_sign(v: [f64; 2]) -> [f64; 2] {
    let first = if v[0] != 0.0 { v[0] } else { v[1] };
    if first < 0.0 {
        [-v[0], -v[1]]
    } else {
        v
    }
}

pub(crate) fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// A spline surface: coefficient vector bound to a tensor basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    spec: BasisSpec,
    theta: Vec<f64>,
}

impl ScalarField {
    pub fn new(spec: BasisSpec, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                found: theta.len(),
            });
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Data("non-finite spline coefficient".into()));
        }
        Ok(Self { spec, theta })
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// `self - other`, for fields over the same basis.
    pub fn difference(&self, other: &ScalarField) -> Result<ScalarField> {
        if self.spec != other.spec {
            return Err(Error::InvalidSpec(
                "fields are defined over different bases".into(),
            ));
        }
        let theta = self
            .theta
            .iter()
            .zip(&other.theta)
            .map(|(a, b)| a - b)
            .collect();
        Ok(ScalarField {
            spec: self.spec.clone(),
            theta,
        })
    }

    /// `D^r f(x)`.
    pub fn eval(&self, x: Point, r: (usize, usize)) -> Result<f64> {
        check_point(x)?;
        self.spec.check_multi_index(r)?;
        Ok(self.eval_unchecked(x, r))
    }

    pub(crate) fn eval_unchecked(&self, x: Point, r: (usize, usize)) -> f64 {
        eval_coeffs(&self.spec, &self.theta, x, r)
    }

    /// `(f20, f11, f02)` at `x`.
    pub fn d2f(&self, x: Point) -> Result<[f64; 3]> {
        Ok([
            self.eval(x, (2, 0))?,
            self.eval(x, (1, 1))?,
            self.eval(x, (0, 2))?,
        ])
    }

    pub fn grad(&self, x: Point) -> Result<[f64; 2]> {
        Ok([self.eval(x, (1, 0))?, self.eval(x, (0, 1))?])
    }

    pub fn eigen_frame(&self, x: Point) -> Result<EigenFrame> {
        let [u, v, w] = self.d2f(x)?;
        Ok(eigen_min(u, v, w))
    }

    /// `<grad f(x), V(x)>`; zero on the ridge.
    pub fn ridge_residual(&self, x: Point) -> Result<f64> {
        let g = self.grad(x)?;
        Ok(dot(g, self.eigen_frame(x)?.v))
    }

    /// Jacobian of the eigenvector field by central differences, rows
    /// indexed by component of `V`. Diagnostic only.
    pub fn grad_v(&self, x: Point, h: f64) -> Result<[[f64; 2]; 2]> {
        check_point(x)?;
        let base = self.eigen_frame(x)?.v;
        let mut jac = [[0.0; 2]; 2];
        for axis in 0..2 {
            let mut hi = x;
            let mut lo = x;
            hi[axis] = (x[axis] + h).min(1.0);
            lo[axis] = (x[axis] - h).max(0.0);
            let align = |v: [f64; 2]| if dot(v, base) < 0.0 { [-v[0], -v[1]] } else { v };
            let vh = align(self.eigen_frame(hi)?.v);
            let vl = align(self.eigen_frame(lo)?.v);
            let width = hi[axis] - lo[axis];
            for comp in 0..2 {
                jac[comp][axis] = (vh[comp] - vl[comp]) / width;
            }
        }
        Ok(jac)
    }
}

impl Surface for ScalarField {
    fn value(&self, x: Point) -> f64 {
        self.eval_unchecked(clamp_unit(x), (0, 0))
    }

    fn jet(&self, x: Point) -> Jet {
        let x = clamp_unit(x);
        let (a, b) = self.spec.local(x, 2);
        let j2 = self.spec.kv2.num_basis();
        let (a0, a1, a2) = (a.values(0), a.values(1), a.values(2));
        let (b0, b1, b2) = (b.values(0), b.values(1), b.values(2));
        let mut out = [0.0f64; 6];
        for ia in 0..a.len {
            let row = &self.theta[(a.first + ia) * j2 + b.first..][..b.len];
            let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
            for (ib, &t) in row.iter().enumerate() {
                s0 += t * b0[ib];
                s1 += t * b1[ib];
                s2 += t * b2[ib];
            }
            out[0] += a0[ia] * s0;
            out[1] += a1[ia] * s0;
            out[2] += a0[ia] * s1;
            out[3] += a2[ia] * s0;
            out[4] += a1[ia] * s1;
            out[5] += a0[ia] * s2;
        }
        Jet {
            value: out[0],
            grad: [out[1], out[2]],
            hess: [out[3], out[4], out[5]],
        }
    }
}

/// `D^r` of the spline with coefficients `theta` at `x` (inside the square).
pub(crate) fn eval_coeffs(spec: &BasisSpec, theta: &[f64], x: Point, r: (usize, usize)) -> f64 {
    let (a, b) = spec.local(x, r.0.max(r.1));
    let mut acc = 0.0;
    spec.for_each_nonzero(&a, &b, r, |j, w| acc += theta[j] * w);
    acc
}

pub(crate) fn check_point(x: Point) -> Result<()> {
    for &c in &x {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::Domain { value: c });
        }
    }
    Ok(())
}

pub(crate) fn clamp_unit(x: Point) -> Point {
    [x[0].clamp(0.0, 1.0), x[1].clamp(0.0, 1.0)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix2, SymmetricEigen};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(seed: u64, q: usize, j: usize) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = BasisSpec::uniform(q, j, q, j).unwrap();
        let theta = (0..spec.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        ScalarField::new(spec, theta).unwrap()
    }

    /// Coefficients reproducing `x2^2` exactly on a quadratic Bernstein basis.
    fn minus_x2_squared() -> ScalarField {
        let spec = BasisSpec::uniform(3, 3, 3, 3).unwrap();
        // x^2 = B2 on the degree-2 Bernstein basis; x = B1/2 + B2.
        let per_x2 = [0.0, 0.0, -1.0];
        let theta = (0..9).map(|i| per_x2[i % 3]).collect();
        ScalarField::new(spec, theta).unwrap()
    }

    #[test]
    fn constant_field_has_zero_derivatives() {
        let spec = BasisSpec::uniform(4, 6, 5, 7).unwrap();
        let field = ScalarField::new(spec.clone(), vec![1.0; spec.dim()]).unwrap();
        for x in [[0.0, 0.0], [0.3, 0.8], [1.0, 1.0]] {
            assert!((field.eval(x, (0, 0)).unwrap() - 1.0).abs() < 1e-12);
            assert!(field.eval(x, (1, 0)).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn eval_rejects_bad_inputs() {
        let field = random_field(1, 3, 5);
        assert!(matches!(field.eval([1.1, 0.5], (0, 0)), Err(Error::Domain { .. })));
        assert!(matches!(
            field.eval([0.5, 0.5], (3, 0)),
            Err(Error::UnsupportedDerivative { .. })
        ));
        assert!(ScalarField::new(field.spec().clone(), vec![0.0; 3]).is_err());
    }

    #[test]
    fn second_derivative_matches_finite_differences() {
        let field = random_field(7, 5, 9);
        let x = [0.41, 0.63];
        let h = 1e-6;
        let analytic = field.eval(x, (2, 0)).unwrap();
        let fd = (field.eval([x[0] + h, x[1]], (1, 0)).unwrap()
            - field.eval([x[0] - h, x[1]], (1, 0)).unwrap())
            / (2.0 * h);
        assert!((analytic - fd).abs() <= 1e-4 * analytic.abs().max(1.0));
    }

    #[test]
    fn derivatives_match_finite_differences_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let h = 1e-6;
        for case in 0..200 {
            let field = random_field(case, 5, 7 + (case as usize % 4));
            let x = [rng.random_range(0.01..0.99), rng.random_range(0.01..0.99)];
            for r in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)] {
                let (axis, lower) = if r.0 > 0 {
                    (0, (r.0 - 1, r.1))
                } else {
                    (1, (r.0, r.1 - 1))
                };
                let mut hi = x;
                let mut lo = x;
                hi[axis] += h;
                lo[axis] -= h;
                let fd = (field.eval(hi, lower).unwrap() - field.eval(lo, lower).unwrap()) / (2.0 * h);
                let analytic = field.eval(x, r).unwrap();
                assert!(
                    (analytic - fd).abs() <= 1e-4 * analytic.abs().max(1.0),
                    "r={r:?} x={x:?}: {analytic} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn jet_agrees_with_eval() {
        let field = random_field(3, 5, 9);
        for x in [[0.0, 0.0], [0.2, 0.9], [0.55, 0.35], [1.0, 0.4]] {
            let jet = field.jet(x);
            assert!((jet.value - field.eval(x, (0, 0)).unwrap()).abs() < 1e-12);
            let g = field.grad(x).unwrap();
            for k in 0..2 {
                assert!((jet.grad[k] - g[k]).abs() < 1e-12 * g[k].abs().max(1.0));
            }
            let d2 = field.d2f(x).unwrap();
            for k in 0..3 {
                assert!((jet.hess[k] - d2[k]).abs() < 1e-9 * d2[k].abs().max(1.0));
            }
        }
    }

    #[test]
    fn quadratic_reproduction() {
        let f = minus_x2_squared();
        for x in [[0.1, 0.2], [0.7, 0.9], [0.5, 0.0]] {
            assert!((f.eval(x, (0, 0)).unwrap() + x[1] * x[1]).abs() < 1e-12);
            let d2 = f.d2f(x).unwrap();
            assert!(d2[0].abs() < 1e-12 && d2[1].abs() < 1e-12);
            assert!((d2[2] + 2.0).abs() < 1e-12);
            let residual = f.ridge_residual(x).unwrap();
            assert!((residual.abs() - 2.0 * x[1]).abs() < 1e-12);
        }
        assert_eq!(f.ridge_residual([0.4, 0.0]).unwrap(), 0.0);

        // x1 * x2 on the bilinear basis.
        let spec = BasisSpec::uniform(2, 2, 2, 2).unwrap();
        let g = ScalarField::new(spec, vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(g.eval([0.3, 0.6], (1, 1)).unwrap(), 1.0);
        assert!(g.d2f([0.3, 0.6]).is_err());
        assert_eq!(g.jet([0.3, 0.6]).hess, [0.0, 1.0, 0.0]);
    }

    #[test]
    fn eigen_examples() {
        let e = eigen_min(-2.0, 0.0, -1.0);
        assert_eq!(e.lambda_min, -2.0);
        assert_eq!(e.v, [1.0, 0.0]);

        let e = eigen_min(0.0, 1.0, 0.0);
        assert!((e.lambda_min + 1.0).abs() < 1e-15);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.v[0] - r).abs() < 1e-15 && (e.v[1] + r).abs() < 1e-15);
        assert_eq!(e.gap, 2.0);

        let e = eigen_min(-1.0, 0.0, -2.0);
        assert_eq!(e.v, [0.0, 1.0]);
        let e = eigen_min(3.0, 0.0, 3.0);
        assert_eq!(e.v, [1.0, 0.0]);
        assert!(e.is_degenerate());
    }

    #[test]
    fn eigen_matches_iterative_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..1000 {
            let (u, v, w): (f64, f64, f64) = (
                rng.random_range(-50.0..50.0),
                rng.random_range(-50.0..50.0),
                rng.random_range(-50.0..50.0),
            );
            let frame = eigen_min(u, v, w);
            let oracle = SymmetricEigen::new(Matrix2::new(u, v, v, w));
            let idx = if oracle.eigenvalues[0] <= oracle.eigenvalues[1] { 0 } else { 1 };
            let lam = oracle.eigenvalues[idx];
            let vec = oracle.eigenvectors.column(idx);
            let scale = 1.0f64.max(u.abs().max(w.abs()).max(v.abs()));
            assert!((frame.lambda_min - lam).abs() <= 1e-10 * scale);
            let same = (frame.v[0] - vec[0]).abs().max((frame.v[1] - vec[1]).abs());
            let flip = (frame.v[0] + vec[0]).abs().max((frame.v[1] + vec[1]).abs());
            assert!(same.min(flip) <= 1e-10, "{frame:?} vs {vec:?}");
        }
    }

    #[test]
    fn grad_v_vanishes_for_constant_frame() {
        let f = minus_x2_squared();
        let jac = f.grad_v([0.4, 0.5], 1e-5).unwrap();
        assert!(jac.iter().flatten().all(|v| v.abs() < 1e-8));
    }

    proptest! {
        #[test]
        fn eigen_symmetries(u in -1e3..1e3f64, v in -1e3..1e3f64, w in -1e3..1e3f64) {
            let a = eigen_min(u, v, w);
            prop_assert_eq!(a.lambda_min, eigen_min(w, v, u).lambda_min);
            prop_assert_eq!(a.lambda_min, eigen_min(u, -v, w).lambda_min);
            prop_assert!(a.lambda_min <= u.min(w) + 1e-12 * u.abs().max(w.abs()));
            prop_assert!((a.v[0].hypot(a.v[1]) - 1.0).abs() <= 1e-12);
            if a.gap > DEGENERATE_GAP {
                let hv = [u * a.v[0] + v * a.v[1], v * a.v[0] + w * a.v[1]];
                let res = (hv[0] - a.lambda_min * a.v[0]).hypot(hv[1] - a.lambda_min * a.v[1]);
                let norm = (u.abs() + v.abs()).max(v.abs() + w.abs());
                prop_assert!(res <= 1e-8 * norm.max(1.0));
            }
        }

        #[test]
        fn residual_sign_robust(seed in 0u64..500, x1 in 0.0..1.0f64, x2 in 0.0..1.0f64) {
            let field = random_field(seed, 4, 6);
            let x = [x1, x2];
            let g = field.grad(x).unwrap();
            let frame = field.eigen_frame(x).unwrap();
            let flipped = [-frame.v[0], -frame.v[1]];
            let r = field.ridge_residual(x).unwrap();
            prop_assert_eq!(r, dot(g, frame.v));
            prop_assert_eq!(r.abs(), dot(g, flipped).abs());
        }
    }
}
