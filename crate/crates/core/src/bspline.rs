//! Clamped B-spline bases on [0, 1] and their tensor products.
//!
//! Univariate bases are evaluated with the Cox-de Boor triangle and the
//! standard derivative recursion, returning only the `q` functions that are
//! nonzero on the knot span containing `x`. Full-length vectors and dense
//! design matrices are built on top of that local evaluation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Point;

/// Largest supported spline order (degree + 1).
pub const MAX_ORDER: usize = 10;

/// Highest derivative order any caller needs (third derivatives of f).
pub const MAX_DERIV: usize = 3;

/// Clamped knot vector over [0, 1].
///
/// Stores the full knot sequence: `order` zeros, the interior knots, then
/// `order` ones. The number of basis functions is `order + interior`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KnotVectorRepr", into = "KnotVectorRepr")]
pub struct KnotVector {
    order: usize,
    knots: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct KnotVectorRepr {
    order: usize,
    interior: Vec<f64>,
}

impl TryFrom<KnotVectorRepr> for KnotVector {
    type Error = Error;

    fn try_from(repr: KnotVectorRepr) -> Result<Self> {
        KnotVector::new(repr.order, &repr.interior)
    }
}

impl From<KnotVector> for KnotVectorRepr {
    fn from(kv: KnotVector) -> Self {
        KnotVectorRepr {
            order: kv.order,
            interior: kv.interior().to_vec(),
        }
    }
}

impl KnotVector {
    /// Builds a clamped knot vector from strictly increasing interior knots
    /// in the open interval (0, 1).
    pub fn new(order: usize, interior: &[f64]) -> Result<Self> {
        if !(2..=MAX_ORDER).contains(&order) {
            return Err(Error::InvalidSpec(format!(
                "spline order must lie in 2..={MAX_ORDER}, got {order}"
            )));
        }
        let mut prev = 0.0;
        for &t in interior {
            if !t.is_finite() || t <= prev || t >= 1.0 {
                return Err(Error::InvalidSpec(format!(
                    "interior knots must be strictly increasing inside (0, 1); offending knot {t}"
                )));
            }
            prev = t;
        }
        let mut knots = Vec::with_capacity(interior.len() + 2 * order);
        knots.extend(std::iter::repeat_n(0.0, order));
        knots.extend_from_slice(interior);
        knots.extend(std::iter::repeat_n(1.0, order));
        Ok(Self { order, knots })
    }

    /// Equally spaced interior knots giving `num_basis` basis functions.
    pub fn uniform(order: usize, num_basis: usize) -> Result<Self> {
        if num_basis < order {
            return Err(Error::InvalidSpec(format!(
                "need at least {order} basis functions for order {order}, got {num_basis}"
            )));
        }
        let interior_count = num_basis - order;
        let step = 1.0 / (interior_count + 1) as f64;
        let interior: Vec<f64> = (1..=interior_count).map(|i| i as f64 * step).collect();
        Self::new(order, &interior)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn degree(&self) -> usize {
        self.order - 1
    }

    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.order
    }

    pub fn interior(&self) -> &[f64] {
        &self.knots[self.order..self.knots.len() - self.order]
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Ratio of the widest to the narrowest knot interval.
    pub fn mesh_ratio(&self) -> f64 {
        let mut breaks = vec![0.0];
        breaks.extend_from_slice(self.interior());
        breaks.push(1.0);
        let gaps = breaks.windows(2).map(|w| w[1] - w[0]);
        let (lo, hi) = gaps.fold((f64::INFINITY, 0.0f64), |(lo, hi), g| (lo.min(g), hi.max(g)));
        hi / lo
    }

    /// Index `i` with `knots[i] <= x < knots[i + 1]`; `x = 1` maps to the last
    /// nonempty span so the final basis function attains 1 there.
    fn span(&self, x: f64) -> usize {
        let last = self.num_basis() - 1;
        if x >= 1.0 {
            return last;
        }
        // partition_point returns the count of knots <= x.
        let upper = self.knots.partition_point(|&t| t <= x);
        (upper - 1).clamp(self.degree(), last)
    }

    /// Local evaluation of the nonzero basis functions and their derivatives
    /// up to `max_deriv` at `x`, which must already lie in [0, 1].
    pub(crate) fn local(&self, x: f64, max_deriv: usize) -> LocalBasis {
        let p = self.degree();
        let span = self.span(x);
        let u = &self.knots;
        let n = max_deriv.min(p);

        let mut ndu = [[0.0f64; MAX_ORDER]; MAX_ORDER];
        let mut left = [0.0f64; MAX_ORDER];
        let mut right = [0.0f64; MAX_ORDER];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = x - u[span + 1 - j];
            right[j] = u[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }

        let mut ders = [[0.0f64; MAX_ORDER]; MAX_DERIV + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }

        let mut a = [[0.0f64; MAX_ORDER]; 2];
        let p_i = p as isize;
        for r in 0..=p {
            let r_i = r as isize;
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=n {
                let k_i = k as isize;
                let mut d = 0.0;
                let rk = r_i - k_i;
                let pk = p_i - k_i;
                if r_i >= k_i {
                    a[s2][0] = a[s1][0] / ndu[(pk + 1) as usize][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk as usize];
                }
                let j1 = if rk >= -1 { 1 } else { -rk };
                let j2 = if r_i - 1 <= pk { k_i - 1 } else { p_i - r_i };
                for j in j1..=j2 {
                    let j = j as usize;
                    let col = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[(pk + 1) as usize][col];
                    d += a[s2][j] * ndu[col][pk as usize];
                }
                if r_i <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[(pk + 1) as usize][r];
                    d += a[s2][k] * ndu[r][pk as usize];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = p as f64;
        for (k, row) in ders.iter_mut().enumerate().take(n + 1).skip(1) {
            for value in row.iter_mut().take(p + 1) {
                *value *= factor;
            }
            factor *= (p - k) as f64;
        }

        LocalBasis {
            first: span - p,
            len: p + 1,
            ders,
        }
    }

    /// Full-length vector of `deriv`-th derivatives of all basis functions.
    pub fn eval(&self, x: f64, deriv: usize) -> Result<Vec<f64>> {
        check_unit(x)?;
        if deriv >= self.order || deriv > MAX_DERIV {
            return Err(Error::UnsupportedDerivative {
                deriv,
                order: self.order,
            });
        }
        let local = self.local(x, deriv);
        let mut out = vec![0.0; self.num_basis()];
        out[local.first..local.first + local.len].copy_from_slice(local.values(deriv));
        Ok(out)
    }

    pub(crate) fn check_deriv(&self, deriv: usize) -> Result<()> {
        if deriv >= self.order || deriv > MAX_DERIV {
            Err(Error::UnsupportedDerivative {
                deriv,
                order: self.order,
            })
        } else {
            Ok(())
        }
    }
}

/// The `q` basis functions (and derivatives) that are nonzero near one point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LocalBasis {
    pub first: usize,
    pub len: usize,
    ders: [[f64; MAX_ORDER]; MAX_DERIV + 1],
}

impl LocalBasis {
    pub fn values(&self, deriv: usize) -> &[f64] {
        &self.ders[deriv][..self.len]
    }
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain { value: x })
    }
}

/// Uniform clamped knot vector of order `q` with `num_basis` functions.
pub fn make_uniform_knots(q: usize, num_basis: usize) -> Result<KnotVector> {
    KnotVector::uniform(q, num_basis)
}

/// `deriv`-th derivative of every basis function of `kv` at `x`.
pub fn eval_univariate(kv: &KnotVector, x: f64, deriv: usize) -> Result<Vec<f64>> {
    kv.eval(x, deriv)
}

/// Tensor-product spline space on [0, 1]^2.
///
/// Basis functions are flattened in dictionary order: index `j1 * J2 + j2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub kv1: KnotVector,
    pub kv2: KnotVector,
}

impl BasisSpec {
    pub fn new(kv1: KnotVector, kv2: KnotVector) -> Self {
        Self { kv1, kv2 }
    }

    /// Uniform knots along both axes.
    pub fn uniform(q1: usize, j1: usize, q2: usize, j2: usize) -> Result<Self> {
        Ok(Self::new(
            KnotVector::uniform(q1, j1)?,
            KnotVector::uniform(q2, j2)?,
        ))
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.kv1.num_basis(), self.kv2.num_basis())
    }

    pub fn dim(&self) -> usize {
        self.kv1.num_basis() * self.kv2.num_basis()
    }

    pub fn flat_index(&self, j1: usize, j2: usize) -> usize {
        j1 * self.kv2.num_basis() + j2
    }

    pub(crate) fn check_multi_index(&self, r: (usize, usize)) -> Result<()> {
        self.kv1.check_deriv(r.0)?;
        self.kv2.check_deriv(r.1)
    }

    /// Local bases at `x` (assumed inside the unit square) up to the given
    /// derivative orders per axis.
    pub(crate) fn local(&self, x: Point, max_deriv: usize) -> (LocalBasis, LocalBasis) {
        (
            self.kv1.local(x[0], max_deriv),
            self.kv2.local(x[1], max_deriv),
        )
    }

    /// Sparse row: calls `visit(flat_index, value)` for each nonzero entry of
    /// the `r`-derivative tensor basis at `x`.
    pub(crate) fn for_each_nonzero(
        &self,
        a: &LocalBasis,
        b: &LocalBasis,
        r: (usize, usize),
        mut visit: impl FnMut(usize, f64),
    ) {
        let j2 = self.kv2.num_basis();
        let va = a.values(r.0);
        let vb = b.values(r.1);
        for (ia, &wa) in va.iter().enumerate() {
            let row = (a.first + ia) * j2 + b.first;
            for (ib, &wb) in vb.iter().enumerate() {
                visit(row + ib, wa * wb);
            }
        }
    }
}

/// `r`-th partial derivative of the full tensor basis vector at `x`.
pub fn eval_tensor(spec: &BasisSpec, x: Point, r: (usize, usize)) -> Result<Vec<f64>> {
    let b1 = spec.kv1.eval(x[0], r.0)?;
    let b2 = spec.kv2.eval(x[1], r.1)?;
    let mut out = Vec::with_capacity(b1.len() * b2.len());
    for &u in &b1 {
        out.extend(b2.iter().map(|&v| u * v));
    }
    Ok(out)
}

/// Dense `n x J1J2` design matrix; row `i` is the tensor basis at `xs[i]`.
pub fn design_matrix(spec: &BasisSpec, xs: &[Point]) -> Result<DMatrix<f64>> {
    check_points(xs)?;
    let mut b = DMatrix::zeros(xs.len(), spec.dim());
    for (i, &x) in xs.iter().enumerate() {
        let (l1, l2) = spec.local(x, 0);
        spec.for_each_nonzero(&l1, &l2, (0, 0), |j, v| b[(i, j)] = v);
    }
    Ok(b)
}

pub(crate) fn check_points(xs: &[Point]) -> Result<()> {
    for (row, x) in xs.iter().enumerate() {
        let inside = x.iter().all(|c| (0.0..=1.0).contains(c));
        if !inside {
            return Err(Error::DomainRow {
                row,
                x1: x[0],
                x2: x[1],
            });
        }
    }
    Ok(())
}
