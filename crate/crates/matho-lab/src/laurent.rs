//! Truncated Laurent series on the unit circle with vector or matrix coefficients.
//!
//! A series stores every coefficient in the symmetric window `[-M, M]` plus a
//! `tail_bound`: an upper bound on the sum of Frobenius norms of the coefficients
//! that were discarded. An l1 bound on coefficients bounds both the L2 error and the
//! pointwise error on the circle, and it is submultiplicative, so products can
//! propagate it without looking at the discarded coefficients.
//!
//! Vector-valued series are functions in `L2(C^d)`; matrix-valued series are
//! symbols and inner functions in `L2(L(C^d))`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::marker::PhantomData;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{fro, CMat, C64};

/// Tolerance for "on the unit circle" checks.
pub const CIRCLE_TOL: f64 = 1e-12;

mod sealed {
    pub trait Sealed {}
}

/// Coefficient shape of a [`Laurent`] series.
pub trait Shape: sealed::Sealed + Clone + std::fmt::Debug + PartialEq + Send + Sync + 'static {
    /// True for column-vector coefficients.
    const VECTOR: bool;
    /// Number of columns of each coefficient for coefficient dimension `dim`.
    fn cols(dim: usize) -> usize;
}

/// Coefficients are `d x 1` column vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorShape;

/// Coefficients are `d x d` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixShape;

impl sealed::Sealed for VectorShape {}
impl sealed::Sealed for MatrixShape {}

impl Shape for VectorShape {
    const VECTOR: bool = true;
    fn cols(_: usize) -> usize {
        1
    }
}

impl Shape for MatrixShape {
    const VECTOR: bool = false;
    fn cols(dim: usize) -> usize {
        dim
    }
}

/// A truncated Laurent series `sum_{|n| <= M} c_n z^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Laurent<S: Shape> {
    dim: usize,
    order: usize,
    coeffs: Vec<CMat>,
    tail_bound: f64,
    shape: PhantomData<S>,
}

/// Series with values in `C^d`.
pub type VectorLaurent = Laurent<VectorShape>;
/// Series with values in `d x d` matrices.
pub type MatrixLaurent = Laurent<MatrixShape>;

impl<S: Shape> Laurent<S> {
    pub fn zeros(dim: usize, order: usize) -> Self {
        assert!(dim > 0, "coefficient dimension must be positive");
        Laurent {
            dim,
            order,
            coeffs: vec![CMat::zeros(dim, S::cols(dim)); 2 * order + 1],
            tail_bound: 0.0,
            shape: PhantomData,
        }
    }

    /// Build from `(index, coefficient)` pairs; repeated indices are summed.
    pub fn from_terms<I>(dim: usize, order: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, CMat)>,
    {
        let mut out = Self::zeros(dim, order);
        for (n, c) in terms {
            if c.shape() != (dim, S::cols(dim)) {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient at index {n} has shape {:?}, expected {:?}",
                    c.shape(),
                    (dim, S::cols(dim))
                )));
            }
            if n.unsigned_abs() as usize > order {
                return Err(Error::OutsideWindow { index: n, order });
            }
            *out.coeff_mut(n) += c;
        }
        Ok(out)
    }

    /// `c z^n` in a window of the given order.
    pub fn monomial(n: i64, c: CMat, order: usize) -> Self {
        let dim = c.nrows();
        Self::from_terms(dim, order, [(n, c)]).expect("monomial must fit its window")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Truncation order `M`; coefficients live on `[-M, M]`.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn with_tail_bound(mut self, tail: f64) -> Self {
        self.tail_bound = tail;
        self
    }

    fn slot(&self, n: i64) -> usize {
        (n + self.order as i64) as usize
    }

    /// Coefficient of `z^n`. Panics outside the window; see [`Laurent::get`].
    pub fn coeff(&self, n: i64) -> &CMat {
        assert!(n.unsigned_abs() as usize <= self.order, "index {n} outside window");
        &self.coeffs[self.slot(n)]
    }

    pub fn coeff_mut(&mut self, n: i64) -> &mut CMat {
        assert!(n.unsigned_abs() as usize <= self.order, "index {n} outside window");
        let s = self.slot(n);
        &mut self.coeffs[s]
    }

    pub fn get(&self, n: i64) -> Option<&CMat> {
        (n.unsigned_abs() as usize <= self.order).then(|| &self.coeffs[self.slot(n)])
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i64> {
        -(self.order as i64)..=self.order as i64
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &CMat)> {
        self.indices().zip(self.coeffs.iter())
    }

    /// Smallest order that holds every nonzero coefficient.
    pub fn support_order(&self) -> usize {
        self.iter()
            .filter(|(_, c)| c.iter().any(|z| *z != C64::new(0.0, 0.0)))
            .map(|(n, _)| n.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_squared()).sum()
    }

    /// L2 norm (Hilbert-Schmidt norm pointwise for matrix coefficients).
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Sum of coefficient Frobenius norms; bounds the sup norm on the circle.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(fro).sum()
    }

    fn map_coeffs(&self, f: impl Fn(i64, &CMat) -> CMat) -> Self {
        let mut out = self.clone();
        for (n, c) in self.indices().zip(self.coeffs.iter()) {
            out.coeffs[(n + self.order as i64) as usize] = f(n, c);
        }
        out
    }

    /// Re-express in a window of order `order`, moving dropped coefficients into the tail.
    pub fn truncate(&self, order: usize) -> Self {
        let mut out = Self::zeros(self.dim, order);
        out.tail_bound = self.tail_bound;
        for (n, c) in self.iter() {
            if n.unsigned_abs() as usize <= order {
                *out.coeff_mut(n) = c.clone();
            } else {
                out.tail_bound += fro(c);
            }
        }
        out
    }

    fn check_dim(&self, other_dim: usize) -> Result<()> {
        if self.dim != other_dim {
            return Err(Error::DimensionMismatch(format!(
                "series dimensions {} and {}",
                self.dim, other_dim
            )));
        }
        Ok(())
    }

    /// Sum; the window is the larger of the two.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim)?;
        let order = self.order.max(other.order);
        let mut out = self.truncate(order);
        for (n, c) in other.iter() {
            *out.coeff_mut(n) += c;
        }
        out.tail_bound += other.tail_bound;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.map_coeffs(|_, c| c * s);
        out.tail_bound *= s.norm();
        out
    }

    /// Multiply by `z^k`. The window grows by `|k|` so nothing is lost.
    pub fn shift(&self, k: i64) -> Self {
        let order = self.order + k.unsigned_abs() as usize;
        let mut out = Self::zeros(self.dim, order);
        out.tail_bound = self.tail_bound;
        for (n, c) in self.iter() {
            *out.coeff_mut(n + k) = c.clone();
        }
        out
    }

    /// The flip `f(z) -> conj(z) f(conj z)`: output coefficient at `m` is input coefficient at `-m-1`.
    ///
    /// The window grows by one so the map stays exact and involutive.
    pub fn flip(&self) -> Self {
        let order = self.order + 1;
        let mut out = Self::zeros(self.dim, order);
        out.tail_bound = self.tail_bound;
        for (n, c) in self.iter() {
            *out.coeff_mut(-n - 1) = c.clone();
        }
        out
    }

    /// `f(conj z)`: coefficient `n` moves to `-n`.
    pub fn reflect(&self) -> Self {
        self.map_coeffs(|n, _| self.coeff(-n).clone())
    }

    /// Pointwise complex conjugate `conj(f(z))`: coefficient `n` becomes `conj(c_{-n})`.
    pub fn conj_pointwise(&self) -> Self {
        self.map_coeffs(|n, _| self.coeff(-n).map(|z| z.conj()))
    }

    /// `(P+ f, (I - P+) f)`: the parts with indices `n >= 0` and `n < 0`.
    /// The tail bound is carried by both parts.
    pub fn riesz_split(&self) -> (Self, Self) {
        let zero = CMat::zeros(self.dim, S::cols(self.dim));
        let plus = self.map_coeffs(|n, c| if n >= 0 { c.clone() } else { zero.clone() });
        let minus = self.map_coeffs(|n, c| if n < 0 { c.clone() } else { zero.clone() });
        (plus, minus)
    }

    pub fn analytic_part(&self) -> Self {
        self.riesz_split().0
    }

    pub fn coanalytic_part(&self) -> Self {
        self.riesz_split().1
    }

    /// `<f, g> = sum_n <f_n, g_n>`, linear in `f`. For matrix coefficients this is
    /// the Hilbert-Schmidt pairing `sum_n tr(g_n^* f_n)`.
    pub fn inner_product(&self, other: &Self) -> Result<C64> {
        self.check_dim(other.dim)?;
        let order = self.order.min(other.order) as i64;
        Ok((-order..=order)
            .map(|n| other.coeff(n).dotc(self.coeff(n)))
            .sum())
    }

    /// Bound on the error of [`Laurent::inner_product`] caused by the tails.
    pub fn inner_product_error(&self, other: &Self) -> f64 {
        self.tail_bound * (other.norm() + other.tail_bound) + self.norm() * other.tail_bound
    }

    /// Value at a point of the unit circle.
    pub fn evaluate(&self, z0: C64) -> Result<CMat> {
        if (z0.norm() - 1.0).abs() > CIRCLE_TOL {
            return Err(Error::OffCircle(z0));
        }
        Ok(self.sum_at(z0, true))
    }

    /// Value of the analytic part `(P+ f)(lambda)` for `|lambda| <= 1`.
    pub fn evaluate_analytic(&self, lambda: C64) -> Result<CMat> {
        if lambda.norm() > 1.0 + CIRCLE_TOL {
            return Err(Error::OutsideDisc(lambda));
        }
        Ok(self.sum_at(lambda, false))
    }

    fn sum_at(&self, z0: C64, negative: bool) -> CMat {
        let mut acc = CMat::zeros(self.dim, S::cols(self.dim));
        // Horner in z for n >= 0 and in 1/z for n < 0.
        for n in (0..=self.order as i64).rev() {
            acc = acc * z0 + self.coeff(n);
        }
        if negative && self.order > 0 {
            let w = z0.inv();
            let mut neg = CMat::zeros(self.dim, S::cols(self.dim));
            for n in (1..=self.order as i64).rev() {
                neg = (neg + self.coeff(-n)) * w;
            }
            acc += neg;
        }
        acc
    }

    /// Values at the `n`-th roots of unity `exp(2 pi i k / n)`, `k = 0..n`.
    pub fn sample_circle(&self, n: usize) -> Vec<CMat> {
        let cols = S::cols(self.dim);
        let fft = FftPlanner::new().plan_fft_inverse(n);
        let mut out = vec![CMat::zeros(self.dim, cols); n];
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for r in 0..self.dim {
            for col in 0..cols {
                buf.iter_mut().for_each(|b| *b = C64::new(0.0, 0.0));
                for (k, c) in self.iter() {
                    buf[k.rem_euclid(n as i64) as usize] += c[(r, col)];
                }
                fft.process(&mut buf);
                for (j, v) in buf.iter().enumerate() {
                    out[j][(r, col)] = *v;
                }
            }
        }
        out
    }

    /// Discrete Fourier fit of a series of order `order` to values at the `n`-th roots
    /// of unity. Requires `n >= 2 * order + 1`. The tail bound is left at zero; callers
    /// that know the aliasing error record it themselves.
    pub fn fit_from_samples(samples: &[CMat], order: usize) -> Result<Self> {
        let n = samples.len();
        if n < 2 * order + 1 {
            return Err(Error::WindowTooSmall(format!(
                "{n} samples cannot resolve a window of order {order}"
            )));
        }
        let dim = samples[0].nrows();
        let cols = S::cols(dim);
        if samples.iter().any(|s| s.shape() != (dim, cols)) {
            return Err(Error::DimensionMismatch("sample shapes differ".into()));
        }
        let fft = FftPlanner::new().plan_fft_forward(n);
        let mut out = Self::zeros(dim, order);
        let mut buf = vec![C64::new(0.0, 0.0); n];
        let inv_n = 1.0 / n as f64;
        for r in 0..dim {
            for col in 0..cols {
                for (b, s) in buf.iter_mut().zip(samples) {
                    *b = s[(r, col)];
                }
                fft.process(&mut buf);
                for k in -(order as i64)..=order as i64 {
                    out.coeff_mut(k)[(r, col)] = buf[k.rem_euclid(n as i64) as usize] * inv_n;
                }
            }
        }
        Ok(out)
    }
}

impl VectorLaurent {
    /// Constant function `x`.
    pub fn constant(x: &[C64], order: usize) -> Self {
        Self::monomial(0, CMat::from_column_slice(x.len(), 1, x), order)
    }

    /// `x z^n`.
    pub fn vector_monomial(n: i64, x: &[C64], order: usize) -> Self {
        Self::monomial(n, CMat::from_column_slice(x.len(), 1, x), order)
    }
}

impl MatrixLaurent {
    pub fn identity(dim: usize, order: usize) -> Self {
        Self::monomial(0, CMat::identity(dim, dim), order)
    }

    /// `phi(z) I_d` for a scalar Laurent polynomial given as `(index, coefficient)` pairs.
    pub fn scalar(dim: usize, order: usize, terms: &[(i64, C64)]) -> Result<Self> {
        Self::from_terms(
            dim,
            order,
            terms.iter().map(|&(n, a)| (n, CMat::identity(dim, dim) * a)),
        )
    }

    /// Pointwise adjoint `F(z)^*`: coefficient `c_n` becomes `(c_{-n})^*`.
    pub fn adjoint_star(&self) -> Self {
        self.map_coeffs(|n, _| self.coeff(-n).adjoint())
    }

    /// `F~(z) = F(conj z)^*`: coefficient `c_n` becomes `c_n^*`.
    pub fn tilde(&self) -> Self {
        self.map_coeffs(|_, c| c.adjoint())
    }

    /// Series product `F g`. The window is the sum of both orders so the product
    /// of stored coefficients is exact; only tails contribute to the tail bound.
    pub fn mul<S: Shape>(&self, g: &Laurent<S>) -> Result<Laurent<S>> {
        self.check_dim(g.dim)?;
        let order = self.order + g.order;
        let mut out = Laurent::<S>::zeros(self.dim, order);
        let nz_f: Vec<(i64, &CMat)> = self.iter().filter(|(_, c)| !is_zero(c)).collect();
        let nz_g: Vec<(i64, &CMat)> = g.iter().filter(|(_, c)| !is_zero(c)).collect();
        for &(k, fk) in &nz_f {
            for &(m, gm) in &nz_g {
                let slot = out.slot(k + m);
                out.coeffs[slot].gemm(C64::new(1.0, 0.0), fk, gm, C64::new(1.0, 0.0));
            }
        }
        out.tail_bound = self.l1_norm() * g.tail_bound
            + self.tail_bound * g.l1_norm()
            + self.tail_bound * g.tail_bound;
        Ok(out)
    }

    /// Apply a constant matrix on the left of every coefficient.
    pub fn left_mul_const(&self, a: &CMat) -> Self {
        let mut out = self.map_coeffs(|_, c| a * c);
        out.tail_bound *= fro(a);
        out
    }

    /// Apply a constant matrix on the right of every coefficient.
    pub fn right_mul_const(&self, a: &CMat) -> Self {
        let mut out = self.map_coeffs(|_, c| c * a);
        out.tail_bound *= fro(a);
        out
    }

    /// Column `j` as a vector-valued series.
    pub fn column(&self, j: usize) -> VectorLaurent {
        let mut out = VectorLaurent::zeros(self.dim, self.order);
        for (n, c) in self.iter() {
            out.coeff_mut(n).set_column(0, &c.column(j));
        }
        out.tail_bound = self.tail_bound;
        out
    }
}

fn is_zero(c: &CMat) -> bool {
    c.iter().all(|z| z.re == 0.0 && z.im == 0.0)
}

/// Roots of unity `exp(2 pi i k / n)`.
pub fn roots_of_unity(n: usize) -> Vec<C64> {
    (0..n)
        .map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64))
        .collect()
}

// JSON: {"dim": d, "coeffs": {"n": [[re, im], ...]}, "trunc_order": M, "tail_bound": t}.
// Vector coefficients are a list of d complex pairs; matrix coefficients are a list of d rows.

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CoeffJson {
    Vector(Vec<ComplexJson>),
    Matrix(Vec<Vec<ComplexJson>>),
}

/// A complex number in JSON: either `[re, im]` or a bare real number.
#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq)]
#[serde(untagged)]
pub enum ComplexJson {
    Pair([f64; 2]),
    Real(f64),
}

impl From<ComplexJson> for C64 {
    fn from(z: ComplexJson) -> C64 {
        match z {
            ComplexJson::Pair([re, im]) => C64::new(re, im),
            ComplexJson::Real(re) => C64::new(re, 0.0),
        }
    }
}

impl From<C64> for ComplexJson {
    fn from(z: C64) -> Self {
        ComplexJson::Pair([z.re, z.im])
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LaurentJson {
    dim: usize,
    coeffs: BTreeMap<String, CoeffJson>,
    trunc_order: usize,
    #[serde(default)]
    tail_bound: f64,
}

/// Serialize a complex matrix as rows of `[re, im]` pairs.
pub fn matrix_to_json(a: &CMat) -> Vec<Vec<ComplexJson>> {
    (0..a.nrows())
        .map(|r| (0..a.ncols()).map(|c| a[(r, c)].into()).collect())
        .collect()
}

/// Parse rows of complex entries into a matrix; `field` names the location for errors.
pub fn matrix_from_json(rows: &[Vec<ComplexJson>], field: &str) -> Result<CMat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::invalid(field, "rows have different lengths"));
    }
    Ok(CMat::from_fn(nrows, ncols, |r, c| rows[r][c].into()))
}

impl<S: Shape> Serialize for Laurent<S> {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        let mut coeffs = BTreeMap::new();
        for (n, c) in self.iter().filter(|(_, c)| !is_zero(c)) {
            let entry = if S::VECTOR {
                CoeffJson::Vector(c.iter().map(|&z| z.into()).collect())
            } else {
                CoeffJson::Matrix(matrix_to_json(c))
            };
            coeffs.insert(n.to_string(), entry);
        }
        LaurentJson {
            dim: self.dim,
            coeffs,
            trunc_order: self.order,
            tail_bound: self.tail_bound,
        }
        .serialize(s)
    }
}

impl<'de, S: Shape> Deserialize<'de> for Laurent<S> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = LaurentJson::deserialize(d)?;
        Self::from_json_parts(raw).map_err(D::Error::custom)
    }
}

impl<S: Shape> Laurent<S> {
    fn from_json_parts(raw: LaurentJson) -> Result<Self> {
        if raw.dim == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        if !(raw.tail_bound >= 0.0) {
            return Err(Error::invalid("tail_bound", "must be nonnegative"));
        }
        let vector = S::VECTOR;
        let mut terms = Vec::new();
        for (key, value) in raw.coeffs {
            let field = format!("coeffs.{key}");
            let n: i64 = key
                .trim()
                .parse()
                .map_err(|_| Error::invalid(&field, "index must be an integer"))?;
            let c = match (value, vector) {
                (CoeffJson::Vector(v), true) => {
                    CMat::from_iterator(v.len(), 1, v.into_iter().map(C64::from))
                }
                (CoeffJson::Matrix(rows), false) => matrix_from_json(&rows, &field)?,
                // A d x 1 matrix written as rows is accepted for vectors.
                (CoeffJson::Matrix(rows), true) if rows.iter().all(|r| r.len() == 1) => {
                    matrix_from_json(&rows, &field)?
                }
                // Scalar symbols may be written as a flat list when d = 1.
                (CoeffJson::Vector(v), false) if raw.dim == 1 && v.len() == 1 => {
                    CMat::from_element(1, 1, v[0].into())
                }
                // Real 2x2 rows such as [[1, 0], [0, 1]] look like a list of pairs.
                (CoeffJson::Vector(v), false) if raw.dim == 2 && v.len() == 2 => {
                    let mut m = CMat::zeros(2, 2);
                    for (r, z) in v.iter().enumerate() {
                        match z {
                            ComplexJson::Pair([a, b]) => {
                                m[(r, 0)] = C64::new(*a, 0.0);
                                m[(r, 1)] = C64::new(*b, 0.0);
                            }
                            ComplexJson::Real(_) => {
                                return Err(Error::invalid(&field, "coefficient has the wrong shape"))
                            }
                        }
                    }
                    m
                }
                _ => return Err(Error::invalid(&field, "coefficient has the wrong shape")),
            };
            if c.shape() != (raw.dim, S::cols(raw.dim)) {
                return Err(Error::invalid(
                    &field,
                    format!("expected shape {}x{}", raw.dim, S::cols(raw.dim)),
                ));
            }
            if n.unsigned_abs() as usize > raw.trunc_order {
                return Err(Error::invalid(&field, "index outside the truncation window"));
            }
            terms.push((n, c));
        }
        Ok(Self::from_terms(raw.dim, raw.trunc_order, terms)?.with_tail_bound(raw.tail_bound))
    }
}
