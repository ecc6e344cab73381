//! Pure matrix inner functions as Blaschke-Potapov products.
//!
//! An elementary factor is `(I - P + b_a(z) P) U` with `b_a(z) = (z - a) / (1 - conj(a) z)`,
//! `P` the orthogonal projection onto the columns of `frame`, and `U` unitary. A product
//! is `L F_1 F_2 ... F_k` with a constant unitary `L` on the left.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::{matrix_from_json, matrix_to_json, roots_of_unity, ComplexJson, MatrixLaurent};
use crate::linalg::{conj, fro, identity, op_norm, unitarity_defect, CMat, C64};
use crate::symmetry::{Conjugation, CrofootData};

/// Largest admissible modulus of a Blaschke zero.
pub const MAX_ZERO_MODULUS: f64 = 0.9;
/// Tolerance for orthonormal frames and unitary matrices.
pub const STRUCTURE_TOL: f64 = 1e-12;
/// Margin in the purity test `|Theta(0)| <= 1 - PURITY_MARGIN`.
pub const PURITY_MARGIN: f64 = 1e-10;
/// Number of circle samples used by [`BlaschkePotapovProduct::validate`].
pub const VALIDATION_SAMPLES: usize = 64;

/// Scalar Blaschke factor `(z - a) / (1 - conj(a) z)`.
pub fn blaschke(a: C64, z: C64) -> C64 {
    (z - a) / (C64::new(1.0, 0.0) - a.conj() * z)
}

/// Taylor coefficients of `b_a` up to `order`, and the l1 mass of the rest.
///
/// `b_a(z) = -a + (1 - |a|^2) sum_{n >= 1} conj(a)^{n-1} z^n`, whose tail after `order`
/// sums to `(1 + |a|) |a|^order`.
pub fn blaschke_coefficients(a: C64, order: usize) -> (Vec<C64>, f64) {
    let mut out = Vec::with_capacity(order + 1);
    out.push(-a);
    let scale = 1.0 - a.norm_sqr();
    let mut p = C64::new(1.0, 0.0);
    for _ in 1..=order {
        out.push(p * scale);
        p *= a.conj();
    }
    let r = a.norm();
    let tail = if r == 0.0 { 0.0 } else { (1.0 + r) * r.powi(order as i32) };
    (out, tail)
}

/// One elementary factor `(I - P + b_a P) U`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotapovFactor {
    a: C64,
    frame: CMat,
    post_unitary: CMat,
}

impl PotapovFactor {
    pub fn new(a: C64, frame: CMat, post_unitary: CMat) -> Result<Self> {
        if !(a.norm() <= MAX_ZERO_MODULUS) {
            return Err(Error::invalid(
                "a",
                format!("|a| = {} exceeds {MAX_ZERO_MODULUS}", a.norm()),
            ));
        }
        let d = frame.nrows();
        if frame.ncols() == 0 || frame.ncols() > d {
            return Err(Error::invalid("frame", "needs between 1 and d columns"));
        }
        let gram_defect = fro(&(frame.adjoint() * &frame - identity(frame.ncols())));
        if gram_defect > STRUCTURE_TOL {
            return Err(Error::invalid(
                "frame",
                format!("columns are not orthonormal (defect {gram_defect:.3e})"),
            ));
        }
        if post_unitary.shape() != (d, d) {
            return Err(Error::invalid("post_unitary", format!("must be {d}x{d}")));
        }
        let u_defect = unitarity_defect(&post_unitary);
        if u_defect > STRUCTURE_TOL {
            return Err(Error::invalid(
                "post_unitary",
                format!("not unitary (defect {u_defect:.3e})"),
            ));
        }
        Ok(PotapovFactor {
            a,
            frame,
            post_unitary,
        })
    }

    /// Factor with identity post unitary.
    pub fn with_frame(a: C64, frame: CMat) -> Result<Self> {
        let d = frame.nrows();
        Self::new(a, frame, identity(d))
    }

    /// Factor whose projection is onto the listed coordinate axes.
    pub fn coordinate(a: C64, dim: usize, axes: &[usize]) -> Result<Self> {
        let mut frame = CMat::zeros(dim, axes.len());
        for (j, &i) in axes.iter().enumerate() {
            if i >= dim {
                return Err(Error::invalid("frame", format!("axis {i} out of range")));
            }
            frame[(i, j)] = C64::new(1.0, 0.0);
        }
        Self::with_frame(a, frame)
    }

    pub fn a(&self) -> C64 {
        self.a
    }

    pub fn frame(&self) -> &CMat {
        &self.frame
    }

    pub fn post_unitary(&self) -> &CMat {
        &self.post_unitary
    }

    pub fn rank(&self) -> usize {
        self.frame.ncols()
    }

    pub fn dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn projection(&self) -> CMat {
        &self.frame * self.frame.adjoint()
    }

    pub fn evaluate(&self, z: C64) -> CMat {
        let p = self.projection();
        (identity(self.dim()) - &p + p * blaschke(self.a, z)) * &self.post_unitary
    }

    /// Series of the factor truncated at `order`, with certified tail.
    pub fn series(&self, order: usize) -> MatrixLaurent {
        let d = self.dim();
        let p = self.projection();
        let pu = &p * &self.post_unitary;
        let (b, tail) = blaschke_coefficients(self.a, order);
        let mut out = MatrixLaurent::zeros(d, order);
        *out.coeff_mut(0) = (identity(d) - &p) * &self.post_unitary;
        for (n, bn) in b.iter().enumerate() {
            *out.coeff_mut(n as i64) += &pu * *bn;
        }
        out.with_tail_bound(tail * fro(&pu))
    }
}

/// `L F_1 ... F_k` with `L` unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct BlaschkePotapovProduct {
    dim: usize,
    factors: Vec<PotapovFactor>,
    left_unitary: CMat,
}

/// How to reflect an inner function.
#[derive(Clone, Copy, Debug)]
pub enum Reflection<'a> {
    /// `Theta~(z) = Theta(conj z)^*`.
    Tilde,
    /// `Theta_J(z) = J Theta(conj z) J`.
    Conjugated(&'a Conjugation),
}

/// Outcome of [`BlaschkePotapovProduct::validate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InnerReport {
    pub inner: bool,
    pub pure: bool,
    /// `None` when no conjugation was supplied.
    pub j_symmetric: Option<bool>,
    /// Max over circle samples of `|Theta* Theta - I|_F`.
    pub unitarity_defect: f64,
    /// `|Theta(0)|_op`.
    pub norm_at_zero: f64,
    /// Max over circle samples of `|J Theta J - Theta*|_F`, when a conjugation was supplied.
    pub symmetry_defect: Option<f64>,
}

impl BlaschkePotapovProduct {
    pub fn new(dim: usize, left_unitary: CMat, factors: Vec<PotapovFactor>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        if left_unitary.shape() != (dim, dim) {
            return Err(Error::invalid("left_unitary", format!("must be {dim}x{dim}")));
        }
        let defect = unitarity_defect(&left_unitary);
        if defect > STRUCTURE_TOL {
            return Err(Error::invalid(
                "left_unitary",
                format!("not unitary (defect {defect:.3e})"),
            ));
        }
        for (i, f) in factors.iter().enumerate() {
            if f.dim() != dim {
                return Err(Error::invalid(
                    format!("factors[{i}].frame"),
                    format!("has {} rows, expected {dim}", f.dim()),
                ));
            }
        }
        Ok(BlaschkePotapovProduct {
            dim,
            factors,
            left_unitary,
        })
    }

    /// `z^k I_d`.
    pub fn z_power(dim: usize, k: usize) -> Self {
        let f = PotapovFactor::with_frame(C64::new(0.0, 0.0), identity(dim)).expect("identity frame");
        Self::new(dim, identity(dim), vec![f; k]).expect("valid product")
    }

    /// `diag(z^{k_1}, ..., z^{k_d})`, built as factors `z` on the axes with remaining powers.
    pub fn diagonal_powers(powers: &[usize]) -> Self {
        let dim = powers.len();
        let top = powers.iter().cloned().max().unwrap_or(0);
        let factors = (0..top)
            .map(|level| {
                let axes: Vec<usize> = (0..dim).filter(|&i| powers[i] > level).collect();
                PotapovFactor::coordinate(C64::new(0.0, 0.0), dim, &axes).expect("valid axes")
            })
            .collect();
        Self::new(dim, identity(dim), factors).expect("valid product")
    }

    /// Scalar Blaschke product with the given zeros.
    pub fn scalar_blaschke(zeros: &[C64]) -> Result<Self> {
        let factors = zeros
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                PotapovFactor::with_frame(a, identity(1)).map_err(|e| e.within(&format!("factors[{i}]")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(1, identity(1), factors)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factors(&self) -> &[PotapovFactor] {
        &self.factors
    }

    pub fn left_unitary(&self) -> &CMat {
        &self.left_unitary
    }

    /// Dimension of the model space, the sum of the factor ranks.
    pub fn degree(&self) -> usize {
        self.factors.iter().map(PotapovFactor::rank).sum()
    }

    /// True when every zero is at the origin, so the product is a matrix polynomial.
    pub fn is_polynomial(&self) -> bool {
        self.factors.iter().all(|f| f.a == C64::new(0.0, 0.0))
    }

    /// Closed-form value for `|z0| <= 1`.
    pub fn evaluate(&self, z0: C64) -> Result<CMat> {
        if z0.norm() > 1.0 + crate::laurent::CIRCLE_TOL {
            return Err(Error::OutsideDisc(z0));
        }
        Ok(self
            .factors
            .iter()
            .fold(self.left_unitary.clone(), |acc, f| acc * f.evaluate(z0)))
    }

    /// Taylor series truncated at `order`; exact when every zero is at the origin and
    /// `order >= degree`.
    pub fn theta_laurent(&self, order: usize) -> MatrixLaurent {
        let mut acc = MatrixLaurent::identity(self.dim, order).left_mul_const(&self.left_unitary);
        for f in &self.factors {
            acc = acc
                .mul(&f.series(order))
                .expect("factor dimensions agree")
                .truncate(order);
        }
        acc
    }

    pub fn reflect(&self, kind: Reflection<'_>) -> Self {
        match kind {
            Reflection::Tilde => self.tilde(),
            Reflection::Conjugated(j) => self.conjugated(j),
        }
    }

    /// Exact product form of `Theta(conj z)^*`: the factors in reverse order with
    /// conjugated zeros and the unitaries pushed one slot to the right.
    pub fn tilde(&self) -> Self {
        let k = self.factors.len();
        if k == 0 {
            return Self::new(self.dim, self.left_unitary.adjoint(), vec![]).expect("unitary");
        }
        let left = self.factors[k - 1].post_unitary.adjoint();
        let factors = (0..k)
            .rev()
            .map(|i| {
                let post = if i == 0 {
                    self.left_unitary.adjoint()
                } else {
                    self.factors[i - 1].post_unitary.adjoint()
                };
                PotapovFactor {
                    a: self.factors[i].a.conj(),
                    frame: self.factors[i].frame.clone(),
                    post_unitary: post,
                }
            })
            .collect();
        Self::new(self.dim, left, factors).expect("tilde keeps structure")
    }

    /// Exact product form of `J Theta(conj z) J` for `J x = U conj(x)`.
    pub fn conjugated(&self, j: &Conjugation) -> Self {
        let u = j.matrix();
        let u_inv = u.adjoint();
        let sandwich = |m: &CMat| u * conj(m) * &u_inv;
        let factors = self
            .factors
            .iter()
            .map(|f| PotapovFactor {
                a: f.a.conj(),
                frame: u * conj(&f.frame),
                post_unitary: sandwich(&f.post_unitary),
            })
            .collect();
        Self::new(self.dim, sandwich(&self.left_unitary), factors).expect("conjugation keeps structure")
    }

    /// Inner, pure and (optionally) J-symmetric checks on circle samples.
    pub fn validate(&self, j: Option<&Conjugation>, tol: f64) -> InnerReport {
        let samples: Vec<CMat> = roots_of_unity(VALIDATION_SAMPLES)
            .into_iter()
            .map(|z| self.evaluate(z).expect("circle point"))
            .collect();
        validate_samples(
            &samples,
            &self.evaluate(C64::new(0.0, 0.0)).expect("origin"),
            j,
            tol,
        )
    }
}

pub(crate) fn validate_samples(
    samples: &[CMat],
    at_zero: &CMat,
    j: Option<&Conjugation>,
    tol: f64,
) -> InnerReport {
    let unitarity = samples.iter().map(unitarity_defect).fold(0.0, f64::max);
    let norm_at_zero = op_norm(at_zero);
    let symmetry_defect = j.map(|j| {
        samples
            .iter()
            .map(|t| fro(&(j.sandwich(t) - t.adjoint())))
            .fold(0.0, f64::max)
    });
    InnerReport {
        inner: unitarity <= tol,
        pure: norm_at_zero <= 1.0 - PURITY_MARGIN,
        j_symmetric: symmetry_defect.map(|s| s <= tol),
        unitarity_defect: unitarity,
        norm_at_zero,
        symmetry_defect,
    }
}

/// Circle sample count used when a non-polynomial function is fitted to a series of
/// order `order`.
pub fn fit_samples(order: usize) -> usize {
    (4 * order + 4).next_power_of_two().max(512)
}

/// `Theta^W(z) = -W + D_{W*} (I - Theta(z) W*)^{-1} Theta(z) D_W`, evaluated in closed form.
#[derive(Clone, Debug)]
pub struct CrofootTheta {
    base: BlaschkePotapovProduct,
    data: CrofootData,
}

impl CrofootTheta {
    pub fn new(base: BlaschkePotapovProduct, data: CrofootData) -> Result<Self> {
        if data.dim() != base.dim() {
            return Err(Error::DimensionMismatch(format!(
                "W is {}x{}, Theta has dimension {}",
                data.dim(),
                data.dim(),
                base.dim()
            )));
        }
        Ok(CrofootTheta { base, data })
    }

    pub fn base(&self) -> &BlaschkePotapovProduct {
        &self.base
    }

    pub fn data(&self) -> &CrofootData {
        &self.data
    }

    pub fn evaluate(&self, z0: C64) -> Result<CMat> {
        let t = self.base.evaluate(z0)?;
        let w = self.data.w();
        let inv = (identity(self.base.dim()) - &t * w.adjoint())
            .try_inverse()
            .ok_or_else(|| Error::Numerical("I - Theta W* is singular".into()))?;
        Ok(-w + self.data.d_w_star() * inv * t * self.data.d_w())
    }
}

/// A pure inner function in one of the representations the toolkit builds spaces for.
#[derive(Clone, Debug)]
pub enum InnerFunction {
    Product(BlaschkePotapovProduct),
    Crofoot(Box<CrofootTheta>),
}

impl InnerFunction {
    pub fn dim(&self) -> usize {
        match self {
            InnerFunction::Product(p) => p.dim(),
            InnerFunction::Crofoot(c) => c.base.dim(),
        }
    }

    /// Dimension of the model space.
    pub fn degree(&self) -> usize {
        match self {
            InnerFunction::Product(p) => p.degree(),
            InnerFunction::Crofoot(c) => c.base.degree(),
        }
    }

    pub fn is_polynomial(&self) -> bool {
        match self {
            InnerFunction::Product(p) => p.is_polynomial(),
            InnerFunction::Crofoot(c) => c.data.is_zero() && c.base.is_polynomial(),
        }
    }

    pub fn evaluate(&self, z0: C64) -> Result<CMat> {
        match self {
            InnerFunction::Product(p) => p.evaluate(z0),
            InnerFunction::Crofoot(c) => c.evaluate(z0),
        }
    }

    pub fn as_product(&self) -> Option<&BlaschkePotapovProduct> {
        match self {
            InnerFunction::Product(p) => Some(p),
            InnerFunction::Crofoot(_) => None,
        }
    }

    /// Series truncated at `order`. Products expand factor by factor; Crofoot
    /// transforms are fitted from circle samples, with the fitted coefficients beyond
    /// `order` plus an off-grid check folded into the tail bound.
    pub fn series(&self, order: usize) -> Result<MatrixLaurent> {
        match self {
            InnerFunction::Product(p) => Ok(p.theta_laurent(order)),
            InnerFunction::Crofoot(c) => fit_series(order, |z| c.evaluate(z)),
        }
    }

    pub fn validate(&self, j: Option<&Conjugation>, tol: f64) -> Result<InnerReport> {
        let samples = roots_of_unity(VALIDATION_SAMPLES)
            .into_iter()
            .map(|z| self.evaluate(z))
            .collect::<Result<Vec<_>>>()?;
        Ok(validate_samples(
            &samples,
            &self.evaluate(C64::new(0.0, 0.0))?,
            j,
            tol,
        ))
    }
}

impl From<BlaschkePotapovProduct> for InnerFunction {
    fn from(p: BlaschkePotapovProduct) -> Self {
        InnerFunction::Product(p)
    }
}

/// Fit a matrix function given pointwise on the circle to a series of order `order`.
pub fn fit_series(order: usize, f: impl Fn(C64) -> Result<CMat>) -> Result<MatrixLaurent> {
    let n = fit_samples(order);
    let pts = roots_of_unity(n);
    let samples = pts.iter().map(|&z| f(z)).collect::<Result<Vec<_>>>()?;
    let wide = MatrixLaurent::fit_from_samples(&samples, n / 2 - 1)?;
    let fitted = wide.truncate(order);
    // Aliasing guard: compare against the function half way between grid points.
    let offset = C64::from_polar(1.0, std::f64::consts::PI / n as f64);
    let mut off_grid = 0.0f64;
    for z in pts.iter().step_by(n / 64) {
        let zz = z * offset;
        off_grid = off_grid.max(fro(&(wide.evaluate(zz)? - f(zz)?)));
    }
    let tail = fitted.tail_bound() + off_grid;
    Ok(fitted.with_tail_bound(tail))
}

/// Theta^W as a fitted series; see [`CrofootTheta`].
pub fn crofoot_theta_w(
    theta: &BlaschkePotapovProduct,
    w: &CrofootData,
    order: usize,
) -> Result<MatrixLaurent> {
    let ct = CrofootTheta::new(theta.clone(), w.clone())?;
    let series = fit_series(order, |z| ct.evaluate(z))?;
    let report = InnerFunction::Crofoot(Box::new(ct)).validate(None, 1e-8)?;
    if !report.inner {
        return Err(Error::Numerical(format!(
            "Theta^W fails the inner test (defect {:.3e})",
            report.unitarity_defect
        )));
    }
    Ok(series)
}

// JSON: factor {"a": [re, im], "frame": [[...]], "post_unitary": [[...]]};
// product {"dim": d, "left_unitary": [[...]], "factors": [...]}. Unitaries default to I.

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct FactorJson {
    pub a: ComplexJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<Vec<Vec<ComplexJson>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_unitary: Option<Vec<Vec<ComplexJson>>>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct ProductJson {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_unitary: Option<Vec<Vec<ComplexJson>>>,
    pub factors: Vec<FactorJson>,
}

impl ProductJson {
    /// Validate and build; errors carry a field path such as `factors[0].frame`.
    pub fn build(&self) -> Result<BlaschkePotapovProduct> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        let left = match &self.left_unitary {
            Some(rows) => matrix_from_json(rows, "left_unitary")?,
            None => identity(d),
        };
        let mut factors = Vec::with_capacity(self.factors.len());
        for (i, f) in self.factors.iter().enumerate() {
            let path = format!("factors[{i}]");
            let frame = match &f.frame {
                Some(rows) => matrix_from_json(rows, "frame").map_err(|e| e.within(&path))?,
                None => identity(d),
            };
            if frame.nrows() != d {
                return Err(Error::invalid(format!("{path}.frame"), format!("must have {d} rows")));
            }
            let post = match &f.post_unitary {
                Some(rows) => matrix_from_json(rows, "post_unitary").map_err(|e| e.within(&path))?,
                None => identity(d),
            };
            factors.push(PotapovFactor::new(f.a.into(), frame, post).map_err(|e| e.within(&path))?);
        }
        BlaschkePotapovProduct::new(d, left, factors)
    }
}

impl From<&BlaschkePotapovProduct> for ProductJson {
    fn from(p: &BlaschkePotapovProduct) -> Self {
        ProductJson {
            dim: p.dim,
            left_unitary: Some(matrix_to_json(&p.left_unitary)),
            factors: p
                .factors
                .iter()
                .map(|f| FactorJson {
                    a: f.a.into(),
                    frame: Some(matrix_to_json(&f.frame)),
                    post_unitary: Some(matrix_to_json(&f.post_unitary)),
                })
                .collect(),
        }
    }
}

impl Serialize for BlaschkePotapovProduct {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProductJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for BlaschkePotapovProduct {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        ProductJson::deserialize(d)?.build().map_err(D::Error::custom)
    }
}
