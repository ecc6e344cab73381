//! Conjugations and the unitary or antiunitary maps between model spaces.
//!
//! Antilinear maps between spaces are stored as a matrix plus a flag: an antilinear
//! map `T` acts on coordinates as `c -> M conj(c)`, so composition tracks parity
//! explicitly and every composite with an even number of antilinear factors is an
//! ordinary matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner::{fit_samples, CrofootTheta, InnerFunction};
use crate::laurent::{matrix_from_json, matrix_to_json, roots_of_unity, ComplexJson, Laurent, MatrixLaurent, Shape, VectorLaurent};
use crate::linalg::{conj, fro, hermitian_sqrt, identity, op_norm, unitarity_defect, CMat, C64};
use crate::model_space::ModelSpace;

/// Largest admissible operator norm of a Crofoot parameter `W`.
pub const MAX_CROFOOT_NORM: f64 = 0.9;

/// An antilinear involution `J x = U conj(x)` on `C^d`, with `U` a symmetric unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct Conjugation {
    u: CMat,
}

impl Conjugation {
    pub fn new(u: CMat) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::invalid("U", "must be square"));
        }
        let ud = unitarity_defect(&u);
        if ud > 1e-12 {
            return Err(Error::invalid("U", format!("not unitary (defect {ud:.3e})")));
        }
        let sd = fro(&(&u - u.transpose()));
        if sd > 1e-12 {
            return Err(Error::invalid("U", format!("not symmetric (defect {sd:.3e})")));
        }
        Ok(Conjugation { u })
    }

    /// Entrywise complex conjugation.
    pub fn entrywise(dim: usize) -> Self {
        Conjugation { u: identity(dim) }
    }

    /// `U = W W^T` for a unitary `W`; every conjugation arises this way.
    pub fn from_takagi(w: &CMat) -> Result<Self> {
        Self::new(w * w.transpose())
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.u
    }

    /// `J` applied to each column of `x`.
    pub fn apply(&self, x: &CMat) -> CMat {
        &self.u * conj(x)
    }

    /// The linear map `J M J` for a matrix `M`, i.e. `U conj(M) conj(U)`.
    pub fn sandwich(&self, m: &CMat) -> CMat {
        &self.u * conj(m) * conj(&self.u)
    }

    /// Coefficient conjugation: `a_n -> J a_n` for every coefficient.
    pub fn jstar<S: Shape>(&self, f: &Laurent<S>) -> Laurent<S> {
        let terms = f.iter().map(|(n, c)| (n, self.apply(c)));
        Laurent::from_terms(f.dim(), f.order(), terms)
            .expect("same window")
            .with_tail_bound(f.tail_bound())
    }
}

/// Pointwise `J2 F(z) J1` for a matrix symbol. As a series, coefficient `n` becomes
/// `U2 conj(F_{-n}) conj(U1)`.
pub fn conjugate_symbol(j2: &Conjugation, f: &MatrixLaurent, j1: &Conjugation) -> MatrixLaurent {
    let u1c = conj(j1.matrix());
    let terms = f.iter().map(|(n, _)| (n, j2.matrix() * conj(f.coeff(-n)) * &u1c));
    MatrixLaurent::from_terms(f.dim(), f.order(), terms)
        .expect("same window")
        .with_tail_bound(f.tail_bound())
}

/// Pointwise `J f(z)` for a vector function.
pub fn conjugate_pointwise(j: &Conjugation, f: &VectorLaurent) -> VectorLaurent {
    let terms = f.iter().map(|(n, _)| (n, j.apply(f.coeff(-n))));
    VectorLaurent::from_terms(f.dim(), f.order(), terms)
        .expect("same window")
        .with_tail_bound(f.tail_bound())
}

/// Generalized Crofoot parameter `W` with its defect roots.
#[derive(Clone, Debug, PartialEq)]
pub struct CrofootData {
    w: CMat,
    d_w: CMat,
    d_w_star: CMat,
}

impl CrofootData {
    pub fn new(w: CMat) -> Result<Self> {
        if !w.is_square() {
            return Err(Error::invalid("W", "must be square"));
        }
        let n = op_norm(&w);
        if n > MAX_CROFOOT_NORM {
            return Err(Error::invalid(
                "W",
                format!("operator norm {n:.4} exceeds {MAX_CROFOOT_NORM}"),
            ));
        }
        let d = w.nrows();
        let d_w = hermitian_sqrt(&(identity(d) - w.adjoint() * &w))
            .ok_or_else(|| Error::Numerical("I - W*W is not positive".into()))?;
        let d_w_star = hermitian_sqrt(&(identity(d) - &w * w.adjoint()))
            .ok_or_else(|| Error::Numerical("I - WW* is not positive".into()))?;
        Ok(CrofootData { w, d_w, d_w_star })
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(CMat::zeros(dim, dim)).expect("zero is a contraction")
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn w(&self) -> &CMat {
        &self.w
    }

    /// `(I - W*W)^{1/2}`.
    pub fn d_w(&self) -> &CMat {
        &self.d_w
    }

    /// `(I - WW*)^{1/2}`.
    pub fn d_w_star(&self) -> &CMat {
        &self.d_w_star
    }

    pub fn is_zero(&self) -> bool {
        self.w.iter().all(|z| z.norm() == 0.0)
    }
}

/// JSON form `{"U": [[...]]}`.
#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct ConjugationJson {
    #[serde(rename = "U")]
    pub u: Vec<Vec<ComplexJson>>,
}

impl ConjugationJson {
    pub fn build(&self) -> Result<Conjugation> {
        Conjugation::new(matrix_from_json(&self.u, "U")?)
    }
}

impl From<&Conjugation> for ConjugationJson {
    fn from(j: &Conjugation) -> Self {
        ConjugationJson {
            u: matrix_to_json(&j.u),
        }
    }
}

/// JSON form `{"W": [[...]]}`.
#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct CrofootJson {
    #[serde(rename = "W")]
    pub w: Vec<Vec<ComplexJson>>,
}

impl CrofootJson {
    pub fn build(&self) -> Result<CrofootData> {
        CrofootData::new(matrix_from_json(&self.w, "W")?)
    }
}

impl From<&CrofootData> for CrofootJson {
    fn from(c: &CrofootData) -> Self {
        CrofootJson {
            w: matrix_to_json(&c.w),
        }
    }
}

/// `tau_Theta f = conj(z) Theta~(z) f(conj z)` where `Theta~(z) = Theta(conj z)^*`.
///
/// `theta` is the series of Theta. The output window is large enough to hold the
/// full product.
pub fn tau(theta: &MatrixLaurent, f: &VectorLaurent) -> Result<VectorLaurent> {
    Ok(theta.tilde().mul(&f.reflect())?.shift(-1))
}

/// The model conjugation `C_Theta f = Theta(z) conj(z) J f(z)` on one model space.
///
/// `C_Theta` is always an antilinear isometry; it is an involution of `K_Theta` only
/// when Theta is J-symmetric, which [`ModelConjugation::is_involution`] reports.
#[derive(Clone, Debug)]
pub struct ModelConjugation {
    j: Conjugation,
    theta: MatrixLaurent,
    involution: bool,
    symmetry_defect: f64,
}

impl ModelConjugation {
    pub fn new(space: &ModelSpace, j: &Conjugation, tol: f64) -> Result<Self> {
        if j.dim() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "conjugation acts on C^{}, space on C^{}",
                j.dim(),
                space.dim()
            )));
        }
        let report = space.theta().validate(Some(j), tol)?;
        Ok(ModelConjugation {
            j: j.clone(),
            theta: space.theta_series().clone(),
            involution: report.j_symmetric == Some(true),
            symmetry_defect: report.symmetry_defect.unwrap_or(f64::INFINITY),
        })
    }

    pub fn is_involution(&self) -> bool {
        self.involution
    }

    pub fn symmetry_defect(&self) -> f64 {
        self.symmetry_defect
    }

    pub fn conjugation(&self) -> &Conjugation {
        &self.j
    }

    pub fn apply(&self, f: &VectorLaurent) -> Result<VectorLaurent> {
        self.theta.mul(&conjugate_pointwise(&self.j, f).shift(-1))
    }
}

/// Direction of the Crofoot map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrofootDirection {
    /// `K_Theta -> K_{Theta^W}`: `f -> D_{W*} (I - Theta W*)^{-1} f`.
    Forward,
    /// `K_{Theta^W} -> K_Theta`: `g -> D_{W*} (I + Theta^W W*)^{-1} g`.
    Adjoint,
}

/// Apply the Crofoot transform by circle sampling and series refit. The output window
/// equals the input window; refit mass outside it goes to the tail bound.
pub fn crofoot_map(
    theta: &CrofootTheta,
    f: &VectorLaurent,
    direction: CrofootDirection,
) -> Result<VectorLaurent> {
    let data = theta.data();
    let d = data.dim();
    let w_star = data.w().adjoint();
    let multiplier = |z: C64| -> Result<CMat> {
        let m = match direction {
            CrofootDirection::Forward => identity(d) - theta.base().evaluate(z)? * &w_star,
            CrofootDirection::Adjoint => identity(d) + theta.evaluate(z)? * &w_star,
        };
        let inv = m
            .try_inverse()
            .ok_or_else(|| Error::Numerical("Crofoot multiplier is singular".into()))?;
        Ok(data.d_w_star() * inv)
    };
    apply_pointwise(f, f.order(), multiplier)
}

/// `(M f)(z) = M(z) f(z)` for a matrix function known pointwise, refitted to `order`.
pub fn apply_pointwise(
    f: &VectorLaurent,
    order: usize,
    m: impl Fn(C64) -> Result<CMat>,
) -> Result<VectorLaurent> {
    let n = fit_samples(order.max(f.order()));
    let values = f.sample_circle(n);
    let pts = roots_of_unity(n);
    let products = pts
        .iter()
        .zip(&values)
        .map(|(&z, v)| Ok(m(z)? * v))
        .collect::<Result<Vec<_>>>()?;
    let wide = VectorLaurent::fit_from_samples(&products, n / 2 - 1)?;
    let sup_m = pts
        .iter()
        .step_by((n / 64).max(1))
        .map(|&z| m(z).map(|v| op_norm(&v)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let out = wide.truncate(order);
    let tail = out.tail_bound() + sup_m * f.tail_bound();
    Ok(out.with_tail_bound(tail))
}

/// Coordinate matrix of a linear or antilinear map between model spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordMap {
    matrix: CMat,
    antilinear: bool,
}

impl CoordMap {
    pub fn linear(matrix: CMat) -> Self {
        CoordMap {
            matrix,
            antilinear: false,
        }
    }

    pub fn antilinear(matrix: CMat) -> Self {
        CoordMap {
            matrix,
            antilinear: true,
        }
    }

    /// Coordinates of `map(b_j)` in `to` for every basis vector `b_j` of `from`.
    pub fn of_map(
        from: &ModelSpace,
        to: &ModelSpace,
        antilinear: bool,
        map: impl Fn(&VectorLaurent) -> Result<VectorLaurent>,
    ) -> Result<Self> {
        let mut m = CMat::zeros(to.dim_k(), from.dim_k());
        for (j, b) in from.basis().iter().enumerate() {
            m.set_column(j, &to.coordinates(&map(b)?)?);
        }
        Ok(CoordMap {
            matrix: m,
            antilinear,
        })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn is_antilinear(&self) -> bool {
        self.antilinear
    }

    /// `self` after `inner`.
    pub fn compose(&self, inner: &CoordMap) -> CoordMap {
        let rhs = if self.antilinear {
            conj(&inner.matrix)
        } else {
            inner.matrix.clone()
        };
        CoordMap {
            matrix: &self.matrix * rhs,
            antilinear: self.antilinear ^ inner.antilinear,
        }
    }

    /// Hilbert-space adjoint. For an antilinear `c -> M conj(c)` the adjoint is
    /// `d -> M^T conj(d)`.
    pub fn adjoint(&self) -> CoordMap {
        CoordMap {
            matrix: if self.antilinear {
                self.matrix.transpose()
            } else {
                self.matrix.adjoint()
            },
            antilinear: self.antilinear,
        }
    }

    pub fn apply(&self, c: &CMat) -> CMat {
        if self.antilinear {
            &self.matrix * conj(c)
        } else {
            &self.matrix * c
        }
    }

    /// The matrix of a linear composite; errors if the map is antilinear.
    pub fn into_linear(self) -> Result<CMat> {
        if self.antilinear {
            return Err(Error::Numerical("expected a linear composite".into()));
        }
        Ok(self.matrix)
    }
}

/// `tau_Theta` from `K_Theta` to `K_{Theta~}`.
pub fn tau_map(from: &ModelSpace, to_tilde: &ModelSpace) -> Result<CoordMap> {
    CoordMap::of_map(from, to_tilde, false, |f| tau(from.theta_series(), f))
}

/// `J*` from `K_Theta` to `K_{Theta_J}`.
pub fn jstar_map(j: &Conjugation, from: &ModelSpace, to: &ModelSpace) -> Result<CoordMap> {
    CoordMap::of_map(from, to, true, |f| Ok(j.jstar(f)))
}

/// `C_Theta` on `K_Theta`.
pub fn c_theta_map(c: &ModelConjugation, space: &ModelSpace) -> Result<CoordMap> {
    CoordMap::of_map(space, space, true, |f| c.apply(f))
}

/// Forward Crofoot map from `K_Theta` to `K_{Theta^W}`. `to` must be built from the
/// same [`CrofootTheta`].
pub fn crofoot_coord_map(from: &ModelSpace, to: &ModelSpace) -> Result<CoordMap> {
    let ct = match to.theta() {
        InnerFunction::Crofoot(ct) => ct.as_ref().clone(),
        InnerFunction::Product(_) => {
            return Err(Error::MissingInput("target space is not a Crofoot transform".into()))
        }
    };
    CoordMap::of_map(from, to, false, |f| crofoot_map(&ct, f, CrofootDirection::Forward))
}
