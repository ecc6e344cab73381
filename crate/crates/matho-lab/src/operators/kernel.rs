//! Symbol kernels: which symbols give the zero operator.
//!
//! Toeplitz: `Theta2 H2 + (Theta1 H2)^*`. Hankel (J-symmetric inner functions):
//! `J2 [H2]^* J1 + J2 Theta2~ H2 Theta1 J1`. Both are spanned inside the truncation
//! window by explicit generators; distance to that span decides membership, and the
//! answer is always cross-checked against building the operator.

use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;

use super::{build, Family};
use crate::error::{Error, Result};
use crate::laurent::MatrixLaurent;
use crate::linalg::{fro, range_split, CMat, C64};
use crate::model_space::ModelSpace;
use crate::symmetry::{conjugate_symbol, Conjugation};

/// Rank cutoff used when orthonormalizing kernel generators.
const GENERATOR_RANK_TOL: f64 = 1e-10;
/// Threshold for "the built operator is zero".
pub const ZERO_OPERATOR_TOL: f64 = 1e-10;

/// Generators of the kernel class truncated to the window `[-M, M]`, `k = 0..=M`.
pub fn kernel_generators(
    family: Family,
    space1: &ModelSpace,
    space2: &ModelSpace,
    conjugations: Option<(&Conjugation, &Conjugation)>,
) -> Result<Vec<MatrixLaurent>> {
    let d = space1.dim();
    let m = window(space1, space2)?;
    let mut out = Vec::with_capacity(2 * (m + 1) * d * d);
    let unit = |k: usize, i: usize, j: usize| {
        let mut e = CMat::zeros(d, d);
        e[(i, j)] = C64::new(1.0, 0.0);
        MatrixLaurent::monomial(k as i64, e, m)
    };
    match family {
        Family::Toeplitz => {
            let t1 = space1.theta_series();
            let t2 = space2.theta_series();
            for k in 0..=m {
                for i in 0..d {
                    for j in 0..d {
                        let e = unit(k, i, j);
                        out.push(t2.mul(&e)?.truncate(m));
                        out.push(t1.mul(&e)?.adjoint_star().truncate(m));
                    }
                }
            }
        }
        Family::Hankel => {
            let (j1, j2) = conjugations
                .ok_or_else(|| Error::MissingInput("hankel kernel needs conjugations J1, J2".into()))?;
            let t2_tilde = space2.theta_series().tilde();
            let t1 = space1.theta_series();
            for k in 0..=m {
                for i in 0..d {
                    for j in 0..d {
                        let e = unit(k, i, j);
                        out.push(conjugate_symbol(j2, &e.adjoint_star(), j1));
                        let inner = t2_tilde.mul(&e)?.truncate(2 * m).mul(t1)?;
                        out.push(conjugate_symbol(j2, &inner, j1).truncate(m));
                    }
                }
            }
        }
    }
    Ok(out)
}

fn window(space1: &ModelSpace, space2: &ModelSpace) -> Result<usize> {
    if space1.order() != space2.order() {
        return Err(Error::DimensionMismatch(format!(
            "spaces use windows {} and {}",
            space1.order(),
            space2.order()
        )));
    }
    if space1.dim() != space2.dim() {
        return Err(Error::DimensionMismatch("coefficient dimensions differ".into()));
    }
    Ok(space1.order())
}

fn coefficient_vector(phi: &MatrixLaurent, m: usize) -> DVector<C64> {
    let d = phi.dim();
    let mut v = DVector::zeros((2 * m + 1) * d * d);
    for (slot, n) in (-(m as i64)..=m as i64).enumerate() {
        if let Some(c) = phi.get(n) {
            for (k, z) in c.iter().enumerate() {
                v[slot * d * d + k] = *z;
            }
        }
    }
    v
}

fn from_coefficient_vector(v: &DVector<C64>, d: usize, m: usize) -> MatrixLaurent {
    let terms = (0..2 * m + 1).map(|slot| {
        let c = CMat::from_column_slice(d, d, &v.as_slice()[slot * d * d..(slot + 1) * d * d]);
        (slot as i64 - m as i64, c)
    });
    MatrixLaurent::from_terms(d, m, terms).expect("window")
}

/// The kernel class inside the window, cached per space pair. Stored as an orthonormal
/// basis of its orthogonal complement, which is much smaller than the class itself.
#[derive(Clone, Debug)]
pub struct KernelClass {
    family: Family,
    space1: Arc<ModelSpace>,
    space2: Arc<ModelSpace>,
    complement: CMat,
    window: usize,
}

/// Outcome of a kernel test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelVerdict {
    pub family: Family,
    /// Verdict from the generator span.
    pub in_kernel: bool,
    /// Distance of the symbol to the generator span.
    pub distance: f64,
    /// Frobenius norm of the operator built from the symbol.
    pub operator_norm: f64,
    /// Verdict from the built operator.
    pub operator_is_zero: bool,
    /// True when both verdicts agree; a disagreement is reported, not resolved.
    pub agrees: bool,
}

impl KernelClass {
    pub fn new(
        family: Family,
        space1: &Arc<ModelSpace>,
        space2: &Arc<ModelSpace>,
        conjugations: Option<(&Conjugation, &Conjugation)>,
    ) -> Result<Self> {
        let m = window(space1, space2)?;
        let gens = kernel_generators(family, space1, space2, conjugations)?;
        let d = space1.dim();
        let mut mat = CMat::zeros((2 * m + 1) * d * d, gens.len());
        for (j, g) in gens.iter().enumerate() {
            mat.set_column(j, &coefficient_vector(g, m));
        }
        let (_, complement) = range_split(&mat, GENERATOR_RANK_TOL);
        Ok(KernelClass {
            family,
            space1: space1.clone(),
            space2: space2.clone(),
            complement,
            window: m,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Dimension of the kernel class inside the window.
    pub fn rank(&self) -> usize {
        self.complement.nrows() - self.complement.ncols()
    }

    fn admit(&self, phi: &MatrixLaurent) -> Result<DVector<C64>> {
        if phi.dim() != self.space1.dim() {
            return Err(Error::DimensionMismatch("symbol dimension".into()));
        }
        if phi.support_order() > self.window {
            return Err(Error::WindowTooSmall(format!(
                "symbol reaches index {} but the generators only span [-{m}, {m}]",
                phi.support_order(),
                m = self.window
            )));
        }
        Ok(coefficient_vector(phi, self.window))
    }

    /// Least-squares distance from the symbol to the kernel class.
    pub fn distance(&self, phi: &MatrixLaurent) -> Result<f64> {
        let v = self.admit(phi)?;
        Ok((self.complement.adjoint() * &v).norm())
    }

    /// Representative of the class of `phi` orthogonal to the kernel.
    pub fn reduce(&self, phi: &MatrixLaurent) -> Result<MatrixLaurent> {
        let v = self.admit(phi)?;
        let r = &self.complement * (self.complement.adjoint() * &v);
        Ok(from_coefficient_vector(&r, phi.dim(), self.window))
    }

    /// Distance verdict plus the direct zero-operator check.
    pub fn test(&self, phi: &MatrixLaurent, tol: f64) -> Result<KernelVerdict> {
        let scale = 1.0 + phi.norm();
        let distance = self.distance(phi)?;
        let op = build(self.family, &self.space1, &self.space2, phi)?;
        let operator_norm = fro(op.matrix());
        let in_kernel = distance <= tol * scale;
        let operator_is_zero = operator_norm <= ZERO_OPERATOR_TOL * scale;
        Ok(KernelVerdict {
            family: self.family,
            in_kernel,
            distance,
            operator_norm,
            operator_is_zero,
            agrees: in_kernel == operator_is_zero,
        })
    }
}

/// One-shot kernel test; builds the kernel class for the pair.
pub fn kernel_test(
    phi: &MatrixLaurent,
    space1: &Arc<ModelSpace>,
    space2: &Arc<ModelSpace>,
    family: Family,
    conjugations: Option<(&Conjugation, &Conjugation)>,
    tol: f64,
) -> Result<KernelVerdict> {
    KernelClass::new(family, space1, space2, conjugations)?.test(phi, tol)
}
