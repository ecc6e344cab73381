//! Symbol recovery from an operator matrix.

use std::sync::Arc;

use super::membership::{displacement_check, DisplacementKind};
use super::{build_matho, build_matto, Family, ModelOperator};
use crate::error::{Error, Result};
use crate::inner::BlaschkePotapovProduct;
use crate::laurent::MatrixLaurent;
use crate::linalg::{fro, identity, kron, pinv, unvec, vec_of, CMat, RANK_TOL};
use crate::model_space::ModelSpace;
use crate::symmetry::{c_theta_map, conjugate_symbol, jstar_map, Conjugation, CoordMap, ModelConjugation};

/// A recovered symbol and how well it rebuilds the operator.
#[derive(Clone, Debug)]
pub struct Recovery {
    pub symbol: MatrixLaurent,
    /// `|rebuild(symbol) - op|_F`.
    pub rebuild_residual: f64,
}

/// A Toeplitz symbol for a matrix `a` from `space1` to `space2`, without any
/// membership check.
///
/// Solves `A - S2 A S1^* = B1 D1 + D2 B2^*` for the minimal-norm pair, then sets
/// `Psi(z) x = (B1 k_0 x)(z)`, `Xi(z) x = (B2 k_0 x)(z)` and returns `Psi + Xi^*`.
pub fn toeplitz_symbol(space1: &ModelSpace, space2: &ModelSpace, a: &CMat) -> Result<MatrixLaurent> {
    let (n1, n2) = (space1.dim_k(), space2.dim_k());
    let x = a - space2.shift() * a * space1.shift_adj();
    // vec(B1 D1) = (D1^T kron I) vec(B1), vec(D2 C) = (I kron D2) vec(C), C = B2^*.
    let left = kron(&space1.defect().transpose(), &identity(n2));
    let right = kron(&identity(n1), space2.defect());
    let mut system = CMat::zeros(n1 * n2, 2 * n1 * n2);
    system.view_mut((0, 0), (n1 * n2, n1 * n2)).copy_from(&left);
    system.view_mut((0, n1 * n2), (n1 * n2, n1 * n2)).copy_from(&right);
    let sol = pinv(&system, RANK_TOL) * vec_of(&x);
    let b1 = unvec(&sol.as_slice()[..n1 * n2], n2, n1);
    let b2 = unvec(&sol.as_slice()[n1 * n2..], n2, n1).adjoint();

    let psi = basis_times(space2, &(b1 * space1.eval_at_zero()));
    let xi = basis_times(space1, &(b2 * space2.eval_at_zero()));
    psi.add(&xi.adjoint_star())
}

/// The matrix function `z -> [b_1(z) ... b_n(z)] C` for an `n x d` matrix `C`.
fn basis_times(space: &ModelSpace, c: &CMat) -> MatrixLaurent {
    let d = space.dim();
    let order = space.order();
    let mut out = MatrixLaurent::zeros(d, order);
    let mut tail = 0.0;
    for (i, b) in space.basis().iter().enumerate() {
        let row = c.row(i).into_owned();
        for n in b.indices() {
            *out.coeff_mut(n) += b.coeff(n) * &row;
        }
        tail += b.tail_bound() * row.norm();
    }
    out.with_tail_bound(tail)
}

/// Recover a symbol for an operator that passes the family's first displacement test.
///
/// Hankel recovery moves `B` to the Toeplitz operator `J2* B C_Theta1` between
/// `K_Theta1` and `K_{Theta2~}`, recovers its symbol `Sigma`, and returns
/// `(J2 Sigma J1) Theta1^*` truncated to the window; both inner functions must be
/// J-symmetric for that transfer to be valid.
pub fn recover_symbol(
    op: &ModelOperator,
    family: Family,
    conjugations: Option<(&Conjugation, &Conjugation)>,
    threshold: f64,
) -> Result<Recovery> {
    let kind = match family {
        Family::Toeplitz => DisplacementKind::T1,
        Family::Hankel => DisplacementKind::H1,
    };
    let report = displacement_check(op, kind, None, threshold)?;
    if !report.verdict.is_accept() {
        return Err(Error::Rejected(format!(
            "{kind} residual {:.3e} exceeds the threshold",
            report.residual
        )));
    }
    let (s1, s2) = (op.domain(), op.codomain());
    let order = s1.order().max(s2.order());
    let symbol = match family {
        Family::Toeplitz => toeplitz_symbol(s1, s2, op.matrix())?,
        Family::Hankel => {
            let (j1, j2) = conjugations
                .ok_or_else(|| Error::MissingInput("hankel recovery needs conjugations J1, J2".into()))?;
            hankel_symbol(s1, s2, op.matrix(), j1, j2, threshold)?
        }
    }
    .truncate(order);
    let rebuilt = match family {
        Family::Toeplitz => build_matto(s1, s2, &symbol)?,
        Family::Hankel => build_matho(s1, s2, &symbol)?,
    };
    let rebuild_residual = fro(&(rebuilt.matrix() - op.matrix()));
    Ok(Recovery {
        symbol,
        rebuild_residual,
    })
}

fn product_of(space: &ModelSpace, which: &str) -> Result<BlaschkePotapovProduct> {
    space
        .theta()
        .as_product()
        .cloned()
        .ok_or_else(|| Error::MissingInput(format!("{which} must be a Blaschke-Potapov product")))
}

fn hankel_symbol(
    s1: &Arc<ModelSpace>,
    s2: &Arc<ModelSpace>,
    b: &CMat,
    j1: &Conjugation,
    j2: &Conjugation,
    tol: f64,
) -> Result<MatrixLaurent> {
    let c1 = ModelConjugation::new(s1, j1, tol.max(1e-10))?;
    if !c1.is_involution() {
        return Err(Error::NotJSymmetric("Theta1".into()));
    }
    let t2 = product_of(s2, "Theta2")?;
    if t2.validate(Some(j2), tol.max(1e-10)).j_symmetric != Some(true) {
        return Err(Error::NotJSymmetric("Theta2".into()));
    }
    // For J-symmetric Theta2, Theta2_J = Theta2~.
    let s2j = ModelSpace::build(t2.conjugated(j2), s2.order())?;
    let c_map = c_theta_map(&c1, s1)?;
    let j_map = jstar_map(j2, s2, &s2j)?;
    let a = j_map
        .compose(&CoordMap::linear(b.clone()))
        .compose(&c_map)
        .into_linear()?;
    let sigma = toeplitz_symbol(s1, &s2j, &a)?;
    conjugate_symbol(j2, &sigma, j1).mul(&s1.theta_series().adjoint_star())
}
