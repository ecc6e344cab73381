//! Transform identities between truncated operators, checked numerically.
//!
//! Each entry composes coordinate matrices for the left side and rebuilds the right
//! side from its stated symbol; the residual is the Frobenius norm of the difference.
//! Antilinear factors always come in pairs, so every composite is linear.

use std::sync::{Arc, OnceLock};

use serde::Serialize;

use super::{build_matho, build_matto, Verdict};
use crate::error::{Error, Result};
use crate::inner::{fit_series, BlaschkePotapovProduct, CrofootTheta, InnerFunction};
use crate::laurent::MatrixLaurent;
use crate::linalg::{fro, identity, CMat, C64};
use crate::model_space::ModelSpace;
use crate::symmetry::{
    c_theta_map, conjugate_symbol, crofoot_coord_map, jstar_map, tau_map, Conjugation, CoordMap, CrofootData,
    ModelConjugation,
};

/// Identities checked by `verify all`.
pub const REGISTRY: [&str; 13] = [
    "crofoot", "tau", "jstar", "ctheta", "prop61a", "prop61b", "prop61c", "prop61d", "prop61e", "prop61f",
    "eq_sz", "eq_ddd", "remark412",
];

/// Symbol formulas kept for comparison; they are expected to fail on generic data.
pub const DIAGNOSTICS: [&str; 2] = ["crofoot_as_printed", "ctheta_as_printed"];

/// Tolerance for the J-symmetry and commutation hypotheses.
const HYPOTHESIS_TOL: f64 = 1e-10;

/// Everything an identity may need. Conjugations and Crofoot parameters are optional;
/// entries that need them report a missing input.
#[derive(Clone, Debug)]
pub struct TransformInputs {
    pub theta1: BlaschkePotapovProduct,
    pub theta2: BlaschkePotapovProduct,
    pub phi: MatrixLaurent,
    pub conjugations: Option<(Conjugation, Conjugation)>,
    pub crofoot: Option<(CrofootData, CrofootData)>,
    pub order: usize,
    pub threshold: f64,
}

/// Inputs plus lazily built model spaces, shared by all entries.
#[derive(Debug)]
pub struct TransformContext {
    inputs: TransformInputs,
    k1: OnceLock<Arc<ModelSpace>>,
    k2: OnceLock<Arc<ModelSpace>>,
    kt1: OnceLock<Arc<ModelSpace>>,
    kt2: OnceLock<Arc<ModelSpace>>,
    kj1: OnceLock<Arc<ModelSpace>>,
    kj2: OnceLock<Arc<ModelSpace>>,
    kw1: OnceLock<Arc<ModelSpace>>,
    kw2: OnceLock<Arc<ModelSpace>>,
}

/// Residual of one identity. `verdict` is accept iff
/// `residual <= threshold * (1 + lhs_norm)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransformResult {
    pub name: String,
    pub residual: f64,
    pub lhs_norm: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    /// False when the identity's extra hypotheses fail (only `remark412` has any that
    /// are not enforced up front); the residual is still reported.
    pub hypotheses_hold: bool,
}

/// Result of one entry in a `verify all` run.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum RegistryOutcome {
    Checked(TransformResult),
    Skipped { name: String, reason: String },
}

fn cached(cell: &OnceLock<Arc<ModelSpace>>, make: impl FnOnce() -> Result<ModelSpace>) -> Result<&Arc<ModelSpace>> {
    if let Some(s) = cell.get() {
        return Ok(s);
    }
    let space = Arc::new(make()?);
    Ok(cell.get_or_init(|| space))
}

impl TransformContext {
    pub fn new(inputs: TransformInputs) -> Result<Self> {
        let d = inputs.theta1.dim();
        if inputs.theta2.dim() != d || inputs.phi.dim() != d {
            return Err(Error::DimensionMismatch(
                "Theta1, Theta2 and the symbol must act on the same C^d".into(),
            ));
        }
        if let Some((j1, j2)) = &inputs.conjugations {
            if j1.dim() != d || j2.dim() != d {
                return Err(Error::DimensionMismatch("conjugation dimension".into()));
            }
        }
        if let Some((w1, w2)) = &inputs.crofoot {
            if w1.dim() != d || w2.dim() != d {
                return Err(Error::DimensionMismatch("Crofoot parameter dimension".into()));
            }
        }
        Ok(TransformContext {
            inputs,
            k1: OnceLock::new(),
            k2: OnceLock::new(),
            kt1: OnceLock::new(),
            kt2: OnceLock::new(),
            kj1: OnceLock::new(),
            kj2: OnceLock::new(),
            kw1: OnceLock::new(),
            kw2: OnceLock::new(),
        })
    }

    pub fn inputs(&self) -> &TransformInputs {
        &self.inputs
    }

    fn order(&self) -> usize {
        self.inputs.order
    }

    pub fn k1(&self) -> Result<&Arc<ModelSpace>> {
        cached(&self.k1, || ModelSpace::build(self.inputs.theta1.clone(), self.order()))
    }

    pub fn k2(&self) -> Result<&Arc<ModelSpace>> {
        cached(&self.k2, || ModelSpace::build(self.inputs.theta2.clone(), self.order()))
    }

    /// Space of the tilde product of Theta1.
    pub fn kt1(&self) -> Result<&Arc<ModelSpace>> {
        cached(&self.kt1, || ModelSpace::build(self.inputs.theta1.tilde(), self.order()))
    }

    pub fn kt2(&self) -> Result<&Arc<ModelSpace>> {
        cached(&self.kt2, || ModelSpace::build(self.inputs.theta2.tilde(), self.order()))
    }

    /// Space of the J1-conjugated product.
    pub fn kj1(&self) -> Result<&Arc<ModelSpace>> {
        let (j1, _) = self.conjugations()?;
        cached(&self.kj1, || ModelSpace::build(self.inputs.theta1.conjugated(j1), self.order()))
    }

    pub fn kj2(&self) -> Result<&Arc<ModelSpace>> {
        let (_, j2) = self.conjugations()?;
        cached(&self.kj2, || ModelSpace::build(self.inputs.theta2.conjugated(j2), self.order()))
    }

    /// Space of the Crofoot transform of Theta1 by W1.
    pub fn kw1(&self) -> Result<&Arc<ModelSpace>> {
        let (w1, _) = self.crofoot()?;
        cached(&self.kw1, || {
            ModelSpace::build(
                InnerFunction::Crofoot(Box::new(CrofootTheta::new(self.inputs.theta1.clone(), w1.clone())?)),
                self.order(),
            )
        })
    }

    pub fn kw2(&self) -> Result<&Arc<ModelSpace>> {
        let (_, w2) = self.crofoot()?;
        cached(&self.kw2, || {
            ModelSpace::build(
                InnerFunction::Crofoot(Box::new(CrofootTheta::new(self.inputs.theta2.clone(), w2.clone())?)),
                self.order(),
            )
        })
    }

    fn conjugations(&self) -> Result<(&Conjugation, &Conjugation)> {
        self.inputs
            .conjugations
            .as_ref()
            .map(|(a, b)| (a, b))
            .ok_or_else(|| Error::MissingInput("conjugations J1, J2".into()))
    }

    fn crofoot(&self) -> Result<(&CrofootData, &CrofootData)> {
        self.inputs
            .crofoot
            .as_ref()
            .map(|(a, b)| (a, b))
            .ok_or_else(|| Error::MissingInput("Crofoot parameters W1, W2".into()))
    }

    /// Model conjugations on both spaces; errors unless both Thetas are J-symmetric.
    fn model_conjugations(&self) -> Result<(ModelConjugation, ModelConjugation)> {
        let (j1, j2) = self.conjugations()?;
        let c1 = ModelConjugation::new(self.k1()?, j1, HYPOTHESIS_TOL)?;
        if !c1.is_involution() {
            return Err(Error::NotJSymmetric("Theta1".into()));
        }
        let c2 = ModelConjugation::new(self.k2()?, j2, HYPOTHESIS_TOL)?;
        if !c2.is_involution() {
            return Err(Error::NotJSymmetric("Theta2".into()));
        }
        Ok((c1, c2))
    }

    fn phi(&self) -> &MatrixLaurent {
        &self.inputs.phi
    }

    fn theta1(&self) -> Result<&MatrixLaurent> {
        Ok(self.k1()?.theta_series())
    }

    fn theta2(&self) -> Result<&MatrixLaurent> {
        Ok(self.k2()?.theta_series())
    }

    /// Window used for symbols assembled from products of series.
    fn symbol_order(&self) -> usize {
        2 * self.order() + self.phi().order()
    }

    fn result(&self, name: &str, lhs: &CMat, rhs: &CMat, hypotheses_hold: bool) -> TransformResult {
        let residual = fro(&(lhs - rhs));
        let lhs_norm = fro(lhs);
        let threshold = self.inputs.threshold;
        TransformResult {
            name: name.to_string(),
            residual,
            lhs_norm,
            threshold,
            verdict: Verdict::from_bool(residual <= threshold * (1.0 + lhs_norm)),
            hypotheses_hold,
        }
    }
}

fn linear(m: &CMat) -> CoordMap {
    CoordMap::linear(m.clone())
}

fn three(outer: &CoordMap, middle: &CMat, inner: &CoordMap) -> Result<CMat> {
    outer.compose(&linear(middle)).compose(inner).into_linear()
}

fn mul(a: &MatrixLaurent, b: &MatrixLaurent) -> Result<MatrixLaurent> {
    a.mul(b)
}

/// `D_{W*} (I + Theta^W(z) W*)^{-1}` on the circle.
fn crofoot_normalizer(ct: &CrofootTheta, z: C64) -> Result<CMat> {
    let d = ct.data();
    let inv = (identity(d.dim()) + ct.evaluate(z)? * d.w().adjoint())
        .try_inverse()
        .ok_or_else(|| Error::Numerical("I + Theta^W W* is singular".into()))?;
    Ok(d.d_w_star() * inv)
}

/// `D_{W*} (I - Theta(z) W*)^{-1}` on the circle.
fn crofoot_forward_multiplier(ct: &CrofootTheta, z: C64) -> Result<CMat> {
    let d = ct.data();
    let inv = (identity(d.dim()) - ct.base().evaluate(z)? * d.w().adjoint())
        .try_inverse()
        .ok_or_else(|| Error::Numerical("I - Theta W* is singular".into()))?;
    Ok(d.d_w_star() * inv)
}

fn crofoot_of(space: &ModelSpace) -> Result<CrofootTheta> {
    match space.theta() {
        InnerFunction::Crofoot(ct) => Ok(ct.as_ref().clone()),
        InnerFunction::Product(_) => Err(Error::MissingInput("Crofoot space".into())),
    }
}

fn crofoot_entry(ctx: &TransformContext, name: &str, as_printed: bool) -> Result<TransformResult> {
    let (k1, k2, kw1, kw2) = (ctx.k1()?, ctx.k2()?, ctx.kw1()?, ctx.kw2()?);
    let f1 = crofoot_coord_map(k1, kw1)?;
    let f2 = crofoot_coord_map(k2, kw2)?;
    let b = build_matho(k1, k2, ctx.phi())?;
    let lhs = three(&f2, b.matrix(), &f1.adjoint())?;

    let (ct1, ct2) = (crofoot_of(kw1)?, crofoot_of(kw2)?);
    let phi = ctx.phi();
    let psi = fit_series(ctx.symbol_order(), |z| {
        let left = if as_printed {
            crofoot_forward_multiplier(&ct2, z)?
        } else {
            crofoot_normalizer(&ct2, z.conj())?.adjoint()
        };
        Ok(left * phi.evaluate(z)? * crofoot_normalizer(&ct1, z)?)
    })?;
    let rhs = build_matho(kw1, kw2, &psi)?;
    Ok(ctx.result(name, &lhs, rhs.matrix(), true))
}

fn tau_entry(ctx: &TransformContext) -> Result<TransformResult> {
    let (k1, k2, kt1, kt2) = (ctx.k1()?, ctx.k2()?, ctx.kt1()?, ctx.kt2()?);
    let t1 = tau_map(k1, kt1)?;
    let t2 = tau_map(k2, kt2)?;
    let b = build_matho(k1, k2, ctx.phi())?;
    let lhs = three(&t2, b.matrix(), &t1.adjoint())?;
    // Theta2~(conj z) Phi(conj z) Theta1(conj z) with Theta2~(conj z) = Theta2(z)^*.
    let psi = mul(
        &mul(&ctx.theta2()?.adjoint_star(), &ctx.phi().reflect())?,
        &ctx.theta1()?.reflect(),
    )?;
    let rhs = build_matho(kt1, kt2, &psi)?;
    Ok(ctx.result("tau", &lhs, rhs.matrix(), true))
}

fn jstar_entry(ctx: &TransformContext, name: &str, toeplitz: bool) -> Result<TransformResult> {
    let (j1, j2) = ctx.conjugations()?;
    let (k1, k2, kj1, kj2) = (ctx.k1()?, ctx.k2()?, ctx.kj1()?, ctx.kj2()?);
    let op = if toeplitz {
        build_matto(k1, k2, ctx.phi())?
    } else {
        build_matho(k1, k2, ctx.phi())?
    };
    let lhs = three(&jstar_map(j2, k2, kj2)?, op.matrix(), &jstar_map(j1, kj1, k1)?)?;
    let psi = conjugate_symbol(j2, &ctx.phi().reflect(), j1);
    let rhs = if toeplitz {
        build_matto(kj1, kj2, &psi)?
    } else {
        build_matho(kj1, kj2, &psi)?
    };
    Ok(ctx.result(name, &lhs, rhs.matrix(), true))
}

/// `C2 B C1 = B_Psi` with `Psi = J2 (Theta2~ Phi Theta1) J1`, or the printed
/// `J2 (Theta2 Phi Theta1~) J1` when `as_printed`.
fn ctheta_entry(ctx: &TransformContext, name: &str, as_printed: bool) -> Result<TransformResult> {
    let (j1, j2) = ctx.conjugations()?;
    let (c1, c2) = ctx.model_conjugations()?;
    let (k1, k2) = (ctx.k1()?, ctx.k2()?);
    let b = build_matho(k1, k2, ctx.phi())?;
    let lhs = three(&c_theta_map(&c2, k2)?, b.matrix(), &c_theta_map(&c1, k1)?)?;
    let inner = if as_printed {
        mul(&mul(ctx.theta2()?, ctx.phi())?, &ctx.theta1()?.tilde())?
    } else {
        mul(&mul(&ctx.theta2()?.tilde(), ctx.phi())?, ctx.theta1()?)?
    };
    let rhs = build_matho(k1, k2, &conjugate_symbol(j2, &inner, j1))?;
    Ok(ctx.result(name, &lhs, rhs.matrix(), true))
}

fn prop61a(ctx: &TransformContext) -> Result<TransformResult> {
    let (j1, j2) = ctx.conjugations()?;
    let (c1, c2) = ctx.model_conjugations()?;
    let (k1, k2) = (ctx.k1()?, ctx.k2()?);
    let a = build_matto(k1, k2, ctx.phi())?;
    let lhs = three(&c_theta_map(&c2, k2)?, a.matrix(), &c_theta_map(&c1, k1)?)?;
    let inner = mul(&mul(&ctx.theta2()?.adjoint_star(), ctx.phi())?, ctx.theta1()?)?;
    let rhs = build_matto(k1, k2, &conjugate_symbol(j2, &inner, j1))?;
    Ok(ctx.result("prop61a", &lhs, rhs.matrix(), true))
}

/// `C2 A_Phi J1* = B_Psi` from the conjugated Theta1 space, `Psi = J2 Theta2~ Phi(conj z) J1`.
fn prop61e(ctx: &TransformContext) -> Result<TransformResult> {
    let (j1, j2) = ctx.conjugations()?;
    let (_, c2) = ctx.model_conjugations()?;
    let (k1, k2, kj1) = (ctx.k1()?, ctx.k2()?, ctx.kj1()?);
    let a = build_matto(k1, k2, ctx.phi())?;
    let lhs = three(&c_theta_map(&c2, k2)?, a.matrix(), &jstar_map(j1, kj1, k1)?)?;
    let inner = mul(&ctx.theta2()?.tilde(), &ctx.phi().reflect())?;
    let rhs = build_matho(kj1, k2, &conjugate_symbol(j2, &inner, j1))?;
    Ok(ctx.result("prop61e", &lhs, rhs.matrix(), true))
}

/// `J2* B_Phi C1 = A_Psi` into the conjugated Theta2 space, `Psi = J2 Phi Theta1 J1`.
fn prop61f(ctx: &TransformContext) -> Result<TransformResult> {
    let (j1, j2) = ctx.conjugations()?;
    let (c1, _) = ctx.model_conjugations()?;
    let (k1, k2, kj2) = (ctx.k1()?, ctx.k2()?, ctx.kj2()?);
    let b = build_matho(k1, k2, ctx.phi())?;
    let lhs = three(&jstar_map(j2, k2, kj2)?, b.matrix(), &c_theta_map(&c1, k1)?)?;
    let inner = mul(ctx.phi(), ctx.theta1()?)?;
    let rhs = build_matto(k1, kj2, &conjugate_symbol(j2, &inner, j1))?;
    Ok(ctx.result("prop61f", &lhs, rhs.matrix(), true))
}

/// `tau S tau^* = S_{Theta~}^*`.
fn eq_sz(ctx: &TransformContext) -> Result<TransformResult> {
    let (k1, kt1) = (ctx.k1()?, ctx.kt1()?);
    let t = tau_map(k1, kt1)?;
    let lhs = t.matrix() * k1.shift() * t.matrix().adjoint();
    Ok(ctx.result("eq_sz", &lhs, kt1.shift_adj(), true))
}

/// `D~_Theta = tau_{Theta~} D_{Theta~} tau_{Theta~}^*`.
fn eq_ddd(ctx: &TransformContext) -> Result<TransformResult> {
    let (k1, kt1) = (ctx.k1()?, ctx.kt1()?);
    let t = tau_map(kt1, k1)?;
    let rhs = t.matrix() * kt1.defect() * t.matrix().adjoint();
    Ok(ctx.result("eq_ddd", k1.defect_tilde(), &rhs, true))
}

/// True when `Phi` is J1-symmetric (`J1 Phi(z) J1 = Phi(z)^*`) and commutes with
/// Theta1, both within [`HYPOTHESIS_TOL`] relative to `|Phi|`.
fn remark412_hypotheses(ctx: &TransformContext) -> Result<bool> {
    let (j1, _) = ctx.conjugations()?;
    let phi = ctx.phi();
    let scale = 1.0 + phi.norm();
    let symmetric = conjugate_symbol(j1, phi, j1).sub(&phi.adjoint_star())?.norm() <= HYPOTHESIS_TOL * scale;
    let theta = ctx.theta1()?;
    let commutator = mul(theta, phi)?.sub(&mul(phi, theta)?)?;
    Ok(symmetric && commutator.norm() <= HYPOTHESIS_TOL * scale)
}

/// `C1 A_Phi C1 = A_{Phi^*}` on one space. The residual is reported whether or not the
/// hypotheses hold.
fn remark412(ctx: &TransformContext) -> Result<TransformResult> {
    let (c1, _) = ctx.model_conjugations()?;
    let k1 = ctx.k1()?;
    let c = c_theta_map(&c1, k1)?;
    let a = build_matto(k1, k1, ctx.phi())?;
    let lhs = three(&c, a.matrix(), &c)?;
    let rhs = build_matto(k1, k1, &ctx.phi().adjoint_star())?;
    Ok(ctx.result("remark412", &lhs, rhs.matrix(), remark412_hypotheses(ctx)?))
}

/// Evaluate one registry or diagnostic entry by name.
pub fn verify_transform(name: &str, ctx: &TransformContext) -> Result<TransformResult> {
    match name {
        "crofoot" => crofoot_entry(ctx, name, false),
        "tau" => tau_entry(ctx),
        "jstar" | "prop61d" => jstar_entry(ctx, name, false),
        "prop61c" => jstar_entry(ctx, name, true),
        "ctheta" | "prop61b" => ctheta_entry(ctx, name, false),
        "prop61a" => prop61a(ctx),
        "prop61e" => prop61e(ctx),
        "prop61f" => prop61f(ctx),
        "eq_sz" => eq_sz(ctx),
        "eq_ddd" => eq_ddd(ctx),
        "remark412" => remark412(ctx),
        "crofoot_as_printed" => crofoot_entry(ctx, name, true),
        "ctheta_as_printed" => ctheta_entry(ctx, name, true),
        other => Err(Error::UnknownKind(other.to_string())),
    }
}

/// Every registry entry. Entries whose inputs are absent, whose Thetas are not
/// J-symmetric, or (for `remark412`) whose symbol hypotheses fail are skipped with a
/// reason; other errors propagate.
pub fn verify_all(ctx: &TransformContext) -> Result<Vec<RegistryOutcome>> {
    let mut out = Vec::with_capacity(REGISTRY.len());
    for name in REGISTRY {
        let skipped = |reason: String| RegistryOutcome::Skipped {
            name: name.to_string(),
            reason,
        };
        match verify_transform(name, ctx) {
            Ok(r) if !r.hypotheses_hold => {
                out.push(skipped("symbol is not J-symmetric or does not commute with Theta1".into()))
            }
            Ok(r) => out.push(RegistryOutcome::Checked(r)),
            Err(e @ (Error::MissingInput(_) | Error::NotJSymmetric(_))) => out.push(skipped(e.to_string())),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
