//! Membership tests through displacement equations and shift invariance.
//!
//! Each displacement characterization says an operator lies in the class iff a
//! displacement `X` splits as `B1 P + Q B2` through a pair of defect spaces. Because the
//! defect operators are invertible on their defect spaces, that holds iff
//! `(I - P_left) X (I - P_right) = 0`, and the Frobenius norm of that product is the
//! residual.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::ModelOperator;
use crate::error::{Error, Result};
use crate::linalg::{complement_basis, fro, identity, max_abs, CMat};
use crate::model_space::ModelSpace;

/// Default relative acceptance threshold.
pub const DEFAULT_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Accept
        } else {
            Verdict::Reject
        }
    }

    pub fn is_accept(self) -> bool {
        self == Verdict::Accept
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Accept => "accept",
            Verdict::Reject => "reject",
        })
    }
}

/// Result of one membership test. `verdict` is accept iff
/// `residual <= threshold * (1 + displacement_norm)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipReport {
    pub kind: String,
    pub displacement_norm: f64,
    pub residual: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

impl MembershipReport {
    fn new(kind: String, displacement_norm: f64, residual: f64, threshold: f64) -> Self {
        let verdict = Verdict::from_bool(residual <= threshold * (1.0 + displacement_norm));
        MembershipReport {
            kind,
            displacement_norm,
            residual,
            threshold,
            verdict,
        }
    }
}

/// The displacement characterizations. `MT` and `MHa..MHd` use the modified compressed
/// shifts in place of the plain ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DisplacementKind {
    T1,
    T2,
    T3,
    T4,
    H1,
    H2,
    H3,
    H4,
    MT,
    MHa,
    MHb,
    MHc,
    MHd,
}

impl DisplacementKind {
    pub const ALL: [DisplacementKind; 13] = [
        Self::T1,
        Self::T2,
        Self::T3,
        Self::T4,
        Self::H1,
        Self::H2,
        Self::H3,
        Self::H4,
        Self::MT,
        Self::MHa,
        Self::MHb,
        Self::MHc,
        Self::MHd,
    ];
    pub const TOEPLITZ: [DisplacementKind; 4] = [Self::T1, Self::T2, Self::T3, Self::T4];
    pub const HANKEL: [DisplacementKind; 4] = [Self::H1, Self::H2, Self::H3, Self::H4];
    pub const MODIFIED_HANKEL: [DisplacementKind; 4] = [Self::MHa, Self::MHb, Self::MHc, Self::MHd];

    pub fn name(self) -> &'static str {
        match self {
            Self::T1 => "T1",
            Self::T2 => "T2",
            Self::T3 => "T3",
            Self::T4 => "T4",
            Self::H1 => "H1",
            Self::H2 => "H2",
            Self::H3 => "H3",
            Self::H4 => "H4",
            Self::MT => "MT",
            Self::MHa => "MH-a",
            Self::MHb => "MH-b",
            Self::MHc => "MH-c",
            Self::MHd => "MH-d",
        }
    }

    pub fn is_modified(self) -> bool {
        matches!(self, Self::MT | Self::MHa | Self::MHb | Self::MHc | Self::MHd)
    }

    /// The plain kind whose displacement and defect pair this kind uses.
    fn base(self) -> Self {
        match self {
            Self::MT => Self::T1,
            Self::MHa => Self::H1,
            Self::MHb => Self::H2,
            Self::MHc => Self::H3,
            Self::MHd => Self::H4,
            k => k,
        }
    }

    pub fn is_hankel(self) -> bool {
        matches!(
            self.base(),
            Self::H1 | Self::H2 | Self::H3 | Self::H4
        )
    }
}

impl FromStr for DisplacementKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| *c != '-' && *c != '_').collect::<String>().to_ascii_uppercase();
        Self::ALL
            .into_iter()
            .find(|k| k.name().replace('-', "").to_ascii_uppercase() == key)
            .ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}

impl fmt::Display for DisplacementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which defect space of a model space a projection refers to.
#[derive(Clone, Copy)]
enum Defect {
    Plain,
    Tilde,
}

fn complement_projector(space: &ModelSpace, which: Defect) -> CMat {
    let p = match which {
        Defect::Plain => space.p_defect(),
        Defect::Tilde => space.p_defect_tilde(),
    };
    identity(space.dim_k()) - p
}

fn complement_frame(space: &ModelSpace, which: Defect) -> CMat {
    match which {
        Defect::Plain => complement_basis(space.defect_frame()),
        Defect::Tilde => complement_basis(space.defect_tilde_frame()),
    }
}

/// Modifier maps `X_Theta1`, `X_Theta2` (coordinate matrices from the tilde defect
/// space into the defect space) for the modified-shift kinds.
#[derive(Clone, Debug)]
pub struct Modifiers {
    pub x1: CMat,
    pub x2: CMat,
}

impl Modifiers {
    pub fn zero(op: &ModelOperator) -> Self {
        let n1 = op.domain().dim_k();
        let n2 = op.codomain().dim_k();
        Modifiers {
            x1: CMat::zeros(n1, n1),
            x2: CMat::zeros(n2, n2),
        }
    }
}

/// The displacement `X` of `kind` and its (right, left) defect pair.
pub fn displacement(
    op: &ModelOperator,
    kind: DisplacementKind,
    modifiers: Option<&Modifiers>,
    tol: f64,
) -> Result<CMat> {
    let (s1, s2) = shifts(op, kind, modifiers, tol)?;
    Ok(raw_displacement(op.matrix(), kind.base(), &s1, &s2))
}

fn shifts(
    op: &ModelOperator,
    kind: DisplacementKind,
    modifiers: Option<&Modifiers>,
    tol: f64,
) -> Result<(CMat, CMat)> {
    let (d1, d2) = (op.domain(), op.codomain());
    if kind.is_modified() {
        let m = modifiers.ok_or_else(|| {
            Error::MissingInput(format!("{kind} needs modifier maps X_Theta1 and X_Theta2"))
        })?;
        Ok((
            d1.modified_shift(&m.x1, tol).map_err(|e| e.within("modifiers.x1"))?,
            d2.modified_shift(&m.x2, tol).map_err(|e| e.within("modifiers.x2"))?,
        ))
    } else {
        Ok((d1.shift().clone(), d2.shift().clone()))
    }
}

fn raw_displacement(a: &CMat, base: DisplacementKind, s1: &CMat, s2: &CMat) -> CMat {
    use DisplacementKind::*;
    let s1a = s1.adjoint();
    let s2a = s2.adjoint();
    match base {
        T1 => a - s2 * a * &s1a,
        T2 => a - &s2a * a * s1,
        T3 => &s2a * a - a * &s1a,
        T4 => s2 * a - a * s1,
        H1 => a - s2 * a * s1,
        H2 => &s2a * a - a * s1,
        H3 => a - &s2a * a * &s1a,
        H4 => s2 * a - a * &s1a,
        _ => unreachable!("modified kinds are mapped to their base"),
    }
}

/// (defect on the domain side, defect on the codomain side).
fn defect_pair(base: DisplacementKind) -> (Defect, Defect) {
    use Defect::*;
    use DisplacementKind::*;
    match base {
        T1 => (Plain, Plain),
        T2 => (Tilde, Tilde),
        T3 => (Plain, Tilde),
        T4 => (Tilde, Plain),
        H1 => (Tilde, Plain),
        H2 => (Tilde, Tilde),
        H3 => (Plain, Tilde),
        H4 => (Plain, Plain),
        _ => unreachable!("modified kinds are mapped to their base"),
    }
}

/// Residual `|(I - P_left) X (I - P_right)|_F` of the displacement of `kind`.
pub fn displacement_check(
    op: &ModelOperator,
    kind: DisplacementKind,
    modifiers: Option<&Modifiers>,
    threshold: f64,
) -> Result<MembershipReport> {
    let x = displacement(op, kind, modifiers, threshold)?;
    let (right, left) = defect_pair(kind.base());
    let projected = complement_projector(op.codomain(), left) * &x * complement_projector(op.domain(), right);
    Ok(MembershipReport::new(
        kind.name().to_string(),
        fro(&x),
        fro(&projected),
        threshold,
    ))
}

/// Shift-invariance predicates, `a` to `d` for each family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ShiftInvarianceKind {
    pub family: super::Family,
    pub letter: char,
}

impl ShiftInvarianceKind {
    pub fn all(family: super::Family) -> [ShiftInvarianceKind; 4] {
        ['a', 'b', 'c', 'd'].map(|letter| ShiftInvarianceKind { family, letter })
    }

    pub fn name(&self) -> String {
        format!("{}-{}", self.family, self.letter)
    }

    /// The displacement kind whose expression the predicate evaluates on the
    /// orthocomplements of the same defect pair.
    fn displacement(&self) -> Result<DisplacementKind> {
        use super::Family::*;
        use DisplacementKind::*;
        Ok(match (self.family, self.letter) {
            (Toeplitz, 'a') => T1,
            (Toeplitz, 'b') => T3,
            (Toeplitz, 'c') => T2,
            (Toeplitz, 'd') => T4,
            (Hankel, 'a') => H1,
            (Hankel, 'b') => H2,
            (Hankel, 'c') => H3,
            (Hankel, 'd') => H4,
            _ => return Err(Error::UnknownKind(self.name())),
        })
    }
}

impl FromStr for ShiftInvarianceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (fam, letter) = s
            .rsplit_once(['-', '(', '_'])
            .ok_or_else(|| Error::UnknownKind(s.to_string()))?;
        let letter = letter.trim_end_matches(')');
        let family: super::Family = fam.parse()?;
        let mut chars = letter.chars();
        match (chars.next(), chars.next()) {
            (Some(l @ 'a'..='d'), None) => Ok(ShiftInvarianceKind { family, letter: l }),
            _ => Err(Error::UnknownKind(s.to_string())),
        }
    }
}

/// Evaluate the bilinear identity of `kind` on orthonormal bases of the admissible
/// vectors. For example hankel-a requires `<B S f, S^* g> = <B f, g>` for `f` orthogonal
/// to the tilde defect space of the domain and `g` orthogonal to the defect space of
/// the codomain. The residual is the largest deviation over basis pairs; the reported
/// displacement norm is the Frobenius norm of the unprojected expression.
pub fn shift_invariance_check(
    op: &ModelOperator,
    kind: ShiftInvarianceKind,
    threshold: f64,
) -> Result<MembershipReport> {
    let base = kind.displacement()?;
    let x = raw_displacement(op.matrix(), base, op.domain().shift(), op.codomain().shift());
    let (right, left) = defect_pair(base);
    let qf = complement_frame(op.domain(), right);
    let qg = complement_frame(op.codomain(), left);
    let deviations = qg.adjoint() * &x * qf;
    Ok(MembershipReport::new(
        kind.name(),
        fro(&x),
        max_abs(&deviations),
        threshold,
    ))
}
