//! Truncated Toeplitz and Hankel operators between model spaces.
//!
//! With orthonormal bases `b_j` of `K_Theta1` and `b'_i` of `K_Theta2`, the matrices are
//! `A_ij = <Phi b_j, b'_i>` and `B_ij = <flip(Phi b_j), b'_i>`. The projections in the
//! definitions drop out because the `b'_i` already lie in the target space and the
//! flip of the analytic part of `Phi b_j` is orthogonal to `H2`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::laurent::{matrix_to_json, ComplexJson, MatrixLaurent};
use crate::linalg::CMat;
use crate::model_space::ModelSpace;

mod kernel;
mod membership;
mod recovery;
mod registry;

pub use kernel::{kernel_generators, kernel_test, KernelClass, KernelVerdict, ZERO_OPERATOR_TOL};
pub use membership::{
    displacement, displacement_check, shift_invariance_check, DisplacementKind, MembershipReport, Modifiers,
    ShiftInvarianceKind, Verdict, DEFAULT_THRESHOLD,
};
pub use recovery::{recover_symbol, toeplitz_symbol, Recovery};
pub use registry::{
    verify_all, verify_transform, RegistryOutcome, TransformContext, TransformInputs, TransformResult, DIAGNOSTICS,
    REGISTRY,
};

/// Toeplitz (MATTO) or Hankel (MATHO).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Toeplitz,
    Hankel,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "toeplitz" | "matto" => Ok(Family::Toeplitz),
            "hankel" | "matho" => Ok(Family::Hankel),
            _ => Err(Error::UnknownKind(s.to_string())),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Toeplitz => "toeplitz",
            Family::Hankel => "hankel",
        })
    }
}

impl Serialize for Family {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A matrix from `K_Theta1` (domain) to `K_Theta2` (codomain) in the spaces' bases.
#[derive(Clone, Debug)]
pub struct ModelOperator {
    domain: Arc<ModelSpace>,
    codomain: Arc<ModelSpace>,
    matrix: CMat,
}

impl ModelOperator {
    pub fn new(domain: Arc<ModelSpace>, codomain: Arc<ModelSpace>, matrix: CMat) -> Result<Self> {
        if matrix.shape() != (codomain.dim_k(), domain.dim_k()) {
            return Err(Error::DimensionMismatch(format!(
                "operator matrix is {}x{}, spaces need {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                codomain.dim_k(),
                domain.dim_k()
            )));
        }
        if domain.dim() != codomain.dim() {
            return Err(Error::DimensionMismatch(
                "domain and codomain use different coefficient dimensions".into(),
            ));
        }
        Ok(ModelOperator {
            domain,
            codomain,
            matrix,
        })
    }

    pub fn domain(&self) -> &Arc<ModelSpace> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<ModelSpace> {
        &self.codomain
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// Same spaces, different matrix.
    pub fn with_matrix(&self, matrix: CMat) -> Result<Self> {
        Self::new(self.domain.clone(), self.codomain.clone(), matrix)
    }

    pub fn matrix_json(&self) -> Vec<Vec<ComplexJson>> {
        matrix_to_json(&self.matrix)
    }
}

fn check_symbol(space1: &ModelSpace, space2: &ModelSpace, phi: &MatrixLaurent) -> Result<()> {
    if phi.dim() != space1.dim() || phi.dim() != space2.dim() {
        return Err(Error::DimensionMismatch(format!(
            "symbol acts on C^{}, spaces on C^{} and C^{}",
            phi.dim(),
            space1.dim(),
            space2.dim()
        )));
    }
    Ok(())
}

/// `A_Phi f = P_Theta2 (Phi f)`.
pub fn build_matto(
    space1: &Arc<ModelSpace>,
    space2: &Arc<ModelSpace>,
    phi: &MatrixLaurent,
) -> Result<ModelOperator> {
    check_symbol(space1, space2, phi)?;
    let mut m = CMat::zeros(space2.dim_k(), space1.dim_k());
    for (j, b) in space1.basis().iter().enumerate() {
        m.set_column(j, &space2.coordinates(&phi.mul(b)?)?);
    }
    ModelOperator::new(space1.clone(), space2.clone(), m)
}

/// `B_Phi f = P_Theta2 flip (I - P+) (Phi f)`.
pub fn build_matho(
    space1: &Arc<ModelSpace>,
    space2: &Arc<ModelSpace>,
    phi: &MatrixLaurent,
) -> Result<ModelOperator> {
    check_symbol(space1, space2, phi)?;
    let mut m = CMat::zeros(space2.dim_k(), space1.dim_k());
    for (j, b) in space1.basis().iter().enumerate() {
        let g = phi.mul(b)?.coanalytic_part().flip();
        m.set_column(j, &space2.coordinates(&g)?);
    }
    ModelOperator::new(space1.clone(), space2.clone(), m)
}

/// Dispatch on the family.
pub fn build(
    family: Family,
    space1: &Arc<ModelSpace>,
    space2: &Arc<ModelSpace>,
    phi: &MatrixLaurent,
) -> Result<ModelOperator> {
    match family {
        Family::Toeplitz => build_matto(space1, space2, phi),
        Family::Hankel => build_matho(space1, space2, phi),
    }
}
