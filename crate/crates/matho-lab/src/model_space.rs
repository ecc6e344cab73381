//! Model spaces `K_Theta = H2 minus Theta H2` with an orthonormal basis and the
//! compressed shift, defect operators and defect projections in basis coordinates.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inner::{BlaschkePotapovProduct, InnerFunction};
use crate::laurent::{matrix_to_json, ComplexJson, MatrixLaurent, VectorLaurent};
use crate::linalg::{fro, identity, pinv, range_basis, CMat, C64, RANK_TOL};

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 64;
/// Tolerance for inner and purity checks when a space is built.
pub const BUILD_TOL: f64 = 1e-8;

/// Which reproducing kernel to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelVariant {
    /// `k_lambda x = (1 - conj(lambda) z)^{-1} (I - Theta(z) Theta(lambda)^*) x`.
    K,
    /// `k~_lambda x = (z - lambda)^{-1} (Theta(z) - Theta(lambda)) x`.
    KTilde,
}

/// A model space with cached compressed shift and defect data.
#[derive(Clone, Debug)]
pub struct ModelSpace {
    theta: InnerFunction,
    theta_series: MatrixLaurent,
    order: usize,
    basis: Vec<VectorLaurent>,
    shift: CMat,
    shift_adj: CMat,
    defect: CMat,
    defect_tilde: CMat,
    defect_frame: CMat,
    defect_tilde_frame: CMat,
    /// Row `i` is `b_i(0)^*`, so `E x` are the coordinates of `k_0 x`.
    eval_at_zero: CMat,
}

/// The shift and defect matrices of a space.
#[derive(Clone, Debug)]
pub struct ShiftDefects {
    pub s: CMat,
    pub s_star: CMat,
    pub d: CMat,
    pub d_tilde: CMat,
    pub p_d: CMat,
    pub p_d_tilde: CMat,
}

impl ModelSpace {
    /// Build `K_Theta` with truncation order `order`.
    ///
    /// For products the basis is factor-major: for factor `i` with zero `a` and frame
    /// columns `v`, the vectors `L F_1 ... F_{i-1} sqrt(1 - |a|^2) / (1 - conj(a) z) v`.
    /// For Crofoot transforms the basis is an orthonormalization of the projections of
    /// `z^k e_l`, `k < dim K`, which span the space.
    pub fn build(theta: impl Into<InnerFunction>, order: usize) -> Result<Self> {
        let theta = theta.into();
        let report = theta.validate(None, BUILD_TOL)?;
        if !report.inner {
            return Err(Error::Numerical(format!(
                "Theta is not inner on the circle (defect {:.3e})",
                report.unitarity_defect
            )));
        }
        if !report.pure {
            return Err(Error::NotPure(report.norm_at_zero));
        }
        if let Some(p) = theta.as_product() {
            if p.is_polynomial() && order < p.factors().len() {
                return Err(Error::WindowTooSmall(format!(
                    "order {order} is below the polynomial degree {}",
                    p.factors().len()
                )));
            }
        }
        let theta_series = theta.series(order)?;
        let basis = match &theta {
            InnerFunction::Product(p) => product_basis(p, order),
            InnerFunction::Crofoot(_) => spanning_basis(&theta, &theta_series, order)?,
        };
        Self::assemble(theta, theta_series, order, basis)
    }

    fn assemble(
        theta: InnerFunction,
        theta_series: MatrixLaurent,
        order: usize,
        basis: Vec<VectorLaurent>,
    ) -> Result<Self> {
        let n = basis.len();
        let d = theta.dim();
        let mut shift = CMat::zeros(n, n);
        for (j, bj) in basis.iter().enumerate() {
            let zb = bj.shift(1);
            for (i, bi) in basis.iter().enumerate() {
                shift[(i, j)] = zb.inner_product(bi)?;
            }
        }
        let shift_adj = shift.adjoint();
        let defect = identity(n) - &shift * &shift_adj;
        let defect_tilde = identity(n) - &shift_adj * &shift;

        let mut eval_at_zero = CMat::zeros(n, d);
        for (i, b) in basis.iter().enumerate() {
            let v = b.coeff(0);
            for l in 0..d {
                eval_at_zero[(i, l)] = v[(l, 0)].conj();
            }
        }
        let mut space = ModelSpace {
            theta,
            theta_series,
            order,
            basis,
            shift,
            shift_adj,
            defect,
            defect_tilde,
            defect_frame: CMat::zeros(n, 0),
            defect_tilde_frame: CMat::zeros(n, 0),
            eval_at_zero,
        };
        space.defect_frame = range_basis(&space.eval_at_zero, RANK_TOL);
        let mut tilde_coords = CMat::zeros(n, d);
        for l in 0..d {
            let mut x = vec![C64::new(0.0, 0.0); d];
            x[l] = C64::new(1.0, 0.0);
            let k = space.kernel(C64::new(0.0, 0.0), KernelVariant::KTilde, &x)?;
            tilde_coords.set_column(l, &space.coordinates(&k)?);
        }
        space.defect_tilde_frame = range_basis(&tilde_coords, RANK_TOL);
        Ok(space)
    }

    pub fn theta(&self) -> &InnerFunction {
        &self.theta
    }

    /// Series of Theta truncated at the space's order.
    pub fn theta_series(&self) -> &MatrixLaurent {
        &self.theta_series
    }

    /// Coefficient dimension `d`.
    pub fn dim(&self) -> usize {
        self.theta.dim()
    }

    pub fn dim_k(&self) -> usize {
        self.basis.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn basis(&self) -> &[VectorLaurent] {
        &self.basis
    }

    pub fn shift(&self) -> &CMat {
        &self.shift
    }

    pub fn shift_adj(&self) -> &CMat {
        &self.shift_adj
    }

    /// `D = I - S S^*`.
    pub fn defect(&self) -> &CMat {
        &self.defect
    }

    /// `D~ = I - S^* S`.
    pub fn defect_tilde(&self) -> &CMat {
        &self.defect_tilde
    }

    /// Orthonormal coordinates spanning the defect space (the span of `k_0 x`).
    pub fn defect_frame(&self) -> &CMat {
        &self.defect_frame
    }

    /// Orthonormal coordinates spanning the tilde defect space (the span of `k~_0 x`).
    pub fn defect_tilde_frame(&self) -> &CMat {
        &self.defect_tilde_frame
    }

    pub fn p_defect(&self) -> CMat {
        &self.defect_frame * self.defect_frame.adjoint()
    }

    pub fn p_defect_tilde(&self) -> CMat {
        &self.defect_tilde_frame * self.defect_tilde_frame.adjoint()
    }

    pub fn shift_and_defects(&self) -> ShiftDefects {
        ShiftDefects {
            s: self.shift.clone(),
            s_star: self.shift_adj.clone(),
            d: self.defect.clone(),
            d_tilde: self.defect_tilde.clone(),
            p_d: self.p_defect(),
            p_d_tilde: self.p_defect_tilde(),
        }
    }

    /// Coordinates of `k_0 x` are `E x`; the rows of `E` are `b_i(0)^*`.
    pub fn eval_at_zero(&self) -> &CMat {
        &self.eval_at_zero
    }

    /// `<f, b_i>` for every basis vector.
    pub fn coordinates(&self, f: &VectorLaurent) -> Result<DVector<C64>> {
        let mut out = DVector::zeros(self.basis.len());
        for (i, b) in self.basis.iter().enumerate() {
            out[i] = f.inner_product(b)?;
        }
        Ok(out)
    }

    /// `sum_i c_i b_i`.
    pub fn function(&self, coords: &[C64]) -> VectorLaurent {
        assert_eq!(coords.len(), self.basis.len(), "coordinate length");
        let mut out = VectorLaurent::zeros(self.dim(), self.order);
        for (c, b) in coords.iter().zip(&self.basis) {
            out = out.add(&b.scale(*c)).expect("same dimension");
        }
        out
    }

    /// Matrix whose columns are the basis values at `lambda` in the closed disc.
    pub fn basis_values(&self, lambda: C64) -> Result<CMat> {
        let mut out = CMat::zeros(self.dim(), self.basis.len());
        for (i, b) in self.basis.iter().enumerate() {
            out.set_column(i, &b.evaluate_analytic(lambda)?.column(0));
        }
        Ok(out)
    }

    /// `P_Theta f = P+ f - Theta P+ (Theta^* P+ f)`, truncated to the space's order.
    pub fn project(&self, f: &VectorLaurent) -> Result<VectorLaurent> {
        let fa = f.analytic_part();
        let inner = self.theta_series.adjoint_star().mul(&fa)?.analytic_part();
        let back = self.theta_series.mul(&inner)?;
        Ok(fa.sub(&back)?.truncate(self.order.max(f.order())))
    }

    /// Reproducing kernel at `lambda` applied to `x`.
    pub fn kernel(&self, lambda: C64, variant: KernelVariant, x: &[C64]) -> Result<VectorLaurent> {
        if lambda.norm() >= 1.0 {
            return Err(Error::OutsideDisc(lambda));
        }
        let d = self.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch(format!("x has length {}, expected {d}", x.len())));
        }
        let xv = CMat::from_column_slice(d, 1, x);
        let t_lambda = self.theta.evaluate(lambda)?;
        let m = self.order;
        match variant {
            KernelVariant::K => {
                // (I - Theta(z) Theta(lambda)^*) x, then times the Szego kernel.
                let y = t_lambda.adjoint() * &xv;
                let g = VectorLaurent::monomial(0, xv, m).sub(&self.theta_series.mul(&VectorLaurent::monomial(0, y, m))?)?;
                let lb = lambda.conj();
                let mut s = MatrixLaurent::zeros(1, m);
                let mut p = C64::new(1.0, 0.0);
                for n in 0..=m as i64 {
                    s.coeff_mut(n)[(0, 0)] = p;
                    p *= lb;
                }
                let r = lambda.norm();
                let s_tail = if r == 0.0 { 0.0 } else { r.powi(m as i32 + 1) / (1.0 - r) };
                let s = s.with_tail_bound(s_tail);
                let mut out = VectorLaurent::zeros(d, g.order() + m);
                for (n, gn) in g.iter() {
                    for k in 0..=m as i64 {
                        *out.coeff_mut(n + k) += gn * s.coeff(k)[(0, 0)];
                    }
                }
                let tail = g.l1_norm() * s_tail + g.tail_bound() * (s.l1_norm() + s_tail);
                Ok(out.with_tail_bound(tail).truncate(m))
            }
            KernelVariant::KTilde => {
                // g = (Theta(z) - Theta(lambda)) x vanishes at lambda; divide by (z - lambda)
                // with h_{n-1} = g_n + lambda h_n.
                let g = self
                    .theta_series
                    .mul(&VectorLaurent::monomial(0, xv.clone(), 0))?
                    .sub(&VectorLaurent::monomial(0, &t_lambda * &xv, 0))?;
                let top = g.order() as i64;
                let mut out = VectorLaurent::zeros(d, m);
                let mut h = CMat::zeros(d, 1);
                for n in (1..=top).rev() {
                    h = g.coeff(n) + &h * lambda;
                    if n - 1 <= m as i64 {
                        *out.coeff_mut(n - 1) = h.clone();
                    }
                }
                let r = lambda.norm();
                Ok(out.with_tail_bound(g.tail_bound() / (1.0 - r)))
            }
        }
    }

    /// `Omega` (with `Omega k_0 x = x`, zero on the orthocomplement of the defect space)
    /// and `J_Theta` (with `P_D = D J = J^* D`).
    pub fn omega_and_jtheta(&self) -> Result<(CMat, CMat)> {
        let omega = pinv(&self.eval_at_zero, RANK_TOL);
        let q = &self.defect_frame;
        let restricted = q.adjoint() * &self.defect * q;
        let inv = restricted
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("D is singular on the defect space".into()))?;
        let j = q * inv * q.adjoint();
        let p = self.p_defect();
        let scale = 1.0 + fro(&j);
        let r1 = fro(&(&self.defect * &j - &p));
        let r2 = fro(&(j.adjoint() * &self.defect - &p));
        let r3 = fro(&(&omega * &self.eval_at_zero - identity(self.dim())));
        if r1.max(r2) > 1e-8 * scale || r3 > 1e-8 {
            return Err(Error::Numerical(format!(
                "defect identities fail (DJ {r1:.2e}, J*D {r2:.2e}, Omega {r3:.2e})"
            )));
        }
        Ok((omega, j))
    }

    /// `S + P_D (X P_D~ - S) P_D~` for a coordinate matrix `X` from the tilde defect
    /// space into the defect space.
    pub fn modified_shift(&self, x: &CMat, tol: f64) -> Result<CMat> {
        let n = self.dim_k();
        if x.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!("X must be {n}x{n}")));
        }
        let p_d = self.p_defect();
        let p_dt = self.p_defect_tilde();
        let outside = fro(&((identity(n) - &p_d) * x * &p_dt));
        if outside > tol * (1.0 + fro(x)) {
            return Err(Error::invalid(
                "X",
                format!("range leaves the defect space by {outside:.3e}"),
            ));
        }
        let x_hat = x * &p_dt;
        Ok(&self.shift + &p_d * (x_hat - &self.shift) * &p_dt)
    }

    /// Summary for reports.
    pub fn describe(&self) -> SpaceDescription {
        let coeffs = self
            .basis
            .iter()
            .map(|b| {
                b.iter()
                    .filter(|(_, c)| c.iter().any(|z| z.norm() > 1e-15))
                    .map(|(n, c)| (n, c.iter().map(|&z| z.into()).collect()))
                    .collect()
            })
            .collect();
        SpaceDescription {
            dim: self.dim(),
            dim_k: self.dim_k(),
            trunc_order: self.order,
            defect_rank: self.defect_frame.ncols(),
            defect_tilde_rank: self.defect_tilde_frame.ncols(),
            basis: coeffs,
            shift: matrix_to_json(&self.shift),
            defect: matrix_to_json(&self.defect),
            defect_tilde: matrix_to_json(&self.defect_tilde),
        }
    }
}

/// Serializable description of a space.
#[derive(Clone, Debug, Serialize)]
pub struct SpaceDescription {
    pub dim: usize,
    pub dim_k: usize,
    pub trunc_order: usize,
    pub defect_rank: usize,
    pub defect_tilde_rank: usize,
    /// Nonzero coefficients of each basis vector, as `(index, vector)` pairs.
    pub basis: Vec<Vec<(i64, Vec<ComplexJson>)>>,
    pub shift: Vec<Vec<ComplexJson>>,
    pub defect: Vec<Vec<ComplexJson>>,
    pub defect_tilde: Vec<Vec<ComplexJson>>,
}

fn product_basis(p: &BlaschkePotapovProduct, order: usize) -> Vec<VectorLaurent> {
    let d = p.dim();
    let mut prefix = MatrixLaurent::identity(d, order).left_mul_const(p.left_unitary());
    let mut basis = Vec::with_capacity(p.degree());
    for f in p.factors() {
        let a = f.a();
        let norm = (1.0 - a.norm_sqr()).sqrt();
        // sqrt(1 - |a|^2) / (1 - conj(a) z) = sqrt(1 - |a|^2) sum conj(a)^n z^n
        let mut k = MatrixLaurent::zeros(1, order);
        let mut pw = C64::new(norm, 0.0);
        for n in 0..=order as i64 {
            k.coeff_mut(n)[(0, 0)] = pw;
            pw *= a.conj();
        }
        let r = a.norm();
        let k_tail = if r == 0.0 { 0.0 } else { norm * r.powi(order as i32 + 1) / (1.0 - r) };
        for col in 0..f.rank() {
            let v = f.frame().column(col).into_owned();
            let mut g = VectorLaurent::zeros(d, order);
            for n in 0..=order as i64 {
                *g.coeff_mut(n) = CMat::from_column_slice(d, 1, v.as_slice()) * k.coeff(n)[(0, 0)];
            }
            let g = g.with_tail_bound(k_tail);
            basis.push(prefix.mul(&g).expect("dimensions agree").truncate(order));
        }
        prefix = prefix.mul(&f.series(order)).expect("dimensions agree").truncate(order);
    }
    basis
}

fn spanning_basis(theta: &InnerFunction, series: &MatrixLaurent, order: usize) -> Result<Vec<VectorLaurent>> {
    let d = theta.dim();
    let n = theta.degree();
    if n > order {
        return Err(Error::WindowTooSmall(format!(
            "order {order} cannot hold a spanning set for dimension {n}"
        )));
    }
    let mut funcs = Vec::with_capacity(n * d);
    for k in 0..n as i64 {
        for l in 0..d {
            let mut x = vec![C64::new(0.0, 0.0); d];
            x[l] = C64::new(1.0, 0.0);
            let e = VectorLaurent::vector_monomial(k, &x, order);
            let fa = e.analytic_part();
            let inner = series.adjoint_star().mul(&fa)?.analytic_part();
            let back = series.mul(&inner)?;
            funcs.push(fa.sub(&back)?.truncate(order));
        }
    }
    let len = (2 * order + 1) * d;
    let mut mat = CMat::zeros(len, funcs.len());
    for (j, f) in funcs.iter().enumerate() {
        for (slot, (_, c)) in f.iter().enumerate() {
            for l in 0..d {
                mat[(slot * d + l, j)] = c[(l, 0)];
            }
        }
    }
    let q = range_basis(&mat, 1e-8);
    if q.ncols() != n {
        return Err(Error::Numerical(format!(
            "spanning set has rank {}, expected {n}",
            q.ncols()
        )));
    }
    let tail = funcs.iter().map(|f| f.tail_bound()).fold(0.0, f64::max);
    Ok((0..n)
        .map(|j| {
            let terms = (0..2 * order + 1).map(|slot| {
                let c = CMat::from_fn(d, 1, |l, _| q[(slot * d + l, j)]);
                (slot as i64 - order as i64, c)
            });
            VectorLaurent::from_terms(d, order, terms)
                .expect("window")
                .with_tail_bound(tail)
        })
        .collect())
}
