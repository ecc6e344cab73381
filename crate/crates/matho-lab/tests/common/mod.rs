//! Shared fixtures and an independent quadrature oracle.
//!
//! The oracle never touches the series arithmetic or the FFT used by the library:
//! functions are sampled at 512 roots of unity by direct summation, and projections
//! use a naive discrete Fourier transform.

#![allow(dead_code)]

use std::f64::consts::TAU;
use std::sync::Arc;

use matho_lab::inner::BlaschkePotapovProduct;
use matho_lab::laurent::{Laurent, MatrixLaurent, Shape, VectorLaurent};
use matho_lab::linalg::{CMat, C64};
use matho_lab::model_space::ModelSpace;

pub const ORACLE_SAMPLES: usize = 512;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(rows: usize, cols: usize, v: &[f64]) -> CMat {
    CMat::from_row_slice(rows, cols, &v.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>())
}

pub fn space(theta: BlaschkePotapovProduct, order: usize) -> Arc<ModelSpace> {
    Arc::new(ModelSpace::build(theta, order).expect("valid space"))
}

/// Scalar `K_{z^2}` with window 16.
pub fn z2() -> Arc<ModelSpace> {
    space(BlaschkePotapovProduct::z_power(1, 2), 16)
}

/// Scalar monomial symbol `z^n`.
pub fn mono(n: i64, order: usize) -> MatrixLaurent {
    MatrixLaurent::scalar(1, order.max(n.unsigned_abs() as usize), &[(n, c(1.0, 0.0))]).unwrap()
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Samples of a function on the circle: one matrix per root of unity.
#[derive(Clone, Debug)]
pub struct Samples(pub Vec<CMat>);

pub fn nodes() -> Vec<C64> {
    (0..ORACLE_SAMPLES)
        .map(|k| C64::from_polar(1.0, TAU * k as f64 / ORACLE_SAMPLES as f64))
        .collect()
}

/// `zs[1]^e`, read from the table of nodes.
fn root(zs: &[C64], e: i64) -> C64 {
    zs[e.rem_euclid(ORACLE_SAMPLES as i64) as usize]
}

/// `acc += w m` without allocating.
fn add_scaled(acc: &mut CMat, w: C64, m: &CMat) {
    for (a, b) in acc.iter_mut().zip(m.iter()) {
        *a += b * w;
    }
}

impl Samples {
    /// Direct evaluation `sum_n c_n z^n` at every node.
    pub fn of<S: Shape>(f: &Laurent<S>) -> Self {
        let zs = nodes();
        Samples(
            (0..ORACLE_SAMPLES)
                .map(|k| {
                    let mut acc = CMat::zeros(f.coeff(0).nrows(), f.coeff(0).ncols());
                    for (n, cn) in f.iter() {
                        add_scaled(&mut acc, root(&zs, k as i64 * n), cn);
                    }
                    acc
                })
                .collect(),
        )
    }

    pub fn from_fn(f: impl Fn(C64) -> CMat) -> Self {
        Samples(nodes().into_iter().map(f).collect())
    }

    pub fn mul(&self, other: &Samples) -> Samples {
        Samples(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }

    pub fn sub(&self, other: &Samples) -> Samples {
        Samples(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn adjoint(&self) -> Samples {
        Samples(self.0.iter().map(|a| a.adjoint()).collect())
    }

    /// Naive DFT, coefficients for indices `-N/2 .. N/2`.
    pub fn coefficients(&self) -> Vec<(i64, CMat)> {
        let n = ORACLE_SAMPLES as i64;
        let zs = nodes();
        (-n / 2..n / 2)
            .map(|m| {
                let mut acc = CMat::zeros(self.0[0].nrows(), self.0[0].ncols());
                for (k, s) in self.0.iter().enumerate() {
                    add_scaled(&mut acc, root(&zs, -(k as i64) * m), s);
                }
                (m, acc / c(n as f64, 0.0))
            })
            .collect()
    }

    fn keep(&self, pred: impl Fn(i64) -> bool) -> Samples {
        let coeffs: Vec<_> = self.coefficients().into_iter().filter(|(m, _)| pred(*m)).collect();
        let zs = nodes();
        Samples(
            (0..ORACLE_SAMPLES)
                .map(|k| {
                    let mut acc = CMat::zeros(self.0[0].nrows(), self.0[0].ncols());
                    for (m, cm) in &coeffs {
                        add_scaled(&mut acc, root(&zs, k as i64 * m), cm);
                    }
                    acc
                })
                .collect(),
        )
    }

    pub fn analytic(&self) -> Samples {
        self.keep(|m| m >= 0)
    }

    pub fn coanalytic(&self) -> Samples {
        self.keep(|m| m < 0)
    }

    /// `conj(z) f(conj z)`: node `k` reads node `-k`.
    pub fn flip(&self) -> Samples {
        let n = ORACLE_SAMPLES;
        let zs = nodes();
        Samples((0..n).map(|k| &self.0[(n - k) % n] * zs[k].conj()).collect())
    }

    /// `<self, other>` as the circle mean of `other^* self`.
    pub fn inner(&self, other: &Samples) -> C64 {
        let total: C64 = self.0.iter().zip(&other.0).map(|(f, g)| (g.adjoint() * f)[(0, 0)]).sum();
        total / c(ORACLE_SAMPLES as f64, 0.0)
    }

    pub fn max_dev(&self, other: &Samples) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| max_abs(&(a - b))).fold(0.0, f64::max)
    }
}

/// `P_Theta f = f - Theta P+ (Theta^* f)` from samples of Theta.
pub fn oracle_projection(theta: &Samples, f: &Samples) -> Samples {
    let inner = theta.adjoint().mul(f).analytic();
    f.analytic().sub(&theta.mul(&inner))
}

/// Samples of Theta from the product's closed form (no series involved).
pub fn theta_samples(theta: &BlaschkePotapovProduct) -> Samples {
    Samples::from_fn(|z| theta.evaluate(z).unwrap())
}

pub fn basis_samples(space: &ModelSpace) -> Vec<Samples> {
    space.basis().iter().map(Samples::of).collect()
}

/// Coordinates of the oracle projection of `g` in the basis samples.
pub fn oracle_column(basis: &[Samples], g: &Samples) -> Vec<C64> {
    basis.iter().map(|b| g.inner(b)).collect()
}

/// Oracle matrix of `f -> P_Theta2 (map f)` between two spaces.
pub fn oracle_matrix(
    from: &[Samples],
    to: &[Samples],
    theta_to: &Samples,
    map: impl Fn(&Samples) -> Samples,
) -> CMat {
    let mut m = CMat::zeros(to.len(), from.len());
    for (j, b) in from.iter().enumerate() {
        let g = oracle_projection(theta_to, &map(b));
        for (i, v) in oracle_column(to, &g).into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

pub fn vector_samples(f: &VectorLaurent) -> Samples {
    Samples::of(f)
}
