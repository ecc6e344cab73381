//! Seeded random inputs for fuzz batches and property tests.
//!
//! Everything draws from one `ChaCha8Rng`, so a seed pins the whole batch.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::inner::{BlaschkePotapovProduct, PotapovFactor};
use crate::laurent::MatrixLaurent;
use crate::linalg::{identity, op_norm, CMat, C64};
use crate::model_space::ModelSpace;
use crate::symmetry::{Conjugation, CrofootData};

/// Largest zero modulus drawn; keeps Blaschke tails far below the tolerances at M = 64.
pub const MAX_ZERO: f64 = 0.5;
/// Largest operator norm of a drawn Crofoot parameter.
pub const MAX_CROFOOT: f64 = 0.3;
/// Largest model-space dimension drawn.
pub const MAX_DIM_K: usize = 12;

/// Named, seedable generator for every random object in the toolkit.
#[derive(Clone, Debug)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.gen()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    /// Standard complex Gaussian (`E|z|^2 = 1`).
    pub fn gaussian(&mut self) -> C64 {
        let re: f64 = self.rng.sample(StandardNormal);
        let im: f64 = self.rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize) -> CMat {
        CMat::from_fn(rows, cols, |_, _| self.gaussian())
    }

    pub fn gaussian_vector(&mut self, n: usize) -> DVector<C64> {
        DVector::from_fn(n, |_, _| self.gaussian())
    }

    /// Haar-distributed unitary from the QR factorization of a Gaussian matrix.
    pub fn unitary(&mut self, d: usize) -> CMat {
        let qr = self.gaussian_matrix(d, d).qr();
        let (mut q, r) = qr.unpack();
        for j in 0..d {
            let diag = r[(j, j)];
            if diag.norm() > 0.0 {
                let phase = diag / diag.norm();
                for z in q.column_mut(j).iter_mut() {
                    *z *= phase;
                }
            }
        }
        q
    }

    /// `d x r` matrix with orthonormal columns.
    pub fn frame(&mut self, d: usize, r: usize) -> CMat {
        self.unitary(d).columns(0, r).into_owned()
    }

    /// A zero in `|a| <= MAX_ZERO`, uniform in area.
    pub fn zero(&mut self) -> C64 {
        let r = MAX_ZERO * self.uniform().sqrt();
        C64::from_polar(r, std::f64::consts::TAU * self.uniform())
    }

    /// Matrix with operator norm `MAX_CROFOOT` scaled by a uniform factor.
    pub fn contraction(&mut self, d: usize) -> CrofootData {
        let g = self.gaussian_matrix(d, d);
        let norm = op_norm(&g);
        let w = g * C64::new(MAX_CROFOOT * self.uniform() / norm.max(1e-300), 0.0);
        CrofootData::new(w).expect("norm below the Crofoot bound")
    }

    /// `J x = U conj(x)` with `U = W W^T` for a random unitary `W`.
    pub fn conjugation(&mut self, d: usize) -> (Conjugation, CMat) {
        let w = self.unitary(d);
        let j = Conjugation::from_takagi(&w).expect("W W^T is a symmetric unitary");
        (j, w)
    }

    /// Random pure product with degree at most `max_degree`. Roughly half the draws
    /// put every zero at the origin. Impure draws are rejected and redrawn.
    pub fn product(&mut self, d: usize, max_degree: usize) -> BlaschkePotapovProduct {
        let polynomial = self.uniform() < 0.5;
        loop {
            let mut factors = Vec::new();
            let mut degree = 0;
            let target = 1 + self.below(max_degree.max(1));
            while degree < target {
                let rank = 1 + self.below(d.min(target - degree));
                let a = if polynomial { C64::new(0.0, 0.0) } else { self.zero() };
                let frame = self.frame(d, rank);
                let post = self.unitary(d);
                factors.push(PotapovFactor::new(a, frame, post).expect("random factor is valid"));
                degree += rank;
            }
            let left = self.unitary(d);
            let p = BlaschkePotapovProduct::new(d, left, factors).expect("random product is valid");
            if p.validate(None, 1e-10).pure {
                return p;
            }
        }
    }

    /// `Theta = W V^T D(z) V W^*` with `D` diagonal and `U = W W^T`; such a Theta is
    /// J-symmetric for `J x = U conj(x)`.
    pub fn j_symmetric_product(&mut self, w: &CMat, max_degree: usize) -> BlaschkePotapovProduct {
        let d = w.nrows();
        let v = self.unitary(d);
        let polynomial = self.uniform() < 0.5;
        let max_degree = max_degree.max(d);
        // Every axis needs at least one zero for purity.
        let mut layers: Vec<Vec<usize>> = vec![(0..d).collect()];
        let mut degree = d;
        while degree < max_degree && self.uniform() < 0.6 {
            let axes: Vec<usize> = (0..d).filter(|_| self.uniform() < 0.5).take(max_degree - degree).collect();
            if axes.is_empty() {
                continue;
            }
            degree += axes.len();
            layers.push(axes);
        }
        let k = layers.len();
        let factors = layers
            .into_iter()
            .enumerate()
            .map(|(i, axes)| {
                let a = if polynomial { C64::new(0.0, 0.0) } else { self.zero() };
                let frame = CMat::from_fn(d, axes.len(), |r, c| C64::new(if r == axes[c] { 1.0 } else { 0.0 }, 0.0));
                let post = if i + 1 == k { &v * w.adjoint() } else { identity(d) };
                PotapovFactor::new(a, frame, post).expect("coordinate factor")
            })
            .collect();
        BlaschkePotapovProduct::new(d, w * v.transpose(), factors).expect("valid product")
    }

    /// Symbol with Gaussian coefficients on indices `-reach..=reach`.
    pub fn symbol(&mut self, d: usize, reach: usize, order: usize) -> MatrixLaurent {
        let terms: Vec<_> = (-(reach as i64)..=reach as i64)
            .map(|n| (n, self.gaussian_matrix(d, d)))
            .collect();
        MatrixLaurent::from_terms(d, order.max(reach), terms).expect("inside the window")
    }

    /// Modifier map from the tilde defect space into the defect space of `space`.
    pub fn modifier(&mut self, space: &ModelSpace) -> CMat {
        let n = space.dim_k();
        space.p_defect() * self.gaussian_matrix(n, n) * space.p_defect_tilde()
    }
}
