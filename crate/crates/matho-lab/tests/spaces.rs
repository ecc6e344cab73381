//! Laurent arithmetic and model spaces against the sampled quadrature oracle.

mod common;

use common::{basis_samples, c, oracle_matrix, oracle_projection, space, theta_samples, Samples};
use matho_lab::inner::BlaschkePotapovProduct;
use matho_lab::laurent::{MatrixLaurent, VectorLaurent};
use matho_lab::linalg::{fro, identity, CMat, C64};
use matho_lab::model_space::KernelVariant;
use matho_lab::operators::{build_matho, build_matto};
use matho_lab::random::Sampler;
use proptest::prelude::*;

fn random_vector(s: &mut Sampler, d: usize, reach: i64, order: usize) -> VectorLaurent {
    let terms: Vec<_> = (-reach..=reach).map(|n| (n, s.gaussian_matrix(d, 1))).collect();
    VectorLaurent::from_terms(d, order, terms).unwrap()
}

fn golden_products() -> Vec<BlaschkePotapovProduct> {
    vec![
        BlaschkePotapovProduct::z_power(1, 2),
        BlaschkePotapovProduct::diagonal_powers(&[1, 2]),
        BlaschkePotapovProduct::scalar_blaschke(&[c(0.3, 0.2), c(-0.1, 0.4), c(0.0, 0.0)]).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn series_product_matches_sampled_product(seed in 0u64..10_000) {
        let mut s = Sampler::new(seed);
        let f = s.symbol(2, 5, 16);
        let g = s.symbol(2, 5, 16);
        let prod = f.mul(&g).unwrap();
        let dev = Samples::of(&prod).max_dev(&Samples::of(&f).mul(&Samples::of(&g)));
        prop_assert!(dev <= 1e-11, "{dev}");
    }

    #[test]
    fn riesz_split_matches_dft_split(seed in 0u64..10_000) {
        let mut s = Sampler::new(seed);
        let f = random_vector(&mut s, 2, 8, 16);
        let samples = Samples::of(&f);
        prop_assert!(Samples::of(&f.analytic_part()).max_dev(&samples.analytic()) <= 1e-11);
        prop_assert!(Samples::of(&f.coanalytic_part()).max_dev(&samples.coanalytic()) <= 1e-11);
    }

    #[test]
    fn flip_is_an_involutive_isometry(seed in 0u64..10_000) {
        let mut s = Sampler::new(seed);
        let f = random_vector(&mut s, 3, 6, 8);
        let flipped = f.flip();
        prop_assert!((flipped.norm() - f.norm()).abs() <= 1e-12);
        prop_assert!(Samples::of(&flipped).max_dev(&Samples::of(&f).flip()) <= 1e-11);
        prop_assert!(fro_of(&flipped.flip().truncate(8).sub(&f).unwrap()) <= 1e-14);
    }

    #[test]
    fn adjoint_star_is_the_pointwise_adjoint(seed in 0u64..10_000) {
        let mut s = Sampler::new(seed);
        let f = s.symbol(2, 4, 8);
        prop_assert!(Samples::of(&f.adjoint_star()).max_dev(&Samples::of(&f).adjoint()) <= 1e-11);
    }

    #[test]
    fn circle_sampling_round_trips(seed in 0u64..10_000) {
        let mut s = Sampler::new(seed);
        let f = s.symbol(2, 6, 8);
        let values = f.sample_circle(64);
        let oracle = Samples::of(&f);
        for (k, v) in values.iter().enumerate() {
            prop_assert!(fro(&(v - &oracle.0[k * 8])) <= 1e-11);
        }
        let back = MatrixLaurent::fit_from_samples(&values, 8).unwrap();
        prop_assert!(fro_of(&back.sub(&f).unwrap()) <= 1e-12);
    }

    #[test]
    fn projection_matches_oracle_and_is_idempotent(seed in 0u64..10_000) {
        let mut s = Sampler::new(seed);
        let theta = s.product(2, 4);
        let k = space(theta.clone(), 64);
        let f = random_vector(&mut s, 2, 6, 64);
        let p = k.project(&f).unwrap();
        let oracle = oracle_projection(&theta_samples(&theta), &Samples::of(&f));
        prop_assert!(Samples::of(&p).max_dev(&oracle) <= 1e-8);
        let pp = k.project(&p).unwrap();
        prop_assert!(fro_of(&pp.sub(&p).unwrap()) <= 1e-10);
    }
}

fn fro_of<S: matho_lab::laurent::Shape>(f: &matho_lab::laurent::Laurent<S>) -> f64 {
    f.norm()
}

#[test]
fn dimension_equals_degree_and_basis_is_orthonormal() {
    let mut s = Sampler::new(11);
    for _ in 0..20 {
        let d = 1 + s.below(3);
        let theta = s.product(d, 8);
        let k = space(theta.clone(), 64);
        assert_eq!(k.dim_k(), theta.degree());
        let b = basis_samples(&k);
        for (i, bi) in b.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((bi.inner(bj) - c(expected, 0.0)).norm() <= 1e-9);
            }
            // Basis vectors lie in K_Theta: the oracle projection fixes them.
            assert!(oracle_projection(&theta_samples(&theta), bi).max_dev(bi) <= 1e-8);
        }
    }
}

#[test]
fn shift_and_defects_match_the_oracle() {
    for theta in golden_products() {
        let k = space(theta.clone(), 64);
        let b = basis_samples(&k);
        let ts = theta_samples(&theta);
        let times_z = |f: &Samples| Samples(f.0.iter().zip(common::nodes()).map(|(v, z)| v * z).collect());
        let s = oracle_matrix(&b, &b, &ts, times_z);
        assert!(fro(&(s - k.shift())) <= 1e-8);
        let n = k.dim_k();
        let e = k.eval_at_zero();
        assert!(fro(&(identity(n) - k.shift() * k.shift_adj() - e * e.adjoint())) <= 1e-10);
        assert!(fro(&(k.defect() - (identity(n) - k.shift() * k.shift_adj()))) <= 1e-10);
        assert!(fro(&(k.defect_tilde() - (identity(n) - k.shift_adj() * k.shift()))) <= 1e-10);
    }
}

#[test]
fn operator_matrices_match_the_oracle() {
    let mut s = Sampler::new(12);
    for theta in golden_products() {
        let d = theta.dim();
        let k = space(theta.clone(), 64);
        let phi = s.symbol(d, 3, 64);
        let b = basis_samples(&k);
        let ts = theta_samples(&theta);
        let ps = Samples::of(&phi);
        let a = oracle_matrix(&b, &b, &ts, |f| ps.mul(f));
        assert!(fro(&(a - build_matto(&k, &k, &phi).unwrap().matrix())) <= 1e-8);
        let h = oracle_matrix(&b, &b, &ts, |f| ps.mul(f).coanalytic().flip());
        assert!(fro(&(h - build_matho(&k, &k, &phi).unwrap().matrix())) <= 1e-8);
    }
}

#[test]
fn reproducing_kernels_reproduce() {
    let theta = BlaschkePotapovProduct::scalar_blaschke(&[c(0.2, -0.3), c(0.5, 0.1)]).unwrap();
    let k = space(theta, 64);
    let lambda = c(0.1, 0.25);
    let kl = k.kernel(lambda, KernelVariant::K, &[c(1.0, 0.0)]).unwrap();
    for bv in k.basis() {
        let value: C64 = bv.evaluate_analytic(lambda).unwrap()[(0, 0)];
        assert!((bv.inner_product(&kl).unwrap() - value).norm() <= 1e-10);
    }
}

#[test]
fn golden_space_z_squared() {
    let k = space(BlaschkePotapovProduct::z_power(1, 2), 16);
    let shift = CMat::from_row_slice(2, 2, &[c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.)]);
    assert!(fro(&(k.shift() - shift)) <= 1e-15);
    assert_eq!(k.describe().defect_rank, 1);
}
