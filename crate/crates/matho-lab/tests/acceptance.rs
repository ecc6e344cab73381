//! Acceptance criteria, one pass/fail line each. Runs without the libtest harness and
//! exits nonzero if any criterion fails or overruns its time budget.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{basis_samples, c, max_abs, mono, oracle_matrix, oracle_projection, real, space, theta_samples, Samples};
use matho_lab::inner::{BlaschkePotapovProduct, CrofootTheta, InnerFunction};
use matho_lab::laurent::{MatrixLaurent, VectorLaurent};
use matho_lab::linalg::fro;
use matho_lab::model_space::ModelSpace;
use matho_lab::operators::{
    build, build_matho, build_matto, displacement_check, kernel_generators, recover_symbol, shift_invariance_check,
    verify_transform, DisplacementKind, Family, KernelClass, Modifiers, ModelOperator, ShiftInvarianceKind,
    TransformContext, TransformInputs,
};
use matho_lab::random::Sampler;
use matho_lab::symmetry::{c_theta_map, crofoot_coord_map, jstar_map, tau_map, Conjugation, CoordMap, CrofootData, ModelConjugation};

const ORDER: usize = 64;
const GOLDEN_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-8;
const ISOMETRY_TOL: f64 = 1e-9;
const BUDGET: Duration = Duration::from_secs(10);

type Outcome = Result<String, String>;

/// Verdicts of predicates that must agree on one operator.
type VerdictRow = (String, Vec<(String, bool)>);

fn z2_space() -> Arc<ModelSpace> {
    space(BlaschkePotapovProduct::z_power(1, 2), ORDER)
}

fn random_pair(s: &mut Sampler, d: usize) -> (Arc<ModelSpace>, Arc<ModelSpace>) {
    (space(s.product(d, 6), ORDER), space(s.product(d, 6), ORDER))
}

fn j_symmetric_pair(s: &mut Sampler, d: usize) -> (Arc<ModelSpace>, Arc<ModelSpace>, Conjugation, Conjugation) {
    let (j1, w1) = s.conjugation(d);
    let (j2, w2) = s.conjugation(d);
    let k1 = space(s.j_symmetric_product(&w1, 6), ORDER);
    let k2 = space(s.j_symmetric_product(&w2, 6), ORDER);
    (k1, k2, j1, j2)
}

/// Verdicts of the four plain displacement kinds and the four shift-invariance kinds.
fn plain_verdicts(op: &ModelOperator, family: Family) -> Result<Vec<(String, bool)>, String> {
    let kinds = match family {
        Family::Toeplitz => DisplacementKind::TOEPLITZ,
        Family::Hankel => DisplacementKind::HANKEL,
    };
    let mut out = Vec::new();
    for kind in kinds {
        let r = displacement_check(op, kind, None, RESIDUAL_TOL).map_err(|e| e.to_string())?;
        out.push((r.kind, r.verdict.is_accept()));
    }
    for kind in ShiftInvarianceKind::all(family) {
        let r = shift_invariance_check(op, kind, RESIDUAL_TOL).map_err(|e| e.to_string())?;
        out.push((r.kind, r.verdict.is_accept()));
    }
    Ok(out)
}

fn golden_matrices() -> Outcome {
    let s = z2_space();
    let cases = [
        (Family::Toeplitz, 1, [0., 0., 1., 0.]),
        (Family::Hankel, -1, [1., 0., 0., 0.]),
        (Family::Hankel, -2, [0., 1., 1., 0.]),
        (Family::Hankel, -3, [0., 0., 0., 1.]),
    ];
    let mut worst: f64 = 0.0;
    for (family, n, expected) in cases {
        let op = build(family, &s, &s, &mono(n, ORDER)).map_err(|e| e.to_string())?;
        let err = max_abs(&(op.matrix() - real(2, 2, &expected)));
        if err > GOLDEN_TOL {
            return Err(format!("{family} of z^{n}: entrywise error {err:.2e}"));
        }
        worst = worst.max(err);
    }
    Ok(format!("4 matrices, max entrywise error {worst:.2e} (tol {GOLDEN_TOL:.0e})"))
}

fn soundness(rows: &mut Vec<VerdictRow>) -> Outcome {
    let mut s = Sampler::new(2001);
    let mut worst: f64 = 0.0;
    for trial in 0..200 {
        let d = 1 + trial % 3;
        let (k1, k2) = random_pair(&mut s, d);
        let phi = s.symbol(d, 4, ORDER);
        let a = build_matto(&k1, &k2, &phi).map_err(|e| e.to_string())?;
        let b = build_matho(&k1, &k2, &phi).map_err(|e| e.to_string())?;
        let modifiers = Modifiers {
            x1: s.modifier(&k1),
            x2: s.modifier(&k2),
        };
        let mut residuals = Vec::new();
        for kind in DisplacementKind::HANKEL.into_iter().chain(DisplacementKind::MODIFIED_HANKEL) {
            let r = displacement_check(&b, kind, Some(&modifiers), RESIDUAL_TOL).map_err(|e| e.to_string())?;
            residuals.push((r.kind, r.residual));
        }
        for kind in DisplacementKind::TOEPLITZ {
            let r = displacement_check(&a, kind, None, RESIDUAL_TOL).map_err(|e| e.to_string())?;
            residuals.push((r.kind, r.residual));
        }
        for kind in ShiftInvarianceKind::all(Family::Toeplitz) {
            let r = shift_invariance_check(&a, kind, RESIDUAL_TOL).map_err(|e| e.to_string())?;
            residuals.push((r.kind, r.residual));
        }
        for (kind, r) in residuals {
            if !(r <= RESIDUAL_TOL) {
                return Err(format!("draw {trial} (d = {d}): {kind} residual {r:.2e}"));
            }
            worst = worst.max(r);
        }
        rows.push((format!("suite 2 draw {trial} MATTO"), plain_verdicts(&a, Family::Toeplitz)?));
        rows.push((format!("suite 2 draw {trial} MATHO"), plain_verdicts(&b, Family::Hankel)?));
    }
    Ok(format!("200 draws, 16 predicates each, max residual {worst:.2e} (tol {RESIDUAL_TOL:.0e})"))
}

fn discrimination(rows: &mut Vec<VerdictRow>) -> Outcome {
    let k = z2_space();
    let mut rejected = 0;
    for seed in 0..1000u64 {
        let m = Sampler::new(seed).gaussian_matrix(2, 2);
        let op = ModelOperator::new(k.clone(), k.clone(), m).map_err(|e| e.to_string())?;
        let r = displacement_check(&op, DisplacementKind::H1, None, RESIDUAL_TOL).map_err(|e| e.to_string())?;
        if !r.verdict.is_accept() && r.residual >= 0.1 * r.displacement_norm {
            rejected += 1;
        }
        rows.push((format!("suite 3 seed {seed} toeplitz"), plain_verdicts(&op, Family::Toeplitz)?));
        rows.push((format!("suite 3 seed {seed} hankel"), plain_verdicts(&op, Family::Hankel)?));
    }
    let nilpotent = ModelOperator::new(k.clone(), k, real(2, 2, &[0., 1., 0., 0.])).map_err(|e| e.to_string())?;
    let r = displacement_check(&nilpotent, DisplacementKind::H1, None, RESIDUAL_TOL).map_err(|e| e.to_string())?;
    let summary = format!(
        "{rejected}/1000 rejected with residual >= 0.1 |X|_F; counterexample residual {:.15}",
        r.residual
    );
    if rejected < 950 {
        return Err(summary + " (need 950)");
    }
    if r.verdict.is_accept() || (r.residual - 1.0).abs() > GOLDEN_TOL {
        return Err(summary + " (need 1 +- 1e-12, rejected)");
    }
    Ok(summary)
}

fn round_trip() -> Outcome {
    let mut s = Sampler::new(2004);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let d = 1 + trial % 3;
        let rec = if trial % 2 == 0 {
            let (k1, k2) = random_pair(&mut s, d);
            let a = build_matto(&k1, &k2, &s.symbol(d, 3, ORDER)).map_err(|e| e.to_string())?;
            recover_symbol(&a, Family::Toeplitz, None, RESIDUAL_TOL)
        } else {
            let (k1, k2, j1, j2) = j_symmetric_pair(&mut s, d);
            let b = build_matho(&k1, &k2, &s.symbol(d, 3, ORDER)).map_err(|e| e.to_string())?;
            recover_symbol(&b, Family::Hankel, Some((&j1, &j2)), RESIDUAL_TOL)
        }
        .map_err(|e| format!("operator {trial}: {e}"))?;
        if !(rec.rebuild_residual <= RESIDUAL_TOL) {
            return Err(format!("operator {trial} (d = {d}): rebuild error {:.2e}", rec.rebuild_residual));
        }
        worst = worst.max(rec.rebuild_residual);
    }
    Ok(format!("50 MATTO + 50 MATHO, max rebuild error {worst:.2e} (tol {RESIDUAL_TOL:.0e})"))
}

fn z2_transform_inputs() -> TransformInputs {
    TransformInputs {
        theta1: BlaschkePotapovProduct::z_power(1, 2),
        theta2: BlaschkePotapovProduct::z_power(1, 2),
        phi: mono(-1, ORDER),
        conjugations: Some((Conjugation::entrywise(1), Conjugation::entrywise(1))),
        crofoot: Some((CrofootData::zero(1), CrofootData::zero(1))),
        order: ORDER,
        threshold: RESIDUAL_TOL,
    }
}

fn random_transform_inputs(s: &mut Sampler, d: usize) -> TransformInputs {
    let (j1, w1) = s.conjugation(d);
    let (j2, w2) = s.conjugation(d);
    TransformInputs {
        theta1: s.j_symmetric_product(&w1, 6),
        theta2: s.j_symmetric_product(&w2, 6),
        phi: s.symbol(d, 3, ORDER),
        conjugations: Some((j1, j2)),
        crofoot: Some((s.contraction(d), s.contraction(d))),
        order: ORDER,
        threshold: RESIDUAL_TOL,
    }
}

const CHECKED_ENTRIES: [&str; 12] = [
    "crofoot", "tau", "jstar", "ctheta", "prop61a", "prop61b", "prop61c", "prop61d", "prop61e", "prop61f", "eq_sz",
    "eq_ddd",
];

fn registry() -> Outcome {
    let hand = TransformContext::new(z2_transform_inputs()).map_err(|e| e.to_string())?;
    let mut hand_worst: f64 = 0.0;
    for name in ["tau", "prop61f"] {
        let r = verify_transform(name, &hand).map_err(|e| e.to_string())?;
        if !(r.residual <= GOLDEN_TOL) {
            return Err(format!("hand {name} over (z^2, z^2): residual {:.2e}", r.residual));
        }
        hand_worst = hand_worst.max(r.residual);
    }
    let mut s = Sampler::new(2005);
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let d = 1 + trial % 3;
        let ctx = TransformContext::new(random_transform_inputs(&mut s, d)).map_err(|e| e.to_string())?;
        for name in CHECKED_ENTRIES {
            let r = verify_transform(name, &ctx).map_err(|e| format!("instance {trial}, {name}: {e}"))?;
            if !(r.residual <= RESIDUAL_TOL) {
                return Err(format!("instance {trial} (d = {d}), {name}: residual {:.2e}", r.residual));
            }
            worst = worst.max(r.residual);
        }
    }
    Ok(format!(
        "12 entries x 50 instances, max residual {worst:.2e}; hand cases {hand_worst:.2e} (tol {GOLDEN_TOL:.0e})"
    ))
}

/// Agreement check on every generator of a pair, then on random combinations.
fn kernel_agreement(
    family: Family,
    k1: &Arc<ModelSpace>,
    k2: &Arc<ModelSpace>,
    conj: Option<(&Conjugation, &Conjugation)>,
    combos: usize,
    s: &mut Sampler,
) -> Result<usize, String> {
    let class = KernelClass::new(family, k1, k2, conj).map_err(|e| e.to_string())?;
    let gens = kernel_generators(family, k1, k2, conj).map_err(|e| e.to_string())?;
    for (i, g) in gens.iter().enumerate() {
        let v = class.test(g, RESIDUAL_TOL).map_err(|e| e.to_string())?;
        if !v.agrees {
            return Err(format!("{family} generator {i}: {v:?}"));
        }
    }
    for trial in 0..combos {
        let mut phi = MatrixLaurent::zeros(k1.dim(), k1.order());
        for _ in 0..4 {
            let g = &gens[s.below(gens.len())];
            phi = phi.add(&g.scale(s.gaussian())).map_err(|e| e.to_string())?;
        }
        let v = class.test(&phi, RESIDUAL_TOL).map_err(|e| e.to_string())?;
        if !(v.agrees && v.in_kernel) {
            return Err(format!("{family} combination {trial}: {v:?}"));
        }
    }
    Ok(gens.len())
}

fn kernel() -> Outcome {
    let mut s = Sampler::new(2006);
    let mut generators = 0;
    let z2 = z2_space();
    let entry = Conjugation::entrywise(1);
    let diag = space(BlaschkePotapovProduct::diagonal_powers(&[1, 2]), ORDER);
    let entry2 = Conjugation::entrywise(2);
    generators += kernel_agreement(Family::Toeplitz, &z2, &z2, None, 25, &mut s)?;
    generators += kernel_agreement(Family::Hankel, &z2, &z2, Some((&entry, &entry)), 25, &mut s)?;
    generators += kernel_agreement(Family::Toeplitz, &diag, &diag, None, 0, &mut s)?;
    generators += kernel_agreement(Family::Hankel, &diag, &diag, Some((&entry2, &entry2)), 0, &mut s)?;
    let (k1, k2, j1, j2) = j_symmetric_pair(&mut s, 2);
    generators += kernel_agreement(Family::Toeplitz, &k1, &k2, None, 25, &mut s)?;
    generators += kernel_agreement(Family::Hankel, &k1, &k2, Some((&j1, &j2)), 25, &mut s)?;

    let hankel = KernelClass::new(Family::Hankel, &z2, &z2, Some((&entry, &entry))).map_err(|e| e.to_string())?;
    let v = hankel.test(&mono(-2, ORDER), RESIDUAL_TOL).map_err(|e| e.to_string())?;
    if v.in_kernel || v.operator_is_zero || !v.agrees {
        return Err(format!("z^-2 over (z^2, z^2) not flagged non-kernel: {v:?}"));
    }
    Ok(format!(
        "{generators} generators and 100 combinations agree; z^-2 flagged non-kernel (distance {:.3})",
        v.distance
    ))
}

/// Largest relative norm change of a coordinate map over `count` random inputs.
fn norm_drift(map: &CoordMap, s: &mut Sampler, count: usize) -> f64 {
    let n = map.matrix().ncols();
    (0..count)
        .map(|_| {
            let x = s.gaussian_matrix(n, 1);
            (fro(&map.apply(&x)) - fro(&x)).abs() / fro(&x)
        })
        .fold(0.0, f64::max)
}

fn isometries() -> Outcome {
    let mut s = Sampler::new(2007);
    let mut drift = [0.0f64; 5];
    for trial in 0..10 {
        let d = 1 + trial % 3;
        let theta = s.product(d, 6);
        let k = space(theta.clone(), ORDER);
        let tau = tau_map(&k, &space(theta.tilde(), ORDER)).map_err(|e| e.to_string())?;
        drift[0] = drift[0].max(norm_drift(&tau, &mut s, 10));

        let (j, w) = s.conjugation(d);
        let jstar = jstar_map(&j, &k, &space(theta.conjugated(&j), ORDER)).map_err(|e| e.to_string())?;
        drift[2] = drift[2].max(norm_drift(&jstar, &mut s, 10));

        let ks = space(s.j_symmetric_product(&w, 6), ORDER);
        let cj = ModelConjugation::new(&ks, &j, 1e-10).map_err(|e| e.to_string())?;
        let ctheta = c_theta_map(&cj, &ks).map_err(|e| e.to_string())?;
        drift[3] = drift[3].max(norm_drift(&ctheta, &mut s, 10));

        let ct = CrofootTheta::new(theta, s.contraction(d)).map_err(|e| e.to_string())?;
        let kw = Arc::new(ModelSpace::build(InnerFunction::Crofoot(Box::new(ct)), ORDER).map_err(|e| e.to_string())?);
        let crofoot = crofoot_coord_map(&k, &kw).map_err(|e| e.to_string())?;
        drift[4] = drift[4].max(norm_drift(&crofoot, &mut s, 10));
    }
    for _ in 0..100 {
        let terms: Vec<_> = (-8..=8).map(|n| (n, s.gaussian_matrix(2, 1))).collect();
        let f = VectorLaurent::from_terms(2, ORDER, terms).map_err(|e| e.to_string())?;
        drift[1] = drift[1].max((f.flip().norm() - f.norm()).abs() / f.norm());
    }
    let names = ["tau", "flip", "coefficient conjugation", "model conjugation", "crofoot"];
    if let Some(i) = drift.iter().position(|x| !(*x <= ISOMETRY_TOL)) {
        return Err(format!("{} changes norms by {:.2e}", names[i], drift[i]));
    }
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let d = 1 + trial % 3;
        let ctx = TransformContext::new(TransformInputs {
            theta1: s.product(d, 6),
            theta2: s.product(d, 6),
            phi: s.symbol(d, 3, ORDER),
            conjugations: None,
            crofoot: None,
            order: ORDER,
            threshold: RESIDUAL_TOL,
        })
        .map_err(|e| e.to_string())?;
        for name in ["eq_sz", "eq_ddd"] {
            let r = verify_transform(name, &ctx).map_err(|e| e.to_string())?;
            if !(r.residual <= RESIDUAL_TOL) {
                return Err(format!("{name} on instance {trial}: residual {:.2e}", r.residual));
            }
            worst = worst.max(r.residual);
        }
    }
    let max_drift = drift.iter().cloned().fold(0.0, f64::max);
    Ok(format!(
        "5 maps x 100 inputs, max relative norm change {max_drift:.2e} (tol {ISOMETRY_TOL:.0e}); shift identities {worst:.2e}"
    ))
}

fn oracle() -> Outcome {
    let products = [
        BlaschkePotapovProduct::z_power(1, 2),
        BlaschkePotapovProduct::diagonal_powers(&[1, 2]),
        BlaschkePotapovProduct::scalar_blaschke(&[c(0.3, 0.2), c(-0.1, 0.4), c(0.0, 0.0)]).map_err(|e| e.to_string())?,
    ];
    let mut s = Sampler::new(2008);
    let mut worst: f64 = 0.0;
    let mut note = |what: &str, err: f64| -> Result<(), String> {
        if !(err <= RESIDUAL_TOL) {
            return Err(format!("{what}: deviation {err:.2e}"));
        }
        worst = worst.max(err);
        Ok(())
    };
    for theta in products {
        let d = theta.dim();
        let k = space(theta.clone(), ORDER);
        let ts = theta_samples(&theta);
        let b = basis_samples(&k);

        let terms: Vec<_> = (-6..=6).map(|n| (n, s.gaussian_matrix(d, 1))).collect();
        let f = VectorLaurent::from_terms(d, ORDER, terms).map_err(|e| e.to_string())?;
        let p = k.project(&f).map_err(|e| e.to_string())?;
        note("projection", Samples::of(&p).max_dev(&oracle_projection(&ts, &Samples::of(&f))))?;

        let times_z = |f: &Samples| Samples(f.0.iter().zip(common::nodes()).map(|(v, z)| v * z).collect());
        note("compressed shift", fro(&(oracle_matrix(&b, &b, &ts, times_z) - k.shift())))?;

        let mut symbols = vec![s.symbol(d, 3, ORDER)];
        if d == 1 {
            symbols.extend([1, -1, -2, -3].map(|n| mono(n, ORDER)));
        }
        for phi in symbols {
            let ps = Samples::of(&phi);
            let a = oracle_matrix(&b, &b, &ts, |f| ps.mul(f));
            note("MATTO", fro(&(a - build_matto(&k, &k, &phi).map_err(|e| e.to_string())?.matrix())))?;
            let h = oracle_matrix(&b, &b, &ts, |f| ps.mul(f).coanalytic().flip());
            note("MATHO", fro(&(h - build_matho(&k, &k, &phi).map_err(|e| e.to_string())?.matrix())))?;
        }
    }
    Ok(format!("3 golden spaces, 512-sample oracle, max deviation {worst:.2e} (tol {RESIDUAL_TOL:.0e})"))
}

fn equivalence(rows: &[VerdictRow]) -> Outcome {
    let mut accepted = 0;
    for (label, verdicts) in rows {
        let first = verdicts[0].1;
        if let Some((kind, _)) = verdicts.iter().find(|(_, v)| *v != first) {
            return Err(format!("{label}: {} and {kind} disagree", verdicts[0].0));
        }
        accepted += usize::from(first);
    }
    Ok(format!(
        "{} operators x 8 predicates agree ({accepted} accepted, {} rejected)",
        rows.len(),
        rows.len() - accepted
    ))
}

fn report(number: usize, title: &str, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = run();
    let elapsed = start.elapsed();
    let (pass, detail) = match outcome {
        Ok(d) if elapsed <= BUDGET => (true, d),
        Ok(d) => (false, format!("{d}; over the {}s budget", BUDGET.as_secs())),
        Err(e) => (false, e),
    };
    let mark = if pass { "PASS" } else { "FAIL" };
    println!("criterion {number} {mark} {title}: {detail} [{:.2}s]", elapsed.as_secs_f64());
    pass
}

fn main() -> ExitCode {
    let mut rows = Vec::new();
    let results = [
        report(1, "golden matrices", golden_matrices),
        report(2, "characterization soundness", || soundness(&mut rows)),
        report(3, "discrimination", || discrimination(&mut rows)),
        report(4, "round trip", round_trip),
        report(5, "transform registry", registry),
        report(6, "kernel tests", kernel),
        report(7, "isometries", isometries),
        report(8, "oracle equivalence", oracle),
        report(9, "predicate equivalence", || equivalence(&rows)),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
