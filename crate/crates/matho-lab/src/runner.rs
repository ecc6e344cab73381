//! Executes a scenario for one command and turns the outcome into a [`Report`].

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::inner::BlaschkePotapovProduct;
use crate::laurent::{matrix_to_json, MatrixLaurent};
use crate::linalg::{fro, identity, C64};
use crate::model_space::ModelSpace;
use crate::operators::{
    build, displacement_check, kernel_test, recover_symbol, shift_invariance_check, verify_all, verify_transform,
    DisplacementKind, Family, ModelOperator, Modifiers, RegistryOutcome, TransformContext, TransformInputs,
    ZERO_OPERATOR_TOL,
};
use crate::random::Sampler;
use crate::report::{CheckRecord, ErrorRecord, Outcome, Report, Settings, SkippedCheck};
use crate::scenario::{CheckKind, Command, Overrides, Scenario, SpaceChoice};

/// Output format of a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

/// Load the scenario, run the command and serialize the report. Returns the text to
/// print and the process exit code. Never panics: a panic inside the numerics
/// becomes an `internal` report.
pub fn execute(command: Command, path: &Path, overrides: Overrides, format: Format) -> (String, i32) {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        let scenario = Scenario::load(path, overrides).map_err(|e| (None, e))?;
        let settings = settings_of(&scenario);
        run(command, &scenario).map_err(|e| (Some(settings), e))
    }));
    let mut report = match outcome {
        Ok(Ok(report)) => report,
        Ok(Err((settings, e))) => Report::failed(command.name(), settings, Outcome::of_error(&e), (&e).into()),
        Err(panic) => {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Report::failed(
                command.name(),
                None,
                Outcome::Internal,
                ErrorRecord {
                    message: format!("internal error: {message}"),
                    field: None,
                },
            )
        }
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    let text = match format {
        Format::Json => report.to_json(),
        Format::Text => report.to_text(),
    };
    (text, report.exit_code())
}

fn settings_of(s: &Scenario) -> Settings {
    Settings {
        trunc_order: s.trunc_order,
        tolerance: s.tolerance,
        seed: s.seed,
    }
}

/// Run one command on a validated scenario.
pub fn run(command: Command, scenario: &Scenario) -> Result<Report> {
    if let Some(declared) = scenario.command {
        if declared != command {
            return Err(Error::invalid(
                "command",
                format!("scenario is written for `{declared}`, not `{command}`"),
            ));
        }
    }
    let (checks, skipped, details) = match command {
        Command::Space => run_space(scenario)?,
        Command::Build => run_build(scenario)?,
        Command::Check => run_check(scenario)?,
        Command::Recover => run_recover(scenario)?,
        Command::Kernel => run_kernel(scenario)?,
        Command::Verify => run_verify(scenario)?,
    };
    Ok(Report::finished(command.name(), settings_of(scenario), checks, skipped, details))
}

type Outputs = (Vec<CheckRecord>, Vec<SkippedCheck>, Value);

fn require<'a, T>(value: &'a Option<T>, what: &str) -> Result<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| Error::MissingInput(format!("this command needs `{what}` in the scenario")))
}

fn spaces(s: &Scenario) -> Result<(Arc<ModelSpace>, Arc<ModelSpace>)> {
    let t1 = require(&s.theta1, "theta1")?;
    let t2 = require(&s.theta2, "theta2")?;
    let k1 = Arc::new(ModelSpace::build(t1.clone(), s.trunc_order).map_err(|e| e.within("theta1"))?);
    let k2 = if t1 == t2 {
        k1.clone()
    } else {
        Arc::new(ModelSpace::build(t2.clone(), s.trunc_order).map_err(|e| e.within("theta2"))?)
    };
    Ok((k1, k2))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn run_space(s: &Scenario) -> Result<Outputs> {
    let (theta, label) = match s.space {
        SpaceChoice::Theta1 => (require(&s.theta1, "theta1")?, "theta1"),
        SpaceChoice::Theta2 => (require(&s.theta2, "theta2")?, "theta2"),
    };
    let j = s.conjugations.as_ref().map(|(j1, j2)| match s.space {
        SpaceChoice::Theta1 => j1,
        SpaceChoice::Theta2 => j2,
    });
    let inner = theta.validate(j, s.tolerance);
    let space = ModelSpace::build(theta.clone(), s.trunc_order).map_err(|e| e.within(label))?;
    let basis = space.basis();
    let mut gram_error: f64 = 0.0;
    for (i, bi) in basis.iter().enumerate() {
        for (k, bk) in basis.iter().enumerate() {
            let target = if i == k { 1.0 } else { 0.0 };
            gram_error = gram_error.max((bk.inner_product(bi)? - C64::new(target, 0.0)).norm());
        }
    }
    let e = space.eval_at_zero();
    let s_mat = space.shift();
    let n = space.dim_k();
    let defect_identity = fro(&(identity(n) - s_mat * s_mat.adjoint() - e * e.adjoint()));
    let mut checks = vec![
        CheckRecord::relative("inner", inner.unitarity_defect, s.tolerance, 0.0),
        CheckRecord::flag("pure", inner.pure),
        CheckRecord::relative("orthonormal_basis", gram_error, s.tolerance, 0.0),
        CheckRecord::relative("defect_kernel", defect_identity, s.tolerance, 0.0),
    ];
    if let (Some(defect), Some(holds)) = (inner.symmetry_defect, inner.j_symmetric) {
        let mut record = CheckRecord::relative("j_symmetric", defect, s.tolerance, 0.0);
        record.verdict = crate::operators::Verdict::from_bool(holds);
        checks.push(record);
    }
    let details = json!({
        "space": label,
        "inner": to_value(&inner),
        "description": to_value(&space.describe()),
    });
    Ok((checks, vec![], details))
}

fn family_of(s: &Scenario) -> Result<Family> {
    s.family
        .ok_or_else(|| Error::MissingInput("this command needs `family` (toeplitz or hankel)".into()))
}

fn first_kind(family: Family) -> DisplacementKind {
    match family {
        Family::Toeplitz => DisplacementKind::T1,
        Family::Hankel => DisplacementKind::H1,
    }
}

/// The operator under test: the `operator` matrix when given, else built from `symbol`.
fn operator(s: &Scenario, family: Family, k1: &Arc<ModelSpace>, k2: &Arc<ModelSpace>) -> Result<(ModelOperator, &'static str)> {
    if let Some(m) = &s.operator {
        let op = ModelOperator::new(k1.clone(), k2.clone(), m.clone()).map_err(|e| match e {
            Error::DimensionMismatch(msg) => Error::invalid("operator", msg),
            other => other,
        })?;
        return Ok((op, "matrix"));
    }
    let phi = s
        .symbol
        .as_ref()
        .ok_or_else(|| Error::MissingInput("this command needs `operator` or `symbol`".into()))?;
    Ok((build(family, k1, k2, phi)?, "symbol"))
}

fn run_build(s: &Scenario) -> Result<Outputs> {
    let family = family_of(s)?;
    let (k1, k2) = spaces(s)?;
    let phi = require(&s.symbol, "symbol")?;
    let op = build(family, &k1, &k2, phi)?;
    let kind = first_kind(family);
    let report = displacement_check(&op, kind, None, s.tolerance)?;
    let details = json!({
        "family": family.to_string(),
        "rows": op.matrix().nrows(),
        "cols": op.matrix().ncols(),
        "matrix": to_value(&matrix_to_json(op.matrix())),
    });
    Ok((vec![(&report).into()], vec![], details))
}

fn run_check(s: &Scenario) -> Result<Outputs> {
    if s.kinds.is_empty() {
        return Err(Error::MissingInput("check needs `kind` (a kind name or a list)".into()));
    }
    let (k1, k2) = spaces(s)?;
    let modifiers = s.modifiers.as_ref().map(|(x1, x2)| Modifiers {
        x1: x1.clone(),
        x2: x2.clone(),
    });
    let mut checks = Vec::with_capacity(s.kinds.len());
    let mut source = "matrix";
    for kind in &s.kinds {
        let (op, src) = operator(s, kind.family(), &k1, &k2)?;
        source = src;
        let report = match kind {
            CheckKind::Displacement(k) => displacement_check(&op, *k, modifiers.as_ref(), s.tolerance)?,
            CheckKind::ShiftInvariance(k) => shift_invariance_check(&op, *k, s.tolerance)?,
        };
        checks.push((&report).into());
    }
    Ok((checks, vec![], json!({ "operator_source": source })))
}

fn run_recover(s: &Scenario) -> Result<Outputs> {
    let family = family_of(s)?;
    let (k1, k2) = spaces(s)?;
    let (op, source) = operator(s, family, &k1, &k2)?;
    let membership = displacement_check(&op, first_kind(family), None, s.tolerance)?;
    let mut checks: Vec<CheckRecord> = vec![(&membership).into()];
    if !membership.verdict.is_accept() {
        return Ok((checks, vec![], json!({ "operator_source": source, "recovered": false })));
    }
    let conj = s.conjugations.as_ref().map(|(a, b)| (a, b));
    let rec = recover_symbol(&op, family, conj, s.tolerance)?;
    checks.push(CheckRecord::relative("rebuild", rec.rebuild_residual, s.tolerance, fro(op.matrix())));
    let details = json!({
        "operator_source": source,
        "recovered": true,
        "symbol": to_value(&rec.symbol),
    });
    Ok((checks, vec![], details))
}

fn run_kernel(s: &Scenario) -> Result<Outputs> {
    let family = family_of(s)?;
    let (k1, k2) = spaces(s)?;
    let phi = require(&s.symbol, "symbol")?;
    let conj = s.conjugations.as_ref().map(|(a, b)| (a, b));
    let v = kernel_test(phi, &k1, &k2, family, conj, s.tolerance)?;
    let norm = phi.norm();
    let checks = vec![
        CheckRecord::relative("kernel_distance", v.distance, s.tolerance, norm),
        CheckRecord::relative("zero_operator", v.operator_norm, ZERO_OPERATOR_TOL, norm),
        CheckRecord::flag("verdicts_agree", v.agrees),
    ];
    Ok((checks, vec![], to_value(&v)))
}

fn collect(outcomes: Vec<RegistryOutcome>, prefix: &str, checks: &mut Vec<CheckRecord>, skipped: &mut Vec<SkippedCheck>) {
    for o in outcomes {
        match o {
            RegistryOutcome::Checked(r) => {
                let mut record: CheckRecord = (&r).into();
                record.name = format!("{prefix}{}", r.name);
                checks.push(record);
            }
            RegistryOutcome::Skipped { name, reason } => skipped.push(SkippedCheck {
                name: format!("{prefix}{name}"),
                reason,
            }),
        }
    }
}

fn run_registry(ctx: &TransformContext, name: &str, prefix: &str, checks: &mut Vec<CheckRecord>, skipped: &mut Vec<SkippedCheck>) -> Result<()> {
    if name == "all" {
        collect(verify_all(ctx)?, prefix, checks, skipped);
    } else {
        let r = verify_transform(name, ctx)?;
        let mut record: CheckRecord = (&r).into();
        record.name = format!("{prefix}{}", r.name);
        checks.push(record);
    }
    Ok(())
}

fn run_verify(s: &Scenario) -> Result<Outputs> {
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    let explicit = s.theta1.is_some() || s.symbol.is_some();
    if explicit {
        let ctx = TransformContext::new(TransformInputs {
            theta1: require(&s.theta1, "theta1")?.clone(),
            theta2: require(&s.theta2, "theta2")?.clone(),
            phi: require(&s.symbol, "symbol")?.clone(),
            conjugations: s.conjugations.clone(),
            crofoot: s.crofoot.clone(),
            order: s.trunc_order,
            threshold: s.tolerance,
        })?;
        run_registry(&ctx, &s.name, "", &mut checks, &mut skipped)?;
    }
    let trials = s.fuzz.map_or(0, |f| f.trials);
    if let Some(f) = s.fuzz {
        let mut sampler = Sampler::new(s.seed);
        for t in 0..f.trials {
            let ctx = TransformContext::new(random_inputs(&mut sampler, f.dim, f.max_degree, s))?;
            run_registry(&ctx, &s.name, &format!("fuzz[{t}]."), &mut checks, &mut skipped)?;
        }
    }
    if !explicit && trials == 0 {
        return Err(Error::MissingInput(
            "verify needs theta1 and symbol, or a `fuzz` batch".into(),
        ));
    }
    Ok((checks, skipped, json!({ "name": s.name, "fuzz_trials": trials })))
}

/// J-symmetric products, a Gaussian symbol and small Crofoot parameters.
fn random_inputs(s: &mut Sampler, d: usize, max_degree: usize, scenario: &Scenario) -> TransformInputs {
    let (j1, w1) = s.conjugation(d);
    let (j2, w2) = s.conjugation(d);
    let theta1: BlaschkePotapovProduct = s.j_symmetric_product(&w1, max_degree);
    let theta2 = s.j_symmetric_product(&w2, max_degree);
    let phi: MatrixLaurent = s.symbol(d, 3, scenario.trunc_order);
    let crofoot = (s.contraction(d), s.contraction(d));
    TransformInputs {
        theta1,
        theta2,
        phi,
        conjugations: Some((j1, j2)),
        crofoot: Some(crofoot),
        order: scenario.trunc_order,
        threshold: scenario.tolerance,
    }
}
