//! Declarative scenario files for the command-line runner.
//!
//! A scenario is one JSON object. Every validation failure is an
//! [`Error::Invalid`] whose field names the offending location, e.g.
//! `theta1.factors[0].frame`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::inner::{BlaschkePotapovProduct, ProductJson};
use crate::laurent::{matrix_from_json, ComplexJson, MatrixLaurent};
use crate::linalg::CMat;
use crate::operators::{DisplacementKind, Family, ShiftInvarianceKind, DEFAULT_THRESHOLD};
use crate::symmetry::{Conjugation, ConjugationJson, CrofootData, CrofootJson};

/// The only scenario schema this build understands.
pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_TRUNC_ORDER: usize = 64;
pub const MIN_TRUNC_ORDER: usize = 8;
pub const TOLERANCE_RANGE: (f64, f64) = (1e-14, 1e-2);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Space,
    Build,
    Check,
    Recover,
    Kernel,
    Verify,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Space,
        Command::Build,
        Command::Check,
        Command::Recover,
        Command::Kernel,
        Command::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Space => "space",
            Command::Build => "build",
            Command::Check => "check",
            Command::Recover => "recover",
            Command::Kernel => "kernel",
            Command::Verify => "verify",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::invalid("command", format!("unknown command `{s}`")))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One requested membership test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    Displacement(DisplacementKind),
    ShiftInvariance(ShiftInvarianceKind),
}

impl CheckKind {
    pub fn family(self) -> Family {
        match self {
            CheckKind::Displacement(k) if k.is_hankel() => Family::Hankel,
            CheckKind::Displacement(_) => Family::Toeplitz,
            CheckKind::ShiftInvariance(k) => k.family,
        }
    }
}

impl FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse()
            .map(CheckKind::Displacement)
            .or_else(|_| s.parse().map(CheckKind::ShiftInvariance))
            .map_err(|_| Error::UnknownKind(s.to_string()))
    }
}

/// Settings for a seeded batch of random registry instances.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fuzz {
    pub trials: usize,
    #[serde(default = "default_fuzz_dim")]
    pub dim: usize,
    #[serde(default = "default_fuzz_degree")]
    pub max_degree: usize,
}

fn default_fuzz_dim() -> usize {
    2
}

fn default_fuzz_degree() -> usize {
    4
}

/// Validated scenario. Optional inputs are checked only for shape here; whether a
/// command has what it needs is decided when it runs.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub command: Option<Command>,
    pub trunc_order: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub theta1: Option<BlaschkePotapovProduct>,
    pub theta2: Option<BlaschkePotapovProduct>,
    pub conjugations: Option<(Conjugation, Conjugation)>,
    pub crofoot: Option<(CrofootData, CrofootData)>,
    pub symbol: Option<MatrixLaurent>,
    pub operator: Option<CMat>,
    pub family: Option<Family>,
    pub kinds: Vec<CheckKind>,
    pub name: String,
    pub space: SpaceChoice,
    pub modifiers: Option<(CMat, CMat)>,
    pub fuzz: Option<Fuzz>,
}

/// Which inner function the `space` command describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceChoice {
    Theta1,
    Theta2,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub tolerance: Option<f64>,
    pub trunc_order: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema_version: Option<Value>,
    command: Option<String>,
    trunc_order: Option<usize>,
    tolerance: Option<f64>,
    seed: Option<u64>,
    theta1: Option<Value>,
    theta2: Option<Value>,
    #[serde(rename = "J1")]
    j1: Option<Value>,
    #[serde(rename = "J2")]
    j2: Option<Value>,
    #[serde(rename = "W1")]
    w1: Option<Value>,
    #[serde(rename = "W2")]
    w2: Option<Value>,
    symbol: Option<Value>,
    operator: Option<Value>,
    family: Option<String>,
    kind: Option<Value>,
    name: Option<String>,
    space: Option<String>,
    modifiers: Option<Value>,
    fuzz: Option<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModifiersJson {
    x1: Vec<Vec<ComplexJson>>,
    x2: Vec<Vec<ComplexJson>>,
}

fn typed<T: DeserializeOwned>(value: Value, field: &str) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::invalid(field, e.to_string()))
}

fn product(value: Value, field: &str) -> Result<BlaschkePotapovProduct> {
    typed::<ProductJson>(value, field)?
        .build()
        .map_err(|e| match e {
            Error::Invalid { .. } => e.within(field),
            other => Error::invalid(field, other.to_string()),
        })
}

fn matrix(value: Value, field: &str) -> Result<CMat> {
    matrix_from_json(&typed::<Vec<Vec<ComplexJson>>>(value, field)?, field)
}

/// Build a conjugation or Crofoot parameter, prefixing its field path.
fn located<T>(built: Result<T>, field: &str) -> Result<T> {
    built.map_err(|e| match e {
        Error::Invalid { .. } => e.within(field),
        other => Error::invalid(field, other.to_string()),
    })
}

fn pair<T: Clone>(first: Option<T>, second: Option<T>, names: (&str, &str)) -> Result<Option<(T, T)>> {
    match (first, second) {
        (None, None) => Ok(None),
        (Some(a), None) => Ok(Some((a.clone(), a))),
        (Some(a), Some(b)) => Ok(Some((a, b))),
        (None, Some(_)) => Err(Error::invalid(names.0, format!("required when {} is given", names.1))),
    }
}

impl Scenario {
    /// Read, parse and validate a scenario file, then apply the overrides.
    pub fn load(path: &Path, overrides: Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid("scenario", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: Overrides) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::invalid("scenario", e.to_string()))?;
        if !value.is_object() {
            return Err(Error::invalid("scenario", "top level must be a JSON object"));
        }
        let raw: RawScenario = typed(value, "scenario")?;
        match &raw.schema_version {
            None => return Err(Error::invalid("schema_version", "missing")),
            Some(v) if v.as_u64() == Some(SCHEMA_VERSION as u64) => {}
            Some(v) => {
                return Err(Error::invalid(
                    "schema_version",
                    format!("unsupported version {v}; this build reads version {SCHEMA_VERSION}"),
                ))
            }
        }

        let trunc_order = overrides
            .trunc_order
            .or(raw.trunc_order)
            .unwrap_or(DEFAULT_TRUNC_ORDER);
        if trunc_order < MIN_TRUNC_ORDER {
            return Err(Error::invalid(
                "trunc_order",
                format!("{trunc_order} is below the minimum {MIN_TRUNC_ORDER}"),
            ));
        }
        let tolerance = overrides.tolerance.or(raw.tolerance).unwrap_or(DEFAULT_THRESHOLD);
        let (lo, hi) = TOLERANCE_RANGE;
        if !(lo..=hi).contains(&tolerance) {
            return Err(Error::invalid(
                "tolerance",
                format!("{tolerance:e} lies outside [{lo:e}, {hi:e}]"),
            ));
        }

        let command = raw.command.as_deref().map(str::parse).transpose()?;
        let theta1 = raw.theta1.map(|v| product(v, "theta1")).transpose()?;
        let theta2 = raw.theta2.map(|v| product(v, "theta2")).transpose()?;
        let theta2 = match (theta2, &theta1) {
            (None, Some(t1)) => Some(t1.clone()),
            (t2, _) => t2,
        };
        let dim = theta1.as_ref().map(|t| t.dim());
        if let (Some(t1), Some(t2)) = (&theta1, &theta2) {
            if t1.dim() != t2.dim() {
                return Err(Error::invalid("theta2.dim", format!("must equal theta1.dim = {}", t1.dim())));
            }
        }
        let check_dim = |field: &str, d: usize| -> Result<()> {
            match dim {
                Some(expected) if expected != d => {
                    Err(Error::invalid(field, format!("acts on C^{d} but theta1 acts on C^{expected}")))
                }
                _ => Ok(()),
            }
        };

        let j1 = raw
            .j1
            .map(|v| located(typed::<ConjugationJson>(v, "J1")?.build(), "J1"))
            .transpose()?;
        let j2 = raw
            .j2
            .map(|v| located(typed::<ConjugationJson>(v, "J2")?.build(), "J2"))
            .transpose()?;
        let conjugations = pair(j1, j2, ("J1", "J2"))?;
        if let Some((a, b)) = &conjugations {
            check_dim("J1", a.dim())?;
            check_dim("J2", b.dim())?;
        }
        let w1 = raw
            .w1
            .map(|v| located(typed::<CrofootJson>(v, "W1")?.build(), "W1"))
            .transpose()?;
        let w2 = raw
            .w2
            .map(|v| located(typed::<CrofootJson>(v, "W2")?.build(), "W2"))
            .transpose()?;
        let crofoot = pair(w1, w2, ("W1", "W2"))?;
        if let Some((a, b)) = &crofoot {
            check_dim("W1", a.dim())?;
            check_dim("W2", b.dim())?;
        }

        let symbol = match raw.symbol {
            Some(v) => {
                let s: MatrixLaurent = typed(v, "symbol")?;
                check_dim("symbol.dim", s.dim())?;
                if s.support_order() > trunc_order {
                    return Err(Error::invalid(
                        "symbol.coeffs",
                        format!("reaches index {} beyond trunc_order {trunc_order}", s.support_order()),
                    ));
                }
                Some(s.truncate(trunc_order))
            }
            None => None,
        };
        let operator = raw.operator.map(|v| matrix(v, "operator")).transpose()?;
        let family = raw
            .family
            .as_deref()
            .map(|f| f.parse::<Family>().map_err(|_| Error::invalid("family", format!("unknown family `{f}`"))))
            .transpose()?;
        let kinds = match raw.kind {
            None => vec![],
            Some(Value::String(s)) => vec![s.parse().map_err(|e: Error| Error::invalid("kind", e.to_string()))?],
            Some(Value::Array(items)) => items
                .into_iter()
                .enumerate()
                .map(|(i, item)| {
                    let field = format!("kind[{i}]");
                    let s: String = typed(item, &field)?;
                    s.parse().map_err(|e: Error| Error::invalid(&field, e.to_string()))
                })
                .collect::<Result<_>>()?,
            Some(_) => return Err(Error::invalid("kind", "must be a string or a list of strings")),
        };
        let space = match raw.space.as_deref() {
            None | Some("theta1") => SpaceChoice::Theta1,
            Some("theta2") => SpaceChoice::Theta2,
            Some(other) => return Err(Error::invalid("space", format!("expected theta1 or theta2, got `{other}`"))),
        };
        let modifiers = match raw.modifiers {
            Some(v) => {
                let m: ModifiersJson = typed(v, "modifiers")?;
                Some((
                    matrix_from_json(&m.x1, "modifiers.x1")?,
                    matrix_from_json(&m.x2, "modifiers.x2")?,
                ))
            }
            None => None,
        };
        let fuzz = raw.fuzz.map(|v| typed::<Fuzz>(v, "fuzz")).transpose()?;
        if let Some(f) = &fuzz {
            if !(1..=3).contains(&f.dim) {
                return Err(Error::invalid("fuzz.dim", "must be 1, 2 or 3"));
            }
            if f.max_degree == 0 || f.max_degree > crate::random::MAX_DIM_K {
                return Err(Error::invalid(
                    "fuzz.max_degree",
                    format!("must lie in 1..={}", crate::random::MAX_DIM_K),
                ));
            }
        }

        Ok(Scenario {
            command,
            trunc_order,
            tolerance,
            seed: overrides.seed.or(raw.seed).unwrap_or(0),
            theta1,
            theta2,
            conjugations,
            crofoot,
            symbol,
            operator,
            family,
            kinds,
            name: raw.name.unwrap_or_else(|| "all".into()),
            space,
            modifiers,
            fuzz,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const Z2: &str = r#"{"dim": 1, "factors": [{"a": [0, 0]}, {"a": [0, 0]}]}"#;

    fn scenario(extra: &str) -> String {
        format!(r#"{{"schema_version": 1, "theta1": {Z2}, "theta2": {Z2}{extra}}}"#)
    }

    #[test]
    fn minimal_check_scenario_parses() {
        let text = scenario(
            r#", "command": "check", "kind": "H1",
               "symbol": {"dim": 1, "coeffs": {"-1": [[[1, 0]]]}, "trunc_order": 4}"#,
        );
        let s = Scenario::parse(&text, Overrides::default()).unwrap();
        assert_eq!(s.command, Some(Command::Check));
        assert_eq!(s.kinds, vec![CheckKind::Displacement(DisplacementKind::H1)]);
        assert_eq!(s.trunc_order, DEFAULT_TRUNC_ORDER);
        assert_eq!(s.symbol.unwrap().order(), DEFAULT_TRUNC_ORDER);
    }

    #[test]
    fn bad_frame_names_its_field() {
        let text = r#"{"schema_version": 1,
            "theta1": {"dim": 2, "factors": [{"a": [0, 0], "frame": [[1, 0], [1, 0]]}]}}"#;
        match Scenario::parse(text, Overrides::default()) {
            Err(Error::Invalid { field, .. }) => assert_eq!(field, "theta1.factors[0].frame"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tolerance_out_of_range_is_rejected() {
        let err = Scenario::parse(&scenario(r#", "tolerance": 1.0"#), Overrides::default()).unwrap_err();
        assert!(matches!(err, Error::Invalid { ref field, .. } if field == "tolerance"), "{err}");
    }

    #[test]
    fn unknown_schema_version_is_rejected() {
        let text = format!(r#"{{"schema_version": 2, "theta1": {Z2}}}"#);
        let err = Scenario::parse(&text, Overrides::default()).unwrap_err();
        assert!(matches!(err, Error::Invalid { ref field, .. } if field == "schema_version"));
        let missing = format!(r#"{{"theta1": {Z2}}}"#);
        assert!(Scenario::parse(&missing, Overrides::default()).is_err());
    }

    #[test]
    fn overrides_win_and_are_validated() {
        let o = Overrides {
            tolerance: Some(1e-6),
            trunc_order: Some(16),
            seed: Some(9),
        };
        let s = Scenario::parse(&scenario(r#", "tolerance": 1e-9, "seed": 3"#), o).unwrap();
        assert_eq!((s.tolerance, s.trunc_order, s.seed), (1e-6, 16, 9));
        let small = Overrides {
            trunc_order: Some(4),
            ..Overrides::default()
        };
        assert!(Scenario::parse(&scenario(""), small).is_err());
    }

    #[test]
    fn unknown_fields_and_kinds_are_rejected() {
        assert!(Scenario::parse(&scenario(r#", "thetta": 1"#), Overrides::default()).is_err());
        let err = Scenario::parse(&scenario(r#", "kind": ["H1", "H9"]"#), Overrides::default()).unwrap_err();
        assert!(matches!(err, Error::Invalid { ref field, .. } if field == "kind[1]"));
    }

    #[test]
    fn symbol_beyond_the_window_is_rejected() {
        let text = scenario(
            r#", "trunc_order": 8, "symbol": {"dim": 1, "coeffs": {"9": [[[1, 0]]]}, "trunc_order": 9}"#,
        );
        assert!(Scenario::parse(&text, Overrides::default()).is_err());
    }

    #[test]
    fn second_conjugation_defaults_to_the_first() {
        let s = Scenario::parse(&scenario(r#", "J1": {"U": [[1]]}"#), Overrides::default()).unwrap();
        let (a, b) = s.conjugations.unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert!(Scenario::parse(&scenario(r#", "J2": {"U": [[1]]}"#), Overrides::default()).is_err());
    }
}
