//! Versioned JSON model files.
//!
//! Every file carries `"version": 1`. Unknown fields are rejected. Numbers may be
//! JSON numbers or strings such as `"3/7"`; in `--exact` mode both are read as
//! exact rationals, with decimals taken at face value.

use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use infonomics_core::scalar::parse_rational;
use infonomics_core::{Rational, Scalar};
use serde::de::{self, DeserializeOwned, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;

/// Number kept as text until the arithmetic mode is known.
#[derive(Clone, Debug, PartialEq)]
pub struct Num(pub String);

impl Num {
    pub fn to<T: Field>(&self) -> Result<T, CliError> {
        T::parse(&self.0).ok_or_else(|| CliError::Validation(format!("'{}' is not a number", self.0)))
    }
}

impl From<f64> for Num {
    fn from(v: f64) -> Self {
        Num(format!("{v}"))
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a string such as \"3/7\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Ok(Num(format!("{v}")))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(v.to_string()))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(v.to_string()))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                if parse_rational(v).is_none() {
                    return Err(E::custom(format!("'{v}' is not a number")));
                }
                Ok(Num(v.trim().to_string()))
            }
        }
        d.deserialize_any(V)
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.parse::<f64>() {
            Ok(v) if format!("{v}") == self.0 => s.serialize_f64(v),
            _ => s.serialize_str(&self.0),
        }
    }
}

/// State or realization label; numbers are accepted and kept as text.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Label(pub String);

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Label;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a label (string or integer)")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Label, E> {
                Ok(Label(v.to_string()))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Label, E> {
                Ok(Label(v.to_string()))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Label, E> {
                Ok(Label(v.to_string()))
            }
        }
        d.deserialize_any(V)
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.parse::<u64>() {
            Ok(v) if v.to_string() == self.0 => s.serialize_u64(v),
            _ => s.serialize_str(&self.0),
        }
    }
}

pub fn labels(v: &[Label]) -> Vec<String> {
    v.iter().map(|l| l.0.clone()).collect()
}

/// Scalar types the CLI can read and print.
pub trait Field: Scalar {
    fn parse(text: &str) -> Option<Self>;
    fn json(&self) -> Value;
}

impl Field for f64 {
    fn parse(text: &str) -> Option<Self> {
        text.trim().parse().ok().or_else(|| parse_rational(text).map(|r| r.to_f64_lossy()))
    }
    fn json(&self) -> Value {
        serde_json::Number::from_f64(*self).map_or_else(|| Value::String(self.to_string()), Value::Number)
    }
}

impl Field for Rational {
    fn parse(text: &str) -> Option<Self> {
        parse_rational(text)
    }
    fn json(&self) -> Value {
        Value::String(self.to_string())
    }
}

pub fn json_vec<T: Field>(v: &[T]) -> Value {
    Value::Array(v.iter().map(Field::json).collect())
}

pub fn json_mat<T: Field>(m: &[Vec<T>]) -> Value {
    Value::Array(m.iter().map(|r| json_vec(r)).collect())
}

/// Reads and type-checks a model file, reporting the failing field path and position.
pub fn read_file<F: DeserializeOwned + Versioned>(path: &Path) -> Result<F, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_text(&text).map_err(|e| match e {
        CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_text<F: DeserializeOwned + Versioned>(text: &str) -> Result<F, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: F = serde_path_to_error::deserialize(&mut *de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." || path.is_empty() {
            CliError::Validation(inner.to_string())
        } else {
            CliError::Validation(format!("field `{path}`: {inner}"))
        }
    })?;
    de.end().map_err(|e| CliError::Validation(e.to_string()))?;
    if file.version() != FORMAT_VERSION {
        return Err(CliError::Validation(format!(
            "unsupported format version {} (expected {FORMAT_VERSION})",
            file.version()
        )));
    }
    Ok(file)
}

pub trait Versioned {
    fn version(&self) -> u32;
}

macro_rules! versioned {
    ($($t:ty),*) => {$(
        impl Versioned for $t {
            fn version(&self) -> u32 {
                self.version
            }
        }
    )*};
}

/// Checks nonnegativity and unit sum; sums within `tol` of one are rescaled with a warning.
pub struct Normalizer {
    pub tol: f64,
}

impl Normalizer {
    pub fn probs<T: Field>(&self, what: &str, raw: &[Num]) -> Result<Vec<T>, CliError> {
        let v = raw.iter().map(Num::to::<T>).collect::<Result<Vec<T>, _>>()?;
        self.fix(what, v)
    }

    pub fn fix<T: Field>(&self, what: &str, v: Vec<T>) -> Result<Vec<T>, CliError> {
        if v.is_empty() {
            return Err(CliError::Validation(format!("{what} is empty")));
        }
        if let Some(i) = v.iter().position(|x| *x < T::zero()) {
            return Err(CliError::Validation(format!("{what} has negative entry {} at position {i}", v[i])));
        }
        let s = v.iter().fold(T::zero(), |a, b| a + b.clone());
        if s.approx_eq(&T::one()) {
            return Ok(v);
        }
        let gap = (s.to_f64_lossy() - 1.0).abs();
        if gap <= self.tol {
            eprintln!("warning: {what} sums to {s}; renormalized");
            return Ok(v.into_iter().map(|x| x / s.clone()).collect());
        }
        Err(CliError::Validation(format!("{what} sums to {s}, not 1 (tolerance {})", self.tol)))
    }

    pub fn rows<T: Field>(&self, what: &str, raw: &[Vec<Num>]) -> Result<Vec<Vec<T>>, CliError> {
        raw.iter().enumerate().map(|(i, r)| self.probs(&format!("{what} row {i}"), r)).collect()
    }
}

pub fn nums<T: Field>(raw: &[Num]) -> Result<Vec<T>, CliError> {
    raw.iter().map(Num::to::<T>).collect()
}

pub fn num_rows<T: Field>(raw: &[Vec<Num>]) -> Result<Vec<Vec<T>>, CliError> {
    raw.iter().map(|r| nums(r)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionFile {
    pub version: u32,
    pub states: Vec<Label>,
    /// Uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<Num>>,
    pub partitions: IndexMap<String, Vec<Vec<Label>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalFile {
    pub version: u32,
    pub states: Vec<Label>,
    pub realizations: Vec<Label>,
    /// `matrix[state][realization]`
    pub matrix: Vec<Vec<Num>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefsFile {
    pub version: u32,
    pub support: Vec<Vec<Num>>,
    pub weights: Vec<Num>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationFile {
    pub version: u32,
    /// `mass[covariate][group][type]`
    pub mass: Vec<[[Num; 2]; 2]>,
    pub score: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityFile {
    pub version: u32,
    pub grid: Vec<f64>,
    pub mass: Vec<Num>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    pub version: u32,
    pub thetas: Vec<f64>,
    /// Realization values; `0..k` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    /// `rows[theta][x]`
    pub rows: Vec<Vec<Num>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointFile {
    pub version: u32,
    pub dims: Vec<usize>,
    /// Row-major, last coordinate fastest.
    pub mass: Vec<Num>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<Label>>,
    /// `utility[action][state]`
    pub utility: Vec<Vec<Num>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaFile {
    pub version: u32,
    pub beta: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvFile {
    pub version: u32,
    pub params: Vec<f64>,
    pub prior: Vec<Num>,
    /// `densities[theta][x]`
    pub densities: Vec<Vec<Num>>,
    #[serde(default)]
    pub truth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    /// Second agent's prior, for merging.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior2: Option<Vec<Num>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KlsFile {
    pub version: u32,
    pub thetas: Vec<Num>,
    pub prior_a: Vec<Num>,
    pub prior_b: Vec<Num>,
    pub fine: Vec<Vec<Num>>,
    pub coarse: Vec<Vec<Num>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TwoAgentSpec {
    /// `pi[theta][i][j]`
    Tables { pi: Vec<Vec<Vec<f64>>> },
    Independent { phi: Vec<Vec<f64>>, psi: Vec<Vec<f64>> },
    Public { marginals: Vec<Vec<f64>> },
    Staggered { thetas: Vec<f64>, eps: f64, levels: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommonFile {
    pub version: u32,
    pub signals: TwoAgentSpec,
    pub prior: Vec<Num>,
    pub theta: usize,
    pub horizon: usize,
    pub q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_states: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prune: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcyFile {
    pub version: u32,
    pub prior_a: [f64; 2],
    pub gamma: [f64; 2],
    pub eps: f64,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BerkFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<Num>>,
    pub densities: Vec<Vec<Num>>,
    pub truth: Vec<Num>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectiveFile {
    pub version: u32,
    pub model: infonomics_core::misspec::SubjectiveModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub version: u32,
    pub game: infonomics_core::misspec::GameModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: u32,
    pub states: Vec<Label>,
    pub prior: Vec<Num>,
    pub actions: Vec<Label>,
    /// `u_receiver[action][state]`
    pub u_receiver: Vec<Vec<Num>>,
    pub u_sender: Vec<Vec<Num>>,
}

versioned!(
    PartitionFile,
    SignalFile,
    BeliefsFile,
    PopulationFile,
    DensityFile,
    FamilyFile,
    JointFile,
    ProblemFile,
    BetaFile,
    EnvFile,
    KlsFile,
    CommonFile,
    AcyFile,
    BerkFile,
    SubjectiveFile,
    GameFile,
    InstanceFile
);

/// Comma-separated numbers from a flag.
pub fn parse_list<T: Field>(flag: &str, text: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|s| T::parse(s).ok_or_else(|| CliError::Usage(format!("--{flag}: '{}' is not a number", s.trim()))))
        .collect()
}

pub fn num_list(flag: &str, text: &str) -> Result<Vec<Num>, CliError> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            parse_rational(s)
                .map(|_| Num(s.to_string()))
                .ok_or_else(|| CliError::Usage(format!("--{flag}: '{s}' is not a number")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_their_text() {
        let f: SignalFile = parse_text(
            r#"{"version":1,"states":["a",2],"realizations":["x","y"],"matrix":[[0.3,"7/10"],[1,0]]}"#,
        )
        .unwrap();
        assert_eq!(f.matrix[0][0].to::<Rational>().unwrap(), Rational::ratio(3, 10));
        assert_eq!(f.matrix[0][1].to::<f64>().unwrap(), 0.7);
        assert_eq!(f.states[1], Label("2".into()));
    }

    #[test]
    fn unknown_field_names_path() {
        let err = parse_text::<SignalFile>(
            r#"{"version":1,"states":["a"],"realizations":["x"],"matrix":[[1]],"extra":0}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
        let err = parse_text::<SignalFile>(r#"{"version":1,"states":["a"],"realizations":["x"],"matrix":[["a"]]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("matrix[0][0]"), "{err}");
    }

    #[test]
    fn version_is_checked() {
        let err = parse_text::<BetaFile>(r#"{"version":2,"beta":[[0]]}"#).unwrap_err();
        assert!(err.to_string().contains("version 2"));
    }

    #[test]
    fn tolerance_policy() {
        let n = Normalizer { tol: 1e-5 };
        let v: Vec<f64> = n.probs("prior", &[Num("0.5".into()), Num("0.499999".into())]).unwrap();
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(n.probs::<f64>("prior", &[Num("0.5".into()), Num("0.4".into())]).is_err());
        let exact: Vec<Rational> = n.probs("prior", &[Num("1/2".into()), Num("0.499999".into())]).unwrap();
        assert_eq!(exact.iter().fold(Rational::ratio(0, 1), |a, b| a + b), Rational::ratio(1, 1));
        assert!(n.probs::<f64>("prior", &[Num("-0.1".into()), Num("1.1".into())]).is_err());
    }

    fn round_trip<F: DeserializeOwned + Serialize + Versioned + PartialEq + fmt::Debug>(text: &str) {
        let a: F = parse_text(text).unwrap();
        let emitted = serde_json::to_string_pretty(&a).unwrap();
        let b: F = parse_text(&emitted).unwrap();
        assert_eq!(a, b, "{emitted}");
    }

    #[test]
    fn schema_round_trip() {
        round_trip::<PartitionFile>(include_str!("../tests/fixtures/partition.json"));
        round_trip::<SignalFile>(include_str!("../tests/fixtures/signal_q.json"));
        round_trip::<SignalFile>(include_str!("../tests/fixtures/near_stochastic.json"));
        round_trip::<InstanceFile>(include_str!("../tests/fixtures/prosecutor.json"));
        round_trip::<EnvFile>(include_str!("../tests/fixtures/env.json"));
        round_trip::<KlsFile>(include_str!("../tests/fixtures/kls.json"));
        round_trip::<CommonFile>(include_str!("../tests/fixtures/common.json"));
        round_trip::<BerkFile>(include_str!("../tests/fixtures/berk.json"));
        round_trip::<AcyFile>(include_str!("../tests/fixtures/acy.json"));
        round_trip::<SubjectiveFile>(include_str!("../tests/fixtures/researcher.json"));
        round_trip::<ProblemFile>(include_str!("../tests/fixtures/problem.json"));
        round_trip::<FamilyFile>(include_str!("../tests/fixtures/family.json"));
        round_trip::<DensityFile>(include_str!("../tests/fixtures/density_f.json"));
    }
}
