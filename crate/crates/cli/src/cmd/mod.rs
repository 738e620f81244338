pub mod blackwell;
pub mod cost;
pub mod gaussian;
pub mod knowledge;
pub mod learn;
pub mod misspec;
pub mod orders;
pub mod persuade;
pub mod signals;

use std::path::Path;

use infonomics_core::SignalStructure;

use crate::error::CliError;
use crate::model::{labels, read_file, Field, Label, Normalizer, SignalFile};

/// Signal file to a validated structure, renormalizing near-stochastic rows.
pub fn load_signal<T: Field>(norm: &Normalizer, path: &Path) -> Result<SignalStructure<T>, CliError> {
    let f: SignalFile = read_file(path)?;
    let matrix = norm.rows("signal", &f.matrix)?;
    Ok(SignalStructure::new(labels(&f.states), labels(&f.realizations), matrix)?)
}

/// Position of `key` among `names`, accepting a 0-based index when no name matches.
pub fn lookup(what: &str, names: &[String], key: &str) -> Result<usize, CliError> {
    if let Some(i) = names.iter().position(|n| n == key) {
        return Ok(i);
    }
    match key.parse::<usize>() {
        Ok(i) if i < names.len() => Ok(i),
        _ => Err(CliError::Validation(format!("unknown {what} '{key}' (known: {})", names.join(", ")))),
    }
}

pub fn label_index(what: &str, names: &[String], l: &Label) -> Result<usize, CliError> {
    names
        .iter()
        .position(|n| *n == l.0)
        .ok_or_else(|| CliError::Validation(format!("unknown {what} '{}'", l.0)))
}

/// Prior from a flag, or uniform over `n` states.
pub fn prior_flag<T: Field>(norm: &Normalizer, flag: Option<&str>, n: usize) -> Result<Vec<T>, CliError> {
    match flag {
        Some(text) => {
            let v = crate::model::num_list("prior", text)?;
            if v.len() != n {
                return Err(CliError::Validation(format!("prior has {} entries for {n} states", v.len())));
            }
            norm.probs("prior", &v)
        }
        None => Ok(vec![T::ratio(1, n as i64); n]),
    }
}

/// Calls the generic `$f` with `Rational` under `--exact` and `f64` otherwise.
macro_rules! with_field {
    ($ctx:expr, $f:ident, $($args:expr),*) => {
        if $ctx.exact {
            $f::<infonomics_core::Rational>($($args),*)
        } else {
            $f::<f64>($($args),*)
        }
    };
}
pub(crate) use with_field;
