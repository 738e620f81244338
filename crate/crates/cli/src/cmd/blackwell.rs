use std::path::PathBuf;

use clap::Subcommand;
use infonomics_core::blackwell::{blackwell_compare, decision_value, garbling_test, mps_test};
use infonomics_core::signals::induced_posteriors;
use infonomics_core::{DecisionProblem, GarblingCertificate, SignalStructure};
use serde_json::{json, Value};

use super::{load_signal, prior_flag, with_field};
use crate::error::CliError;
use crate::model::{json_mat, json_vec, labels, num_rows, read_file, Field, ProblemFile};
use crate::output::{fields, matrix_table, show_vec, table, Report};
use crate::Ctx;

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Blackwell relation between two signals, with garbling certificates.
    Compare {
        #[arg(long)]
        prior: Option<String>,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long)]
        sigma2: PathBuf,
    },
    /// Kernel `M` with `sigma · M = sigma2`, if one exists.
    Garble {
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long)]
        sigma2: PathBuf,
    },
    /// Value of a signal in a decision problem.
    Value {
        #[arg(long)]
        prior: Option<String>,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long)]
        problem: PathBuf,
    },
    /// Whether the posteriors of `sigma` are a mean-preserving spread of those of `sigma2`.
    Mps {
        #[arg(long)]
        prior: Option<String>,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long)]
        sigma2: PathBuf,
    },
}

pub fn run(ctx: &Ctx, c: Cmd) -> Result<Report, CliError> {
    with_field!(ctx, go, ctx, &c)
}

fn cert_json<T: Field>(c: &Option<GarblingCertificate<T>>) -> Value {
    c.as_ref().map_or(Value::Null, |c| json!({"kernel": json_mat(&c.kernel), "residual": c.residual.json()}))
}

fn kernel_text<T: Field>(title: &str, from: &SignalStructure<T>, to: &SignalStructure<T>, k: &[Vec<T>]) -> String {
    format!("{title}\n{}", matrix_table("from \\ to", &from.realizations, &to.realizations, k))
}

fn go<T: Field>(ctx: &Ctx, c: &Cmd) -> Result<Report, CliError> {
    match c {
        Cmd::Compare { prior, sigma, sigma2 } => {
            let (a, b) = (load_signal::<T>(&ctx.norm, sigma)?, load_signal::<T>(&ctx.norm, sigma2)?);
            let p: Vec<T> = prior_flag(&ctx.norm, prior.as_deref(), a.num_states())?;
            let r = blackwell_compare(&p, &a, &b)?;
            let mut text = fields(&[
                ("relation", format!("{:?}", r.relation)),
                ("forward residual", r.forward_residual.to_string()),
                ("reverse residual", r.reverse_residual.to_string()),
            ]);
            if let Some(k) = &r.first_dominates {
                text.push_str(&format!("\n\n{}", kernel_text("sigma2 = sigma · M", &a, &b, &k.kernel)));
            }
            if let Some(k) = &r.second_dominates {
                text.push_str(&format!("\n\n{}", kernel_text("sigma = sigma2 · M", &b, &a, &k.kernel)));
            }
            Ok(Report::new(
                json!({"relation": format!("{:?}", r.relation), "forward_residual": r.forward_residual.json(),
                       "reverse_residual": r.reverse_residual.json(),
                       "first_dominates": cert_json(&r.first_dominates),
                       "second_dominates": cert_json(&r.second_dominates)}),
                text,
            ))
        }
        Cmd::Garble { sigma, sigma2 } => {
            let (a, b) = (load_signal::<T>(&ctx.norm, sigma)?, load_signal::<T>(&ctx.norm, sigma2)?);
            let cert = garbling_test(&a, &b)?;
            let text = match &cert {
                Some(k) => format!(
                    "garbling  true\nresidual  {}\n\n{}",
                    k.residual,
                    kernel_text("kernel", &a, &b, &k.kernel)
                ),
                None => "garbling  false".into(),
            };
            Ok(Report::new(json!({"garbling": cert.is_some(), "certificate": cert_json(&cert)}), text))
        }
        Cmd::Value { prior, sigma, problem } => {
            let s = load_signal::<T>(&ctx.norm, sigma)?;
            let p: Vec<T> = prior_flag(&ctx.norm, prior.as_deref(), s.num_states())?;
            let f: ProblemFile = read_file(problem)?;
            let u: Vec<Vec<T>> = num_rows(&f.utility)?;
            let d = match &f.actions {
                Some(a) => DecisionProblem::new(labels(a), u)?,
                None => DecisionProblem::from_table(u)?,
            };
            let v = decision_value(&p, &s, &d)?;
            let policy: Vec<Vec<String>> = s
                .realizations
                .iter()
                .zip(&v.policy)
                .map(|(x, a)| vec![x.clone(), a.map_or("-".into(), |a| d.actions[a].clone())])
                .collect();
            let text = format!(
                "{}\n\n{}",
                fields(&[
                    ("value", v.value.to_string()),
                    ("with signal", v.gross.to_string()),
                    ("prior only", v.prior_value.to_string())
                ]),
                table(&["realization", "action"], &policy)
            );
            Ok(Report::new(
                json!({"value": v.value.json(), "gross": v.gross.json(), "prior_value": v.prior_value.json(),
                       "policy": v.policy}),
                text,
            ))
        }
        Cmd::Mps { prior, sigma, sigma2 } => {
            let (a, b) = (load_signal::<T>(&ctx.norm, sigma)?, load_signal::<T>(&ctx.norm, sigma2)?);
            let p: Vec<T> = prior_flag(&ctx.norm, prior.as_deref(), a.num_states())?;
            let (fa, fb) = (induced_posteriors(&p, &a)?, induced_posteriors(&p, &b)?);
            let k = mps_test(&fa, &fb)?;
            let text = match &k {
                Some(k) => {
                    let rows: Vec<String> = k.coarse.support.iter().map(|q| show_vec(q)).collect();
                    let cols: Vec<String> = k.fine.support.iter().map(|q| show_vec(q)).collect();
                    format!("spread  true\n\n{}", matrix_table("coarse \\ fine", &rows, &cols, &k.kernel))
                }
                None => "spread  false".into(),
            };
            let rec = k.as_ref().map_or(Value::Null, |k| {
                json!({"coarse": {"support": json_mat(&k.coarse.support), "weights": json_vec(&k.coarse.weights)},
                       "fine": {"support": json_mat(&k.fine.support), "weights": json_vec(&k.fine.weights)},
                       "kernel": json_mat(&k.kernel)})
            });
            Ok(Report::new(json!({"spread": k.is_some(), "certificate": rec}), text))
        }
    }
}
