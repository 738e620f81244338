use std::path::PathBuf;

use clap::Subcommand;
use infonomics_core::persuasion::{concavify_1d, optimal_signal, PersuasionInstance};
use serde_json::{json, Value};

use super::with_field;
use crate::error::CliError;
use crate::model::{json_mat, json_vec, labels, num_rows, read_file, Field, InstanceFile};
use crate::output::{fields, matrix_table, show_vec, table, Report};
use crate::Ctx;

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Sender-optimal signal by linear programming over obedient recommendations.
    Solve {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Concave envelope of the sender's value for a two-state instance.
    Envelope {
        #[arg(long)]
        instance: PathBuf,
    },
}

pub fn run(ctx: &Ctx, c: Cmd) -> Result<Report, CliError> {
    let path = match &c {
        Cmd::Solve { instance } | Cmd::Envelope { instance } => instance,
    };
    let f: InstanceFile = read_file(path)?;
    with_field!(ctx, go, ctx, &f, &c)
}

fn build<T: Field>(ctx: &Ctx, f: &InstanceFile) -> Result<PersuasionInstance<T>, CliError> {
    Ok(PersuasionInstance::new(
        labels(&f.states),
        ctx.norm.probs("prior", &f.prior)?,
        labels(&f.actions),
        num_rows(&f.u_receiver)?,
        num_rows(&f.u_sender)?,
    )?)
}

fn go<T: Field>(ctx: &Ctx, f: &InstanceFile, c: &Cmd) -> Result<Report, CliError> {
    let inst: PersuasionInstance<T> = build(ctx, f)?;
    match c {
        Cmd::Solve { .. } => {
            let s = optimal_signal(&inst)?;
            let recs: Vec<String> = s.recommendations.iter().map(|&a| inst.actions[a].clone()).collect();
            let post: Vec<Vec<String>> = recs
                .iter()
                .zip(s.posteriors.support.iter().zip(&s.posteriors.weights))
                .map(|(a, (q, w))| vec![a.clone(), w.to_string(), show_vec(q)])
                .collect();
            let text = format!(
                "{}\n\nsignal\n{}\n\n{}",
                fields(&[
                    ("value", s.value.to_string()),
                    ("no information", s.no_information.to_string()),
                    ("sender benefits", s.benefits().to_string()),
                ]),
                matrix_table("state", &s.signal.states, &s.signal.realizations, &s.signal.matrix),
                table(&["recommendation", "probability", "posterior"], &post)
            );
            Ok(Report::new(
                json!({"value": s.value.json(), "no_information": s.no_information.json(),
                       "benefits": s.benefits(),
                       "signal": {"states": s.signal.states, "realizations": s.signal.realizations,
                                  "matrix": json_mat(&s.signal.matrix)},
                       "recommendations": recs,
                       "posteriors": {"support": json_mat(&s.posteriors.support),
                                      "weights": json_vec(&s.posteriors.weights)}}),
                text,
            ))
        }
        Cmd::Envelope { .. } => {
            let e = concavify_1d(&inst)?;
            let pts = |v: &[(T, T)]| -> Value { Value::Array(v.iter().map(|(x, y)| json!([x.json(), y.json()])).collect()) };
            let prior_mu = inst.prior[0].clone();
            let at_prior = e.eval(&prior_mu)?;
            let rows: Vec<Vec<String>> = e.hull.iter().map(|(x, y)| vec![x.to_string(), y.to_string()]).collect();
            let text = format!(
                "belief is the probability of state {}\n\nbreakpoints  {}\n\n{}\n{}",
                inst.states[0],
                e.breakpoints.iter().map(|(x, _)| x.to_string()).collect::<Vec<_>>().join(", "),
                table(&["belief", "envelope"], &rows),
                fields(&[("prior", prior_mu.to_string()), ("value at prior", at_prior.to_string())])
            );
            Ok(Report::new(
                json!({"breakpoints": pts(&e.breakpoints), "hull": pts(&e.hull), "prior": prior_mu.json(),
                       "value_at_prior": at_prior.json()}),
                text,
            ))
        }
    }
}
