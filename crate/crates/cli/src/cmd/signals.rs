use std::path::PathBuf;

use clap::Subcommand;
use infonomics_core::signals::{
    fairness_report, induced_posteriors, is_bayes_plausible, posterior_update, signal_from_posteriors, PopulationModel,
};
use infonomics_core::BeliefDistribution;
use serde_json::json;

use super::{load_signal, lookup, prior_flag, with_field};
use crate::error::CliError;
use crate::model::{json_mat, json_vec, read_file, BeliefsFile, Field, PopulationFile, FORMAT_VERSION};
use crate::output::{fields, matrix_table, show_vec, table, Report};
use crate::Ctx;

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Posterior after a sequence of observed realizations.
    Update {
        #[arg(long)]
        signal: PathBuf,
        #[arg(long)]
        prior: Option<String>,
        /// Comma-separated realization labels or indices, applied in order.
        #[arg(long)]
        obs: String,
    },
    /// Distribution of posteriors a signal induces.
    Induce {
        #[arg(long)]
        signal: PathBuf,
        #[arg(long)]
        prior: Option<String>,
    },
    /// Signal inducing a Bayes-plausible distribution of posteriors.
    Construct {
        #[arg(long)]
        posteriors: PathBuf,
        #[arg(long)]
        prior: String,
    },
    /// Error rates and calibration of a binary score across two groups.
    Fairness {
        #[arg(long)]
        population: PathBuf,
    },
}

pub fn run(ctx: &Ctx, c: Cmd) -> Result<Report, CliError> {
    with_field!(ctx, go, ctx, &c)
}

fn dist_table<T: Field>(labels: Option<&[String]>, weights: &[T], support: &[Vec<T>]) -> String {
    let rows: Vec<Vec<String>> = support
        .iter()
        .zip(weights)
        .enumerate()
        .map(|(i, (q, w))| {
            let name = labels.map_or_else(|| i.to_string(), |l| l[i].clone());
            vec![name, w.to_string(), show_vec(q)]
        })
        .collect();
    table(&["realization", "probability", "posterior"], &rows)
}

fn go<T: Field>(ctx: &Ctx, c: &Cmd) -> Result<Report, CliError> {
    match c {
        Cmd::Update { signal, prior, obs } => {
            let s = load_signal::<T>(&ctx.norm, signal)?;
            let mut belief: Vec<T> = prior_flag(&ctx.norm, prior.as_deref(), s.num_states())?;
            let mut rows = vec![vec!["0".into(), "-".into(), show_vec(&belief)]];
            let mut path = vec![json_vec(&belief)];
            for (t, o) in obs.split(',').map(str::trim).enumerate() {
                let x = lookup("realization", &s.realizations, o)?;
                belief = posterior_update(&belief, &s, x)?;
                rows.push(vec![(t + 1).to_string(), s.realizations[x].clone(), show_vec(&belief)]);
                path.push(json_vec(&belief));
            }
            Ok(Report::new(
                json!({"states": s.states, "posterior": json_vec(&belief), "path": path}),
                table(&["t", "observed", "belief"], &rows),
            ))
        }
        Cmd::Induce { signal, prior } => {
            let s = load_signal::<T>(&ctx.norm, signal)?;
            let p: Vec<T> = prior_flag(&ctx.norm, prior.as_deref(), s.num_states())?;
            let marg = s.marginal(&p);
            let mut labels = Vec::new();
            let mut support = Vec::new();
            let mut weights = Vec::new();
            for (x, m) in marg.iter().enumerate() {
                if *m > T::zero() {
                    labels.push(s.realizations[x].clone());
                    support.push(posterior_update(&p, &s, x)?);
                    weights.push(m.clone());
                }
            }
            let merged = induced_posteriors(&p, &s)?;
            let text = format!(
                "{}\nplausible  {}",
                dist_table(Some(&labels), &weights, &support),
                is_bayes_plausible(&p, &merged)
            );
            Ok(Report::new(
                json!({"realizations": labels, "weights": json_vec(&weights), "posteriors": json_mat(&support),
                       "distinct": {"weights": json_vec(&merged.weights), "support": json_mat(&merged.support)}}),
                text,
            ))
        }
        Cmd::Construct { posteriors, prior } => {
            let f: BeliefsFile = read_file(posteriors)?;
            let support = ctx.norm.rows("posterior", &f.support)?;
            let weights: Vec<T> = ctx.norm.probs("weights", &f.weights)?;
            let dist = BeliefDistribution::new(support, weights)?;
            let p: Vec<T> = prior_flag(&ctx.norm, Some(prior), dist.dim())?;
            if !is_bayes_plausible(&p, &dist) {
                return Err(CliError::Validation("posterior distribution does not average to the prior".into()));
            }
            let s = signal_from_posteriors(&p, &dist)?;
            Ok(Report::new(
                json!({"version": FORMAT_VERSION, "states": s.states, "realizations": s.realizations,
                       "matrix": json_mat(&s.matrix)}),
                matrix_table("state", &s.states, &s.realizations, &s.matrix),
            ))
        }
        Cmd::Fairness { population } => {
            let f: PopulationFile = read_file(population)?;
            let mut mass = Vec::with_capacity(f.mass.len());
            for cell in &f.mass {
                let g = |i: usize| -> Result<[T; 2], CliError> { Ok([cell[i][0].to()?, cell[i][1].to()?]) };
                mass.push([g(0)?, g(1)?]);
            }
            let flat: Vec<T> = mass.iter().flat_map(|c| c.iter().flat_map(|r| r.iter().cloned())).collect();
            let flat = ctx.norm.fix("population mass", flat)?;
            let mass: Vec<[[T; 2]; 2]> = flat
                .chunks(4)
                .map(|c| [[c[0].clone(), c[1].clone()], [c[2].clone(), c[3].clone()]])
                .collect();
            let rep = fairness_report(&PopulationModel { mass, score: f.score.clone() })?;
            let opt = |v: &Option<T>| v.as_ref().map_or("undefined".to_string(), |x| x.to_string());
            let rows: Vec<Vec<String>> = rep
                .groups
                .iter()
                .enumerate()
                .map(|(g, r)| {
                    vec![
                        g.to_string(),
                        r.base_rate.to_string(),
                        r.false_positive.to_string(),
                        r.false_negative.to_string(),
                        r.ppv.to_string(),
                        opt(&r.identity_residual),
                    ]
                })
                .collect();
            let text = format!(
                "{}\n{}",
                table(&["group", "base rate", "FP", "FN", "PPV", "identity residual"], &rows),
                fields(&[
                    ("equal FP", rep.equal_false_positive.to_string()),
                    ("equal FN", rep.equal_false_negative.to_string()),
                    ("calibrated", rep.calibrated.to_string()),
                    ("criteria held", rep.criteria_held().to_string()),
                ])
            );
            let groups: Vec<_> = rep
                .groups
                .iter()
                .map(|r| {
                    json!({"base_rate": r.base_rate.json(), "false_positive": r.false_positive.json(),
                           "false_negative": r.false_negative.json(), "ppv": r.ppv.json(),
                           "identity_residual": r.identity_residual.as_ref().map(Field::json)})
                })
                .collect();
            Ok(Report::new(
                json!({"groups": groups, "equal_false_positive": rep.equal_false_positive,
                       "equal_false_negative": rep.equal_false_negative, "calibrated": rep.calibrated,
                       "base_rates_differ": rep.base_rates_differ, "criteria_held": rep.criteria_held()}),
                text,
            ))
        }
    }
}
