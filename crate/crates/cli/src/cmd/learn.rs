use std::path::{Path, PathBuf};

use clap::Subcommand;
use infonomics_core::learning::{
    common_learning_sim, consistency_sim, contagion_diagnostics, kls_disagreement_check, merging_sim,
    CommonLearningOptions, LearningEnvironment, QuantileRow, TwoAgentSignalModel,
};
use infonomics_core::SignalStructure;
use serde_json::json;

use super::with_field;
use crate::error::CliError;
use crate::model::{nums, read_file, CommonFile, EnvFile, Field, KlsFile, TwoAgentSpec};
use crate::output::{fields, table, Report};
use crate::Ctx;

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Posterior mass on the true parameter across simulated paths.
    Consistency {
        #[arg(long)]
        env: PathBuf,
        #[arg(long, default_value_t = 1000)]
        paths: usize,
        /// Horizon; defaults to the file's `horizon`, else 100.
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
    },
    /// Predictive gap between two agents with different priors.
    Merge {
        #[arg(long)]
        env: PathBuf,
        #[arg(long, default_value_t = 1000)]
        paths: usize,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value_t = 1)]
        depth: usize,
    },
    /// Exact cross-expectation chain for a signal and its garbling.
    Kls {
        #[arg(long)]
        model: PathBuf,
    },
    /// Probabilities of individual and common q-belief after a fixed horizon.
    Common {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 50)]
        k_max: usize,
    },
}

fn load_env(ctx: &Ctx, path: &Path) -> Result<(EnvFile, LearningEnvironment), CliError> {
    let f: EnvFile = read_file(path)?;
    let prior = ctx.norm.probs("prior", &f.prior)?;
    let dens = ctx.norm.rows("densities", &f.densities)?;
    let env = LearningEnvironment::new(f.params.clone(), prior, dens, f.truth, f.horizon.unwrap_or(100))?;
    Ok((f, env))
}

fn trajectory_table(rows: &[QuantileRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.t.to_string(), format!("{:.6}", r.q10), format!("{:.6}", r.median), format!("{:.6}", r.q90)])
        .collect();
    table(&["t", "q10", "median", "q90"], &body)
}

pub fn run(ctx: &Ctx, c: Cmd) -> Result<Report, CliError> {
    match &c {
        Cmd::Consistency { env, paths, t, delta } => {
            let (_, e) = load_env(ctx, env)?;
            let r = consistency_sim(&e, *paths, t.unwrap_or(e.horizon), *delta, ctx.seed)?;
            let text = format!(
                "{}\n\n{}",
                fields(&[
                    ("paths", r.paths.to_string()),
                    ("horizon", r.horizon.to_string()),
                    ("fraction above 1 - delta", format!("{:.6}", r.fraction)),
                ]),
                trajectory_table(&r.trajectory)
            );
            Ok(Report::new(serde_json::to_value(&r).expect("plain record"), text))
        }
        Cmd::Merge { env, paths, t, depth } => {
            let (f, e) = load_env(ctx, env)?;
            let p2 = f.prior2.as_ref().ok_or_else(|| CliError::Validation("environment needs `prior2`".into()))?;
            let p2: Vec<f64> = ctx.norm.probs("prior2", p2)?;
            let r = merging_sim(&e, &p2, *paths, t.unwrap_or(e.horizon), *depth, ctx.seed)?;
            let text = format!(
                "{}\n\n{}",
                fields(&[("paths", r.paths.to_string()), ("depth", r.depth.to_string())]),
                trajectory_table(&r.trajectory)
            );
            Ok(Report::new(serde_json::to_value(&r).expect("plain record"), text))
        }
        Cmd::Kls { model } => {
            let f: KlsFile = read_file(model)?;
            with_field!(ctx, kls, ctx, &f)
        }
        Cmd::Common { model, k_max } => {
            if ctx.exact {
                eprintln!("warning: --exact is not supported for common learning; using floating point");
            }
            let f: CommonFile = read_file(model)?;
            let m = match &f.signals {
                TwoAgentSpec::Tables { pi } => TwoAgentSignalModel::from_tables(pi)?,
                TwoAgentSpec::Independent { phi, psi } => TwoAgentSignalModel::conditionally_independent(phi, psi)?,
                TwoAgentSpec::Public { marginals } => TwoAgentSignalModel::public(marginals)?,
                TwoAgentSpec::Staggered { thetas, eps, levels } => TwoAgentSignalModel::staggered(thetas, *eps, *levels)?,
            };
            let prior: Vec<f64> = ctx.norm.probs("prior", &f.prior)?;
            let mut opts = CommonLearningOptions { k_max: *k_max, ..Default::default() };
            if let Some(n) = f.max_states {
                opts.max_states = n;
            }
            if let Some(p) = f.prune {
                opts.prune = p;
            }
            let r = common_learning_sim(&m, &prior, f.theta, f.horizon, f.q, opts, Some(ctx.seed))?;
            let diag = contagion_diagnostics(&m, f.theta, 10)?;
            let mut pairs = vec![
                ("horizon", r.horizon.to_string()),
                ("q", r.q.to_string()),
                ("agent 1 q-believes", format!("{:.6}", r.individual[0])),
                ("agent 2 q-believes", format!("{:.6}", r.individual[1])),
                ("both q-believe", format!("{:.6}", r.both)),
                ("common q-belief", format!("{:.6}", r.common.abs())),
                ("iterations", r.iterations.to_string()),
                ("stabilized", r.stabilized.to_string()),
                ("histories", r.histories.to_string()),
                ("dropped mass", format!("{:.3e}", r.dropped_mass)),
            ];
            if let Some(s) = r.sampled {
                pairs.push(("sampled path", format!("{} {} {}", s[0], s[1], s[2])));
            }
            let mut rec = serde_json::to_value(&r).expect("plain record");
            rec["contagion"] = serde_json::to_value(&diag).expect("plain record");
            Ok(Report::new(rec, fields(&pairs)))
        }
    }
}

fn kls<T: Field>(ctx: &Ctx, f: &KlsFile) -> Result<Report, CliError> {
    let thetas: Vec<T> = nums(&f.thetas)?;
    let pa: Vec<T> = ctx.norm.probs("prior_a", &f.prior_a)?;
    let pb: Vec<T> = ctx.norm.probs("prior_b", &f.prior_b)?;
    let fine = SignalStructure::from_matrix(ctx.norm.rows("fine", &f.fine)?)?;
    let coarse = SignalStructure::from_matrix(ctx.norm.rows("coarse", &f.coarse)?)?;
    let r = kls_disagreement_check(&thetas, &pa, &pb, &fine, &coarse)?;
    let text = fields(&[
        ("mu_A", r.mu_a.to_string()),
        ("mu_AB fine", r.mu_ab_fine.to_string()),
        ("mu_AB coarse", r.mu_ab_coarse.to_string()),
        ("mu_B", r.mu_b.to_string()),
        ("mu_BA fine", r.mu_ba_fine.to_string()),
        ("mu_BA coarse", r.mu_ba_coarse.to_string()),
        ("A-side chain", r.ab_chain_holds.to_string()),
        ("B-side chain", r.ba_chain_holds.to_string()),
    ]);
    Ok(Report::new(
        json!({"mu_a": r.mu_a.json(), "mu_b": r.mu_b.json(), "mu_ab_fine": r.mu_ab_fine.json(),
               "mu_ab_coarse": r.mu_ab_coarse.json(), "mu_ba_fine": r.mu_ba_fine.json(),
               "mu_ba_coarse": r.mu_ba_coarse.json(), "ab_chain_holds": r.ab_chain_holds,
               "ba_chain_holds": r.ba_chain_holds}),
        text,
    ))
}
