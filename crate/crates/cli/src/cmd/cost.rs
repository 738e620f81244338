use std::path::PathBuf;

use clap::{Subcommand, ValueEnum};
use infonomics_core::infocost::{entropy, inverse_square_beta, kl_base, pst_cost, ups_cost, Potential};
use infonomics_core::signals::induced_posteriors;
use serde_json::json;

use super::{load_signal, prior_flag};
use crate::error::CliError;
use crate::model::{parse_list, read_file, BetaFile};
use crate::output::{fields, Report};
use crate::Ctx;

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Shannon entropy in nats.
    Entropy {
        #[arg(long)]
        p: String,
    },
    /// Relative entropy `D(p || q)`.
    Kl {
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        #[arg(long, default_value_t = std::f64::consts::E)]
        base: f64,
    },
    /// Uniformly posterior-separable cost of a signal.
    Ups {
        #[arg(long)]
        prior: Option<String>,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::Entropy)]
        potential: Kind,
        /// State values for the variance potential; defaults to 0, 1, 2, ...
        #[arg(long)]
        values: Option<String>,
    },
    /// Prior-free log-likelihood-ratio cost of a signal.
    Pst {
        #[arg(long)]
        sigma: PathBuf,
        /// File with `beta[i][j]`.
        #[arg(long, conflicts_with = "values")]
        beta: Option<PathBuf>,
        /// State values; sets `beta[i][j] = 1/(v_i - v_j)^2`.
        #[arg(long)]
        values: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Kind {
    Entropy,
    Variance,
}

pub fn run(ctx: &Ctx, c: Cmd) -> Result<Report, CliError> {
    if ctx.exact {
        eprintln!("warning: --exact is not supported for cost commands; using floating point");
    }
    match c {
        Cmd::Entropy { p } => {
            let p: Vec<f64> = ctx.norm.fix("p", parse_list("p", &p)?)?;
            let h = entropy(&p)?;
            Ok(Report::new(json!({"entropy": h}), fields(&[("entropy", h.to_string())])))
        }
        Cmd::Kl { p, q, base } => {
            let p: Vec<f64> = ctx.norm.fix("p", parse_list("p", &p)?)?;
            let q: Vec<f64> = ctx.norm.fix("q", parse_list("q", &q)?)?;
            let d = kl_base(&p, &q, base)?;
            Ok(Report::new(json!({"kl": d, "base": base}), fields(&[("divergence", d.to_string())])))
        }
        Cmd::Ups { prior, sigma, potential, values } => {
            let s = load_signal::<f64>(&ctx.norm, &sigma)?;
            let n = s.num_states();
            let p: Vec<f64> = prior_flag(&ctx.norm, prior.as_deref(), n)?;
            let phi = match potential {
                Kind::Entropy => Potential::Entropy,
                Kind::Variance => match values {
                    Some(v) => Potential::Variance { values: parse_list("values", &v)? },
                    None => Potential::variance(n),
                },
            };
            let c = ups_cost(&phi, &p, &induced_posteriors(&p, &s)?)?;
            Ok(Report::new(json!({"cost": c}), fields(&[("cost", c.to_string())])))
        }
        Cmd::Pst { sigma, beta, values } => {
            let s = load_signal::<f64>(&ctx.norm, &sigma)?;
            let b = match (beta, values) {
                (Some(path), _) => read_file::<BetaFile>(&path)?.beta,
                (None, Some(v)) => inverse_square_beta(&parse_list::<f64>("values", &v)?),
                (None, None) => return Err(CliError::Usage("give --beta or --values".into())),
            };
            let c = pst_cost(&s, &b)?;
            Ok(Report::new(json!({"cost": c}), fields(&[("cost", c.to_string())])))
        }
    }
}
