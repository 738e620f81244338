use clap::Subcommand;
use infonomics_core::gaussian::{
    career_concerns_effort, coordination_equilibrium, data_sharing_analysis, data_sharing_boundary,
    ScalarGaussianModel,
};
use serde_json::json;

use crate::error::CliError;
use crate::output::{fields, table, Report};
use crate::Ctx;

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Posterior of a normal parameter after one noisy observation.
    Posterior {
        #[arg(long, allow_hyphen_values = true)]
        mu: f64,
        #[arg(long)]
        var_theta: f64,
        #[arg(long)]
        var_eps: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
    },
    /// Equilibrium effort when output reveals talent plus effort plus noise.
    Career {
        #[arg(long, default_value_t = 1.0)]
        var_theta: f64,
        #[arg(long, default_value_t = 1.0)]
        var_eps: f64,
    },
    /// Linear equilibrium of the two-player beauty contest.
    Coordination {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        mu: f64,
        #[arg(long)]
        var_theta: f64,
        #[arg(long)]
        var_eps: f64,
        #[arg(long)]
        beta: f64,
    },
    /// Payments sustaining data-sharing equilibria with correlated types.
    Datasharing {
        #[arg(long, allow_hyphen_values = true)]
        rho: f64,
        #[arg(long, default_value_t = 1.0)]
        v: f64,
    },
}

pub fn run(_ctx: &Ctx, c: Cmd) -> Result<Report, CliError> {
    if _ctx.exact {
        eprintln!("warning: --exact is not supported for gaussian commands; using floating point");
    }
    match c {
        Cmd::Posterior { mu, var_theta, var_eps, x } => {
            let m = ScalarGaussianModel::new(mu, var_theta, var_eps)?;
            let p = m.posterior(x);
            Ok(Report::new(
                json!({"mean": p.mean, "variance": p.variance, "gain": m.gain()}),
                fields(&[
                    ("posterior mean", p.mean.to_string()),
                    ("posterior variance", p.variance.to_string()),
                    ("gain", m.gain().to_string()),
                ]),
            ))
        }
        Cmd::Career { var_theta, var_eps } => {
            let a = career_concerns_effort(var_theta, var_eps)?;
            Ok(Report::new(json!({"effort": a}), fields(&[("effort", a.to_string())])))
        }
        Cmd::Coordination { mu, var_theta, var_eps, beta } => {
            let e = coordination_equilibrium(mu, var_theta, var_eps, beta)?;
            Ok(Report::new(
                serde_json::to_value(e).expect("plain record"),
                fields(&[
                    ("slope", e.c.to_string()),
                    ("intercept", e.kappa.to_string()),
                    ("fixed-point residual", e.fixed_point_residual.to_string()),
                ]),
            ))
        }
        Cmd::Datasharing { rho, v } => {
            let r = data_sharing_analysis(rho, v)?;
            let rows: Vec<Vec<String>> = r
                .profiles
                .iter()
                .map(|p| {
                    vec![
                        format!("{}{}", u8::from(p.shares[0]), u8::from(p.shares[1])),
                        p.variance[0].to_string(),
                        p.variance[1].to_string(),
                    ]
                })
                .collect();
            let text = format!(
                "{}\n\n{}",
                table(&["shares", "variance 1", "variance 2"], &rows),
                fields(&[
                    ("both-share total", r.both_share_total.to_string()),
                    ("one-share total", r.one_share_total.to_string()),
                    ("cheaper to buy both", r.cheaper_to_buy_both.to_string()),
                    ("boundary rho^2", data_sharing_boundary().to_string()),
                ])
            );
            let mut rec = serde_json::to_value(&r).expect("plain record");
            rec["boundary_rho_squared"] = json!(data_sharing_boundary());
            Ok(Report::new(rec, text))
        }
    }
}
