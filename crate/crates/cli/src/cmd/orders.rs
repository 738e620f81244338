use std::path::{Path, PathBuf};

use clap::{Subcommand, ValueEnum};
use infonomics_core::orders::{
    affiliation_check, find_reversal, fosd_check, log_concavity_check, mlrp_violation, more_favorable_check,
    posterior_fosd_property, threshold_report, ConditionalFamily, FiniteDensity, JointDensity, ThresholdRule,
};
use serde_json::json;

use super::{prior_flag, with_field};
use crate::error::CliError;
use crate::model::{nums, parse_list, read_file, DensityFile, FamilyFile, Field, JointFile};
use crate::output::{fields, table, Report};
use crate::Ctx;

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Monotone likelihood ratio property of a family.
    Mlrp {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Log-supermodularity of a joint density, given directly or built from a family and prior.
    Affiliation {
        #[arg(long, conflicts_with = "family")]
        joint: Option<PathBuf>,
        #[arg(long)]
        family: Option<PathBuf>,
        #[arg(long)]
        prior: Option<String>,
    },
    /// Whether `f` first-order dominates `g`.
    Fosd {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: PathBuf,
    },
    /// Whether realization `x` is more favorable than `xp` for every prior.
    Favorable {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        x: usize,
        #[arg(long)]
        xp: usize,
    },
    /// Discrete log-concavity of a density on an evenly spaced grid.
    Logconcave {
        #[arg(long)]
        density: PathBuf,
    },
    /// Acceptance mass and mean parameter among accepted draws.
    Threshold {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        prior: Option<String>,
        #[arg(long)]
        thresholds: String,
        #[arg(long, value_enum, default_value_t = Rule::Realization)]
        rule: Rule,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Rule {
    Realization,
    PosteriorMean,
}

fn load_family<T: Field>(ctx: &Ctx, path: &Path) -> Result<ConditionalFamily<T>, CliError> {
    let f: FamilyFile = read_file(path)?;
    let rows = ctx.norm.rows("family", &f.rows)?;
    let k = rows.first().map_or(0, Vec::len);
    let grid = f.grid.clone().unwrap_or_else(|| (0..k).map(|i| i as f64).collect());
    Ok(ConditionalFamily::new(f.thetas.clone(), grid, rows)?)
}

fn load_density<T: Field>(ctx: &Ctx, path: &Path) -> Result<FiniteDensity<T>, CliError> {
    let f: DensityFile = read_file(path)?;
    Ok(FiniteDensity::new(f.grid.clone(), ctx.norm.probs("density", &f.mass)?)?)
}

pub fn run(ctx: &Ctx, c: Cmd) -> Result<Report, CliError> {
    match &c {
        Cmd::Logconcave { density } => {
            let d: FiniteDensity<f64> = load_density(ctx, density)?;
            let ok = log_concavity_check(&d)?;
            Ok(Report::new(json!({"log_concave": ok}), fields(&[("log-concave", ok.to_string())])))
        }
        Cmd::Threshold { family, prior, thresholds, rule } => {
            let fam: ConditionalFamily<f64> = load_family(ctx, family)?;
            let p: Vec<f64> = prior_flag(&ctx.norm, prior.as_deref(), fam.num_params())?;
            let ts: Vec<f64> = parse_list("thresholds", thresholds)?;
            let rule = match rule {
                Rule::Realization => ThresholdRule::Realization,
                Rule::PosteriorMean => ThresholdRule::PosteriorMean,
            };
            let rows = threshold_report(&p, &fam, &ts, rule)?;
            let rev = find_reversal(&rows);
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.threshold.to_string(),
                        r.accepted_mass.to_string(),
                        r.conditional_mean.map_or("-".into(), |m| m.to_string()),
                    ]
                })
                .collect();
            let text = format!(
                "{}\nreversal  {}",
                table(&["threshold", "accepted mass", "mean parameter"], &body),
                rev.map_or("none".into(), |(a, b)| format!("{a} -> {b}"))
            );
            Ok(Report::new(json!({"rows": rows, "reversal": rev}), text))
        }
        _ => with_field!(ctx, go, ctx, &c),
    }
}

fn go<T: Field>(ctx: &Ctx, c: &Cmd) -> Result<Report, CliError> {
    match c {
        Cmd::Mlrp { family, strict } => {
            let fam: ConditionalFamily<T> = load_family(ctx, family)?;
            let v = mlrp_violation(&fam, *strict);
            let mut pairs = vec![("mlrp", v.is_none().to_string())];
            if let Some(w) = &v {
                pairs.push(("witness", format!("{w:?}")));
            }
            Ok(Report::new(json!({"mlrp": v.is_none(), "witness": v.map(|w| format!("{w:?}"))}), fields(&pairs)))
        }
        Cmd::Affiliation { joint, family, prior } => {
            let jd: JointDensity<T> = match (joint, family) {
                (Some(p), _) => {
                    let f: JointFile = read_file(p)?;
                    let mass = ctx.norm.fix("joint mass", nums(&f.mass)?)?;
                    JointDensity::new(f.dims.clone(), mass)?
                }
                (None, Some(p)) => {
                    let fam: ConditionalFamily<T> = load_family(ctx, p)?;
                    let pr: Vec<T> = prior_flag(&ctx.norm, prior.as_deref(), fam.num_params())?;
                    let jd = fam.joint(&pr);
                    let fosd = posterior_fosd_property(&pr, &fam)?;
                    let ok = affiliation_check(&jd)?;
                    return Ok(Report::new(
                        json!({"affiliated": ok, "posteriors_fosd_ordered": fosd}),
                        fields(&[("affiliated", ok.to_string()), ("posteriors FOSD-ordered", fosd.to_string())]),
                    ));
                }
                (None, None) => return Err(CliError::Usage("give --joint or --family".into())),
            };
            let ok = affiliation_check(&jd)?;
            Ok(Report::new(json!({"affiliated": ok}), fields(&[("affiliated", ok.to_string())])))
        }
        Cmd::Fosd { f, g } => {
            let (df, dg): (FiniteDensity<T>, FiniteDensity<T>) = (load_density(ctx, f)?, load_density(ctx, g)?);
            let fg = fosd_check(&df, &dg)?;
            let gf = fosd_check(&dg, &df)?;
            Ok(Report::new(
                json!({"f_dominates_g": fg, "g_dominates_f": gf}),
                fields(&[("f dominates g", fg.to_string()), ("g dominates f", gf.to_string())]),
            ))
        }
        Cmd::Favorable { family, x, xp } => {
            let fam: ConditionalFamily<T> = load_family(ctx, family)?;
            let ok = more_favorable_check(&fam, *x, *xp)?;
            Ok(Report::new(json!({"x": x, "xp": xp, "more_favorable": ok}), fields(&[("more favorable", ok.to_string())])))
        }
        Cmd::Logconcave { .. } | Cmd::Threshold { .. } => unreachable!("handled in f64 mode"),
    }
}
