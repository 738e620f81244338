use std::path::{Path, PathBuf};

use clap::Subcommand;
use infonomics_core::misspec::{
    berk_limit_with_prior, misspecified_learning_sim, pure_rows, AcyModel, BerkNashReport, GameModel, SubjectiveModel,
};
use serde_json::{json, Value};

use super::lookup;
use crate::error::CliError;
use crate::model::{parse_list, read_file, AcyFile, BerkFile, GameFile, SubjectiveFile};
use crate::output::{fields, table, Report};
use crate::Ctx;

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Asymptotic beliefs of two agents with uncertain signal interpretations.
    Acy {
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated long-run frequencies of the first signal.
        #[arg(long)]
        rhos: String,
        /// Fail when the densities are outside the disagreement regime.
        #[arg(long)]
        require_regime: bool,
    },
    /// KL minimizers of a misspecified family, optionally with a simulation.
    Berk {
        #[arg(long)]
        model: PathBuf,
        /// Simulated paths; 0 skips the simulation.
        #[arg(long, default_value_t = 0)]
        paths: usize,
        #[arg(long, default_value_t = 1000)]
        t: usize,
        #[arg(long, default_value_t = 0.99)]
        threshold: f64,
    },
    /// Berk–Nash check of a pure strategy.
    BnCheck {
        #[arg(long, conflicts_with = "game", required_unless_present = "game")]
        model: Option<PathBuf>,
        #[arg(long)]
        game: Option<PathBuf>,
        /// Action per signal, comma-separated; players separated by `;` for games.
        #[arg(long)]
        choice: String,
        /// Logarithm base for reported divergences.
        #[arg(long, default_value_t = std::f64::consts::E)]
        base: f64,
    },
    /// All pure Berk–Nash equilibria.
    BnEnum {
        #[arg(long, conflicts_with = "game", required_unless_present = "game")]
        model: Option<PathBuf>,
        #[arg(long)]
        game: Option<PathBuf>,
    },
}

fn parse_choice(actions: &[String], n_signals: usize, text: &str) -> Result<Vec<usize>, CliError> {
    let v = text
        .split(',')
        .map(|s| lookup("action", actions, s.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    if v.len() != n_signals {
        return Err(CliError::Validation(format!("--choice needs {n_signals} actions, got {}", v.len())));
    }
    Ok(v)
}

fn bn_json(r: &BerkNashReport, base: f64) -> Value {
    json!({"divergence": r.divergence_in_base(base), "minimizers": r.minimizers, "belief": r.belief,
           "equilibrium": r.equilibrium, "objective": r.objective})
}

fn bn_text(names: &[String], r: &BerkNashReport, base: f64) -> String {
    let rows: Vec<Vec<String>> = names
        .iter()
        .zip(r.divergence_in_base(base))
        .enumerate()
        .map(|(k, (n, d))| vec![n.clone(), format!("{d:.6}"), r.minimizers.contains(&k).to_string()])
        .collect();
    format!(
        "{}\n{}",
        table(&["parameter", "divergence", "minimizer"], &rows),
        fields(&[
            ("belief", r.belief.as_ref().map_or("none".into(), |b| format!("{b:?}"))),
            ("equilibrium", r.equilibrium.to_string())
        ])
    )
}

fn load_subjective(p: &Path) -> Result<SubjectiveModel, CliError> {
    let m = read_file::<SubjectiveFile>(p)?.model;
    m.validate()?;
    Ok(m)
}

fn load_game(p: &Path) -> Result<GameModel, CliError> {
    let g = read_file::<GameFile>(p)?.game;
    g.validate()?;
    Ok(g)
}

fn action_names(actions: &[String], choice: &[usize]) -> Vec<String> {
    choice.iter().map(|&a| actions[a].clone()).collect()
}

pub fn run(ctx: &Ctx, c: Cmd) -> Result<Report, CliError> {
    if ctx.exact {
        eprintln!("warning: --exact is not supported for misspecification commands; using floating point");
    }
    match c {
        Cmd::Acy { model, rhos, require_regime } => {
            let f: AcyFile = read_file(&model)?;
            let m = AcyModel::new(f.prior_a, f.gamma, f.eps, f.lambda)?;
            let rhos: Vec<f64> = parse_list("rhos", &rhos)?;
            let gaps = m.disagreement_profile(&rhos, require_regime)?;
            let mut rows = Vec::new();
            let mut rec = Vec::new();
            for (rho, gap) in rhos.iter().zip(&gaps) {
                let (a, b) = (m.asymptotic_belief(0, *rho)?, m.asymptotic_belief(1, *rho)?);
                rows.push(vec![rho.to_string(), format!("{a:.6}"), format!("{b:.6}"), format!("{gap:.6}")]);
                rec.push(json!({"rho": rho, "belief_1": a, "belief_2": b, "gap": gap}));
            }
            Ok(Report::new(json!({"rows": rec}), table(&["rho", "agent 1", "agent 2", "gap"], &rows)))
        }
        Cmd::Berk { model, paths, t, threshold } => {
            let f: BerkFile = read_file(&model)?;
            let dens: Vec<Vec<f64>> = ctx.norm.rows("densities", &f.densities)?;
            let truth: Vec<f64> = ctx.norm.probs("truth", &f.truth)?;
            let prior: Option<Vec<f64>> = f.prior.as_ref().map(|p| ctx.norm.probs("prior", p)).transpose()?;
            let lim = berk_limit_with_prior(prior.as_deref(), &dens, &truth)?;
            let rows: Vec<Vec<String>> = lim
                .divergences
                .iter()
                .enumerate()
                .map(|(k, d)| vec![k.to_string(), format!("{d:.6}"), lim.argmin.contains(&k).to_string()])
                .collect();
            let mut text = table(&["parameter", "divergence", "minimizer"], &rows);
            let mut rec = serde_json::to_value(&lim).expect("plain record");
            if paths > 0 {
                let n = dens.len();
                let p = prior.unwrap_or_else(|| vec![1.0 / n as f64; n]);
                let s = misspecified_learning_sim(&p, &dens, &truth, paths, t, threshold, ctx.seed)?;
                text.push_str(&format!(
                    "\n\n{}",
                    fields(&[
                        ("paths", s.paths.to_string()),
                        ("horizon", s.horizon.to_string()),
                        ("fraction at horizon", format!("{:.6}", s.fraction_at_horizon)),
                        ("fraction ever", format!("{:.6}", s.fraction_ever)),
                        ("median mass at horizon", format!("{:.6}", s.median_at_horizon)),
                    ])
                ));
                rec["simulation"] = serde_json::to_value(&s).expect("plain record");
            }
            Ok(Report::new(rec, text))
        }
        Cmd::BnCheck { model, game, choice, base } => {
            if let Some(p) = model {
                let m = load_subjective(&p)?;
                let ch = parse_choice(&m.actions, m.signals.len(), &choice)?;
                let r = m.check(&pure_rows(&ch, m.actions.len()))?;
                let names: Vec<String> = m.params.iter().map(|p| p.name.clone()).collect();
                let mut rec = bn_json(&r, base);
                rec["choice"] = json!(action_names(&m.actions, &ch));
                return Ok(Report::new(rec, bn_text(&names, &r, base)));
            }
            let g = load_game(game.as_ref().expect("clap requires one"))?;
            let parts: Vec<&str> = choice.split(';').collect();
            if parts.len() != g.players.len() {
                return Err(CliError::Validation(format!("--choice needs {} players separated by ';'", g.players.len())));
            }
            let mut profile = Vec::new();
            for (p, text) in g.players.iter().zip(&parts) {
                let ch = parse_choice(&p.actions, p.signals.len(), text)?;
                profile.push(pure_rows(&ch, p.actions.len()));
            }
            let r = g.check(&profile)?;
            let mut text = String::new();
            for (p, pr) in g.players.iter().zip(&r.players) {
                let names: Vec<String> = p.params.iter().map(|q| q.name.clone()).collect();
                text.push_str(&format!("player {}\n{}\n\n", p.name, bn_text(&names, pr, base)));
            }
            text.push_str(&fields(&[("equilibrium", r.equilibrium.to_string())]));
            let players: Vec<Value> = r.players.iter().map(|p| bn_json(p, base)).collect();
            Ok(Report::new(json!({"players": players, "equilibrium": r.equilibrium}), text))
        }
        Cmd::BnEnum { model, game } => {
            if let Some(p) = model {
                let m = load_subjective(&p)?;
                let eq: Vec<Vec<String>> = m.enumerate()?.iter().map(|c| action_names(&m.actions, c)).collect();
                let rows: Vec<Vec<String>> = eq.iter().map(|c| vec![c.join(",")]).collect();
                let mut headers = m.signals.join(",");
                headers.insert_str(0, "actions at ");
                let text = if eq.is_empty() { "no pure equilibrium".into() } else { table(&[&headers], &rows) };
                return Ok(Report::new(json!({"signals": m.signals, "equilibria": eq}), text));
            }
            let g = load_game(game.as_ref().expect("clap requires one"))?;
            let eq: Vec<Vec<Vec<String>>> = g
                .enumerate()?
                .iter()
                .map(|prof| prof.iter().zip(&g.players).map(|(c, p)| action_names(&p.actions, c)).collect())
                .collect();
            let rows: Vec<Vec<String>> =
                eq.iter().map(|prof| vec![prof.iter().map(|c| c.join(",")).collect::<Vec<_>>().join("; ")]).collect();
            let text = if eq.is_empty() { "no pure equilibrium".into() } else { table(&["profile"], &rows) };
            Ok(Report::new(json!({"equilibria": eq}), text))
        }
    }
}
