mod cmd;
mod error;
mod model;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;
use crate::model::Normalizer;
use crate::output::Report;

#[derive(Parser, Debug)]
#[command(name = "infonomics", version, about = "Finite-model computations for information economics")]
struct Cli {
    /// Master seed for simulation commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Emit a JSON record instead of tables.
    #[arg(long, global = true)]
    json: bool,

    /// Exact rational arithmetic where supported.
    #[arg(long, global = true)]
    exact: bool,

    /// Tolerance for probability vectors that do not quite sum to one.
    #[arg(long, global = true, default_value_t = 1e-5)]
    tol: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Knowledge and belief operators on partition models.
    Knowledge(cmd::knowledge::Args),
    /// Bayesian updating and signal constructions.
    #[command(subcommand)]
    Signals(cmd::signals::Cmd),
    /// Stochastic-order tests.
    #[command(subcommand)]
    Orders(cmd::orders::Cmd),
    /// Blackwell comparisons and certificates.
    #[command(subcommand)]
    Blackwell(cmd::blackwell::Cmd),
    /// Gaussian updating and linear equilibria.
    #[command(subcommand)]
    Gaussian(cmd::gaussian::Cmd),
    /// Entropy, divergences and information costs.
    #[command(subcommand)]
    Cost(cmd::cost::Cmd),
    /// Learning simulations and exact belief computations.
    #[command(subcommand)]
    Learn(cmd::learn::Cmd),
    /// Misspecified learning and Berk-Nash equilibrium.
    #[command(subcommand)]
    Misspec(cmd::misspec::Cmd),
    /// Optimal information design.
    #[command(subcommand)]
    Persuade(cmd::persuade::Cmd),
}

/// Global settings shared by every command.
pub struct Ctx {
    pub seed: u64,
    pub exact: bool,
    pub norm: Normalizer,
}

fn dispatch(cli: Cli) -> Result<Report, CliError> {
    if !(cli.tol >= 0.0 && cli.tol < 1.0) {
        return Err(CliError::Usage("--tol must lie in [0,1)".into()));
    }
    let ctx = Ctx { seed: cli.seed, exact: cli.exact, norm: Normalizer { tol: cli.tol } };
    match cli.command {
        Command::Knowledge(a) => cmd::knowledge::run(&ctx, a),
        Command::Signals(c) => cmd::signals::run(&ctx, c),
        Command::Orders(c) => cmd::orders::run(&ctx, c),
        Command::Blackwell(c) => cmd::blackwell::run(&ctx, c),
        Command::Gaussian(c) => cmd::gaussian::run(&ctx, c),
        Command::Cost(c) => cmd::cost::run(&ctx, c),
        Command::Learn(c) => cmd::learn::run(&ctx, c),
        Command::Misspec(c) => cmd::misspec::run(&ctx, c),
        Command::Persuade(c) => cmd::persuade::run(&ctx, c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let json = cli.json;
    match dispatch(cli) {
        Ok(rep) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&rep.record).expect("records are valid JSON"));
            } else {
                println!("{}", rep.text);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
