use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use circloop::economy::validate;
use circloop::gen::{generate, GenParams};
use circloop::io::{parse_plan, EconomyDocument, ResultDocument};
use circloop::report::render_report;
use circloop::search::replay;
use circloop::{reuse_match, Error};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "circloop", version, about = "Plan supplier choices in a circular production economy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an economy document; diagnostics go to stderr.
    Validate { economy: PathBuf },
    /// Search for the best supplier configuration.
    Plan {
        economy: PathBuf,
        plan: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Re-check incremental caches from scratch after every move.
        #[arg(long)]
        audit: bool,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Generate a random layered economy.
    Gen {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        materials: usize,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 4)]
        per_level: usize,
        #[arg(long, default_value_t = 2)]
        class_size: usize,
        #[arg(long, default_value_t = 3)]
        max_inputs: usize,
        /// Probability that a composite product releases a byproduct.
        #[arg(long, default_value_t = 0.0)]
        byproducts: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Render CSV tables for a plan result.
    Report {
        economy: PathBuf,
        result: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Failure with its exit status: 2 for unreadable or malformed input, 1 otherwise.
struct Failure {
    code: u8,
    error: anyhow::Error,
    /// Already reported on stderr.
    quiet: bool,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<Error>() {
            Some(Error::Syntax(_) | Error::UnknownSchema(_)) => 2,
            Some(_) => 1,
            None if error.downcast_ref::<std::io::Error>().is_some() => 2,
            None => 1,
        };
        Self {
            code,
            error,
            quiet: false,
        }
    }
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        anyhow::Error::from(error).into()
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure {
            code: 2,
            error: anyhow::Error::from(e).context(format!("reading {}", path.display())),
            quiet: false,
        })
}

fn write_out(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(|error| Failure {
                code: 1,
                error,
                quiet: false,
            }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_economy(path: &Path) -> Result<EconomyDocument, Failure> {
    let text = read(path)?;
    Ok(EconomyDocument::from_json(&text)?)
}

fn cmd_validate(path: &Path) -> Result<(), Failure> {
    let doc = load_economy(path)?;
    let diags = match doc.to_economy() {
        Ok(economy) => validate(&economy),
        Err(Error::Invalid(diags)) => diags,
        Err(e) => return Err(e.into()),
    };
    if diags.is_empty() {
        return Ok(());
    }
    for d in &diags {
        eprintln!("{d}");
    }
    Err(Failure {
        code: 1,
        error: anyhow::anyhow!("{} diagnostic(s)", diags.len()),
        quiet: true,
    })
}

fn cmd_plan(economy_path: &Path, plan_path: &Path, output: Option<&Path>, audit: bool, workers: usize) -> Result<(), Failure> {
    let doc = load_economy(economy_path)?;
    let economy = doc.to_economy()?;
    let plan_doc = parse_plan(&read(plan_path)?)?;
    let plan = plan_doc.resolve(&economy)?;
    let result = plan.run(&economy, workers, audit)?;
    let config = replay(&economy, &plan.demand, &result.moves)?;
    let circularity = reuse_match(&economy, &config, &plan.demand).circularity;
    let out = ResultDocument::build(&economy, &doc, &plan_doc, &result, circularity, workers);
    write_out(output, &out.to_json())?;

    let eval = &result.evaluation;
    eprintln!(
        "{}: score {} ({}), {} move(s), {} node(s), circularity {:.3}, {:.1} ms",
        result.algorithm,
        eval.score,
        if eval.feasible() { "feasible" } else { "infeasible" },
        result.moves.len(),
        result.nodes,
        circularity,
        out.wall_time_ms,
    );
    for m in &out.moves {
        eprintln!("  {}.slot{}: {} -> {}", m.owner, m.slot, m.from, m.to);
    }
    for v in &out.evaluation.violations {
        eprintln!("  over bound: {} = {} > {} (excess {})", v.indicator, v.value, v.bound, v.excess);
    }
    Ok(())
}

fn cmd_report(economy_path: &Path, result_path: &Path, output: Option<&Path>) -> Result<(), Failure> {
    let doc = load_economy(economy_path)?;
    let result = ResultDocument::from_json(&read(result_path)?)?;
    let csv = render_report(&doc, &result)?;
    write_out(output, &csv)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { economy } => cmd_validate(&economy),
        Command::Plan {
            economy,
            plan,
            output,
            audit,
            workers,
        } => cmd_plan(&economy, &plan, output.as_deref(), audit, workers),
        Command::Gen {
            seed,
            materials,
            levels,
            per_level,
            class_size,
            max_inputs,
            byproducts,
            output,
        } => {
            let doc = generate(&GenParams {
                seed,
                materials,
                levels,
                per_level,
                class_size,
                max_inputs,
                byproduct_prob: byproducts,
            })?;
            write_out(output.as_deref(), &doc.to_json())
        }
        Command::Report { economy, result, output } => cmd_report(&economy, &result, output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error, quiet }) => {
            if !quiet {
                eprintln!("error: {error:#}");
            }
            ExitCode::from(code)
        }
    }
}
