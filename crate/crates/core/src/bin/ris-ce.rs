//! Batch CLI: Monte Carlo sweeps (`run`) and the training-design
//! certificate (`certify`). Results are written as deterministic CSV.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use ris_ce::config::ScenarioConfig;
use ris_ce::harness;

#[derive(Parser)]
#[command(
    name = "ris-ce",
    version,
    about = "RIS-assisted channel estimation: Monte Carlo sweeps and design certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded Monte Carlo sweep and write a results CSV.
    Run(RunArgs),
    /// Rank training-phase designs and write the certificate CSV.
    Certify(CertifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config file (TOML). Mutually exclusive with --preset.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Built-in preset: scenario1 | scenario2.
    #[arg(long)]
    preset: Option<String>,

    /// Sweep variable override: k_db | d_r | rho_db | tau_2 | sigma_e.
    #[arg(long)]
    sweep: Option<String>,

    /// Comma-separated sweep grid override, e.g. "0,10,20,30".
    #[arg(long)]
    grid: Option<String>,

    /// Trial count override.
    #[arg(long)]
    trials: Option<usize>,

    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,

    /// Output CSV path.
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,

    /// Optional gnuplot-style series file.
    #[arg(long)]
    plot_out: Option<PathBuf>,

    /// Disable receiver noise in both stages.
    #[arg(long)]
    zero_noise: bool,

    /// Force an exactly rank-1 RIS-BS channel.
    #[arg(long)]
    pure_los: bool,

    /// Zero the direct UE-BS channel.
    #[arg(long)]
    blocked_direct: bool,

    /// Also simulate the no-estimation random-phase baseline.
    #[arg(long)]
    include_baseline: bool,

    /// Worker thread count (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Active-element count N'.
    #[arg(long = "n")]
    n_prime: usize,

    /// BS antenna count M.
    #[arg(long = "m")]
    m: usize,

    /// Specular RIS-BS gain used in the trace normalization.
    #[arg(long, default_value_t = 1.0)]
    beta_bar: f64,

    /// Number of random designs to rank against.
    #[arg(long, default_value_t = 100)]
    random_designs: usize,

    /// Seed for the random designs.
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Output CSV path.
    #[arg(long, default_value = "certificate.csv")]
    out: PathBuf,
}

fn load_run_config(args: &RunArgs) -> ris_ce::Result<ScenarioConfig> {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), None) => ScenarioConfig::load(path)?,
        (None, Some(name)) => ScenarioConfig::preset(name)?,
        (None, None) => {
            return Err(ris_ce::Error::Config(
                "pass --config <path> or --preset scenario1|scenario2".to_string(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap enforces exclusivity"),
    };
    if let Some(sweep) = &args.sweep {
        config.run.sweep = sweep.parse()?;
    }
    if let Some(grid) = &args.grid {
        let mut values = Vec::new();
        for item in grid.split(',') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            values.push(item.parse::<f64>().map_err(|_| {
                ris_ce::Error::Config(format!("--grid: '{item}' is not a number"))
            })?);
        }
        config.run.grid = values;
    }
    if let Some(trials) = args.trials {
        config.run.trials = trials;
    }
    if let Some(seed) = args.seed {
        config.run.seed = seed;
    }
    if args.zero_noise {
        config.run.zero_noise = true;
    }
    if args.pure_los {
        config.links.pure_los = true;
    }
    if args.blocked_direct {
        config.run.blocked_direct = true;
    }
    if args.include_baseline {
        config.run.include_baseline = true;
    }
    config.validate()?;
    Ok(config)
}

fn run_sweep(args: &RunArgs) -> ris_ce::Result<()> {
    let config = load_run_config(args)?;
    let rows = match args.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| ris_ce::Error::Config(format!("--threads: {e}")))?;
            pool.install(|| harness::sweep(&config))?
        }
        None => harness::sweep(&config)?,
    };
    harness::emit_csv(&rows, &args.out)?;
    if let Some(plot) = &args.plot_out {
        harness::emit_plot_data(&rows, plot)?;
    }
    let flagged: usize = rows
        .iter()
        .map(|r| config.run.trials.saturating_sub(r.trials))
        .max()
        .unwrap_or(0);
    println!(
        "wrote {} rows to {} (sweep={}, trials={}, seed={}, config={}{})",
        rows.len(),
        args.out.display(),
        config.run.sweep.label(),
        config.run.trials,
        config.run.seed,
        config.hash(),
        if flagged > 0 {
            format!(", flagged up to {flagged} trials/point")
        } else {
            String::new()
        }
    );
    Ok(())
}

fn run_certify(args: &CertifyArgs) -> ris_ce::Result<()> {
    let (ranking, rows) = harness::certify(
        args.n_prime,
        args.m,
        args.beta_bar,
        args.random_designs,
        args.seed,
    )?;
    harness::emit_csv(&rows, &args.out)?;
    println!(
        "gram-inverse trace lower bound N'/tau_1 = {:.12}",
        ranking.inverse_trace_bound
    );
    for (i, report) in ranking.reports.iter().enumerate().take(4) {
        println!(
            "{:>12}  trace_sum = {:.12e}  bound_gap = {:+.3e}{}",
            report.label,
            report.trace_sum,
            report.bound_gap,
            if i == ranking.best_index {
                "  <- best"
            } else {
                ""
            }
        );
    }
    if ranking.reports.len() > 4 {
        println!(
            "... {} more designs in {}",
            ranking.reports.len() - 4,
            args.out.display()
        );
    }
    println!(
        "modified DFT attains the minimum trace sum: {}",
        ranking.mdft_attains_min
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run_sweep(args),
        Command::Certify(args) => run_certify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
