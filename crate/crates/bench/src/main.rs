use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use arh_bench::meta::write_outputs;
use arh_bench::{bundled, catalog, run, BenchConfig, RunOptions, BUNDLED};
use clap::{Args, Parser, Subcommand};

const WORKERS_ENV: &str = "ARH_BENCH_WORKERS";

#[derive(Parser)]
#[command(name = "bench", version, about = "Monte Carlo comparison of ARH(1) estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration and write results.csv, records.csv, fcount.svg and metadata.json.
    Run(RunArgs),
    /// Print the scenario catalog and the bundled configurations.
    ListScenarios,
    /// Check a configuration without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Catalog id ("2", "scenario2", "scenario2-desk") or bundled config name.
    #[arg(long)]
    scenario: Option<String>,
    /// Use the published sample sizes and replication count for a catalog id.
    #[arg(long, requires = "scenario")]
    full_scale: bool,
    #[arg(long)]
    reps: Option<usize>,
    /// Worker threads (0 = all cores); defaults to the config or $ARH_BENCH_WORKERS.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fill the wall_ms column (makes the CSV run-dependent).
    #[arg(long)]
    timing: bool,
}

fn resolve(args: &RunArgs) -> Result<BenchConfig> {
    if let Some(path) = &args.config {
        return Ok(BenchConfig::load(path)?);
    }
    let Some(id) = &args.scenario else {
        bail!("pass --config FILE or --scenario ID");
    };
    let id = if args.full_scale {
        id.trim_end_matches("-desk").to_string()
    } else if let Some(cfg) = bundled(id) {
        return Ok(cfg);
    } else if id.ends_with("-desk") {
        id.clone()
    } else {
        format!("{id}-desk")
    };
    catalog::find(&id).with_context(|| format!("unknown scenario {id}; see `bench list-scenarios`"))
}

fn run_cmd(args: RunArgs) -> Result<()> {
    let mut cfg = resolve(&args)?;
    if let Some(r) = args.reps {
        cfg.replications = r;
    }
    if let Some(s) = args.seed {
        cfg.seed_base = s;
    }
    if let Some(o) = &args.out {
        cfg.out_dir = o.clone();
    }
    let workers = match args.workers {
        Some(w) => w,
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => v.parse().with_context(|| format!("{WORKERS_ENV}={v} is not a worker count"))?,
            Err(_) => cfg.workers,
        },
    };
    cfg.workers = workers;
    let opts = RunOptions { workers, timing: args.timing };
    let out = run(&cfg, &opts)?;
    for d in &out.diagnostics {
        eprintln!("warning: {d}");
    }
    write_outputs(&cfg.out_dir, &cfg, &opts, &out)?;
    print!("{}", out.table.to_csv_string());
    eprintln!("wrote {}", cfg.out_dir.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run_cmd(args),
        Command::ListScenarios => {
            print!("{}", catalog::describe());
            println!();
            println!("bundled configs:");
            for (name, _) in BUNDLED {
                let cfg = bundled(name).unwrap();
                println!("  {name:<16} n = {:?}, N = {}, methods: {}", cfg.sample_sizes, cfg.replications,
                    cfg.methods.iter().map(|m| m.label()).collect::<Vec<_>>().join(" "));
            }
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = BenchConfig::load(&config)?;
            cfg.check()?;
            println!("{}: ok ({} methods, {} sample sizes, N = {})", config.display(), cfg.methods.len(), cfg.sample_sizes.len(), cfg.replications);
            Ok(())
        }
    }
}
