use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use abcel::harness::{
    build_context, coverage_study, density_grid, read_theta_grid, reference_curve, run_experiment,
    run_repeat_draws, write_grid_csv, ExperimentConfig, Method, NormalVarReference,
};
use abcel::models::GenerativeModel;
use abcel::sampler::write_draws_csv;
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

#[derive(Parser)]
#[command(
    name = "abcel",
    version,
    about = "Empirical-likelihood ABC experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (default: `runs/<experiment name>`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the first repeat of an experiment and write its chain, report and timing.
    Run { config: String },
    /// Run every repeat and write the coverage report.
    Coverage {
        config: String,
        /// Also write one chain CSV per repeat.
        #[arg(long)]
        keep_chains: bool,
    },
    /// Evaluate the estimated log likelihood on a grid of parameter values.
    Grid {
        config: String,
        /// CSV file with one parameter vector per line.
        #[arg(long)]
        theta_grid: PathBuf,
        /// Evaluations per grid point.
        #[arg(long, default_value_t = 100)]
        evals: usize,
    },
    /// Write plot-ready CSV files for the bundled figure experiments.
    ExportPlots {
        dir: PathBuf,
        /// Divide chain lengths and simulation budgets by 10.
        #[arg(long)]
        quick: bool,
    },
    /// List the bundled configs.
    List,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let workers = cli
        .common
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    match &cli.command {
        Command::Run { config } => {
            let mut cfg = load(config, cli.common.seed)?;
            cfg.experiment.repeats = 1;
            let out = out_dir(&cli.common, &cfg);
            let report = run_experiment(&cfg, &out, workers)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            info!("wrote {}", out.display());
        }
        Command::Coverage {
            config,
            keep_chains,
        } => {
            let cfg = load(config, cli.common.seed)?;
            let out = out_dir(&cli.common, &cfg);
            let report = if *keep_chains {
                run_experiment(&cfg, &out, workers)?
            } else {
                std::fs::create_dir_all(&out)?;
                let report = coverage_study(&cfg, workers, None)?;
                write_json(&out.join("report.json"), &report)?;
                report
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
            info!("wrote {}", out.display());
        }
        Command::Grid {
            config,
            theta_grid,
            evals,
        } => {
            let cfg = load(config, cli.common.seed)?;
            let f = File::open(theta_grid)
                .with_context(|| format!("opening {}", theta_grid.display()))?;
            let grid = read_theta_grid(BufReader::new(f))?;
            if let Some(bad) = grid.iter().find(|t| t.len() != cfg.model.param_dim()) {
                bail!(
                    "grid point {bad:?} does not have {} coordinates",
                    cfg.model.param_dim()
                );
            }
            let ctx = build_context(&cfg, 0)?;
            let rows = density_grid(&ctx, &grid, *evals, cfg.experiment.seed, workers)?;
            let out = out_dir(&cli.common, &cfg);
            std::fs::create_dir_all(&out)?;
            let path = out.join("grid.csv");
            write_grid_csv(&rows, BufWriter::new(File::create(&path)?))?;
            info!("wrote {}", path.display());
        }
        Command::ExportPlots { dir, quick } => export_plots(dir, *quick, cli.common.seed, workers)?,
        Command::List => {
            for name in abcel::harness::bundled_names() {
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn load(config: &str, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg =
        ExperimentConfig::load(config).with_context(|| format!("loading config `{config}`"))?;
    if let Some(seed) = seed {
        cfg.experiment.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: &ExperimentConfig) -> PathBuf {
    common
        .out
        .clone()
        .unwrap_or_else(|| Path::new("runs").join(&cfg.experiment.name))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

const POSTERIOR_FIGURES: [&str; 4] = ["gk", "arch1", "boom_bust", "stereo"];
const METHODS: [(&str, Method); 3] = [
    ("abcel", Method::Abcel),
    ("synthetic", Method::Synthetic),
    ("rejection", Method::Rejection),
];

/// Log-posterior curves for both normal-variance summaries at several `m`,
/// and posterior draws of every method for the other figure models.
fn export_plots(dir: &Path, quick: bool, seed: Option<u64>, workers: usize) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for name in ["normal_var_mean_square_fig1", "normal_var_max_fig1"] {
        let cfg = load(name, seed)?;
        let reference = NormalVarReference::new(&cfg, 0)?;
        let grid = reference.region_grid(0.05, 40);
        let evals = if quick { 20 } else { 100 };
        let path = dir.join(format!("{name}.csv"));
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "m,theta,true_logpost,mean_logpost,lo95,hi95")?;
        for m in [25, 50, 500] {
            let curve = reference_curve(&cfg, m, &grid, evals, workers)?;
            for ((t, exact), row) in grid.iter().zip(&curve.exact).zip(&curve.rows) {
                writeln!(w, "{m},{t},{exact},{},{},{}", row.mean, row.lo95, row.hi95)?;
            }
        }
        info!("wrote {}", path.display());
    }
    for model in POSTERIOR_FIGURES {
        for (suffix, method) in METHODS {
            let mut cfg = load(&format!("{model}_{suffix}"), seed)?;
            debug_assert_eq!(cfg.experiment.method, method);
            if quick {
                cfg.sampler.n_iter = (cfg.sampler.n_iter / 10).max(1);
                cfg.sampler.n_burn /= 10;
                if let Some(abc) = cfg.abc.as_mut() {
                    abc.n_sims = (abc.n_sims / 10).max(1);
                }
            }
            let (_, draws, _) = run_repeat_draws(&cfg, 0)?;
            let path = dir.join(format!("{model}_{suffix}_draws.csv"));
            write_draws_csv(
                &draws,
                cfg.model.param_dim(),
                BufWriter::new(File::create(&path)?),
            )?;
            info!("wrote {}", path.display());
        }
    }
    Ok(())
}
