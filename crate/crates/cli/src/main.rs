use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use popdescent::harness::config::ExperimentConfig;
use popdescent::harness::{run_experiment, write_report, Mode};

/// Runs the desk-scale experiments and writes CSV, markdown and SVG reports.
#[derive(Parser, Debug)]
#[command(name = "popdescent", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compare tuners at an equal gradient-step budget.
    Bench(Common),
    /// Longer single-budget runs for convergence traces.
    Converge(Common),
    /// Randomization / selection-source / regularization ablation.
    Ablate(Common),
    /// Sweep the initial learning rate (or iteration count).
    Sensitivity(Common),
    /// Monte Carlo check of the mutation and initialization samplers.
    SampleDist(Common),
    /// Print the effective configuration as TOML and exit.
    ShowConfig {
        #[arg(value_enum, default_value = "bench")]
        mode: ModeArg,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Bench,
    Converge,
    Ablate,
    Sensitivity,
    SampleDist,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Bench => Mode::Benchmark,
            ModeArg::Converge => Mode::Convergence,
            ModeArg::Ablate => Mode::Ablation,
            ModeArg::Sensitivity => Mode::Sensitivity,
            ModeArg::SampleDist => Mode::SampleDist,
        }
    }
}

#[derive(Args, Debug)]
struct Common {
    /// TOML file merged over the mode's defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated seeds, overriding the config.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory with IDX files; synthetic data is used when absent.
    #[arg(long, env = "POPDESCENT_DATA_DIR")]
    data_dir: Option<PathBuf>,
}

fn load(mode: Mode, path: Option<&PathBuf>) -> anyhow::Result<ExperimentConfig> {
    let cfg = match path {
        Some(p) => ExperimentConfig::load(p, mode).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::preset(mode),
    };
    if cfg.experiment.mode != mode {
        bail!(
            "config file sets mode {:?} but the {:?} subcommand was used",
            cfg.experiment.mode.name(),
            mode.name()
        );
    }
    Ok(cfg)
}

fn execute(mode: Mode, args: Common) -> anyhow::Result<()> {
    let mut cfg = load(mode, args.config.as_ref())?;
    if let Some(seeds) = args.seeds {
        cfg.experiment.seeds = seeds;
    }
    if let Some(out) = args.out {
        cfg.experiment.out_dir = out;
    }
    if args.data_dir.is_some() {
        cfg.data.data_dir = args.data_dir;
    }
    cfg.validate()?;
    let report = run_experiment(&cfg)?;
    eprintln!("data: {}", report.data);
    let files = write_report(&report, &cfg.experiment.out_dir, &cfg.report.formats, cfg.report.ema)
        .with_context(|| format!("writing report to {}", cfg.experiment.out_dir.display()))?;
    for summary in report.summary() {
        let test = summary.test.map(|s| format!("{:.4} ± {:.4} (median {:.4})", s.mean, s.sd, s.median));
        println!(
            "{:<32} test loss {:<36} failed {}/{}",
            summary.method,
            test.unwrap_or_else(|| "n/a".into()),
            summary.failures,
            summary.runs
        );
    }
    if let Some(d) = &report.distribution {
        println!(
            "P(<1/{b}) = {:.5}, P(>{b}) = {:.5}, expected {:.5}; initial lr log10 median {:.4}",
            d.p_low,
            d.p_high,
            d.expected_tail,
            d.init_lr_log10_median,
            b = d.base
        );
    }
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    if !report.rows.is_empty() && report.rows.iter().all(|r| !r.ok()) {
        bail!("every run failed; see the report for details");
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Bench(a) => execute(Mode::Benchmark, a),
        Command::Converge(a) => execute(Mode::Convergence, a),
        Command::Ablate(a) => execute(Mode::Ablation, a),
        Command::Sensitivity(a) => execute(Mode::Sensitivity, a),
        Command::SampleDist(a) => execute(Mode::SampleDist, a),
        Command::ShowConfig { mode, config } => {
            let cfg = load(mode.into(), config.as_ref())?;
            print!("{}", cfg.to_toml_string()?);
            Ok(())
        }
    }
}
