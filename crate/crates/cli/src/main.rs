use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use wecarray::dynamics::SaturationMethod;
use wecarray_cli::commands;
use wecarray_cli::config::RunConfig;

#[derive(Parser)]
#[command(name = "wecarray", version, about = "Design optimization of heaving-cylinder wave energy converter arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory; overrides the configured one.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Adaptive cross approximation of far-field blocks.
    #[arg(long, global = true)]
    aca: Option<Switch>,
    /// PTO force saturation method.
    #[arg(long, global = true)]
    saturation: Option<Saturation>,
}

#[derive(Subcommand)]
enum Command {
    /// Compare against the published cluster and saturation results.
    Validate,
    /// Run the multi-objective optimization.
    Optimize,
    /// Sobol indices of LCOE at a fixed design.
    Sensitivity,
    /// Added-mass convergence with panel count.
    MeshStudy,
    /// Fits, deltas, report and disturbance fields for a completed run directory.
    Postprocess {
        run_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Saturation {
    All,
    Sequential,
    Off,
}

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| format!("{}: {e}", p.display()))?,
        None => return Err("--config is required for this command".into()),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(a) = cli.aca {
        cfg.bem.aca = matches!(a, Switch::On);
    }
    if let Some(s) = cli.saturation {
        cfg.control.saturation = match s {
            Saturation::All => SaturationMethod::All,
            Saturation::Sequential => SaturationMethod::Sequential,
            Saturation::Off => SaturationMethod::Off,
        };
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: &RunConfig, default: &str) -> PathBuf {
    cli.out.clone().or_else(|| cfg.output_dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(default))
}

fn run(cli: &Cli) -> Result<bool, String> {
    let err = |e: Box<dyn std::error::Error + Send + Sync>| e.to_string();
    match &cli.command {
        Command::Validate => {
            // Validation fixes its own physics; the config only supplies BEM options.
            let cfg = if cli.config.is_some() { load(cli)? } else { RunConfig::minimal(1e5) };
            let mut cfg = cfg;
            if let Some(a) = cli.aca {
                cfg.bem.aca = matches!(a, Switch::On);
            }
            let (text, ok) = commands::validate(&cfg, cli.out.as_deref()).map_err(err)?;
            print!("{text}");
            Ok(ok)
        }
        Command::Optimize => {
            let cfg = load(cli)?;
            let out = out_dir(cli, &cfg, "run");
            let front = commands::optimize(&cfg, &out).map_err(err)?;
            println!("{} designs on the front; artifacts in {}", front.members.len(), out.display());
            Ok(true)
        }
        Command::Sensitivity => {
            let cfg = load(cli)?;
            let out = out_dir(cli, &cfg, "sensitivity");
            let idx = commands::sensitivity(&cfg, &out).map_err(err)?;
            print!("{}", idx.csv());
            Ok(true)
        }
        Command::MeshStudy => {
            let cfg = load(cli)?;
            let out = out_dir(cli, &cfg, "mesh_study");
            let rows = commands::mesh_study(&cfg, &out).map_err(err)?;
            println!("{} rows written to {}", rows.len(), out.display());
            Ok(true)
        }
        Command::Postprocess { run_dir } => {
            let report = commands::postprocess(run_dir).map_err(err)?;
            print!("{report}");
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed: deviations beyond tolerance");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
