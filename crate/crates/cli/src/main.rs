use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hsc_cli::{commands, CliError, Layout, RunConfig};

#[derive(Parser)]
#[command(name = "hsc", version, about = "Hyperbolic stochastic coding pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Run directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for per-subject stages (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled cohort.
    Synth(Common),
    /// Sample ring patches on every surface.
    Sample(Common),
    /// Learn the dictionary from all patches.
    Train(Common),
    /// Encode and max-pool each subject's patches.
    Features(Common),
    /// Cross-validate the boosted classifier.
    Classify(Common),
    /// Write the metrics table.
    Report {
        #[command(flatten)]
        common: Common,
        /// Further run directories to add as report columns.
        #[arg(long)]
        include: Vec<PathBuf>,
    },
    /// Every stage in order.
    Run(Common),
    /// Print the default configuration.
    DefaultConfig,
}

fn setup(common: &Common) -> Result<(RunConfig, Layout), CliError> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(threads) = common.threads {
        if threads == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let layout = Layout::new(config.out_dir(common.out.as_deref()));
    Ok((config, layout))
}

fn dispatch(command: Command) -> Result<(), CliError> {
    let run = |common: &Common, f: fn(&RunConfig, &Layout) -> Result<hsc_cli::Manifest, CliError>| {
        let (config, layout) = setup(common)?;
        let manifest = f(&config, &layout)?;
        log::info!("{} finished in {:.2}s", manifest.command, manifest.wall_time_secs);
        Ok(())
    };
    match command {
        Command::Synth(c) => run(&c, commands::cmd_synth),
        Command::Sample(c) => run(&c, commands::cmd_sample),
        Command::Train(c) => run(&c, commands::cmd_train),
        Command::Features(c) => run(&c, commands::cmd_features),
        Command::Classify(c) => run(&c, commands::cmd_classify),
        Command::Report { common, include } => {
            let (config, layout) = setup(&common)?;
            commands::cmd_report(&config, &layout, &include)?;
            print!("{}", std::fs::read_to_string(layout.report()).map_err(|e| CliError::io(&layout.report(), e))?);
            Ok(())
        }
        Command::Run(c) => {
            let (config, layout) = setup(&c)?;
            for m in commands::cmd_run(&config, &layout)? {
                log::info!("{} finished in {:.2}s", m.command, m.wall_time_secs);
            }
            print!("{}", std::fs::read_to_string(layout.report()).map_err(|e| CliError::io(&layout.report(), e))?);
            Ok(())
        }
        Command::DefaultConfig => {
            println!("{}", RunConfig::default().to_json());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
