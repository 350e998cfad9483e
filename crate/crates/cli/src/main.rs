mod config;
mod heatmap;
mod run;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{parse_pairs, Config};
use nearsamp_core::nearfield::Mode;
use run::{Failure, Run};

/// Near-field sampling reconstructions of sound-soft obstacles and cavities.
#[derive(Debug, Parser)]
#[command(name = "nearsamp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (flat `key=value` file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for all outputs; created if missing.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,

    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Also write a PNG heatmap next to every imaging grid.
    #[arg(long, global = true)]
    heatmap: bool,

    /// Noise seed, overriding `noise.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the forward problem for the configured scene; writes clean.nfm.
    Synthesize,
    /// Add relative noise to a near-field matrix; writes noisy.nfm.
    Noise { input: PathBuf },
    /// Keep only the sensors on the configured arc; writes limited.nfm.
    Restrict { input: PathBuf },
    /// Complete arc data to the full ring; writes completed.nfm.
    Complete { input: PathBuf },
    /// Sweep the indicator over the grid; writes <input stem>.img.
    Image { input: PathBuf },
    /// Synthesize, add noise, (restrict, complete,) image.
    Pipeline,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synthesize => "synthesize",
            Command::Noise { .. } => "noise",
            Command::Restrict { .. } => "restrict",
            Command::Complete { .. } => "complete",
            Command::Image { .. } => "image",
            Command::Pipeline => "pipeline",
        }
    }
}

/// Reads the configuration; without a file, `fallback_mode` picks the defaults.
fn load_config(cli: &Cli, fallback_mode: Option<Mode>) -> Result<Config, Failure> {
    let mut pairs = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            parse_pairs(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => BTreeMap::new(),
    };
    if let Some(mode) = fallback_mode {
        pairs
            .entry("mode".into())
            .or_insert_with(|| mode.to_string());
    }
    let mut config = Config::from_pairs(&pairs)?;
    if let Some(seed) = cli.seed {
        config.noise_seed = seed;
    }
    Ok(config)
}

fn input_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into())
}

fn execute(cli: &Cli, run: &mut Run) -> Result<Config, Failure> {
    let need_config = || {
        if cli.config.is_none() {
            return Err(Failure::Config(format!(
                "{} needs --config",
                cli.command.name()
            )));
        }
        Ok(())
    };
    let with_input = |run: &mut Run, input: &Path| {
        run.note(format!("input={}", input.display()));
        let n = run::load_nfm(input)?;
        let config = load_config(cli, Some(n.ring.mode()))?;
        Ok::<_, Failure>((n, config))
    };
    match &cli.command {
        Command::Synthesize => {
            need_config()?;
            let config = load_config(cli, None)?;
            let n = run::stage_synthesize(&config)?;
            run.write_nfm("clean.nfm", &n)?;
            Ok(config)
        }
        Command::Noise { input } => {
            let (n, config) = with_input(run, input)?;
            let noisy = run::stage_noise(&n, &config)?;
            run.write_nfm("noisy.nfm", &noisy)?;
            Ok(config)
        }
        Command::Restrict { input } => {
            need_config()?;
            let (n, config) = with_input(run, input)?;
            let limited = run::stage_restrict(&n, &config)?;
            run.write_nfm("limited.nfm", &limited)?;
            Ok(config)
        }
        Command::Complete { input } => {
            let (n, config) = with_input(run, input)?;
            let done = run::stage_complete(&n, &config)?;
            run.write_nfm("completed.nfm", &done)?;
            Ok(config)
        }
        Command::Image { input } => {
            let (n, config) = with_input(run, input)?;
            let grid = run::stage_image(&n, &config)?;
            run.write_grid(&input_stem(input), &grid)?;
            Ok(config)
        }
        Command::Pipeline => {
            need_config()?;
            let config = load_config(cli, None)?;
            run::pipeline(run, &config)?;
            Ok(config)
        }
    }
}

fn main_inner(cli: &Cli) -> Result<(), Failure> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Config(format!("--threads: {e}")))?;
    }
    let mut run = Run::new(&cli.output_dir, cli.heatmap)?;
    match execute(cli, &mut run) {
        Ok(config) => run.finish(cli.command.name(), &config),
        Err(e) => {
            run.abandon();
            Err(e)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nearsamp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
