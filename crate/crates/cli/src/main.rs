use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use waveguide_cli::commands;
use waveguide_cli::{CliError, CliResult, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "waveguide", version, about = "Effective operators for thin waveguides")]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Output directory; overrides `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for parallel sweeps and matrix-free products.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parallel adapted frame and curvatures.
    Frame {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fibre ground state and its functionals.
    Mode {
        #[arg(long)]
        config: PathBuf,
    },
    /// Effective and direct spectra at one ε, plus the potentials.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
    },
    /// ε-sweep with fitted convergence orders.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Order fit on built-in ε³ data.
    Selftest,
}

fn run(args: Args) -> CliResult<()> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Missing(format!("--threads: {e}")))?;
    }
    let Format::Csv = args.format;
    let load = |p: &PathBuf| -> CliResult<(RunConfig, PathBuf)> {
        let cfg = RunConfig::load(p)?;
        let out = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
        Ok((cfg, out))
    };
    let files = match &args.command {
        Command::Frame { config } => {
            let (cfg, out) = load(config)?;
            commands::cmd_frame(&cfg, &out)?
        }
        Command::Mode { config } => {
            let (cfg, out) = load(config)?;
            commands::cmd_mode(&cfg, &out)?
        }
        Command::Spectrum { config } => {
            let (cfg, out) = load(config)?;
            commands::cmd_spectrum(&cfg, &out)?
        }
        Command::Sweep { config } => {
            let (cfg, out) = load(config)?;
            let (report, files) = commands::cmd_sweep(&cfg, &out)?;
            print!("{}", report.summary());
            for f in &files {
                println!("wrote {}", f.display());
            }
            if !report.all_passed() {
                return Err(CliError::Acceptance("fitted order below threshold or unstable".into()));
            }
            return Ok(());
        }
        Command::Selftest => {
            let out = args.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let (report, files) = commands::cmd_selftest(&out)?;
            print!("{}", report.summary());
            files
        }
    };
    for f in &files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
