mod report;

use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fillin_core::metagraph::{build_metagraph, export, extract_sequences, mark_optimal, ExportFormat};
use fillin_core::pcm::PerturbationLevel;
use fillin_core::sim::{cr_calibration, SimConfig, Simulation};
use fillin_core::store::{load_run, save_run, RunArtifact};
use fillin_elicit::{Cors, ServeConfig};

/// Environment variable that overrides where `simulate` writes runs.
const OUT_DIR_ENV: &str = "FILLIN_OUT_DIR";

#[derive(Parser)]
#[command(name = "fillin", version, about = "Optimal filling-in patterns for incomplete pairwise comparison matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List connected graph classes on n vertices.
    Enumerate {
        n: usize,
        /// Only classes with this many edges.
        e: Option<usize>,
    },
    /// Run a Monte Carlo sweep and write a run artifact.
    Simulate {
        /// JSON simulation config.
        #[arg(long)]
        config: PathBuf,
        /// Output file. Defaults to `run-n<N>-<hash>.json` in $FILLIN_OUT_DIR
        /// or the working directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// No progress on stderr.
        #[arg(long)]
        quiet: bool,
    },
    /// Score table for one edge count.
    Rank {
        run: PathBuf,
        /// Edge count.
        #[arg(long)]
        level: usize,
    },
    /// Export the scored graph of graphs.
    Metagraph {
        run: PathBuf,
        #[arg(long, default_value = "dot")]
        format: ExportFormat,
    },
    /// Print the extracted filling-in sequences.
    Sequence { run: PathBuf },
    /// CSV of the optimal curve.
    Plotdata { run: PathBuf },
    /// Five-number summary of the consistency ratio after perturbation.
    Calibrate {
        n: usize,
        /// weak, modest, strong, or a halfwidth.
        #[arg(long)]
        level: PerturbationLevel,
        #[arg(long, default_value_t = 10_000)]
        matrices: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Start the elicitation service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Session journal; sessions are kept in memory only without it.
        #[arg(long)]
        journal: Option<PathBuf>,
        /// Allowed browser origin; repeat for several, `*` for any, `none`
        /// to disable.
        #[arg(long, default_value = "http://localhost:5173")]
        cors: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load(path: &Path) -> Result<RunArtifact> {
    load_run(path).with_context(|| format!("loading {}", path.display()))
}

fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Enumerate { n, e } => emit(&report::enumerate(n, e)?),
        Command::Simulate { config, out, quiet } => simulate(&config, out, quiet),
        Command::Rank { run, level } => emit(&report::rank(&load(&run)?, level)?),
        Command::Metagraph { run, format } => {
            let run_art = load(&run)?;
            let scored = run_art
                .scored
                .context("run has no metagraph; simulate a full sweep with 4 <= n <= 8")?;
            emit(&export(&scored, format)?)
        }
        Command::Sequence { run } => emit(&report::sequences(&load(&run)?)?),
        Command::Plotdata { run } => emit(&report::plot_csv(&load(&run)?)?),
        Command::Calibrate { n, level, matrices, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let summary = cr_calibration(n, level, matrices, &mut rng)?;
            emit(&report::calibration(n, level, matrices, &summary))
        }
        Command::Serve { port, host, journal, cors } => {
            tracing_subscriber::fmt().with_writer(std::io::stderr).init();
            let cors = match cors.as_slice() {
                [one] if one == "none" => Cors::Off,
                [one] if one == "*" => Cors::Any,
                list => Cors::Origins(list.to_vec()),
            };
            let cfg = ServeConfig {
                addr: SocketAddr::new(host, port),
                journal,
                cors,
            };
            tokio::runtime::Runtime::new()?.block_on(fillin_elicit::serve(cfg))?;
            Ok(())
        }
    }
}

fn simulate(config_path: &Path, out: Option<PathBuf>, quiet: bool) -> Result<()> {
    let text = std::fs::read_to_string(config_path)
        .with_context(|| format!("reading {}", config_path.display()))?;
    let config: SimConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", config_path.display()))?;
    let sim = Simulation::new(config.clone())?;
    let progress = |done: usize, total: usize| {
        if !quiet && (done == total || done.is_multiple_of(64)) {
            eprint!("\r{done}/{total} work units");
            if done == total {
                eprintln!();
            }
        }
    };
    let scores = sim.run_with_progress(&progress)?;
    let mut run = RunArtifact::new(config.clone(), scores)?;
    let full_sweep = config.e.is_none() && config.classes.is_none();
    if full_sweep && (4..=8).contains(&config.n) {
        let scored = mark_optimal(build_metagraph(config.n)?, &run.scores, &config.margin)?;
        run.sequences = Some(extract_sequences(&scored)?);
        run.scored = Some(scored);
    }
    let path = match out {
        Some(p) => p,
        None => {
            let dir = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from);
            let short = run.content_hash.trim_start_matches("sha256:");
            dir.join(format!("run-n{}-{}.json", config.n, &short[..12]))
        }
    };
    save_run(&path, &run).with_context(|| format!("writing {}", path.display()))?;
    println!("{}", path.display());
    Ok(())
}
