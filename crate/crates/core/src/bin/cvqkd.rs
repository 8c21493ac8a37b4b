//! `cvqkd`: closed-form analysis, Monte Carlo simulation, threshold and
//! separability checks for two-way coherent-state QKD under Gaussian-cloner
//! attacks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cvqkd_core::attack::Strategy;
use cvqkd_core::cli::{self, AnalyzeArgs, PptArgs, ReplayOutput, SimulateArgs};
use cvqkd_core::Result;

#[derive(Parser)]
#[command(
    name = "cvqkd",
    version,
    about = "Two-way CV-QKD under Gaussian-cloner attacks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Bs,
    Direct,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form variances, mutual informations and security per omega².
    Analyze {
        /// Range spec start:stop:count, optionally suffixed with :log, or a single value.
        #[arg(long, default_value = "0.1:2:20")]
        omega_grid: String,
        /// Alice's modulation variance Σ².
        #[arg(long, default_value_t = 100.0)]
        signal_var: f64,
        /// Also write the table as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Write an SVG chart of I_AB and I_AE.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Monte Carlo run of the protocol; writes transcript.csv and summary.json.
    Simulate {
        #[arg(long, default_value_t = 100_000)]
        rounds: u64,
        #[arg(long, default_value_t = 100.0)]
        signal_var: f64,
        #[arg(long, default_value_t = 1000.0)]
        reference_var: f64,
        #[arg(long, default_value_t = 0.5)]
        omega_sq: f64,
        /// Probability c of an OFF (noise-check) round.
        #[arg(long, default_value_t = 0.1)]
        off_probability: f64,
        #[arg(long, env = "CVQKD_SEED", default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long, default_value = "cvqkd-run")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, value_enum, default_value_t = StrategyArg::Bs)]
        strategy: StrategyArg,
        /// Power transmissivity t² of Eve's beam splitter.
        #[arg(long, default_value_t = 0.5)]
        transmissivity: f64,
        /// Plain Gaussian channel instead of the attack.
        #[arg(long)]
        no_attack: bool,
        #[arg(long, default_value_t = 0.0)]
        forward_noise: f64,
        #[arg(long, default_value_t = 0.0)]
        backward_noise: f64,
    },
    /// Closed-form and bisection security thresholds.
    Threshold {
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
    },
    /// Partial-transpose scan of the cloner output covariance matrix.
    PptScan {
        #[arg(long, default_value = "1e-3:1e3:100:log")]
        sigma_grid: String,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Re-run a command from a manifest or any JSON output embedding one.
    Replay {
        manifest: PathBuf,
        /// Override the output directory of a replayed simulation.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Analyze {
            omega_grid,
            signal_var,
            json,
            svg,
        } => {
            let out = cli::analyze(&AnalyzeArgs {
                omega_grid,
                signal_var,
            })?;
            print!("{}", cli::render_analyze(&out));
            if let Some(p) = json {
                cli::write_json(&p, &out)?;
            }
            if let Some(p) = svg {
                std::fs::write(p, cli::render_svg(&out))?;
            }
        }
        Command::Simulate {
            rounds,
            signal_var,
            reference_var,
            omega_sq,
            off_probability,
            seed,
            out,
            workers,
            strategy,
            transmissivity,
            no_attack,
            forward_noise,
            backward_noise,
        } => {
            let args = SimulateArgs {
                rounds,
                signal_var,
                reference_var,
                omega_sq,
                off_probability,
                seed,
                out,
                workers,
                strategy: match strategy {
                    StrategyArg::Bs => Strategy::BsCombine,
                    StrategyArg::Direct => Strategy::DirectHeterodyne,
                },
                transmissivity,
                no_attack,
                forward_noise,
                backward_noise,
            };
            let res = cli::simulate(&args)?;
            print!("{}", cli::render_summary(&res.summary));
            println!("transcript: {}", res.transcript_path.display());
            println!("summary:    {}", res.summary_path.display());
        }
        Command::Threshold { tolerance } => {
            print!("{}", cli::render_threshold(&cli::threshold(tolerance)?));
        }
        Command::PptScan { sigma_grid, json } => {
            let out = cli::ppt_scan(&PptArgs { sigma_grid })?;
            print!("{}", cli::render_ppt(&out));
            if let Some(p) = json {
                cli::write_json(&p, &out)?;
            }
        }
        Command::Replay { manifest, out } => {
            let m = cli::load_manifest(&manifest)?;
            match cli::replay(&m, out)? {
                ReplayOutput::Analyze(a) => print!("{}", cli::render_analyze(&a)),
                ReplayOutput::Ppt(p) => print!("{}", cli::render_ppt(&p)),
                ReplayOutput::Simulate(s) => {
                    print!("{}", cli::render_summary(&s.summary));
                    println!("transcript: {}", s.transcript_path.display());
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match run(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
