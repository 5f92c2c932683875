use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use parabnf::harness::{self, ExperimentConfig, VerbOutcome};
use parabnf::Error;

#[derive(Parser)]
#[command(name = "parabnf", version, about = "Paradifferential and normal form experiments for NLS on the circle")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Reduced sizes (J=32, shorter horizons).
    #[arg(long)]
    quick: bool,
    /// Also write gnuplot scripts next to the CSV files.
    #[arg(long)]
    gnuplot_script: bool,
}

#[derive(Subcommand)]
enum Verb {
    /// Integrate one trajectory and write its norms.
    Simulate(Common),
    /// Doubling times over the ε grid and their log-log fit.
    LifespanScan(Common),
    /// Small-divisor scan over frequency tuples.
    ResonanceScan(Common),
    /// Quantization, composition, paraproduct and Vandermonde checks.
    CalculusVerify(Common),
    /// Paralinearize the configured nonlinearity and check the reconstruction.
    ParalinearizeCheck(Common),
    /// Run the reduction pipeline and report per-step defects.
    ReduceDemo(Common),
    /// Run every acceptance criterion and write a JUnit-style report.
    Verify(Common),
}

fn run(verb: &Verb) -> parabnf::Result<VerbOutcome> {
    let c = match verb {
        Verb::Simulate(c)
        | Verb::LifespanScan(c)
        | Verb::ResonanceScan(c)
        | Verb::CalculusVerify(c)
        | Verb::ParalinearizeCheck(c)
        | Verb::ReduceDemo(c)
        | Verb::Verify(c) => c,
    };
    let mut cfg = ExperimentConfig::load(c.config.as_deref())?;
    if c.quick {
        cfg = cfg.quick();
    }
    cfg.gnuplot_script |= c.gnuplot_script;
    // Resolve everything that can be misconfigured before any output exists.
    cfg.potential(c.seed)?;
    cfg.load_nonlinearity()?;
    let (seed, out) = (c.seed, c.out.as_path());
    match verb {
        Verb::Simulate(_) => harness::cmd_simulate(&cfg, seed, out),
        Verb::LifespanScan(_) => harness::cmd_lifespan_scan(&cfg, seed, out),
        Verb::ResonanceScan(_) => harness::cmd_resonance_scan(&cfg, seed, out),
        Verb::CalculusVerify(_) => harness::cmd_calculus_verify(&cfg, seed, out, c.quick),
        Verb::ParalinearizeCheck(_) => harness::cmd_paralinearize_check(&cfg, seed, out),
        Verb::ReduceDemo(_) => harness::cmd_reduce_demo(&cfg, seed, out),
        Verb::Verify(_) => harness::cmd_verify(&cfg, seed, out, c.quick),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.verb) {
        Ok(outcome) => {
            println!("{}", serde_json::to_string_pretty(&outcome.summary).unwrap_or_default());
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e @ (Error::Config(_) | Error::Json(_) | Error::Hypothesis(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
