use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sitesplit_cli::analysis::{renormalized_tunnelling, FrequencyAnalysis};
use sitesplit_cli::config::SimConfig;
use sitesplit_cli::{bench, oracle, run, spectra, CliError};

/// Spin-boson dynamics with split bosonic sites.
///
/// Every config key can be overridden as `--section.key=value`, e.g.
/// `--bath.alpha=[0.1,0.2] --tdvp.dt=0.05`.
#[derive(Parser, Debug)]
#[command(name = "sitesplit", version)]
struct Cli {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for alpha sweeps (0 = one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for randomised initial states.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve every configured coupling and write one CSV per alpha.
    Run,
    /// Write the split singular spectra of every boson site.
    Spectra,
    /// Time one-site sweeps in the split and the original basis.
    Benchmark,
    /// Exact dense evolution of a small instance.
    Oracle {
        /// Also run TDVP and report the deviation.
        #[arg(long)]
        compare: bool,
    },
    /// Write the chain coefficients.
    Coeffs,
}

/// Pull `--section.key=value` overrides out before clap sees the arguments.
fn split_overrides(args: impl Iterator<Item = String>) -> (Vec<String>, Vec<String>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    for a in args {
        match a.strip_prefix("--") {
            Some(body) if body.split_once('=').is_some_and(|(k, _)| k.contains('.')) => {
                overrides.push(body.to_string())
            }
            _ => rest.push(a),
        }
    }
    (rest, overrides)
}

fn execute(cli: Cli, overrides: &[String]) -> Result<(), CliError> {
    let mut cfg = SimConfig::load(cli.config.as_deref(), overrides)?;
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match cli.command {
        Command::Run => {
            for o in run::run(&cfg)? {
                let delta_r = renormalized_tunnelling(cfg.system.delta, cfg.bath.omega_c, o.alpha);
                let last = o.series.rows().last().map(|r| r.sz).unwrap_or(f64::NAN);
                let fit = match &o.analysis {
                    FrequencyAnalysis::Oscillating(f) => format!(
                        "frequency {:.5} (Delta_r {:.5}), damping {:.5}",
                        f.frequency, delta_r, f.damping
                    ),
                    FrequencyAnalysis::NoOscillation { zero_crossings } => {
                        format!("no oscillation ({zero_crossings} zero crossings)")
                    }
                };
                println!("alpha = {}: final sz {last:.5}, {fit} -> {}", o.alpha, o.csv.display());
            }
        }
        Command::Spectra => {
            let r = spectra::spectra(&cfg)?;
            let k = &r.split.k_eff;
            println!(
                "k_eff: first boson {}, max {} (maximum possible {}) -> {}",
                k.first().copied().unwrap_or(0),
                k.iter().copied().max().unwrap_or(0),
                r.max_rank.iter().copied().max().unwrap_or(0),
                r.csv.display()
            );
        }
        Command::Benchmark => {
            let r = bench::benchmark(&cfg)?;
            print!("{}", r.summary());
            println!("-> {}", r.csv.display());
        }
        Command::Oracle { compare } => {
            let r = oracle::oracle(&cfg, compare)?;
            match r.max_deviation {
                Some(d) => println!("dimension {}: max |sz_tdvp - sz_exact| = {d:.3e} -> {}", r.dim, r.csv.display()),
                None => println!("dimension {} -> {}", r.dim, r.csv.display()),
            }
        }
        Command::Coeffs => {
            let (chain, path) = spectra::coeffs(&cfg)?;
            println!("c0 = {:.6}, {} chain sites -> {}", chain.c0, chain.len(), path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (args, overrides) = split_overrides(std::env::args());
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli, &overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
