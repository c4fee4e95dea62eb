//! `run`: one TDVP evolution per coupling, streamed to CSV.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use sitesplit::{evolve, Observable, TimeSeries};

use crate::analysis::{analyze_frequency, renormalized_tunnelling, FrequencyAnalysis};
use crate::config::SimConfig;
use crate::{build_model, create_file, io_err, output_path, write_csv, CliError};

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub alpha: f64,
    pub series: TimeSeries,
    pub k_eff: Vec<usize>,
    pub analysis: FrequencyAnalysis,
    pub csv: PathBuf,
    pub timing_csv: PathBuf,
}

pub fn alpha_tag(cfg: &SimConfig, alpha: f64) -> String {
    format!("s{}_alpha{}", cfg.bath.s, alpha)
}

/// Evolve a single coupling and write `{prefix}_s{s}_alpha{alpha}.csv` and
/// its `_timing` companion.
pub fn run_single(cfg: &SimConfig, alpha: f64) -> Result<RunOutput, CliError> {
    let cfg = cfg.with_alpha(alpha);
    let model = build_model(&cfg, alpha)?;
    let k_eff = model.k_eff();
    let observables = vec![Observable::BosonNumber {
        layout: model.layout,
        boson: 0,
    }];
    let tag = alpha_tag(&cfg, alpha);
    let csv = output_path(&cfg, &tag);
    let timing_csv = output_path(&cfg, &format!("{tag}_timing"));

    let mut preamble = cfg.preamble();
    preamble.push(format!(
        "k_eff = [{}]",
        k_eff.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", ")
    ));
    let mut out = create_file(&csv)?;
    let header = TimeSeries::new(observables.iter().map(|o| o.name()).collect()).csv_header();
    let mut write_err = None;
    {
        let mut emit = |line: &str| {
            if write_err.is_none() {
                if let Err(e) = writeln!(out, "{line}").and_then(|_| out.flush()) {
                    write_err = Some(e);
                }
            }
        };
        for p in &preamble {
            emit(&format!("# {p}"));
        }
        emit(&header);
        let result = evolve(&model.initial, &model.mpo, &cfg.tdvp, &observables, |row| {
            emit(&TimeSeries::csv_row(row));
            log::debug!("alpha {alpha}: t = {:.3}, sz = {:.6}", row.t, row.sz);
        });
        let (_, series) = result?;
        if let Some(e) = write_err {
            return Err(io_err(&csv)(e));
        }
        write_csv(&timing_csv, &preamble, &series.timing_csv())?;
        let analysis = analyze_frequency(&series.times(), &series.sz());
        Ok(RunOutput {
            alpha,
            series,
            k_eff,
            analysis,
            csv,
            timing_csv,
        })
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    let n = if jobs == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        jobs
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))
}

/// Run every configured coupling on a worker pool and write a summary.
pub fn run(cfg: &SimConfig) -> Result<Vec<RunOutput>, CliError> {
    cfg.validate()?;
    let alphas = cfg.alphas();
    let outputs: Vec<RunOutput> = pool(cfg.jobs)?.install(|| {
        alphas
            .par_iter()
            .map(|&a| run_single(cfg, a))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mut body = String::from("alpha,delta_r,frequency,damping,zero_crossings,r_squared,final_sz\n");
    for o in &outputs {
        let delta_r = renormalized_tunnelling(cfg.system.delta, cfg.bath.omega_c, o.alpha);
        let final_sz = o.series.rows().last().map(|r| r.sz).unwrap_or(f64::NAN);
        let line = match &o.analysis {
            FrequencyAnalysis::Oscillating(f) => format!(
                "{},{:e},{:e},{:e},{},{:e},{:e}\n",
                o.alpha, delta_r, f.frequency, f.damping, f.zero_crossings, f.r_squared, final_sz
            ),
            FrequencyAnalysis::NoOscillation { zero_crossings } => {
                format!("{},{:e},,,{zero_crossings},,{:e}\n", o.alpha, delta_r, final_sz)
            }
        };
        body.push_str(&line);
    }
    write_csv(&output_path(cfg, "summary"), &cfg.preamble(), &body)?;
    Ok(outputs)
}
