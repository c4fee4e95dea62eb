//! `benchmark`: wall time of one-site TDVP sweeps in the split and the
//! original basis as a function of `d_b`.
//!
//! MPO construction, splitting and environment setup are excluded; only the
//! sweeps are timed. Both bases use the same seeded random state at full
//! bond dimension, the same `chi` and the same `dt`.

use std::path::PathBuf;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sitesplit::mpo::{resolve_split_dim, split_full_mpo};
use sitesplit::tdvp::{tdvp_sweep, Environment};
use sitesplit::{build_spin_boson_mpo, chain_coefficients, Mpo, Mps, Scheme};

use crate::config::SimConfig;
use crate::{output_path, write_csv, CliError};

#[derive(Clone, Debug, PartialEq)]
pub struct BenchPoint {
    pub d_b: usize,
    pub split_ms: f64,
    /// `None` when the unsplit sweep exceeded the time budget.
    pub unsplit_ms: Option<f64>,
    pub max_k_eff: usize,
}

impl BenchPoint {
    pub fn speedup(&self) -> Option<f64> {
        self.unsplit_ms.map(|u| u / self.split_ms)
    }
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub points: Vec<BenchPoint>,
    pub split_exponent: f64,
    /// Fitted on the points that finished within the budget.
    pub unsplit_exponent: f64,
    pub csv: PathBuf,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return f64::NAN;
    }
    let lx: Vec<f64> = xs[..n].iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys[..n].iter().map(|y| y.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n as f64, ly.iter().sum::<f64>() / n as f64);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Mean wall time per one-site sweep in milliseconds, or `None` once a
/// sweep exceeds `budget_s`.
fn time_sweeps(
    mpo: &Mpo,
    cfg: &SimConfig,
    rng_seed: u64,
    budget_s: Option<f64>,
) -> Result<Option<f64>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut psi = Mps::random(&mpo.local_dims(), cfg.tdvp.max_bond, &mut rng)?;
    let mut env = Environment::new(&psi, mpo)?;
    let mut total = 0.0;
    for _ in 0..cfg.benchmark.sweeps {
        let start = Instant::now();
        tdvp_sweep(&mut psi, mpo, &mut env, &cfg.tdvp, Scheme::OneSite)?;
        let s = start.elapsed().as_secs_f64();
        if budget_s.is_some_and(|b| s > b) {
            return Ok(None);
        }
        total += s;
    }
    Ok(Some(total * 1e3 / cfg.benchmark.sweeps as f64))
}

pub fn benchmark(cfg: &SimConfig) -> Result<BenchReport, CliError> {
    cfg.validate()?;
    let alpha = cfg.alphas()[0];
    let bath = cfg.bath_for(alpha)?;
    let chain = chain_coefficients(&bath, cfg.benchmark.chain_length, cfg.system.tn_variant)?;
    let mut points = Vec::new();
    let mut timed_out = false;
    for &requested in &cfg.benchmark.d_b_list {
        let d_b = resolve_split_dim(requested);
        let mpo = build_spin_boson_mpo(&chain, cfg.system.delta, d_b)?;
        let split = split_full_mpo(&mpo, cfg.split.threshold)?;
        let seed = cfg.seed ^ (d_b as u64);
        let split_ms = time_sweeps(&split.mpo, cfg, seed, None)?.expect("no budget");
        let unsplit_ms = if timed_out {
            None
        } else {
            time_sweeps(&mpo, cfg, seed, Some(cfg.benchmark.timeout_s))?
        };
        timed_out |= unsplit_ms.is_none();
        let point = BenchPoint {
            d_b,
            split_ms,
            unsplit_ms,
            max_k_eff: split.k_eff.iter().copied().max().unwrap_or(0),
        };
        log::info!("benchmark {point:?}");
        points.push(point);
    }

    let xs: Vec<f64> = points.iter().map(|p| p.d_b as f64).collect();
    let split_exponent = fit_exponent(&xs, &points.iter().map(|p| p.split_ms).collect::<Vec<_>>());
    let finished: Vec<&BenchPoint> = points.iter().filter(|p| p.unsplit_ms.is_some()).collect();
    let unsplit_exponent = fit_exponent(
        &finished.iter().map(|p| p.d_b as f64).collect::<Vec<_>>(),
        &finished.iter().filter_map(|p| p.unsplit_ms).collect::<Vec<_>>(),
    );

    let mut body = String::from("d_b,split_ms,unsplit_ms,speedup,max_k_eff\n");
    for p in &points {
        let (u, s) = match (p.unsplit_ms, p.speedup()) {
            (Some(u), Some(s)) => (format!("{u:.3}"), format!("{s:.3}")),
            _ => ("timeout".to_string(), String::new()),
        };
        body.push_str(&format!("{},{:.3},{u},{s},{}\n", p.d_b, p.split_ms, p.max_k_eff));
    }
    let mut preamble = cfg.preamble();
    preamble.push(format!("split_exponent = {split_exponent:.4}"));
    preamble.push(format!("unsplit_exponent = {unsplit_exponent:.4}"));
    let csv = output_path(cfg, "benchmark");
    write_csv(&csv, &preamble, &body)?;
    Ok(BenchReport {
        points,
        split_exponent,
        unsplit_exponent,
        csv,
    })
}

impl BenchReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for p in &self.points {
            match p.unsplit_ms {
                Some(u) => s.push_str(&format!(
                    "d_b = {:>4}: split {:>10.2} ms, original {:>10.2} ms, speedup {:>6.2}x\n",
                    p.d_b,
                    p.split_ms,
                    u,
                    u / p.split_ms
                )),
                None => s.push_str(&format!(
                    "d_b = {:>4}: split {:>10.2} ms, original timed out\n",
                    p.d_b, p.split_ms
                )),
            }
        }
        s.push_str(&format!(
            "fitted exponents: split {:.3}, original {:.3}\n",
            self.split_exponent, self.unsplit_exponent
        ));
        s
    }
}
