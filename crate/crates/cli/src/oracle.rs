//! `oracle`: dense exact evolution of a small instance, optionally compared
//! against TDVP on the same configuration.

use std::path::PathBuf;

use sitesplit::ed::{build_dense, evolve_dense, spin_up_vacuum, DEFAULT_CAP};
use sitesplit::{chain_coefficients, evolve, TimeSeries};

use crate::config::SimConfig;
use crate::{build_model, output_path, write_csv, CliError};

#[derive(Clone, Debug)]
pub struct OracleReport {
    pub alpha: f64,
    pub dim: usize,
    pub exact: TimeSeries,
    /// Largest `|sz_tdvp - sz_exact|` over the common grid.
    pub max_deviation: Option<f64>,
    pub csv: PathBuf,
}

/// Dense evolution of the first configured coupling. With `compare`, the
/// same configuration is also evolved with TDVP and the deviation recorded.
pub fn oracle(cfg: &SimConfig, compare: bool) -> Result<OracleReport, CliError> {
    cfg.validate()?;
    let alpha = cfg.alphas()[0];
    let cfg = cfg.with_alpha(alpha);
    let model = build_model(&cfg, alpha)?;
    let chain = chain_coefficients(&cfg.bath_for(alpha)?, cfg.system.chain_length, cfg.system.tn_variant)?;
    let h = build_dense(&chain, cfg.system.delta, model.d_b, cfg.system.chain_length, DEFAULT_CAP)?;
    let psi0 = spin_up_vacuum(h.dim());
    let exact = evolve_dense(&h, &psi0, cfg.tdvp.dt, cfg.tdvp.t_max)?;

    let tdvp = if compare {
        Some(evolve(&model.initial, &model.mpo, &cfg.tdvp, &[], |_| {})?.1)
    } else {
        None
    };
    let max_deviation = tdvp.as_ref().map(|s| {
        s.sz()
            .iter()
            .zip(exact.sz())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    });

    let mut body = String::from(if compare { "t,sz_exact,sz_tdvp\n" } else { "t,sz_exact\n" });
    for (i, row) in exact.rows().iter().enumerate() {
        match tdvp.as_ref().map(|s| s.rows().get(i)) {
            Some(Some(r)) => body.push_str(&format!("{:e},{:e},{:e}\n", row.t, row.sz, r.sz)),
            Some(None) => body.push_str(&format!("{:e},{:e},\n", row.t, row.sz)),
            None => body.push_str(&format!("{:e},{:e}\n", row.t, row.sz)),
        }
    }
    let mut preamble = cfg.preamble();
    preamble.push(format!("dense dimension = {}", h.dim()));
    if let Some(d) = max_deviation {
        preamble.push(format!("max |sz_tdvp - sz_exact| = {d:e}"));
    }
    let csv = output_path(&cfg, "oracle");
    write_csv(&csv, &preamble, &body)?;
    Ok(OracleReport {
        alpha,
        dim: h.dim(),
        exact,
        max_deviation,
        csv,
    })
}
