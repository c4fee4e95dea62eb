//! `spectra` and `coeffs`: static properties of the chain and its MPO.

use std::path::PathBuf;

use sitesplit::mpo::{resolve_split_dim, split_full_mpo, SplitMpo};
use sitesplit::{build_spin_boson_mpo, chain_coefficients, ChainCoefficients};

use crate::config::SimConfig;
use crate::{output_path, write_csv, CliError};

#[derive(Clone, Debug)]
pub struct SpectraReport {
    pub split: SplitMpo,
    /// Largest possible split rank, `min` of the reshaped matrix dimensions.
    pub max_rank: Vec<usize>,
    pub csv: PathBuf,
}

/// Split every boson site at `split.threshold` and dump the spectra.
pub fn spectra(cfg: &SimConfig) -> Result<SpectraReport, CliError> {
    cfg.validate()?;
    let alpha = cfg.alphas()[0];
    let chain = chain_coefficients(&cfg.bath_for(alpha)?, cfg.system.chain_length, cfg.system.tn_variant)?;
    let d_b = resolve_split_dim(cfg.system.d_b);
    let mpo = build_spin_boson_mpo(&chain, cfg.system.delta, d_b)?;
    let split = split_full_mpo(&mpo, cfg.split.threshold)?;
    let max_rank: Vec<usize> = mpo.sites()[1..]
        .iter()
        .map(|w| {
            let d = w.dims();
            let half = (d[1] as f64).sqrt().round() as usize;
            (d[0] * half * half).min(half * half * d[3])
        })
        .collect();

    let mut preamble = cfg.with_alpha(alpha).preamble();
    preamble.push(format!(
        "k_eff = [{}] at relative threshold {:e}",
        split.k_eff.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", "),
        cfg.split.threshold
    ));
    let csv = output_path(cfg, "spectra");
    write_csv(&csv, &preamble, &split.spectra_csv())?;
    Ok(SpectraReport {
        split,
        max_rank,
        csv,
    })
}

/// Write the chain coefficients for the first configured coupling.
pub fn coeffs(cfg: &SimConfig) -> Result<(ChainCoefficients, PathBuf), CliError> {
    cfg.validate()?;
    let alpha = cfg.alphas()[0];
    let chain = chain_coefficients(&cfg.bath_for(alpha)?, cfg.system.chain_length, cfg.system.tn_variant)?;
    let mut preamble = cfg.with_alpha(alpha).preamble();
    preamble.push(format!("c0 = {:e}", chain.c0));
    let csv = output_path(cfg, "coeffs");
    write_csv(&csv, &preamble, &chain.to_csv())?;
    Ok((chain, csv))
}
