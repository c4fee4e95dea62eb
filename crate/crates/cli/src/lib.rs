//! Orchestration for split-basis spin-boson runs: configuration, α sweeps,
//! MPO spectra, the split-versus-unsplit benchmark and the dense oracle.

pub mod analysis;
pub mod bench;
pub mod config;
pub mod oracle;
pub mod run;
pub mod spectra;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sitesplit::mpo::{resolve_split_dim, SplitMpo};
use sitesplit::{
    build_spin_boson_mpo, chain_coefficients, split_full_mpo, ChainCoefficients, LatticeLayout,
    Mpo, Mps, ProductStateSpec,
};

pub use config::SimConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io { .. } => 1,
            Self::Numerical(_) => 2,
        }
    }
}

impl From<sitesplit::Error> for CliError {
    fn from(e: sitesplit::Error) -> Self {
        use sitesplit::Error as E;
        match e {
            E::Config(_) | E::Parameter(_) | E::CapExceeded { .. } => Self::Config(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn create_file(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

/// Write `# `-prefixed preamble lines followed by `body`.
pub(crate) fn write_csv(path: &Path, preamble: &[String], body: &str) -> Result<(), CliError> {
    let mut f = create_file(path)?;
    for line in preamble {
        writeln!(f, "# {line}").map_err(io_err(path))?;
    }
    f.write_all(body.as_bytes()).map_err(io_err(path))?;
    f.flush().map_err(io_err(path))
}

/// Everything needed to evolve one coupling.
#[derive(Clone, Debug)]
pub struct Model {
    pub chain: ChainCoefficients,
    pub d_b: usize,
    pub layout: LatticeLayout,
    pub mpo: Mpo,
    pub split: Option<SplitMpo>,
    pub initial: Mps,
}

impl Model {
    pub fn k_eff(&self) -> Vec<usize> {
        self.split.as_ref().map(|s| s.k_eff.clone()).unwrap_or_default()
    }
}

/// Chain, MPO (split if enabled) and the `|up> x |0...0>` initial state.
pub fn build_model(cfg: &SimConfig, alpha: f64) -> Result<Model, CliError> {
    let bath = cfg.bath_for(alpha)?;
    let chain = chain_coefficients(&bath, cfg.system.chain_length, cfg.system.tn_variant)?;
    let d_b = if cfg.split.enabled {
        resolve_split_dim(cfg.system.d_b)
    } else {
        cfg.system.d_b
    };
    let full = build_spin_boson_mpo(&chain, cfg.system.delta, d_b)?;
    let layout = LatticeLayout::new(cfg.system.chain_length, d_b, cfg.split.enabled)?;
    let initial = Mps::product_state(&ProductStateSpec::spin_up(), &layout)?;
    let (mpo, split) = if cfg.split.enabled {
        let s = split_full_mpo(&full, cfg.split.threshold)?;
        (s.mpo.clone(), Some(s))
    } else {
        (full, None)
    };
    Ok(Model {
        chain,
        d_b,
        layout,
        mpo,
        split,
        initial,
    })
}

/// `{prefix}_{tag}.csv` in the output directory.
pub fn output_path(cfg: &SimConfig, tag: &str) -> PathBuf {
    cfg.output_dir().join(format!("{}_{tag}.csv", cfg.output.prefix))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let numerical: CliError = sitesplit::Error::NonHermitian {
            site: 3,
            deviation: 1.0,
        }
        .into();
        assert_eq!(numerical.exit_code(), 2);
        let cap: CliError = sitesplit::Error::CapExceeded { dim: 10, cap: 5 }.into();
        assert_eq!(cap.exit_code(), 1);
        let io = io_err(Path::new("x"))(std::io::Error::other("boom"));
        assert_eq!(io.exit_code(), 1);
    }
}
