//! Power-law bath with a hard cutoff and its nearest-neighbour chain.
//!
//! For `J(w) = 2 pi alpha w^s w_c^(1-s)` on `[0, w_c]` the chain couplings are
//! known in closed form, so no orthogonal-polynomial recurrence is run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralBath {
    /// Ohmicity exponent; `s = 1` is Ohmic, `s < 1` sub-Ohmic.
    pub s: f64,
    pub alpha: f64,
    pub omega_c: f64,
}

impl SpectralBath {
    pub fn new(s: f64, alpha: f64, omega_c: f64) -> Result<Self> {
        let bath = Self { s, alpha, omega_c };
        bath.validate()?;
        Ok(bath)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::Parameter(format!("s must be positive, got {}", self.s)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Parameter(format!(
                "alpha must be non-negative, got {}",
                self.alpha
            )));
        }
        if !(self.omega_c > 0.0 && self.omega_c.is_finite()) {
            return Err(Error::Parameter(format!(
                "omega_c must be positive, got {}",
                self.omega_c
            )));
        }
        Ok(())
    }

    /// `J(omega)`, zero outside `[0, omega_c]`.
    pub fn spectral_density(&self, omega: f64) -> f64 {
        if !(0.0..=self.omega_c).contains(&omega) {
            return 0.0;
        }
        2.0 * std::f64::consts::PI
            * self.alpha
            * omega.powf(self.s)
            * self.omega_c.powf(1.0 - self.s)
    }
}

/// Which closed form to use for the chain hoppings.
///
/// `Paper` evaluates the denominator `(s + 2 + 2n)(3 + s + 3n)`; `Literature`
/// uses `(s + 2 + 2n)(3 + s + 2n)`, the standard result for this bath, whose
/// hoppings approach `omega_c / 4`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HoppingVariant {
    #[default]
    Paper,
    Literature,
}

impl std::str::FromStr for HoppingVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::Paper),
            "literature" => Ok(Self::Literature),
            other => Err(Error::Config(format!("unknown hopping variant {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainCoefficients {
    /// Site energies `omega_n`, one per bosonic site.
    pub omega: Vec<f64>,
    /// Hopping `t_n` between sites `n` and `n + 1`; one fewer than `omega`.
    pub hopping: Vec<f64>,
    /// Spin coupling to the first bosonic site.
    pub c0: f64,
    pub variant: HoppingVariant,
}

impl ChainCoefficients {
    /// Number of bosonic sites.
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// `n, omega_n, t_n` rows; the last site has no outgoing hopping and
    /// leaves the field empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,omega_n,t_n\n");
        for (n, w) in self.omega.iter().enumerate() {
            match self.hopping.get(n) {
                Some(t) => out.push_str(&format!("{n},{w:e},{t:e}\n")),
                None => out.push_str(&format!("{n},{w:e},\n")),
            }
        }
        out
    }
}

pub fn site_energy(bath: &SpectralBath, n: usize) -> f64 {
    let (s, n) = (bath.s, n as f64);
    0.5 * bath.omega_c * (1.0 + s * s / ((s + 2.0 * n) * (2.0 + s + 2.0 * n)))
}

pub fn hopping(bath: &SpectralBath, n: usize, variant: HoppingVariant) -> f64 {
    let (s, n) = (bath.s, n as f64);
    let second = match variant {
        HoppingVariant::Paper => 3.0 + s + 3.0 * n,
        HoppingVariant::Literature => 3.0 + s + 2.0 * n,
    };
    bath.omega_c * (1.0 + n) * (1.0 + s + n) / ((s + 2.0 + 2.0 * n) * second)
        * ((3.0 + s + 2.0 * n) / (1.0 + s + 2.0 * n)).sqrt()
}

pub fn spin_coupling(bath: &SpectralBath) -> f64 {
    (bath.alpha / (2.0 * (1.0 + bath.s))).sqrt() * bath.omega_c
}

/// Chain coefficients for `sites` bosonic modes.
pub fn chain_coefficients(
    bath: &SpectralBath,
    sites: usize,
    variant: HoppingVariant,
) -> Result<ChainCoefficients> {
    bath.validate()?;
    if sites < 1 {
        return Err(Error::Parameter("chain needs at least one site".into()));
    }
    Ok(ChainCoefficients {
        omega: (0..sites).map(|n| site_energy(bath, n)).collect(),
        hopping: (0..sites - 1).map(|n| hopping(bath, n, variant)).collect(),
        c0: spin_coupling(bath),
        variant,
    })
}
