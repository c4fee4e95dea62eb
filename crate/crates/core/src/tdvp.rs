//! Time-dependent variational principle on an MPS/MPO pair.
//!
//! One time step is a symmetric sweep: left to right with `dt/2`, then right
//! to left with `dt/2`. Each local update applies `exp(-i H_eff dt/2)` to the
//! center and, before the center moves on, evolves the bond (one-site) or
//! the next site (two-site) backwards with `exp(+i H_eff dt/2)`.

use std::time::Instant;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::env::{
    self, apply_bond, apply_one_site, apply_one_site_prepared, apply_two_site_prepared, prepare_mpo,
    prepare_right,
};
use crate::error::{dim_err, Error, Result};
use crate::krylov::{expm_apply, KrylovParams};
use crate::mpo::Mpo;
use crate::mps::{lq, Mps};
use crate::series::{Observable, TimeSeries, TimeSeriesRow};
use crate::tensor::{contract, DenseTensor, Truncation};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    TwoSite,
    OneSite,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_site" => Ok(Self::TwoSite),
            "one_site" => Ok(Self::OneSite),
            other => Err(Error::Config(format!("unknown TDVP scheme `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TdvpConfig {
    pub dt: f64,
    pub t_max: f64,
    pub scheme: Scheme,
    pub max_bond: usize,
    /// Relative singular-value cut in two-site updates.
    pub svd_truncation: f64,
    pub krylov_dim: usize,
    pub krylov_tol: f64,
    /// One-site scheme only: number of initial two-site steps before bonds
    /// are padded to `max_bond` and the one-site integrator takes over.
    pub warmup_steps: usize,
}

impl Default for TdvpConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            t_max: 100.0,
            scheme: Scheme::TwoSite,
            max_bond: 5,
            svd_truncation: 1e-10,
            krylov_dim: 20,
            krylov_tol: 1e-10,
            warmup_steps: 1,
        }
    }
}

impl TdvpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.dt <= self.t_max) {
            return Err(Error::Config(format!(
                "dt = {} exceeds t_max = {}",
                self.dt, self.t_max
            )));
        }
        if self.krylov_dim < 3 {
            return Err(Error::Config(format!(
                "krylov_dim must be at least 3, got {}",
                self.krylov_dim
            )));
        }
        if !(self.krylov_tol > 0.0) {
            return Err(Error::Config("krylov_tol must be positive".into()));
        }
        if self.max_bond < 1 {
            return Err(Error::Config("max_bond must be at least 1".into()));
        }
        if !(self.svd_truncation >= 0.0 && self.svd_truncation < 1.0) {
            return Err(Error::Config(format!(
                "svd_truncation must lie in [0, 1), got {}",
                self.svd_truncation
            )));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt - 1e-9).ceil() as usize
    }

    fn krylov(&self) -> KrylovParams {
        KrylovParams {
            max_dim: self.krylov_dim,
            tol: self.krylov_tol,
        }
    }

    fn truncation(&self) -> Truncation {
        Truncation::relative(self.svd_truncation).with_max_rank(self.max_bond)
    }
}

/// Cached left and right environments. `left(i)` covers sites `0..i`,
/// `right(i)` covers sites `i + 1..`.
#[derive(Clone, Debug)]
pub struct Environment {
    left: Vec<Option<DenseTensor>>,
    right: Vec<Option<DenseTensor>>,
}

impl Environment {
    /// Environments for a state centered on site 0.
    pub fn new(psi: &Mps, h: &Mpo) -> Result<Self> {
        check_lattice(psi, h)?;
        if psi.center() != Some(0) {
            return dim_err("environments are built for a state centered on site 0");
        }
        let n = psi.len();
        let mut right = vec![None; n];
        right[n - 1] = Some(env::unit_env());
        for i in (1..n).rev() {
            let r = right[i].as_ref().expect("filled");
            right[i - 1] = Some(env::extend_right(r, psi.site(i), h.site(i))?);
        }
        let mut left = vec![None; n];
        left[0] = Some(env::unit_env());
        Ok(Self { left, right })
    }

    pub fn left(&self, i: usize) -> Result<&DenseTensor> {
        self.left[i]
            .as_ref()
            .ok_or_else(|| Error::Dimension(format!("left environment {i} not built")))
    }

    pub fn right(&self, i: usize) -> Result<&DenseTensor> {
        self.right[i]
            .as_ref()
            .ok_or_else(|| Error::Dimension(format!("right environment {i} not built")))
    }

    /// Left environment of site `i` computed without the cache.
    pub fn left_from_scratch(psi: &Mps, h: &Mpo, i: usize) -> Result<DenseTensor> {
        let mut e = env::unit_env();
        for j in 0..i {
            e = env::extend_left(&e, psi.site(j), h.site(j))?;
        }
        Ok(e)
    }

    /// Right environment of site `i` computed without the cache.
    pub fn right_from_scratch(psi: &Mps, h: &Mpo, i: usize) -> Result<DenseTensor> {
        let mut e = env::unit_env();
        for j in (i + 1..psi.len()).rev() {
            e = env::extend_right(&e, psi.site(j), h.site(j))?;
        }
        Ok(e)
    }
}

fn check_lattice(psi: &Mps, h: &Mpo) -> Result<()> {
    if psi.phys_dims() != h.local_dims() {
        return dim_err(format!(
            "MPS dims {:?} differ from MPO dims {:?}",
            psi.phys_dims(),
            h.local_dims()
        ));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SweepStats {
    pub matvecs: usize,
    pub max_discarded_weight: f64,
}

fn at_site(e: Error, site: usize) -> Error {
    match e {
        Error::NonHermitian { deviation, .. } => Error::NonHermitian { site, deviation },
        other => other,
    }
}

fn evolve_site(
    env: &Environment,
    h: &Mpo,
    i: usize,
    x: &DenseTensor,
    tau: C64,
    cfg: &TdvpConfig,
    stats: &mut SweepStats,
) -> Result<DenseTensor> {
    let (l, w, r) = (env.left(i)?, prepare_mpo(h.site(i))?, prepare_right(env.right(i)?)?);
    let (y, k) = expm_apply(|v| apply_one_site_prepared(l, &w, &r, v), x, tau, cfg.krylov())
        .map_err(|e| at_site(e, i))?;
    stats.matvecs += k.matvecs;
    Ok(y)
}

/// Bond between `i` and `i + 1`: `left(i + 1)` and `right(i)` surround it.
fn evolve_bond(
    env: &Environment,
    i: usize,
    c: &DenseTensor,
    tau: C64,
    cfg: &TdvpConfig,
    stats: &mut SweepStats,
) -> Result<DenseTensor> {
    let (l, r) = (env.left(i + 1)?, env.right(i)?);
    let (y, k) =
        expm_apply(|v| apply_bond(l, r, v), c, tau, cfg.krylov()).map_err(|e| at_site(e, i))?;
    stats.matvecs += k.matvecs;
    Ok(y)
}

fn evolve_pair(
    env: &Environment,
    h: &Mpo,
    i: usize,
    theta: &DenseTensor,
    tau: C64,
    cfg: &TdvpConfig,
    stats: &mut SweepStats,
) -> Result<DenseTensor> {
    let (l, r) = (env.left(i)?, prepare_right(env.right(i + 1)?)?);
    let (w1, w2) = (prepare_mpo(h.site(i))?, prepare_mpo(h.site(i + 1))?);
    let (y, k) = expm_apply(|v| apply_two_site_prepared(l, &w1, &w2, &r, v), theta, tau, cfg.krylov())
        .map_err(|e| at_site(e, i))?;
    stats.matvecs += k.matvecs;
    Ok(y)
}

/// Split `theta[l, s1, s2, r]` into a truncated, renormalised pair.
/// Returns `(U, S V)` when `center_right` and `(U S, V)` otherwise.
fn split_pair(
    theta: &DenseTensor,
    trunc: Truncation,
    center_right: bool,
    stats: &mut SweepStats,
) -> Result<(DenseTensor, DenseTensor)> {
    let before = theta.norm();
    let svd = theta.svd(&[0, 1], trunc)?;
    stats.max_discarded_weight = stats.max_discarded_weight.max(svd.discarded_weight);
    let kept: f64 = svd.singular_values.iter().map(|s| s * s).sum::<f64>().sqrt();
    let factor = if kept > 0.0 { before / kept } else { 1.0 };
    let s: Vec<f64> = svd.singular_values.iter().map(|x| x * factor).collect();
    let (mut u, mut v) = (svd.u, svd.v);
    if center_right {
        let stride = v.len() / s.len();
        for (j, z) in v.data_mut().iter_mut().enumerate() {
            *z *= s[j / stride];
        }
    } else {
        let k = s.len();
        for (j, z) in u.data_mut().iter_mut().enumerate() {
            *z *= s[j % k];
        }
    }
    Ok((u, v))
}

fn one_site_sweep(
    psi: &mut Mps,
    h: &Mpo,
    env: &mut Environment,
    cfg: &TdvpConfig,
    stats: &mut SweepStats,
) -> Result<()> {
    let n = psi.len();
    let fwd = C64::new(0.0, -0.5 * cfg.dt);
    let bwd = -fwd;

    for i in 0..n {
        let a = evolve_site(env, h, i, psi.site(i), fwd, cfg, stats)?;
        if i + 1 == n {
            psi.set_site(i, a, Some(i));
            break;
        }
        let (q, r) = a.qr(&[0, 1])?;
        env.left[i + 1] = Some(env::extend_left(env.left(i)?, &q, h.site(i))?);
        psi.set_site(i, q, None);
        let c = evolve_bond(env, i, &r, bwd, cfg, stats)?;
        let next = contract(&c, psi.site(i + 1), &[(1, 0)])?;
        psi.set_site(i + 1, next, Some(i + 1));
    }

    for i in (0..n).rev() {
        let a = evolve_site(env, h, i, psi.site(i), fwd, cfg, stats)?;
        if i == 0 {
            psi.set_site(0, a, Some(0));
            break;
        }
        let (l, q) = lq(&a)?;
        env.right[i - 1] = Some(env::extend_right(env.right(i)?, &q, h.site(i))?);
        psi.set_site(i, q, None);
        let c = evolve_bond(env, i - 1, &l, bwd, cfg, stats)?;
        let prev = contract(psi.site(i - 1), &c, &[(2, 0)])?;
        psi.set_site(i - 1, prev, Some(i - 1));
    }
    Ok(())
}

fn two_site_sweep(
    psi: &mut Mps,
    h: &Mpo,
    env: &mut Environment,
    cfg: &TdvpConfig,
    trunc: Truncation,
    stats: &mut SweepStats,
) -> Result<()> {
    let n = psi.len();
    let fwd = C64::new(0.0, -0.5 * cfg.dt);
    let bwd = -fwd;

    for i in 0..n - 1 {
        let theta = contract(psi.site(i), psi.site(i + 1), &[(2, 0)])?;
        let theta = evolve_pair(env, h, i, &theta, fwd, cfg, stats)?;
        let (u, sv) = split_pair(&theta, trunc, true, stats)?;
        env.left[i + 1] = Some(env::extend_left(env.left(i)?, &u, h.site(i))?);
        psi.set_site(i, u, None);
        let next = if i + 2 < n {
            evolve_site(env, h, i + 1, &sv, bwd, cfg, stats)?
        } else {
            sv
        };
        psi.set_site(i + 1, next, Some(i + 1));
    }

    for i in (1..n).rev() {
        let theta = contract(psi.site(i - 1), psi.site(i), &[(2, 0)])?;
        let theta = evolve_pair(env, h, i - 1, &theta, fwd, cfg, stats)?;
        let (us, v) = split_pair(&theta, trunc, false, stats)?;
        env.right[i - 1] = Some(env::extend_right(env.right(i)?, &v, h.site(i))?);
        psi.set_site(i, v, None);
        let prev = if i > 1 {
            evolve_site(env, h, i - 1, &us, bwd, cfg, stats)?
        } else {
            us
        };
        psi.set_site(i - 1, prev, Some(i - 1));
    }
    Ok(())
}

/// Advance `psi` by one time step `cfg.dt` with the requested scheme. The
/// state must be centered on site 0 and `env` must belong to it; both are
/// left in that condition.
pub fn tdvp_sweep(
    psi: &mut Mps,
    h: &Mpo,
    env: &mut Environment,
    cfg: &TdvpConfig,
    scheme: Scheme,
) -> Result<SweepStats> {
    check_lattice(psi, h)?;
    if psi.center() != Some(0) {
        return dim_err("TDVP sweep must start with the center on site 0");
    }
    let mut stats = SweepStats::default();
    if psi.len() == 1 {
        let a = evolve_site(env, h, 0, psi.site(0), C64::new(0.0, -cfg.dt), cfg, &mut stats)?;
        psi.set_site(0, a, Some(0));
        return Ok(stats);
    }
    match scheme {
        Scheme::OneSite => one_site_sweep(psi, h, env, cfg, &mut stats)?,
        Scheme::TwoSite => two_site_sweep(psi, h, env, cfg, cfg.truncation(), &mut stats)?,
    }
    Ok(stats)
}

/// Energy `<psi|H|psi>` from cached environments; `psi` centered on site 0.
fn center_energy(psi: &Mps, h: &Mpo, env: &Environment) -> Result<f64> {
    let a = psi.site(0);
    let ha = apply_one_site(env.left(0)?, h.site(0), env.right(0)?, a)?;
    Ok(a.inner(&ha)?.re / a.norm_sqr())
}

fn measure(
    psi: &Mps,
    h: &Mpo,
    env: &Environment,
    observables: &[Observable],
    t: f64,
    wall_ms: f64,
) -> Result<TimeSeriesRow> {
    let entropies = psi.bond_entropies()?;
    let values = observables
        .iter()
        .map(|o| o.measure(psi))
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeSeriesRow {
        t,
        sz: psi.expect_local(&crate::ops::sigma_z(), 0)?.re,
        norm: psi.norm(),
        energy: center_energy(psi, h, env)?,
        max_bond_entropy: entropies.into_iter().fold(0.0, f64::max),
        max_bond: psi.max_bond(),
        observables: values,
        wall_ms,
    })
}

/// Evolve `psi0` to `cfg.t_max`, measuring after every step. `on_row` sees
/// every row as soon as it is produced. On non-finite values the error
/// carries the last finite state.
pub fn evolve(
    psi0: &Mps,
    h: &Mpo,
    cfg: &TdvpConfig,
    observables: &[Observable],
    mut on_row: impl FnMut(&TimeSeriesRow),
) -> Result<(Mps, TimeSeries)> {
    cfg.validate()?;
    check_lattice(psi0, h)?;
    let mut psi = psi0.clone().canonicalized(0)?;
    let mut env = Environment::new(&psi, h)?;
    let mut series = TimeSeries::new(observables.iter().map(|o| o.name().to_string()).collect());

    let row = measure(&psi, h, &env, observables, 0.0, 0.0)?;
    on_row(&row);
    series.push(row)?;

    let warmup = match cfg.scheme {
        Scheme::OneSite => cfg.warmup_steps,
        Scheme::TwoSite => 0,
    };
    for step in 1..=cfg.n_steps() {
        let start = Instant::now();
        let last_good = psi.clone();
        let scheme = if step <= warmup {
            Scheme::TwoSite
        } else {
            cfg.scheme
        };
        if cfg.scheme == Scheme::OneSite && step == warmup + 1 {
            psi.pad_bonds(cfg.max_bond)?;
            psi.canonicalize(0)?;
            env = Environment::new(&psi, h)?;
        }
        tdvp_sweep(&mut psi, h, &mut env, cfg, scheme)?;
        let t = step as f64 * cfg.dt;
        if !psi.is_finite() {
            return Err(Error::NonFinite {
                step,
                time: t,
                checkpoint: Box::new(last_good),
            });
        }
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let row = measure(&psi, h, &env, observables, t, wall_ms)?;
        if !row.sz.is_finite() || !row.energy.is_finite() {
            return Err(Error::NonFinite {
                step,
                time: t,
                checkpoint: Box::new(last_good),
            });
        }
        on_row(&row);
        series.push(row)?;
    }
    Ok((psi, series))
}
