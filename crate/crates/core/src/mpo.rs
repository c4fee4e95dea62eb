//! Matrix product operators for the spin-boson chain and their site splitting.
//!
//! Site tensors carry legs `(w_left, up, low, w_right)`. The spin-boson MPO is
//! lower-triangular in the usual finite-state-machine sense with bond
//! dimension 5:
//!
//! ```text
//! W[0]   = ( I_s  sz  0   0   -D/2 sx )
//! W[n]   = ( I_b  0   b+  b   w n_b   )
//!          ( 0    0   0   0   c0 (b + b+) )   only on the first boson
//!          ( 0    0   0   0   t b     )
//!          ( 0    0   0   0   t b+    )
//!          ( 0    0   0   0   I_b     )
//! W[last] = last column of W[n]
//! ```
//!
//! The hopping `t` in rows 2 and 3 of site `n` couples it to site `n - 1`,
//! so boson `m` (site `m + 1`) carries `t_{m-1}`.
//!
//! Splitting a boson site with `d_b = d * d` levels rewrites
//! `W[wl, (s' s''), (l' l''), wr]` as the matrix `[(wl s' l'), (s'' l'' wr)]`,
//! takes its SVD and absorbs `sqrt(Lambda)` into both halves:
//! `U~[wl, s', l', k]` and `V~[k, s'', l'', wr]`.

use num_complex::Complex64 as C64;

use crate::chain::ChainCoefficients;
use crate::error::{dim_err, Error, Result};
use crate::ops;
use crate::tensor::{contract, DenseTensor, Truncation};

/// Bond dimension of the spin-boson MPO.
pub const SPIN_BOSON_BOND: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct Mpo {
    sites: Vec<DenseTensor>,
}

impl Mpo {
    pub fn new(sites: Vec<DenseTensor>) -> Result<Self> {
        if sites.is_empty() {
            return dim_err("MPO needs at least one site");
        }
        for (i, w) in sites.iter().enumerate() {
            if w.rank() != 4 {
                return dim_err(format!("site {i} has rank {}", w.rank()));
            }
            if w.dims()[1] != w.dims()[2] {
                return dim_err(format!("site {i} has non-square physical legs {:?}", w.dims()));
            }
        }
        if sites[0].dims()[0] != 1 || sites[sites.len() - 1].dims()[3] != 1 {
            return dim_err("MPO boundary bonds must have extent 1");
        }
        for i in 1..sites.len() {
            if sites[i - 1].dims()[3] != sites[i].dims()[0] {
                return dim_err(format!("bond {} mismatch", i - 1));
            }
        }
        Ok(Self { sites })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn site(&self, i: usize) -> &DenseTensor {
        &self.sites[i]
    }

    pub fn sites(&self) -> &[DenseTensor] {
        &self.sites
    }

    pub fn local_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|w| w.dims()[1]).collect()
    }

    /// Extents of the `len - 1` inner bonds.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1]
            .iter()
            .map(|w| w.dims()[3])
            .collect()
    }

    /// Contract the whole chain into a `D x D` matrix, `D` the product of the
    /// local dimensions. Site 0 is the slowest index.
    pub fn to_dense(&self) -> Result<DenseTensor> {
        let first = &self.sites[0];
        let d = first.dims();
        let mut acc = first.reshaped(&[d[1], d[2], d[3]])?;
        for w in &self.sites[1..] {
            let (up, low) = (acc.dims()[0], acc.dims()[1]);
            let (du, dl, wr) = (w.dims()[1], w.dims()[2], w.dims()[3]);
            acc = contract(&acc, w, &[(2, 0)])?
                .permute(&[0, 2, 1, 3, 4])?
                .reshape(&[up * du, low * dl, wr])?;
        }
        let (up, low) = (acc.dims()[0], acc.dims()[1]);
        acc.reshape(&[up, low])
    }
}

fn set_block(w: &mut DenseTensor, wl: usize, wr: usize, op: &DenseTensor, coeff: f64) {
    let d = op.dims()[0];
    for i in 0..d {
        for j in 0..d {
            let v = op.get(&[i, j]);
            if v != C64::new(0.0, 0.0) {
                w.set(&[wl, i, j, wr], v * coeff);
            }
        }
    }
}

/// The spin-boson MPO with one spin site and `chain.len()` boson sites of
/// `d_b` levels each.
pub fn build_spin_boson_mpo(chain: &ChainCoefficients, delta: f64, d_b: usize) -> Result<Mpo> {
    if d_b < 2 {
        return Err(Error::Parameter(format!("d_b must be at least 2, got {d_b}")));
    }
    if chain.is_empty() {
        return Err(Error::Parameter("empty chain".into()));
    }
    let x = SPIN_BOSON_BOND;
    let mut sites = Vec::with_capacity(chain.len() + 1);

    let mut w0 = DenseTensor::zeros(&[1, 2, 2, x]);
    set_block(&mut w0, 0, 0, &ops::spin_identity(), 1.0);
    set_block(&mut w0, 0, 1, &ops::sigma_z(), 1.0);
    set_block(&mut w0, 0, 4, &ops::sigma_x(), -0.5 * delta);
    sites.push(w0);

    let (b, bd, n, id) = (
        ops::annihilation(d_b),
        ops::creation(d_b),
        ops::number(d_b),
        ops::boson_identity(d_b),
    );
    let mut coupling = b.clone();
    coupling.add_scaled(&bd, C64::new(1.0, 0.0))?;

    let last = chain.len() - 1;
    for m in 0..chain.len() {
        let terminal = m == last;
        let wr = if terminal { 1 } else { x };
        let out = if terminal { 0 } else { x - 1 };
        let mut w = DenseTensor::zeros(&[x, d_b, d_b, wr]);
        if !terminal {
            set_block(&mut w, 0, 0, &id, 1.0);
            set_block(&mut w, 0, 2, &bd, 1.0);
            set_block(&mut w, 0, 3, &b, 1.0);
        }
        set_block(&mut w, 0, out, &n, chain.omega[m]);
        if m == 0 {
            set_block(&mut w, 1, out, &coupling, chain.c0);
        } else {
            let t = chain.hopping[m - 1];
            set_block(&mut w, 2, out, &b, t);
            set_block(&mut w, 3, out, &bd, t);
        }
        set_block(&mut w, 4, out, &id, 1.0);
        sites.push(w);
    }
    Mpo::new(sites)
}

/// Smallest perfect square `>= d`.
pub fn next_perfect_square(d: usize) -> usize {
    let mut r = (d as f64).sqrt().floor() as usize;
    while r * r < d {
        r += 1;
    }
    r * r
}

/// Round a requested boson dimension up to a perfect square, warning when the
/// value changes. The added levels start empty.
pub fn resolve_split_dim(d_b: usize) -> usize {
    let sq = next_perfect_square(d_b);
    if sq != d_b {
        log::warn!("d_b = {d_b} is not a perfect square; padding to {sq} levels");
    }
    sq
}

/// Index map between a `d_b` level site and its two `sqrt(d_b)` halves:
/// `level = d_half * first + second`, all zero-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitIndexMap {
    d_b: usize,
    d_half: usize,
}

impl SplitIndexMap {
    pub fn new(d_b: usize) -> Result<Self> {
        let d_half = (d_b as f64).sqrt().round() as usize;
        if d_b < 1 || d_half * d_half != d_b {
            return Err(Error::Config(format!("d_b = {d_b} is not a perfect square")));
        }
        Ok(Self { d_b, d_half })
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn d_half(&self) -> usize {
        self.d_half
    }

    pub fn split(&self, level: usize) -> Result<(usize, usize)> {
        if level >= self.d_b {
            return Err(Error::Parameter(format!("level {level} >= d_b = {}", self.d_b)));
        }
        Ok((level / self.d_half, level % self.d_half))
    }

    pub fn join(&self, first: usize, second: usize) -> Result<usize> {
        if first >= self.d_half || second >= self.d_half {
            return Err(Error::Parameter(format!(
                "split indices ({first}, {second}) exceed {}",
                self.d_half
            )));
        }
        Ok(self.d_half * first + second)
    }
}

#[derive(Clone, Debug)]
pub struct SiteSplit {
    pub u_tilde: DenseTensor,
    pub v_tilde: DenseTensor,
    /// All singular values, descending, length `min(rows, cols)`.
    pub spectrum: Vec<f64>,
    pub discarded_weight: f64,
}

impl SiteSplit {
    pub fn k_eff(&self) -> usize {
        self.u_tilde.dims()[3]
    }
}

/// Split one MPO tensor `(wl, d_b, d_b, wr)` into `U~ (wl, d, d, k)` and
/// `V~ (k, d, d, wr)`, keeping singular values `>= threshold * Lambda_1`.
pub fn split_mpo_site(w: &DenseTensor, map: &SplitIndexMap, threshold: f64) -> Result<SiteSplit> {
    if w.rank() != 4 || w.dims()[1] != map.d_b() || w.dims()[2] != map.d_b() {
        return dim_err(format!(
            "site dims {:?} do not carry d_b = {} physical levels",
            w.dims(),
            map.d_b()
        ));
    }
    let (wl, wr, d) = (w.dims()[0], w.dims()[3], map.d_half());
    let six = w
        .reshaped(&[wl, d, d, d, d, wr])?
        .permute(&[0, 1, 3, 2, 4, 5])?;
    let svd = six.svd(&[0, 1, 2], Truncation::relative(threshold))?;
    let roots: Vec<f64> = svd.singular_values.iter().map(|s| s.sqrt()).collect();
    let k = roots.len();

    let mut u_tilde = svd.u;
    for (i, z) in u_tilde.data_mut().iter_mut().enumerate() {
        *z *= roots[i % k];
    }
    let mut v_tilde = svd.v;
    let stride = v_tilde.len() / k;
    for (i, z) in v_tilde.data_mut().iter_mut().enumerate() {
        *z *= roots[i / stride];
    }
    Ok(SiteSplit {
        u_tilde,
        v_tilde,
        spectrum: svd.spectrum,
        discarded_weight: svd.discarded_weight,
    })
}

#[derive(Clone, Debug)]
pub struct SplitMpo {
    /// `[W[0], U~[1], V~[1], ..., U~[L], V~[L]]`
    pub mpo: Mpo,
    /// Retained split rank per boson site.
    pub k_eff: Vec<usize>,
    /// Full singular spectrum per boson site.
    pub spectra: Vec<Vec<f64>>,
    pub discarded_weight: Vec<f64>,
}

/// Split every site after the spin site.
pub fn split_full_mpo(mpo: &Mpo, threshold: f64) -> Result<SplitMpo> {
    let mut sites = vec![mpo.site(0).clone()];
    let mut k_eff = Vec::new();
    let mut spectra = Vec::new();
    let mut discarded_weight = Vec::new();
    for w in &mpo.sites()[1..] {
        let map = SplitIndexMap::new(w.dims()[1])?;
        let split = split_mpo_site(w, &map, threshold)?;
        k_eff.push(split.k_eff());
        spectra.push(split.spectrum);
        discarded_weight.push(split.discarded_weight);
        sites.push(split.u_tilde);
        sites.push(split.v_tilde);
    }
    Ok(SplitMpo {
        mpo: Mpo::new(sites)?,
        k_eff,
        spectra,
        discarded_weight,
    })
}

impl SplitMpo {
    /// `site,k,lambda_k` rows with 1-based `site` (original boson numbering)
    /// and 1-based `k`.
    pub fn spectra_csv(&self) -> String {
        let mut out = String::from("site,k,lambda_k\n");
        for (i, spec) in self.spectra.iter().enumerate() {
            for (k, s) in spec.iter().enumerate() {
                out.push_str(&format!("{},{},{:e}\n", i + 1, k + 1, s));
            }
        }
        out
    }
}
