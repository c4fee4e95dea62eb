//! Matrix product states on the (optionally split) spin-boson lattice.
//!
//! Site tensors have legs `(chi_left, sigma, chi_right)`. When a center is
//! recorded, every site to its left is a left isometry (`A^dag A = I` over
//! `chi_left * sigma`) and every site to its right a right isometry.
//!
//! The split layout is `[spin, b'_1, b''_1, ..., b'_L, b''_L]`; a Fock level
//! `m` of boson `n` lives on the pair as `(m / d, m % d)` with `d = sqrt(d_b)`.

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env;
use crate::error::{dim_err, Error, Result};
use crate::mpo::{Mpo, SplitIndexMap};
use crate::ops;
use crate::tensor::{contract, DenseTensor, Truncation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeLayout {
    pub n_bosons: usize,
    pub d_b: usize,
    pub split: bool,
}

impl LatticeLayout {
    pub fn new(n_bosons: usize, d_b: usize, split: bool) -> Result<Self> {
        if n_bosons == 0 || d_b < 2 {
            return Err(Error::Parameter(format!(
                "layout needs bosons and d_b >= 2, got {n_bosons} and {d_b}"
            )));
        }
        if split {
            SplitIndexMap::new(d_b)?;
        }
        Ok(Self {
            n_bosons,
            d_b,
            split,
        })
    }

    pub fn n_sites(&self) -> usize {
        1 + self.n_bosons * if self.split { 2 } else { 1 }
    }

    pub fn boson_dim(&self) -> usize {
        if self.split {
            (self.d_b as f64).sqrt().round() as usize
        } else {
            self.d_b
        }
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        let mut dims = vec![2];
        dims.resize(self.n_sites(), self.boson_dim());
        dims
    }

    /// First lattice site of boson `n` (zero-based).
    pub fn boson_site(&self, n: usize) -> usize {
        if self.split {
            1 + 2 * n
        } else {
            1 + n
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductStateSpec {
    pub spin_state: [C64; 2],
    /// Fock level per boson; missing entries default to the vacuum.
    pub boson_levels: Vec<usize>,
}

impl ProductStateSpec {
    pub fn spin_up() -> Self {
        Self {
            spin_state: [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            boson_levels: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mps {
    sites: Vec<DenseTensor>,
    center: Option<usize>,
}

const CHECKPOINT_FORMAT: &str = "sitesplit-mps";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    center: Option<usize>,
    sites: Vec<DenseTensor>,
}

fn basis_vector(d: usize, k: usize) -> DenseTensor {
    let mut v = DenseTensor::zeros(&[1, d, 1]);
    v.set(&[0, k, 0], C64::new(1.0, 0.0));
    v
}

/// `(L, Q)` with `t = L Q` and `Q` a right isometry over `(sigma, chi_right)`.
pub(crate) fn lq(t: &DenseTensor) -> Result<(DenseTensor, DenseTensor)> {
    let (q, r) = t.permute(&[1, 2, 0])?.qr(&[0, 1])?;
    Ok((r.permute(&[1, 0])?, q.permute(&[2, 0, 1])?))
}

fn entropy_of(singular_values: &[f64]) -> f64 {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return 0.0;
    }
    singular_values
        .iter()
        .map(|s| s * s / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

impl Mps {
    pub fn new(sites: Vec<DenseTensor>, center: Option<usize>) -> Result<Self> {
        if sites.is_empty() {
            return dim_err("MPS needs at least one site");
        }
        for (i, a) in sites.iter().enumerate() {
            if a.rank() != 3 {
                return dim_err(format!("site {i} has rank {}", a.rank()));
            }
        }
        if sites[0].dims()[0] != 1 || sites[sites.len() - 1].dims()[2] != 1 {
            return dim_err("MPS boundary bonds must have extent 1");
        }
        for i in 1..sites.len() {
            if sites[i - 1].dims()[2] != sites[i].dims()[0] {
                return dim_err(format!("bond {} mismatch", i - 1));
            }
        }
        if matches!(center, Some(c) if c >= sites.len()) {
            return dim_err("center out of range");
        }
        Ok(Self { sites, center })
    }

    /// Product state on `layout`. An unnormalised spin vector is normalised
    /// with a warning.
    pub fn product_state(spec: &ProductStateSpec, layout: &LatticeLayout) -> Result<Self> {
        let norm = spec
            .spin_state
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Parameter("spin state has zero norm".into()));
        }
        if (norm - 1.0).abs() > 1e-12 {
            log::warn!("spin state has norm {norm}; normalising");
        }
        let mut spin = DenseTensor::zeros(&[1, 2, 1]);
        for k in 0..2 {
            spin.set(&[0, k, 0], spec.spin_state[k] / norm);
        }
        let mut sites = vec![spin];
        for n in 0..layout.n_bosons {
            let level = spec.boson_levels.get(n).copied().unwrap_or(0);
            if level >= layout.d_b {
                return Err(Error::Parameter(format!(
                    "boson {n} level {level} >= d_b = {}",
                    layout.d_b
                )));
            }
            if layout.split {
                let (p, q) = SplitIndexMap::new(layout.d_b)?.split(level)?;
                let d = layout.boson_dim();
                sites.push(basis_vector(d, p));
                sites.push(basis_vector(d, q));
            } else {
                sites.push(basis_vector(layout.d_b, level));
            }
        }
        Self::new(sites, Some(0))
    }

    /// Random normalised state with bond dimension up to `bond`, centered on
    /// site 0.
    pub fn random(phys_dims: &[usize], bond: usize, rng: &mut impl Rng) -> Result<Self> {
        let n = phys_dims.len();
        let mut bonds = vec![1usize; n + 1];
        for i in 1..n {
            let capped = |ds: &[usize]| ds.iter().fold(1usize, |p, &d| p.saturating_mul(d).min(bond));
            bonds[i] = capped(&phys_dims[..i]).min(capped(&phys_dims[i..]));
        }
        let sites = (0..n)
            .map(|i| {
                DenseTensor::from_fn(&[bonds[i], phys_dims[i], bonds[i + 1]], |_| {
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                })
            })
            .collect();
        let mut psi = Self::new(sites, None)?;
        psi.canonicalize(0)?;
        psi.normalize()?;
        Ok(psi)
    }

    /// Exact MPS of a dense state vector, truncated per bond.
    pub fn from_dense(vector: &DenseTensor, phys_dims: &[usize], trunc: Truncation) -> Result<Self> {
        let total: usize = phys_dims.iter().product();
        if vector.len() != total {
            return dim_err(format!("vector length {} vs {total}", vector.len()));
        }
        let mut rest = vector.reshaped(&[1, total])?;
        let mut sites = Vec::with_capacity(phys_dims.len());
        for (i, &d) in phys_dims.iter().enumerate() {
            let chi = rest.dims()[0];
            let tail = rest.len() / (chi * d);
            let m = rest.reshape(&[chi, d, tail])?;
            if i + 1 == phys_dims.len() {
                sites.push(m);
                break;
            }
            let svd = m.svd(&[0, 1], trunc)?;
            sites.push(svd.u);
            let mut sv = svd.v;
            let k = svd.singular_values.len();
            let stride = sv.len() / k;
            for (j, z) in sv.data_mut().iter_mut().enumerate() {
                *z *= svd.singular_values[j / stride];
            }
            rest = sv;
        }
        let last = sites.len() - 1;
        Self::new(sites, Some(last))
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

    pub fn center(&self) -> Option<usize> {
        self.center
    }

    /// Replace a site tensor. The caller states the resulting center.
    pub(crate) fn set_site(&mut self, i: usize, a: DenseTensor, center: Option<usize>) {
        self.sites[i] = a;
        self.center = center;
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|a| a.dims()[1]).collect()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1]
            .iter()
            .map(|a| a.dims()[2])
            .collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn is_finite(&self) -> bool {
        self.sites.iter().all(DenseTensor::is_finite)
    }

    fn shift_right(&mut self, i: usize) -> Result<()> {
        let (q, r) = self.sites[i].qr(&[0, 1])?;
        self.sites[i] = q;
        self.sites[i + 1] = contract(&r, &self.sites[i + 1], &[(1, 0)])?;
        Ok(())
    }

    fn shift_left(&mut self, i: usize) -> Result<()> {
        let (l, q) = lq(&self.sites[i])?;
        self.sites[i] = q;
        self.sites[i - 1] = contract(&self.sites[i - 1], &l, &[(2, 0)])?;
        Ok(())
    }

    /// Bring the state into mixed canonical form around `center`. Only the
    /// sites between the old and new center are touched when a center is
    /// already known.
    pub fn canonicalize(&mut self, center: usize) -> Result<()> {
        if center >= self.len() {
            return dim_err(format!("center {center} out of range"));
        }
        let (from_left, from_right) = match self.center {
            Some(c) => (c.min(center), c.max(center)),
            None => (0, self.len() - 1),
        };
        for i in from_left..center {
            self.shift_right(i)?;
        }
        for i in (center + 1..=from_right).rev() {
            self.shift_left(i)?;
        }
        self.center = Some(center);
        Ok(())
    }

    pub fn canonicalized(mut self, center: usize) -> Result<Self> {
        self.canonicalize(center)?;
        Ok(self)
    }

    /// Enlarge every bond to `min(chi, largest possible)` with zero-weight
    /// directions. The state is unchanged; the new basis vectors are unit
    /// vectors orthogonalised against the existing left isometry, taken in
    /// order of increasing `(chi_left, sigma)` index. Leaves the center on
    /// the last site.
    pub fn pad_bonds(&mut self, chi: usize) -> Result<()> {
        let n = self.len();
        let phys = self.phys_dims();
        self.canonicalize(n - 1)?;
        let zero = C64::new(0.0, 0.0);
        for i in 0..n - 1 {
            let (l, d, r) = {
                let x = self.sites[i].dims();
                (x[0], x[1], x[2])
            };
            let right_max = phys[i + 1..]
                .iter()
                .fold(1usize, |acc, &x| acc.saturating_mul(x));
            let target = chi.min(l * d).min(right_max);
            if target <= r {
                continue;
            }
            let rows = l * d;
            let data = self.sites[i].data();
            let mut cols: Vec<Vec<C64>> = (0..r)
                .map(|k| (0..rows).map(|j| data[j * r + k]).collect())
                .collect();
            for j in 0..rows {
                if cols.len() == target {
                    break;
                }
                let mut v = vec![zero; rows];
                v[j] = C64::new(1.0, 0.0);
                for _ in 0..2 {
                    for c in &cols {
                        let overlap: C64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                        for (x, a) in v.iter_mut().zip(c) {
                            *x -= overlap * a;
                        }
                    }
                }
                let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm > 1e-6 {
                    v.iter_mut().for_each(|z| *z /= norm);
                    cols.push(v);
                }
            }
            let new_r = cols.len();
            let a = DenseTensor::from_fn(&[l, d, new_r], |x| cols[x[2]][x[0] * d + x[1]]);
            let next = &self.sites[i + 1];
            let (d2, r2) = (next.dims()[1], next.dims()[2]);
            let b = DenseTensor::from_fn(&[new_r, d2, r2], |x| {
                if x[0] < r {
                    next.get(x)
                } else {
                    zero
                }
            });
            self.sites[i] = a;
            self.sites[i + 1] = b;
        }
        Ok(())
    }

    /// Transfer matrix product with an optional operator on one site.
    fn transfer(e: &DenseTensor, a: &DenseTensor, op: Option<&DenseTensor>) -> Result<DenseTensor> {
        let t = contract(e, a, &[(1, 0)])?; // a s b'
        match op {
            None => contract(&a.conj(), &t, &[(0, 0), (1, 1)]),
            Some(o) => {
                let t = contract(&t, o, &[(1, 1)])?; // a b' s'
                contract(&a.conj(), &t, &[(0, 0), (1, 2)])
            }
        }
    }

    fn ones() -> DenseTensor {
        DenseTensor::scalar(C64::new(1.0, 0.0))
            .reshape(&[1, 1])
            .expect("1x1")
    }

    /// `<self|other>`
    pub fn overlap(&self, other: &Mps) -> Result<C64> {
        if self.phys_dims() != other.phys_dims() {
            return dim_err("overlap of states on different lattices");
        }
        let mut e = Self::ones();
        for (a, b) in self.sites.iter().zip(&other.sites) {
            let t = contract(&e, b, &[(1, 0)])?;
            e = contract(&a.conj(), &t, &[(0, 0), (1, 1)])?;
        }
        Ok(e.data()[0])
    }

    pub fn norm_sqr(&self) -> f64 {
        if let Some(c) = self.center {
            return self.sites[c].norm_sqr();
        }
        self.overlap(self).map(|z| z.re).unwrap_or(f64::NAN)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Parameter(format!("cannot normalise state of norm {n}")));
        }
        let c = self.center.unwrap_or(0);
        self.sites[c].scale(C64::new(1.0 / n, 0.0));
        Ok(())
    }

    /// `<O_site> = <psi|O|psi> / <psi|psi>` for a `d x d` operator.
    pub fn expect_local(&self, op: &DenseTensor, site: usize) -> Result<C64> {
        if site >= self.len() {
            return dim_err(format!("site {site} out of range"));
        }
        let d = self.sites[site].dims()[1];
        if op.dims() != [d, d] {
            return dim_err(format!("operator {:?} on site of dimension {d}", op.dims()));
        }
        if self.center == Some(site) {
            let a = &self.sites[site];
            let t = contract(a, op, &[(1, 1)])?; // l r s'
            let num = contract(&a.conj(), &t, &[(0, 0), (2, 1), (1, 2)])?.data()[0];
            return Ok(num / a.norm_sqr());
        }
        let mut e = Self::ones();
        let mut norm = Self::ones();
        for (i, a) in self.sites.iter().enumerate() {
            e = Self::transfer(&e, a, (i == site).then_some(op))?;
            norm = Self::transfer(&norm, a, None)?;
        }
        Ok(e.data()[0] / norm.data()[0].re)
    }

    /// Expectation of an operator on sites `first` and `first + 1`, given as
    /// a `(d1 d2) x (d1 d2)` matrix with `first` on the slow index.
    pub fn expect_pair(&self, op: &DenseTensor, first: usize) -> Result<C64> {
        if first + 1 >= self.len() {
            return dim_err(format!("pair at {first} out of range"));
        }
        let (d1, d2) = (self.sites[first].dims()[1], self.sites[first + 1].dims()[1]);
        if op.dims() != [d1 * d2, d1 * d2] {
            return dim_err(format!("operator {:?} on pair {d1}x{d2}", op.dims()));
        }
        let op4 = op.reshaped(&[d1, d2, d1, d2])?;
        let mut e = Self::ones();
        let mut norm = Self::ones();
        let mut i = 0;
        while i < self.len() {
            let a = &self.sites[i];
            if i == first {
                let theta = contract(a, &self.sites[i + 1], &[(2, 0)])?;
                let t = contract(&e, &theta, &[(1, 0)])?; // a s1 s2 b'
                let t = contract(&t, &op4, &[(1, 2), (2, 3)])?; // a b' s1' s2'
                e = contract(&theta.conj(), &t, &[(0, 0), (1, 2), (2, 3)])?;
                norm = Self::transfer(&norm, a, None)?;
                norm = Self::transfer(&norm, &self.sites[i + 1], None)?;
                i += 2;
            } else {
                e = Self::transfer(&e, a, None)?;
                norm = Self::transfer(&norm, a, None)?;
                i += 1;
            }
        }
        Ok(e.data()[0] / norm.data()[0].re)
    }

    /// Mean occupation of boson `n`. On a split lattice the number operator
    /// acts on the pair `(b'_n, b''_n)`.
    pub fn expect_boson_number(&self, layout: &LatticeLayout, n: usize) -> Result<f64> {
        if n >= layout.n_bosons || layout.n_sites() != self.len() {
            return Err(Error::Parameter(format!("boson {n} not on this lattice")));
        }
        let site = layout.boson_site(n);
        let number = ops::number(layout.d_b);
        let value = if layout.split {
            self.expect_pair(&number, site)?
        } else {
            self.expect_local(&number, site)?
        };
        Ok(value.re)
    }

    /// `<psi|H|psi> / <psi|psi>` for an MPO on the same lattice.
    pub fn expect_mpo(&self, mpo: &Mpo) -> Result<C64> {
        if mpo.local_dims() != self.phys_dims() {
            return dim_err("MPO and MPS lattices differ");
        }
        let mut e = env::unit_env();
        for (a, w) in self.sites.iter().zip(mpo.sites()) {
            e = env::extend_left(&e, a, w)?;
        }
        Ok(e.data()[0] / self.norm_sqr())
    }

    /// Schmidt values across every bond, left to right.
    pub fn schmidt_values(&self) -> Result<Vec<Vec<f64>>> {
        let mut psi = self.clone();
        psi.canonicalize(0)?;
        let mut out = Vec::with_capacity(self.len() - 1);
        for i in 0..psi.len() - 1 {
            let svd = psi.sites[i].svd(&[0, 1], Truncation::EXACT)?;
            let mut sv = svd.v;
            let k = svd.singular_values.len();
            let stride = sv.len() / k;
            for (j, z) in sv.data_mut().iter_mut().enumerate() {
                *z *= svd.singular_values[j / stride];
            }
            psi.sites[i] = svd.u;
            psi.sites[i + 1] = contract(&sv, &psi.sites[i + 1], &[(1, 0)])?;
            out.push(svd.singular_values);
        }
        Ok(out)
    }

    /// Von Neumann entropy of every bond.
    pub fn bond_entropies(&self) -> Result<Vec<f64>> {
        Ok(self
            .schmidt_values()?
            .iter()
            .map(|s| entropy_of(s))
            .collect())
    }

    /// Von Neumann entropy across the bond between `bond` and `bond + 1`.
    pub fn bond_entropy(&self, bond: usize) -> Result<f64> {
        if bond + 1 >= self.len() {
            return dim_err(format!("bond {bond} out of range"));
        }
        let mut psi = self.clone();
        psi.canonicalize(bond)?;
        let svd = psi.sites[bond].svd(&[0, 1], Truncation::EXACT)?;
        Ok(entropy_of(&svd.singular_values))
    }

    /// Full state vector, site 0 on the slowest index.
    pub fn to_dense(&self) -> Result<DenseTensor> {
        let mut acc = self.sites[0].clone();
        for a in &self.sites[1..] {
            acc = contract(&acc, a, &[(acc.rank() - 1, 0)])?;
        }
        let n = acc.len();
        acc.reshape(&[n])
    }

    pub fn to_checkpoint(&self) -> Result<String> {
        serde_json::to_string(&Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            center: self.center,
            sites: self.sites.clone(),
        })
        .map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let c: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if c.format != CHECKPOINT_FORMAT || c.version != CHECKPOINT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported checkpoint {} v{}",
                c.format, c.version
            )));
        }
        Self::new(c.sites, c.center)
    }
}
