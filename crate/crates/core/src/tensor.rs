//! Dense complex tensors in row-major layout.
//!
//! Legs are addressed by position. Reshape never touches the stored data, so
//! splitting a leg of extent `d*d` into two legs of extent `d` is free and
//! gives the index map `sigma = d * sigma' + sigma''` (zero-based).
//!
//! Matrix factorizations take a *bipartition*: the legs that form the row
//! index, in the order given. The remaining legs form the column index in
//! ascending order.

use std::borrow::Cow;

use matrixmultiply::CGemmOption;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<C64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return dim_err(format!("zero extent in {dims:?}"));
        }
        let size: usize = dims.iter().product();
        if size != data.len() {
            return dim_err(format!(
                "dims {dims:?} hold {size} values but {} were given",
                data.len()
            ));
        }
        Ok(Self { dims, data })
    }

    /// Panics on a zero extent.
    pub fn zeros(dims: &[usize]) -> Self {
        assert!(dims.iter().all(|&d| d > 0), "zero extent in {dims:?}");
        let size = dims.iter().product();
        Self {
            dims: dims.to_vec(),
            data: vec![C64::new(0.0, 0.0); size],
        }
    }

    pub fn scalar(value: C64) -> Self {
        Self {
            dims: Vec::new(),
            data: vec![value],
        }
    }

    pub fn from_fn<F>(dims: &[usize], mut f: F) -> Self
    where
        F: FnMut(&[usize]) -> C64,
    {
        let mut out = Self::zeros(dims);
        let mut idx = vec![0usize; dims.len()];
        for value in out.data.iter_mut() {
            *value = f(&idx);
            increment(&mut idx, dims);
        }
        out
    }

    pub fn from_real(dims: &[usize], values: &[f64]) -> Result<Self> {
        Self::new(
            dims.to_vec(),
            values.iter().map(|&x| C64::new(x, 0.0)).collect(),
        )
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(&[n, n], |i| {
            if i[0] == i[1] {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.dims.len(), "index rank mismatch");
        idx.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| {
            assert!(i < d, "index {i} out of range {d}");
            acc * d + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: C64) {
        let off = self.offset(idx);
        self.data[off] = value;
    }

    pub fn reshape(self, dims: &[usize]) -> Result<Self> {
        Self::new(dims.to_vec(), self.data)
    }

    pub fn reshaped(&self, dims: &[usize]) -> Result<Self> {
        self.clone().reshape(dims)
    }

    /// Leg `k` of the result is leg `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let rank = self.rank();
        if perm.len() != rank || !is_permutation(perm) {
            return dim_err(format!("{perm:?} is not a permutation of {rank} legs"));
        }
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return Ok(self.clone());
        }
        let src_strides = strides(&self.dims);
        let new_dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let step: Vec<usize> = perm.iter().map(|&p| src_strides[p]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        let mut idx = vec![0usize; rank];
        let mut src = 0usize;
        // innermost leg is copied as a strided run
        let inner = rank - 1;
        let inner_dim = new_dims[inner];
        let inner_step = step[inner];
        loop {
            let mut s = src;
            for _ in 0..inner_dim {
                data.push(self.data[s]);
                s += inner_step;
            }
            // odometer over the outer legs
            let mut k = inner;
            loop {
                if k == 0 {
                    return Self::new(new_dims, data);
                }
                k -= 1;
                idx[k] += 1;
                src += step[k];
                if idx[k] < new_dims[k] {
                    break;
                }
                src -= step[k] * idx[k];
                idx[k] = 0;
            }
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&mut self, factor: C64) {
        self.data.iter_mut().for_each(|z| *z *= factor);
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, other: &Self, alpha: C64) -> Result<()> {
        if self.dims != other.dims {
            return dim_err(format!("{:?} vs {:?}", self.dims, other.dims));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self|other>` over all entries, conjugating `self`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dims != other.dims {
            return dim_err(format!("{:?} vs {:?}", self.dims, other.dims));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.dims != other.dims {
            return dim_err(format!("{:?} vs {:?}", self.dims, other.dims));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Group `row_legs` (in order) against the remaining legs (ascending).
    /// Returns the permuted tensor with row legs first plus the row count.
    fn as_matrix(&self, row_legs: &[usize]) -> Result<(Self, Vec<usize>, Vec<usize>)> {
        let rank = self.rank();
        let mut seen = vec![false; rank];
        for &l in row_legs {
            if l >= rank || seen[l] {
                return dim_err(format!("bad bipartition {row_legs:?} of {rank} legs"));
            }
            seen[l] = true;
        }
        let col_legs: Vec<usize> = (0..rank).filter(|&l| !seen[l]).collect();
        let perm: Vec<usize> = row_legs.iter().chain(&col_legs).copied().collect();
        let t = self.permute(&perm)?;
        let row_dims = row_legs.iter().map(|&l| self.dims[l]).collect();
        let col_dims = col_legs.iter().map(|&l| self.dims[l]).collect();
        Ok((t, row_dims, col_dims))
    }

    /// Singular value decomposition across a leg bipartition.
    ///
    /// `u` has legs `[row legs.., k]`, `v` has legs `[k, column legs..]`, and
    /// `u * diag(singular_values) * v` reproduces `self` up to
    /// `discarded_weight` (squared Frobenius norm).
    pub fn svd(&self, row_legs: &[usize], trunc: Truncation) -> Result<SvdResult> {
        let (t, row_dims, col_dims) = self.as_matrix(row_legs)?;
        let m: usize = row_dims.iter().product();
        let n: usize = col_dims.iter().product();
        let full = svd_matrix(&t.data, m, n)?;
        let kept = trunc.retained(&full.sigma);
        let discarded_weight = full.sigma[kept..].iter().map(|s| s * s).sum();

        let mut u = vec![C64::new(0.0, 0.0); m * kept];
        for (i, row) in full.u.chunks(full.rank).enumerate() {
            u[i * kept..(i + 1) * kept].copy_from_slice(&row[..kept]);
        }
        let v = full.v[..kept * n].to_vec();

        let mut spectrum = full.sigma.clone();
        spectrum.resize(m.min(n), 0.0);
        let mut u_dims = row_dims;
        u_dims.push(kept);
        let mut v_dims = vec![kept];
        v_dims.extend(col_dims);
        Ok(SvdResult {
            u: Self::new(u_dims, u)?,
            singular_values: full.sigma[..kept].to_vec(),
            v: Self::new(v_dims, v)?,
            discarded_weight,
            spectrum,
        })
    }

    /// Thin QR across a leg bipartition, `q` with legs `[row legs.., k]` and
    /// `r` with legs `[k, column legs..]`. The diagonal of `r` is made real
    /// and non-negative. A zero tensor has no meaningful `q` and is rejected.
    pub fn qr(&self, row_legs: &[usize]) -> Result<(Self, Self)> {
        let (t, row_dims, col_dims) = self.as_matrix(row_legs)?;
        if t.norm_sqr() == 0.0 {
            return Err(Error::Parameter("QR of a zero tensor".into()));
        }
        let m: usize = row_dims.iter().product();
        let n: usize = col_dims.iter().product();
        let k = m.min(n);
        let mat = DMatrix::from_row_slice(m, n, &t.data);
        let qr = mat.qr();
        let mut q = qr.q();
        let mut r = qr.r();
        for j in 0..k {
            let d = r[(j, j)];
            let a = d.norm();
            if a > 0.0 {
                let phase = d / a;
                q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
                r.row_mut(j).iter_mut().for_each(|z| *z *= phase.conj());
            }
        }
        let mut q_dims = row_dims;
        q_dims.push(k);
        let mut r_dims = vec![k];
        r_dims.extend(col_dims);
        Ok((
            Self::new(q_dims, row_major(&q))?,
            Self::new(r_dims, row_major(&r))?,
        ))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    pub max_rank: Option<usize>,
    /// Singular values below `threshold * sigma_1` are dropped.
    pub threshold: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Self {
            max_rank: None,
            threshold: 1e-12,
        }
    }
}

impl Truncation {
    pub const EXACT: Self = Self {
        max_rank: None,
        threshold: 0.0,
    };

    pub fn relative(threshold: f64) -> Self {
        Self {
            max_rank: None,
            threshold,
        }
    }

    pub fn with_max_rank(mut self, max_rank: usize) -> Self {
        self.max_rank = Some(max_rank);
        self
    }

    /// Number of leading values kept from a descending spectrum, at least one.
    pub fn retained(&self, sigma: &[f64]) -> usize {
        let Some(&top) = sigma.first() else {
            return 0;
        };
        let cut = self.threshold * top;
        let above = sigma.iter().take_while(|&&s| s >= cut).count();
        above.min(self.max_rank.unwrap_or(usize::MAX)).max(1)
    }
}

#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: DenseTensor,
    pub singular_values: Vec<f64>,
    pub v: DenseTensor,
    pub discarded_weight: f64,
    /// Every singular value, descending, padded with zeros to `min(m, n)`.
    pub spectrum: Vec<f64>,
}

struct MatrixSvd {
    // row-major m x rank
    u: Vec<C64>,
    sigma: Vec<f64>,
    // row-major rank x n
    v: Vec<C64>,
    rank: usize,
}

/// SVD of a row-major `m x n` matrix. Rows and columns that are identically
/// zero are removed first; they carry no singular weight and MPO tensors are
/// mostly empty.
fn svd_matrix(data: &[C64], m: usize, n: usize) -> Result<MatrixSvd> {
    if data.is_empty() {
        return dim_err("SVD of an empty matrix");
    }
    let zero = C64::new(0.0, 0.0);
    let rows: Vec<usize> = (0..m)
        .filter(|&i| data[i * n..(i + 1) * n].iter().any(|z| *z != zero))
        .collect();
    let cols: Vec<usize> = (0..n)
        .filter(|&j| (0..m).any(|i| data[i * n + j] != zero))
        .collect();
    if rows.is_empty() {
        let mut u = vec![zero; m];
        u[0] = C64::new(1.0, 0.0);
        let mut v = vec![zero; n];
        v[0] = C64::new(1.0, 0.0);
        return Ok(MatrixSvd {
            u,
            sigma: vec![0.0],
            v,
            rank: 1,
        });
    }
    // nalgebra's bidiagonal SVD loses accuracy on some rectangular inputs
    // (reconstruction errors near 1e-8 on sparse MPO blocks), so use faer.
    let mat = faer::Mat::<C64>::from_fn(rows.len(), cols.len(), |i, j| data[rows[i] * n + cols[j]]);
    let svd = mat
        .thin_svd()
        .map_err(|e| Error::Parameter(format!("SVD did not converge: {e:?}")))?;
    let (su, sv_diag, sv_mat) = (svd.U(), svd.S().column_vector(), svd.V());
    let rank = sv_diag.nrows();
    let sv: Vec<f64> = (0..rank).map(|k| sv_diag[k].re).collect();
    let mut order: Vec<usize> = (0..rank).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));

    let mut u = vec![zero; m * rank];
    for (ci, &i) in rows.iter().enumerate() {
        for (k, &o) in order.iter().enumerate() {
            u[i * rank + k] = su[(ci, o)];
        }
    }
    let mut v = vec![zero; rank * n];
    for (k, &o) in order.iter().enumerate() {
        for (cj, &j) in cols.iter().enumerate() {
            v[k * n + j] = sv_mat[(cj, o)].conj();
        }
    }
    Ok(MatrixSvd {
        u,
        sigma: order.iter().map(|&o| sv[o]).collect(),
        v,
        rank,
    })
}

fn row_major(m: &DMatrix<C64>) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub(crate) fn to_dmatrix(t: &DenseTensor) -> Result<DMatrix<C64>> {
    if t.rank() != 2 {
        return dim_err(format!("expected a matrix, got dims {:?}", t.dims));
    }
    Ok(DMatrix::from_row_slice(t.dims[0], t.dims[1], &t.data))
}

pub(crate) fn from_dmatrix(m: &DMatrix<C64>) -> DenseTensor {
    DenseTensor {
        dims: vec![m.nrows(), m.ncols()],
        data: row_major(m),
    }
}

/// Contract `a` with `b` over the leg `pairs` `(leg of a, leg of b)`.
///
/// The result carries the unpaired legs of `a` followed by the unpaired legs
/// of `b`, each in their original order.
pub fn contract(a: &DenseTensor, b: &DenseTensor, pairs: &[(usize, usize)]) -> Result<DenseTensor> {
    let mut in_a = vec![false; a.rank()];
    let mut in_b = vec![false; b.rank()];
    for &(la, lb) in pairs {
        if la >= a.rank() || lb >= b.rank() || in_a[la] || in_b[lb] {
            return dim_err(format!(
                "bad leg pairs {pairs:?} for ranks {} and {}",
                a.rank(),
                b.rank()
            ));
        }
        if a.dims[la] != b.dims[lb] {
            return dim_err(format!(
                "extent mismatch: leg {la} of a is {} but leg {lb} of b is {}",
                a.dims[la], b.dims[lb]
            ));
        }
        in_a[la] = true;
        in_b[lb] = true;
    }
    let free_a: Vec<usize> = (0..a.rank()).filter(|&l| !in_a[l]).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|&l| !in_b[l]).collect();

    let perm_a: Vec<usize> = free_a
        .iter()
        .copied()
        .chain(pairs.iter().map(|p| p.0))
        .collect();
    let perm_b: Vec<usize> = pairs
        .iter()
        .map(|p| p.1)
        .chain(free_b.iter().copied())
        .collect();
    let ap = permuted_data(a, &perm_a)?;
    let bp = permuted_data(b, &perm_b)?;

    let m: usize = free_a.iter().map(|&l| a.dims[l]).product();
    let k: usize = pairs.iter().map(|p| a.dims[p.0]).product();
    let n: usize = free_b.iter().map(|&l| b.dims[l]).product();
    let data = gemm(m, k, n, &ap, &bp);

    let dims = free_a
        .iter()
        .map(|&l| a.dims[l])
        .chain(free_b.iter().map(|&l| b.dims[l]))
        .collect();
    DenseTensor::new(dims, data)
}

/// Row-major data of `t` with its legs in `perm` order, borrowed when no
/// reordering is needed.
fn permuted_data<'a>(t: &'a DenseTensor, perm: &[usize]) -> Result<Cow<'a, [C64]>> {
    if perm.iter().enumerate().all(|(k, &p)| k == p) {
        Ok(Cow::Borrowed(&t.data))
    } else {
        Ok(Cow::Owned(t.permute(perm)?.data))
    }
}

/// Row-major `C = A B`.
pub(crate) fn gemm(m: usize, k: usize, n: usize, a: &[C64], b: &[C64]) -> Vec<C64> {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    let mut c = vec![C64::new(0.0, 0.0); m * n];
    if m == 0 || n == 0 {
        return c;
    }
    // SAFETY: Complex<f64> is repr(C) with layout [re, im], matching
    // matrixmultiply's c64; slice lengths are asserted above.
    unsafe {
        matrixmultiply::zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            k as isize,
            1,
            b.as_ptr() as *const [f64; 2],
            n as isize,
            1,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            n as isize,
            1,
        );
    }
    c
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

fn increment(idx: &mut [usize], dims: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < dims[k] {
            return;
        }
        idx[k] = 0;
    }
}

fn is_permutation(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    perm.iter().all(|&p| p < perm.len() && !std::mem::replace(&mut seen[p], true))
}
