//! Action of `exp(tau H)` on a vector for Hermitian `H` via Lanczos.
//!
//! The Krylov basis is fully reorthogonalised; the small tridiagonal matrix
//! is exponentiated through its real symmetric eigendecomposition. If the
//! residual estimate has not dropped below `tol` at `max_dim`, the step is
//! halved and applied twice.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Largest tolerated `|Im <v|H|v>|` relative to `max(1, |Re|)`.
const HERMITICITY_TOL: f64 = 1e-8;
const MAX_HALVINGS: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovParams {
    pub max_dim: usize,
    pub tol: f64,
}

impl Default for KrylovParams {
    fn default() -> Self {
        Self {
            max_dim: 20,
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KrylovStats {
    pub matvecs: usize,
    pub substeps: usize,
}

/// `exp(tau T) e_1` for the real symmetric tridiagonal `T`.
fn tridiagonal_expm_e1(alpha: &[f64], beta: &[f64], tau: C64) -> Vec<C64> {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let q = &eig.eigenvectors;
    let weights: DVector<C64> = DVector::from_fn(m, |k, _| (tau * eig.eigenvalues[k]).exp() * q[(0, k)]);
    (0..m)
        .map(|i| (0..m).map(|k| q[(i, k)] * weights[k]).sum())
        .collect()
}

fn single_step<F>(
    apply: &mut F,
    v: &DenseTensor,
    tau: C64,
    params: KrylovParams,
    stats: &mut KrylovStats,
) -> Result<Option<DenseTensor>>
where
    F: FnMut(&DenseTensor) -> Result<DenseTensor>,
{
    let norm = v.norm();
    if norm == 0.0 {
        return Ok(Some(v.clone()));
    }
    let dim = v.len();
    let max_dim = params.max_dim.min(dim).max(1);
    let mut basis = vec![v.scaled(C64::new(1.0 / norm, 0.0))];
    let mut alpha = Vec::with_capacity(max_dim);
    let mut beta: Vec<f64> = Vec::with_capacity(max_dim);
    loop {
        let j = basis.len() - 1;
        let mut w = apply(&basis[j])?;
        stats.matvecs += 1;
        let a = basis[j].inner(&w)?;
        if a.im.abs() > HERMITICITY_TOL * a.re.abs().max(1.0) || !a.re.is_finite() {
            return Err(Error::NonHermitian {
                site: usize::MAX,
                deviation: a.im.abs(),
            });
        }
        alpha.push(a.re);
        // two passes of Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = b.inner(&w)?;
                w.add_scaled(b, -c)?;
            }
        }
        let b_next = w.norm();
        let m = alpha.len();
        let coeffs = tridiagonal_expm_e1(&alpha, &beta, tau);
        let invariant = b_next <= 1e-13 * alpha.iter().fold(1.0f64, |x, a| x.max(a.abs()));
        let error = b_next * coeffs[m - 1].norm() * norm;
        if invariant || error < params.tol || m == dim {
            let mut out = DenseTensor::zeros(v.dims());
            for (b, c) in basis.iter().zip(&coeffs) {
                out.add_scaled(b, c * norm)?;
            }
            return Ok(Some(out));
        }
        if m == max_dim {
            return Ok(None);
        }
        beta.push(b_next);
        w.scale(C64::new(1.0 / b_next, 0.0));
        basis.push(w);
    }
}

/// `exp(tau H) v` where `apply` computes `H x`.
pub fn expm_apply<F>(
    mut apply: F,
    v: &DenseTensor,
    tau: C64,
    params: KrylovParams,
) -> Result<(DenseTensor, KrylovStats)>
where
    F: FnMut(&DenseTensor) -> Result<DenseTensor>,
{
    if params.max_dim < 1 || !(params.tol > 0.0) {
        return Err(Error::Parameter(format!("invalid Krylov parameters {params:?}")));
    }
    let mut stats = KrylovStats::default();
    let mut pieces = 1u64;
    for _ in 0..=MAX_HALVINGS {
        let sub = tau / pieces as f64;
        let mut x = v.clone();
        let mut ok = true;
        for _ in 0..pieces {
            match single_step(&mut apply, &x, sub, params, &mut stats)? {
                Some(next) => x = next,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok((x, stats));
        }
        pieces *= 2;
        stats.substeps += 1;
        log::debug!("Krylov not converged; splitting step into {pieces}");
    }
    Err(Error::Parameter(format!(
        "Krylov expansion did not converge with {} halvings",
        MAX_HALVINGS
    )))
}
