//! Brute-force reference: the chain Hamiltonian as a dense matrix built term
//! by term from Kronecker products, and its exact time evolution.
//!
//! Nothing here touches the MPO or TDVP code paths.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::chain::ChainCoefficients;
use crate::error::{Error, Result};
use crate::ops;
use crate::series::TimeSeries;
use crate::tensor::{from_dmatrix, to_dmatrix, DenseTensor};

pub const DEFAULT_CAP: usize = 4096;
/// Largest dimension evolved through a full eigendecomposition.
pub const EIGEN_LIMIT: usize = 512;
const KRYLOV_TOL: f64 = 1e-12;
const KRYLOV_DIM: usize = 30;

#[derive(Clone, Debug)]
pub struct DenseHamiltonian {
    pub matrix: DMatrix<C64>,
}

fn embed(local: &[DenseTensor], site_ops: &[(usize, &DenseTensor)]) -> DenseTensor {
    let mut factors: Vec<DenseTensor> = local.to_vec();
    for &(site, op) in site_ops {
        factors[site] = op.clone();
    }
    let mut acc = factors[0].clone();
    for f in &factors[1..] {
        acc = ops::kron(&acc, f);
    }
    acc
}

/// `-D/2 sx + c0 sz (b_0 + b_0^+) + sum w_n n_n + sum t_n (b_n^+ b_{n+1} + h.c.)`
/// on the spin and the first `n_bosons` chain sites.
pub fn build_dense(
    chain: &ChainCoefficients,
    delta: f64,
    d_b: usize,
    n_bosons: usize,
    cap: usize,
) -> Result<DenseHamiltonian> {
    if n_bosons == 0 || n_bosons > chain.len() {
        return Err(Error::Parameter(format!(
            "need 1..={} bosons, got {n_bosons}",
            chain.len()
        )));
    }
    let dim = (0..n_bosons).try_fold(2usize, |acc, _| acc.checked_mul(d_b));
    match dim {
        Some(dim) if dim <= cap => {}
        _ => {
            return Err(Error::CapExceeded {
                dim: dim.unwrap_or(usize::MAX),
                cap,
            })
        }
    }
    let mut identities = vec![ops::spin_identity()];
    identities.extend((0..n_bosons).map(|_| ops::boson_identity(d_b)));
    let (b, bd, n) = (ops::annihilation(d_b), ops::creation(d_b), ops::number(d_b));
    let (sx, sz) = (ops::sigma_x(), ops::sigma_z());

    let one = C64::new(1.0, 0.0);
    let mut h = embed(&identities, &[(0, &sx)]).scaled(C64::new(-0.5 * delta, 0.0));
    h.add_scaled(&embed(&identities, &[(0, &sz), (1, &b)]), one * chain.c0)?;
    h.add_scaled(&embed(&identities, &[(0, &sz), (1, &bd)]), one * chain.c0)?;
    for k in 0..n_bosons {
        h.add_scaled(&embed(&identities, &[(k + 1, &n)]), one * chain.omega[k])?;
        if k + 1 < n_bosons {
            let t = chain.hopping[k];
            h.add_scaled(&embed(&identities, &[(k + 1, &bd), (k + 2, &b)]), one * t)?;
            h.add_scaled(&embed(&identities, &[(k + 1, &b), (k + 2, &bd)]), one * t)?;
        }
    }
    Ok(DenseHamiltonian {
        matrix: to_dmatrix(&h)?,
    })
}

impl DenseHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn to_tensor(&self) -> DenseTensor {
        from_dmatrix(&self.matrix)
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }
}

/// `|up> x |0> x ... x |0>`, which is basis state 0.
pub fn spin_up_vacuum(dim: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    v[0] = C64::new(1.0, 0.0);
    v
}

/// `<sz>` with the spin on the slowest index.
pub fn sz_of(psi: &DVector<C64>) -> f64 {
    let half = psi.len() / 2;
    let up: f64 = psi.rows(0, half).iter().map(|z| z.norm_sqr()).sum();
    let down: f64 = psi.rows(half, half).iter().map(|z| z.norm_sqr()).sum();
    (up - down) / (up + down)
}

/// `exp(tau A)` for a small matrix: scaling and squaring of a Taylor series.
fn small_expm(a: &DMatrix<C64>, tau: C64) -> DMatrix<C64> {
    let m = a * tau;
    let norm = m.iter().map(|z| z.norm()).fold(0.0, f64::max) * m.nrows() as f64;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let m = m.unscale(2f64.powi(squarings as i32));
    let n = m.nrows();
    let mut result = DMatrix::<C64>::identity(n, n);
    let mut term = DMatrix::<C64>::identity(n, n);
    for k in 1..=30 {
        term = &term * &m / C64::new(k as f64, 0.0);
        result += &term;
        if term.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// One Arnoldi step of `exp(-i H dt) v`; `None` if not converged.
fn arnoldi_step(h: &DMatrix<C64>, v: &DVector<C64>, dt: f64) -> Option<DVector<C64>> {
    let beta = v.norm();
    let tau = C64::new(0.0, -dt);
    let m_max = KRYLOV_DIM.min(v.len());
    let mut basis = vec![v.unscale(beta)];
    let mut hess = DMatrix::<C64>::zeros(m_max + 1, m_max);
    for j in 0..m_max {
        let mut w = h * &basis[j];
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let c = q.dotc(&w);
                hess[(i, j)] += c;
                w -= q * c;
            }
        }
        let next = w.norm();
        hess[(j + 1, j)] = C64::new(next, 0.0);
        let m = j + 1;
        let small = hess.view((0, 0), (m, m)).into_owned();
        let e = small_expm(&small, tau);
        let coeffs = e.column(0);
        let err = next * coeffs[m - 1].norm() * beta;
        if err < KRYLOV_TOL || next < 1e-14 || m == v.len() {
            let mut out = DVector::zeros(v.len());
            for (q, c) in basis.iter().zip(coeffs.iter()) {
                out += q * (*c * beta);
            }
            return Some(out);
        }
        basis.push(w.unscale(next));
    }
    None
}

fn krylov_propagate(h: &DMatrix<C64>, v: &DVector<C64>, dt: f64) -> Result<DVector<C64>> {
    let mut pieces = 1usize;
    loop {
        let mut x = v.clone();
        let mut ok = true;
        for _ in 0..pieces {
            match arnoldi_step(h, &x, dt / pieces as f64) {
                Some(y) => x = y,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(x);
        }
        pieces *= 2;
        if pieces > 1 << 16 {
            return Err(Error::Parameter("dense Krylov propagation did not converge".into()));
        }
    }
}

/// Exact `<sz(t)>` on the grid `0, dt, ..., t_max`.
pub fn evolve_dense(
    h: &DenseHamiltonian,
    psi0: &DVector<C64>,
    dt: f64,
    t_max: f64,
) -> Result<TimeSeries> {
    if psi0.len() != h.dim() {
        return Err(Error::Dimension(format!(
            "state of length {} for dimension {}",
            psi0.len(),
            h.dim()
        )));
    }
    if !(dt > 0.0) || !(t_max >= dt) {
        return Err(Error::Parameter(format!("invalid grid dt = {dt}, t_max = {t_max}")));
    }
    let steps = (t_max / dt - 1e-9).ceil() as usize;
    let mut points = Vec::with_capacity(steps + 1);
    points.push((0.0, sz_of(psi0)));
    if h.dim() <= EIGEN_LIMIT {
        let eig = h.matrix.clone().symmetric_eigen();
        let coeffs = eig.eigenvectors.adjoint() * psi0;
        for k in 1..=steps {
            let t = k as f64 * dt;
            let phased = DVector::from_fn(coeffs.len(), |i, _| {
                coeffs[i] * C64::new(0.0, -eig.eigenvalues[i] * t).exp()
            });
            points.push((t, sz_of(&(&eig.eigenvectors * phased))));
        }
    } else {
        let mut psi = psi0.clone();
        for k in 1..=steps {
            psi = krylov_propagate(&h.matrix, &psi, dt)?;
            points.push((k as f64 * dt, sz_of(&psi)));
        }
    }
    TimeSeries::from_sz(&points)
}
