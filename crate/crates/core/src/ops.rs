//! Local spin-1/2 and truncated boson operators as `d x d` matrices.
//!
//! Spin index 0 is `|up>` (`sigma^z = +1`). Boson index `m` is the Fock level
//! `|m>` with `b|0> = 0`; the top level is `d - 1`.

use num_complex::Complex64 as C64;

use crate::tensor::DenseTensor;

fn real_matrix(d: usize, f: impl Fn(usize, usize) -> f64) -> DenseTensor {
    DenseTensor::from_fn(&[d, d], |i| C64::new(f(i[0], i[1]), 0.0))
}

pub fn spin_identity() -> DenseTensor {
    DenseTensor::identity(2)
}

pub fn sigma_x() -> DenseTensor {
    real_matrix(2, |i, j| if i != j { 1.0 } else { 0.0 })
}

pub fn sigma_y() -> DenseTensor {
    DenseTensor::from_fn(&[2, 2], |i| match (i[0], i[1]) {
        (0, 1) => C64::new(0.0, -1.0),
        (1, 0) => C64::new(0.0, 1.0),
        _ => C64::new(0.0, 0.0),
    })
}

pub fn sigma_z() -> DenseTensor {
    real_matrix(2, |i, j| match (i, j) {
        (0, 0) => 1.0,
        (1, 1) => -1.0,
        _ => 0.0,
    })
}

/// Annihilation operator, `<m-1|b|m> = sqrt(m)`.
pub fn annihilation(d: usize) -> DenseTensor {
    real_matrix(d, |i, j| if j == i + 1 { (j as f64).sqrt() } else { 0.0 })
}

pub fn creation(d: usize) -> DenseTensor {
    real_matrix(d, |i, j| if i == j + 1 { (i as f64).sqrt() } else { 0.0 })
}

pub fn number(d: usize) -> DenseTensor {
    real_matrix(d, |i, j| if i == j { i as f64 } else { 0.0 })
}

pub fn boson_identity(d: usize) -> DenseTensor {
    DenseTensor::identity(d)
}

/// Kronecker product `a (x) b` of two matrices, `a` on the slow index.
pub fn kron(a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
    let (ra, ca) = (a.dims()[0], a.dims()[1]);
    let (rb, cb) = (b.dims()[0], b.dims()[1]);
    DenseTensor::from_fn(&[ra * rb, ca * cb], |i| {
        a.get(&[i[0] / rb, i[1] / cb]) * b.get(&[i[0] % rb, i[1] % cb])
    })
}
