//! Partial contractions of `<psi| H |psi>` and effective-Hamiltonian actions.
//!
//! A left environment has legs `(bra, w, ket)` and covers all sites to the
//! left of a bond; a right environment has the same leg order and covers the
//! sites to the right. Both start as the `1 x 1 x 1` unit tensor.

use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::tensor::{contract, DenseTensor};

pub fn unit_env() -> DenseTensor {
    DenseTensor::scalar(C64::new(1.0, 0.0))
        .reshape(&[1, 1, 1])
        .expect("unit environment")
}

/// Absorb site `a` with MPO tensor `w` into the left environment.
pub fn extend_left(left: &DenseTensor, a: &DenseTensor, w: &DenseTensor) -> Result<DenseTensor> {
    let t = contract(left, a, &[(2, 0)])?; // a w s b'
    let t = contract(&t, w, &[(1, 0), (2, 2)])?; // a b' s' w'
    contract(&a.conj(), &t, &[(0, 0), (1, 2)])?.permute(&[0, 2, 1])
}

/// Absorb site `a` with MPO tensor `w` into the right environment.
pub fn extend_right(right: &DenseTensor, a: &DenseTensor, w: &DenseTensor) -> Result<DenseTensor> {
    let t = contract(a, right, &[(2, 2)])?; // a' s b w'
    let t = contract(&t, w, &[(1, 2), (3, 3)])?; // a' b w s'
    contract(&a.conj(), &t, &[(1, 3), (2, 1)])?.permute(&[0, 2, 1])
}

/// MPO tensor reordered to `(wl, low, up, wr)` so a matvec contracts it
/// without copying.
pub fn prepare_mpo(w: &DenseTensor) -> Result<DenseTensor> {
    w.permute(&[0, 2, 1, 3])
}

/// Right environment reordered to `(w, ket, bra)`.
pub fn prepare_right(right: &DenseTensor) -> Result<DenseTensor> {
    right.permute(&[1, 2, 0])
}

/// One-site effective Hamiltonian applied to `x` with legs `(l, s, r)`.
pub fn apply_one_site(
    left: &DenseTensor,
    w: &DenseTensor,
    right: &DenseTensor,
    x: &DenseTensor,
) -> Result<DenseTensor> {
    apply_one_site_prepared(left, &prepare_mpo(w)?, &prepare_right(right)?, x)
}

/// [`apply_one_site`] with `wp` and `rp` from [`prepare_mpo`] and
/// [`prepare_right`].
pub fn apply_one_site_prepared(
    left: &DenseTensor,
    wp: &DenseTensor,
    rp: &DenseTensor,
    x: &DenseTensor,
) -> Result<DenseTensor> {
    let t = contract(left, x, &[(2, 0)])?; // a w s b'
    let t = contract(&t, wp, &[(1, 0), (2, 1)])?; // a b' s' w'
    contract(&t, rp, &[(3, 0), (1, 1)]) // a s' b
}

/// Two-site effective Hamiltonian applied to `x` with legs `(l, s1, s2, r)`.
pub fn apply_two_site(
    left: &DenseTensor,
    w1: &DenseTensor,
    w2: &DenseTensor,
    right: &DenseTensor,
    x: &DenseTensor,
) -> Result<DenseTensor> {
    apply_two_site_prepared(left, &prepare_mpo(w1)?, &prepare_mpo(w2)?, &prepare_right(right)?, x)
}

pub fn apply_two_site_prepared(
    left: &DenseTensor,
    w1p: &DenseTensor,
    w2p: &DenseTensor,
    rp: &DenseTensor,
    x: &DenseTensor,
) -> Result<DenseTensor> {
    let t = contract(left, x, &[(2, 0)])?; // a w s1 s2 b'
    let t = contract(&t, w1p, &[(1, 0), (2, 1)])?; // a s2 b' s1' m
    let t = contract(&t, w2p, &[(4, 0), (1, 1)])?; // a b' s1' s2' w'
    contract(&t, rp, &[(4, 0), (1, 1)]) // a s1' s2' b
}

/// Bond (zero-site) effective Hamiltonian applied to `c` with legs `(l, r)`.
/// `left` covers the sites up to the bond and `right` those after it.
pub fn apply_bond(left: &DenseTensor, right: &DenseTensor, c: &DenseTensor) -> Result<DenseTensor> {
    let t = contract(left, c, &[(2, 0)])?; // a w b'
    contract(&t, right, &[(1, 1), (2, 2)]) // a b
}
