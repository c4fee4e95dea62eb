//! Dense Hamiltonian, contracted MPO and contracted split MPO agree.

use proptest::prelude::*;
use sitesplit::ed::{build_dense, DEFAULT_CAP};
use sitesplit::{
    build_spin_boson_mpo, chain_coefficients, split_full_mpo, HoppingVariant, SpectralBath,
};

fn three_way(s: f64, alpha: f64, delta: f64, n_bosons: usize, d_b: usize, variant: HoppingVariant) -> (f64, f64, f64) {
    let bath = SpectralBath::new(s, alpha, 1.0).unwrap();
    let chain = chain_coefficients(&bath, n_bosons, variant).unwrap();
    let dense = build_dense(&chain, delta, d_b, n_bosons, DEFAULT_CAP).unwrap().to_tensor();
    let mpo = build_spin_boson_mpo(&chain, delta, d_b).unwrap();
    let from_mpo = mpo.to_dense().unwrap();
    let from_split = split_full_mpo(&mpo, 0.0).unwrap().mpo.to_dense().unwrap();
    let herm = from_split.permute(&[1, 0]).unwrap().conj();
    (
        dense.max_abs_diff(&from_mpo).unwrap(),
        dense.max_abs_diff(&from_split).unwrap(),
        from_split.max_abs_diff(&herm).unwrap(),
    )
}

#[test]
fn agreement_two_bosons_four_levels() {
    let (a, b, h) = three_way(1.0, 0.3, 0.1, 2, 4, HoppingVariant::Paper);
    assert!(a <= 1e-10 && b <= 1e-10 && h <= 1e-12, "{a:e} {b:e} {h:e}");
}

#[test]
fn agreement_three_bosons_nine_levels() {
    let (a, b, h) = three_way(1.0, 1.0, 0.1, 3, 9, HoppingVariant::Literature);
    assert!(a <= 1e-10 && b <= 1e-10 && h <= 1e-12, "{a:e} {b:e} {h:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn agreement_over_parameters(
        s in 0.3f64..2.0,
        alpha in 0.0f64..2.0,
        delta in -1.0f64..1.0,
        n_bosons in 1usize..=3,
        half in 2usize..=3,
        literature in any::<bool>(),
    ) {
        let variant = if literature { HoppingVariant::Literature } else { HoppingVariant::Paper };
        let d_b = half * half;
        prop_assume!(2 * d_b.pow(n_bosons as u32) <= 1500);
        let (a, b, h) = three_way(s, alpha, delta, n_bosons, d_b, variant);
        prop_assert!(a <= 1e-10, "mpo {a:e}");
        prop_assert!(b <= 1e-10, "split {b:e}");
        prop_assert!(h <= 1e-12, "hermiticity {h:e}");
    }
}
