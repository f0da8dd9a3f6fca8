use firefront::basis::{
    exponential_correlation, leading_eigenbasis, speed_field, BasisMatrix, CovariateMatrix,
};
use firefront::{GridSpec, ScalarField};
use nalgebra::{DVector, SymmetricEigen};
use proptest::prelude::*;

#[test]
fn correlation_is_positive_definite_on_small_grid() {
    let g = GridSpec::new(4, 4, (0.0, 3.0), (0.0, 3.0)).unwrap();
    let c = exponential_correlation(&g, 1.0).unwrap();
    let min = SymmetricEigen::new(c).eigenvalues.min();
    assert!(min > 0.0, "{min}");
}

#[test]
fn eigenvalues_and_energy_on_30_by_30_grid() {
    let g = GridSpec::new(30, 30, (-7.0, 7.0), (-1.0, 7.0)).unwrap();
    let basis = BasisMatrix::exponential(&g, 12, None).unwrap();
    let vals = basis.eigenvalues();
    assert!(vals.windows(2).all(|w| w[0] >= w[1]));
    let mut energy = 0.0;
    for v in vals {
        let next = energy + v;
        assert!(next >= energy);
        energy = next;
    }
    assert!(energy <= g.len() as f64);
    let gram = basis.columns().tr_mul(basis.columns());
    let id = nalgebra::DMatrix::<f64>::identity(12, 12);
    assert!((gram - id).amax() < 1e-8);
}

#[test]
fn leading_pairs_match_the_full_decomposition() {
    let g = GridSpec::new(5, 4, (0.0, 4.0), (0.0, 3.0)).unwrap();
    let c = exponential_correlation(&g, 2.0).unwrap();
    let mut all: Vec<f64> = SymmetricEigen::new(c.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    all.sort_by(|a, b| b.total_cmp(a));
    let e = leading_eigenbasis(&c, 4).unwrap();
    for (k, &expected) in all.iter().take(4).enumerate() {
        assert!((e.values[k] - expected).abs() < 1e-10);
        let v = e.vectors.column(k);
        assert!((&c * v - v * e.values[k]).amax() < 1e-10);
    }
    // Repeated construction gives identical signs.
    assert_eq!(e.vectors, leading_eigenbasis(&c, 4).unwrap().vectors);
}

fn fixtures() -> (CovariateMatrix, BasisMatrix) {
    let g = GridSpec::new(6, 5, (0.0, 5.0), (0.0, 4.0)).unwrap();
    let a = ScalarField::from_fn(g, |x, y| x - 0.3 * y).unwrap();
    let b = ScalarField::from_fn(g, |x, y| (x * y).sin()).unwrap();
    let x = CovariateMatrix::from_fields(&g, vec![("a".into(), a), ("b".into(), b)]).unwrap();
    (x, BasisMatrix::exponential(&g, 3, None).unwrap())
}

proptest! {
    #[test]
    fn speed_superposition(
        b1 in prop::collection::vec(-5.0..5.0f64, 2),
        b2 in prop::collection::vec(-5.0..5.0f64, 2),
        x1 in prop::collection::vec(-5.0..5.0f64, 3),
        x2 in prop::collection::vec(-5.0..5.0f64, 3),
    ) {
        let (x, basis) = fixtures();
        let (b1, b2) = (DVector::from_vec(b1), DVector::from_vec(b2));
        let (x1, x2) = (DVector::from_vec(x1), DVector::from_vec(x2));
        let sum = speed_field(&x, &(&b1 + &b2), &basis, &(&x1 + &x2)).unwrap();
        let a = speed_field(&x, &b1, &basis, &x1).unwrap();
        let b = speed_field(&x, &b2, &basis, &x2).unwrap();
        for i in 0..sum.values().len() {
            prop_assert!((sum.values()[i] - a.values()[i] - b.values()[i]).abs() < 1e-12);
        }
    }
}
