use firefront::evaluation::{credible_band, mean_threat_score, threat_score};
use firefront::{GridSpec, ScalarField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn grid() -> GridSpec {
    GridSpec::new(5, 4, (0.0, 4.0), (0.0, 3.0)).unwrap()
}

fn field(values: Vec<f64>) -> ScalarField {
    ScalarField::new(grid(), values).unwrap()
}

fn cells() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 20)
}

proptest! {
    #[test]
    fn ts_is_bounded_symmetric_and_shift_invariant(a in cells(), b in cells(), tau in -0.5f64..0.5, shift in -10.0f64..10.0) {
        let (pa, pb) = (field(a.clone()), field(b.clone()));
        prop_assume!(a.iter().chain(&b).any(|&v| v <= tau));
        let (ts, c) = threat_score(&pa, &pb, tau).unwrap();
        prop_assert!((0.0..=1.0).contains(&ts));
        prop_assert_eq!(c.a11 + c.a10 + c.a01 + c.a00, 20);

        let (swapped, cs) = threat_score(&pb, &pa, tau).unwrap();
        prop_assert_eq!(ts, swapped);
        prop_assert_eq!((c.a10, c.a01), (cs.a01, cs.a10));

        // Shift chosen so that v + shift <= tau + shift holds exactly as v <= tau.
        let shift = shift.round();
        let moved = threat_score(
            &field(a.iter().map(|v| v + shift).collect()),
            &field(b.iter().map(|v| v + shift).collect()),
            tau + shift,
        );
        if a.iter().chain(&b).all(|&v| (v <= tau) == (v + shift <= tau + shift)) {
            prop_assert_eq!(moved.unwrap().0, ts);
        }
        let cubed = threat_score(
            &field(a.iter().map(|v| v.powi(3)).collect()),
            &field(b.iter().map(|v| v.powi(3)).collect()),
            tau.powi(3),
        ).unwrap();
        if a.iter().chain(&b).all(|&v| (v <= tau) == (v.powi(3) <= tau.powi(3))) {
            prop_assert_eq!(cubed.0, ts);
        }
    }

    #[test]
    fn mean_ts_lies_between_the_extremes(draws in prop::collection::vec(cells(), 1..8), truth in cells()) {
        let mut t = truth;
        t[0] = -1.0;
        let truth = field(t);
        let draws: Vec<ScalarField> = draws.into_iter().map(field).collect();
        let r = mean_threat_score(&draws, &truth, 0.0).unwrap();
        let lo = r.per_draw.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = r.per_draw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(r.mean >= lo - 1e-15 && r.mean <= hi + 1e-15);
    }
}

/// Type-7 sample quantile: linear interpolation between order statistics.
fn type7(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[test]
fn band_matches_order_statistics_and_nests() {
    let g = GridSpec::new(3, 3, (0.0, 1.0), (0.0, 1.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let draws: Vec<ScalarField> = (0..997)
        .map(|_| ScalarField::new(g, (0..9).map(|_| rng.sample(StandardNormal)).collect()).unwrap())
        .collect();
    let b95 = credible_band(&draws, 0.95).unwrap();
    let b90 = credible_band(&draws, 0.90).unwrap();
    for i in 0..9 {
        let mut column: Vec<f64> = draws.iter().map(|d| d.values()[i]).collect();
        column.sort_by(f64::total_cmp);
        assert!((b95.lower.values()[i] - type7(&column, 0.025)).abs() < 1e-14);
        assert!((b95.upper.values()[i] - type7(&column, 0.975)).abs() < 1e-14);
        assert!(b95.lower.values()[i] <= b90.lower.values()[i]);
        assert!(b90.upper.values()[i] <= b95.upper.values()[i]);
    }
    assert!(credible_band(&draws[..10], 0.95).is_err());
}

#[test]
fn standard_normal_band_is_close_to_normal_quantiles() {
    // One N(0, 1) cell; the rest are constant and collapse the band.
    let g = GridSpec::new(2, 2, (0.0, 1.0), (0.0, 1.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let draws: Vec<ScalarField> = (0..10_000)
        .map(|_| ScalarField::new(g, vec![rng.sample(StandardNormal), 0.5, 0.5, 0.5]).unwrap())
        .collect();
    let band = credible_band(&draws, 0.95).unwrap();
    assert!(
        (band.lower.values()[0] + 1.96).abs() < 0.05,
        "{}",
        band.lower.values()[0]
    );
    assert!(
        (band.upper.values()[0] - 1.96).abs() < 0.05,
        "{}",
        band.upper.values()[0]
    );
    assert_eq!((band.lower.values()[1], band.upper.values()[1]), (0.5, 0.5));
}
