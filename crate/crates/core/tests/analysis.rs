use netform::analysis::{small_check, ynb_iterate, ynb_threshold, GeometricRecursion, PerturbedRecursion};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn below_threshold_decays(
        c in 0.05f64..20.0,
        b in 1.01f64..8.0,
        alpha in 0.2f64..4.0,
        frac in 0.0f64..0.999_999,
    ) {
        let r = GeometricRecursion::new(c, b, alpha).unwrap();
        let y0 = frac * ynb_threshold(&r);
        let seq = ynb_iterate(&r, y0, 200).unwrap();
        prop_assert!(!seq.overflow);
        let v = &seq.values;
        for (n, y) in v.iter().enumerate() {
            prop_assert!(*y <= r.envelope(y0, n) * (1.0 + 1e-9), "n={n}: {y} above envelope");
        }
        let last = *v.last().unwrap();
        let tail_decreasing = v[190..].windows(2).all(|w| w[1] < w[0]);
        prop_assert!(y0 == 0.0 || last < 1e-8 * y0 || tail_decreasing);
    }

    #[test]
    fn gate_gives_uniform_bound(
        lambda in 0.05f64..20.0,
        alpha in 0.2f64..4.0,
        frac in 0.0f64..0.999,
    ) {
        // largest b0 with 2 lambda (2 b0)^alpha < 1, scaled down
        let b0 = frac * 0.5 * (0.5 / lambda).powf(1.0 / alpha);
        let r = PerturbedRecursion::new(b0, lambda, alpha).unwrap();
        let check = small_check(&r);
        prop_assert!(check.applies);
        prop_assert!(check.bound <= 2.0 * b0 * (1.0 + 1e-12));
        for bk in r.iterate(100) {
            prop_assert!(bk <= check.bound * (1.0 + 1e-12), "{bk} > {}", check.bound);
        }
    }
}

#[test]
fn threshold_sequence_matches_closed_form() {
    let r = GeometricRecursion::new(3.0, 1.5, 0.7).unwrap();
    let y0 = ynb_threshold(&r);
    // the threshold orbit is unstable, so rounding grows like (1 + alpha)^n
    let seq = ynb_iterate(&r, y0, 20).unwrap();
    for (n, y) in seq.values.iter().enumerate() {
        let closed = r.envelope(y0, n);
        assert!((y - closed).abs() <= 1e-8 * closed, "n={n}: {y} vs {closed}");
    }
}

#[test]
fn worked_example_stays_below_bound() {
    let r = PerturbedRecursion::new(0.1, 1.0, 1.0).unwrap();
    let check = small_check(&r);
    assert!(check.applies && (check.bound - 0.125).abs() < 1e-15);
    assert!(r.iterate(100).iter().all(|b| *b <= check.bound));
}

#[test]
fn above_threshold_overflows() {
    let r = GeometricRecursion::new(1.0, 2.0, 1.0).unwrap();
    let seq = ynb_iterate(&r, 2.0, 10).unwrap();
    assert!(seq.overflow);
    assert!(seq.values.len() <= 11);
}
