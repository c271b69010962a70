use approx::assert_relative_eq;
use proptest::prelude::*;

use nsbundle::error::Error;
use nsbundle::model::{
    cut_value, linearization_error, model_eval, nesterov_advance, BetaMode, Bundle, Cut,
    NesterovState,
};

fn affine(dim: usize) -> impl Strategy<Value = (Vec<f64>, f64, Vec<f64>)> {
    (
        prop::collection::vec(-5.0..5.0, dim),
        -5.0..5.0,
        prop::collection::vec(-5.0..5.0, dim),
    )
}

fn bundle_of(dim: usize, cuts: &[(Vec<f64>, f64, Vec<f64>)]) -> Bundle {
    let mut b = Bundle::new(dim);
    for (y, f, g) in cuts {
        b.insert(Cut::new(y.clone(), *f, g.clone()).unwrap())
            .unwrap();
    }
    b
}

fn by_hand(cut: &(Vec<f64>, f64, Vec<f64>), x: &[f64]) -> f64 {
    let (y, f, g) = cut;
    f + g
        .iter()
        .zip(x.iter().zip(y))
        .map(|(gi, (xi, yi))| gi * (xi - yi))
        .sum::<f64>()
}

#[test]
fn cut_value_example() {
    let cut = Cut::new(vec![1.0, 2.0], 3.0, vec![1.0, -1.0]).unwrap();
    assert_eq!(cut_value(&cut, &[0.0, 0.0]).unwrap(), 4.0);
    assert_eq!(cut_value(&cut, &[1.0, 2.0]).unwrap(), 3.0);
    assert!(matches!(
        cut_value(&cut, &[0.0]),
        Err(Error::DimensionMismatch {
            expected: 2,
            got: 1
        })
    ));
}

#[test]
fn empty_bundle_and_bad_cuts() {
    assert!(matches!(
        model_eval(&Bundle::new(2), &[0.0, 0.0]),
        Err(Error::EmptyBundle)
    ));
    assert!(Cut::new(vec![0.0], f64::NAN, vec![1.0]).is_err());
    assert!(Cut::new(vec![0.0, 1.0], 0.0, vec![1.0]).is_err());
}

#[test]
fn linearization_error_tolerance() {
    assert_eq!(linearization_error(2.0, 1.5).unwrap(), 0.5);
    assert_eq!(linearization_error(1.0, 1.0 + 1e-10).unwrap(), 0.0);
    assert!(matches!(
        linearization_error(1.0, 1.1),
        Err(Error::LowerModelViolated { .. })
    ));
}

#[test]
fn nesterov_first_terms() {
    let s0 = NesterovState::new(BetaMode::Zero);
    assert_eq!(
        (s0.k, s0.lambda_k, s0.alpha_k, s0.beta_k),
        (0, 1.0, 0.0, 0.0)
    );
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    assert_relative_eq!(s0.lambda_next, golden, epsilon = 1e-15);
    let s1 = nesterov_advance(&s0);
    assert_relative_eq!(s1.lambda_k, golden, epsilon = 1e-15);
    assert_relative_eq!(s1.alpha_k, (golden - 1.0) / s1.lambda_next, epsilon = 1e-15);
    let g1 = nesterov_advance(&NesterovState::new(BetaMode::Guler));
    assert_relative_eq!(g1.beta_k, golden / g1.lambda_next, epsilon = 1e-15);
}

proptest! {
    #[test]
    fn model_is_max_with_lowest_index(
        cuts in prop::collection::vec(affine(3), 1..8),
        x in prop::collection::vec(-5.0..5.0, 3),
    ) {
        let b = bundle_of(3, &cuts);
        let (value, idx) = model_eval(&b, &x).unwrap();
        let values: Vec<f64> = b.cuts().iter().map(|c| c.eval(&x).unwrap()).collect();
        let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(value, top);
        prop_assert_eq!(idx, values.iter().position(|v| *v == top).unwrap());
        for (cut, v) in b.cuts().iter().zip(&values) {
            let own = (cut.point().to_vec(), cut.value(), cut.subgradient().to_vec());
            prop_assert!((by_hand(&own, &x) - v).abs() <= 1e-12 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn model_ignores_cut_order(
        cuts in prop::collection::vec(affine(2), 1..6),
        x in prop::collection::vec(-5.0..5.0, 2),
        rot in 0usize..6,
    ) {
        let mut shuffled = cuts.clone();
        let len = shuffled.len();
        shuffled.rotate_left(rot % len);
        shuffled.reverse();
        let a = model_eval(&bundle_of(2, &cuts), &x).unwrap().0;
        let b = model_eval(&bundle_of(2, &shuffled), &x).unwrap().0;
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn adding_a_cut_never_lowers_the_model(
        cuts in prop::collection::vec(affine(2), 1..6),
        extra in affine(2),
        x in prop::collection::vec(-5.0..5.0, 2),
    ) {
        let mut b = bundle_of(2, &cuts);
        let before = model_eval(&b, &x).unwrap().0;
        b.insert(Cut::new(extra.0, extra.1, extra.2).unwrap()).unwrap();
        prop_assert!(model_eval(&b, &x).unwrap().0 >= before);
    }

    #[test]
    fn cuts_of_a_convex_function_stay_below_it(
        points in prop::collection::vec(prop::collection::vec(-3.0..3.0, 2), 1..8),
        x in prop::collection::vec(-3.0..3.0, 2),
    ) {
        // f(x) = |x1| + 2|x2| + x1^2
        let f = |p: &[f64]| p[0].abs() + 2.0 * p[1].abs() + p[0] * p[0];
        let g = |p: &[f64]| vec![p[0].signum() + 2.0 * p[0], 2.0 * p[1].signum()];
        let mut b = Bundle::new(2);
        for p in &points {
            b.insert(Cut::new(p.clone(), f(p), g(p)).unwrap()).unwrap();
        }
        let (m, _) = model_eval(&b, &x).unwrap();
        prop_assert!(m <= f(&x) + 1e-12 * (1.0 + f(&x).abs()));
        for p in &points {
            let exact = model_eval(&b, p).unwrap().0;
            prop_assert!((exact - f(p)).abs() <= 1e-12 * (1.0 + f(p).abs()));
        }
    }

    #[test]
    fn linearization_error_is_nonnegative(f in -1e3..1e3f64, gap in 0.0..1e3f64) {
        let e = linearization_error(f, f - gap).unwrap();
        prop_assert!(e >= 0.0);
        prop_assert!((e - gap).abs() <= 1e-12 * (1.0 + f.abs() + gap));
    }

    #[test]
    fn nesterov_growth(steps in 1usize..400) {
        let mut s = NesterovState::new(BetaMode::Zero);
        for _ in 0..steps {
            let next = s.advance();
            prop_assert_eq!(next.k, s.k + 1);
            prop_assert_eq!(next.lambda_k, s.lambda_next);
            prop_assert!((s.lambda_next.powi(2) - s.lambda_next - s.lambda_k.powi(2)).abs()
                <= 1e-12 * s.lambda_next.powi(2));
            s = next;
        }
        prop_assert!(s.lambda_k >= (s.k as f64 + 2.0) / 2.0);
        prop_assert!((0.0..1.0).contains(&s.alpha_k));
    }
}
