use proptest::prelude::*;

use nsbundle::error::Error;
use nsbundle::oracle::{
    evaluate, find_problem, list_problems, FnOracle, Oracle, OracleResponse, ProblemSpec,
};

/// Problem table: id, name, dimension, optimal value.
const TABLE: [(usize, &str, usize, f64); 15] = [
    (1, "CB2", 2, 1.952224),
    (2, "CB3", 2, 2.0),
    (3, "DEM", 2, -3.0),
    (4, "QL", 2, 7.2),
    (5, "LQ", 2, -std::f64::consts::SQRT_2),
    (6, "Mifflin1", 2, -1.0),
    (7, "Mifflin2", 2, -1.0),
    (8, "Rosen-Suzuki", 4, -44.0),
    (9, "Shor", 5, 22.600162),
    (10, "Maxquad", 10, -0.841408),
    (11, "Maxq", 20, 0.0),
    (12, "Maxl", 20, 0.0),
    (13, "Goffin", 50, 0.0),
    (14, "MxHilb", 50, 0.0),
    (15, "L1Hilb", 50, 0.0),
];

fn maxf(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn hilbert(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (1..=n)
        .map(|i| (1..=n).map(|j| x[j - 1] / (i + j - 1) as f64).sum())
        .collect()
}

/// Objective values written out from the textbook definitions.
fn textbook(id: usize, x: &[f64]) -> Option<f64> {
    let v = match id {
        1 => maxf([
            x[0].powi(2) + x[1].powi(4),
            (2.0 - x[0]).powi(2) + (2.0 - x[1]).powi(2),
            2.0 * (x[1] - x[0]).exp(),
        ]),
        2 => maxf([
            x[0].powi(4) + x[1].powi(2),
            (2.0 - x[0]).powi(2) + (2.0 - x[1]).powi(2),
            2.0 * (x[1] - x[0]).exp(),
        ]),
        3 => maxf([
            5.0 * x[0] + x[1],
            -5.0 * x[0] + x[1],
            x[0].powi(2) + x[1].powi(2) + 4.0 * x[1],
        ]),
        4 => {
            let f1 = x[0].powi(2) + x[1].powi(2);
            maxf([
                f1,
                f1 + 10.0 * (-4.0 * x[0] - x[1] + 4.0),
                f1 + 10.0 * (-x[0] - 2.0 * x[1] + 6.0),
            ])
        }
        5 => maxf([
            -x[0] - x[1],
            -x[0] - x[1] + x[0].powi(2) + x[1].powi(2) - 1.0,
        ]),
        6 => -x[0] + 20.0 * (x[0].powi(2) + x[1].powi(2) - 1.0).max(0.0),
        7 => {
            let h = x[0].powi(2) + x[1].powi(2) - 1.0;
            -x[0] + 2.0 * h + 1.75 * h.abs()
        }
        8 => {
            let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
            let f1 = a * a + b * b + 2.0 * c * c + d * d - 5.0 * a - 5.0 * b - 21.0 * c + 7.0 * d;
            let f2 = a * a + b * b + c * c + d * d + a - b + c - d - 8.0;
            let f3 = a * a + 2.0 * b * b + c * c + 2.0 * d * d - a - d - 10.0;
            let f4 = a * a + b * b + c * c + 2.0 * a - b - d - 5.0;
            f1 + 10.0 * maxf([0.0, f2, f3, f4])
        }
        11 => maxf(x.iter().map(|v| v * v)),
        12 => maxf(x.iter().map(|v| v.abs())),
        13 => 50.0 * maxf(x.iter().copied()) - x.iter().sum::<f64>(),
        14 => maxf(hilbert(x).iter().map(|v| v.abs())),
        15 => hilbert(x).iter().map(|v| v.abs()).sum(),
        _ => return None,
    };
    Some(v)
}

fn point(p: &ProblemSpec, u: &[f64]) -> Vec<f64> {
    let radius = 1.0 + p.start_point.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    p.start_point
        .iter()
        .zip(u)
        .map(|(c, t)| c + radius * t)
        .collect()
}

#[test]
fn registry_matches_table() {
    let problems = list_problems();
    assert_eq!(problems.len(), 15);
    for (p, (id, name, n, f_star)) in problems.iter().zip(TABLE) {
        assert_eq!((p.id, p.name.as_str(), p.dimension), (id, name, n));
        assert_eq!(p.optimal_value, f_star);
        assert_eq!(p.start_point.len(), n);
        assert_eq!(p.reference_minimizer.len(), n);
        let expected_floor = match id {
            8 => -100.0,
            9 => 0.0,
            _ => -10.0,
        };
        assert_eq!(p.f_inf_default, expected_floor);
    }
}

#[test]
fn reference_minimizers_attain_the_optimal_value() {
    for p in list_problems() {
        let f = evaluate(&p, &p.reference_minimizer).unwrap().value;
        // tabulated values carry six decimals
        assert!(
            (f - p.optimal_value).abs() <= 1e-6 * (1.0 + f.abs()),
            "{}: {f}",
            p.name
        );
    }
}

#[test]
fn lookup_by_id_and_name() {
    assert_eq!(find_problem("7").unwrap().name, "Mifflin2");
    assert_eq!(find_problem("maxquad").unwrap().id, 10);
    assert!(matches!(find_problem("16"), Err(Error::UnknownProblem(_))));
    assert!(matches!(
        find_problem("nope"),
        Err(Error::UnknownProblem(_))
    ));
}

#[test]
fn input_validation() {
    let p = find_problem("CB2").unwrap();
    assert!(matches!(
        p.evaluate(&[1.0]),
        Err(Error::DimensionMismatch {
            expected: 2,
            got: 1
        })
    ));
    assert!(matches!(
        p.evaluate(&[f64::NAN, 0.0]),
        Err(Error::NonFinite(_))
    ));
    let blowup = FnOracle::new(1, |x: &[f64]| OracleResponse {
        value: (1000.0 * x[0]).exp(),
        subgradient: vec![1.0],
    });
    assert!(matches!(blowup.evaluate(&[10.0]), Err(Error::NonFinite(_))));
}

#[test]
fn kink_ties_pick_the_first_piece() {
    // Maxl at the origin: every piece ties, the first one is x_1
    let p = find_problem("Maxl").unwrap();
    let r = p.evaluate(&[0.0; 20]).unwrap();
    assert_eq!(r.value, 0.0);
    assert_eq!(r.subgradient[0], 1.0);
    assert!(r.subgradient[1..].iter().all(|g| *g == 0.0));
    // DEM at (0, 0): 5a + b and -5a + b tie
    let r = find_problem("DEM").unwrap().evaluate(&[0.0, 0.0]).unwrap();
    assert_eq!(r.subgradient, vec![5.0, 1.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn values_match_textbook_definitions(
        id in 1usize..=15,
        u in prop::collection::vec(-1.0..1.0f64, 50),
    ) {
        let p = find_problem(&id.to_string()).unwrap();
        let x = point(&p, &u[..p.dimension]);
        if let Some(expected) = textbook(id, &x) {
            let got = p.evaluate(&x).unwrap().value;
            prop_assert!((got - expected).abs() <= 1e-12 * (1.0 + expected.abs()), "{} {} {}", p.name, got, expected);
        }
    }

    #[test]
    fn subgradient_inequality(
        id in 1usize..=15,
        u in prop::collection::vec(-1.0..1.0f64, 50),
        v in prop::collection::vec(-1.0..1.0f64, 50),
    ) {
        let p = find_problem(&id.to_string()).unwrap();
        let (x, z) = (point(&p, &u[..p.dimension]), point(&p, &v[..p.dimension]));
        let (ex, ez) = (p.evaluate(&x).unwrap(), p.evaluate(&z).unwrap());
        let lin: f64 = ex.value + ex.subgradient.iter().zip(z.iter().zip(&x)).map(|(g, (a, b))| g * (a - b)).sum::<f64>();
        let scale = 1.0 + ex.value.abs() + ez.value.abs()
            + ex.subgradient.iter().map(|g| g * g).sum::<f64>().sqrt()
                * z.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(lin - ez.value <= 1e-9 * scale);
    }

    #[test]
    fn subgradient_is_the_gradient_where_smooth(
        id in 1usize..=15,
        u in prop::collection::vec(-1.0..1.0f64, 50),
    ) {
        let p = find_problem(&id.to_string()).unwrap();
        let x = point(&p, &u[..p.dimension]);
        let g = p.evaluate(&x).unwrap().subgradient;
        let h = 1e-6;
        let mut numeric = Vec::with_capacity(x.len());
        let mut smooth = true;
        for j in 0..x.len() {
            let (mut a, mut b) = (x.clone(), x.clone());
            a[j] += h;
            b[j] -= h;
            let (fa, fb, f0) = (p.evaluate(&a).unwrap(), p.evaluate(&b).unwrap(), p.evaluate(&x).unwrap());
            // a different subgradient on either side means a kink nearby
            smooth &= fa.subgradient.iter().zip(&fb.subgradient).zip(&f0.subgradient)
                .all(|((p1, p2), p0)| (p1 - p0).abs() <= 1e-3 * (1.0 + p0.abs()) && (p2 - p0).abs() <= 1e-3 * (1.0 + p0.abs()));
            numeric.push((fa.value - fb.value) / (2.0 * h));
        }
        prop_assume!(smooth);
        for (gn, ga) in numeric.iter().zip(&g) {
            prop_assert!((gn - ga).abs() <= 1e-4 * (1.0 + ga.abs()), "{}: {:?} vs {:?}", p.name, numeric, g);
        }
    }

    #[test]
    fn fn_oracle_passes_through(x in -10.0..10.0f64) {
        let o = FnOracle::new(1, |x: &[f64]| OracleResponse { value: x[0].abs(), subgradient: vec![x[0].signum()] });
        let r = o.evaluate(&[x]).unwrap();
        prop_assert_eq!(r.value, x.abs());
        prop_assert_eq!(o.dimension(), 1);
    }
}
