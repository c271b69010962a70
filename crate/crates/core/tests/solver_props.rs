use proptest::prelude::*;

use nsbundle::model::BetaMode;
use nsbundle::oracle::{find_problem, FnOracle, OracleResponse};
use nsbundle::solvers::{
    read_trace, run, write_trace, Algorithm, Solver, SolverConfig, Termination, TraceHeader,
};

/// `sum w_i |x_i - a_i| + |<v, x - a>|^2 / 2`, minimized at `a` with value 0.
fn shifted(a: Vec<f64>, w: Vec<f64>, v: Vec<f64>) -> impl Fn(&[f64]) -> OracleResponse {
    move |x: &[f64]| {
        let d: Vec<f64> = x.iter().zip(&a).map(|(p, q)| p - q).collect();
        let s: f64 = v.iter().zip(&d).map(|(p, q)| p * q).sum();
        let value = w.iter().zip(&d).map(|(wi, di)| wi * di.abs()).sum::<f64>() + 0.5 * s * s;
        let subgradient = w
            .iter()
            .zip(&d)
            .zip(&v)
            .map(|((wi, di), vi)| wi * if *di >= 0.0 { 1.0 } else { -1.0 } + s * vi)
            .collect();
        OracleResponse { value, subgradient }
    }
}

fn algorithm() -> impl Strategy<Value = Algorithm> {
    prop_oneof![
        Just(Algorithm::Fpcpa),
        Just(Algorithm::Fla),
        Just(Algorithm::Fdsa),
        Just(Algorithm::Cpba),
    ]
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..5).prop_flat_map(|n| {
        (
            prop::collection::vec(-3.0..3.0f64, n),
            prop::collection::vec(0.1..3.0f64, n),
            prop::collection::vec(-1.0..1.0f64, n),
            prop::collection::vec(-5.0..5.0f64, n),
        )
    })
}

#[test]
fn configuration_is_validated() {
    let p = find_problem("CB2").unwrap();
    for bad in [
        SolverConfig {
            mu0: 0.0,
            ..SolverConfig::default()
        },
        SolverConfig {
            kappa: 1.0,
            ..SolverConfig::default()
        },
        SolverConfig {
            sigma: 0.0,
            ..SolverConfig::default()
        },
        SolverConfig {
            max_steps: 0,
            ..SolverConfig::default()
        },
        SolverConfig {
            f_inf: f64::NAN,
            ..SolverConfig::default()
        },
    ] {
        assert!(run(&bad, &p).is_err());
    }
    let config = SolverConfig::for_problem(Algorithm::Fla, &p);
    assert!(Solver::new(config, &p, &[0.0]).is_err());
}

#[test]
fn trace_files_round_trip() {
    let p = find_problem("DEM").unwrap();
    let out = run(&SolverConfig::for_problem(Algorithm::Fdsa, &p), &p).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dem.jsonl");
    let header = TraceHeader::new(p.id, &p.name, &out);
    write_trace(&path, &header, &out.records).unwrap();
    let (back_header, back) = read_trace(&path).unwrap();
    assert_eq!(back_header, header);
    assert_eq!(back, out.records);
    assert_eq!(
        std::fs::read_to_string(&path).unwrap().lines().count(),
        out.records.len() + 1
    );
}

#[test]
fn guler_variants_solve_small_problems() {
    for name in ["CB2", "CB3", "DEM", "QL", "LQ"] {
        let p = find_problem(name).unwrap();
        for algorithm in [Algorithm::Fpcpa, Algorithm::Fla, Algorithm::Fdsa] {
            let config = SolverConfig {
                beta_mode: BetaMode::Guler,
                ..SolverConfig::for_problem(algorithm, &p)
            };
            let out = run(&config, &p).unwrap();
            assert_eq!(
                out.termination,
                Some(Termination::GapReached),
                "{name} {algorithm:?}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn run_invariants((a, w, v, x0) in instance(), algorithm in algorithm()) {
        let n = a.len();
        let oracle = FnOracle::new(n, shifted(a.clone(), w, v));
        let config = SolverConfig {
            algorithm,
            f_inf: -1.0,
            known_fstar: Some(0.0),
            max_steps: 400,
            ..SolverConfig::default()
        };
        let out = Solver::new(config.clone(), &oracle, &x0).unwrap().run_to_end();
        prop_assert!(out.error.is_none(), "{:?}", out.error);
        prop_assert_eq!(out.termination, Some(Termination::GapReached));
        prop_assert_eq!(out.records.len(), out.oracle_calls());

        let mut best = f64::INFINITY;
        let mut last_low = f64::NEG_INFINITY;
        let mut last_mu = f64::INFINITY;
        for r in &out.records {
            best = best.min(r.f_y);
            prop_assert_eq!(r.f_best, best);
            if let Some(low) = r.f_low {
                prop_assert!(low >= last_low && low <= r.f_best);
                last_low = low;
            }
            if let (Some(level), Some(low)) = (r.level, r.f_low) {
                prop_assert!(low <= level && level <= r.f_best);
            }
            if let Some(theta) = r.theta_k {
                prop_assert!(theta >= 0.0);
            }
            if algorithm == Algorithm::Fdsa {
                if let Some(mu) = r.mu_k {
                    prop_assert!(mu <= last_mu && mu >= out.state.mu_floor);
                    last_mu = mu;
                }
            }
        }
        prop_assert!(out.state.f_best <= 1e-6 * (1.0 + out.state.f_best.abs()));

        let again = Solver::new(config, &oracle, &x0).unwrap().run_to_end();
        prop_assert_eq!(again.records, out.records);
    }

    #[test]
    fn call_cap_is_respected((a, w, v, x0) in instance(), algorithm in algorithm(), cap in 1usize..30) {
        let n = a.len();
        let oracle = FnOracle::new(n, shifted(a, w, v));
        let config = SolverConfig { algorithm, max_steps: cap, f_inf: -1.0, ..SolverConfig::default() };
        let out = Solver::new(config, &oracle, &x0).unwrap().run_to_end();
        let limit = if algorithm == Algorithm::Cpba { 20 * cap } else { cap };
        prop_assert!(out.oracle_calls() <= limit);
        prop_assert!(out.termination.is_some());
    }
}
