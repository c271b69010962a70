//! Property checks run by `nsbundle verify`: oracle subgradients, the
//! lower-model property, and the momentum and error-accumulation identities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::model::{dot, norm2, BetaMode, NesterovState};
use crate::oracle::{list_problems, Oracle, ProblemSpec};
use crate::solvers::{accumulate_error, run, Algorithm, SolverConfig};

pub const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    /// Largest scaled violation found; compared against [`CHECK_TOL`].
    pub worst: f64,
    pub samples: usize,
}

impl CheckReport {
    fn new(name: String, worst: f64, samples: usize) -> Self {
        Self {
            name,
            passed: worst <= CHECK_TOL,
            worst,
            samples,
        }
    }
}

/// Uniform point in the box `center +- (1 + max|center_i|)`.
pub fn sample_near(center: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    let radius = 1.0 + center.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    center
        .iter()
        .map(|c| c + rng.gen_range(-radius..=radius))
        .collect()
}

/// `f(z) >= f(x) + <g(x), z - x>` at random pairs, violations scaled by
/// `1 + |f(x)| + |f(z)| + ||g(x)|| ||z - x||`.
pub fn subgradient_validity(
    name: &str,
    oracle: &dyn Oracle,
    center: &[f64],
    pairs: usize,
    seed: u64,
) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..pairs {
        let x = sample_near(center, &mut rng);
        let z = sample_near(center, &mut rng);
        let fx = oracle.evaluate(&x)?;
        let fz = oracle.evaluate(&z)?;
        let d: Vec<f64> = z.iter().zip(&x).map(|(a, b)| a - b).collect();
        let linear = fx.value + dot(&fx.subgradient, &d);
        let scale = 1.0 + fx.value.abs() + fz.value.abs() + norm2(&fx.subgradient) * norm2(&d);
        worst = worst.max((linear - fz.value) / scale);
    }
    Ok(CheckReport::new(
        format!("subgradient validity: {name}"),
        worst,
        pairs,
    ))
}

/// Builds a bundle with a short FPCPA1 run and checks `model(x) <= f(x)` at
/// the visited points and at `points` random points.
pub fn lower_model_validity(
    problem: &ProblemSpec,
    points: usize,
    seed: u64,
) -> Result<CheckReport> {
    let config = SolverConfig {
        max_steps: 40,
        ..SolverConfig::for_problem(Algorithm::Fpcpa, problem)
    };
    let out = run(&config, problem)?;
    let bundle = &out.state.bundle;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut queries: Vec<Vec<f64>> = bundle.cuts().iter().map(|c| c.point().to_vec()).collect();
    queries.extend((0..points).map(|_| sample_near(&problem.start_point, &mut rng)));
    let mut worst = 0.0_f64;
    for x in &queries {
        let f = problem.evaluate(x)?.value;
        let (model, _) = bundle.eval(x)?;
        worst = worst.max((model - f) / (1.0 + f.abs()));
    }
    Ok(CheckReport::new(
        format!("lower model: {}", problem.name),
        worst,
        queries.len(),
    ))
}

/// `lambda_{k-1}^2 = lambda_k^2 - lambda_k`, `lambda_k^2 = sum lambda_i` and
/// `lambda_k >= (k+2)/2` for `k <= kmax`.
pub fn nesterov_identities(kmax: usize) -> CheckReport {
    let mut s = NesterovState::new(BetaMode::Zero);
    let mut prev = s.lambda_k;
    let mut sum = s.lambda_k;
    let mut worst = 0.0_f64;
    for k in 1..=kmax {
        s = s.advance();
        let l = s.lambda_k;
        sum += l;
        let l2 = l * l;
        worst = worst.max((prev * prev - (l2 - l)).abs() / l2);
        worst = worst.max((l2 - sum).abs() / l2);
        let lower = (k as f64 + 2.0) / 2.0;
        if l < lower {
            worst = worst.max((lower - l) / lower);
        }
        prev = l;
    }
    CheckReport::new("Nesterov identities".into(), worst, kmax)
}

/// Recurrence `theta + eps - theta/lambda` against the closed form
/// `lambda_k^{-2} sum lambda_i^2 eps_i`, plus the contraction property.
pub fn error_recurrence(sequences: usize, len: usize, seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..sequences {
        let mut s = NesterovState::new(BetaMode::Zero);
        let mut theta = 0.0;
        let mut weighted = 0.0;
        for _ in 0..len {
            let eps: f64 = if rng.gen_bool(0.3) {
                0.0
            } else {
                rng.gen_range(0.0..10.0)
            };
            let l = s.lambda_k;
            let next = accumulate_error(theta, eps, l);
            weighted += l * l * eps;
            let closed = weighted / (l * l);
            worst = worst.max((next - closed).abs() / closed.abs().max(f64::MIN_POSITIVE));
            if eps <= theta / l && next > theta {
                worst = worst.max((next - theta) / theta);
            }
            theta = next;
            s = s.advance();
        }
    }
    CheckReport::new("error accumulation".into(), worst, sequences)
}

/// All checks, problems in registry order.
pub fn verify_all(seed: u64) -> Result<Vec<CheckReport>> {
    let mut reports = vec![nesterov_identities(1000), error_recurrence(1000, 100, seed)];
    for p in list_problems() {
        reports.push(subgradient_validity(
            &p.name,
            &p,
            &p.start_point,
            100,
            seed ^ p.id as u64,
        )?);
        reports.push(lower_model_validity(
            &p,
            100,
            seed.wrapping_add(p.id as u64),
        )?);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{FnOracle, OracleResponse};

    #[test]
    fn identities_hold() {
        assert!(nesterov_identities(1000).passed);
        assert!(error_recurrence(50, 100, 7).passed);
    }

    #[test]
    fn broken_subgradient_is_caught() {
        let p = crate::oracle::find_problem("CB3").unwrap();
        assert!(
            subgradient_validity("CB3", &p, &p.start_point, 50, 1)
                .unwrap()
                .passed
        );
        let flipped = FnOracle::new(2, |x: &[f64]| OracleResponse {
            value: x[0].abs() + x[1].abs(),
            subgradient: vec![-x[0].signum(), x[1].signum()],
        });
        let r = subgradient_validity("flipped", &flipped, &[0.5, 0.5], 50, 1).unwrap();
        assert!(!r.passed);
    }
}
