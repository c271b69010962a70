//! First-order oracles and the registry of the fifteen standard test problems.

mod problems;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Function value and one subgradient at a query point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResponse {
    pub value: f64,
    pub subgradient: Vec<f64>,
}

/// Anything that can answer `(f(x), g)` queries.
pub trait Oracle {
    fn dimension(&self) -> usize;

    fn evaluate(&self, x: &[f64]) -> Result<OracleResponse>;
}

/// Wraps a closure as an [`Oracle`].
pub struct FnOracle<F> {
    dimension: usize,
    f: F,
}

impl<F> FnOracle<F>
where
    F: Fn(&[f64]) -> OracleResponse,
{
    pub fn new(dimension: usize, f: F) -> Self {
        Self { dimension, f }
    }
}

impl<F> Oracle for FnOracle<F>
where
    F: Fn(&[f64]) -> OracleResponse,
{
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate(&self, x: &[f64]) -> Result<OracleResponse> {
        checked(self.dimension, x, &self.f)
    }
}

fn checked(
    dimension: usize,
    x: &[f64],
    f: impl Fn(&[f64]) -> OracleResponse,
) -> Result<OracleResponse> {
    if x.len() != dimension {
        return Err(Error::DimensionMismatch {
            expected: dimension,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("oracle input"));
    }
    let out = f(x);
    if !out.value.is_finite() || out.subgradient.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("oracle output"));
    }
    debug_assert_eq!(out.subgradient.len(), dimension);
    Ok(out)
}

/// One registry entry.
///
/// `reference_minimizer` is not part of the published table: it is a
/// minimizer computed offline to high accuracy and is only used by the
/// complexity-bound monitor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub id: usize,
    pub name: String,
    pub dimension: usize,
    pub optimal_value: f64,
    pub start_point: Vec<f64>,
    pub f_inf_default: f64,
    pub reference_minimizer: Vec<f64>,
}

impl Oracle for ProblemSpec {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate(&self, x: &[f64]) -> Result<OracleResponse> {
        let f = match self.id {
            1 => problems::cb2,
            2 => problems::cb3,
            3 => problems::dem,
            4 => problems::ql,
            5 => problems::lq,
            6 => problems::mifflin1,
            7 => problems::mifflin2,
            8 => problems::rosen_suzuki,
            9 => problems::shor,
            10 => problems::maxquad,
            11 => problems::maxq,
            12 => problems::maxl,
            13 => problems::goffin,
            14 => problems::mxhilb,
            15 => problems::l1hilb,
            _ => return Err(Error::UnknownProblem(self.id.to_string())),
        };
        checked(self.dimension, x, f)
    }
}

/// Evaluates a registry problem at `x`.
pub fn evaluate(problem: &ProblemSpec, x: &[f64]) -> Result<OracleResponse> {
    problem.evaluate(x)
}

fn spec(
    id: usize,
    name: &str,
    optimal_value: f64,
    start_point: Vec<f64>,
    reference_minimizer: Vec<f64>,
) -> ProblemSpec {
    let f_inf_default = match id {
        8 => -100.0,
        9 => 0.0,
        _ => -10.0,
    };
    ProblemSpec {
        id,
        name: name.to_string(),
        dimension: start_point.len(),
        optimal_value,
        start_point,
        f_inf_default,
        reference_minimizer,
    }
}

/// The fifteen test problems in table order.
pub fn list_problems() -> Vec<ProblemSpec> {
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let signed_ramp: Vec<f64> = (1..=20)
        .map(|i| if i <= 10 { i as f64 } else { -(i as f64) })
        .collect();
    vec![
        spec(
            1,
            "CB2",
            1.952224,
            vec![2.0, 2.0],
            vec![1.139_037_656_532_84, 0.899_559_934_843_61],
        ),
        spec(2, "CB3", 2.0, vec![2.0, 2.0], vec![1.0, 1.0]),
        spec(3, "DEM", -3.0, vec![1.0, 1.0], vec![0.0, -3.0]),
        spec(4, "QL", 7.2, vec![-1.0, 5.0], vec![1.2, 2.4]),
        spec(
            5,
            "LQ",
            -std::f64::consts::SQRT_2,
            vec![-0.5, -0.5],
            vec![half, half],
        ),
        spec(6, "Mifflin1", -1.0, vec![0.8, 0.6], vec![1.0, 0.0]),
        spec(7, "Mifflin2", -1.0, vec![-1.0, -1.0], vec![1.0, 0.0]),
        spec(
            8,
            "Rosen-Suzuki",
            -44.0,
            vec![0.0; 4],
            vec![0.0, 1.0, 2.0, -1.0],
        ),
        spec(
            9,
            "Shor",
            22.600162,
            vec![0.0, 0.0, 0.0, 0.0, 1.0],
            vec![
                1.124_351_010_182_2,
                0.979_461_599_309_08,
                1.477_707_751_932_55,
                0.920_233_485_888_07,
                1.124_291_587_998_74,
            ],
        ),
        spec(
            10,
            "Maxquad",
            -0.841408,
            vec![1.0; 10],
            vec![
                -0.126_256_580_122_01,
                -0.034_378_301_799_91,
                -0.006_857_198_005_62,
                0.026_360_658_210_57,
                0.067_294_922_361_28,
                -0.278_399_500_240_59,
                0.074_218_664_592_96,
                0.138_524_047_699_31,
                0.084_031_222_966_61,
                0.038_580_309_645_64,
            ],
        ),
        spec(11, "Maxq", 0.0, signed_ramp.clone(), vec![0.0; 20]),
        spec(12, "Maxl", 0.0, signed_ramp, vec![0.0; 20]),
        spec(
            13,
            "Goffin",
            0.0,
            (1..=50).map(|i| i as f64 - 25.5).collect(),
            vec![0.0; 50],
        ),
        spec(14, "MxHilb", 0.0, vec![1.0; 50], vec![0.0; 50]),
        spec(15, "L1Hilb", 0.0, vec![1.0; 50], vec![0.0; 50]),
    ]
}

/// Looks a problem up by numeric id or (case-insensitive) name.
pub fn find_problem(key: &str) -> Result<ProblemSpec> {
    let key = key.trim();
    let found = match key.parse::<usize>() {
        Ok(id) => list_problems().into_iter().find(|p| p.id == id),
        Err(_) => list_problems()
            .into_iter()
            .find(|p| p.name.eq_ignore_ascii_case(key)),
    };
    found.ok_or_else(|| Error::UnknownProblem(key.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn registry_matches_table() {
        let probs = list_problems();
        assert_eq!(probs.len(), 15);
        let table: [(&str, usize, f64); 15] = [
            ("CB2", 2, 1.952224),
            ("CB3", 2, 2.0),
            ("DEM", 2, -3.0),
            ("QL", 2, 7.2),
            ("LQ", 2, -std::f64::consts::SQRT_2),
            ("Mifflin1", 2, -1.0),
            ("Mifflin2", 2, -1.0),
            ("Rosen-Suzuki", 4, -44.0),
            ("Shor", 5, 22.600162),
            ("Maxquad", 10, -0.841408),
            ("Maxq", 20, 0.0),
            ("Maxl", 20, 0.0),
            ("Goffin", 50, 0.0),
            ("MxHilb", 50, 0.0),
            ("L1Hilb", 50, 0.0),
        ];
        for (i, (p, (name, n, fstar))) in probs.iter().zip(table).enumerate() {
            assert_eq!(p.id, i + 1);
            assert_eq!(p.name, name);
            assert_eq!(p.dimension, n);
            assert_eq!(p.optimal_value, fstar);
            assert_eq!(p.start_point.len(), n);
            assert_eq!(p.reference_minimizer.len(), n);
        }
        assert_eq!(probs[7].f_inf_default, -100.0);
        assert_eq!(probs[8].f_inf_default, 0.0);
        assert!(probs
            .iter()
            .filter(|p| p.id != 8 && p.id != 9)
            .all(|p| p.f_inf_default == -10.0));
    }

    #[test]
    fn reference_minimizers_attain_table_values() {
        for p in list_problems() {
            let f = p.evaluate(&p.reference_minimizer).unwrap().value;
            assert_abs_diff_eq!(
                f,
                p.optimal_value,
                epsilon = 1e-6 * (1.0 + p.optimal_value.abs())
            );
        }
    }

    #[test]
    fn spec_examples() {
        let maxq = find_problem("Maxq").unwrap();
        let r = evaluate(&maxq, &[0.0; 20]).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.subgradient.iter().all(|g| *g == 0.0));

        let dem = find_problem("3").unwrap();
        assert_eq!(dem.evaluate(&[0.0, -3.0]).unwrap().value, -3.0);

        let mx = find_problem("mxhilb").unwrap();
        assert_eq!(mx.evaluate(&[0.0; 50]).unwrap().value, 0.0);
    }

    #[test]
    fn maxquad_start_value() {
        let p = find_problem("Maxquad").unwrap();
        let f = p.evaluate(&p.start_point).unwrap().value;
        assert_abs_diff_eq!(f, 5337.066_429_311_36, epsilon = 1e-6);
    }

    #[test]
    fn kink_tie_breaking_uses_first_piece() {
        let maxl = find_problem("Maxl").unwrap();
        let r = maxl.evaluate(&[0.0; 20]).unwrap();
        assert_eq!(r.subgradient[0], 1.0);
        let goffin = find_problem("Goffin").unwrap();
        let r = goffin.evaluate(&[0.0; 50]).unwrap();
        assert_eq!(r.subgradient[0], 49.0);
        assert!(r.subgradient[1..].iter().all(|g| *g == -1.0));
    }

    #[test]
    fn input_validation() {
        let p = find_problem("CB2").unwrap();
        assert!(matches!(
            p.evaluate(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(p.evaluate(&[f64::NAN, 0.0]).is_err());
        assert!(find_problem("nope").is_err());
        assert!(find_problem("16").is_err());
    }
}
