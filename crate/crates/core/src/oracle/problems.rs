//! Objective functions of the standard nonsmooth test set.
//!
//! Every function is written as a maximum (or a sum of absolute values) of
//! smooth pieces. At a kink the returned subgradient is the gradient of the
//! lowest-index active piece, so results are deterministic.

use std::sync::OnceLock;

use super::OracleResponse;

/// Picks the first piece attaining the maximum.
fn first_max<I>(pieces: I) -> (f64, usize)
where
    I: IntoIterator<Item = f64>,
{
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, v) in pieces.into_iter().enumerate() {
        if v > best.0 {
            best = (v, i);
        }
    }
    best
}

pub(super) fn cb2(x: &[f64]) -> OracleResponse {
    let (a, b) = (x[0], x[1]);
    let e = 2.0 * (b - a).exp();
    let (value, i) = first_max([a * a + b.powi(4), (2.0 - a).powi(2) + (2.0 - b).powi(2), e]);
    let subgradient = match i {
        0 => vec![2.0 * a, 4.0 * b.powi(3)],
        1 => vec![-2.0 * (2.0 - a), -2.0 * (2.0 - b)],
        _ => vec![-e, e],
    };
    OracleResponse { value, subgradient }
}

pub(super) fn cb3(x: &[f64]) -> OracleResponse {
    let (a, b) = (x[0], x[1]);
    let e = 2.0 * (b - a).exp();
    let (value, i) = first_max([a.powi(4) + b * b, (2.0 - a).powi(2) + (2.0 - b).powi(2), e]);
    let subgradient = match i {
        0 => vec![4.0 * a.powi(3), 2.0 * b],
        1 => vec![-2.0 * (2.0 - a), -2.0 * (2.0 - b)],
        _ => vec![-e, e],
    };
    OracleResponse { value, subgradient }
}

pub(super) fn dem(x: &[f64]) -> OracleResponse {
    let (a, b) = (x[0], x[1]);
    let (value, i) = first_max([5.0 * a + b, -5.0 * a + b, a * a + b * b + 4.0 * b]);
    let subgradient = match i {
        0 => vec![5.0, 1.0],
        1 => vec![-5.0, 1.0],
        _ => vec![2.0 * a, 2.0 * b + 4.0],
    };
    OracleResponse { value, subgradient }
}

pub(super) fn ql(x: &[f64]) -> OracleResponse {
    let (a, b) = (x[0], x[1]);
    let base = a * a + b * b;
    let (value, i) = first_max([
        base,
        base + 10.0 * (-4.0 * a - b + 4.0),
        base + 10.0 * (-a - 2.0 * b + 6.0),
    ]);
    let subgradient = match i {
        0 => vec![2.0 * a, 2.0 * b],
        1 => vec![2.0 * a - 40.0, 2.0 * b - 10.0],
        _ => vec![2.0 * a - 10.0, 2.0 * b - 20.0],
    };
    OracleResponse { value, subgradient }
}

pub(super) fn lq(x: &[f64]) -> OracleResponse {
    let (a, b) = (x[0], x[1]);
    let lin = -a - b;
    let (value, i) = first_max([lin, lin + a * a + b * b - 1.0]);
    let subgradient = match i {
        0 => vec![-1.0, -1.0],
        _ => vec![-1.0 + 2.0 * a, -1.0 + 2.0 * b],
    };
    OracleResponse { value, subgradient }
}

pub(super) fn mifflin1(x: &[f64]) -> OracleResponse {
    let (a, b) = (x[0], x[1]);
    let h = a * a + b * b - 1.0;
    let (value, i) = first_max([-a + 20.0 * h, -a]);
    let subgradient = match i {
        0 => vec![-1.0 + 40.0 * a, 40.0 * b],
        _ => vec![-1.0, 0.0],
    };
    OracleResponse { value, subgradient }
}

pub(super) fn mifflin2(x: &[f64]) -> OracleResponse {
    // -a + 2h + 1.75|h| = max(-a + 3.75h, -a + 0.25h)
    let (a, b) = (x[0], x[1]);
    let h = a * a + b * b - 1.0;
    let (value, i) = first_max([-a + 3.75 * h, -a + 0.25 * h]);
    let w = if i == 0 { 3.75 } else { 0.25 };
    let subgradient = vec![-1.0 + 2.0 * w * a, 2.0 * w * b];
    OracleResponse { value, subgradient }
}

pub(super) fn rosen_suzuki(x: &[f64]) -> OracleResponse {
    let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
    let f1 = a * a + b * b + 2.0 * c * c + d * d - 5.0 * a - 5.0 * b - 21.0 * c + 7.0 * d;
    let f2 = a * a + b * b + c * c + d * d + a - b + c - d - 8.0;
    let f3 = a * a + 2.0 * b * b + c * c + 2.0 * d * d - a - d - 10.0;
    let f4 = a * a + b * b + c * c + 2.0 * a - b - d - 5.0;
    let g1 = [2.0 * a - 5.0, 2.0 * b - 5.0, 4.0 * c - 21.0, 2.0 * d + 7.0];
    let g2 = [2.0 * a + 1.0, 2.0 * b - 1.0, 2.0 * c + 1.0, 2.0 * d - 1.0];
    let g3 = [2.0 * a - 1.0, 4.0 * b, 2.0 * c, 4.0 * d - 1.0];
    let g4 = [2.0 * a + 2.0, 2.0 * b - 1.0, 2.0 * c, -1.0];
    let (value, i) = first_max([f1, f1 + 10.0 * f2, f1 + 10.0 * f3, f1 + 10.0 * f4]);
    let extra = match i {
        0 => None,
        1 => Some(g2),
        2 => Some(g3),
        _ => Some(g4),
    };
    let subgradient = (0..4)
        .map(|j| g1[j] + extra.map_or(0.0, |g| 10.0 * g[j]))
        .collect();
    OracleResponse { value, subgradient }
}

const SHOR_CENTERS: [[f64; 5]; 10] = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [2.0, 1.0, 1.0, 1.0, 3.0],
    [1.0, 2.0, 1.0, 1.0, 2.0],
    [1.0, 4.0, 1.0, 2.0, 2.0],
    [3.0, 2.0, 1.0, 0.0, 1.0],
    [0.0, 2.0, 1.0, 0.0, 1.0],
    [1.0, 1.0, 1.0, 1.0, 1.0],
    [1.0, 0.0, 1.0, 2.0, 1.0],
    [0.0, 0.0, 2.0, 1.0, 0.0],
    [1.0, 1.0, 2.0, 0.0, 0.0],
];
const SHOR_WEIGHTS: [f64; 10] = [1.0, 5.0, 10.0, 2.0, 4.0, 3.0, 1.7, 2.5, 6.0, 3.5];

pub(super) fn shor(x: &[f64]) -> OracleResponse {
    let (value, i) = first_max(SHOR_CENTERS.iter().zip(SHOR_WEIGHTS).map(|(a, b)| {
        b * a
            .iter()
            .zip(x)
            .map(|(aj, xj)| (xj - aj).powi(2))
            .sum::<f64>()
    }));
    let (a, b) = (&SHOR_CENTERS[i], SHOR_WEIGHTS[i]);
    let subgradient = a
        .iter()
        .zip(x)
        .map(|(aj, xj)| 2.0 * b * (xj - aj))
        .collect();
    OracleResponse { value, subgradient }
}

struct MaxquadData {
    // row-major 10x10 per piece
    matrices: Vec<[f64; 100]>,
    linear: Vec<[f64; 10]>,
}

fn maxquad_data() -> &'static MaxquadData {
    static DATA: OnceLock<MaxquadData> = OnceLock::new();
    DATA.get_or_init(|| {
        let mut matrices = Vec::with_capacity(5);
        let mut linear = Vec::with_capacity(5);
        for k in 1..=5 {
            let kf = k as f64;
            let mut a = [0.0; 100];
            for i in 1..=10 {
                for j in (i + 1)..=10 {
                    let (fi, fj) = (i as f64, j as f64);
                    let v = (fi / fj).exp() * (fi * fj).cos() * kf.sin();
                    a[(i - 1) * 10 + (j - 1)] = v;
                    a[(j - 1) * 10 + (i - 1)] = v;
                }
            }
            for i in 0..10 {
                let off: f64 = (0..10)
                    .filter(|&j| j != i)
                    .map(|j| a[i * 10 + j].abs())
                    .sum();
                a[i * 10 + i] = (i + 1) as f64 / 10.0 * kf.sin().abs() + off;
            }
            let mut b = [0.0; 10];
            for (i, bi) in b.iter_mut().enumerate() {
                let fi = (i + 1) as f64;
                *bi = (fi / kf).exp() * (fi * kf).sin();
            }
            matrices.push(a);
            linear.push(b);
        }
        MaxquadData { matrices, linear }
    })
}

pub(super) fn maxquad(x: &[f64]) -> OracleResponse {
    let data = maxquad_data();
    let mut products = Vec::with_capacity(5);
    let (value, i) = first_max(data.matrices.iter().zip(&data.linear).map(|(a, b)| {
        let ax: Vec<f64> = (0..10)
            .map(|r| (0..10).map(|c| a[r * 10 + c] * x[c]).sum())
            .collect();
        let v = ax.iter().zip(x).map(|(p, q)| p * q).sum::<f64>()
            - b.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
        products.push(ax);
        v
    }));
    let subgradient = products[i]
        .iter()
        .zip(&data.linear[i])
        .map(|(ax, b)| 2.0 * ax - b)
        .collect();
    OracleResponse { value, subgradient }
}

pub(super) fn maxq(x: &[f64]) -> OracleResponse {
    let (value, i) = first_max(x.iter().map(|v| v * v));
    let mut subgradient = vec![0.0; x.len()];
    subgradient[i] = 2.0 * x[i];
    OracleResponse { value, subgradient }
}

pub(super) fn maxl(x: &[f64]) -> OracleResponse {
    // pieces ordered x_1, -x_1, x_2, -x_2, ...
    let (value, p) = first_max(x.iter().flat_map(|v| [*v, -*v]));
    let mut subgradient = vec![0.0; x.len()];
    subgradient[p / 2] = if p % 2 == 0 { 1.0 } else { -1.0 };
    OracleResponse { value, subgradient }
}

pub(super) fn goffin(x: &[f64]) -> OracleResponse {
    let n = x.len() as f64;
    let (top, j) = first_max(x.iter().copied());
    let value = n * top - x.iter().sum::<f64>();
    let mut subgradient = vec![-1.0; x.len()];
    subgradient[j] += n;
    OracleResponse { value, subgradient }
}

fn hilbert_row(i: usize, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |j| 1.0 / (i + j + 1) as f64)
}

fn hilbert_products(x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| hilbert_row(i, x.len()).zip(x).map(|(h, v)| h * v).sum())
        .collect()
}

pub(super) fn mxhilb(x: &[f64]) -> OracleResponse {
    let hx = hilbert_products(x);
    let (value, p) = first_max(hx.iter().flat_map(|v| [*v, -*v]));
    let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
    let subgradient = hilbert_row(p / 2, x.len()).map(|h| sign * h).collect();
    OracleResponse { value, subgradient }
}

pub(super) fn l1hilb(x: &[f64]) -> OracleResponse {
    let n = x.len();
    let hx = hilbert_products(x);
    let value = hx.iter().map(|v| v.abs()).sum();
    let mut subgradient = vec![0.0; n];
    for (i, v) in hx.iter().enumerate() {
        let sign = if *v >= 0.0 { 1.0 } else { -1.0 };
        for (g, h) in subgradient.iter_mut().zip(hilbert_row(i, n)) {
            *g += sign * h;
        }
    }
    OracleResponse { value, subgradient }
}
