//! Dense two-phase tableau simplex for `min c'z  s.t.  A z = b, z >= 0`.

#[derive(Debug, Clone, PartialEq)]
pub(super) enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
    IterationLimit,
}

const COST_TOL: f64 = 1e-11;
const PIVOT_TOL: f64 = 1e-10;

struct Tableau {
    width: usize,
    /// Constraint rows followed by the objective row, each `width` long; the
    /// last entry of a row is its right-hand side.
    data: Vec<f64>,
    rows: usize,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn obj_row(&self) -> usize {
        self.rows
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let p = self.at(pr, pc);
        for c in 0..w {
            self.data[pr * w + c] /= p;
        }
        self.data[pr * w + pc] = 1.0;
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let f = self.at(r, pc);
            if f == 0.0 {
                continue;
            }
            for c in 0..w {
                let v = self.data[pr * w + c];
                if v != 0.0 {
                    self.data[r * w + c] -= f * v;
                }
            }
            self.data[r * w + pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Runs simplex iterations over columns `0..allowed`.
    fn optimize(&mut self, allowed: usize, max_pivots: usize) -> Result<(), LpOutcome> {
        let obj = self.obj_row();
        let mut degenerate_run = 0usize;
        for _ in 0..max_pivots {
            let bland = degenerate_run > 50;
            let scale = (0..allowed)
                .map(|c| self.at(obj, c).abs())
                .fold(1.0_f64, f64::max);
            let mut entering = None;
            let mut best = -COST_TOL * scale;
            for c in 0..allowed {
                let d = self.at(obj, c);
                if d < best {
                    entering = Some(c);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(pc) = entering else {
                return Ok(());
            };
            let col_scale = (0..self.rows)
                .map(|r| self.at(r, pc).abs())
                .fold(0.0_f64, f64::max);
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_TOL * col_scale.max(1.0) {
                    let ratio = self.rhs(r).max(0.0) / a;
                    let take = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-14 * (1.0 + lratio) {
                                true
                            } else if ratio <= lratio + 1e-14 * (1.0 + lratio) {
                                if bland {
                                    self.basis[r] < self.basis[lr]
                                } else {
                                    a > self.at(lr, pc)
                                }
                            } else {
                                false
                            }
                        }
                    };
                    if take {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((pr, ratio)) = leave else {
                return Err(LpOutcome::Unbounded);
            };
            if ratio == 0.0 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(pr, pc);
        }
        Err(LpOutcome::IterationLimit)
    }
}

/// `a` is row-major `b.len() x c.len()`.
pub(super) fn solve_standard_form(a: &[f64], b: &[f64], c: &[f64]) -> LpOutcome {
    let m = b.len();
    let n = c.len();
    debug_assert_eq!(a.len(), m * n);
    let width = n + m + 1;
    let mut data = vec![0.0; (m + 1) * width];
    for r in 0..m {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            data[r * width + j] = sign * a[r * n + j];
        }
        data[r * width + n + r] = 1.0;
        data[r * width + width - 1] = sign * b[r];
    }
    // phase-one objective: sum of artificials, priced out
    for r in 0..m {
        for j in 0..n {
            data[m * width + j] -= data[r * width + j];
        }
        data[m * width + width - 1] -= data[r * width + width - 1];
    }
    let mut t = Tableau {
        width,
        data,
        rows: m,
        basis: (n..n + m).collect(),
    };
    let max_pivots = 50 * (m + n + 10);
    match t.optimize(n, max_pivots) {
        Ok(()) => {}
        Err(LpOutcome::Unbounded) => unreachable!("phase one is bounded below by zero"),
        Err(other) => return other,
    }
    let b_scale = 1.0 + b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if -t.rhs(m) > 1e-9 * b_scale {
        return LpOutcome::Infeasible;
    }

    // drive remaining artificials out of the basis, dropping redundant rows
    let mut r = 0;
    while r < t.rows {
        if t.basis[r] >= n {
            let row_scale = (0..n).map(|j| t.at(r, j).abs()).fold(0.0_f64, f64::max);
            match (0..n).find(|&j| t.at(r, j).abs() > PIVOT_TOL * row_scale.max(1.0)) {
                Some(pc) => t.pivot(r, pc),
                None => {
                    remove_row(&mut t, r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // phase two objective
    let obj = t.obj_row();
    let w = t.width;
    for j in 0..w {
        t.data[obj * w + j] = 0.0;
    }
    for j in 0..n {
        t.data[obj * w + j] = c[j];
    }
    for r in 0..t.rows {
        let cb = c[t.basis[r]];
        if cb != 0.0 {
            for j in 0..w {
                let v = t.data[r * w + j];
                t.data[obj * w + j] -= cb * v;
            }
        }
    }
    if let Err(outcome) = t.optimize(n, max_pivots) {
        return outcome;
    }
    let mut x = vec![0.0; n];
    for r in 0..t.rows {
        x[t.basis[r]] = t.rhs(r).max(0.0);
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    LpOutcome::Optimal { x, value }
}

fn remove_row(t: &mut Tableau, r: usize) {
    let w = t.width;
    t.data.drain(r * w..(r + 1) * w);
    t.basis.remove(r);
    t.rows -= 1;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(outcome: LpOutcome) -> (Vec<f64>, f64) {
        match outcome {
            LpOutcome::Optimal { x, value } => (x, value),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn small_lp() {
        // min -x - 2y  s.t. x + y + s1 = 4, x + 3y + s2 = 6
        let a = [1.0, 1.0, 1.0, 0.0, 1.0, 3.0, 0.0, 1.0];
        let (x, v) = optimal(solve_standard_form(
            &a,
            &[4.0, 6.0],
            &[-1.0, -2.0, 0.0, 0.0],
        ));
        assert!((v + 5.0).abs() < 1e-12);
        assert!((x[0] - 3.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        // x + y = -1 with x, y >= 0
        assert_eq!(
            solve_standard_form(&[1.0, 1.0], &[-1.0], &[1.0, 1.0]),
            LpOutcome::Infeasible
        );
        // min -x  s.t. x - y = 0
        assert_eq!(
            solve_standard_form(&[1.0, -1.0], &[0.0], &[-1.0, 0.0]),
            LpOutcome::Unbounded
        );
    }

    #[test]
    fn redundant_rows_are_dropped() {
        // x + y = 1 twice; min x
        let a = [1.0, 1.0, 1.0, 1.0];
        let (x, v) = optimal(solve_standard_form(&a, &[1.0, 1.0], &[1.0, 0.0]));
        assert!(v.abs() < 1e-14);
        assert!((x[1] - 1.0).abs() < 1e-14);
    }
}
