//! Active-set solver for the dual of the stabilized subproblems.
//!
//! Every subproblem in this crate dualizes to
//!
//! ```text
//!     minimize    psi(w) = 1/(2 mu) || G w ||^2 - b' w
//!     subject to  w >= 0,   sum(w) = 1 | sum(w) >= 1 | (nothing)
//! ```
//!
//! where the columns of `G` are subgradients and `b` holds the cut values at
//! the center (shifted by the level when one is present). The Hessian is only
//! positive semidefinite, so the free set is kept "affinely independent":
//! whenever a new column makes it dependent, the method walks along the
//! resulting zero-curvature edge until a weight hits zero.

/// Sum constraint on the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum SumRule {
    Equal,
    AtLeast,
    Free,
}

pub(super) struct DualProblem {
    pub dim: usize,
    /// Column-major `dim x count`.
    pub columns: Vec<f64>,
    pub offsets: Vec<f64>,
    pub mu: f64,
    pub rule: SumRule,
}

#[derive(Debug, Clone)]
pub(super) struct DualSolution {
    pub weights: Vec<f64>,
    /// `G w`.
    pub aggregate: Vec<f64>,
    pub sum_active: bool,
}

#[derive(Debug, Clone)]
pub(super) enum DualOutcome {
    Solved(DualSolution),
    /// The dual objective decreases without bound: the primal is infeasible.
    Unbounded,
    IterationLimit,
}

/// Relative size below which a column counts as dependent on the free set.
const RANK_TOL: f64 = 1e-10;
const OPT_TOL: f64 = 1e-12;
const REFINE_STEPS: usize = 2;

enum Subspace {
    Minimizer {
        y: Vec<f64>,
        pi: f64,
    },
    /// Edge direction over the free set with `G d = 0` (and `sum(d) = 0` when
    /// the sum constraint is in the working set).
    Edge(Vec<f64>),
}

/// Householder QR of a small dense column-major matrix, stopping at the first
/// column that is numerically dependent on its predecessors.
struct Qr {
    rows: usize,
    /// Transformed matrix: `R` in the upper triangle, reflectors below.
    a: Vec<f64>,
    rank: usize,
}

impl Qr {
    /// Factors the first `cols` columns of `a` (`rows x cols`, column-major).
    /// Only the first `check` columns are tested for dependence.
    fn new(rows: usize, cols: usize, mut a: Vec<f64>, check: usize) -> Self {
        let mut rank = check.min(cols);
        for j in 0..cols.min(rows) {
            let col = &a[j * rows..(j + 1) * rows];
            let col_norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            let tail = col[j..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if j < check && tail <= RANK_TOL * col_norm.max(f64::MIN_POSITIVE) {
                rank = j;
                break;
            }
            if tail == 0.0 {
                continue;
            }
            let head = a[j * rows + j];
            let alpha = if head >= 0.0 { -tail } else { tail };
            let v0 = head - alpha;
            a[j * rows + j] = v0;
            let vnorm2 = v0 * v0 + (tail * tail - head * head);
            let beta = if vnorm2 > 0.0 { 2.0 / vnorm2 } else { 0.0 };
            for c in (j + 1)..cols {
                let mut s = 0.0;
                for r in j..rows {
                    s += a[j * rows + r] * a[c * rows + r];
                }
                s *= beta;
                for r in j..rows {
                    a[c * rows + r] -= s * a[j * rows + r];
                }
            }
            a[j * rows + j] = alpha;
        }
        if check > rows {
            rank = rank.min(rows);
        }
        Self { rows, a, rank }
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        self.a[j * self.rows + i]
    }

    /// Solves `R[0..m,0..m] x = rhs`.
    fn solve_upper(&self, m: usize, rhs: &mut [f64]) {
        for i in (0..m).rev() {
            let mut s = rhs[i];
            for j in (i + 1)..m {
                s -= self.r(i, j) * rhs[j];
            }
            rhs[i] = s / self.r(i, i);
        }
    }

    /// Solves `R[0..m,0..m]' x = rhs`.
    fn solve_upper_t(&self, m: usize, rhs: &mut [f64]) {
        for i in 0..m {
            let mut s = rhs[i];
            for j in 0..i {
                s -= self.r(j, i) * rhs[j];
            }
            rhs[i] = s / self.r(i, i);
        }
    }
}

impl DualProblem {
    pub fn count(&self) -> usize {
        self.offsets.len()
    }

    fn column(&self, i: usize) -> &[f64] {
        &self.columns[i * self.dim..(i + 1) * self.dim]
    }

    fn aggregate(&self, w: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.dim];
        for (i, wi) in w.iter().enumerate() {
            if *wi != 0.0 {
                for (sj, gj) in s.iter_mut().zip(self.column(i)) {
                    *sj += wi * gj;
                }
            }
        }
        s
    }

    fn aggregate_over(&self, free: &[usize], y: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.dim];
        for (&j, yj) in free.iter().zip(y) {
            for (sk, gk) in s.iter_mut().zip(self.column(j)) {
                *sk += yj * gk;
            }
        }
        s
    }

    fn gradient(&self, i: usize, s: &[f64]) -> f64 {
        let gs: f64 = self.column(i).iter().zip(s).map(|(a, b)| a * b).sum();
        gs / self.mu - self.offsets[i]
    }

    /// Round-off allowance on the partial derivative `i` at weights `w`.
    fn grad_tol(&self, i: usize, w: &[f64], norms: &[f64]) -> f64 {
        let mass: f64 = w.iter().zip(norms).map(|(wj, nj)| wj * nj).sum();
        OPT_TOL * (1.0 + self.offsets[i].abs() + norms[i] * mass / self.mu)
    }

    fn subspace(&self, free: &[usize], sum_active: bool) -> Subspace {
        let n = self.dim;
        if sum_active {
            let p0 = free[0];
            let g0 = self.column(p0);
            let m = free.len() - 1;
            // [D | g0], D_j = g_{free[j+1]} - g0
            let mut a = Vec::with_capacity(n * (m + 1));
            for &j in &free[1..] {
                a.extend(self.column(j).iter().zip(g0).map(|(x, y)| x - y));
            }
            a.extend_from_slice(g0);
            let qr = Qr::new(n, m + 1, a, m);
            if qr.rank < m {
                let q = qr.rank;
                let mut d: Vec<f64> = (0..q).map(|i| -qr.r(i, q)).collect();
                qr.solve_upper(q, &mut d);
                let mut dir = vec![0.0; free.len()];
                dir[1..=q].copy_from_slice(&d);
                dir[q + 1] = 1.0;
                dir[0] = -dir[1..].iter().sum::<f64>();
                return Subspace::Edge(dir);
            }
            // R w = mu R^{-T} b_rel - Q' g0
            let mut rhs: Vec<f64> = free[1..]
                .iter()
                .map(|&j| self.mu * (self.offsets[j] - self.offsets[p0]))
                .collect();
            qr.solve_upper_t(m, &mut rhs);
            for (i, v) in rhs.iter_mut().enumerate() {
                *v -= qr.r(i, m);
            }
            qr.solve_upper(m, &mut rhs);
            let mut y = Vec::with_capacity(free.len());
            y.push(1.0 - rhs.iter().sum::<f64>());
            y.extend(rhs);
            let mut s = self.aggregate_over(free, &y);
            // corrected semi-normal equations: refine against the exact residual
            for _ in 0..REFINE_STEPS {
                let mut delta: Vec<f64> = free[1..]
                    .iter()
                    .map(|&j| self.mu * (self.gradient(p0, &s) - self.gradient(j, &s)))
                    .collect();
                qr.solve_upper_t(m, &mut delta);
                qr.solve_upper(m, &mut delta);
                y[0] -= delta.iter().sum::<f64>();
                for (yj, dj) in y[1..].iter_mut().zip(&delta) {
                    *yj += dj;
                }
                s = self.aggregate_over(free, &y);
            }
            let pi = self.gradient(p0, &s);
            Subspace::Minimizer { y, pi }
        } else {
            let m = free.len();
            let mut a = Vec::with_capacity(n * m);
            for &j in free {
                a.extend_from_slice(self.column(j));
            }
            let qr = Qr::new(n, m, a, m);
            if qr.rank < m {
                let q = qr.rank;
                let mut d: Vec<f64> = (0..q).map(|i| -qr.r(i, q)).collect();
                qr.solve_upper(q, &mut d);
                let mut dir = vec![0.0; m];
                dir[..q].copy_from_slice(&d);
                dir[q] = 1.0;
                return Subspace::Edge(dir);
            }
            let mut y: Vec<f64> = free.iter().map(|&j| self.mu * self.offsets[j]).collect();
            qr.solve_upper_t(m, &mut y);
            qr.solve_upper(m, &mut y);
            for _ in 0..REFINE_STEPS {
                let s = self.aggregate_over(free, &y);
                let mut delta: Vec<f64> = free
                    .iter()
                    .map(|&j| -self.mu * self.gradient(j, &s))
                    .collect();
                qr.solve_upper_t(m, &mut delta);
                qr.solve_upper(m, &mut delta);
                for (yj, dj) in y.iter_mut().zip(&delta) {
                    *yj += dj;
                }
            }
            Subspace::Minimizer { y, pi: 0.0 }
        }
    }

    pub fn solve(&self, max_iter: usize) -> DualOutcome {
        let count = self.count();
        let norms: Vec<f64> = (0..count)
            .map(|i| self.column(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        let mut w = vec![0.0; count];
        let mut free: Vec<usize> = Vec::new();
        let mut sum_active = self.rule != SumRule::Free;
        if sum_active {
            let start = (0..count)
                .map(|i| {
                    let g = self.column(i);
                    let gg: f64 = g.iter().map(|v| v * v).sum();
                    (gg / (2.0 * self.mu) - self.offsets[i], i)
                })
                .fold(
                    (f64::INFINITY, 0),
                    |best, cur| if cur.0 < best.0 { cur } else { best },
                )
                .1;
            w[start] = 1.0;
            free.push(start);
        }
        let mut stalls = 0usize;

        for _ in 0..max_iter {
            let bland = stalls > 2 * (self.dim + 2);
            if free.is_empty() {
                // only reachable without a sum constraint: w = 0 is the
                // subspace minimizer
            } else {
                match self.subspace(&free, sum_active) {
                    Subspace::Edge(mut dir) => {
                        let s = self.aggregate(&w);
                        let slope: f64 = free
                            .iter()
                            .zip(&dir)
                            .map(|(&j, d)| self.gradient(j, &s) * d)
                            .sum();
                        let tol: f64 = free
                            .iter()
                            .zip(&dir)
                            .map(|(&j, d)| self.grad_tol(j, &w, &norms) * d.abs())
                            .sum();
                        if slope > 0.0 || (slope.abs() <= tol && dir.iter().all(|d| *d >= 0.0)) {
                            dir.iter_mut().for_each(|d| *d = -*d);
                        }
                        let descent = slope.abs() > tol;
                        match self.ratio(&w, &free, &dir, sum_active, bland) {
                            Some((alpha, block)) => {
                                if alpha == 0.0 {
                                    stalls += 1;
                                } else {
                                    stalls = 0;
                                }
                                self.take_step(
                                    &mut w,
                                    &mut free,
                                    &dir,
                                    alpha,
                                    block,
                                    &mut sum_active,
                                );
                            }
                            None if descent => return DualOutcome::Unbounded,
                            None => {
                                // flat edge with nothing blocking; drop the
                                // newest free column
                                let j = free.pop().unwrap();
                                w[j] = 0.0;
                            }
                        }
                        continue;
                    }
                    Subspace::Minimizer { y, pi } => {
                        let dir: Vec<f64> = free.iter().zip(&y).map(|(&j, yj)| yj - w[j]).collect();
                        let infeasible = y.iter().any(|v| *v < 0.0)
                            || (!sum_active
                                && self.rule == SumRule::AtLeast
                                && y.iter().sum::<f64>() < 1.0);
                        if infeasible {
                            if let Some((alpha, block)) =
                                self.ratio(&w, &free, &dir, sum_active, bland)
                            {
                                if alpha < 1.0 {
                                    if alpha == 0.0 {
                                        stalls += 1;
                                    } else {
                                        stalls = 0;
                                    }
                                    self.take_step(
                                        &mut w,
                                        &mut free,
                                        &dir,
                                        alpha,
                                        block,
                                        &mut sum_active,
                                    );
                                    continue;
                                }
                            }
                        }
                        for (&j, yj) in free.iter().zip(&y) {
                            w[j] = yj.max(0.0);
                        }
                        stalls = 0;
                        let pi_tol = if sum_active {
                            self.grad_tol(free[0], &w, &norms)
                        } else {
                            0.0
                        };
                        if sum_active && self.rule == SumRule::AtLeast && pi < -pi_tol {
                            sum_active = false;
                            continue;
                        }
                        let shift = if sum_active { pi } else { 0.0 };
                        if let Some(entering) =
                            self.entering(&w, &free, shift, pi_tol, &norms, bland)
                        {
                            free.push(entering);
                            continue;
                        }
                        return DualOutcome::Solved(DualSolution {
                            aggregate: self.aggregate(&w),
                            weights: w,
                            sum_active,
                        });
                    }
                }
            }
            // empty free set (Free rule)
            match self.entering(&w, &free, 0.0, 0.0, &norms, bland) {
                Some(entering) => free.push(entering),
                None => {
                    return DualOutcome::Solved(DualSolution {
                        aggregate: vec![0.0; self.dim],
                        weights: w,
                        sum_active: false,
                    })
                }
            }
        }
        DualOutcome::IterationLimit
    }

    /// Most negative reduced gradient outside the free set, beyond round-off.
    fn entering(
        &self,
        w: &[f64],
        free: &[usize],
        pi: f64,
        pi_tol: f64,
        norms: &[f64],
        bland: bool,
    ) -> Option<usize> {
        let s = self.aggregate(w);
        let mut best: Option<(f64, usize)> = None;
        for i in 0..self.count() {
            if free.contains(&i) {
                continue;
            }
            let reduced = self.gradient(i, &s) - pi;
            if reduced < -(self.grad_tol(i, w, norms) + pi_tol) {
                if bland {
                    return Some(i);
                }
                if best.is_none_or(|(v, _)| reduced < v) {
                    best = Some((reduced, i));
                }
            }
        }
        best.map(|(_, i)| i)
    }

    /// Longest feasible step along `dir` (over the free set), capped at 1 for
    /// Newton steps by the caller. Returns the step and what blocks it.
    fn ratio(
        &self,
        w: &[f64],
        free: &[usize],
        dir: &[f64],
        sum_active: bool,
        bland: bool,
    ) -> Option<(f64, Block)> {
        let mut best: Option<(f64, Block)> = None;
        for (pos, (&j, d)) in free.iter().zip(dir).enumerate() {
            if *d < 0.0 {
                let alpha = (w[j] / -d).max(0.0);
                let better = match best {
                    None => true,
                    Some((a, Block::Bound(p))) => {
                        alpha < a || (alpha == a && bland && free[pos] < free[p])
                    }
                    Some((a, Block::Sum)) => alpha < a,
                };
                if better {
                    best = Some((alpha, Block::Bound(pos)));
                }
            }
        }
        if !sum_active && self.rule == SumRule::AtLeast {
            let total: f64 = free.iter().map(|&j| w[j]).sum();
            let rate: f64 = dir.iter().sum();
            if rate < 0.0 {
                let alpha = ((total - 1.0) / -rate).max(0.0);
                if best.is_none_or(|(a, _)| alpha < a) {
                    best = Some((alpha, Block::Sum));
                }
            }
        }
        best
    }

    fn take_step(
        &self,
        w: &mut [f64],
        free: &mut Vec<usize>,
        dir: &[f64],
        alpha: f64,
        block: Block,
        sum_active: &mut bool,
    ) {
        for (&j, d) in free.iter().zip(dir) {
            w[j] = (w[j] + alpha * d).max(0.0);
        }
        match block {
            Block::Bound(pos) => {
                if *sum_active && free.len() == 1 {
                    // round-off only: a single free weight under sum = 1
                    w[free[0]] = 1.0;
                    return;
                }
                let j = free.remove(pos);
                w[j] = 0.0;
            }
            Block::Sum => {
                *sum_active = true;
                let total: f64 = free.iter().map(|&j| w[j]).sum();
                if total > 0.0 {
                    free.iter().for_each(|&j| w[j] /= total);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Block {
    Bound(usize),
    Sum,
}
