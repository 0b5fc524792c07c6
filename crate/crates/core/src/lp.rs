//! Dense revised simplex for the covering LP
//!
//!   min Σⱼ cⱼ  s.t.  Σⱼ a_ij cⱼ ≥ bᵢ,  c ≥ 0,
//!
//! kept in the form A c − s = b with surplus variables s ≥ 0 and an explicit
//! basis inverse. Rows (cuts) and columns (free extreme points) can be added
//! between solves; the basis is kept, so a new row is repaired by dual simplex
//! steps and new columns by primal steps.
//!
//! Pricing is Dantzig's rule with lowest-index tie-breaking; after a run of
//! pivots without objective progress it switches to Bland's rule until the
//! objective moves again.

use nalgebra::DMatrix;

const FEAS_TOL: f64 = 1e-11;
const OPT_TOL: f64 = 1e-11;
const PIVOT_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 50;
const PERTURB: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Var {
    Col(usize),
    Surplus(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct CoverLp {
    /// Column-major constraint coefficients, one vector of length `rows` per column.
    cols: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<Var>,
    col_row: Vec<Option<usize>>,
    surplus_row: Vec<Option<usize>>,
    /// Row-major m × m.
    binv: Vec<f64>,
    since_refactor: usize,
    pivots: usize,
}

impl CoverLp {
    pub fn new(columns: Vec<Vec<f64>>) -> Self {
        let n = columns.len();
        assert!(columns.iter().all(|c| c.is_empty()), "columns start without rows");
        Self {
            cols: columns,
            rhs: Vec::new(),
            basis: Vec::new(),
            col_row: vec![None; n],
            surplus_row: Vec::new(),
            binv: Vec::new(),
            since_refactor: 0,
            pivots: 0,
        }
    }

    pub fn with_columns(n: usize) -> Self {
        Self::new(vec![Vec::new(); n])
    }

    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn columns(&self) -> usize {
        self.cols.len()
    }

    pub fn pivots(&self) -> usize {
        self.pivots
    }

    /// Adds the constraint Σⱼ coeffs[j]·cⱼ ≥ rhs. Its surplus enters the basis.
    pub fn add_row(&mut self, coeffs: &[f64], rhs: f64) {
        assert_eq!(coeffs.len(), self.cols.len());
        let m = self.rows();
        for (col, &a) in self.cols.iter_mut().zip(coeffs) {
            col.push(a);
        }
        self.rhs.push(rhs);
        // B' = [[B, 0], [r, −1]] ⇒ B'⁻¹ = [[B⁻¹, 0], [r B⁻¹, −1]]
        let r: Vec<f64> = self.basis.iter().map(|&v| self.coeff(v, m)).collect();
        let mut binv = vec![0.0; (m + 1) * (m + 1)];
        for i in 0..m {
            binv[i * (m + 1)..i * (m + 1) + m].copy_from_slice(&self.binv[i * m..(i + 1) * m]);
        }
        for k in 0..m {
            let mut acc = 0.0;
            for i in 0..m {
                acc += r[i] * self.binv[i * m + k];
            }
            binv[m * (m + 1) + k] = acc;
        }
        binv[m * (m + 1) + m] = -1.0;
        self.binv = binv;
        self.basis.push(Var::Surplus(m));
        self.surplus_row.push(Some(m));
    }

    /// Appends nonbasic columns (each of length `rows()`).
    pub fn add_columns(&mut self, columns: Vec<Vec<f64>>) {
        for c in columns {
            assert_eq!(c.len(), self.rows());
            self.cols.push(c);
            self.col_row.push(None);
        }
    }

    fn coeff(&self, v: Var, row: usize) -> f64 {
        match v {
            Var::Col(j) => self.cols[j][row],
            Var::Surplus(i) => {
                if i == row {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn column(&self, v: Var) -> Vec<f64> {
        let m = self.rows();
        match v {
            Var::Col(j) => self.cols[j].clone(),
            Var::Surplus(i) => {
                let mut e = vec![0.0; m];
                e[i] = -1.0;
                e
            }
        }
    }

    /// Unit costs with a deterministic relative perturbation below 1e-7 that breaks the
    /// ties symmetric point sets would otherwise create in the ratio tests.
    fn cost(v: Var) -> f64 {
        match v {
            Var::Col(j) => 1.0 + perturbation(j),
            Var::Surplus(_) => 0.0,
        }
    }

    fn is_basic(&self, v: Var) -> bool {
        match v {
            Var::Col(j) => self.col_row[j].is_some(),
            Var::Surplus(i) => self.surplus_row[i].is_some(),
        }
    }

    fn basic_values(&self) -> Vec<f64> {
        let m = self.rows();
        (0..m)
            .map(|i| (0..m).map(|k| self.binv[i * m + k] * self.rhs[k]).sum())
            .collect()
    }

    /// y = c_Bᵀ B⁻¹.
    pub fn duals(&self) -> Vec<f64> {
        let m = self.rows();
        let mut y = vec![0.0; m];
        for (i, &v) in self.basis.iter().enumerate() {
            let c = Self::cost(v);
            if c != 0.0 {
                for k in 0..m {
                    y[k] += c * self.binv[i * m + k];
                }
            }
        }
        y
    }

    pub fn primal(&self) -> Vec<f64> {
        let xb = self.basic_values();
        let mut c = vec![0.0; self.cols.len()];
        for (i, &v) in self.basis.iter().enumerate() {
            if let Var::Col(j) = v {
                c[j] = xb[i].max(0.0);
            }
        }
        c
    }

    pub fn objective(&self) -> f64 {
        self.primal().iter().sum()
    }

    fn reduced_cost(&self, v: Var, y: &[f64]) -> f64 {
        match v {
            Var::Col(j) => Self::cost(v) - dot(&self.cols[j], y),
            Var::Surplus(i) => y[i],
        }
    }

    fn nonbasic(&self) -> impl Iterator<Item = Var> + '_ {
        (0..self.cols.len())
            .map(Var::Col)
            .chain((0..self.rhs.len()).map(Var::Surplus))
            .filter(move |&v| !self.is_basic(v))
    }

    fn pivot(&mut self, row: usize, entering: Var, u: &[f64]) {
        let m = self.rows();
        let ur = u[row];
        let pivot_row: Vec<f64> = (0..m).map(|k| self.binv[row * m + k] / ur).collect();
        for i in 0..m {
            if i == row || u[i] == 0.0 {
                continue;
            }
            let f = u[i];
            for k in 0..m {
                self.binv[i * m + k] -= f * pivot_row[k];
            }
        }
        self.binv[row * m..(row + 1) * m].copy_from_slice(&pivot_row);
        let leaving = self.basis[row];
        match leaving {
            Var::Col(j) => self.col_row[j] = None,
            Var::Surplus(i) => self.surplus_row[i] = None,
        }
        match entering {
            Var::Col(j) => self.col_row[j] = Some(row),
            Var::Surplus(i) => self.surplus_row[i] = Some(row),
        }
        self.basis[row] = entering;
        self.pivots += 1;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor();
        }
    }

    fn refactor(&mut self) {
        let m = self.rows();
        self.since_refactor = 0;
        if m == 0 {
            return;
        }
        let b = DMatrix::from_fn(m, m, |i, k| self.coeff(self.basis[k], i));
        if let Some(inv) = b.try_inverse() {
            for i in 0..m {
                for k in 0..m {
                    self.binv[i * m + k] = inv[(i, k)];
                }
            }
        }
    }

    fn binv_times(&self, col: &[f64]) -> Vec<f64> {
        let m = self.rows();
        (0..m)
            .map(|i| (0..m).map(|k| self.binv[i * m + k] * col[k]).sum())
            .collect()
    }

    /// Runs dual and primal simplex phases until optimal.
    pub fn solve(&mut self, max_pivots: usize) -> LpStatus {
        let start = self.pivots;
        let mut best_obj = f64::NEG_INFINITY;
        let mut stall = 0usize;
        loop {
            if self.pivots - start >= max_pivots {
                return LpStatus::IterationLimit;
            }
            let bland = stall > 2 * self.rows().max(10);
            let xb = self.basic_values();
            let y = self.duals();
            // dual phase: restore primal feasibility
            let leave = select_min(xb.iter().enumerate().map(|(i, &x)| (i, x)), -FEAS_TOL, bland, |i| {
                self.basis[i]
            });
            if let Some(row) = leave {
                let m = self.rows();
                let brow = &self.binv[row * m..(row + 1) * m];
                let mut entering: Option<(Var, f64)> = None;
                for v in self.nonbasic() {
                    let alpha = match v {
                        Var::Col(j) => dot(brow, &self.cols[j]),
                        Var::Surplus(i) => -brow[i],
                    };
                    if alpha < -PIVOT_TOL {
                        let d = self.reduced_cost(v, &y).max(0.0);
                        let ratio = d / -alpha;
                        let better = match entering {
                            None => true,
                            Some((_, best)) => ratio < best - 1e-15 * best.abs().max(1.0),
                        };
                        if better {
                            entering = Some((v, ratio));
                        }
                    }
                }
                let Some((v, _)) = entering else {
                    return LpStatus::Infeasible;
                };
                let u = self.binv_times(&self.column(v));
                self.pivot(row, v, &u);
            } else {
                // primal phase: restore dual feasibility
                let enter = self
                    .nonbasic()
                    .map(|v| (v, self.reduced_cost(v, &y)))
                    .filter(|&(_, d)| d < -OPT_TOL)
                    .fold(None::<(Var, f64)>, |acc, (v, d)| match acc {
                        None => Some((v, d)),
                        Some((bv, bd)) => {
                            if bland {
                                Some(if v < bv { (v, d) } else { (bv, bd) })
                            } else if d < bd {
                                Some((v, d))
                            } else {
                                Some((bv, bd))
                            }
                        }
                    });
                let Some((v, _)) = enter else {
                    return LpStatus::Optimal;
                };
                let u = self.binv_times(&self.column(v));
                let mut leave: Option<(usize, f64)> = None;
                for i in 0..u.len() {
                    if u[i] > PIVOT_TOL {
                        let ratio = xb[i].max(0.0) / u[i];
                        let better = match leave {
                            None => true,
                            Some((bi, br)) => {
                                ratio < br - 1e-15 || (ratio <= br + 1e-15 && self.basis[i] < self.basis[bi])
                            }
                        };
                        if better {
                            leave = Some((i, ratio));
                        }
                    }
                }
                let Some((row, _)) = leave else {
                    // objective bounded below by 0, so this is numerical breakdown
                    self.refactor();
                    return LpStatus::IterationLimit;
                };
                self.pivot(row, v, &u);
            }
            // progress: objective in the primal phase, infeasibility in the dual phase
            let xb = self.basic_values();
            let infeas: f64 = xb.iter().map(|&x| (-x).max(0.0)).sum();
            let metric = self.objective() - infeas;
            if (metric - best_obj).abs() > 1e-13 {
                best_obj = metric;
                stall = 0;
            } else {
                stall += 1;
            }
        }
    }
}

fn select_min(
    items: impl Iterator<Item = (usize, f64)>,
    threshold: f64,
    bland: bool,
    key: impl Fn(usize) -> Var,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, x) in items {
        if x >= threshold {
            continue;
        }
        best = match best {
            None => Some((i, x)),
            Some((bi, bx)) => {
                let take = if bland { key(i) < key(bi) } else { x < bx };
                if take {
                    Some((i, x))
                } else {
                    Some((bi, bx))
                }
            }
        };
    }
    best.map(|(i, _)| i)
}

fn perturbation(j: usize) -> f64 {
    // fractional part of j·φ spreads consecutive indices evenly over [0, 1)
    let phi = 0.618_033_988_749_894_9;
    PERTURB * ((j as f64 + 1.0) * phi).fract()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
