//! Certified bracketing of the robustness.
//!
//! The primal side minimizes Σⱼ cⱼ subject to Σⱼ cⱼσⱼ ⪰ ρ over a finite set of
//! free extreme points σⱼ, enforcing the matrix inequality by eigenvector
//! cuts. The LP duals of the cuts assemble a witness W = Σ y_v |v⟩⟨v| whose
//! free value over the full model turns Tr[Wρ] into a lower bound.
//!
//! Upper bounds refer to the truncated problem in which free extreme points
//! are the cropped free states; lower bounds from witnesses supported on the
//! truncation are also valid for the untruncated problem.

use crate::error::{Error, Result};
use crate::fock::{coherent_amplitudes, CorrelatedState, DensityOperator};
use crate::free_sets::{
    free_value, product_points, to_cvector, Certification, FreeSetKind, FreeSetModel, FreeValueResult, Maximizer,
};
use crate::linalg::{self, CMatrix, CVector, HermitianEigen, C64};
use crate::lp::{CoverLp, LpStatus};
use crate::measures::{Method, RobustnessBounds};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// A cut is added while λ_min(Σcσ − ρ) < −cut_tol.
    pub cut_tol: f64,
    pub max_cuts: usize,
    /// Eigenvectors with negative eigenvalue added per round, most negative first.
    pub cuts_per_round: usize,
    /// Sandwich stops once upper − lower ≤ gap_tol · lower.
    pub gap_tol: f64,
    pub max_refinements: usize,
    /// Random product vectors used to discretize the separable set.
    pub product_points: usize,
    pub seed: u64,
    pub emit_cuts: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cut_tol: 1e-9,
            max_cuts: 2000,
            cuts_per_round: 1,
            gap_tol: 1e-3,
            max_refinements: 3,
            product_points: 200,
            seed: 0,
            emit_cuts: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cut_tol > 0.0) || !(self.gap_tol >= 0.0) || self.max_cuts == 0 {
            return Err(Error::Config(format!(
                "cut_tol {} gap_tol {} max_cuts {}",
                self.cut_tol, self.gap_tol, self.max_cuts
            )));
        }
        Ok(())
    }
}

/// A positive observable together with its free value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(with = "crate::io::cmatrix")]
    pub operator: CMatrix,
    pub free_value: FreeValueResult,
    /// The operator has been divided by its free value.
    pub rescaled: bool,
}

impl Witness {
    /// Computes the free value of `operator` over the full model.
    pub fn evaluate(operator: CMatrix, model: &FreeSetModel) -> Result<Self> {
        let free_value = free_value(&operator, model)?;
        Ok(Self {
            operator,
            free_value,
            rescaled: false,
        })
    }

    pub fn rescale(&self) -> Result<Self> {
        let f = self.free_value.value;
        if !(f > 0.0) {
            return Err(Error::ZeroWitness);
        }
        let mut fv = self.free_value.clone();
        fv.value = 1.0;
        Ok(Self {
            operator: self.operator.unscale(f),
            free_value: fv,
            rescaled: true,
        })
    }

    /// Tr[Wρ].
    pub fn expectation(&self, rho: &CMatrix) -> f64 {
        linalg::trace_product(&self.operator, rho).re
    }

    /// Tr[Wρ]/free value.
    pub fn lower_bound(&self, rho: &CMatrix) -> f64 {
        self.expectation(rho) / self.free_value.value
    }

    pub fn is_certified(&self) -> bool {
        self.free_value.certification.is_certified()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    IterationCap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub bounds: RobustnessBounds,
    /// LP solves across all rounds.
    pub iterations: usize,
    pub cuts: usize,
    pub refinements: usize,
    pub witness: Witness,
    pub termination: Termination,
    /// Objective of the last LP (a relaxation of the discretized problem).
    pub lp_value: f64,
    /// Number of free extreme points in the final discretization.
    pub discretization: usize,
    pub tail_weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cut_log: Option<Vec<Vec<(f64, f64)>>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// A free extreme point of the discretization.
#[derive(Clone, Debug)]
pub enum ExtremePoint {
    Pure(CVector),
    Mixed(CMatrix),
}

impl ExtremePoint {
    fn overlap(&self, v: &CVector) -> f64 {
        match self {
            ExtremePoint::Pure(p) => p.dotc(v).norm_sqr(),
            ExtremePoint::Mixed(m) => linalg::expectation(m, v),
        }
    }

    fn add_to(&self, weight: f64, acc: &mut CMatrix) {
        match self {
            ExtremePoint::Pure(p) => *acc += linalg::projector(p).scale(weight),
            ExtremePoint::Mixed(m) => *acc += m.scale(weight),
        }
    }

    fn dim(&self) -> usize {
        match self {
            ExtremePoint::Pure(p) => p.len(),
            ExtremePoint::Mixed(m) => m.nrows(),
        }
    }

    fn trace(&self) -> f64 {
        match self {
            ExtremePoint::Pure(p) => p.norm_squared(),
            ExtremePoint::Mixed(m) => m.trace().re,
        }
    }
}

/// Design steps interleaved with each cutting-plane round for pure states.
const POLISH_STEPS: usize = 10;

/// √λ·v when ρ = λ|v⟩⟨v| up to 10⁻¹² of its trace.
fn rank_one_factor(rho: &CMatrix) -> Option<CVector> {
    let eig = HermitianEigen::new(rho);
    let n = eig.values.len();
    let trace: f64 = eig.values.iter().sum();
    if n == 0 || !(trace > 0.0) {
        return None;
    }
    let rest: f64 = eig.values[..n - 1].iter().map(|v| v.abs()).sum();
    (rest <= 1e-12 * trace).then(|| eig.vector(n - 1).scale(eig.values[n - 1].sqrt()))
}

/// Cutting-plane state that survives column additions.
struct CuttingPlane<'a> {
    rho: &'a CMatrix,
    points: Vec<ExtremePoint>,
    lp: CoverLp,
    cuts: Vec<CVector>,
    /// Smallest eigenvalue of a full-rank free operator of trace ≤ 1.
    filler: f64,
    iterations: usize,
    lp_log: Vec<f64>,
    /// ρ = |ψ⟩⟨ψ| when ρ has rank one; enables the design polish.
    pure_state: Option<CVector>,
    /// Weights of the design iteration, normalized to sum 1.
    design: Vec<f64>,
    /// Pure points as columns (zero columns for mixed points).
    atoms: CMatrix,
}

struct PrimalOutcome {
    upper: f64,
    lp_value: f64,
    termination: Termination,
    weights: Vec<f64>,
}

impl<'a> CuttingPlane<'a> {
    fn new(rho: &'a CMatrix, points: Vec<ExtremePoint>, filler: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("no free extreme points".into()));
        }
        for p in &points {
            if p.dim() != rho.nrows() {
                return Err(Error::ShapeMismatch("extreme point dimension".into()));
            }
            if p.trace() > 1.0 + 1e-9 {
                return Err(Error::InvalidState(format!("extreme point trace {}", p.trace())));
            }
        }
        let n = points.len();
        let mut cp = Self {
            rho,
            points,
            lp: CoverLp::with_columns(n),
            cuts: Vec::new(),
            filler,
            iterations: 0,
            lp_log: Vec::new(),
            pure_state: rank_one_factor(rho),
            design: Vec::new(),
            atoms: CMatrix::zeros(rho.nrows(), 0),
        };
        cp.sync_atoms();
        Ok(cp)
    }

    fn sync_atoms(&mut self) {
        let d = self.rho.nrows();
        let old = self.atoms.ncols();
        let n = self.points.len();
        if old == n {
            return;
        }
        let mut atoms = self.atoms.clone().resize_horizontally(n, C64::new(0.0, 0.0));
        for j in old..n {
            if let ExtremePoint::Pure(p) = &self.points[j] {
                atoms.set_column(j, p);
            }
        }
        debug_assert_eq!(atoms.nrows(), d);
        self.atoms = atoms;
    }

    fn add_points(&mut self, new: Vec<ExtremePoint>) {
        let cols: Vec<Vec<f64>> = new
            .iter()
            .map(|p| self.cuts.iter().map(|v| p.overlap(v)).collect())
            .collect();
        self.lp.add_columns(cols);
        self.points.extend(new);
        self.sync_atoms();
    }

    fn combination(&self, weights: &[f64]) -> CMatrix {
        let d = self.rho.nrows();
        let mut s = CMatrix::zeros(d, d);
        for (p, &w) in self.points.iter().zip(weights) {
            if w > 0.0 {
                p.add_to(w, &mut s);
            }
        }
        s
    }

    /// Valid upper bound from an LP iterate that may violate Σcσ ⪰ ρ.
    fn repaired_upper(&self, total: f64, s: &CMatrix, lambda_min: f64) -> f64 {
        let deficit = (-lambda_min).max(0.0);
        let best = total + deficit / self.filler;
        match self.pencil_bound(s) {
            Some(lam) => best.min(total * lam),
            None => best,
        }
    }

    /// λ_max(S^{-1/2} ρ S^{-1/2}), so that ρ ⪯ λ S; `None` when ρ leaks
    /// outside the numerical support of S.
    fn pencil_bound(&self, s: &CMatrix) -> Option<f64> {
        let eig = HermitianEigen::new(s);
        let top = eig.max();
        if !(top > 0.0) {
            return None;
        }
        let keep: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k] > 1e-12 * top).collect();
        let d = s.nrows();
        let mut k = CMatrix::zeros(d, keep.len());
        let mut captured = 0.0;
        for (col, &idx) in keep.iter().enumerate() {
            let v = eig.vector(idx);
            captured += linalg::expectation(self.rho, &v);
            k.set_column(col, &v.unscale(eig.values[idx].sqrt()));
        }
        if self.rho.trace().re - captured > 1e-13 {
            return None;
        }
        let pencil = k.adjoint() * self.rho * &k;
        Some(HermitianEigen::new(&pencil).max().max(0.0))
    }

    /// Σⱼ wⱼσⱼ.
    fn design_matrix(&self, weights: &[f64]) -> CMatrix {
        let d = self.rho.nrows();
        let top = weights.iter().cloned().fold(0.0, f64::max);
        // weights of inactive points decay geometrically; skip the negligible ones
        let active: Vec<usize> = (0..weights.len())
            .filter(|&j| weights[j] > 1e-16 * top && matches!(self.points[j], ExtremePoint::Pure(_)))
            .collect();
        let bt = CMatrix::from_fn(active.len(), d, |r, i| {
            let j = active[r];
            self.atoms[(i, j)].conj() * weights[j].sqrt()
        });
        let mut s = bt.ad_mul(&bt);
        for (p, &w) in self.points.iter().zip(weights) {
            if let ExtremePoint::Mixed(m) = p {
                s += m.scale(w);
            }
        }
        s
    }

    /// Multiplicative steps on min_w ⟨ψ|(Σⱼ wⱼσⱼ)⁻¹|ψ⟩ over the simplex, the
    /// rank-one form of the primal. Each step multiplies wⱼ by
    /// ⟨x|σⱼ|x⟩/⟨ψ|x⟩ with x = S⁻¹ψ, which keeps Σw = 1 and is stationary
    /// exactly at the optimality conditions. Returns a validated upper bound.
    fn polish(&mut self, steps: usize) -> Option<f64> {
        let psi = self.pure_state.clone()?;
        let n = self.points.len();
        if self.design.len() < n {
            self.design.resize(n, 1.0 / n as f64);
            let total: f64 = self.design.iter().sum();
            self.design.iter_mut().for_each(|w| *w /= total);
        }
        for _ in 0..steps {
            let s = self.design_matrix(&self.design);
            let x = s.cholesky()?.solve(&psi);
            let f = psi.dotc(&x).re;
            if !(f > 0.0) {
                return None;
            }
            let proj = self.atoms.ad_mul(&x);
            let mut total = 0.0;
            for (j, w) in self.design.iter_mut().enumerate() {
                let g = match &self.points[j] {
                    ExtremePoint::Pure(_) => proj[j].norm_sqr(),
                    ExtremePoint::Mixed(m) => linalg::expectation(m, &x),
                };
                *w *= g / f;
                total += *w;
            }
            if !(total > 0.0) {
                return None;
            }
            self.design.iter_mut().for_each(|w| *w /= total);
        }
        let s = self.design_matrix(&self.design);
        self.pencil_bound(&s)
    }

    fn run(&mut self, config: &SolverConfig) -> Result<PrimalOutcome> {
        let mut best_upper = f64::INFINITY;
        loop {
            let weights = self.lp.primal();
            let total: f64 = weights.iter().sum();
            let s = self.combination(&weights);
            let eig = HermitianEigen::new(&(&s - self.rho));
            let lambda_min = eig.min();
            best_upper = best_upper.min(self.repaired_upper(total, &s, lambda_min));
            if let Some(u) = self.polish(POLISH_STEPS) {
                best_upper = best_upper.min(u);
            }
            // the LP value lower-bounds the discretized program, so a
            // repaired upper this close to it cannot improve much further
            let closed = best_upper - total <= 0.5 * config.gap_tol * total;
            if lambda_min >= -config.cut_tol || closed {
                return Ok(PrimalOutcome {
                    upper: best_upper,
                    lp_value: total,
                    termination: Termination::Converged,
                    weights,
                });
            }
            if self.cuts.len() >= config.max_cuts {
                return Ok(PrimalOutcome {
                    upper: best_upper,
                    lp_value: total,
                    termination: Termination::IterationCap,
                    weights,
                });
            }
            let room = config.max_cuts - self.cuts.len();
            for k in 0..config.cuts_per_round.max(1).min(room) {
                if eig.values[k] >= -config.cut_tol {
                    break;
                }
                let v = eig.vector(k);
                let row: Vec<f64> = self.points.iter().map(|p| p.overlap(&v)).collect();
                let rhs = linalg::expectation(self.rho, &v);
                self.lp.add_row(&row, rhs);
                self.cuts.push(v);
            }
            self.iterations += 1;
            match self.lp.solve(100_000) {
                LpStatus::Optimal => {}
                LpStatus::Infeasible => return Err(Error::Infeasible),
                LpStatus::IterationLimit => {
                    return Ok(PrimalOutcome {
                        upper: best_upper,
                        lp_value: self.lp.objective(),
                        termination: Termination::IterationCap,
                        weights: self.lp.primal(),
                    })
                }
            }
            self.lp_log.push(self.lp.objective());
        }
    }

    fn witness_operator(&self) -> CMatrix {
        let d = self.rho.nrows();
        let mut w = CMatrix::zeros(d, d);
        for (v, &y) in self.cuts.iter().zip(&self.lp.duals()) {
            if y > 0.0 {
                w += linalg::projector(v).scale(y);
            }
        }
        w
    }

    /// Largest Tr[Wσⱼ] over the current points.
    fn discrete_free_value(&self, w: &CMatrix) -> FreeValueResult {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (j, p) in self.points.iter().enumerate() {
            let v = match p {
                ExtremePoint::Pure(p) => linalg::expectation(w, p),
                ExtremePoint::Mixed(m) => linalg::trace_product(w, m).re,
            };
            if v > best.1 {
                best = (j, v);
            }
        }
        FreeValueResult {
            value: best.1.max(0.0),
            maximizer: Maximizer::BasisIndex { index: best.0 },
            certification: Certification::Discretized,
        }
    }
}

/// min Σⱼ cⱼ subject to Σⱼ cⱼσⱼ ⪰ ρ over the given extreme points.
///
/// The witness in the report carries the free value over the extreme points
/// only; [`dual_lower`] re-evaluates it over a full model.
pub fn primal_upper(
    rho: &DensityOperator,
    extreme_points: Vec<ExtremePoint>,
    config: &SolverConfig,
) -> Result<SolverReport> {
    config.validate()?;
    let dim = rho.dim();
    let n = extreme_points.len();
    // without a model, the full-rank filler is the uniform mixture of the points
    let filler = filler_from_points(&extreme_points, dim);
    let mut cp = CuttingPlane::new(rho.matrix(), extreme_points, filler)?;
    let out = cp.run(config)?;
    let w = cp.witness_operator();
    let fv = cp.discrete_free_value(&w);
    let bounds = RobustnessBounds::new(1.0, Method::Trivial, out.upper.max(1.0), Method::CuttingPlane);
    Ok(SolverReport {
        bounds,
        iterations: cp.iterations,
        cuts: cp.cuts.len(),
        refinements: 0,
        witness: Witness {
            operator: w,
            free_value: fv,
            rescaled: false,
        },
        termination: out.termination,
        lp_value: out.lp_value,
        discretization: n,
        tail_weight: rho.tail_weight(),
        cut_log: config
            .emit_cuts
            .then(|| cp.cuts.iter().map(crate::free_sets::from_cvector).collect()),
        notes: Vec::new(),
    })
}

/// Smallest eigenvalue of the uniform mixture of the points.
fn filler_from_points(points: &[ExtremePoint], dim: usize) -> f64 {
    let mut s = CMatrix::zeros(dim, dim);
    for p in points {
        p.add_to(1.0 / points.len() as f64, &mut s);
    }
    let m = linalg::min_eigenvalue(&s);
    if m > 1e-14 {
        m
    } else {
        // rank deficient: the deficit repair is unavailable
        f64::MIN_POSITIVE
    }
}

/// Tr[Wρ]/sup_{σ∈F} Tr[Wσ] with the supremum over the full model.
pub fn dual_lower(rho: &DensityOperator, model: &FreeSetModel, candidate: &Witness) -> Result<RobustnessBounds> {
    let w = Witness::evaluate(candidate.operator.clone(), model)?;
    Ok(witness_bounds(rho, &w))
}

fn witness_bounds(rho: &DensityOperator, w: &Witness) -> RobustnessBounds {
    let lower = if w.free_value.value > 0.0 {
        w.lower_bound(rho.matrix())
    } else {
        1.0
    };
    let mut b = RobustnessBounds::new(lower, Method::Witness, f64::INFINITY, Method::Trivial);
    b.certified = w.is_certified();
    b
}

/// The extreme points used to discretize a model.
pub fn discretize(model: &FreeSetModel, dim: usize, config: &SolverConfig) -> Result<Vec<ExtremePoint>> {
    Ok(match &model.kind {
        FreeSetKind::Incoherent => (0..dim)
            .map(|n| {
                let mut v = CVector::zeros(dim);
                v[n] = C64::new(1.0, 0.0);
                ExtremePoint::Pure(v)
            })
            .collect(),
        FreeSetKind::Classical { grid } => {
            grid.validate()?;
            grid.points()
                .into_iter()
                .map(|a| ExtremePoint::Pure(coherent_amplitudes(a, dim)))
                .collect()
        }
        FreeSetKind::Separable { dims } => {
            if dims.0 * dims.1 != dim {
                return Err(Error::ShapeMismatch(format!("dims {dims:?} for {dim} levels")));
            }
            product_points(*dims, config.product_points, config.seed)
                .into_iter()
                .map(ExtremePoint::Pure)
                .collect()
        }
    })
}

fn maximizer_point(fv: &FreeValueResult, dim: usize) -> Option<ExtremePoint> {
    match &fv.maximizer {
        Maximizer::Coherent { re, im } => Some(ExtremePoint::Pure(coherent_amplitudes(C64::new(*re, *im), dim))),
        Maximizer::Product { left, right } => Some(ExtremePoint::Pure(linalg::kron_vec(
            &to_cvector(left),
            &to_cvector(right),
        ))),
        Maximizer::BasisIndex { .. } => None,
    }
}

/// Primal cutting planes plus dual witness, refined until the gap closes.
/// Free value of a dual witness. Sharp LP witnesses can peak between grid
/// points; when the grid guard fires the evaluation is repeated on grids with
/// half the radial step and twice the angles before giving up.
fn evaluate_with_finer_grids(
    op: CMatrix,
    model: &FreeSetModel,
    notes: &mut Vec<String>,
    round: usize,
) -> Result<Witness> {
    let mut result = Witness::evaluate(op.clone(), model);
    if let FreeSetKind::Classical { grid } = &model.kind {
        let mut grid = grid.clone();
        grid.extra_points.clear();
        for _ in 0..FINER_GRID_RETRIES {
            let Err(Error::GridTooCoarse { moved, cell }) = result else {
                break;
            };
            grid.radial_step /= 2.0;
            grid.angular_count *= 2;
            notes.push(format!(
                "round {round}: maximizer moved {moved:.3} > cell {cell:.3}; retrying with step {} and {} angles",
                grid.radial_step, grid.angular_count
            ));
            result = Witness::evaluate(op.clone(), &FreeSetModel::classical(grid.clone()));
        }
    }
    result
}

const FINER_GRID_RETRIES: usize = 2;

pub fn sandwich(rho: &DensityOperator, model: &FreeSetModel, config: &SolverConfig) -> Result<SolverReport> {
    config.validate()?;
    let dim = rho.dim();
    if let FreeSetKind::Separable { dims } = model.kind {
        if rho.dims() != [dims.0, dims.1] && dims.0 * dims.1 != dim {
            return Err(Error::ShapeMismatch(format!("dims {dims:?} for {dim} levels")));
        }
    }
    let mut points = discretize(model, dim, config)?;
    let mut grid = match &model.kind {
        FreeSetKind::Classical { grid } => Some(grid.clone()),
        _ => None,
    };
    // coherent amplitude of each point, used to refine around active ones
    let mut labels: Vec<Option<C64>> = match &grid {
        Some(g) => g.points().into_iter().map(Some).collect(),
        None => vec![None; points.len()],
    };
    let (filler_state, filler) = model.full_rank_free_state(dim);
    // the full-rank free state covers directions the discretization reaches poorly
    points.push(ExtremePoint::Mixed(filler_state));
    labels.push(None);
    let mut cp = CuttingPlane::new(rho.matrix(), points, filler)?;
    let mut bounds = RobustnessBounds::unbounded();
    let mut best_witness: Option<Witness> = None;
    let mut notes = Vec::new();
    let mut termination = Termination::IterationCap;
    let mut lp_value = 0.0;
    let mut refinements = 0;
    for round in 0..=config.max_refinements {
        let out = cp.run(config)?;
        lp_value = out.lp_value;
        bounds.tighten(&RobustnessBounds::new(
            1.0,
            Method::Trivial,
            out.upper.max(1.0),
            Method::CuttingPlane,
        ));
        let op = cp.witness_operator();
        let mut new_points = Vec::new();
        match evaluate_with_finer_grids(op, model, &mut notes, round) {
            Ok(w) => {
                let wb = witness_bounds(rho, &w);
                if best_witness.is_none() || wb.lower > bounds.lower {
                    best_witness = Some(w.clone());
                }
                bounds.tighten(&wb);
                if let Some(p) = maximizer_point(&w.free_value, dim) {
                    let label = match w.free_value.maximizer {
                        Maximizer::Coherent { re, im } => Some(C64::new(re, im)),
                        _ => None,
                    };
                    new_points.push((p, label));
                }
            }
            Err(Error::GridTooCoarse { moved, cell }) => {
                notes.push(format!(
                    "round {round}: witness free value skipped, maximizer moved {moved:.3} > cell {cell:.3}"
                ));
            }
            Err(Error::ZeroWitness) => {}
            Err(e) => return Err(e),
        }
        if bounds.gap <= config.gap_tol * bounds.lower {
            termination = Termination::Converged;
            break;
        }
        if round == config.max_refinements || out.termination == Termination::IterationCap {
            break;
        }
        if let Some(g) = grid.as_mut() {
            let before = g.extra_points.len();
            let active: Vec<C64> = labels
                .iter()
                .zip(&out.weights)
                .filter(|(_, &c)| c > 1e-8)
                .filter_map(|(a, _)| *a)
                .collect();
            g.refine_around(&active, round as u32 + 1);
            new_points.extend(g.extra_points[before..].iter().map(|&(x, y)| {
                let a = C64::new(x, y);
                (ExtremePoint::Pure(coherent_amplitudes(a, dim)), Some(a))
            }));
        }
        if new_points.is_empty() {
            break;
        }
        let (pts, labs): (Vec<_>, Vec<_>) = new_points.into_iter().unzip();
        labels.extend(labs);
        cp.add_points(pts);
        refinements += 1;
    }
    if bounds.lower > bounds.upper + 1e-8 {
        bounds.certified = false;
        notes.push(format!(
            "witness lower {} exceeds primal upper {}: free value underestimated",
            bounds.lower, bounds.upper
        ));
    }
    let witness = match best_witness {
        Some(w) => w.rescale().unwrap_or(w),
        None => Witness::evaluate(CMatrix::identity(dim, dim), model)?,
    };
    Ok(SolverReport {
        bounds,
        iterations: cp.iterations,
        cuts: cp.cuts.len(),
        refinements,
        witness,
        termination,
        lp_value,
        discretization: cp.points.len(),
        tail_weight: rho.tail_weight(),
        cut_log: config
            .emit_cuts
            .then(|| cp.cuts.iter().map(crate::free_sets::from_cvector).collect()),
        notes,
    })
}

/// Accepts t when t·σ − ρ ⪰ −1e-9.
pub fn feasible_point_upper(rho: &DensityOperator, sigma: &DensityOperator, t: f64) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::ShapeMismatch("rho and sigma dimensions differ".into()));
    }
    check_gap(&(sigma.matrix().scale(t) - rho.matrix()), t)
}

/// Same check for states supported on span{|nn⟩}; only the coefficient
/// blocks are compared since t·σ − ρ vanishes off that subspace.
pub fn feasible_point_upper_correlated(rho: &CorrelatedState, sigma: &CorrelatedState, t: f64) -> Result<f64> {
    if rho.local_dim() != sigma.local_dim() {
        return Err(Error::ShapeMismatch("local dimensions differ".into()));
    }
    check_gap(&(sigma.coefficients().scale(t) - rho.coefficients()), t)
}

fn check_gap(gap: &CMatrix, t: f64) -> Result<f64> {
    // t = 1 computed as a sum of squares may round just below one
    if !(t >= 1.0 - 1e-12) {
        return Err(Error::InvalidParameter(format!("t = {t} < 1")));
    }
    let min = linalg::min_eigenvalue(gap);
    if min < -1e-9 {
        return Err(Error::Rejected(min));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{make_state, StateSpec};
    use crate::free_sets::CoherentGrid;
    use std::f64::consts::E;

    fn incoherent_report(rho: &DensityOperator) -> SolverReport {
        sandwich(rho, &FreeSetModel::incoherent(), &SolverConfig::default()).unwrap()
    }

    #[test]
    fn diagonal_state_is_free() {
        let rho = crate::fock::make_state_with_cap(&StateSpec::Thermal { nbar: 0.5 }, 6, 1.0)
            .unwrap()
            .density();
        let r = incoherent_report(&rho);
        assert!((r.bounds.upper - 1.0).abs() < 1e-9);
        assert!((r.bounds.lower - 1.0).abs() < 1e-9);
    }

    #[test]
    fn plus_state_coherence() {
        // oracle: min over σ = diag(q, 1−q) of λ_max(σ^{-1/2}ρσ^{-1/2}) = 1/(2q) + 1/(2(1−q)) at q = ½
        let mut best = f64::INFINITY;
        for k in 1..10_000 {
            let q = k as f64 / 10_000.0;
            best = best.min(0.5 / q + 0.5 / (1.0 - q));
        }
        let v = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).normalize();
        let rho = DensityOperator::single(linalg::projector(&v)).unwrap();
        let r = incoherent_report(&rho);
        assert!((r.bounds.upper - 2.0).abs() < 1e-6);
        assert!((r.bounds.lower - 2.0).abs() < 1e-6);
        assert!((best - 2.0).abs() < 1e-6);
    }

    #[test]
    fn primal_on_fock_one() {
        let rho = make_state(&StateSpec::Fock { n: 1 }, 40).unwrap().density();
        let grid = CoherentGrid::new(5.0, 0.1, 64).unwrap();
        let pts = discretize(&FreeSetModel::classical(grid), 40, &SolverConfig::default()).unwrap();
        let r = primal_upper(&rho, pts, &SolverConfig::default()).unwrap();
        assert!(
            r.bounds.upper >= E - 1e-9 && r.bounds.upper <= E + 0.05,
            "{}",
            r.bounds.upper
        );
    }

    #[test]
    fn sharp_witness_is_evaluated_on_finer_grid() {
        // at this gap the dual witness peaks between points of the default grid
        let rho = make_state(&StateSpec::CatPlus { alpha: 1.0 }, 40).unwrap().density();
        let model = FreeSetModel::classical(CoherentGrid::new(6.0, 0.1, 64).unwrap());
        let r = sandwich(&rho, &model, &SolverConfig::default()).unwrap();
        let exact = 2.0 / (1.0 + (-2.0f64).exp());
        assert_eq!(r.bounds.lower_method, Method::Witness, "{:?}", r.notes);
        assert!(r.bounds.lower <= exact * (1.0 + 1e-9) && r.bounds.lower > 0.99 * exact);
        assert!(r.notes.iter().any(|n| n.contains("retrying")));
    }

    #[test]
    fn design_polish_on_fock_two() {
        let dim = 30;
        let rho = make_state(&StateSpec::Fock { n: 2 }, dim).unwrap().density();
        let model = FreeSetModel::classical(CoherentGrid::new(5.0, 0.2, 32).unwrap());
        let mut pts = discretize(&model, dim, &SolverConfig::default()).unwrap();
        let (thermal, filler) = model.full_rank_free_state(dim);
        pts.push(ExtremePoint::Mixed(thermal));
        let mut cp = CuttingPlane::new(rho.matrix(), pts, filler).unwrap();
        assert!(cp.pure_state.is_some());
        let upper = cp.polish(400).unwrap();
        let exact = E * E / 2.0;
        assert!((upper - exact).abs() < 0.02 * exact, "{upper}");
        // the bound is certified by the weights it came from
        let s = cp.design_matrix(&cp.design).scale(upper * (1.0 + 1e-9));
        assert!(linalg::min_eigenvalue(&(s - rho.matrix())) >= -1e-9);
    }

    #[test]
    fn mixed_state_has_no_rank_one_factor() {
        let rho = make_state(&StateSpec::Thermal { nbar: 0.5 }, 30).unwrap().density();
        assert!(rank_one_factor(rho.matrix()).is_none());
        let psi = make_state(&StateSpec::Fock { n: 3 }, 12).unwrap().density();
        let v = rank_one_factor(psi.matrix()).unwrap();
        assert!((v[3].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_when_points_miss_support() {
        let rho = make_state(&StateSpec::Fock { n: 1 }, 4).unwrap().density();
        let mut v = CVector::zeros(4);
        v[0] = C64::new(1.0, 0.0);
        let err = primal_upper(&rho, vec![ExtremePoint::Pure(v)], &SolverConfig::default());
        assert!(matches!(err, Err(Error::Infeasible)));
    }

    #[test]
    fn identity_witness_floor() {
        let rho = make_state(&StateSpec::Fock { n: 2 }, 10).unwrap().density();
        let w = Witness::evaluate(CMatrix::identity(10, 10), &FreeSetModel::incoherent()).unwrap();
        let b = dual_lower(&rho, &FreeSetModel::incoherent(), &w).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bell_witness() {
        let v = CVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ]);
        let rho = crate::fock::FockVector::new(vec![2, 2], v.normalize(), 0.0)
            .unwrap()
            .to_density();
        let model = FreeSetModel::separable((2, 2));
        let w = Witness::evaluate(linalg::projector(&v), &model).unwrap();
        assert_eq!(w.free_value.certification, Certification::Analytic);
        let b = dual_lower(&rho, &model, &w).unwrap();
        assert!((b.lower - 2.0).abs() < 1e-12);
        assert!(b.certified);
    }

    #[test]
    fn feasible_point_examples() {
        let rho = make_state(&StateSpec::Fock { n: 1 }, 4).unwrap().density();
        let vac = make_state(&StateSpec::Fock { n: 0 }, 4).unwrap().density();
        assert!(matches!(feasible_point_upper(&rho, &vac, 5.0), Err(Error::Rejected(_))));
        assert_eq!(feasible_point_upper(&rho, &rho, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn gallery_feasible_points() {
        let g = crate::fock::hilbert_gallery(50).unwrap();
        let avg = g.separable_average();
        for rho in [&g.rho_plus, &g.rho_minus] {
            assert_eq!(feasible_point_upper_correlated(rho, &avg, 2.0).unwrap(), 2.0);
        }
        let diag = avg.coefficients().clone();
        let sigma = DensityOperator::new(vec![50], diag, 0.0).unwrap();
        for om in [&g.omega_plus, &g.omega_minus] {
            assert_eq!(feasible_point_upper(om, &sigma, 2.0).unwrap(), 2.0);
        }
        // dense check at a small truncation
        let g = crate::fock::hilbert_gallery(6).unwrap();
        let dense_sigma = g.separable_average().to_density().unwrap();
        let dense_rho = g.rho_plus.to_density().unwrap();
        assert!(feasible_point_upper(&dense_rho, &dense_sigma, 2.0).is_ok());
    }

    #[test]
    fn monotone_lp_objective() {
        let rho = make_state(&StateSpec::Squeezed { r: 0.3 }, 20).unwrap().density();
        let grid = CoherentGrid::new(4.0, 0.2, 32).unwrap();
        let model = FreeSetModel::classical(grid);
        let pts = discretize(&model, 20, &SolverConfig::default()).unwrap();
        let (_, filler) = model.full_rank_free_state(20);
        let mut cp = CuttingPlane::new(rho.matrix(), pts, filler).unwrap();
        let config = SolverConfig {
            gap_tol: 0.0,
            cut_tol: 1e-7,
            ..Default::default()
        };
        let out = cp.run(&config).unwrap();
        assert_eq!(out.termination, Termination::Converged);
        for w in cp.lp_log.windows(2) {
            // monotone in the perturbed costs; the plain sum may dip by their spread
            assert!(w[1] >= w[0] * (1.0 - 2e-7), "{} < {}", w[1], w[0]);
        }
        let s = cp.combination(&out.weights);
        assert!(linalg::min_eigenvalue(&(s - rho.matrix())) >= -1e-7);
    }
}
