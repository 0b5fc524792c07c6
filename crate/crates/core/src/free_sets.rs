//! Free sets and their free-value oracles sup_{σ∈F} Tr[Wσ].
//!
//! - classical: coherent states |α⟩, searched on a polar grid and refined by
//!   gradient ascent on Q_W(α) = ⟨α|W|α⟩;
//! - incoherent: Fock projectors, exact (largest diagonal entry);
//! - separable: product vectors, exact for rank-one W and a multi-start
//!   alternating eigen-iteration otherwise.
//!
//! Coherent vectors are cropped to the truncation without renormalization, so
//! ⟨α|W|α⟩ is the exact expectation of W (which vanishes outside the
//! truncation) in the untruncated coherent state.

use crate::error::{Error, Result};
use crate::fock::{coherent_amplitudes, DensityOperator, SchmidtDecomposition};
use crate::linalg::{self, CMatrix, CVector, HermitianEigen, C64, ZERO};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Settings of the local ascent that refines grid maxima.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AscentSettings {
    pub starts: usize,
    pub initial_step: f64,
    pub max_iters: usize,
    pub tolerance: f64,
}

impl Default for AscentSettings {
    fn default() -> Self {
        Self {
            starts: 16,
            initial_step: 0.05,
            max_iters: 2000,
            tolerance: 1e-13,
        }
    }
}

/// Polar discretization of the disk |α| ≤ radius, plus optional extra points
/// added by local refinement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentGrid {
    pub radius: f64,
    pub radial_step: f64,
    pub angular_count: usize,
    #[serde(default)]
    pub refinement: AscentSettings,
    #[serde(default)]
    pub extra_points: Vec<(f64, f64)>,
}

impl CoherentGrid {
    pub fn new(radius: f64, radial_step: f64, angular_count: usize) -> Result<Self> {
        let grid = Self {
            radius,
            radial_step,
            angular_count,
            refinement: AscentSettings::default(),
            extra_points: Vec::new(),
        };
        grid.validate()?;
        Ok(grid)
    }

    /// radius = max(4, 2√n_max + 2) where n_max is the highest Fock level W touches;
    /// 64 angles, radial step 0.1.
    pub fn default_for(w: &CMatrix) -> Self {
        let n_max = support_top(w) as f64;
        Self {
            radius: (2.0 * n_max.sqrt() + 2.0).max(4.0),
            radial_step: 0.1,
            angular_count: 64,
            refinement: AscentSettings::default(),
            extra_points: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !(self.radial_step > 0.0) || self.angular_count == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid radius {} step {} angles {}",
                self.radius, self.radial_step, self.angular_count
            )));
        }
        Ok(())
    }

    pub fn rings(&self) -> usize {
        (self.radius / self.radial_step + 1e-9).floor() as usize
    }

    /// Origin first, then ring by ring (angle-major within a ring), then extras.
    pub fn points(&self) -> Vec<C64> {
        let mut pts = vec![ZERO];
        for i in 1..=self.rings() {
            let r = i as f64 * self.radial_step;
            for k in 0..self.angular_count {
                let theta = 2.0 * PI * k as f64 / self.angular_count as f64;
                pts.push(C64::from_polar(r, theta));
            }
        }
        pts.extend(self.extra_points.iter().map(|&(x, y)| C64::new(x, y)));
        pts
    }

    pub fn point_count(&self) -> usize {
        1 + self.rings() * self.angular_count + self.extra_points.len()
    }

    /// Diagonal of one grid cell at modulus `r`.
    pub fn cell_size(&self, r: f64) -> f64 {
        let arc = r.max(self.radial_step) * 2.0 * PI / self.angular_count as f64;
        self.radial_step.hypot(arc)
    }

    /// Adds the neighbours of `active` at half the radial step and half the angular step.
    pub fn refine_around(&mut self, active: &[C64], depth: u32) {
        let scale = 0.5f64.powi(depth as i32);
        let dr = self.radial_step * scale;
        let dth = PI / self.angular_count as f64 * scale * 2.0;
        for a in active {
            let (r, th) = (a.norm(), a.arg());
            for (sr, st) in [
                (-1.0, 0.0),
                (1.0, 0.0),
                (0.0, -1.0),
                (0.0, 1.0),
                (-1.0, -1.0),
                (-1.0, 1.0),
                (1.0, -1.0),
                (1.0, 1.0),
            ] {
                let rr = r + sr * dr;
                if rr < 0.0 {
                    continue;
                }
                let p = C64::from_polar(rr, th + st * dth);
                self.push_extra(p);
            }
        }
    }

    pub fn push_extra(&mut self, p: C64) {
        let dup = self
            .extra_points
            .iter()
            .any(|&(x, y)| (C64::new(x, y) - p).norm() < 1e-12);
        if !dup {
            self.extra_points.push((p.re, p.im));
        }
    }
}

pub(crate) fn support_top(w: &CMatrix) -> usize {
    let scale = w.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut top = 0;
    for i in 0..w.nrows() {
        for j in 0..w.ncols() {
            if w[(i, j)].norm() > 1e-12 * scale {
                top = top.max(i).max(j);
            }
        }
    }
    top
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FreeSetKind {
    Classical { grid: CoherentGrid },
    Incoherent,
    Separable { dims: (usize, usize) },
}

/// The free set without its numerical model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeSetTag {
    Classical,
    Incoherent,
    Separable,
}

impl FreeSetTag {
    pub fn name(self) -> &'static str {
        match self {
            FreeSetTag::Classical => "classical",
            FreeSetTag::Incoherent => "incoherent",
            FreeSetTag::Separable => "separable",
        }
    }
}

impl std::str::FromStr for FreeSetTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "classical" | "nonclassicality" => Ok(FreeSetTag::Classical),
            "incoherent" | "coherence" => Ok(FreeSetTag::Incoherent),
            "separable" | "entanglement" => Ok(FreeSetTag::Separable),
            other => Err(Error::InvalidParameter(format!("unknown free set {other:?}"))),
        }
    }
}

/// Serialized as `{"kind": ..., "grid"?: ..., "dims"?: ..., "tolerance": ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeSetModel {
    #[serde(flatten)]
    pub kind: FreeSetKind,
    pub tolerance: f64,
}

impl FreeSetModel {
    pub fn classical(grid: CoherentGrid) -> Self {
        Self {
            kind: FreeSetKind::Classical { grid },
            tolerance: 1e-9,
        }
    }

    pub fn incoherent() -> Self {
        Self {
            kind: FreeSetKind::Incoherent,
            tolerance: 1e-9,
        }
    }

    pub fn separable(dims: (usize, usize)) -> Self {
        Self {
            kind: FreeSetKind::Separable { dims },
            tolerance: 1e-9,
        }
    }

    pub fn tag(&self) -> FreeSetTag {
        match self.kind {
            FreeSetKind::Classical { .. } => FreeSetTag::Classical,
            FreeSetKind::Incoherent => FreeSetTag::Incoherent,
            FreeSetKind::Separable { .. } => FreeSetTag::Separable,
        }
    }

    pub fn name(&self) -> &'static str {
        self.tag().name()
    }

    /// A full-rank free operator (trace ≤ 1) used to repair near-feasible
    /// primal points, with its smallest eigenvalue.
    pub fn full_rank_free_state(&self, dim: usize) -> (CMatrix, f64) {
        match self.kind {
            FreeSetKind::Classical { .. } => {
                // thermal state with n̄ = dim − 1 maximizes the smallest retained weight
                let nbar = (dim - 1).max(1) as f64;
                let ratio = nbar / (nbar + 1.0);
                let diag: Vec<f64> = (0..dim).map(|n| ratio.powi(n as i32) / (nbar + 1.0)).collect();
                let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
                (diag_matrix(&diag), min)
            }
            FreeSetKind::Incoherent | FreeSetKind::Separable { .. } => {
                let p = 1.0 / dim as f64;
                (CMatrix::identity(dim, dim).scale(p), p)
            }
        }
    }
}

fn diag_matrix(diag: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        diag.len(),
        diag.iter().map(|&p| C64::new(p, 0.0)),
    ))
}

/// Which free state attains the reported value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Maximizer {
    Coherent {
        re: f64,
        im: f64,
    },
    BasisIndex {
        index: usize,
    },
    Product {
        left: Vec<(f64, f64)>,
        right: Vec<(f64, f64)>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certification {
    /// Exact maximum (incoherent diagonal).
    Exact,
    /// Exact by a closed-form argument (rank-one separable witness).
    Analytic,
    /// Grid maximum refined by local ascent.
    GridRefined,
    /// Heuristic; may under-estimate the supremum.
    Heuristic,
    /// Maximum over a finite point set only.
    Discretized,
}

impl Certification {
    pub fn is_certified(self) -> bool {
        !matches!(self, Certification::Heuristic | Certification::Discretized)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeValueResult {
    pub value: f64,
    pub maximizer: Maximizer,
    pub certification: Certification,
}

impl FreeValueResult {
    /// Re-evaluates ⟨σ*|W|σ*⟩ at the reported maximizer.
    pub fn evaluate_maximizer(&self, w: &CMatrix) -> f64 {
        match &self.maximizer {
            Maximizer::Coherent { re, im } => {
                let c = coherent_amplitudes(C64::new(*re, *im), w.nrows());
                linalg::expectation(w, &c)
            }
            Maximizer::BasisIndex { index } => w[(*index, *index)].re,
            Maximizer::Product { left, right } => {
                let l = to_cvector(left);
                let r = to_cvector(right);
                linalg::expectation(w, &linalg::kron_vec(&l, &r))
            }
        }
    }
}

pub(crate) fn to_cvector(v: &[(f64, f64)]) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(|&(a, b)| C64::new(a, b)))
}

pub(crate) fn from_cvector(v: &CVector) -> Vec<(f64, f64)> {
    v.iter().map(|z| (z.re, z.im)).collect()
}

/// sup_{σ∈F} Tr[Wσ] for a positive semidefinite W.
pub fn free_value(w: &CMatrix, model: &FreeSetModel) -> Result<FreeValueResult> {
    check_psd(w)?;
    match &model.kind {
        FreeSetKind::Incoherent => Ok(incoherent_value(w)),
        FreeSetKind::Classical { grid } => classical_value(w, grid),
        FreeSetKind::Separable { dims } => separable_value(w, *dims),
    }
}

pub(crate) fn check_psd(w: &CMatrix) -> Result<()> {
    if w.nrows() != w.ncols() {
        return Err(Error::ShapeMismatch("witness must be square".into()));
    }
    let herm = linalg::hermiticity_error(w);
    if herm > 1e-9 {
        return Err(Error::InvalidState(format!("observable not Hermitian ({herm:e})")));
    }
    let min = linalg::min_eigenvalue(w);
    let scale = w.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if min < -1e-9 * scale {
        return Err(Error::NotPsd(min));
    }
    Ok(())
}

fn incoherent_value(w: &CMatrix) -> FreeValueResult {
    let mut best = (0usize, f64::NEG_INFINITY);
    for n in 0..w.nrows() {
        let v = w[(n, n)].re;
        if v > best.1 {
            best = (n, v);
        }
    }
    FreeValueResult {
        value: best.1.max(0.0),
        maximizer: Maximizer::BasisIndex { index: best.0 },
        certification: Certification::Exact,
    }
}

/// Q_W(α) and its gradient in (Re α, Im α).
///
/// ∂Q/∂α* = ⟨a†c|Wc⟩ − αQ for the cropped coherent vector c, so
/// ∂Q/∂x = 2 Re(∂Q/∂α*) and ∂Q/∂y = 2 Im(∂Q/∂α*).
pub fn husimi_with_gradient(w: &CMatrix, alpha: C64) -> (f64, f64, f64) {
    let dim = w.nrows();
    let c = coherent_amplitudes(alpha, dim);
    let wc = w * &c;
    let q = c.dotc(&wc).re;
    let mut acc = ZERO;
    for m in 1..dim {
        acc += (c[m - 1] * (m as f64).sqrt()).conj() * wc[m];
    }
    let z = acc - alpha * q;
    (q, 2.0 * z.re, 2.0 * z.im)
}

pub fn husimi(w: &CMatrix, alpha: C64) -> f64 {
    linalg::expectation(w, &coherent_amplitudes(alpha, w.nrows()))
}

struct Ascent {
    start_rank: usize,
    start: C64,
    end: C64,
    value: f64,
}

fn ascend(w: &CMatrix, start: C64, settings: &AscentSettings) -> (C64, f64) {
    let (mut q, mut gx, mut gy) = husimi_with_gradient(w, start);
    let mut alpha = start;
    let mut step = settings.initial_step;
    for _ in 0..settings.max_iters {
        let g = gx.hypot(gy);
        if g <= settings.tolerance * q.abs() || step < 1e-14 {
            break;
        }
        let dir = C64::new(gx / g, gy / g);
        let trial = alpha + dir * step;
        let (tq, tgx, tgy) = husimi_with_gradient(w, trial);
        if tq >= q + 1e-4 * step * g {
            alpha = trial;
            q = tq;
            gx = tgx;
            gy = tgy;
            step = (step * 2.0).min(1.0);
        } else {
            step *= 0.5;
        }
    }
    (alpha, q)
}

fn classical_value(w: &CMatrix, grid: &CoherentGrid) -> Result<FreeValueResult> {
    grid.validate()?;
    let points = grid.points();
    let values: Vec<f64> = points.par_iter().map(|&a| husimi(w, a)).collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let starts: Vec<(usize, C64)> = order
        .iter()
        .take(grid.refinement.starts.max(1))
        .enumerate()
        .map(|(rank, &i)| (rank, points[i]))
        .collect();
    let ascents: Vec<Ascent> = starts
        .par_iter()
        .map(|&(rank, p)| {
            let (end, value) = ascend(w, p, &grid.refinement);
            Ascent {
                start_rank: rank,
                start: p,
                end,
                value,
            }
        })
        .collect();
    let grid_best = values[order[0]];
    let best = ascents
        .iter()
        .max_by(|a, b| {
            a.value
                .partial_cmp(&b.value)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(b.start_rank.cmp(&a.start_rank))
        })
        .expect("at least one start");
    let moved = (best.end - best.start).norm();
    let cell = grid.cell_size(best.start.norm());
    if moved > cell && best.value - grid_best > 1e-3 * best.value.abs() {
        return Err(Error::GridTooCoarse { moved, cell });
    }
    let (alpha, value) = if best.value >= grid_best {
        (best.end, best.value)
    } else {
        (points[order[0]], grid_best)
    };
    Ok(FreeValueResult {
        value: value.max(0.0),
        maximizer: Maximizer::Coherent {
            re: alpha.re,
            im: alpha.im,
        },
        certification: Certification::GridRefined,
    })
}

fn separable_value(w: &CMatrix, (da, db): (usize, usize)) -> Result<FreeValueResult> {
    if da * db != w.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} observable for dims ({da}, {db})",
            w.nrows(),
            w.ncols()
        )));
    }
    let eig = HermitianEigen::new(w);
    let n = w.nrows();
    let top = eig.max();
    if top <= 0.0 {
        return Ok(FreeValueResult {
            value: 0.0,
            maximizer: Maximizer::Product {
                left: from_cvector(&basis(da, 0)),
                right: from_cvector(&basis(db, 0)),
            },
            certification: Certification::Exact,
        });
    }
    let second = if n > 1 { eig.values[n - 2] } else { 0.0 };
    if second.abs() <= 1e-12 * top {
        // rank one: sup |⟨e⊗f|v⟩|² is the largest squared Schmidt coefficient of v
        let v = eig.vector(n - 1);
        let s = crate::fock::schmidt_of_amplitudes(&v, (da, db))?;
        let mu = s.coefficients[0];
        return Ok(FreeValueResult {
            value: top * mu * mu,
            maximizer: Maximizer::Product {
                left: from_cvector(&s.left[0]),
                right: from_cvector(&s.right[0]),
            },
            certification: Certification::Analytic,
        });
    }
    let mut starts: Vec<CVector> = Vec::new();
    let lead = crate::fock::schmidt_of_amplitudes(&eig.vector(n - 1), (da, db))?;
    starts.push(lead.right[0].clone());
    let mut diag_order: Vec<usize> = (0..n).collect();
    diag_order.sort_by(|&a, &b| {
        w[(b, b)]
            .re
            .partial_cmp(&w[(a, a)].re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    for &i in diag_order.iter().take(3) {
        starts.push(basis(db, i % db));
    }
    let mut rng = crate::random::rng(0x5e9a_7ab1e, 0);
    for _ in 0..8 {
        starts.push(crate::random::unit_vector(&mut rng, db));
    }
    let mut best: Option<(f64, CVector, CVector)> = None;
    for f0 in starts {
        let (val, e, f) = alternate(w, (da, db), f0);
        if best.as_ref().is_none_or(|b| val > b.0) {
            best = Some((val, e, f));
        }
    }
    let (value, e, f) = best.expect("starts nonempty");
    Ok(FreeValueResult {
        value: value.max(0.0),
        maximizer: Maximizer::Product {
            left: from_cvector(&e),
            right: from_cvector(&f),
        },
        certification: Certification::Heuristic,
    })
}

fn basis(d: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[i] = C64::new(1.0, 0.0);
    v
}

/// Alternating maximization of ⟨e⊗f|W|e⊗f⟩ over unit e, f.
fn alternate(w: &CMatrix, (da, db): (usize, usize), mut f: CVector) -> (f64, CVector, CVector) {
    let mut e = CVector::zeros(da);
    let mut last = f64::NEG_INFINITY;
    for _ in 0..500 {
        // W_f = (𝟙 ⊗ ⟨f|) W (𝟙 ⊗ |f⟩)
        let wf = CMatrix::from_fn(da, da, |i, k| {
            let mut acc = ZERO;
            for j in 0..db {
                for l in 0..db {
                    acc += f[j].conj() * w[(i * db + j, k * db + l)] * f[l];
                }
            }
            acc
        });
        let ef = HermitianEigen::new(&wf);
        e = ef.vector(da - 1);
        let we = CMatrix::from_fn(db, db, |j, l| {
            let mut acc = ZERO;
            for i in 0..da {
                for k in 0..da {
                    acc += e[i].conj() * w[(i * db + j, k * db + l)] * e[k];
                }
            }
            acc
        });
        let fe = HermitianEigen::new(&we);
        f = fe.vector(db - 1);
        let val = fe.max();
        if val - last <= 1e-14 * val.abs().max(1.0) {
            last = val;
            break;
        }
        last = val;
    }
    (last, e, f)
}

/// Outcome of the search for a convex decomposition into grid coherent states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum InnerCertificate {
    /// ‖ρ − Σ wⱼ|αⱼ⟩⟨αⱼ|‖₁ ≤ tolerance with wⱼ ≥ 0, Σ wⱼ = 1.
    Found {
        weights: Vec<((f64, f64), f64)>,
        residual: f64,
    },
    /// No decomposition within tolerance on this grid. This is not a proof of
    /// nonclassicality.
    NotFound { residual: f64 },
}

/// Nonnegative least squares of ρ onto grid coherent projectors.
pub fn classicality_inner_certificate(
    rho: &DensityOperator,
    grid: &CoherentGrid,
    tolerance: f64,
) -> Result<InnerCertificate> {
    if rho.is_bipartite() {
        return Err(Error::ShapeMismatch("classicality needs a single mode".into()));
    }
    grid.validate()?;
    let dim = rho.dim();
    let points = grid.points();
    let vecs: Vec<CVector> = points.iter().map(|&a| coherent_amplitudes(a, dim)).collect();
    let n = vecs.len();
    // Gram form: minimize xᵀGx − 2hᵀx with G_jk = |⟨αⱼ|αₖ⟩|², h_j = ⟨αⱼ|ρ|αⱼ⟩
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| (0..n).map(|k| vecs[j].dotc(&vecs[k]).norm_sqr()).collect())
        .collect();
    let gram = DMatrix::from_fn(n, n, |j, k| rows[j][k]);
    let h = DVector::from_iterator(n, vecs.iter().map(|v| linalg::expectation(rho.matrix(), v)));
    let x = nnls_gram(&gram, &h, 1e-15, 4 * n);
    let total: f64 = x.iter().sum();
    let mut approx = CMatrix::zeros(dim, dim);
    let mut weights = Vec::new();
    if total > 0.0 {
        for j in 0..n {
            if x[j] > 0.0 {
                let wj = x[j] / total;
                approx += linalg::projector(&vecs[j]).scale(wj);
                weights.push(((points[j].re, points[j].im), wj));
            }
        }
    }
    let residual = linalg::trace_norm(&(rho.matrix() - &approx));
    if residual <= tolerance {
        Ok(InnerCertificate::Found { weights, residual })
    } else {
        Ok(InnerCertificate::NotFound { residual })
    }
}

/// Lawson–Hanson active-set NNLS on the normal equations.
fn nnls_gram(g: &DMatrix<f64>, h: &DVector<f64>, tol: f64, max_iter: usize) -> DVector<f64> {
    let n = h.len();
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let scale = h.amax().max(1e-300);
    for _ in 0..max_iter {
        let grad = h - g * &x;
        let mut pick = None;
        let mut best = tol * scale;
        for j in 0..n {
            if !passive[j] && grad[j] > best {
                best = grad[j];
                pick = Some(j);
            }
        }
        let Some(j) = pick else { break };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let gp = DMatrix::from_fn(idx.len(), idx.len(), |a, b| g[(idx[a], idx[b])]);
            let hp = DVector::from_iterator(idx.len(), idx.iter().map(|&k| h[k]));
            let z = match gp.clone().cholesky() {
                Some(ch) => ch.solve(&hp),
                None => match gp.lu().solve(&hp) {
                    Some(z) => z,
                    None => {
                        passive[j] = false;
                        return x;
                    }
                },
            };
            if z.iter().all(|&v| v > 0.0) {
                for (a, &k) in idx.iter().enumerate() {
                    x[k] = z[a];
                }
                break;
            }
            let mut step = 1.0f64;
            for (a, &k) in idx.iter().enumerate() {
                if z[a] <= 0.0 {
                    let denom = x[k] - z[a];
                    if denom > 0.0 {
                        step = step.min(x[k] / denom);
                    }
                }
            }
            for (a, &k) in idx.iter().enumerate() {
                x[k] += step * (z[a] - x[k]);
                if x[k] <= 1e-15 {
                    x[k] = 0.0;
                    passive[k] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    x
}

/// Product vectors (Σ √μₙ ωⁿ |uₙ⟩) ⊗ (Σ √μₘ ω^{-m} |wₘ⟩) over cube-root phase
/// patterns; their uniform average, divided by (Σμ)², is a separable σ with
/// (Σμ)²σ − |ψ⟩⟨ψ| = Σ_{n≠m} μₙμₘ |uₙwₘ⟩⟨uₙwₘ| ⪰ 0.
pub fn pure_state_product_ensemble(schmidt: &SchmidtDecomposition) -> Vec<CVector> {
    let k = schmidt.rank();
    let total = 3usize.pow(k as u32);
    let roots = [
        C64::new(1.0, 0.0),
        C64::from_polar(1.0, 2.0 * PI / 3.0),
        C64::from_polar(1.0, 4.0 * PI / 3.0),
    ];
    let da = schmidt.left[0].len();
    let db = schmidt.right[0].len();
    (0..total)
        .map(|mut code| {
            let mut a = CVector::zeros(da);
            let mut b = CVector::zeros(db);
            for n in 0..k {
                let ph = roots[code % 3];
                code /= 3;
                let s = schmidt.coefficients[n].sqrt();
                a += schmidt.left[n].scale(s) * ph;
                b += schmidt.right[n].scale(s) * ph.conj();
            }
            linalg::kron_vec(&a, &b)
        })
        .collect()
}

/// The separable state built from [`pure_state_product_ensemble`] and the
/// matching coefficient t = (Σμ)².
pub fn pure_state_separable_noise(schmidt: &SchmidtDecomposition) -> (CMatrix, f64) {
    let ensemble = pure_state_product_ensemble(schmidt);
    let dim = ensemble[0].len();
    let mut sigma = CMatrix::zeros(dim, dim);
    for v in &ensemble {
        sigma += linalg::projector(v);
    }
    let t = schmidt.coefficient_sum().powi(2);
    sigma.unscale_mut(ensemble.len() as f64 * t);
    (sigma, t)
}

/// Random product vectors plus the computational basis products.
pub fn product_points(dims: (usize, usize), count: usize, seed: u64) -> Vec<CVector> {
    let (da, db) = dims;
    let mut out = Vec::with_capacity(count + da * db);
    for i in 0..da {
        for j in 0..db {
            out.push(linalg::kron_vec(&basis(da, i), &basis(db, j)));
        }
    }
    let mut rng = crate::random::rng(seed, 0);
    for _ in 0..count {
        let a = crate::random::unit_vector(&mut rng, da);
        let b = crate::random::unit_vector(&mut rng, db);
        out.push(linalg::kron_vec(&a, &b));
    }
    out
}
