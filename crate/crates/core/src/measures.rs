//! Closed-form robustness values, pure-state bounds and auxiliary measures.

use crate::error::{Error, Result};
use crate::fock::{
    displacement_operator, normal_ordered_displacement, partial_transpose, schmidt_of_amplitudes, squeezed_thermal,
    squeezed_vacuum_amplitudes, DensityOperator, FockVector, StateSpec,
};
use crate::free_sets::{free_value, CoherentGrid, FreeSetModel, FreeSetTag};
use crate::linalg::{self, CMatrix, CVector, HermitianEigen, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Where a bound came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    PseudoInverse,
    Witness,
    CuttingPlane,
    FeasiblePoint,
    /// R ≥ 1 for every state.
    Trivial,
}

/// A bracket lower ≤ R ≤ upper. Infinite values serialize as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessBounds {
    pub lower: f64,
    pub upper: f64,
    pub lower_method: Method,
    pub upper_method: Method,
    pub gap: f64,
    /// False when the lower bound rests on a heuristic free value.
    pub certified: bool,
}

impl RobustnessBounds {
    pub fn new(lower: f64, lower_method: Method, upper: f64, upper_method: Method) -> Self {
        let (lower, lower_method) = if lower < 1.0 {
            (1.0, Method::Trivial)
        } else {
            (lower, lower_method)
        };
        Self {
            lower,
            upper,
            lower_method,
            upper_method,
            gap: upper - lower,
            certified: true,
        }
    }

    pub fn exact(value: f64, method: Method) -> Self {
        Self::new(value, method, value, method)
    }

    pub fn unbounded() -> Self {
        Self::new(1.0, Method::Trivial, f64::INFINITY, Method::Trivial)
    }

    /// Keeps the tighter side of each bound.
    pub fn tighten(&mut self, other: &RobustnessBounds) {
        if other.lower > self.lower && (other.certified || !self.certified) {
            self.lower = other.lower;
            self.lower_method = other.lower_method;
            self.certified = other.certified;
        }
        if other.upper < self.upper {
            self.upper = other.upper;
            self.upper_method = other.upper_method;
        }
        self.gap = self.upper - self.lower;
    }

    pub fn contains(&self, value: f64, rel: f64) -> bool {
        value >= self.lower * (1.0 - rel) && value <= self.upper * (1.0 + rel)
    }

    /// lower ≤ upper + 1e-8 and both ≥ 1 − 1e-9.
    pub fn is_consistent(&self) -> bool {
        self.lower <= self.upper + 1e-8 && self.lower >= 1.0 - 1e-9 && self.upper >= 1.0 - 1e-9
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormKind {
    Exact,
    /// Only an upper bound is known in closed form.
    UpperBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub value: f64,
    pub kind: ClosedFormKind,
}

impl ClosedForm {
    fn exact(value: f64) -> Self {
        Self {
            value,
            kind: ClosedFormKind::Exact,
        }
    }

    pub fn bounds(&self) -> RobustnessBounds {
        match self.kind {
            ClosedFormKind::Exact => RobustnessBounds::exact(self.value, Method::ClosedForm),
            ClosedFormKind::UpperBound => RobustnessBounds::new(1.0, Method::Trivial, self.value, Method::ClosedForm),
        }
    }
}

/// eⁿ n!/nⁿ, the nonclassicality robustness of |n⟩.
pub fn fock_robustness(n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let nf = n as f64;
    (nf + linalg::ln_factorial(n) - nf * nf.ln()).exp()
}

/// 2/(1 ± e^{−2α²}) for the even (+) and odd (−) cat.
pub fn cat_robustness(alpha: f64, even: bool) -> f64 {
    let g = (-2.0 * alpha * alpha).exp();
    if even {
        2.0 / (1.0 + g)
    } else {
        2.0 / (1.0 - g)
    }
}

/// (1 + λ)/(1 − λ) = (Σ μₙ)² for μₙ = √(1 − λ²) λⁿ.
pub fn tmsv_robustness(lambda: f64) -> f64 {
    (1.0 + lambda) / (1.0 - lambda)
}

/// (Σ|ψₙ|)² after normalization.
pub fn pure_l1(amplitudes: &CVector) -> f64 {
    let norm = amplitudes.norm();
    let s: f64 = amplitudes.iter().map(|z| z.norm()).sum();
    (s / norm).powi(2)
}

fn amplitudes_of(re: &[f64], im: &[f64]) -> Result<CVector> {
    if !im.is_empty() && im.len() != re.len() {
        return Err(Error::ShapeMismatch("re and im lengths differ".into()));
    }
    let v = CVector::from_iterator(
        re.len(),
        re.iter()
            .enumerate()
            .map(|(k, &x)| C64::new(x, im.get(k).copied().unwrap_or(0.0))),
    );
    if v.norm() == 0.0 {
        return Err(Error::InvalidState("zero amplitude vector".into()));
    }
    Ok(v)
}

/// Robustness in closed form for the analytically solved families.
pub fn closed_form(spec: &StateSpec, free: FreeSetTag) -> Result<ClosedForm> {
    let none = || Error::NoClosedForm(format!("{spec} w.r.t. {}", free.name()));
    match free {
        FreeSetTag::Classical => match *spec {
            StateSpec::Fock { n } => Ok(ClosedForm::exact(fock_robustness(n))),
            StateSpec::Coherent { .. } | StateSpec::Thermal { .. } | StateSpec::PhaseRandomized { .. } => {
                Ok(ClosedForm::exact(1.0))
            }
            StateSpec::Squeezed { r } => Ok(ClosedForm::exact(r.abs().exp())),
            StateSpec::CatPlus { alpha } => Ok(ClosedForm::exact(cat_robustness(alpha, true))),
            StateSpec::CatMinus { alpha } => Ok(ClosedForm {
                value: cat_robustness(alpha, false),
                kind: ClosedFormKind::UpperBound,
            }),
            _ => Err(none()),
        },
        FreeSetTag::Incoherent => match spec {
            StateSpec::Fock { .. } | StateSpec::Thermal { .. } | StateSpec::PhaseRandomized { .. } => {
                Ok(ClosedForm::exact(1.0))
            }
            StateSpec::Amplitudes { re, im, dims: None } => Ok(ClosedForm::exact(pure_l1(&amplitudes_of(re, im)?))),
            _ => Err(none()),
        },
        FreeSetTag::Separable => match spec {
            StateSpec::Tmsv { lambda } => Ok(ClosedForm::exact(tmsv_robustness(*lambda))),
            StateSpec::Amplitudes {
                re,
                im,
                dims: Some(dims),
            } => {
                let v = amplitudes_of(re, im)?;
                let s = schmidt_of_amplitudes(&v.normalize(), *dims)?;
                Ok(ClosedForm::exact(s.coefficient_sum().powi(2)))
            }
            _ => Err(none()),
        },
    }
}

/// Outcome of 1/⟨ψ|σ|ψ⟩.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureLower {
    pub value: f64,
    pub overlap: f64,
    /// ⟨ψ|σ|ψ⟩ vanished: either ψ is infinitely robust or σ was a poor choice.
    pub zero_overlap: bool,
}

/// 1/⟨ψ|σ|ψ⟩ for a caller-supplied free σ.
///
/// This is a lower bound on the robustness only when σ maximizes ⟨ψ|σ|ψ⟩
/// over the free set (the pure-state bound is inf_σ ⟨ψ|σ|ψ⟩⁻¹). For an
/// arbitrary free σ the value is a candidate; [`certified_pure_lower`] gives a
/// bound that is valid without that assumption.
pub fn overlap_lower(psi: &FockVector, sigma: &DensityOperator) -> Result<PureLower> {
    same_dim(psi.dim(), sigma.dim())?;
    let overlap = linalg::expectation(sigma.matrix(), psi.amplitudes());
    if overlap <= 1e-300 {
        return Ok(PureLower {
            value: f64::INFINITY,
            overlap,
            zero_overlap: true,
        });
    }
    Ok(PureLower {
        value: 1.0 / overlap,
        overlap,
        zero_overlap: false,
    })
}

/// 1/sup_{σ∈F}⟨ψ|σ|ψ⟩ with the supremum taken by the free-value oracle.
pub fn certified_pure_lower(psi: &FockVector, model: &FreeSetModel) -> Result<(f64, bool)> {
    let w = linalg::projector(psi.amplitudes());
    let f = free_value(&w, model)?;
    if f.value <= 0.0 {
        return Ok((f64::INFINITY, f.certification.is_certified()));
    }
    Ok((1.0 / f.value, f.certification.is_certified()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureUpper {
    pub value: f64,
    /// Same quantity with the cutoff lowered tenfold.
    pub value_tenth_cutoff: f64,
    /// ‖(𝟙 − Π_supp)ψ‖².
    pub support_residual: f64,
    pub cutoff: f64,
}

/// Relative eigenvalue cutoff defining the support of σ.
pub const SUPPORT_CUTOFF: f64 = 1e-10;

/// ⟨ψ|σ⁺|ψ⟩ with the pseudo-inverse on the support of σ.
pub fn pseudo_inverse_upper(psi: &FockVector, sigma: &DensityOperator) -> Result<PureUpper> {
    same_dim(psi.dim(), sigma.dim())?;
    let eig = HermitianEigen::new(sigma.matrix());
    let top = eig.max();
    let at = |cut: f64| {
        let mut value = 0.0;
        let mut kept = 0.0;
        for k in 0..eig.values.len() {
            if eig.values[k] > cut * top {
                let w = eig.vector(k).dotc(psi.amplitudes()).norm_sqr();
                value += w / eig.values[k];
                kept += w;
            }
        }
        (value, (1.0 - kept).max(0.0))
    };
    let (value, residual) = at(SUPPORT_CUTOFF);
    if residual > 1e-8 {
        return Err(Error::OutsideSupport(residual));
    }
    let (tenth, _) = at(SUPPORT_CUTOFF / 10.0);
    if (tenth - value).abs() > 1e-3 * value {
        return Err(Error::CutoffSensitive {
            at_cutoff: value,
            at_tenth: tenth,
        });
    }
    Ok(PureUpper {
        value,
        value_tenth_cutoff: tenth,
        support_residual: residual,
        cutoff: SUPPORT_CUTOFF,
    })
}

/// Separable robustness of a pure bipartite state without forming |ψ⟩⟨ψ|.
///
/// Lower: the witness |φ⟩⟨φ| with φ = Σₖ |uₖwₖ⟩ over the Schmidt vectors of ψ;
/// its free value is the squared largest Schmidt coefficient of φ, and
/// ⟨φ|ψ⟩ = Σμₖ. Upper: (Σμₖ)², attained by the phase-averaged product
/// ensemble of [`crate::free_sets::pure_state_product_ensemble`].
pub fn schmidt_robustness(psi: &FockVector) -> Result<RobustnessBounds> {
    let dims = match psi.dims() {
        [a, b] => (*a, *b),
        _ => return Err(Error::NotBipartite),
    };
    let s = schmidt_of_amplitudes(psi.amplitudes(), dims)?;
    let phi = s
        .left
        .iter()
        .zip(&s.right)
        .fold(CVector::zeros(psi.dim()), |acc, (u, w)| acc + linalg::kron_vec(u, w));
    let top = schmidt_of_amplitudes(&phi, dims)?
        .coefficients
        .first()
        .copied()
        .ok_or(Error::ZeroWitness)?;
    let lower = phi.dotc(psi.amplitudes()).norm_sqr() / (top * top);
    let upper = s.coefficient_sum().powi(2);
    Ok(RobustnessBounds::new(
        lower,
        Method::Witness,
        upper,
        Method::FeasiblePoint,
    ))
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch(format!("state has {a} levels, sigma {b}")));
    }
    Ok(())
}

/// ½(|α⟩⟨α| + |−α⟩⟨−α|), renormalized after cropping.
pub fn cat_mixture(alpha: f64, dim: usize) -> Result<DensityOperator> {
    let a = crate::fock::coherent_amplitudes(C64::new(alpha, 0.0), dim);
    let b = crate::fock::coherent_amplitudes(C64::new(-alpha, 0.0), dim);
    let m = (linalg::projector(&a) + linalg::projector(&b)).scale(0.5);
    let tail = 1.0 - m.trace().re;
    DensityOperator::normalized(vec![dim], m, tail.max(0.0))
}

/// Phase average of |√n̄ e^{iθ}⟩, i.e. the Poisson mixture of Fock states.
pub fn phase_randomized(nbar: f64, dim: usize) -> Result<DensityOperator> {
    crate::fock::make_state_with_cap(&StateSpec::PhaseRandomized { nbar }, dim, 1.0).map(|s| s.density())
}

/// Classical Gaussian ansatz for the squeezed vacuum: S(r_N) τ_N S(r_N)† with
/// e^{2r_N} = 2N + 1 (the most squeezed classical state at occupation N),
/// with N chosen to minimize ⟨ζ_r|σ_N⁻¹|ζ_r⟩.
#[derive(Clone, Debug)]
pub struct SqueezedAnsatz {
    pub nbar: f64,
    pub squeezing: f64,
    /// Untruncated ⟨ζ_r|σ_N⁻¹|ζ_r⟩ at the optimum.
    pub analytic_value: f64,
    pub sigma: DensityOperator,
}

/// ⟨ζ_r|σ_N⁻¹|ζ_r⟩ = (N+1)/(cosh s·√(1 − tanh²s·((N+1)/N)²)), s = r − r_N.
pub fn squeezed_ansatz_value(r: f64, nbar: f64) -> f64 {
    let rn = 0.5 * (2.0 * nbar + 1.0).ln();
    let s = r.abs() - rn;
    let q = (nbar + 1.0) / nbar;
    let x = s.tanh().powi(2) * q * q;
    if x >= 1.0 {
        return f64::INFINITY;
    }
    (nbar + 1.0) / (s.cosh() * (1.0 - x).sqrt())
}

pub fn squeezed_ansatz(r: f64, dim: usize) -> Result<SqueezedAnsatz> {
    if !r.is_finite() {
        return Err(Error::InvalidParameter(format!("squeezing {r}")));
    }
    let f = |ln_n: f64| squeezed_ansatz_value(r, ln_n.exp());
    // coarse log scan to bracket, then golden section
    let (lo, hi, steps) = (-12.0f64, 8.0f64, 400);
    let h = (hi - lo) / steps as f64;
    let mut best = (lo, f64::INFINITY);
    for k in 0..=steps {
        let x = lo + k as f64 * h;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let (mut a, mut b) = (best.0 - h, best.0 + h);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    while b - a > 1e-6 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    let nbar = (0.5 * (a + b)).exp();
    let rn = 0.5 * (2.0 * nbar + 1.0).ln() * r.signum();
    let (block, tail) = squeezed_thermal(rn, nbar, dim);
    let sigma = DensityOperator::normalized(vec![dim], linalg::hermitize(&block), tail)?;
    Ok(SqueezedAnsatz {
        nbar,
        squeezing: rn,
        analytic_value: squeezed_ansatz_value(r, nbar),
        sigma,
    })
}

/// The pure squeezed vacuum as a [`FockVector`] with its tail.
pub fn squeezed_vector(r: f64, dim: usize) -> Result<FockVector> {
    let (amps, tail) = squeezed_vacuum_amplitudes(r, dim);
    FockVector::new(vec![dim], amps, tail)
}

/// ½(‖ρ^Γ‖₁ − 1).
pub fn negativity(rho: &DensityOperator) -> Result<f64> {
    let pt = partial_transpose(rho)?;
    Ok((0.5 * (linalg::trace_norm(&pt) - 1.0)).max(0.0))
}

/// Σ_{n,m} |ρ_{nm}|, equal to (Σ|ψₙ|)² on pure states.
pub fn l1_norm(rho: &CMatrix) -> f64 {
    rho.iter().map(|z| z.norm()).sum()
}

/// Smallest k with Σ_{n>k} ρ_nn ≤ 1e-12.
fn weight_block(rho: &CMatrix) -> usize {
    let mut tail = 0.0;
    for k in (0..rho.nrows()).rev() {
        tail += rho[(k, k)].re.max(0.0);
        if tail > 1e-12 {
            return k;
        }
    }
    0
}

/// max |D(α)D(α)† − 𝟙| on the first `block + 1` levels.
fn displacement_defect(alpha: C64, dim: usize, block: usize) -> f64 {
    let d = displacement_operator(alpha, dim);
    let mut worst = 0.0f64;
    for i in 0..=block {
        for j in 0..=block {
            let mut acc = C64::new(0.0, 0.0);
            for l in 0..dim {
                acc += d[(i, l)] * d[(j, l)].conj();
            }
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - want).norm());
        }
    }
    worst
}

/// χ₁(α) = e^{|α|²/2} Tr[ρ D(α)].
pub fn chi1(rho: &DensityOperator, alpha: C64) -> Result<C64> {
    if rho.is_bipartite() {
        return Err(Error::ShapeMismatch("χ₁ needs a single mode".into()));
    }
    let m = rho.matrix();
    let dim = rho.dim();
    if alpha.norm_sqr() == 0.0 {
        return Ok(m.trace());
    }
    let defect = displacement_defect(alpha, dim, weight_block(m));
    if defect > 1e-6 {
        return Err(Error::TruncationUnsound(defect));
    }
    Ok(linalg::trace_product(m, &normal_ordered_displacement(alpha, dim)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StdRobustnessBound {
    /// ½(sup|χ₁| + 1).
    pub lower: f64,
    pub sup_chi1: f64,
    pub argmax: (f64, f64),
    pub grid: CoherentGrid,
}

/// Lower bound on the standard robustness from the grid supremum of |χ₁|.
pub fn std_robustness_lower(rho: &DensityOperator, grid: &CoherentGrid) -> Result<StdRobustnessBound> {
    grid.validate()?;
    let points = grid.points();
    let values: Vec<Result<f64>> = points.par_iter().map(|&a| chi1(rho, a).map(|z| z.norm())).collect();
    let mut best = (0usize, f64::NEG_INFINITY);
    for (k, v) in values.into_iter().enumerate() {
        let v = v?;
        if v > best.1 {
            best = (k, v);
        }
    }
    let a = points[best.0];
    Ok(StdRobustnessBound {
        lower: 0.5 * (best.1 + 1.0),
        sup_chi1: best.1,
        argmax: (a.re, a.im),
        grid: grid.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{make_state, State};
    use std::f64::consts::E;

    fn pure(spec: StateSpec, dim: usize) -> FockVector {
        match make_state(&spec, dim).unwrap() {
            State::Pure(v) => v,
            _ => panic!(),
        }
    }

    #[test]
    fn schmidt_robustness_of_tmsv() {
        let lambda: f64 = 0.5;
        // (1 − λ^N)² truncation factor below 1e-12 at N = 45
        let psi = pure(StateSpec::Tmsv { lambda }, 45);
        let b = schmidt_robustness(&psi).unwrap();
        assert!((b.lower - 3.0).abs() < 1e-10, "{}", b.lower);
        assert!((b.upper - 3.0).abs() < 1e-10);
        assert!(matches!(
            schmidt_robustness(&pure(StateSpec::Fock { n: 1 }, 4)),
            Err(Error::NotBipartite)
        ));
    }

    #[test]
    fn closed_form_examples() {
        let c = |s: StateSpec, f| closed_form(&s, f).unwrap().value;
        assert!((c(StateSpec::Fock { n: 1 }, FreeSetTag::Classical) - E).abs() < 1e-14);
        assert!((c(StateSpec::Fock { n: 2 }, FreeSetTag::Classical) - 3.6945280494653248).abs() < 1e-13);
        assert_eq!(c(StateSpec::Squeezed { r: 0.0 }, FreeSetTag::Classical), 1.0);
        assert!((c(StateSpec::CatPlus { alpha: 1.0 }, FreeSetTag::Classical) - 1.7615941559557646).abs() < 1e-14);
        let bell = StateSpec::Amplitudes {
            re: vec![1.0, 0.0, 0.0, 1.0],
            im: vec![],
            dims: Some((2, 2)),
        };
        assert!((c(bell, FreeSetTag::Separable) - 2.0).abs() < 1e-12);
        let flat = StateSpec::Amplitudes {
            re: vec![0.5; 4],
            im: vec![],
            dims: None,
        };
        assert!((c(flat, FreeSetTag::Incoherent) - 4.0).abs() < 1e-12);
        let odd = closed_form(&StateSpec::CatMinus { alpha: 1.0 }, FreeSetTag::Classical).unwrap();
        assert_eq!(odd.kind, ClosedFormKind::UpperBound);
        assert!(matches!(
            closed_form(&StateSpec::SqueezedThermal { r: 0.1, nbar: 0.1 }, FreeSetTag::Classical),
            Err(Error::NoClosedForm(_))
        ));
    }

    #[test]
    fn fock_one_sandwich_from_poisson_mixture() {
        let psi = pure(StateSpec::Fock { n: 1 }, 40);
        let sigma = phase_randomized(1.0, 40).unwrap();
        let lo = overlap_lower(&psi, &sigma).unwrap();
        let up = pseudo_inverse_upper(&psi, &sigma).unwrap();
        assert!((lo.value - E).abs() < 1e-9);
        assert!((up.value - E).abs() < 1e-9);
    }

    #[test]
    fn vacuum_is_free() {
        let psi = pure(StateSpec::Fock { n: 0 }, 5);
        let sigma = psi.to_density();
        assert!((overlap_lower(&psi, &sigma).unwrap().value - 1.0).abs() < 1e-15);
        assert!((pseudo_inverse_upper(&psi, &sigma).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cat_lower_at_two() {
        // cat₊ is an eigenvector of σ with eigenvalue ½(1 + e^{−2α²})
        let psi = pure(StateSpec::CatPlus { alpha: 2.0 }, 40);
        let sigma = cat_mixture(2.0, 40).unwrap();
        let lo = overlap_lower(&psi, &sigma).unwrap().value;
        assert!((lo - 1.9993292997390673).abs() < 1e-9, "{lo}");
        let up = pseudo_inverse_upper(&psi, &sigma).unwrap().value;
        assert!((up - cat_robustness(2.0, true)).abs() < 1e-6);
    }

    #[test]
    fn outside_support_rejected() {
        let psi = pure(StateSpec::Fock { n: 1 }, 4);
        let sigma = pure(StateSpec::Fock { n: 0 }, 4).to_density();
        assert!(matches!(
            pseudo_inverse_upper(&psi, &sigma),
            Err(Error::OutsideSupport(_))
        ));
        assert!(overlap_lower(&psi, &sigma).unwrap().zero_overlap);
    }

    #[test]
    fn squeezed_ansatz_reaches_exponential() {
        let a = squeezed_ansatz(0.5, 60).unwrap();
        assert!((a.analytic_value - 0.5f64.exp()).abs() < 1e-6);
        let psi = squeezed_vector(0.5, 60).unwrap();
        let up = pseudo_inverse_upper(&psi, &a.sigma).unwrap().value;
        assert!((up - 0.5f64.exp()).abs() < 1e-3, "{up}");
    }

    #[test]
    fn bell_negativity() {
        let v = CVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ])
        .normalize();
        let rho = FockVector::new(vec![2, 2], v, 0.0).unwrap().to_density();
        assert!((negativity(&rho).unwrap() - 0.5).abs() < 1e-12);
        let single = pure(StateSpec::Fock { n: 1 }, 3).to_density();
        assert!(matches!(negativity(&single), Err(Error::NotBipartite)));
    }

    #[test]
    fn l1_examples() {
        let th = crate::fock::make_state_with_cap(&StateSpec::Thermal { nbar: 0.4 }, 6, 1.0)
            .unwrap()
            .density();
        assert!((l1_norm(th.matrix()) - 1.0).abs() < 1e-12);
        let plus = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).normalize();
        assert!((l1_norm(&linalg::projector(&plus)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn chi1_values() {
        let one = pure(StateSpec::Fock { n: 1 }, 40).to_density();
        assert_eq!(chi1(&one, C64::new(0.0, 0.0)).unwrap(), C64::new(1.0, 0.0));
        let a = C64::new(1.0, 1.0);
        let z = chi1(&one, a).unwrap();
        assert!((z - C64::new(-1.0, 0.0)).norm() < 1e-12, "{z}");
        let coh = pure(StateSpec::Coherent { re: 1.0, im: 0.0 }, 60).to_density();
        for alpha in [C64::new(0.5, 0.5), C64::new(-1.2, 0.3), C64::new(0.0, 2.0)] {
            assert!((chi1(&coh, alpha).unwrap().norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn chi1_flags_small_truncation() {
        let one = crate::fock::make_state_with_cap(&StateSpec::Fock { n: 1 }, 8, 1.0)
            .unwrap()
            .density();
        assert!(matches!(
            chi1(&one, C64::new(3.0, 0.0)),
            Err(Error::TruncationUnsound(_))
        ));
    }

    #[test]
    fn bounds_invariants() {
        let b = RobustnessBounds::new(0.7, Method::Witness, 2.0, Method::CuttingPlane);
        assert_eq!(b.lower, 1.0);
        assert_eq!(b.lower_method, Method::Trivial);
        assert!(b.is_consistent());
        let mut c = RobustnessBounds::unbounded();
        c.tighten(&RobustnessBounds::exact(1.5, Method::ClosedForm));
        assert_eq!((c.lower, c.upper), (1.5, 1.5));
    }
}
