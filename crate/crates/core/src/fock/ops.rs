use super::{DensityOperator, FockVector};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, HermitianEigen, C64};

/// Matrix elements ⟨m|e^{αa† − α*a}|n⟩ for m, n < dim.
///
/// Elements are the exact (untruncated) ones, from the Laguerre form
/// ⟨m|D(α)|n⟩ = √(n!/m!) α^{m−n} e^{−|α|²/2} L_n^{(m−n)}(|α|²) for m ≥ n
/// and the conjugate-symmetric counterpart for m < n.
pub fn displacement_operator(alpha: C64, dim: usize) -> CMatrix {
    displacement_elements(alpha, dim, true)
}

/// e^{|α|²/2} D(α), whose elements stay O(poly) for large |α|.
pub fn normal_ordered_displacement(alpha: C64, dim: usize) -> CMatrix {
    displacement_elements(alpha, dim, false)
}

fn displacement_elements(alpha: C64, dim: usize, with_gaussian: bool) -> CMatrix {
    let x = alpha.norm_sqr();
    if x == 0.0 {
        return CMatrix::identity(dim, dim);
    }
    let ln_r = alpha.norm().ln();
    let phase = alpha.arg();
    let mut ln_fact = vec![0.0; dim + 1];
    for k in 1..=dim {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let gauss = if with_gaussian { -0.5 * x } else { 0.0 };
    let mut d = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        let kf = k as f64;
        let lower_phase = C64::from_polar(1.0, kf * phase);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let upper_phase = C64::from_polar(sign, -kf * phase);
        // L_j^{(k)}(x) by the forward three-term recurrence in j
        let mut l_prev = 0.0;
        let mut l_cur = 1.0;
        for j in 0..dim - k {
            if j == 1 {
                l_prev = 1.0;
                l_cur = 1.0 + kf - x;
            } else if j > 1 {
                let jf = (j - 1) as f64;
                let next = ((2.0 * jf + 1.0 + kf - x) * l_cur - (jf + kf) * l_prev) / (jf + 1.0);
                l_prev = l_cur;
                l_cur = next;
            }
            let mag = (0.5 * (ln_fact[j] - ln_fact[j + k]) + kf * ln_r + gauss).exp();
            let val = l_cur * mag;
            d[(j + k, j)] = lower_phase * val;
            if k > 0 {
                d[(j, j + k)] = upper_phase * val;
            }
        }
    }
    d
}

/// Schmidt decomposition Σ μₖ |uₖ⟩⊗|wₖ⟩ with nonincreasing μ.
#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    pub coefficients: Vec<f64>,
    pub left: Vec<CVector>,
    pub right: Vec<CVector>,
}

impl SchmidtDecomposition {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    pub fn reconstruct(&self) -> CVector {
        let da = self.left.first().map_or(0, |v| v.len());
        let db = self.right.first().map_or(0, |v| v.len());
        let mut out = CVector::zeros(da * db);
        for ((mu, u), w) in self.coefficients.iter().zip(&self.left).zip(&self.right) {
            out += linalg::kron_vec(u, w).scale(*mu);
        }
        out
    }

    /// Σ μₖ, whose square is the separable robustness of the normalized state.
    pub fn coefficient_sum(&self) -> f64 {
        self.coefficients.iter().sum()
    }
}

/// Coefficients below this are dropped from the decomposition.
const SCHMIDT_CUTOFF: f64 = 1e-13;

pub fn schmidt_decompose(psi: &FockVector, dims: (usize, usize)) -> Result<SchmidtDecomposition> {
    schmidt_of_amplitudes(psi.amplitudes(), dims)
}

pub(crate) fn schmidt_of_amplitudes(amps: &CVector, (da, db): (usize, usize)) -> Result<SchmidtDecomposition> {
    if da * db != amps.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} amplitudes for dims ({da}, {db})",
            amps.len()
        )));
    }
    let m = CMatrix::from_fn(da, db, |i, j| amps[i * db + j]);
    let svd = linalg::Svd::new(&m);
    let mut out = SchmidtDecomposition {
        coefficients: Vec::new(),
        left: Vec::new(),
        right: Vec::new(),
    };
    for (k, &mu) in svd.values.iter().enumerate() {
        if mu <= SCHMIDT_CUTOFF {
            continue;
        }
        out.coefficients.push(mu);
        out.left.push(svd.u.column(k).into_owned());
        // m = Σ μ uₖ vₖ†, so the right factor is conj(vₖ)
        out.right.push(svd.v.column(k).conjugate());
    }
    Ok(out)
}

/// Transpose on the second subsystem: ρ^Γ_{(i,j),(k,l)} = ρ_{(i,l),(k,j)}.
pub fn partial_transpose(rho: &DensityOperator) -> Result<CMatrix> {
    if !rho.is_bipartite() {
        return Err(Error::NotBipartite);
    }
    let (da, db) = (rho.dims()[0], rho.dims()[1]);
    let m = rho.matrix();
    Ok(CMatrix::from_fn(da * db, da * db, |r, c| {
        let (i, j) = (r / db, r % db);
        let (k, l) = (c / db, c % db);
        m[(i * db + l, k * db + j)]
    }))
}

pub fn trace_norm(m: &CMatrix) -> f64 {
    linalg::trace_norm(m)
}

/// ρ_A ⊗ ρ_B for two single-mode operators.
pub fn tensor(a: &DensityOperator, b: &DensityOperator) -> Result<DensityOperator> {
    if a.is_bipartite() || b.is_bipartite() {
        return Err(Error::ShapeMismatch("tensor expects single-mode factors".into()));
    }
    Ok(DensityOperator::from_parts_unchecked(
        vec![a.dim(), b.dim()],
        linalg::kron(a.matrix(), b.matrix()),
        a.tail_weight() + b.tail_weight(),
    ))
}

/// Zeroes all off-diagonal entries.
pub fn dephase_diag(rho: &DensityOperator) -> DensityOperator {
    let d = rho.matrix().diagonal();
    DensityOperator::from_parts_unchecked(rho.dims().to_vec(), CMatrix::from_diagonal(&d), rho.tail_weight())
}

/// Σ K†K for a Kraus list.
pub fn kraus_completeness(kraus: &[CMatrix]) -> CMatrix {
    let n = kraus.first().map_or(0, |k| k.ncols());
    kraus.iter().fold(CMatrix::zeros(n, n), |acc, k| acc + k.adjoint() * k)
}

fn check_kraus(dim: usize, kraus: &[CMatrix]) -> Result<CMatrix> {
    if kraus.is_empty() {
        return Err(Error::ShapeMismatch("empty Kraus list".into()));
    }
    for k in kraus {
        if k.ncols() != dim || k.nrows() != dim {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} Kraus operator on dimension {dim}",
                k.nrows(),
                k.ncols()
            )));
        }
    }
    let comp = kraus_completeness(kraus);
    let top = HermitianEigen::new(&comp).max();
    if top > 1.0 + 1e-9 {
        return Err(Error::NotTracePreserving(top - 1.0));
    }
    Ok(comp)
}

/// Σ K ρ K† for a trace-non-increasing Kraus list (Σ K†K ⪯ 𝟙 + 10⁻⁹).
pub fn apply_subchannel(rho: &CMatrix, kraus: &[CMatrix]) -> Result<CMatrix> {
    check_kraus(rho.nrows(), kraus)?;
    Ok(kraus.iter().fold(CMatrix::zeros(rho.nrows(), rho.nrows()), |acc, k| {
        acc + k * rho * k.adjoint()
    }))
}

/// Applies a channel that must be trace preserving within 10⁻⁸.
pub fn apply_channel(rho: &DensityOperator, kraus: &[CMatrix]) -> Result<DensityOperator> {
    let n = rho.dim();
    let comp = check_kraus(n, kraus)?;
    let dev = linalg::max_abs_diff(&comp, &CMatrix::identity(n, n));
    if dev > 1e-8 {
        return Err(Error::NotTracePreserving(dev));
    }
    let mut out = CMatrix::zeros(n, n);
    for k in kraus {
        out += k * rho.matrix() * k.adjoint();
    }
    Ok(DensityOperator::from_parts_unchecked(
        rho.dims().to_vec(),
        out,
        rho.tail_weight(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_amplitudes, make_state, make_state_with_cap, State, StateSpec};
    use crate::linalg::ZERO;
    use crate::linalg::{annihilation, max_abs_diff, ONE};

    #[test]
    fn displacement_at_zero_is_identity() {
        assert_eq!(displacement_operator(ZERO, 6), CMatrix::identity(6, 6));
    }

    #[test]
    fn vacuum_overlap_series() {
        // oracle: ⟨0|α⟩ from the coherent series e^{−|α|²/2}
        let d = displacement_operator(C64::new(1.0, 0.0), 20);
        assert!((d[(0, 0)].re - 0.606_530_659_712_633_4).abs() < 1e-14);
        let c = coherent_amplitudes(C64::new(0.3, -1.2), 25);
        let d = displacement_operator(C64::new(0.3, -1.2), 25);
        for m in 0..25 {
            assert!((d[(m, 0)] - c[m]).norm() < 1e-14);
        }
    }

    #[test]
    fn laguerre_elements_match_matrix_exponential() {
        // oracle: exp(αa† − α*a) in a much larger truncation, cropped
        let alpha = C64::new(0.7, 1.1);
        let big = 120;
        let a = annihilation(big);
        let gen = a.adjoint().scale(1.0) * alpha - &a * alpha.conj();
        let full = gen.exp();
        let d = displacement_operator(alpha, 30);
        for m in 0..30 {
            for n in 0..30 {
                assert!((d[(m, n)] - full[(m, n)]).norm() < 1e-10, "({m},{n})");
            }
        }
    }

    #[test]
    fn inverse_on_low_block() {
        let dim = 60;
        for alpha in [C64::new(2.0, 0.0), C64::new(-1.0, 1.5), C64::new(0.3, -0.4)] {
            let p = displacement_operator(alpha, dim) * displacement_operator(-alpha, dim);
            let mut worst = 0.0_f64;
            for i in 0..=dim / 5 {
                for j in 0..=dim / 5 {
                    let want = if i == j { ONE } else { ZERO };
                    worst = worst.max((p[(i, j)] - want).norm());
                }
            }
            assert!(worst < 1e-6, "alpha {alpha}: {worst:e}");
        }
    }

    #[test]
    fn schmidt_of_bell() {
        let s = 0.5f64.sqrt();
        let v = FockVector::new(
            vec![2, 2],
            CVector::from_vec(vec![C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]),
            0.0,
        )
        .unwrap();
        let d = schmidt_decompose(&v, (2, 2)).unwrap();
        assert_eq!(d.rank(), 2);
        for mu in &d.coefficients {
            assert!((mu - s).abs() < 1e-12);
        }
    }

    #[test]
    fn schmidt_of_product() {
        let v = FockVector::new(vec![2, 2], CVector::from_vec(vec![ZERO, ONE, ZERO, ZERO]), 0.0).unwrap();
        let d = schmidt_decompose(&v, (2, 2)).unwrap();
        assert_eq!(d.coefficients.len(), 1);
        assert!((d.coefficients[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn schmidt_of_tmsv_is_geometric() {
        let psi = match make_state(&StateSpec::Tmsv { lambda: 0.5 }, 20).unwrap() {
            State::Pure(v) => v,
            _ => unreachable!(),
        };
        let d = schmidt_decompose(&psi, (20, 20)).unwrap();
        for (n, mu) in d.coefficients.iter().take(10).enumerate() {
            let want = 0.75f64.sqrt() * 0.5f64.powi(n as i32);
            assert!((mu - want).abs() < 1e-9);
        }
        assert!((d.coefficients[0] - 0.866_025_403_784_438_6).abs() < 1e-9);
        assert!((&d.reconstruct() - psi.amplitudes()).norm() < 1e-9);
    }

    #[test]
    fn schmidt_shape_mismatch() {
        let v = FockVector::single(CVector::from_vec(vec![ONE, ONE, ONE])).unwrap();
        assert!(matches!(schmidt_decompose(&v, (2, 2)), Err(Error::ShapeMismatch(_))));
    }

    fn bell() -> DensityOperator {
        let s = 0.5f64.sqrt();
        FockVector::new(
            vec![2, 2],
            CVector::from_vec(vec![C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]),
            0.0,
        )
        .unwrap()
        .to_density()
    }

    #[test]
    fn bell_partial_transpose_norm() {
        // oracle: ρ^Γ of the Bell state is the swap operator / 2, spectrum (½,½,½,−½)
        let pt = partial_transpose(&bell()).unwrap();
        let e = HermitianEigen::new(&pt);
        let want = [-0.5, 0.5, 0.5, 0.5];
        for (v, w) in e.values.iter().zip(want) {
            assert!((v - w).abs() < 1e-12);
        }
        assert!((trace_norm(&pt) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn separable_diagonal_is_invariant() {
        let mut m = CMatrix::zeros(9, 9);
        for (n, q) in [0.5, 0.3, 0.2].iter().enumerate() {
            m[(n * 3 + n, n * 3 + n)] = C64::new(*q, 0.0);
        }
        let rho = DensityOperator::new(vec![3, 3], m.clone(), 0.0).unwrap();
        let pt = partial_transpose(&rho).unwrap();
        assert_eq!(pt, m);
        assert!((trace_norm(&pt) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn not_bipartite() {
        let rho = DensityOperator::single(CMatrix::identity(2, 2).unscale(2.0)).unwrap();
        assert!(matches!(partial_transpose(&rho), Err(Error::NotBipartite)));
    }

    #[test]
    fn tensor_of_fock_projectors() {
        let p0 = make_state(&StateSpec::Fock { n: 0 }, 2).unwrap().density();
        let p1 = make_state(&StateSpec::Fock { n: 1 }, 2).unwrap().density();
        let t = tensor(&p0, &p1).unwrap();
        assert_eq!(t.dims(), &[2, 2]);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == 1 && j == 1 { ONE } else { ZERO };
                assert_eq!(t.matrix()[(i, j)], want);
            }
        }
    }

    #[test]
    fn dephase_keeps_diagonal_state() {
        let th = make_state_with_cap(&StateSpec::Thermal { nbar: 0.7 }, 8, 1.0)
            .unwrap()
            .density();
        assert_eq!(dephase_diag(&th), th);
    }

    #[test]
    fn identity_channel_bit_exact() {
        let rho = make_state(&StateSpec::Coherent { re: 0.4, im: 0.9 }, 12)
            .unwrap()
            .density();
        let out = apply_channel(&rho, &[CMatrix::identity(12, 12)]).unwrap();
        assert_eq!(out.matrix(), rho.matrix());
    }

    #[test]
    fn non_trace_preserving_rejected() {
        let rho = bell();
        let half = CMatrix::identity(4, 4).scale(0.5);
        assert!(matches!(
            apply_channel(&rho, std::slice::from_ref(&half)),
            Err(Error::NotTracePreserving(_))
        ));
        assert!(apply_subchannel(rho.matrix(), &[half]).is_ok());
        let big = CMatrix::identity(4, 4).scale(1.1);
        assert!(apply_subchannel(rho.matrix(), &[big]).is_err());
    }

    #[test]
    fn dephasing_channel_equals_dephase_diag() {
        let rho = make_state_with_cap(&StateSpec::Coherent { re: 0.5, im: 0.0 }, 6, 1.0)
            .unwrap()
            .density();
        let kraus: Vec<CMatrix> = (0..6)
            .map(|n| {
                let mut k = CMatrix::zeros(6, 6);
                k[(n, n)] = ONE;
                k
            })
            .collect();
        let out = apply_channel(&rho, &kraus).unwrap();
        assert!(max_abs_diff(out.matrix(), dephase_diag(&rho).matrix()) < 1e-15);
    }
}
