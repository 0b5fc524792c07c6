use super::{DensityOperator, FockVector, State, StateSpec};
use crate::error::{Error, Result};
use crate::linalg::{ln_factorial, CMatrix, CVector, C64, ZERO};
use nalgebra::DMatrix;

/// Default cap on the probability mass a constructor may discard.
pub const DEFAULT_TAIL_CAP: f64 = 1e-8;

/// Builds a state with the default tail-weight cap.
pub fn make_state(spec: &StateSpec, dim: usize) -> Result<State> {
    make_state_with_cap(spec, dim, DEFAULT_TAIL_CAP)
}

pub fn make_state_with_cap(spec: &StateSpec, dim: usize, cap: f64) -> Result<State> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall {
            dim,
            tail_weight: 1.0,
            cap,
        });
    }
    let state = match *spec {
        StateSpec::Fock { n } => {
            if n >= dim {
                return Err(Error::DimensionTooSmall {
                    dim,
                    tail_weight: 1.0,
                    cap,
                });
            }
            let mut v = CVector::zeros(dim);
            v[n] = C64::new(1.0, 0.0);
            State::Pure(FockVector::new(vec![dim], v, 0.0)?)
        }
        StateSpec::Coherent { re, im } => {
            let alpha = C64::new(finite(re)?, finite(im)?);
            let tail = poisson_tail(alpha.norm_sqr(), dim);
            State::Pure(FockVector::new(vec![dim], coherent_amplitudes(alpha, dim), tail)?)
        }
        StateSpec::Squeezed { r } => {
            let (amps, tail) = squeezed_vacuum_amplitudes(finite(r)?, dim);
            State::Pure(FockVector::new(vec![dim], amps, tail)?)
        }
        StateSpec::CatPlus { alpha } => cat(finite(alpha)?, 0, dim)?,
        StateSpec::CatMinus { alpha } => cat(finite(alpha)?, 1, dim)?,
        StateSpec::Thermal { nbar } => {
            let nbar = finite(nbar)?;
            if nbar < 0.0 {
                return Err(Error::InvalidParameter(format!("thermal occupation {nbar} < 0")));
            }
            let ratio = nbar / (nbar + 1.0);
            let diag: Vec<f64> = (0..dim).map(|n| ratio.powi(n as i32) / (nbar + 1.0)).collect();
            State::Mixed(diagonal_state(&diag, ratio.powi(dim as i32))?)
        }
        StateSpec::PhaseRandomized { nbar } => {
            let nbar = finite(nbar)?;
            if nbar < 0.0 {
                return Err(Error::InvalidParameter(format!("mean photon number {nbar} < 0")));
            }
            let diag = poisson_weights(nbar, dim);
            State::Mixed(diagonal_state(&diag, poisson_tail(nbar, dim))?)
        }
        StateSpec::SqueezedThermal { r, nbar } => {
            let (nbar, r) = (finite(nbar)?, finite(r)?);
            if nbar < 0.0 {
                return Err(Error::InvalidParameter(format!("thermal occupation {nbar} < 0")));
            }
            let (m, tail) = squeezed_thermal(r, nbar, dim);
            State::Mixed(DensityOperator::normalized(vec![dim], m, tail)?)
        }
        StateSpec::Tmsv { lambda } => {
            let lambda = finite(lambda)?;
            if !(0.0..1.0).contains(&lambda) {
                return Err(Error::InvalidParameter(format!("tmsv lambda {lambda} not in [0,1)")));
            }
            let norm = (1.0 - lambda * lambda).sqrt();
            let mut v = CVector::zeros(dim * dim);
            for n in 0..dim {
                v[n * dim + n] = C64::new(norm * lambda.powi(n as i32), 0.0);
            }
            let tail = lambda.powi(2 * dim as i32);
            State::Pure(FockVector::new(vec![dim, dim], v, tail)?)
        }
        StateSpec::Amplitudes { ref re, ref im, dims } => {
            if !im.is_empty() && im.len() != re.len() {
                return Err(Error::ShapeMismatch("re/im lengths differ".into()));
            }
            if re.len() != dim {
                return Err(Error::ShapeMismatch(format!("{} amplitudes for dim {dim}", re.len())));
            }
            let v = CVector::from_iterator(
                dim,
                (0..dim).map(|k| C64::new(re[k], im.get(k).copied().unwrap_or(0.0))),
            );
            let dims = match dims {
                Some((a, b)) => vec![a, b],
                None => vec![dim],
            };
            State::Pure(FockVector::new(dims, v, 0.0)?)
        }
    };
    let tail = state.tail_weight();
    if tail > cap {
        return Err(Error::DimensionTooSmall {
            dim,
            tail_weight: tail,
            cap,
        });
    }
    Ok(state)
}

fn finite(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidParameter(format!("non-finite parameter {x}")))
    }
}

fn diagonal_state(diag: &[f64], tail: f64) -> Result<DensityOperator> {
    let m = CMatrix::from_diagonal(&CVector::from_iterator(
        diag.len(),
        diag.iter().map(|&p| C64::new(p, 0.0)),
    ));
    DensityOperator::normalized(vec![diag.len()], m, tail)
}

/// Retained coherent-state amplitudes e^{−|α|²/2} αⁿ/√n! for n < dim, not renormalized.
pub fn coherent_amplitudes(alpha: C64, dim: usize) -> CVector {
    let x = alpha.norm_sqr();
    if x == 0.0 {
        let mut v = CVector::zeros(dim);
        v[0] = C64::new(1.0, 0.0);
        return v;
    }
    let ln_r = alpha.norm().ln();
    let phase = alpha.arg();
    let mut ln_fact = 0.0;
    CVector::from_iterator(
        dim,
        (0..dim).map(|n| {
            if n > 0 {
                ln_fact += (n as f64).ln();
            }
            let ln_mag = -0.5 * x + n as f64 * ln_r - 0.5 * ln_fact;
            C64::from_polar(ln_mag.exp(), n as f64 * phase)
        }),
    )
}

fn poisson_weights(x: f64, dim: usize) -> Vec<f64> {
    coherent_amplitudes(C64::new(x.sqrt(), 0.0), dim)
        .iter()
        .map(|c| c.norm_sqr())
        .collect()
}

/// Σ_{k ≥ d} e^{−x} x^k / k!, summed directly from the tail so that small
/// values keep full relative precision.
pub fn poisson_tail(x: f64, d: usize) -> f64 {
    poisson_tail_parity(x, d, None)
}

fn poisson_tail_parity(x: f64, d: usize, parity: Option<usize>) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut k = d;
    let mut term = (-x + k as f64 * x.ln() - ln_factorial(k)).exp();
    let mut sum = 0.0;
    loop {
        if parity.is_none_or(|p| k % 2 == p) {
            sum += term;
        }
        k += 1;
        term *= x / k as f64;
        if (k as f64 > x && term <= 1e-18 * sum.max(1e-300)) || term == 0.0 && k as f64 > x {
            break;
        }
        if k > d + 100_000 {
            break;
        }
    }
    sum
}

fn cat(alpha: f64, parity: usize, dim: usize) -> Result<State> {
    let x = alpha * alpha;
    let overlap = (-2.0 * x).exp();
    let norm_sq = if parity == 0 { 1.0 + overlap } else { 1.0 - overlap };
    if norm_sq <= 1e-300 {
        return Err(Error::InvalidParameter(format!(
            "odd cat with alpha {alpha} is the zero vector"
        )));
    }
    let base = coherent_amplitudes(C64::new(alpha, 0.0), dim);
    let v = CVector::from_iterator(dim, (0..dim).map(|n| if n % 2 == parity { base[n] } else { ZERO }));
    // |amp_k|² = 2 e^{−x} x^k / k! / norm_sq on the matching parity
    let tail = 2.0 * poisson_tail_parity(x, dim, Some(parity)) / norm_sq;
    Ok(State::Pure(FockVector::new(vec![dim], v, tail)?))
}

/// Amplitudes of e^{r(a² − a†²)/2}|0⟩ on `dim` levels and the analytic tail mass.
///
/// c₀ = (cosh r)^{-1/2}, c_{2n+2} = −tanh r · √((2n+1)/(2n+2)) · c_{2n}.
pub fn squeezed_vacuum_amplitudes(r: f64, dim: usize) -> (CVector, f64) {
    let t = r.tanh();
    let mut v = CVector::zeros(dim);
    let mut c = 1.0 / r.cosh().sqrt();
    let mut tail = 0.0;
    let mut n = 0usize;
    loop {
        let k = 2 * n;
        if k < dim {
            v[k] = C64::new(c, 0.0);
        } else {
            tail += c * c;
            if c * c < 1e-22 || n > 1_000_000 {
                break;
            }
        }
        c *= -t * ((2 * n + 1) as f64 / (2 * n + 2) as f64).sqrt();
        n += 1;
        if c == 0.0 && k >= dim {
            break;
        }
    }
    (v, tail)
}

/// Cropped S(r) τ_n̄ S(r)† on `dim` levels, computed in a larger working space.
/// Returns the unnormalized block and the mass missing from it.
pub fn squeezed_thermal(r: f64, nbar: f64, dim: usize) -> (CMatrix, f64) {
    let ratio = nbar / (nbar + 1.0);
    let thermal_cut = if ratio > 0.0 {
        ((1e-18f64).ln() / ratio.ln()).ceil() as usize
    } else {
        1
    };
    let spread = 1.5 * (2.0 * r.abs()).exp();
    let work = ((dim.max(thermal_cut) as f64 * spread) as usize + 60).max(2 * dim);
    let mut gen = DMatrix::<f64>::zeros(work, work);
    // r(a² − a†²)/2: ⟨n|a²|n+2⟩ = √((n+1)(n+2))
    for n in 0..work.saturating_sub(2) {
        let v = 0.5 * r * (((n + 1) * (n + 2)) as f64).sqrt();
        gen[(n, n + 2)] = v;
        gen[(n + 2, n)] = -v;
    }
    let s = gen.exp();
    let weights: Vec<f64> = (0..work).map(|n| ratio.powi(n as i32) / (nbar + 1.0)).collect();
    let mut out = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = 0.0;
            for (k, w) in weights.iter().enumerate() {
                if *w < 1e-300 {
                    break;
                }
                acc += s[(i, k)] * w * s[(j, k)];
            }
            out[(i, j)] = C64::new(acc, 0.0);
        }
    }
    let tail = (1.0 - out.trace().re).max(0.0);
    (out, tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::annihilation;

    fn pure(spec: StateSpec, dim: usize) -> FockVector {
        match make_state(&spec, dim).unwrap() {
            State::Pure(v) => v,
            _ => panic!("expected pure"),
        }
    }

    #[test]
    fn vacuum_from_coherent_zero() {
        let v = pure(StateSpec::Coherent { re: 0.0, im: 0.0 }, 10);
        assert_eq!(v.amplitudes()[0], C64::new(1.0, 0.0));
        assert!(v.amplitudes().iter().skip(1).all(|c| *c == ZERO));
    }

    #[test]
    fn fock_two_is_delta() {
        let v = pure(StateSpec::Fock { n: 2 }, 10);
        for k in 0..10 {
            let want = if k == 2 { 1.0 } else { 0.0 };
            assert_eq!(v.amplitudes()[k].re, want);
        }
    }

    #[test]
    fn fock_outside_truncation_rejected() {
        assert!(matches!(
            make_state(&StateSpec::Fock { n: 5 }, 5),
            Err(Error::DimensionTooSmall { .. })
        ));
    }

    #[test]
    fn squeezed_recursion_matches_matrix_exponential() {
        // oracle: exp of the truncated generator r(a² − a†²)/2 in a large space
        let r = 0.5;
        let big = 160;
        let a = annihilation(big);
        let a2 = &a * &a;
        let gen = (&a2 - a2.adjoint()).scale(0.5 * r);
        let column = gen.exp().column(0).into_owned();
        let v = pure(StateSpec::Squeezed { r }, 40);
        for k in 0..40 {
            assert!((v.amplitudes()[k] - column[k]).norm() < 1e-10, "k={k}");
        }
        // frozen: (cosh 0.5)^{-1/2} = 0.94171061583...
        assert!((v.amplitudes()[0].re - 0.941_710_615_831_675_8).abs() < 1e-12);
        assert!(v.amplitudes().iter().skip(1).step_by(2).all(|c| *c == ZERO));
    }

    #[test]
    fn squeezed_tail_matches_residual() {
        let (amps, tail) = squeezed_vacuum_amplitudes(1.0, 30);
        let kept = amps.norm_squared();
        assert!((kept + tail - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_randomized_matches_quadrature() {
        // oracle: trapezoidal θ-average of coherent projectors (exact for |m−n| < K)
        let dim = 30;
        let k = 256;
        let mut avg = CMatrix::zeros(dim, dim);
        for j in 0..k {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
            let c = coherent_amplitudes(C64::from_polar(1.0, theta), dim);
            avg += &c * c.adjoint();
        }
        avg.unscale_mut(k as f64);
        let rho = make_state(&StateSpec::PhaseRandomized { nbar: 1.0 }, dim)
            .unwrap()
            .density();
        for i in 0..dim {
            for j in 0..dim {
                assert!((rho.matrix()[(i, j)] - avg[(i, j)]).norm() < 1e-12);
            }
        }
        assert!((rho.matrix()[(1, 1)].re - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn coherent_tail_is_poisson() {
        let v = pure(StateSpec::Coherent { re: 1.5, im: 0.0 }, 30);
        let kept = coherent_amplitudes(C64::new(1.5, 0.0), 30).norm_squared();
        assert!((kept + v.tail_weight() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tail_cap_enforced() {
        assert!(matches!(
            make_state(&StateSpec::Coherent { re: 3.0, im: 0.0 }, 10),
            Err(Error::DimensionTooSmall { .. })
        ));
        assert!(make_state_with_cap(&StateSpec::Coherent { re: 3.0, im: 0.0 }, 10, 1.0).is_ok());
    }

    #[test]
    fn thermal_negative_rejected() {
        assert!(matches!(
            make_state(&StateSpec::Thermal { nbar: -0.1 }, 10),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn cat_parities() {
        let plus = pure(StateSpec::CatPlus { alpha: 1.0 }, 30);
        let minus = pure(StateSpec::CatMinus { alpha: 1.0 }, 30);
        assert!(plus.amplitudes().iter().skip(1).step_by(2).all(|c| *c == ZERO));
        assert!(minus.amplitudes().iter().step_by(2).all(|c| *c == ZERO));
        let ov = plus.amplitudes().dotc(minus.amplitudes()).norm();
        assert!(ov < 1e-15);
    }

    #[test]
    fn squeezed_thermal_reduces_to_components() {
        let (m, tail) = squeezed_thermal(0.0, 0.5, 20);
        let th = make_state(&StateSpec::Thermal { nbar: 0.5 }, 20).unwrap().density();
        assert!(tail < 1e-6);
        for i in 0..20 {
            assert!((m[(i, i)] - th.matrix()[(i, i)]).norm() < 1e-6);
        }
        let (m, _) = squeezed_thermal(0.5, 0.0, 30);
        let (v, _) = squeezed_vacuum_amplitudes(0.5, 30);
        let p = &v * v.adjoint();
        let worst = m.iter().zip(p.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-10);
    }

    #[test]
    fn tmsv_normalized() {
        let v = pure(StateSpec::Tmsv { lambda: 0.5 }, 20);
        assert_eq!(v.dims(), &[20, 20]);
        assert!((v.amplitudes()[0].re - 0.75f64.sqrt()).abs() < 1e-10);
    }
}
