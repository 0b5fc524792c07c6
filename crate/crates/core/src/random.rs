//! Seeded random instances: states, channels and measurements.
//!
//! Every generator takes a `(seed, stream)` pair so that instance `k` of a
//! batch is independent of how many other instances are drawn, which keeps
//! parallel searches reproducible.

use crate::linalg::{self, CMatrix, CVector, HermitianEigen, C64};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Entries i.i.d. standard complex normal.
pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-random unit vector.
pub fn unit_vector(rng: &mut impl Rng, dim: usize) -> CVector {
    CVector::from_fn(dim, |_, _| gaussian(rng)).normalize()
}

/// Trace-one G G† with G of shape dim × rank.
pub fn density_matrix(rng: &mut impl Rng, dim: usize, rank: usize) -> CMatrix {
    let g = gaussian_matrix(rng, dim, rank.max(1));
    let rho = &g * g.adjoint();
    let t = rho.trace().re;
    linalg::hermitize(&rho.unscale(t))
}

/// Unitary from the QR factor of a Gaussian matrix.
pub fn unitary(rng: &mut impl Rng, dim: usize) -> CMatrix {
    gaussian_matrix(rng, dim, dim).qr().q()
}

/// Kraus operators of a random channel, cut from a Haar-like isometry.
pub fn kraus_channel(rng: &mut impl Rng, dim: usize, count: usize) -> Vec<CMatrix> {
    let count = count.max(1);
    let q = gaussian_matrix(rng, count * dim, dim).qr().q();
    (0..count).map(|k| q.rows(k * dim, dim).into_owned()).collect()
}

/// Kraus operators that map diagonal states to diagonal states: each
/// operator is a weighted permutation, |π(n)⟩⟨n| with amplitude a_kn.
pub fn incoherent_channel(rng: &mut impl Rng, dim: usize, count: usize) -> Vec<CMatrix> {
    let count = count.max(1);
    let perms: Vec<Vec<usize>> = (0..count)
        .map(|_| {
            let mut p: Vec<usize> = (0..dim).collect();
            p.shuffle(rng);
            p
        })
        .collect();
    let mut ops = vec![CMatrix::zeros(dim, dim); count];
    for n in 0..dim {
        let amps: Vec<C64> = (0..count).map(|_| gaussian(rng)).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for (k, a) in amps.into_iter().enumerate() {
            ops[k][(perms[k][n], n)] = a / norm;
        }
    }
    ops
}

/// POVM with `outcomes` full-rank elements, normalized as S^{-1/2} Gᵢ S^{-1/2}.
pub fn povm(rng: &mut impl Rng, dim: usize, outcomes: usize) -> Vec<CMatrix> {
    let raw: Vec<CMatrix> = (0..outcomes.max(1))
        .map(|_| {
            let g = gaussian_matrix(rng, dim, dim);
            &g * g.adjoint()
        })
        .collect();
    let total = raw.iter().fold(CMatrix::zeros(dim, dim), |acc, g| acc + g);
    let eig = HermitianEigen::new(&total);
    let mut inv_sqrt = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        let v = eig.vector(k);
        inv_sqrt += linalg::projector(&v).unscale(eig.values[k].sqrt());
    }
    let mut elements: Vec<CMatrix> = raw
        .iter()
        .map(|g| linalg::hermitize(&(&inv_sqrt * g * &inv_sqrt)))
        .collect();
    // absorb rounding into the last element so the sum is the identity
    let last = elements.len() - 1;
    let others = elements[..last].iter().fold(CMatrix::zeros(dim, dim), |acc, m| acc + m);
    elements[last] = linalg::hermitize(&(CMatrix::identity(dim, dim) - others));
    elements
}

/// Probability vector with entries bounded away from zero.
pub fn probabilities(rng: &mut impl Rng, count: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..count.max(1)).map(|_| 0.1 + rng.gen::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let head: f64 = p[..p.len() - 1].iter().sum();
    *p.last_mut().expect("nonempty") = 1.0 - head;
    p
}

/// Descending Schmidt coefficients of a random pure state of the given rank.
pub fn schmidt_coefficients(rng: &mut impl Rng, rank: usize) -> Vec<f64> {
    let mut mu: Vec<f64> = unit_vector(rng, rank.max(1)).iter().map(|z| z.norm()).collect();
    mu.sort_by(|a, b| b.total_cmp(a));
    mu
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::kraus_completeness;

    #[test]
    fn streams_are_independent_of_batch_size() {
        let a = unit_vector(&mut rng(7, 3), 5);
        let mut r = rng(7, 3);
        assert_eq!(unit_vector(&mut r, 5), a);
        assert_ne!(unit_vector(&mut rng(7, 4), 5), a);
    }

    #[test]
    fn channels_are_trace_preserving() {
        let mut r = rng(1, 0);
        for ops in [kraus_channel(&mut r, 4, 3), incoherent_channel(&mut r, 5, 2)] {
            let d = ops[0].nrows();
            let dev = linalg::max_abs_diff(&kraus_completeness(&ops), &CMatrix::identity(d, d));
            assert!(dev < 1e-12, "{dev}");
        }
    }

    #[test]
    fn incoherent_channel_keeps_diagonal_states_diagonal() {
        let mut r = rng(2, 0);
        let ops = incoherent_channel(&mut r, 6, 3);
        let diag = CMatrix::from_diagonal(&CVector::from_fn(6, |i, _| C64::new(i as f64 + 1.0, 0.0)));
        let out = crate::fock::apply_subchannel(&diag, &ops).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert!(out[(i, j)].norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn povm_sums_to_identity() {
        let m = povm(&mut rng(3, 0), 4, 3);
        let sum = m.iter().fold(CMatrix::zeros(4, 4), |acc, x| acc + x);
        assert!(linalg::max_abs_diff(&sum, &CMatrix::identity(4, 4)) < 1e-12);
        assert!(m.iter().all(|x| linalg::min_eigenvalue(x) > -1e-12));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let p = probabilities(&mut rng(4, 0), 5);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p.iter().all(|&x| x > 0.0));
    }
}
