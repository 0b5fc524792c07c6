//! States built from the Hilbert matrix: ω± on one mode and their maximally
//! correlated embeddings ρ± = Σ (ω±)_{nm} |nn⟩⟨mm| on two modes.
//!
//! Basis position `i` carries the label `n = i + 1`.

use super::DensityOperator;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use std::f64::consts::PI;

/// (H₋₁)_{n,m} = 1/(n − m) off the diagonal, 0 on it.
pub fn hilbert_matrix(dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::new(0.0, 0.0)
        } else {
            C64::new(1.0 / (i as f64 - j as f64), 0.0)
        }
    })
}

/// Diagonal of D = Σ 1/(√n ln(n+1)) |n⟩⟨n| for n = 1..=dim.
pub fn gallery_weights(dim: usize) -> Vec<f64> {
    (1..=dim)
        .map(|n| {
            let n = n as f64;
            1.0 / (n.sqrt() * (n + 1.0).ln())
        })
        .collect()
}

/// Σ_{n,m} ω_{nm} |nn⟩⟨mm| stored through its dim × dim coefficient block.
///
/// The full operator lives on dim² levels; only the span of {|nn⟩} is stored.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatedState {
    coefficients: CMatrix,
}

impl CorrelatedState {
    pub fn new(coefficients: CMatrix) -> Self {
        Self { coefficients }
    }

    pub fn local_dim(&self) -> usize {
        self.coefficients.nrows()
    }

    pub fn coefficients(&self) -> &CMatrix {
        &self.coefficients
    }

    /// ‖ρ^Γ‖₁ = Σ_{n,m} |ω_{nm}|: the partial transpose is Σ ω_{nm}|nm⟩⟨mn|,
    /// a direct sum of 1×1 blocks ω_{nn} and 2×2 blocks with eigenvalues ±|ω_{nm}|.
    pub fn partial_transpose_trace_norm(&self) -> f64 {
        self.coefficients.iter().map(|z| z.norm()).sum()
    }

    pub fn negativity(&self) -> f64 {
        0.5 * (self.partial_transpose_trace_norm() - 1.0)
    }

    /// Dense bipartite operator; only sensible for small `local_dim`.
    pub fn to_density(&self) -> Result<DensityOperator> {
        let d = self.local_dim();
        let mut m = CMatrix::zeros(d * d, d * d);
        for n in 0..d {
            for k in 0..d {
                m[(n * d + n, k * d + k)] = self.coefficients[(n, k)];
            }
        }
        DensityOperator::new(vec![d, d], m, 0.0)
    }
}

#[derive(Clone, Debug)]
pub struct Gallery {
    pub omega_plus: DensityOperator,
    pub omega_minus: DensityOperator,
    pub rho_plus: CorrelatedState,
    pub rho_minus: CorrelatedState,
    /// Diagonal of D²/c, so that ω₊ + ω₋ = 2·diag(weights).
    pub diagonal: Vec<f64>,
    /// Normalization c = Tr D² at this truncation.
    pub normalization: f64,
}

impl Gallery {
    /// Σ (D²/c)_{nn} |nn⟩⟨nn|, the separable average of ρ₊ and ρ₋.
    pub fn separable_average(&self) -> CorrelatedState {
        let d = self.diagonal.len();
        CorrelatedState::new(CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(self.diagonal[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }
}

/// ω± = D(𝟙 ± (i/π)H₋₁)D / c and their correlated embeddings.
pub fn hilbert_gallery(dim: usize) -> Result<Gallery> {
    if dim < 4 {
        return Err(Error::DimensionTooSmall {
            dim,
            tail_weight: 1.0,
            cap: 0.0,
        });
    }
    let w = gallery_weights(dim);
    let c: f64 = w.iter().map(|x| x * x).sum();
    let h = hilbert_matrix(dim);
    let build = |sign: f64| {
        CMatrix::from_fn(dim, dim, |i, j| {
            let inner = if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, sign / PI) * h[(i, j)]
            };
            inner * (w[i] * w[j] / c)
        })
    };
    let plus = build(1.0);
    let minus = build(-1.0);
    // D²/c is not normalized to one tail-free state; the truncated ω± have unit trace by construction
    let diagonal: Vec<f64> = w.iter().map(|x| x * x / c).collect();
    Ok(Gallery {
        omega_plus: DensityOperator::new(vec![dim], linalg::hermitize(&plus), 0.0)?,
        omega_minus: DensityOperator::new(vec![dim], linalg::hermitize(&minus), 0.0)?,
        rho_plus: CorrelatedState::new(plus),
        rho_minus: CorrelatedState::new(minus),
        diagonal,
        normalization: c,
    })
}
