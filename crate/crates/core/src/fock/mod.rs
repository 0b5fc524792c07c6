//! Truncated Fock-space states and operators.
//!
//! A single mode is truncated to the basis `|0⟩ … |dim-1⟩`; two modes use the
//! product basis with row-major index `i * dim_b + j`. Every constructor
//! renormalizes after truncation and records the discarded probability mass
//! as `tail_weight`.

mod gallery;
mod ops;
mod spec;
mod states;

pub use gallery::{gallery_weights, hilbert_gallery, hilbert_matrix, CorrelatedState, Gallery};
pub(crate) use ops::schmidt_of_amplitudes;
pub use ops::{
    apply_channel, apply_subchannel, dephase_diag, displacement_operator, kraus_completeness,
    normal_ordered_displacement, partial_transpose, schmidt_decompose, tensor, trace_norm, SchmidtDecomposition,
};
pub use spec::{StateRequest, StateSpec};
pub use states::{
    coherent_amplitudes, make_state, make_state_with_cap, poisson_tail, squeezed_thermal, squeezed_vacuum_amplitudes,
    DEFAULT_TAIL_CAP,
};

use crate::error::{Error, Result};
use crate::linalg::{hermiticity_error, min_eigenvalue, projector, CMatrix, CVector, C64};
use serde::{Deserialize, Serialize};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-9;

/// A normalized pure state in a truncated basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    dims: Vec<usize>,
    amplitudes: CVector,
    tail_weight: f64,
}

impl FockVector {
    /// Builds a vector from retained amplitudes, renormalizing them. `tail_weight`
    /// is the mass that was discarded before renormalization.
    pub fn new(dims: Vec<usize>, amplitudes: CVector, tail_weight: f64) -> Result<Self> {
        check_dims(&dims)?;
        let total: usize = dims.iter().product();
        if amplitudes.len() != total {
            return Err(Error::ShapeMismatch(format!(
                "{} amplitudes for dims {:?}",
                amplitudes.len(),
                dims
            )));
        }
        if !(tail_weight >= 0.0) {
            return Err(Error::InvalidParameter(format!("tail weight {tail_weight}")));
        }
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter("zero or non-finite amplitudes".into()));
        }
        Ok(Self {
            dims,
            amplitudes: amplitudes.unscale(norm),
            tail_weight,
        })
    }

    pub fn single(amplitudes: CVector) -> Result<Self> {
        Self::new(vec![amplitudes.len()], amplitudes, 0.0)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total dimension of the (product) space.
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn tail_weight(&self) -> f64 {
        self.tail_weight
    }

    pub fn is_bipartite(&self) -> bool {
        self.dims.len() == 2
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator {
            dims: self.dims.clone(),
            matrix: projector(&self.amplitudes),
            tail_weight: self.tail_weight,
        }
    }
}

/// A density matrix on one mode or on two modes.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    dims: Vec<usize>,
    matrix: CMatrix,
    tail_weight: f64,
}

impl DensityOperator {
    /// Validates Hermiticity, positivity and unit trace.
    pub fn new(dims: Vec<usize>, matrix: CMatrix, tail_weight: f64) -> Result<Self> {
        check_dims(&dims)?;
        let total: usize = dims.iter().product();
        if matrix.nrows() != total || matrix.ncols() != total {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix for dims {:?}",
                matrix.nrows(),
                matrix.ncols(),
                dims
            )));
        }
        let herm = hermiticity_error(&matrix);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian ({herm:e})")));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {trace}")));
        }
        let min = min_eigenvalue(&matrix);
        if min < -PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        Ok(Self {
            dims,
            matrix,
            tail_weight,
        })
    }

    /// Divides by the trace, adds the missing trace to `tail_weight`, then validates.
    pub fn normalized(dims: Vec<usize>, matrix: CMatrix, tail_weight: f64) -> Result<Self> {
        let trace = matrix.trace().re;
        if !(trace > 0.0) {
            return Err(Error::InvalidState(format!("trace {trace}")));
        }
        Self::new(dims, matrix.unscale(trace), tail_weight)
    }

    pub fn single(matrix: CMatrix) -> Result<Self> {
        let n = matrix.nrows();
        Self::new(vec![n], matrix, 0.0)
    }

    pub(crate) fn from_parts_unchecked(dims: Vec<usize>, matrix: CMatrix, tail_weight: f64) -> Self {
        Self {
            dims,
            matrix,
            tail_weight,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn tail_weight(&self) -> f64 {
        self.tail_weight
    }

    pub fn is_bipartite(&self) -> bool {
        self.dims.len() == 2
    }

    /// Conjugation by e^{iθn̂} on a single mode.
    pub fn phase_rotated(&self, theta: f64) -> Self {
        let n = self.dim();
        let mut m = self.matrix.clone();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] *= C64::from_polar(1.0, theta * (i as f64 - j as f64));
            }
        }
        Self::from_parts_unchecked(self.dims.clone(), m, self.tail_weight)
    }
}

/// Either a pure or a mixed state, as produced by [`make_state`].
#[derive(Clone, Debug, PartialEq)]
pub enum State {
    Pure(FockVector),
    Mixed(DensityOperator),
}

impl State {
    pub fn density(&self) -> DensityOperator {
        match self {
            State::Pure(v) => v.to_density(),
            State::Mixed(d) => d.clone(),
        }
    }

    pub fn pure(&self) -> Option<&FockVector> {
        match self {
            State::Pure(v) => Some(v),
            State::Mixed(_) => None,
        }
    }

    pub fn tail_weight(&self) -> f64 {
        match self {
            State::Pure(v) => v.tail_weight(),
            State::Mixed(d) => d.tail_weight(),
        }
    }

    pub fn dims(&self) -> &[usize] {
        match self {
            State::Pure(v) => v.dims(),
            State::Mixed(d) => d.dims(),
        }
    }
}

/// Serializable summary of a truncation used in output records.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TruncationInfo {
    pub dims: Vec<usize>,
    pub tail_weight: f64,
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.len() > 2 || dims.contains(&0) {
        return Err(Error::ShapeMismatch(format!("unsupported dims {dims:?}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;

    #[test]
    fn fock_vector_renormalizes() {
        let v = CVector::from_vec(vec![ONE, ONE]);
        let f = FockVector::single(v).unwrap();
        assert!((f.amplitudes().norm_squared() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn density_rejects_bad_trace() {
        let m = CMatrix::identity(2, 2);
        assert!(DensityOperator::single(m).is_err());
    }

    #[test]
    fn density_rejects_negative() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(matches!(DensityOperator::single(m), Err(Error::NotPsd(_))));
    }

    #[test]
    fn shape_mismatch_reported() {
        let v = CVector::from_vec(vec![ONE, ONE, ONE]);
        assert!(matches!(
            FockVector::new(vec![2, 2], v, 0.0),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
