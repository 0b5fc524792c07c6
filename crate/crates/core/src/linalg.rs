//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted ascending.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(m: &CMatrix) -> Self {
        let n = m.nrows();
        let sym = SymmetricEigen::new(hermitize(m));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            sym.eigenvalues[a]
                .partial_cmp(&sym.eigenvalues[b])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let values = order.iter().map(|&i| sym.eigenvalues[i]).collect();
        let mut vectors = CMatrix::zeros(n, n);
        for (k, &i) in order.iter().enumerate() {
            vectors.set_column(k, &sym.eigenvectors.column(i));
        }
        Self { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }
}

/// (M + M†)/2.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Largest entry-wise deviation |M - M†|.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    HermitianEigen::new(m).min()
}

/// Real part of ⟨v|M|v⟩.
pub fn expectation(m: &CMatrix, v: &CVector) -> f64 {
    v.dotc(&(m * v)).re
}

/// Tr[A B] without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    if hermiticity_error(m) < 1e-13 {
        return HermitianEigen::new(m).values.iter().map(|v| v.abs()).sum();
    }
    Svd::new(m).values.iter().sum()
}

/// Thin singular value decomposition m = U diag(values) V†, values descending.
///
/// Computed with faer: nalgebra's complex SVD can return inaccurate factors
/// for rank-deficient input.
pub struct Svd {
    pub u: CMatrix,
    pub values: Vec<f64>,
    pub v: CMatrix,
}

impl Svd {
    pub fn new(m: &CMatrix) -> Self {
        let (r, c) = m.shape();
        let k = r.min(c);
        if k == 0 {
            return Self {
                u: CMatrix::zeros(r, 0),
                values: Vec::new(),
                v: CMatrix::zeros(c, 0),
            };
        }
        let f = faer::Mat::<C64>::from_fn(r, c, |i, j| m[(i, j)]);
        let svd = f.thin_svd().expect("SVD of a finite matrix converges");
        let (fu, fs, fv) = (svd.U(), svd.S().column_vector(), svd.V());
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| fs[b].re.total_cmp(&fs[a].re).then(a.cmp(&b)));
        Self {
            u: CMatrix::from_fn(r, k, |i, j| fu[(i, order[j])]),
            values: order.iter().map(|&j| fs[j].re).collect(),
            v: CMatrix::from_fn(c, k, |i, j| fv[(i, order[j])]),
        }
    }
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for i in 0..a.len() {
        for k in 0..b.len() {
            out[i * b.len() + k] = a[i] * b[k];
        }
    }
    out
}

pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Largest entry-wise absolute difference.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// ln n! by direct summation; exact enough for the sizes used here.
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

pub fn real_matrix(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

/// Annihilation operator on a truncation of size `dim`.
pub fn annihilation(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}
