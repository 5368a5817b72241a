//! Dense complex linear algebra on small Hilbert spaces.
//!
//! Every operator in the crate is a square [`ComplexMatrix`]. Composite
//! spaces use the left-factor-major Kronecker convention: the entry
//! `((i1, i2), (j1, j2))` of `a ⊗ b` is `a[i1, j1] * b[i2, j2]`, so the
//! leftmost factor is the slowest-varying index.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Operator comparisons, max-entry norm.
pub const TOL_OP: f64 = 1e-9;
/// Absolute gap below which eigenvalues are merged into one cluster.
pub const TOL_EIG: f64 = 1e-8;
/// Probability comparisons.
pub const TOL_PROB: f64 = 1e-10;

/// Dimensions of the tensor factors of a composite space, left to right.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsystemDims {
    factors: Vec<usize>,
}

impl SubsystemDims {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidSubsystems("no factors given".into()));
        }
        if factors.contains(&0) {
            return Err(Error::InvalidSubsystems(format!(
                "factor dimensions must be positive, got {factors:?}"
            )));
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Dimension of the full product space.
    pub fn total(&self) -> usize {
        self.factors.iter().product()
    }

    /// Fails unless `dim` is the product of the factors.
    pub fn check(&self, dim: usize) -> Result<()> {
        if self.total() != dim {
            return Err(Error::DimensionMismatch(format!(
                "factors {:?} give dimension {}, matrix has dimension {dim}",
                self.factors,
                self.total()
            )));
        }
        Ok(())
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.factors.len()];
        for k in (0..self.factors.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.factors[k + 1];
        }
        strides
    }

    /// Linear offsets into the full space of every multi-index over the
    /// factors at `positions`, enumerated left-factor-major.
    fn offsets(&self, positions: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut out = vec![0usize];
        for &p in positions {
            let mut next = Vec::with_capacity(out.len() * self.factors[p]);
            for &base in &out {
                for i in 0..self.factors[p] {
                    next.push(base + i * strides[p]);
                }
            }
            out = next;
        }
        out
    }
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn zeros(dim: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(dim, dim)
}

/// Builds a real diagonal matrix.
pub fn diag(values: &[f64]) -> ComplexMatrix {
    let mut m = zeros(values.len());
    for (i, &v) in values.iter().enumerate() {
        m[(i, i)] = Complex64::new(v, 0.0);
    }
    m
}

pub fn pauli_x() -> ComplexMatrix {
    let (o, l) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    ComplexMatrix::from_row_slice(2, 2, &[o, l, l, o])
}

pub fn pauli_y() -> ComplexMatrix {
    let (o, i) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0));
    ComplexMatrix::from_row_slice(2, 2, &[o, -i, i, o])
}

pub fn pauli_z() -> ComplexMatrix {
    diag(&[1.0, -1.0])
}

/// `|v⟩⟨v|` for a (not necessarily normalized) vector.
pub fn outer(v: &[Complex64]) -> ComplexMatrix {
    let n = v.len();
    ComplexMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj())
}

/// Projector onto the computational basis vector `|k⟩` in dimension `dim`.
pub fn basis_projector(dim: usize, k: usize) -> ComplexMatrix {
    let mut m = zeros(dim);
    m[(k, k)] = Complex64::new(1.0, 0.0);
    m
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `u · m · u†`
pub fn conjugate(u: &ComplexMatrix, m: &ComplexMatrix) -> ComplexMatrix {
    u * m * u.adjoint()
}

/// Max-entry norm `max |m_ij|`.
pub fn max_norm(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Max-entry distance. Matrices of different shape are infinitely far apart.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermiticity_deviation(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(m, &m.adjoint())
}

pub fn unitarity_deviation(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(m.adjoint() * m), &identity(m.nrows()))
}

pub fn is_hermitian(m: &ComplexMatrix, tol: f64) -> bool {
    hermiticity_deviation(m) <= tol
}

pub fn is_unitary(m: &ComplexMatrix, tol: f64) -> bool {
    unitarity_deviation(m) <= tol
}

pub fn is_positive_semidefinite(m: &ComplexMatrix, tol: f64) -> bool {
    match eigh(m, tol) {
        Ok((values, _)) => values.first().is_none_or(|&v| v >= -tol),
        Err(_) => false,
    }
}

pub fn is_projection(m: &ComplexMatrix, tol: f64) -> bool {
    is_hermitian(m, tol) && max_abs_diff(&(m * m), m) <= tol
}

/// Kronecker product `a ⊗ b`, left-factor-major.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Kronecker product of all factors, left to right.
pub fn tensor_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    factors.iter().fold(identity(1), |acc, f| tensor(&acc, f))
}

fn check_square(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Traces out every factor not listed in `keep`.
///
/// `keep` must name a nonempty proper subset of the factors. The kept
/// factors stay in their original left-to-right order.
pub fn partial_trace(
    m: &ComplexMatrix,
    dims: &SubsystemDims,
    keep: &[usize],
) -> Result<ComplexMatrix> {
    check_square(m)?;
    dims.check(m.nrows())?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.is_empty() || kept.len() >= dims.len() {
        return Err(Error::InvalidSubsystems(format!(
            "keep {keep:?} is not a nonempty proper subset of {} factors",
            dims.len()
        )));
    }
    if let Some(&bad) = kept.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::InvalidSubsystems(format!(
            "factor index {bad} out of range for {} factors",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !kept.contains(k)).collect();
    let kept_off = dims.offsets(&kept);
    let traced_off = dims.offsets(&traced);

    let n = kept_off.len();
    Ok(ComplexMatrix::from_fn(n, n, |r, c| {
        traced_off
            .iter()
            .map(|&t| m[(kept_off[r] + t, kept_off[c] + t)])
            .sum()
    }))
}

fn permutation_map(dims: &SubsystemDims, perm: &[usize]) -> Result<Vec<usize>> {
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len() {
        return Err(Error::InvalidSubsystems(format!(
            "permutation {perm:?} has wrong length for {} factors",
            dims.len()
        )));
    }
    for &p in perm {
        if p >= dims.len() || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidSubsystems(format!(
                "{perm:?} is not a permutation"
            )));
        }
    }
    // Enumerating the input offsets in the new factor order gives, for each
    // output index, the input index it reads from.
    Ok(dims.offsets(perm))
}

/// Reorders tensor factors: factor `k` of the result is factor `perm[k]` of
/// the input. The result lives on `dims` permuted the same way.
pub fn permute_factors(
    m: &ComplexMatrix,
    dims: &SubsystemDims,
    perm: &[usize],
) -> Result<ComplexMatrix> {
    check_square(m)?;
    dims.check(m.nrows())?;
    let map = permutation_map(dims, perm)?;
    let n = map.len();
    Ok(ComplexMatrix::from_fn(n, n, |r, c| m[(map[r], map[c])]))
}

/// The unitary `P` with `P · m · P† = permute_factors(m, dims, perm)`.
pub fn permutation_operator(dims: &SubsystemDims, perm: &[usize]) -> Result<ComplexMatrix> {
    let map = permutation_map(dims, perm)?;
    let n = map.len();
    let mut p = zeros(n);
    for (row, &col) in map.iter().enumerate() {
        p[(row, col)] = Complex64::new(1.0, 0.0);
    }
    Ok(p)
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns.
pub fn eigh(a: &ComplexMatrix, tol: f64) -> Result<(Vec<f64>, ComplexMatrix)> {
    check_square(a)?;
    let deviation = hermiticity_deviation(a);
    if deviation > tol {
        return Err(Error::NotHermitian { deviation });
    }
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), zeros(0)));
    }
    let symmetrized = (a + a.adjoint()).scale(0.5);
    let eig = symmetrized.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Spectral decomposition `a = Σ λ E(λ)` with eigenvalues merged when
/// consecutive sorted values are within [`TOL_EIG`]. Each cluster is
/// represented by its mean; the result is strictly increasing in λ.
pub fn spectral_decompose(a: &ComplexMatrix) -> Result<Vec<(f64, ComplexMatrix)>> {
    let (values, vectors) = eigh(a, TOL_OP)?;
    let n = values.len();
    let mut out: Vec<(f64, ComplexMatrix)> = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] <= TOL_EIG {
            end += 1;
        }
        let cluster = vectors.columns(start, end - start);
        let projection = cluster * cluster.adjoint();
        let mean = values[start..end].iter().sum::<f64>() / (end - start) as f64;
        out.push((mean, projection));
        start = end;
    }
    Ok(out)
}

/// `e^{-i h τ}` for Hermitian `h`, with ħ = 1.
pub fn herm_expm(h: &ComplexMatrix, tau: f64) -> Result<ComplexMatrix> {
    let (values, vectors) = eigh(h, TOL_OP)?;
    let scaled = ComplexMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| {
        vectors[(r, c)] * Complex64::from_polar(1.0, -values[c] * tau)
    });
    Ok(scaled * vectors.adjoint())
}
