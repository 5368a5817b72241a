//! Observables, density operators and their Born statistics.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    self, eigh, hermiticity_deviation, spectral_decompose, ComplexMatrix, SubsystemDims, TOL_EIG,
    TOL_OP, TOL_PROB,
};

/// A Hermitian operator together with its spectral resolution.
///
/// Eigenvalues closer than [`TOL_EIG`] are merged, and the spectrum is kept
/// strictly increasing. Outcomes of a measurement of the observable are
/// identified with these clustered eigenvalues.
#[derive(Debug, Clone)]
pub struct Observable {
    matrix: ComplexMatrix,
    spectrum: Vec<(f64, ComplexMatrix)>,
}

impl Observable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let spectrum = spectral_decompose(&matrix)?;
        Ok(Self { matrix, spectrum })
    }

    /// Observable with the given real diagonal in the computational basis.
    pub fn diagonal(values: &[f64]) -> Self {
        Self::new(linalg::diag(values)).expect("real diagonal matrices are Hermitian")
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn spectrum(&self) -> &[(f64, ComplexMatrix)] {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.spectrum.iter().map(|(v, _)| *v).collect()
    }

    pub fn num_outcomes(&self) -> usize {
        self.spectrum.len()
    }

    /// Index of the clustered eigenvalue matching `outcome`, if any.
    pub fn outcome_index(&self, outcome: f64) -> Option<usize> {
        self.spectrum
            .iter()
            .position(|(v, _)| (v - outcome).abs() <= TOL_EIG)
    }

    /// `E(a)`, the spectral projection for outcome `a`.
    pub fn projection(&self, outcome: f64) -> Result<&ComplexMatrix> {
        self.outcome_index(outcome)
            .map(|k| &self.spectrum[k].1)
            .ok_or(Error::UnknownOutcome { outcome })
    }

    /// Whether the clustered spectra agree value by value to [`TOL_EIG`].
    pub fn same_spectrum(&self, other: &Observable) -> bool {
        self.spectrum.len() == other.spectrum.len()
            && self
                .spectrum
                .iter()
                .zip(&other.spectrum)
                .all(|((a, _), (b, _))| (a - b).abs() <= TOL_EIG)
    }
}

/// A positive, unit-trace operator, optionally annotated with the tensor
/// factors of the space it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
    dims: Option<SubsystemDims>,
}

impl DensityOperator {
    /// Validates Hermiticity and positivity to [`TOL_OP`] and the trace to
    /// [`TOL_PROB`]. Small negative eigenvalues within tolerance are kept
    /// as they are.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidDensity(format!(
                "matrix is {}x{}, expected square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.nrows() == 0 {
            return Err(Error::InvalidDensity("empty matrix".into()));
        }
        let herm = hermiticity_deviation(&matrix);
        if herm > TOL_OP {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (max deviation {herm:.3e})"
            )));
        }
        let tr = linalg::trace(&matrix).re;
        if (tr - 1.0).abs() > TOL_PROB {
            return Err(Error::InvalidDensity(format!("trace is {tr}, expected 1")));
        }
        let (values, _) = eigh(&matrix, TOL_OP)?;
        if let Some(&min) = values.first() {
            if min < -TOL_OP {
                return Err(Error::InvalidDensity(format!(
                    "negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(Self { matrix, dims: None })
    }

    /// Divides by the trace before validating.
    pub fn normalized(matrix: ComplexMatrix) -> Result<Self> {
        let tr = linalg::trace(&matrix).re;
        if tr.abs() <= f64::MIN_POSITIVE {
            return Err(Error::InvalidDensity("zero trace".into()));
        }
        Self::new(matrix.unscale(tr))
    }

    /// `|ψ⟩⟨ψ|` for a state vector, normalized.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        Self::normalized(linalg::outer(psi))
    }

    /// `|k⟩⟨k|` in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        Self {
            matrix: linalg::basis_projector(dim, k),
            dims: None,
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: linalg::identity(dim).unscale(dim as f64),
            dims: None,
        }
    }

    /// Attaches a factor annotation; the factors must multiply to the dimension.
    pub fn with_dims(mut self, dims: SubsystemDims) -> Result<Self> {
        dims.check(self.dim())?;
        self.dims = Some(dims);
        Ok(self)
    }

    /// `self ⊗ other`, annotated with the concatenated factors.
    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        let mut factors = self.factors();
        factors.extend(other.factors());
        DensityOperator {
            matrix: linalg::tensor(&self.matrix, &other.matrix),
            dims: Some(SubsystemDims::new(factors).expect("positive factors")),
        }
    }

    fn factors(&self) -> Vec<usize> {
        match &self.dims {
            Some(d) => d.factors().to_vec(),
            None => vec![self.dim()],
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dims(&self) -> Option<&SubsystemDims> {
        self.dims.as_ref()
    }
}

/// Probabilities of the outcomes of one observable, sorted by outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    entries: Vec<(f64, f64)>,
}

impl OutcomeDistribution {
    pub fn new(mut entries: Vec<(f64, f64)>) -> Result<Self> {
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(&(a, p)) = entries
            .iter()
            .find(|(_, p)| !(-TOL_PROB..=1.0 + TOL_PROB).contains(p))
        {
            return Err(Error::InvalidArgument(format!(
                "probability {p} of outcome {a} outside [0, 1]"
            )));
        }
        let total: f64 = entries.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > TOL_PROB {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn outcomes(&self) -> Vec<f64> {
        self.entries.iter().map(|(a, _)| *a).collect()
    }

    pub fn probability(&self, outcome: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|(a, _)| (a - outcome).abs() <= TOL_EIG)
            .map(|(_, p)| *p)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    /// Largest per-outcome difference, aligning outcomes by sorted order.
    /// Distributions with a different number of outcomes are infinitely far
    /// apart.
    pub fn max_abs_diff(&self, other: &OutcomeDistribution) -> f64 {
        if self.entries.len() != other.entries.len() {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|((_, p), (_, q))| (p - q).abs())
            .fold(0.0, f64::max)
    }

    pub fn total_variation(&self, other: &OutcomeDistribution) -> f64 {
        if self.entries.len() != other.entries.len() {
            return f64::INFINITY;
        }
        0.5 * self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|((_, p), (_, q))| (p - q).abs())
            .sum::<f64>()
    }
}

impl fmt::Display for OutcomeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (a, p)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}: {p:.15e}")?;
        }
        write!(f, "}}")
    }
}

fn check_dim(what: &str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch(format!(
            "{what}: expected dimension {expected}, got {actual}"
        )));
    }
    Ok(())
}

/// `Re Tr[a · b]` without forming the product.
pub(crate) fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            sum += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    sum
}

/// `P(a) = Tr[E(a) ρ]` for every eigenvalue `a`.
pub fn born_distribution(obs: &Observable, rho: &DensityOperator) -> Result<OutcomeDistribution> {
    check_dim("born_distribution", obs.dim(), rho.dim())?;
    let entries = obs
        .spectrum()
        .iter()
        .map(|(a, e)| (*a, trace_product(e, rho.matrix())))
        .collect();
    OutcomeDistribution::new(entries)
}

/// Schrödinger evolution `e^{-ihτ} ρ e^{ihτ}`.
pub fn evolve(rho: &DensityOperator, h: &ComplexMatrix, tau: f64) -> Result<DensityOperator> {
    if tau < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "evolution time must be non-negative, got {tau}"
        )));
    }
    check_dim("evolve", rho.dim(), h.nrows())?;
    let u = linalg::herm_expm(h, tau)?;
    Ok(DensityOperator {
        matrix: linalg::conjugate(&u, rho.matrix()),
        dims: rho.dims.clone(),
    })
}

/// Distribution of `x` after the state has evolved under `h` for `tau`.
pub fn rule1_distribution(
    rho: &DensityOperator,
    h: &ComplexMatrix,
    x: &Observable,
    tau: f64,
) -> Result<OutcomeDistribution> {
    born_distribution(x, &evolve(rho, h, tau)?)
}

/// Reduced state on the factors in `keep`. Requires a factor annotation.
pub fn reduced_state(rho: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    let dims = rho
        .dims()
        .ok_or_else(|| Error::InvalidSubsystems("state carries no subsystem annotation".into()))?;
    let matrix = linalg::partial_trace(rho.matrix(), dims, keep)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let factors = kept.iter().map(|&k| dims.factors()[k]).collect();
    let reduced = DensityOperator::new(matrix)?;
    if kept.len() > 1 {
        reduced.with_dims(SubsystemDims::new(factors)?)
    } else {
        Ok(reduced)
    }
}
