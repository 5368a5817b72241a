//! Reference measurement models.
//!
//! Every entry measures its observable exactly; they differ in how the
//! object is left behind.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, conjugate, identity, max_abs_diff, tensor, ComplexMatrix, TOL_OP};
use crate::measurement::MeasurementModel;
use crate::quantum::{DensityOperator, Observable};
use crate::random::FixtureRng;

#[derive(Debug, Clone)]
pub struct ZooEntry {
    pub name: String,
    pub model: MeasurementModel,
    pub expected_projective: bool,
    pub notes: String,
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Cyclic shift `|j⟩ → |j+1 mod n⟩`.
fn cyclic_shift(n: usize) -> ComplexMatrix {
    let mut s = linalg::zeros(n);
    for j in 0..n {
        s[((j + 1) % n, j)] = one();
    }
    s
}

/// `|i⟩|j⟩ → |j⟩|i⟩` on `d ⊗ d`.
fn swap(d: usize) -> ComplexMatrix {
    let mut u = linalg::zeros(d * d);
    for i in 0..d {
        for j in 0..d {
            u[(j * d + i, i * d + j)] = one();
        }
    }
    u
}

/// `Σ_k E^A(a_k) ⊗ S^k` with `S` the cyclic shift on `pointer_dim` levels.
fn controlled_shift(a_obs: &Observable, pointer_dim: usize) -> ComplexMatrix {
    let shift = cyclic_shift(pointer_dim);
    let mut power = identity(pointer_dim);
    let mut u = linalg::zeros(a_obs.dim() * pointer_dim);
    for (_, e) in a_obs.spectrum() {
        u += tensor(e, &power);
        power = &shift * power;
    }
    u
}

/// Pointer observable labelling level `j` with the `(j mod n)`-th eigenvalue.
fn pointer_labels(eigenvalues: &[f64], pointer_dim: usize) -> Vec<f64> {
    (0..pointer_dim)
        .map(|j| eigenvalues[j % eigenvalues.len()])
        .collect()
}

/// Qubit object, qubit pointer at `|0⟩`, controlled-NOT with the object as
/// control, Pauli-Z probe. Measures Pauli-Z and leaves eigenstates alone.
pub fn cnot_qubit_model() -> ZooEntry {
    let mut u = linalg::zeros(4);
    for (from, to) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        u[(to, from)] = one();
    }
    let z = Observable::new(linalg::pauli_z()).expect("Pauli-Z is Hermitian");
    let model = MeasurementModel::new(DensityOperator::basis(2, 0), u, z.clone(), z)
        .expect("controlled-NOT model is well formed");
    ZooEntry {
        name: "cnot".into(),
        model,
        expected_projective: true,
        notes: "qubit pointer copied by controlled-NOT; Pauli-Z measured projectively".into(),
    }
}

/// Swaps the object with an apparatus prepared in `sigma_out`, then reads
/// the apparatus with the same observable. Statistics are those of `a_obs`
/// but the object always ends up in `sigma_out`.
pub fn swap_replace_model(sigma_out: &DensityOperator, a_obs: &Observable) -> Result<ZooEntry> {
    let d = a_obs.dim();
    if sigma_out.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "replacement state has dimension {}, observable has dimension {d}",
            sigma_out.dim()
        )));
    }
    let probe = a_obs.clone();
    let model = MeasurementModel::new(sigma_out.clone(), swap(d), probe, a_obs.clone())?;
    // ρ_a = σ_out for every input; that is E ρ E / P for all ρ only when each
    // E(a) is the rank-one projector σ_out itself.
    let expected_projective = a_obs
        .spectrum()
        .iter()
        .all(|(_, e)| max_abs_diff(e, sigma_out.matrix()) <= TOL_OP);
    Ok(ZooEntry {
        name: "swap-replace".into(),
        model,
        expected_projective,
        notes: "measure-and-replace: object swapped into the pointer; post-measurement state is the apparatus preparation".into(),
    })
}

/// Finite pointer model: `n` pointer levels for `n` distinct outcomes,
/// pointer at rest in `|0⟩`, shifted by `k` levels when the object is in
/// the `k`-th eigenspace.
pub fn controlled_shift_model(a_obs: &Observable) -> ZooEntry {
    let n = a_obs.num_outcomes();
    let eigenvalues = a_obs.eigenvalues();
    let probe = Observable::diagonal(&pointer_labels(&eigenvalues, n));
    let model = MeasurementModel::new(
        DensityOperator::basis(n, 0),
        controlled_shift(a_obs, n),
        probe,
        a_obs.clone(),
    )
    .expect("controlled-shift model is well formed");
    ZooEntry {
        name: "controlled-shift".into(),
        model,
        expected_projective: true,
        notes: format!(
            "{n}-level cyclic pointer; Lüders-type reduction within degenerate eigenspaces"
        ),
    }
}

/// Seeded indirect model on `object_dim ⊗ apparatus_dim`.
///
/// Starts from a controlled-shift pointer for an observable with random
/// eigenbasis and integer spectrum (possibly degenerate), rotates the
/// apparatus frame by a random unitary `W` (σ → WσW†, B → WBW†,
/// U → (1⊗W)U(1⊗W†)), then follows the interaction with a random object
/// unitary `R`. Both steps leave the effects unchanged, so the model still
/// measures `A`; `R` makes the reduction differ from the projection
/// postulate whenever `object_dim > 1`.
pub fn random_indirect_model(
    seed: u64,
    object_dim: usize,
    apparatus_dim: usize,
) -> Result<ZooEntry> {
    if object_dim == 0 || apparatus_dim == 0 {
        return Err(Error::InvalidArgument("dimensions must be positive".into()));
    }
    let mut rng = FixtureRng::new(seed);
    let max_outcomes = object_dim.min(apparatus_dim);
    let n = rng.between(max_outcomes.min(2), max_outcomes);

    let mut labels: Vec<f64> = (-3..=3).map(f64::from).collect();
    rng.shuffle(&mut labels);
    let mut labels = labels[..n].to_vec();
    labels.sort_by(f64::total_cmp);

    // Every outcome gets at least one eigenvector.
    let mut slots: Vec<usize> = (0..object_dim)
        .map(|i| if i < n { i } else { rng.below(n) })
        .collect();
    rng.shuffle(&mut slots);
    let diagonal: Vec<f64> = slots.iter().map(|&k| labels[k]).collect();
    let basis = rng.haar_unitary(object_dim);
    let a_obs = Observable::new(conjugate(&basis, &linalg::diag(&diagonal)))?;

    let frame = rng.haar_unitary(apparatus_dim);
    let kick = rng.haar_unitary(object_dim);
    let lifted_frame = tensor(&identity(object_dim), &frame);
    let u = tensor(&kick, &identity(apparatus_dim))
        * conjugate(&lifted_frame, &controlled_shift(&a_obs, apparatus_dim));
    let sigma = DensityOperator::new(conjugate(
        &frame,
        &linalg::basis_projector(apparatus_dim, 0),
    ))?;
    let probe = Observable::new(conjugate(
        &frame,
        &linalg::diag(&pointer_labels(&a_obs.eigenvalues(), apparatus_dim)),
    ))?;
    let model = MeasurementModel::new(sigma, u, probe, a_obs)?;
    Ok(ZooEntry {
        name: format!("random-indirect-{seed}"),
        model,
        expected_projective: object_dim == 1,
        notes: format!(
            "seed {seed}: {n}-outcome observable on dimension {object_dim}, rotated {apparatus_dim}-level pointer, random post-interaction kick"
        ),
    })
}

/// The named fixtures exported by the CLI. `seed` drives the random entries.
pub fn standard_zoo(seed: u64) -> Vec<ZooEntry> {
    let z = Observable::new(linalg::pauli_z()).expect("Hermitian");
    let plus = DensityOperator::pure(&[one(), one()]).expect("valid");
    let mut entries = vec![cnot_qubit_model()];

    let mut swap = swap_replace_model(&plus, &z).expect("matching dimensions");
    swap.name = "swap-plus".into();
    entries.push(swap);

    let mut qutrit = controlled_shift_model(&Observable::diagonal(&[0.0, 1.0, 2.0]));
    qutrit.name = "shift-qutrit".into();
    entries.push(qutrit);

    let mut degenerate = controlled_shift_model(&Observable::diagonal(&[0.0, 0.0, 1.0]));
    degenerate.name = "shift-degenerate".into();
    entries.push(degenerate);

    for (offset, (d, m)) in [(2, 2), (2, 3), (3, 3)].into_iter().enumerate() {
        let s = seed.wrapping_add(offset as u64);
        entries.push(random_indirect_model(s, d, m).expect("positive dimensions"));
    }
    entries
}
