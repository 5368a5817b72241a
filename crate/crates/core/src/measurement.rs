//! Indirect measurement models `(σ, U, B)` and the state changes they induce.
//!
//! The object lives on the left factor and the apparatus on the right:
//! composite operators are `object ⊗ apparatus`. `U` is the interaction
//! already integrated over the measuring interval; the probe `B` is read
//! right after it. Outcome `a` of the measured observable `A` is identified
//! with the probe eigenvalue at the same position in the sorted spectrum.

use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::linalg::{
    self, conjugate, identity, max_abs_diff, partial_trace, tensor, unitarity_deviation,
    ComplexMatrix, SubsystemDims, TOL_OP, TOL_PROB,
};
use crate::quantum::{trace_product, DensityOperator, Observable, OutcomeDistribution};
use crate::random::FixtureRng;

/// Number of seeded random states added to the basis states when a claim
/// must hold for every input state.
pub const RANDOM_SPANNING_STATES: usize = 50;
/// Seed of those random states.
pub const SPANNING_SEED: u64 = 0x5eed_0001;

/// An apparatus `(σ, U, B)` together with the observable `A` it claims to
/// measure and the object's free Hamiltonian.
#[derive(Debug, Clone)]
pub struct MeasurementModel {
    object_dim: usize,
    apparatus_dim: usize,
    sigma: DensityOperator,
    u: ComplexMatrix,
    probe: Observable,
    measured: Observable,
    object_hamiltonian: ComplexMatrix,
}

/// Result of comparing the effects with the spectral projections of `A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuresReport {
    pub passes: bool,
    pub max_deviation: f64,
}

/// A state and outcome for which the reduction differs from `E ρ E / P`.
#[derive(Debug, Clone)]
pub struct PostulateWitness {
    pub input: DensityOperator,
    pub outcome: f64,
    pub probability: f64,
    pub reduced: DensityOperator,
    pub predicted: DensityOperator,
    pub deviation: f64,
}

impl MeasurementModel {
    /// Builds a model with zero object Hamiltonian.
    ///
    /// Fails if `u` is not unitary on object ⊗ apparatus, if the dimensions
    /// disagree, or if `probe` and `measured` have different spectra.
    pub fn new(
        sigma: DensityOperator,
        u: ComplexMatrix,
        probe: Observable,
        measured: Observable,
    ) -> Result<Self> {
        let object_dim = measured.dim();
        let apparatus_dim = sigma.dim();
        if probe.dim() != apparatus_dim {
            return Err(Error::DimensionMismatch(format!(
                "probe has dimension {}, apparatus state has dimension {apparatus_dim}",
                probe.dim()
            )));
        }
        if !u.is_square() || u.nrows() != object_dim * apparatus_dim {
            return Err(Error::DimensionMismatch(format!(
                "interaction is {}x{}, expected {n}x{n}",
                u.nrows(),
                u.ncols(),
                n = object_dim * apparatus_dim
            )));
        }
        let deviation = unitarity_deviation(&u);
        if deviation > TOL_OP {
            return Err(Error::NotUnitary { deviation });
        }
        if !probe.same_spectrum(&measured) {
            return Err(Error::SpectrumMismatch(format!(
                "probe eigenvalues {:?}, measured eigenvalues {:?}",
                probe.eigenvalues(),
                measured.eigenvalues()
            )));
        }
        let sigma = sigma.with_dims(SubsystemDims::new(vec![apparatus_dim])?)?;
        Ok(Self {
            object_dim,
            apparatus_dim,
            sigma,
            u,
            probe,
            measured,
            object_hamiltonian: linalg::zeros(object_dim),
        })
    }

    pub fn with_hamiltonian(mut self, h: ComplexMatrix) -> Result<Self> {
        if h.nrows() != self.object_dim || !h.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "object Hamiltonian is {}x{}, expected {n}x{n}",
                h.nrows(),
                h.ncols(),
                n = self.object_dim
            )));
        }
        let deviation = linalg::hermiticity_deviation(&h);
        if deviation > TOL_OP {
            return Err(Error::NotHermitian { deviation });
        }
        self.object_hamiltonian = h;
        Ok(self)
    }

    pub fn object_dim(&self) -> usize {
        self.object_dim
    }

    pub fn apparatus_dim(&self) -> usize {
        self.apparatus_dim
    }

    pub fn sigma(&self) -> &DensityOperator {
        &self.sigma
    }

    pub fn u(&self) -> &ComplexMatrix {
        &self.u
    }

    pub fn probe(&self) -> &Observable {
        &self.probe
    }

    pub fn measured(&self) -> &Observable {
        &self.measured
    }

    pub fn object_hamiltonian(&self) -> &ComplexMatrix {
        &self.object_hamiltonian
    }

    /// Outcome labels: the clustered eigenvalues of `A`, increasing.
    pub fn outcomes(&self) -> Vec<f64> {
        self.measured.eigenvalues()
    }

    fn composite_dims(&self) -> SubsystemDims {
        SubsystemDims::new(vec![self.object_dim, self.apparatus_dim]).expect("positive dimensions")
    }

    /// `E^B(a)`, the probe projection matched to outcome `a` of `A`.
    pub fn probe_projection(&self, outcome: f64) -> Result<&ComplexMatrix> {
        let k = self
            .measured
            .outcome_index(outcome)
            .ok_or(Error::UnknownOutcome { outcome })?;
        Ok(&self.probe.spectrum()[k].1)
    }

    fn lifted_probe(&self, outcome: f64) -> Result<ComplexMatrix> {
        Ok(tensor(
            &identity(self.object_dim),
            self.probe_projection(outcome)?,
        ))
    }

    fn check_object_state(&self, rho: &DensityOperator) -> Result<()> {
        if rho.dim() != self.object_dim {
            return Err(Error::DimensionMismatch(format!(
                "object state has dimension {}, model object dimension is {}",
                rho.dim(),
                self.object_dim
            )));
        }
        Ok(())
    }

    /// `U (ρ ⊗ σ) U†`, the composite state right after the interaction.
    pub fn composite_state(&self, rho: &DensityOperator) -> Result<ComplexMatrix> {
        self.check_object_state(rho)?;
        Ok(conjugate(
            &self.u,
            &tensor(rho.matrix(), self.sigma.matrix()),
        ))
    }

    /// `Tr_A[(1⊗E^B(a)) C]` and `Tr[(1⊗E^B(a)) C]` for a composite state `C`.
    fn unnormalized_reduction(
        &self,
        composite: &ComplexMatrix,
        outcome: f64,
    ) -> Result<(ComplexMatrix, f64)> {
        let numerator = self.lifted_probe(outcome)? * composite;
        let reduced = partial_trace(&numerator, &self.composite_dims(), &[0])?;
        let probability = linalg::trace(&reduced).re;
        // Tr_A[(1⊗E) C] is Hermitian; drop the roundoff asymmetry.
        Ok(((&reduced + reduced.adjoint()).scale(0.5), probability))
    }

    /// The POVM of the model: `effect(a) = Tr_A[U† (1⊗E^B(a)) U (1⊗σ)]`.
    pub fn effects(&self) -> Vec<(f64, ComplexMatrix)> {
        let lifted_sigma = tensor(&identity(self.object_dim), self.sigma.matrix());
        let dims = self.composite_dims();
        self.outcomes()
            .into_iter()
            .map(|a| {
                let lifted = self.lifted_probe(a).expect("outcome from own spectrum");
                let heisenberg = self.u.adjoint() * lifted * &self.u;
                let effect = partial_trace(&(heisenberg * &lifted_sigma), &dims, &[0])
                    .expect("composite dims match");
                (a, effect)
            })
            .collect()
    }

    /// Largest violation of the POVM conditions: negativity of any effect
    /// or deviation of their sum from the identity.
    pub fn povm_deviation(&self) -> f64 {
        let effects = self.effects();
        let mut sum = linalg::zeros(self.object_dim);
        let mut worst: f64 = 0.0;
        for (_, e) in &effects {
            let herm = linalg::hermiticity_deviation(e);
            worst = worst.max(herm);
            if let Ok((values, _)) = linalg::eigh(e, f64::INFINITY) {
                if let Some(&min) = values.first() {
                    worst = worst.max(-min);
                }
            }
            sum += e;
        }
        worst.max(max_abs_diff(&sum, &identity(self.object_dim)))
    }

    /// Checks the measuring condition `effect(a) = E^A(a)` for every outcome.
    pub fn verify_measures(&self) -> MeasuresReport {
        let max_deviation = self
            .effects()
            .iter()
            .zip(self.measured.spectrum())
            .map(|((_, effect), (_, projection))| max_abs_diff(effect, projection))
            .fold(0.0, f64::max);
        MeasuresReport {
            passes: max_deviation <= TOL_OP,
            max_deviation,
        }
    }

    /// Probe statistics `P(a) = Tr[(1⊗E^B(a)) U(ρ⊗σ)U†]`, keyed by the
    /// outcomes of `A`.
    pub fn outcome_probability(&self, rho: &DensityOperator) -> Result<OutcomeDistribution> {
        let composite = self.composite_state(rho)?;
        let entries = self
            .outcomes()
            .into_iter()
            .map(|a| {
                let lifted = self.lifted_probe(a)?;
                Ok((a, trace_product(&lifted, &composite)))
            })
            .collect::<Result<Vec<_>>>()?;
        OutcomeDistribution::new(entries)
    }

    /// Outcome-independent state change `ρ' = Tr_A[U(ρ⊗σ)U†]`.
    pub fn nonselective_state(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let composite = self.composite_state(rho)?;
        DensityOperator::new(partial_trace(&composite, &self.composite_dims(), &[0])?)
    }

    fn normalize_reduction(
        numerator: ComplexMatrix,
        probability: f64,
        outcome: f64,
    ) -> Result<DensityOperator> {
        if probability <= TOL_PROB {
            return Err(Error::ZeroProbability {
                outcome,
                probability,
            });
        }
        DensityOperator::new(numerator.unscale(probability))
    }

    /// The conditional object state given outcome `a`:
    /// `Tr_A[(1⊗E^B(a)) U(ρ⊗σ)U†] / Tr[(1⊗E^B(a)) U(ρ⊗σ)U†]`.
    pub fn state_reduction(&self, rho: &DensityOperator, outcome: f64) -> Result<DensityOperator> {
        let composite = self.composite_state(rho)?;
        let (numerator, probability) = self.unnormalized_reduction(&composite, outcome)?;
        Self::normalize_reduction(numerator, probability, outcome)
    }

    /// The same conditional state computed with the probe projection on
    /// both sides of the composite state.
    pub fn state_reduction_sandwiched(
        &self,
        rho: &DensityOperator,
        outcome: f64,
    ) -> Result<DensityOperator> {
        let composite = self.composite_state(rho)?;
        let lifted = self.lifted_probe(outcome)?;
        let sandwiched = &lifted * composite * &lifted;
        let numerator = partial_trace(&sandwiched, &self.composite_dims(), &[0])?;
        let probability = linalg::trace(&sandwiched).re;
        Self::normalize_reduction(numerator, probability, outcome)
    }

    /// `‖ρ' − Σ_a P(a) ρ_a‖_max`, summing over outcomes with `P(a) > TOL_PROB`.
    pub fn mixture_identity_check(&self, rho: &DensityOperator) -> Result<f64> {
        let nonselective = self.nonselective_state(rho)?;
        let composite = self.composite_state(rho)?;
        let mut mixture = linalg::zeros(self.object_dim);
        for a in self.outcomes() {
            let (numerator, probability) = self.unnormalized_reduction(&composite, a)?;
            if probability > TOL_PROB {
                let reduced = Self::normalize_reduction(numerator, probability, a)?;
                mixture += reduced.matrix().scale(probability);
            }
        }
        Ok(max_abs_diff(nonselective.matrix(), &mixture))
    }

    /// The composite state after a projective readout of the probe,
    /// `(1⊗E^B(a)) U(ρ⊗σ)U† (1⊗E^B(a))`, normalized. Its partial trace over
    /// the apparatus is the reduced object state.
    pub fn projection_postulate_composite(
        &self,
        rho: &DensityOperator,
        outcome: f64,
    ) -> Result<DensityOperator> {
        let composite = self.composite_state(rho)?;
        let lifted = self.lifted_probe(outcome)?;
        let sandwiched = &lifted * composite * &lifted;
        let probability = linalg::trace(&sandwiched).re;
        Self::normalize_reduction(sandwiched, probability, outcome)?
            .with_dims(self.composite_dims())
    }

    /// Searches the spanning state set for an input and outcome whose
    /// reduction differs from `E^A(a) ρ E^A(a) / P(a)` by more than
    /// [`TOL_OP`]. Returns the worst such case, or `None`.
    ///
    /// Only meaningful for models that measure `A`.
    pub fn projection_postulate_witness(&self) -> Result<Option<PostulateWitness>> {
        let report = self.verify_measures();
        if !report.passes {
            return Err(Error::UnverifiedModel {
                deviation: report.max_deviation,
            });
        }
        let mut worst: Option<PostulateWitness> = None;
        for rho in spanning_states(self.object_dim, RANDOM_SPANNING_STATES, SPANNING_SEED) {
            let composite = self.composite_state(&rho)?;
            for a in self.outcomes() {
                let (numerator, probability) = self.unnormalized_reduction(&composite, a)?;
                if probability <= TOL_PROB {
                    continue;
                }
                let reduced = Self::normalize_reduction(numerator, probability, a)?;
                let predicted = projection_postulate_state(&self.measured, &rho, a)?;
                let deviation = max_abs_diff(reduced.matrix(), predicted.matrix());
                if deviation > TOL_OP && worst.as_ref().is_none_or(|w| deviation > w.deviation) {
                    worst = Some(PostulateWitness {
                        input: rho.clone(),
                        outcome: a,
                        probability,
                        reduced,
                        predicted,
                        deviation,
                    });
                }
            }
        }
        Ok(worst)
    }

    /// Whether every reduction agrees with the projection postulate for `A`.
    pub fn satisfies_projection_postulate(&self) -> Result<bool> {
        Ok(self.projection_postulate_witness()?.is_none())
    }
}

/// The conventional prediction `E(a) ρ E(a) / Tr[E(a) ρ E(a)]`.
pub fn projection_postulate_state(
    obs: &Observable,
    rho: &DensityOperator,
    outcome: f64,
) -> Result<DensityOperator> {
    if obs.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "observable has dimension {}, state has dimension {}",
            obs.dim(),
            rho.dim()
        )));
    }
    let e = obs.projection(outcome)?;
    let numerator = e * rho.matrix() * e;
    let probability = linalg::trace(&numerator).re;
    if probability <= TOL_PROB {
        return Err(Error::ZeroProbability {
            outcome,
            probability,
        });
    }
    DensityOperator::new(numerator.unscale(probability))
}

/// Pure states whose projectors span the Hermitian operators in dimension
/// `dim` (`|j⟩`, `(|j⟩+|k⟩)/√2`, `(|j⟩+i|k⟩)/√2` for `j < k`), followed by
/// `random` seeded mixed states.
pub fn spanning_states(dim: usize, random: usize, seed: u64) -> Vec<DensityOperator> {
    let mut states = Vec::with_capacity(dim * dim + random);
    for j in 0..dim {
        states.push(DensityOperator::basis(dim, j));
    }
    let zero = Complex64::new(0.0, 0.0);
    for j in 0..dim {
        for k in j + 1..dim {
            for phase in [
                Complex64::new(FRAC_1_SQRT_2, 0.0),
                Complex64::new(0.0, FRAC_1_SQRT_2),
            ] {
                let mut psi = vec![zero; dim];
                psi[j] = Complex64::new(FRAC_1_SQRT_2, 0.0);
                psi[k] = phase;
                states.push(DensityOperator::pure(&psi).expect("unit vector"));
            }
        }
    }
    let mut rng = FixtureRng::new(seed);
    for _ in 0..random {
        states
            .push(DensityOperator::new(rng.density_matrix(dim)).expect("Ginibre states are valid"));
    }
    states
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_projector, diag, is_positive_semidefinite};
    use crate::quantum::born_distribution;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn pauli_z() -> Observable {
        Observable::diagonal(&[1., -1.])
    }

    fn pauli_x() -> Observable {
        Observable::new(ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(0.), c(1.), c(1.), c(0.)],
        ))
        .unwrap()
    }

    fn plus() -> DensityOperator {
        DensityOperator::pure(&[c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)]).unwrap()
    }

    fn plus_matrix() -> ComplexMatrix {
        ComplexMatrix::from_element(2, 2, c(0.5))
    }

    /// |00⟩→|00⟩, |01⟩→|01⟩, |10⟩→|11⟩, |11⟩→|10⟩ with the object on the left.
    fn cnot() -> ComplexMatrix {
        let mut u = linalg::zeros(4);
        for (from, to) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            u[(to, from)] = c(1.);
        }
        u
    }

    fn swap(d: usize) -> ComplexMatrix {
        let mut u = linalg::zeros(d * d);
        for i in 0..d {
            for j in 0..d {
                u[(j * d + i, i * d + j)] = c(1.);
            }
        }
        u
    }

    fn cnot_model(measured: Observable) -> MeasurementModel {
        MeasurementModel::new(DensityOperator::basis(2, 0), cnot(), pauli_z(), measured).unwrap()
    }

    fn swap_model(sigma: DensityOperator) -> MeasurementModel {
        MeasurementModel::new(sigma, swap(2), pauli_z(), pauli_z()).unwrap()
    }

    fn idle_model(sigma: DensityOperator) -> MeasurementModel {
        MeasurementModel::new(sigma, identity(4), pauli_z(), pauli_z()).unwrap()
    }

    #[test]
    fn construction_validation() {
        let sigma = DensityOperator::basis(2, 0);
        assert!(matches!(
            MeasurementModel::new(
                sigma.clone(),
                diag(&[1., 1., 1., 0.5]),
                pauli_z(),
                pauli_z()
            ),
            Err(Error::NotUnitary { .. })
        ));
        assert!(matches!(
            MeasurementModel::new(sigma.clone(), identity(6), pauli_z(), pauli_z()),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            MeasurementModel::new(
                sigma.clone(),
                cnot(),
                Observable::diagonal(&[0., 1.]),
                pauli_z()
            ),
            Err(Error::SpectrumMismatch(_))
        ));
        let model = cnot_model(pauli_z());
        assert!(model.clone().with_hamiltonian(diag(&[1., 2., 3.])).is_err());
        assert!(model.with_hamiltonian(diag(&[0.5, -0.5])).is_ok());
    }

    #[test]
    fn effects_of_idle_apparatus_carry_no_information() {
        let sigma = DensityOperator::new(diag(&[0.3, 0.7])).unwrap();
        let model = idle_model(sigma);
        let effects = model.effects();
        // Outcome −1 ↔ probe |1⟩, weight 0.7; outcome +1 ↔ |0⟩, weight 0.3.
        assert!(max_abs_diff(&effects[0].1, &identity(2).scale(0.7)) < 1e-15);
        assert!(max_abs_diff(&effects[1].1, &identity(2).scale(0.3)) < 1e-15);
        let report = model.verify_measures();
        assert!(!report.passes);
        assert!((report.max_deviation - 0.7).abs() < 1e-12);
    }

    #[test]
    fn effects_of_cnot_and_swap() {
        let model = cnot_model(pauli_z());
        let effects = model.effects();
        assert_eq!(effects[0].0, -1.0);
        assert!(max_abs_diff(&effects[0].1, &basis_projector(2, 1)) < 1e-15);
        assert!(max_abs_diff(&effects[1].1, &basis_projector(2, 0)) < 1e-15);
        assert!(model.verify_measures().passes);

        // SWAP carries the probe projection onto the object, whatever σ is.
        let model = swap_model(plus());
        let effects = model.effects();
        assert!(max_abs_diff(&effects[0].1, &basis_projector(2, 1)) < 1e-15);
        assert!(max_abs_diff(&effects[1].1, &basis_projector(2, 0)) < 1e-15);
    }

    #[test]
    fn wrong_claim_fails_by_half() {
        let report = cnot_model(pauli_x()).verify_measures();
        assert!(!report.passes);
        assert!((report.max_deviation - 0.5).abs() < 1e-12);
    }

    #[test]
    fn outcome_probability_examples() {
        let model = cnot_model(pauli_z());
        let p = model.outcome_probability(&plus()).unwrap();
        assert!((p.probability(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((p.probability(-1.0).unwrap() - 0.5).abs() < 1e-15);
        let p = model
            .outcome_probability(&DensityOperator::basis(2, 0))
            .unwrap();
        assert_eq!(p.probability(1.0), Some(1.0));
        assert_eq!(p.probability(-1.0), Some(0.0));
        assert!(model
            .outcome_probability(&DensityOperator::maximally_mixed(3))
            .is_err());

        for rho in spanning_states(2, 50, 1) {
            let via_model = model.outcome_probability(&rho).unwrap();
            let via_born = born_distribution(model.measured(), &rho).unwrap();
            assert!(via_model.max_abs_diff(&via_born) < TOL_PROB);
        }
    }

    #[test]
    fn probabilities_follow_the_effects() {
        // Holds for every model, verified or not.
        let model = MeasurementModel::new(
            DensityOperator::new(diag(&[0.6, 0.4])).unwrap(),
            FixtureRng::new(8).haar_unitary(4),
            pauli_z(),
            pauli_x(),
        )
        .unwrap();
        assert!(model.povm_deviation() < TOL_OP);
        let effects = model.effects();
        for rho in spanning_states(2, 10, 2) {
            let p = model.outcome_probability(&rho).unwrap();
            for ((a, prob), (b, e)) in p.entries().iter().zip(&effects) {
                assert_eq!(a, b);
                assert!((prob - trace_product(e, rho.matrix())).abs() < TOL_PROB);
            }
        }
    }

    #[test]
    fn nonselective_examples() {
        let sigma = DensityOperator::new(diag(&[0.2, 0.8])).unwrap();
        let rho = DensityOperator::new(FixtureRng::new(4).density_matrix(2)).unwrap();
        let out = idle_model(sigma).nonselective_state(&rho).unwrap();
        assert!(max_abs_diff(out.matrix(), rho.matrix()) < 1e-15);

        let out = cnot_model(pauli_z()).nonselective_state(&plus()).unwrap();
        assert!(max_abs_diff(out.matrix(), &identity(2).scale(0.5)) < 1e-15);

        let model = swap_model(plus());
        let out = model.nonselective_state(&rho).unwrap();
        assert!(max_abs_diff(out.matrix(), &plus_matrix()) < 1e-15);
    }

    #[test]
    fn reduction_examples() {
        let model = cnot_model(pauli_z());
        let r = model.state_reduction(&plus(), 1.0).unwrap();
        assert!(max_abs_diff(r.matrix(), &basis_projector(2, 0)) < 1e-15);
        let r = model
            .state_reduction(&DensityOperator::basis(2, 0), 1.0)
            .unwrap();
        assert!(max_abs_diff(r.matrix(), &basis_projector(2, 0)) < 1e-15);
        assert!(matches!(
            model.state_reduction(&DensityOperator::basis(2, 0), -1.0),
            Err(Error::ZeroProbability { .. })
        ));
        assert!(matches!(
            model.state_reduction(&plus(), 0.5),
            Err(Error::UnknownOutcome { .. })
        ));

        let swap = swap_model(plus());
        let mut rng = FixtureRng::new(6);
        for _ in 0..5 {
            let rho = DensityOperator::new(rng.density_matrix(2)).unwrap();
            for a in [-1.0, 1.0] {
                let r = swap.state_reduction(&rho, a).unwrap();
                assert!(max_abs_diff(r.matrix(), &plus_matrix()) < 1e-14);
            }
        }
    }

    #[test]
    fn sandwiched_reduction_agrees() {
        let mut rng = FixtureRng::new(15);
        let mut models = vec![cnot_model(pauli_z()), swap_model(plus())];
        for _ in 0..5 {
            // Arbitrary interaction: the equivalence does not need the
            // measuring condition.
            models.push(
                MeasurementModel::new(
                    DensityOperator::new(rng.density_matrix(3)).unwrap(),
                    rng.haar_unitary(6),
                    Observable::diagonal(&[0., 1., 1.]),
                    Observable::diagonal(&[1., 0.]),
                )
                .unwrap(),
            );
        }
        for model in &models {
            for rho in spanning_states(2, 50, 3) {
                for a in model.outcomes() {
                    match (
                        model.state_reduction(&rho, a),
                        model.state_reduction_sandwiched(&rho, a),
                    ) {
                        (Ok(x), Ok(y)) => assert!(max_abs_diff(x.matrix(), y.matrix()) < TOL_OP),
                        (
                            Err(Error::ZeroProbability { .. }),
                            Err(Error::ZeroProbability { .. }),
                        ) => {}
                        other => panic!("paths disagree: {other:?}"),
                    }
                }
            }
        }
    }

    #[test]
    fn mixture_identity() {
        let model = cnot_model(pauli_z());
        assert!(model.mixture_identity_check(&plus()).unwrap() < 1e-10);
        let idle = idle_model(DensityOperator::new(diag(&[0.5, 0.5])).unwrap());
        let rho = DensityOperator::new(FixtureRng::new(2).density_matrix(2)).unwrap();
        assert!(idle.mixture_identity_check(&rho).unwrap() < 1e-15);
        let mut rng = FixtureRng::new(22);
        for _ in 0..10 {
            let model = MeasurementModel::new(
                DensityOperator::new(rng.density_matrix(2)).unwrap(),
                rng.haar_unitary(6),
                pauli_z(),
                Observable::diagonal(&[1., -1., 1.]),
            )
            .unwrap();
            let rho = DensityOperator::new(rng.density_matrix(3)).unwrap();
            assert!(model.mixture_identity_check(&rho).unwrap() < 1e-9);
        }
    }

    #[test]
    fn composite_after_probe_readout() {
        let model = cnot_model(pauli_z());
        let composite = model.projection_postulate_composite(&plus(), 1.0).unwrap();
        assert!((linalg::trace(composite.matrix()).re - 1.0).abs() < 1e-15);
        let reduced = crate::quantum::reduced_state(&composite, &[0]).unwrap();
        let direct = model.state_reduction(&plus(), 1.0).unwrap();
        assert!(max_abs_diff(reduced.matrix(), direct.matrix()) < TOL_OP);

        // Eigenstate input: |0⟩⟨0| ⊗ |0⟩⟨0|.
        let composite = model
            .projection_postulate_composite(&DensityOperator::basis(2, 0), 1.0)
            .unwrap();
        let product = tensor(&basis_projector(2, 0), &basis_projector(2, 0));
        assert!(max_abs_diff(composite.matrix(), &product) < 1e-15);
        assert!(model
            .projection_postulate_composite(&DensityOperator::basis(2, 0), -1.0)
            .is_err());
    }

    #[test]
    fn conventional_normalizers_agree() {
        // Tr[E ρ E] and Tr[E ρ] are the same number.
        let obs = Observable::diagonal(&[0., 0., 1.]);
        let mut rng = FixtureRng::new(40);
        for _ in 0..10 {
            let rho = DensityOperator::new(rng.density_matrix(3)).unwrap();
            for a in [0.0, 1.0] {
                let e = obs.projection(a).unwrap();
                let doubled = linalg::trace(&(e * rho.matrix() * e)).re;
                let single = trace_product(e, rho.matrix());
                assert!((doubled - single).abs() < TOL_PROB);
            }
            let state = projection_postulate_state(&obs, &rho, 0.0).unwrap();
            assert!(is_positive_semidefinite(state.matrix(), TOL_OP));
        }
    }

    #[test]
    fn projection_postulate_classification() {
        assert!(cnot_model(pauli_z())
            .satisfies_projection_postulate()
            .unwrap());

        let swap = swap_model(plus());
        let witness = swap
            .projection_postulate_witness()
            .unwrap()
            .expect("swap replaces the state");
        assert!((witness.deviation - 0.5).abs() < 1e-12);
        assert!(max_abs_diff(witness.reduced.matrix(), &plus_matrix()) < 1e-14);

        let degenerate = MeasurementModel::new(
            DensityOperator::basis(1, 0),
            identity(2),
            Observable::diagonal(&[3.]),
            Observable::diagonal(&[3., 3.]),
        )
        .unwrap();
        assert!(degenerate.verify_measures().passes);
        assert!(degenerate.satisfies_projection_postulate().unwrap());

        assert!(matches!(
            cnot_model(pauli_x()).satisfies_projection_postulate(),
            Err(Error::UnverifiedModel { .. })
        ));
    }

    #[test]
    fn reduction_is_affine_in_the_input() {
        let mut rng = FixtureRng::new(51);
        let model = MeasurementModel::new(
            DensityOperator::new(rng.density_matrix(3)).unwrap(),
            rng.haar_unitary(6),
            Observable::diagonal(&[0., 2., 2.]),
            Observable::diagonal(&[2., 0.]),
        )
        .unwrap();
        for _ in 0..10 {
            let r1 = DensityOperator::new(rng.density_matrix(2)).unwrap();
            let r2 = DensityOperator::new(rng.density_matrix(2)).unwrap();
            let lambda = rng.uniform();
            let mix =
                DensityOperator::new(r1.matrix().scale(lambda) + r2.matrix().scale(1.0 - lambda))
                    .unwrap();
            let p_mix = model.outcome_probability(&mix).unwrap();
            let p1 = model.outcome_probability(&r1).unwrap();
            let p2 = model.outcome_probability(&r2).unwrap();
            for a in model.outcomes() {
                let lhs = model
                    .state_reduction(&mix, a)
                    .unwrap()
                    .matrix()
                    .scale(p_mix.probability(a).unwrap());
                let rhs = model
                    .state_reduction(&r1, a)
                    .unwrap()
                    .matrix()
                    .scale(lambda * p1.probability(a).unwrap())
                    + model
                        .state_reduction(&r2, a)
                        .unwrap()
                        .matrix()
                        .scale((1.0 - lambda) * p2.probability(a).unwrap());
                assert!(max_abs_diff(&lhs, &rhs) < TOL_OP);
            }
        }
    }

    #[test]
    fn spanning_set_shape() {
        let states = spanning_states(3, 4, 9);
        assert_eq!(states.len(), 9 + 4);
        // The d² pure projectors are linearly independent: their Gram matrix
        // under the Hilbert–Schmidt product is nonsingular.
        let n = 9;
        let gram = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| {
            trace_product(states[i].matrix(), states[j].matrix())
        });
        assert!(gram.determinant().abs() > 1e-6);
    }
}
