//! Successive local measurements on a noninteracting pair `S₁ + S₂`.
//!
//! `A` is measured on `S₁` at time `t`, `X` on `S₂` at `t + τ`. The joint
//! distribution is available in closed form, and independently by running
//! an explicit apparatus for `A` on the three-factor space
//! `S₁ ⊗ apparatus ⊗ S₂` and reading two commuting projections at the end.
//! Conditioning the joint on `A(t) = a` defines the posterior state of `S₂`.

use crate::error::{Error, Result};
use crate::linalg::{
    self, conjugate, herm_expm, hermiticity_deviation, identity, max_abs_diff, partial_trace,
    permute_factors, tensor, tensor_all, ComplexMatrix, SubsystemDims, TOL_EIG, TOL_OP, TOL_PROB,
};
use crate::measurement::MeasurementModel;
use crate::quantum::{
    evolve, reduced_state, trace_product, DensityOperator, Observable, OutcomeDistribution,
};
use crate::random::FixtureRng;

/// State of the pair, the two observables, the free Hamiltonians and the
/// measurement times.
#[derive(Debug, Clone)]
pub struct EntangledScenario {
    rho12: DensityOperator,
    a_obs: Observable,
    x_obs: Observable,
    h1: ComplexMatrix,
    h2: ComplexMatrix,
    t: f64,
    tau: f64,
}

fn check_hermitian(what: &str, h: &ComplexMatrix, dim: usize) -> Result<()> {
    if !h.is_square() || h.nrows() != dim {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, expected {dim}x{dim}",
            h.nrows(),
            h.ncols()
        )));
    }
    let deviation = hermiticity_deviation(h);
    if deviation > TOL_OP {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

impl EntangledScenario {
    /// Scenario with zero Hamiltonians and `t = τ = 0`. `rho12` must carry a
    /// two-factor annotation matching the observables.
    pub fn new(rho12: DensityOperator, a_obs: Observable, x_obs: Observable) -> Result<Self> {
        let dims = rho12.dims().ok_or_else(|| {
            Error::InvalidSubsystems("pair state carries no subsystem annotation".into())
        })?;
        if dims.len() != 2 {
            return Err(Error::InvalidSubsystems(format!(
                "pair state must have two factors, has {:?}",
                dims.factors()
            )));
        }
        let (d1, d2) = (dims.factors()[0], dims.factors()[1]);
        if a_obs.dim() != d1 || x_obs.dim() != d2 {
            return Err(Error::DimensionMismatch(format!(
                "observables act on dimensions {} and {}, pair factors are {d1} and {d2}",
                a_obs.dim(),
                x_obs.dim()
            )));
        }
        Ok(Self {
            rho12,
            a_obs,
            x_obs,
            h1: linalg::zeros(d1),
            h2: linalg::zeros(d2),
            t: 0.0,
            tau: 0.0,
        })
    }

    pub fn with_hamiltonians(mut self, h1: ComplexMatrix, h2: ComplexMatrix) -> Result<Self> {
        check_hermitian("H1", &h1, self.d1())?;
        check_hermitian("H2", &h2, self.d2())?;
        self.h1 = h1;
        self.h2 = h2;
        Ok(self)
    }

    /// `t` is the time of the `A`-measurement, `tau` the further delay to the
    /// `X`-measurement.
    pub fn at_times(mut self, t: f64, tau: f64) -> Result<Self> {
        if !(t.is_finite() && tau.is_finite()) || t < 0.0 || tau < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "measurement times must be finite and non-negative, got t = {t}, tau = {tau}"
            )));
        }
        self.t = t;
        self.tau = tau;
        Ok(self)
    }

    /// Same scenario with a different second observable.
    pub fn with_x(&self, x_obs: Observable) -> Result<Self> {
        if x_obs.dim() != self.d2() {
            return Err(Error::DimensionMismatch(format!(
                "X acts on dimension {}, S2 has dimension {}",
                x_obs.dim(),
                self.d2()
            )));
        }
        Ok(Self {
            x_obs,
            ..self.clone()
        })
    }

    pub fn rho12(&self) -> &DensityOperator {
        &self.rho12
    }

    pub fn a_obs(&self) -> &Observable {
        &self.a_obs
    }

    pub fn x_obs(&self) -> &Observable {
        &self.x_obs
    }

    pub fn h1(&self) -> &ComplexMatrix {
        &self.h1
    }

    pub fn h2(&self) -> &ComplexMatrix {
        &self.h2
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn d1(&self) -> usize {
        self.a_obs.dim()
    }

    pub fn d2(&self) -> usize {
        self.x_obs.dim()
    }

    fn pair_dims(&self) -> SubsystemDims {
        SubsystemDims::new(vec![self.d1(), self.d2()]).expect("positive dimensions")
    }

    /// `e^{iH₁t} E^A(a) e^{-iH₁t}` for every outcome.
    fn heisenberg_a(&self) -> Result<Vec<(f64, ComplexMatrix)>> {
        let u1 = herm_expm(&self.h1, self.t)?;
        Ok(self
            .a_obs
            .spectrum()
            .iter()
            .map(|(a, e)| (*a, u1.adjoint() * e * &u1))
            .collect())
    }

    /// `e^{iH₂(t+τ)} E^X(x) e^{-iH₂(t+τ)}` for every outcome.
    fn heisenberg_x(&self) -> Result<Vec<(f64, ComplexMatrix)>> {
        let u2 = herm_expm(&self.h2, self.t + self.tau)?;
        Ok(self
            .x_obs
            .spectrum()
            .iter()
            .map(|(x, e)| (*x, u2.adjoint() * e * &u2))
            .collect())
    }
}

/// A measuring apparatus for the scenario's `A`, acting on `S₁` only.
#[derive(Debug, Clone)]
pub struct LocalApparatus {
    model: MeasurementModel,
}

impl LocalApparatus {
    /// Accepts `model` if its measured observable is the scenario's `A` and
    /// it passes the measuring condition.
    pub fn new(model: MeasurementModel, scenario: &EntangledScenario) -> Result<Self> {
        if model.object_dim() != scenario.d1() {
            return Err(Error::DimensionMismatch(format!(
                "apparatus measures dimension {}, S1 has dimension {}",
                model.object_dim(),
                scenario.d1()
            )));
        }
        let claim = max_abs_diff(model.measured().matrix(), scenario.a_obs().matrix());
        if claim > TOL_OP {
            return Err(Error::InvalidArgument(format!(
                "apparatus claims a different observable than A (max deviation {claim:.3e})"
            )));
        }
        let report = model.verify_measures();
        if !report.passes {
            return Err(Error::UnverifiedModel {
                deviation: report.max_deviation,
            });
        }
        Ok(Self { model })
    }

    pub fn model(&self) -> &MeasurementModel {
        &self.model
    }
}

/// Joint probabilities of `(A(t), X(t+τ))`, sorted by `a` then `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    entries: Vec<((f64, f64), f64)>,
}

impl JointDistribution {
    pub fn new(mut entries: Vec<((f64, f64), f64)>) -> Result<Self> {
        entries.sort_by(|p, q| p.0 .0.total_cmp(&q.0 .0).then(p.0 .1.total_cmp(&q.0 .1)));
        if let Some(&((a, x), p)) = entries
            .iter()
            .find(|(_, p)| !(-TOL_PROB..=1.0 + TOL_PROB).contains(p))
        {
            return Err(Error::InvalidArgument(format!(
                "probability {p} of ({a}, {x}) outside [0, 1]"
            )));
        }
        let total: f64 = entries.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > TOL_PROB {
            return Err(Error::InvalidArgument(format!(
                "joint probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[((f64, f64), f64)] {
        &self.entries
    }

    pub fn probability(&self, a: f64, x: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|((ea, ex), _)| (ea - a).abs() <= TOL_EIG && (ex - x).abs() <= TOL_EIG)
            .map(|(_, p)| *p)
    }

    fn marginal(&self, pick: impl Fn(&(f64, f64)) -> f64) -> Result<OutcomeDistribution> {
        let mut sums: Vec<(f64, f64)> = Vec::new();
        for (key, p) in &self.entries {
            let v = pick(key);
            match sums.iter_mut().find(|(u, _)| (u - v).abs() <= TOL_EIG) {
                Some(slot) => slot.1 += p,
                None => sums.push((v, *p)),
            }
        }
        OutcomeDistribution::new(sums)
    }

    pub fn marginal_a(&self) -> Result<OutcomeDistribution> {
        self.marginal(|(a, _)| *a)
    }

    pub fn marginal_x(&self) -> Result<OutcomeDistribution> {
        self.marginal(|(_, x)| *x)
    }

    /// Total-variation distance, pairing entries in sorted order.
    pub fn total_variation(&self, other: &JointDistribution) -> f64 {
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

    /// Whether every conditional of `X` given `A = a` (with `P(a) > TOL_PROB`)
    /// equals the `X`-marginal to `tol`.
    pub fn is_independent(&self, tol: f64) -> Result<bool> {
        let marginal_x = self.marginal_x()?;
        for (a, p) in self.marginal_a()?.entries() {
            if *p <= TOL_PROB {
                continue;
            }
            if bayes_condition(self, *a)?.max_abs_diff(&marginal_x) > tol {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `Pr{A(t)=a, X(t+τ)=x} = Tr[(e^{iH₁t}E^A(a)e^{-iH₁t} ⊗ e^{iH₂(t+τ)}E^X(x)e^{-iH₂(t+τ)}) ρ₁₂]`.
pub fn joint_distribution_formula(s: &EntangledScenario) -> Result<JointDistribution> {
    let xs = s.heisenberg_x()?;
    let mut entries = Vec::new();
    for (a, ea) in s.heisenberg_a()? {
        for (x, ex) in &xs {
            entries.push(((a, *x), trace_product(&tensor(&ea, ex), s.rho12.matrix())));
        }
    }
    JointDistribution::new(entries)
}

/// The joint distribution obtained by simulating the apparatus.
///
/// The pair and the apparatus start in `ρ₁₂ ⊗ σ`, reordered to
/// `S₁ ⊗ A ⊗ S₂`. Everything evolves freely under `H₁ + H₂` (apparatus
/// Hamiltonian zero) up to `t`, the interaction `U ⊗ 1` acts instantly, and
/// free evolution continues for `τ`. The probe and `X` projections commute,
/// so both outcomes are read from the final state by the Born rule.
pub fn joint_distribution_oracle(
    s: &EntangledScenario,
    app: &LocalApparatus,
) -> Result<JointDistribution> {
    let model = app.model();
    let (d1, m, d2) = (s.d1(), model.apparatus_dim(), s.d2());
    let initial = tensor(s.rho12.matrix(), model.sigma().matrix());
    let pair_then_apparatus = SubsystemDims::new(vec![d1, d2, m])?;
    let state = permute_factors(&initial, &pair_then_apparatus, &[0, 2, 1])?;

    let free = tensor_all(&[&s.h1, &identity(m), &identity(d2)])
        + tensor_all(&[&identity(d1), &identity(m), &s.h2]);
    let before = herm_expm(&free, s.t)?;
    let after = herm_expm(&free, s.tau)?;
    let interaction = tensor(model.u(), &identity(d2));
    let step = after * interaction * before;
    let final_state = conjugate(&step, &state);

    let mut entries = Vec::new();
    for a in model.outcomes() {
        let probe = model.probe_projection(a)?;
        for (x, ex) in s.x_obs.spectrum() {
            let readout = tensor_all(&[&identity(d1), probe, ex]);
            entries.push(((a, *x), trace_product(&readout, &final_state)));
        }
    }
    JointDistribution::new(entries)
}

/// `ρ₂(t) = e^{-iH₂t} Tr₁[ρ₁₂] e^{iH₂t}`.
pub fn prior_state(s: &EntangledScenario) -> Result<DensityOperator> {
    evolve(&reduced_state(&s.rho12, &[1])?, &s.h2, s.t)
}

/// `ρ₂(t | A(t)=a)`: the state of `S₂` conditioned on outcome `a`.
pub fn posterior_state(s: &EntangledScenario, a: f64) -> Result<DensityOperator> {
    let (posterior, _) = posterior_with_probability(s, a)?;
    Ok(posterior)
}

fn posterior_with_probability(s: &EntangledScenario, a: f64) -> Result<(DensityOperator, f64)> {
    let k = s
        .a_obs
        .outcome_index(a)
        .ok_or(Error::UnknownOutcome { outcome: a })?;
    let (_, ea) = s.heisenberg_a()?.swap_remove(k);
    let weighted = tensor(&ea, &identity(s.d2())) * s.rho12.matrix();
    let numerator = partial_trace(&weighted, &s.pair_dims(), &[1])?;
    let probability = linalg::trace(&numerator).re;
    if probability <= TOL_PROB {
        return Err(Error::ZeroProbability {
            outcome: a,
            probability,
        });
    }
    let conditioned =
        DensityOperator::new((&numerator + numerator.adjoint()).scale(0.5 / probability))?;
    Ok((evolve(&conditioned, &s.h2, s.t)?, probability))
}

/// Classical conditioning of the joint on `A = a`.
pub fn bayes_condition(j: &JointDistribution, a: f64) -> Result<OutcomeDistribution> {
    let row: Vec<(f64, f64)> = j
        .entries
        .iter()
        .filter(|((ea, _), _)| (ea - a).abs() <= TOL_EIG)
        .map(|((_, x), p)| (*x, *p))
        .collect();
    if row.is_empty() {
        return Err(Error::UnknownOutcome { outcome: a });
    }
    let marginal: f64 = row.iter().map(|(_, p)| p).sum();
    if marginal <= TOL_PROB {
        return Err(Error::ZeroProbability {
            outcome: a,
            probability: marginal,
        });
    }
    OutcomeDistribution::new(row.into_iter().map(|(x, p)| (x, p / marginal)).collect())
}

/// `‖ρ₂(t) − Σ_a P(a) ρ₂(t|a)‖_max` over outcomes with `P(a) > TOL_PROB`.
pub fn bayes_mixture_check(s: &EntangledScenario) -> Result<f64> {
    let prior = prior_state(s)?;
    let mut mixture = linalg::zeros(s.d2());
    for a in s.a_obs.eigenvalues() {
        match posterior_with_probability(s, a) {
            Ok((posterior, p)) => mixture += posterior.matrix().scale(p),
            Err(Error::ZeroProbability { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(max_abs_diff(prior.matrix(), &mixture))
}

/// Random scenario for sweeps: full-rank `ρ₁₂`, random `X` with integer
/// spectrum, random Hamiltonians, `t ∈ (0, 2]`, `τ ∈ [0, 2)`.
pub fn random_scenario(
    rng: &mut FixtureRng,
    a_obs: &Observable,
    d2: usize,
) -> Result<EntangledScenario> {
    let d1 = a_obs.dim();
    let rho12 = DensityOperator::new(rng.density_matrix(d1 * d2))?
        .with_dims(SubsystemDims::new(vec![d1, d2])?)?;
    let x_values: Vec<f64> = (0..d2).map(|_| rng.between(0, 2) as f64).collect();
    let x_obs = Observable::new(conjugate(&rng.haar_unitary(d2), &linalg::diag(&x_values)))?;
    let h1 = rng.hermitian(d1);
    let h2 = rng.hermitian(d2);
    let t = 2.0 - rng.uniform_range(0.0, 2.0);
    let tau = rng.uniform_range(0.0, 2.0);
    EntangledScenario::new(rho12, a_obs.clone(), x_obs)?
        .with_hamiltonians(h1, h2)?
        .at_times(t, tau)
}
