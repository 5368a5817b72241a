//! Numerical checks shared by `verify`, `entangled` and `sweep`.

use std::time::Instant;

use reductionlab::entangled::{
    bayes_condition, bayes_mixture_check, joint_distribution_formula, joint_distribution_oracle,
    posterior_state, EntangledScenario, LocalApparatus,
};
use reductionlab::linalg::{max_abs_diff, TOL_OP, TOL_PROB};
use reductionlab::measurement::{
    spanning_states, MeasurementModel, RANDOM_SPANNING_STATES, SPANNING_SEED,
};
use reductionlab::quantum::{born_distribution, rule1_distribution, DensityOperator};
use serde::Serialize;

use crate::error::CliResult;
use crate::format::matrix_value;

/// Thresholds for operator-norm and probability comparisons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub op: f64,
    pub prob: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            op: TOL_OP,
            prob: TOL_PROB,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Operator,
    Probability,
}

impl Tolerances {
    pub fn of(&self, scale: Scale) -> f64 {
        match scale {
            Scale::Operator => self.op,
            Scale::Probability => self.prob,
        }
    }
}

/// One named check. `pass ⇔ max_deviation ≤ tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub check: String,
    pub pass: bool,
    pub max_deviation: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

impl Report {
    pub fn new(check: &str, max_deviation: f64, tolerance: f64) -> Self {
        Self {
            check: check.to_string(),
            pass: max_deviation <= tolerance,
            max_deviation,
            tolerance,
            elapsed_ms: None,
        }
    }

    pub fn human(&self) -> String {
        let mut line = format!(
            "{} {:<24} max_deviation={:.15e} tolerance={:.3e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.check,
            self.max_deviation,
            self.tolerance
        );
        if let Some(ms) = self.elapsed_ms {
            line.push_str(&format!(" elapsed_ms={ms:.3}"));
        }
        line
    }
}

pub(crate) fn timed(
    check: &str,
    tolerance: f64,
    timing: bool,
    f: impl FnOnce() -> CliResult<f64>,
) -> CliResult<Report> {
    let start = Instant::now();
    let deviation = f()?;
    let mut report = Report::new(check, deviation, tolerance);
    if timing {
        report.elapsed_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(report)
}

pub const MEASURING_CONDITION: &str = "measuring_condition";
pub const POVM_COMPLETENESS: &str = "povm_completeness";
pub const BORN_STATISTICS: &str = "born_statistics";
pub const REDUCTION_EQUIVALENCE: &str = "reduction_equivalence";
pub const MIXTURE_IDENTITY: &str = "mixture_identity";
pub const LOCAL_MEASUREMENT: &str = "local_measurement";
pub const BAYES_MIXTURE: &str = "bayes_mixture";
pub const BAYES_CONDITIONALS: &str = "bayes_conditionals";

pub fn model_states(model: &MeasurementModel, seed: u64) -> Vec<DensityOperator> {
    spanning_states(model.object_dim(), RANDOM_SPANNING_STATES, seed)
}

/// Largest per-outcome gap between model statistics and Born statistics.
pub fn born_statistics_deviation(
    model: &MeasurementModel,
    states: &[DensityOperator],
) -> CliResult<f64> {
    let mut worst: f64 = 0.0;
    for rho in states {
        let via_model = model.outcome_probability(rho)?;
        let via_born = born_distribution(model.measured(), rho)?;
        worst = worst.max(via_model.max_abs_diff(&via_born));
    }
    Ok(worst)
}

pub fn mixture_deviation(model: &MeasurementModel, states: &[DensityOperator]) -> CliResult<f64> {
    let mut worst: f64 = 0.0;
    for rho in states {
        worst = worst.max(model.mixture_identity_check(rho)?);
    }
    Ok(worst)
}

/// Partial-trace reduction against the sandwiched reduction, over outcomes
/// with non-negligible probability.
pub fn reduction_equivalence_deviation(
    model: &MeasurementModel,
    states: &[DensityOperator],
) -> CliResult<f64> {
    let mut worst: f64 = 0.0;
    for rho in states {
        for (a, p) in model.outcome_probability(rho)?.entries() {
            if *p <= TOL_PROB {
                continue;
            }
            let plain = model.state_reduction(rho, *a)?;
            let sandwiched = model.state_reduction_sandwiched(rho, *a)?;
            worst = worst.max(max_abs_diff(plain.matrix(), sandwiched.matrix()));
        }
    }
    Ok(worst)
}

pub fn local_measurement_deviation(s: &EntangledScenario, app: &LocalApparatus) -> CliResult<f64> {
    let formula = joint_distribution_formula(s)?;
    let oracle = joint_distribution_oracle(s, app)?;
    Ok(formula.total_variation(&oracle))
}

/// Born statistics of each posterior against the joint's conditionals.
pub fn bayes_conditionals_deviation(s: &EntangledScenario) -> CliResult<f64> {
    let joint = joint_distribution_formula(s)?;
    let mut worst: f64 = 0.0;
    for (a, p) in joint.marginal_a()?.entries() {
        if *p <= TOL_PROB {
            continue;
        }
        let posterior = posterior_state(s, *a)?;
        let predicted = rule1_distribution(&posterior, s.h2(), s.x_obs(), s.tau())?;
        worst = worst.max(bayes_condition(&joint, *a)?.max_abs_diff(&predicted));
    }
    Ok(worst)
}

pub fn bayes_mixture_deviation(s: &EntangledScenario) -> CliResult<f64> {
    Ok(bayes_mixture_check(s)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessJson {
    pub outcome: f64,
    pub probability: f64,
    pub deviation: f64,
    pub input: Vec<Vec<[f64; 2]>>,
    pub reduced: Vec<Vec<[f64; 2]>>,
    pub predicted: Vec<Vec<[f64; 2]>>,
}

/// Informational: whether reductions follow the projection postulate.
/// `projective` is absent when the model fails the measuring condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub projective: Option<bool>,
    pub witness: Option<WitnessJson>,
}

pub fn classify(model: &MeasurementModel) -> CliResult<Classification> {
    match model.projection_postulate_witness() {
        Ok(None) => Ok(Classification {
            projective: Some(true),
            witness: None,
        }),
        Ok(Some(w)) => Ok(Classification {
            projective: Some(false),
            witness: Some(WitnessJson {
                outcome: w.outcome,
                probability: w.probability,
                deviation: w.deviation,
                input: matrix_value(w.input.matrix()),
                reduced: matrix_value(w.reduced.matrix()),
                predicted: matrix_value(w.predicted.matrix()),
            }),
        }),
        Err(reductionlab::Error::UnverifiedModel { .. }) => Ok(Classification {
            projective: None,
            witness: None,
        }),
        Err(e) => Err(e.into()),
    }
}

/// The structural checks run by `verify`, in a fixed order.
pub fn model_checks(
    model: &MeasurementModel,
    tol: Tolerances,
    timing: bool,
) -> CliResult<Vec<Report>> {
    let states = model_states(model, SPANNING_SEED);
    Ok(vec![
        timed(MEASURING_CONDITION, tol.op, timing, || {
            Ok(model.verify_measures().max_deviation)
        })?,
        timed(POVM_COMPLETENESS, tol.op, timing, || {
            Ok(model.povm_deviation())
        })?,
        timed(BORN_STATISTICS, tol.prob, timing, || {
            born_statistics_deviation(model, &states)
        })?,
        timed(MIXTURE_IDENTITY, tol.op, timing, || {
            mixture_deviation(model, &states)
        })?,
        timed(REDUCTION_EQUIVALENCE, tol.op, timing, || {
            reduction_equivalence_deviation(model, &states)
        })?,
    ])
}
