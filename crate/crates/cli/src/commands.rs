use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use reductionlab::entangled::{
    joint_distribution_formula, joint_distribution_oracle, posterior_state, prior_state,
    random_scenario, JointDistribution, LocalApparatus,
};
use reductionlab::linalg::{ComplexMatrix, TOL_PROB};
use reductionlab::quantum::DensityOperator;
use reductionlab::random::FixtureRng;
use reductionlab::zoo;
use serde::Serialize;

use crate::checks::{self, Classification, Report, Tolerances};
use crate::error::{CliError, CliResult};
use crate::format::{self, export_model, matrix_value};

type Rows = Vec<Vec<[f64; 2]>>;

/// Largest dimension accepted by `sweep`.
pub const MAX_SWEEP_DIM: usize = 8;

fn human_matrix(out: &mut String, m: &ComplexMatrix) {
    for i in 0..m.nrows() {
        out.push_str("  ");
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            let _ = write!(out, " {:+.15e}{:+.15e}i", z.re, z.im);
        }
        out.push('\n');
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub model: String,
    pub object_dim: usize,
    pub apparatus_dim: usize,
    pub checks: Vec<Report>,
    pub classification: Classification,
    pub pass: bool,
}

impl VerifyReport {
    pub fn human(&self) -> String {
        let mut out = format!(
            "model {} (object {}, apparatus {})\n",
            self.model, self.object_dim, self.apparatus_dim
        );
        for r in &self.checks {
            out.push_str(&r.human());
            out.push('\n');
        }
        match (self.classification.projective, &self.classification.witness) {
            (Some(true), _) => {
                out.push_str("INFO projective: reductions follow the projection postulate\n")
            }
            (Some(false), Some(w)) => {
                let _ = writeln!(
                    out,
                    "INFO non-projective: outcome {:.15e} with probability {:.15e} deviates by {:.15e}",
                    w.outcome, w.probability, w.deviation
                );
            }
            _ => out.push_str("INFO unclassified: model does not measure its claimed observable\n"),
        }
        out.push_str(if self.pass {
            "verify: PASS\n"
        } else {
            "verify: FAIL\n"
        });
        out
    }
}

pub fn cmd_verify(path: &Path, tol: Tolerances, timing: bool) -> CliResult<VerifyReport> {
    let loaded = format::load_model(path)?;
    let model = &loaded.model;
    let checks = checks::model_checks(model, tol, timing)?;
    let classification = checks::classify(model)?;
    Ok(VerifyReport {
        model: loaded.name.clone(),
        object_dim: model.object_dim(),
        apparatus_dim: model.apparatus_dim(),
        pass: checks.iter().all(|r| r.pass),
        checks,
        classification,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReduceReport {
    pub outcome: f64,
    pub probability: f64,
    pub state: Rows,
}

impl ReduceReport {
    pub fn human(&self, state: &ComplexMatrix) -> String {
        let mut out = format!(
            "outcome {:.15e}\nprobability {:.15e}\nstate\n",
            self.outcome, self.probability
        );
        human_matrix(&mut out, state);
        out
    }
}

/// `k` (basis index), `+`, `-`, `+i`, `-i` (on levels 0 and 1), `mixed`
/// or `uniform`, or `@path` to a JSON matrix.
pub fn parse_state_spec(spec: &str, dim: usize) -> CliResult<DensityOperator> {
    if let Some(path) = spec.strip_prefix('@') {
        return format::load_state_matrix(Path::new(path), dim);
    }
    let phase = match spec {
        "mixed" | "uniform" => return Ok(DensityOperator::maximally_mixed(dim)),
        "+" => Complex64::new(1.0, 0.0),
        "-" => Complex64::new(-1.0, 0.0),
        "+i" => Complex64::new(0.0, 1.0),
        "-i" => Complex64::new(0.0, -1.0),
        _ => {
            let k: usize = spec
                .parse()
                .map_err(|_| CliError::Usage(format!("unrecognized state spec {spec:?}")))?;
            if k >= dim {
                return Err(CliError::Validation(format!(
                    "basis index {k} out of range for dimension {dim}"
                )));
            }
            return Ok(DensityOperator::basis(dim, k));
        }
    };
    if dim < 2 {
        return Err(CliError::Validation(format!(
            "state {spec:?} needs dimension at least 2"
        )));
    }
    let mut psi = vec![Complex64::new(0.0, 0.0); dim];
    psi[0] = Complex64::new(1.0, 0.0);
    psi[1] = phase;
    Ok(DensityOperator::pure(&psi)?)
}

pub fn cmd_reduce(
    path: &Path,
    spec: &str,
    outcome: f64,
) -> CliResult<(ReduceReport, ComplexMatrix)> {
    let model = format::load_model(path)?.model;
    let rho = parse_state_spec(spec, model.object_dim())?;
    let index = model.measured().outcome_index(outcome).ok_or_else(|| {
        CliError::Validation(format!(
            "{outcome} is not an eigenvalue of the measured observable"
        ))
    })?;
    let a = model.outcomes()[index];
    let probability = model
        .outcome_probability(&rho)?
        .probability(a)
        .unwrap_or(0.0);
    let reduced = model.state_reduction(&rho, a)?;
    let report = ReduceReport {
        outcome: a,
        probability,
        state: matrix_value(reduced.matrix()),
    };
    Ok((report, reduced.into_matrix()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointEntry {
    pub a: f64,
    pub x: f64,
    pub probability: f64,
}

fn joint_entries(j: &JointDistribution) -> Vec<JointEntry> {
    j.entries()
        .iter()
        .map(|&((a, x), probability)| JointEntry { a, x, probability })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorEntry {
    pub a: f64,
    pub probability: f64,
    pub state: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntangledReport {
    pub scenario: String,
    pub formula_joint: Vec<JointEntry>,
    pub oracle_joint: Option<Vec<JointEntry>>,
    pub checks: Vec<Report>,
    pub prior: Rows,
    pub posteriors: Vec<PosteriorEntry>,
    pub independent: bool,
    pub pass: bool,
}

fn rows_matrix(rows: &Rows) -> ComplexMatrix {
    let n = rows.len();
    ComplexMatrix::from_row_iterator(
        n,
        n,
        rows.iter()
            .flatten()
            .map(|[re, im]| Complex64::new(*re, *im)),
    )
}

impl EntangledReport {
    pub fn human(&self) -> String {
        let mut out = format!("scenario {}\njoint (formula)\n", self.scenario);
        let table = |out: &mut String, entries: &[JointEntry]| {
            for e in entries {
                let _ = writeln!(
                    out,
                    "  a={:+.15e} x={:+.15e} p={:.15e}",
                    e.a, e.x, e.probability
                );
            }
        };
        table(&mut out, &self.formula_joint);
        if let Some(oracle) = &self.oracle_joint {
            out.push_str("joint (apparatus oracle)\n");
            table(&mut out, oracle);
        }
        out.push_str("prior state\n");
        human_matrix(&mut out, &rows_matrix(&self.prior));
        for p in &self.posteriors {
            let _ = writeln!(out, "posterior a={:+.15e} P={:.15e}", p.a, p.probability);
            human_matrix(&mut out, &rows_matrix(&p.state));
        }
        for r in &self.checks {
            out.push_str(&r.human());
            out.push('\n');
        }
        if self.independent {
            out.push_str("INFO independent: conditionals equal the marginal\n");
        }
        out.push_str(if self.pass {
            "entangled: PASS\n"
        } else {
            "entangled: FAIL\n"
        });
        out
    }
}

pub fn cmd_entangled(path: &Path, tol: Tolerances, timing: bool) -> CliResult<EntangledReport> {
    let loaded = format::load_scenario(path)?;
    let s = &loaded.scenario;
    let formula = joint_distribution_formula(s)?;
    let mut checks = Vec::new();
    let oracle_joint = match &loaded.apparatus {
        Some(app) => {
            checks.push(checks::timed(
                checks::LOCAL_MEASUREMENT,
                tol.op,
                timing,
                || checks::local_measurement_deviation(s, app),
            )?);
            Some(joint_entries(&joint_distribution_oracle(s, app)?))
        }
        None => None,
    };
    checks.push(checks::timed(
        checks::BAYES_MIXTURE,
        tol.op,
        timing,
        || checks::bayes_mixture_deviation(s),
    )?);
    checks.push(checks::timed(
        checks::BAYES_CONDITIONALS,
        tol.prob,
        timing,
        || checks::bayes_conditionals_deviation(s),
    )?);
    let mut posteriors = Vec::new();
    for (a, p) in formula.marginal_a()?.entries() {
        if *p > TOL_PROB {
            let state = posterior_state(s, *a)?;
            posteriors.push(PosteriorEntry {
                a: *a,
                probability: *p,
                state: matrix_value(state.matrix()),
            });
        }
    }
    Ok(EntangledReport {
        scenario: loaded.name.clone(),
        formula_joint: joint_entries(&formula),
        oracle_joint,
        prior: matrix_value(prior_state(s)?.matrix()),
        posteriors,
        independent: formula.is_independent(tol.op)?,
        pass: checks.iter().all(|r| r.pass),
        checks,
    })
}

/// Worst case of one invariant across a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCheck {
    #[serde(flatten)]
    pub report: Report,
    pub worst_trial_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub seed: u64,
    pub trials: usize,
    pub dims: [usize; 2],
    pub checks: Vec<SweepCheck>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

impl SweepReport {
    pub fn human(&self) -> String {
        let mut out = format!(
            "sweep seed={} trials={} dims={}..{}\n",
            self.seed, self.trials, self.dims[0], self.dims[1]
        );
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} worst_trial_seed={}",
                c.report.human(),
                c.worst_trial_seed
            );
        }
        if let Some(ms) = self.elapsed_ms {
            let _ = writeln!(out, "elapsed_ms={ms:.3}");
        }
        out.push_str(if self.pass {
            "sweep: PASS\n"
        } else {
            "sweep: FAIL\n"
        });
        out
    }
}

/// Invariants run per sweep trial, with the scale of their tolerance.
pub const SWEEP_CHECKS: [(&str, checks::Scale); 8] = [
    (checks::MEASURING_CONDITION, checks::Scale::Operator),
    (checks::POVM_COMPLETENESS, checks::Scale::Operator),
    (checks::BORN_STATISTICS, checks::Scale::Probability),
    (checks::MIXTURE_IDENTITY, checks::Scale::Operator),
    (checks::REDUCTION_EQUIVALENCE, checks::Scale::Operator),
    (checks::LOCAL_MEASUREMENT, checks::Scale::Operator),
    (checks::BAYES_MIXTURE, checks::Scale::Operator),
    (checks::BAYES_CONDITIONALS, checks::Scale::Probability),
];

/// Deviations of one trial, in `SWEEP_CHECKS` order. The trial's object,
/// apparatus and distant dimensions are drawn from `[lo, hi]` by its seed.
pub fn sweep_trial(seed: u64, lo: usize, hi: usize) -> CliResult<[f64; 8]> {
    let mut rng = FixtureRng::new(seed);
    let (d, m, d2) = (
        rng.between(lo, hi),
        rng.between(lo, hi),
        rng.between(lo, hi),
    );
    let model = zoo::random_indirect_model(seed, d, m)?.model;
    let states = checks::model_states(&model, seed);
    let scenario = random_scenario(&mut rng, model.measured(), d2)?;
    let app = LocalApparatus::new(model.clone(), &scenario)?;
    Ok([
        model.verify_measures().max_deviation,
        model.povm_deviation(),
        checks::born_statistics_deviation(&model, &states)?,
        checks::mixture_deviation(&model, &states)?,
        checks::reduction_equivalence_deviation(&model, &states)?,
        checks::local_measurement_deviation(&scenario, &app)?,
        checks::bayes_mixture_deviation(&scenario)?,
        checks::bayes_conditionals_deviation(&scenario)?,
    ])
}

/// Runs trials with seeds `seed, seed+1, …` in parallel; the report does not
/// depend on scheduling.
pub fn cmd_sweep(
    seed: u64,
    trials: usize,
    dims: [usize; 2],
    tol: Tolerances,
    timing: bool,
) -> CliResult<SweepReport> {
    let [lo, hi] = dims;
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if lo == 0 || lo > hi || hi > MAX_SWEEP_DIM {
        return Err(CliError::Usage(format!(
            "--dims must satisfy 1 <= lo <= hi <= {MAX_SWEEP_DIM}"
        )));
    }
    let start = Instant::now();
    let results: Vec<(u64, [f64; 8])> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let trial_seed = seed.wrapping_add(i);
            sweep_trial(trial_seed, lo, hi).map(|devs| (trial_seed, devs))
        })
        .collect::<CliResult<_>>()?;
    let checks: Vec<SweepCheck> = SWEEP_CHECKS
        .iter()
        .enumerate()
        .map(|(k, (name, scale))| {
            let (mut worst, mut worst_seed) = (0.0_f64, results[0].0);
            for (s, devs) in &results {
                // NaN counts as worse than anything.
                if devs[k].is_nan() || devs[k] > worst {
                    worst = devs[k];
                    worst_seed = *s;
                    if worst.is_nan() {
                        break;
                    }
                }
            }
            SweepCheck {
                report: Report::new(name, worst, tol.of(*scale)),
                worst_trial_seed: worst_seed,
            }
        })
        .collect();
    Ok(SweepReport {
        seed,
        trials,
        dims,
        pass: checks.iter().all(|c| c.report.pass),
        checks,
        elapsed_ms: timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExportReport {
    pub directory: String,
    pub files: Vec<String>,
}

pub fn cmd_export_zoo(dir: &Path, seed: u64) -> CliResult<ExportReport> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in zoo::standard_zoo(seed) {
        let file = dir.join(format!("{}.json", entry.name));
        std::fs::write(&file, export_model(&entry.name, &entry.notes, &entry.model))
            .map_err(|e| CliError::io(&file, e))?;
        files.push(file.display().to_string());
    }
    Ok(ExportReport {
        directory: dir.display().to_string(),
        files,
    })
}
