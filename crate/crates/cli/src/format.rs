//! JSON model and scenario files.
//!
//! Complex entries are `[re, im]` pairs. A matrix is either a list of rows or
//! a flat row-major list whose length is a perfect square. Validation errors
//! name the line of the offending key in the source text.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use reductionlab::entangled::{EntangledScenario, LocalApparatus};
use reductionlab::linalg::{self, ComplexMatrix, SubsystemDims, TOL_OP};
use reductionlab::measurement::MeasurementModel;
use reductionlab::quantum::{DensityOperator, Observable};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MatrixJson {
    Rows(Vec<Vec<[f64; 2]>>),
    Flat(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: String,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub notes: Option<String>,
    pub object_dim: usize,
    pub apparatus_dim: usize,
    pub sigma: MatrixJson,
    pub u: MatrixJson,
    pub a_matrix: MatrixJson,
    pub b_matrix: MatrixJson,
    #[serde(default)]
    pub object_hamiltonian: Option<MatrixJson>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub format_version: String,
    #[serde(default)]
    pub name: Option<String>,
    pub dims: [usize; 2],
    pub rho12: MatrixJson,
    pub a_matrix: MatrixJson,
    pub x_matrix: MatrixJson,
    #[serde(default)]
    pub h1: Option<MatrixJson>,
    #[serde(default)]
    pub h2: Option<MatrixJson>,
    #[serde(default)]
    pub t: f64,
    #[serde(default)]
    pub tau: f64,
    #[serde(default)]
    pub apparatus: Option<ModelFile>,
}

#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub name: String,
    pub notes: String,
    pub model: MeasurementModel,
}

#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub name: String,
    pub scenario: EntangledScenario,
    pub apparatus: Option<LocalApparatus>,
}

/// 1-based line of the first `"key":` at or after byte `from`.
fn key_line(source: &str, key: &str, from: usize) -> Option<usize> {
    let needle = format!("\"{key}\"");
    let mut start = from.min(source.len());
    while let Some(pos) = source[start..].find(&needle) {
        let at = start + pos;
        let rest = source[at + needle.len()..].trim_start();
        if rest.starts_with(':') {
            return Some(source[..at].matches('\n').count() + 1);
        }
        start = at + needle.len();
    }
    None
}

/// Byte offset of the first `"key":`, used to scope nested lookups.
fn key_offset(source: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    source.find(&needle).unwrap_or(0)
}

struct Anchor<'a> {
    source: &'a str,
    from: usize,
    prefix: &'a str,
}

impl Anchor<'_> {
    fn error(&self, key: &str, message: impl std::fmt::Display) -> CliError {
        let path = format!("{}{key}", self.prefix);
        match key_line(self.source, key, self.from) {
            Some(line) => CliError::Validation(format!("line {line}: {path}: {message}")),
            None => CliError::Validation(format!("{path}: {message}")),
        }
    }

    fn matrix(&self, key: &str, m: &MatrixJson, dim: usize) -> CliResult<ComplexMatrix> {
        decode_matrix(m, dim).map_err(|msg| self.error(key, msg))
    }

    fn hermitian(&self, key: &str, m: &MatrixJson, dim: usize) -> CliResult<ComplexMatrix> {
        let h = self.matrix(key, m, dim)?;
        let deviation = linalg::hermiticity_deviation(&h);
        if deviation > TOL_OP {
            return Err(self.error(
                key,
                format!("not Hermitian (max deviation {deviation:.3e})"),
            ));
        }
        Ok(h)
    }
}

fn decode_matrix(m: &MatrixJson, dim: usize) -> Result<ComplexMatrix, String> {
    let entries: Vec<[f64; 2]> = match m {
        MatrixJson::Rows(rows) => {
            if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                let widths: Vec<usize> = rows.iter().map(Vec::len).collect();
                return Err(format!(
                    "expected {dim}x{dim} matrix, got {} rows of widths {widths:?}",
                    rows.len()
                ));
            }
            rows.iter().flatten().copied().collect()
        }
        MatrixJson::Flat(flat) => {
            if flat.len() != dim * dim {
                return Err(format!(
                    "expected {} entries for a {dim}x{dim} matrix, got {}",
                    dim * dim,
                    flat.len()
                ));
            }
            flat.clone()
        }
    };
    if entries.iter().flatten().any(|v| !v.is_finite()) {
        return Err("non-finite entry".into());
    }
    Ok(ComplexMatrix::from_row_iterator(
        dim,
        dim,
        entries.iter().map(|[re, im]| Complex64::new(*re, *im)),
    ))
}

fn read_source(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn deserialize<'a, T: Deserialize<'a>>(source: &'a str) -> CliResult<T> {
    serde_json::from_str(source).map_err(|e| CliError::Parse(e.to_string()))
}

fn build_model(file: &ModelFile, anchor: &Anchor) -> CliResult<LoadedModel> {
    if file.format_version != FORMAT_VERSION {
        return Err(anchor.error(
            "format_version",
            format!(
                "unsupported version {:?}, expected {FORMAT_VERSION:?}",
                file.format_version
            ),
        ));
    }
    let (d, m) = (file.object_dim, file.apparatus_dim);
    if d == 0 {
        return Err(anchor.error("object_dim", "must be at least 1"));
    }
    if m == 0 {
        return Err(anchor.error("apparatus_dim", "must be at least 1"));
    }
    let sigma = DensityOperator::new(anchor.matrix("sigma", &file.sigma, m)?)
        .map_err(|e| anchor.error("sigma", e))?;
    let u = anchor.matrix("u", &file.u, d * m)?;
    let deviation = linalg::unitarity_deviation(&u);
    if deviation > TOL_OP {
        return Err(anchor.error(
            "u",
            format!("interaction is not unitary (max deviation {deviation:.3e})"),
        ));
    }
    let measured = Observable::new(anchor.matrix("a_matrix", &file.a_matrix, d)?)
        .map_err(|e| anchor.error("a_matrix", e))?;
    let probe = Observable::new(anchor.matrix("b_matrix", &file.b_matrix, m)?)
        .map_err(|e| anchor.error("b_matrix", e))?;
    let mut model = MeasurementModel::new(sigma, u, probe, measured)
        .map_err(|e| anchor.error("b_matrix", e))?;
    if let Some(h) = &file.object_hamiltonian {
        let h = anchor.hermitian("object_hamiltonian", h, d)?;
        model = model
            .with_hamiltonian(h)
            .map_err(|e| anchor.error("object_hamiltonian", e))?;
    }
    Ok(LoadedModel {
        name: file.name.clone().unwrap_or_default(),
        notes: file.notes.clone().unwrap_or_default(),
        model,
    })
}

pub fn parse_model(source: &str) -> CliResult<LoadedModel> {
    let file: ModelFile = deserialize(source)?;
    build_model(
        &file,
        &Anchor {
            source,
            from: 0,
            prefix: "",
        },
    )
}

pub fn load_model(path: &Path) -> CliResult<LoadedModel> {
    parse_model(&read_source(path)?)
}

pub fn parse_scenario(source: &str) -> CliResult<LoadedScenario> {
    let file: ScenarioFile = deserialize(source)?;
    let anchor = Anchor {
        source,
        from: 0,
        prefix: "",
    };
    if file.format_version != FORMAT_VERSION {
        return Err(anchor.error(
            "format_version",
            format!(
                "unsupported version {:?}, expected {FORMAT_VERSION:?}",
                file.format_version
            ),
        ));
    }
    let [d1, d2] = file.dims;
    if d1 == 0 || d2 == 0 {
        return Err(anchor.error("dims", "factors must be at least 1"));
    }
    let dims = SubsystemDims::new(vec![d1, d2])?;
    let rho12 = DensityOperator::new(anchor.matrix("rho12", &file.rho12, d1 * d2)?)
        .and_then(|rho| rho.with_dims(dims))
        .map_err(|e| anchor.error("rho12", e))?;
    let a_obs = Observable::new(anchor.matrix("a_matrix", &file.a_matrix, d1)?)
        .map_err(|e| anchor.error("a_matrix", e))?;
    let x_obs = Observable::new(anchor.matrix("x_matrix", &file.x_matrix, d2)?)
        .map_err(|e| anchor.error("x_matrix", e))?;
    let h1 = match &file.h1 {
        Some(h) => anchor.hermitian("h1", h, d1)?,
        None => linalg::zeros(d1),
    };
    let h2 = match &file.h2 {
        Some(h) => anchor.hermitian("h2", h, d2)?,
        None => linalg::zeros(d2),
    };
    let scenario = EntangledScenario::new(rho12, a_obs, x_obs)?
        .with_hamiltonians(h1, h2)?
        .at_times(file.t, file.tau)
        .map_err(|e| {
            anchor.error(
                if file.t.is_finite() && file.t >= 0.0 {
                    "tau"
                } else {
                    "t"
                },
                e,
            )
        })?;
    let apparatus = match &file.apparatus {
        Some(model_file) => {
            let nested = Anchor {
                source,
                from: key_offset(source, "apparatus"),
                prefix: "apparatus.",
            };
            let loaded = build_model(model_file, &nested)?;
            let app = LocalApparatus::new(loaded.model, &scenario)
                .map_err(|e| anchor.error("apparatus", e))?;
            Some(app)
        }
        None => None,
    };
    Ok(LoadedScenario {
        name: file.name.unwrap_or_default(),
        scenario,
        apparatus,
    })
}

pub fn load_scenario(path: &Path) -> CliResult<LoadedScenario> {
    parse_scenario(&read_source(path)?)
}

/// Density matrix from a standalone JSON matrix file.
pub fn load_state_matrix(path: &Path, dim: usize) -> CliResult<DensityOperator> {
    let source = read_source(path)?;
    let m: MatrixJson = deserialize(&source)?;
    let matrix = decode_matrix(&m, dim).map_err(CliError::Validation)?;
    Ok(DensityOperator::new(matrix)?)
}

fn push_number(out: &mut String, v: f64) {
    // serde_json renders the shortest string that round-trips exactly.
    out.push_str(&serde_json::to_string(&v).expect("finite float"));
}

/// Rows of `[re, im]` pairs, one row per line at the given indent.
pub fn matrix_json(m: &ComplexMatrix, indent: &str) -> String {
    let mut out = String::from("[\n");
    for i in 0..m.nrows() {
        out.push_str(indent);
        out.push_str("  [");
        for j in 0..m.ncols() {
            if j > 0 {
                out.push_str(", ");
            }
            out.push('[');
            push_number(&mut out, m[(i, j)].re);
            out.push_str(", ");
            push_number(&mut out, m[(i, j)].im);
            out.push(']');
        }
        out.push(']');
        if i + 1 < m.nrows() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str(indent);
    out.push(']');
    out
}

/// Nested `[[[re, im], ...], ...]` value for embedding in serde output.
pub fn matrix_value(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

/// Model file text. Parsing it back yields bit-identical matrices.
pub fn export_model(name: &str, notes: &str, model: &MeasurementModel) -> String {
    let quote = |s: &str| serde_json::to_string(s).expect("string");
    let mut out = String::from("{\n");
    let _ = writeln!(out, "  \"format_version\": {},", quote(FORMAT_VERSION));
    let _ = writeln!(out, "  \"name\": {},", quote(name));
    let _ = writeln!(out, "  \"notes\": {},", quote(notes));
    let _ = writeln!(out, "  \"object_dim\": {},", model.object_dim());
    let _ = writeln!(out, "  \"apparatus_dim\": {},", model.apparatus_dim());
    let fields = [
        ("sigma", model.sigma().matrix()),
        ("u", model.u()),
        ("a_matrix", model.measured().matrix()),
        ("b_matrix", model.probe().matrix()),
        ("object_hamiltonian", model.object_hamiltonian()),
    ];
    for (k, (key, m)) in fields.iter().enumerate() {
        let sep = if k + 1 < fields.len() { "," } else { "" };
        let _ = writeln!(out, "  \"{key}\": {}{sep}", matrix_json(m, "  "));
    }
    out.push_str("}\n");
    out
}
