//! Model files: a Hamiltonian, named bases and named states.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "dim": 2,
//!   "hbar": 1.0,
//!   "hamiltonian": [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]],
//!   "bases": {
//!     "E": {"eigenbasis_of": "hamiltonian"},
//!     "X": {"matrix": [[[0.7071067811865476, 0], [0.7071067811865476, 0]],
//!                      [[0.7071067811865476, 0], [-0.7071067811865476, 0]]],
//!           "labels": ["+", "-"]}
//!   },
//!   "states": {"plus": [[0.7071067811865476, 0], [0.7071067811865476, 0]]}
//! }
//! ```
//!
//! Basis matrices hold the basis vectors as columns. Eigenbases are ordered by
//! ascending energy and labelled `E0`, `E1`, ... unless labels are given. The
//! eigenbasis is always available under the reserved name `hamiltonian`.

use std::collections::BTreeMap;
use std::path::Path;

use ergophase_core::hilbert::MAX_DIM;
use ergophase_core::{
    eigendecompose_hermitian, ComplexMatrix, OrthonormalBasis, SpectralDecomposition, StateVector,
    C64,
};
use serde::{Deserialize, Serialize};

use crate::error::{parse_json, read_file, CliError, CliResult};
use crate::tolerances::Tolerances;

pub const SCHEMA_VERSION: u32 = 1;
pub const ENERGY_BASIS: &str = "hamiltonian";

type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    pub dim: usize,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub hamiltonian: RawMatrix,
    #[serde(default)]
    pub bases: BTreeMap<String, BasisSpec>,
    #[serde(default)]
    pub states: BTreeMap<String, Vec<[f64; 2]>>,
}

fn default_hbar() -> f64 {
    1.0
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenbasis_of: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<RawMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

/// A validated model with its eigendecomposition.
#[derive(Clone, Debug)]
pub struct ModelSystem {
    pub dim: usize,
    pub hbar: f64,
    pub hamiltonian: ComplexMatrix,
    pub spectrum: SpectralDecomposition,
    bases: BTreeMap<String, OrthonormalBasis>,
    states: BTreeMap<String, StateVector>,
    pub warnings: Vec<String>,
}

fn c(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

fn to_matrix(raw: &RawMatrix, dim: usize, what: &str) -> CliResult<ComplexMatrix> {
    if raw.len() != dim {
        return Err(CliError::Validation(format!(
            "{what} has {} rows, expected {dim}",
            raw.len()
        )));
    }
    for (i, row) in raw.iter().enumerate() {
        if row.len() != dim {
            return Err(CliError::Validation(format!(
                "{what} row {i} has {} entries, expected {dim}",
                row.len()
            )));
        }
        if let Some(j) = row
            .iter()
            .position(|p| !(p[0].is_finite() && p[1].is_finite()))
        {
            return Err(CliError::Validation(format!(
                "{what}[{i}][{j}] is not finite"
            )));
        }
    }
    Ok(ComplexMatrix::from_rows(
        raw.iter()
            .map(|r| r.iter().copied().map(c).collect())
            .collect(),
    )?)
}

fn unique_labels(labels: &[String], name: &str) -> CliResult<()> {
    let mut seen = std::collections::BTreeSet::new();
    for l in labels {
        if l.is_empty() || l.contains('/') {
            return Err(CliError::Validation(format!(
                "basis `{name}` label {l:?} must be nonempty and contain no '/'"
            )));
        }
        if !seen.insert(l.as_str()) {
            return Err(CliError::Validation(format!(
                "basis `{name}` repeats label {l:?}"
            )));
        }
    }
    Ok(())
}

/// Names the worst violation of column orthonormality.
fn unitarity_violation(m: &ComplexMatrix) -> (f64, String) {
    let d = m.cols();
    let cols: Vec<Vec<C64>> = (0..d).map(|j| m.column(j)).collect();
    let mut worst = (0.0, String::new());
    for i in 0..d {
        for j in i..d {
            let ip: C64 = cols[i]
                .iter()
                .zip(&cols[j])
                .map(|(u, v)| u.conj() * v)
                .sum();
            if i == j {
                let norm = ip.re.sqrt();
                let dev = (norm - 1.0).abs();
                if dev > worst.0 {
                    worst = (dev, format!("column {i} has norm {norm}"));
                }
            } else if ip.norm() > worst.0 {
                worst = (
                    ip.norm(),
                    format!("columns {i} and {j} have overlap magnitude {}", ip.norm()),
                );
            }
        }
    }
    worst
}

impl ModelSystem {
    pub fn load(path: &Path, tol: &Tolerances) -> CliResult<Self> {
        let text = read_file(path)?;
        let file: ModelFile = parse_json(&text, &path.display().to_string())?;
        Self::from_file(file, tol)
    }

    pub fn from_json(text: &str, tol: &Tolerances) -> CliResult<Self> {
        Self::from_file(parse_json(text, "<model>")?, tol)
    }

    pub fn from_file(file: ModelFile, tol: &Tolerances) -> CliResult<Self> {
        if file.schema_version != SCHEMA_VERSION {
            return Err(CliError::Validation(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                file.schema_version
            )));
        }
        let dim = file.dim;
        if dim == 0 || dim > MAX_DIM {
            return Err(CliError::Validation(format!(
                "dim must lie in 1..={MAX_DIM}, got {dim}"
            )));
        }
        if !(file.hbar > 0.0 && file.hbar.is_finite()) {
            return Err(CliError::Validation(format!(
                "hbar must be positive, got {}",
                file.hbar
            )));
        }
        let hamiltonian = to_matrix(&file.hamiltonian, dim, "hamiltonian")?;
        let (dev, i, j) = hamiltonian.hermitian_defect();
        if dev > tol.hermitian {
            return Err(CliError::Validation(format!(
                "hamiltonian is not Hermitian: largest asymmetry at entry [{i}][{j}], \
                 |H[{i}][{j}] - conj(H[{j}][{i}])| = {dev:e} > {:e}",
                tol.hermitian
            )));
        }
        let spectrum = eigendecompose_hermitian(&hamiltonian, file.eps_deg)?;
        let energy_labels: Vec<String> = (0..dim).map(|k| format!("E{k}")).collect();

        let mut warnings = Vec::new();
        let mut bases = BTreeMap::new();
        bases.insert(
            ENERGY_BASIS.to_string(),
            relabel(spectrum.eigenvectors(), energy_labels.clone()),
        );
        for (name, spec) in &file.bases {
            if name == ENERGY_BASIS {
                return Err(CliError::Validation(format!(
                    "basis name `{ENERGY_BASIS}` is reserved"
                )));
            }
            if name.contains('/') {
                return Err(CliError::Validation(format!(
                    "basis name {name:?} contains '/'"
                )));
            }
            let labels = spec.labels.clone();
            if let Some(l) = &labels {
                if l.len() != dim {
                    return Err(CliError::Validation(format!(
                        "basis `{name}` has {} labels, expected {dim}",
                        l.len()
                    )));
                }
                unique_labels(l, name)?;
            }
            let basis = match (&spec.eigenbasis_of, &spec.matrix) {
                (Some(of), None) => {
                    if of != ENERGY_BASIS {
                        return Err(CliError::Validation(format!(
                            "basis `{name}`: eigenbasis_of must be \"{ENERGY_BASIS}\", got {of:?}"
                        )));
                    }
                    relabel(
                        spectrum.eigenvectors(),
                        labels.unwrap_or_else(|| energy_labels.clone()),
                    )
                }
                (None, Some(raw)) => {
                    let m = to_matrix(raw, dim, &format!("basis `{name}` matrix"))?;
                    let (dev, what) = unitarity_violation(&m);
                    if dev > tol.basis_unitarity {
                        return Err(CliError::Validation(format!(
                            "basis `{name}` is not unitary: {what} (deviation {dev:e} > {:e})",
                            tol.basis_unitarity
                        )));
                    }
                    let labels =
                        labels.unwrap_or_else(|| (0..dim).map(|k| k.to_string()).collect());
                    OrthonormalBasis::from_columns(&m, labels)?
                }
                _ => {
                    return Err(CliError::Validation(format!(
                        "basis `{name}` needs exactly one of `eigenbasis_of` or `matrix`"
                    )))
                }
            };
            bases.insert(name.clone(), basis);
        }

        let mut states = BTreeMap::new();
        for (name, raw) in &file.states {
            if name.contains('/') {
                return Err(CliError::Validation(format!(
                    "state name {name:?} contains '/'"
                )));
            }
            if raw.len() != dim {
                return Err(CliError::Validation(format!(
                    "state `{name}` has {} amplitudes, expected {dim}",
                    raw.len()
                )));
            }
            let amps: Vec<C64> = raw.iter().copied().map(c).collect();
            if amps.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(CliError::Validation(format!(
                    "state `{name}` has a non-finite amplitude"
                )));
            }
            let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(CliError::Validation(format!(
                    "state `{name}` is the zero vector"
                )));
            }
            if (norm - 1.0).abs() > tol.state_normalization {
                warnings.push(format!("state `{name}` had norm {norm}; renormalized"));
            }
            states.insert(name.clone(), StateVector::normalized(amps, name.clone())?);
        }

        Ok(Self {
            dim,
            hbar: file.hbar,
            hamiltonian,
            spectrum,
            bases,
            states,
            warnings,
        })
    }

    pub fn basis_names(&self) -> Vec<&str> {
        self.bases.keys().map(String::as_str).collect()
    }

    pub fn state_names(&self) -> Vec<&str> {
        self.states.keys().map(String::as_str).collect()
    }

    pub fn basis(&self, name: &str) -> CliResult<&OrthonormalBasis> {
        self.bases.get(name).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown basis `{name}`; available: {}",
                self.basis_names().join(", ")
            ))
        })
    }

    pub fn bases(&self) -> impl Iterator<Item = (&str, &OrthonormalBasis)> {
        self.bases.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn states(&self) -> impl Iterator<Item = (&str, &StateVector)> {
        self.states.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// A named state, or `basis/label` for a basis vector.
    pub fn state(&self, reference: &str) -> CliResult<StateVector> {
        if let Some(s) = self.states.get(reference) {
            return Ok(s.clone());
        }
        if let Some((basis, label)) = reference.split_once('/') {
            let b = self.basis(basis)?;
            let k = b.index_of(label).ok_or_else(|| {
                CliError::Usage(format!(
                    "basis `{basis}` has no vector `{label}`; labels: {}",
                    b.labels().join(", ")
                ))
            })?;
            return Ok(b.vector(k).clone().with_label(reference));
        }
        Err(CliError::Usage(format!(
            "unknown state `{reference}`; use a state name ({}) or basis/label",
            self.state_names().join(", ")
        )))
    }

    /// Energy level index from a number, an eigenbasis label (`E3`), or
    /// `basis/label` within an eigenbasis.
    pub fn level(&self, reference: &str) -> CliResult<usize> {
        if let Ok(k) = reference.parse::<usize>() {
            if k < self.dim {
                return Ok(k);
            }
            return Err(CliError::Usage(format!(
                "level {k} out of range 0..{}",
                self.dim
            )));
        }
        let energy = &self.bases[ENERGY_BASIS];
        if let Some(k) = energy.index_of(reference) {
            return Ok(k);
        }
        if let Some((basis, label)) = reference.split_once('/') {
            let b = self.basis(basis)?;
            if let Some(k) = b.index_of(label) {
                if b.vector(k).amplitudes() == self.spectrum.eigenvector(k).amplitudes() {
                    return Ok(k);
                }
                return Err(CliError::Usage(format!(
                    "`{reference}` is not an energy eigenvector"
                )));
            }
        }
        Err(CliError::Usage(format!(
            "unknown level `{reference}`; use an index 0..{} or a label E0..E{}",
            self.dim,
            self.dim - 1
        )))
    }
}

fn relabel(basis: &OrthonormalBasis, labels: Vec<String>) -> OrthonormalBasis {
    OrthonormalBasis::from_vectors(
        basis
            .vectors()
            .iter()
            .zip(labels)
            .map(|(v, l)| v.clone().with_label(l))
            .collect(),
    )
    .expect("relabelling keeps orthonormality")
}
