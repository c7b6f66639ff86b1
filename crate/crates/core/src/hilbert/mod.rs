//! Dense finite-dimensional complex linear algebra: states, orthonormal
//! bases, Hermitian observables and exact spectral propagation.

mod jacobi;
mod matrix;

pub use jacobi::{eigendecompose_hermitian, MAX_DIM};
pub use matrix::ComplexMatrix;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::phase::C64;

/// Tolerance on unit norm and on orthonormality of stored vectors.
pub const UNIT_TOL: f64 = 1e-10;

/// A normalized state vector with a display label.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
    label: String,
}

impl StateVector {
    /// Wraps amplitudes that must already have unit norm (within 1e-10).
    pub fn new(amplitudes: Vec<C64>, label: impl Into<String>) -> Result<Self> {
        check_finite(&amplitudes)?;
        let norm = norm2(&amplitudes).sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotNormalized {
                deviation: (norm - 1.0).abs(),
            });
        }
        Ok(Self {
            amplitudes,
            label: label.into(),
        })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(mut amplitudes: Vec<C64>, label: impl Into<String>) -> Result<Self> {
        check_finite(&amplitudes)?;
        let norm = norm2(&amplitudes).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNorm { threshold: 0.0 });
        }
        for z in &mut amplitudes {
            *z /= norm;
        }
        Ok(Self {
            amplitudes,
            label: label.into(),
        })
    }

    /// The `k`-th computational basis vector of dimension `dim`.
    pub fn basis_vector(dim: usize, k: usize, label: impl Into<String>) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[k] = C64::new(1.0, 0.0);
        Self {
            amplitudes,
            label: label.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Multiplies every amplitude by `exp(i phase)`.
    pub fn with_global_phase(&self, phase: f64) -> Self {
        let f = Complex64::from_polar(1.0, phase);
        Self {
            amplitudes: self.amplitudes.iter().map(|z| z * f).collect(),
            label: self.label.clone(),
        }
    }
}

/// `<u|v>`, conjugate-linear in the first argument.
pub fn inner(u: &StateVector, v: &StateVector) -> Result<C64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: v.dim(),
        });
    }
    Ok(dot(u.amplitudes(), v.amplitudes()))
}

/// Unchecked `<u|v>` on raw slices of equal length.
pub(crate) fn dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub(crate) fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn check_finite(v: &[C64]) -> Result<()> {
    match v
        .iter()
        .position(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// An ordered orthonormal basis with one label per vector.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthonormalBasis {
    vectors: Vec<StateVector>,
}

impl OrthonormalBasis {
    /// Builds a basis from the columns of a unitary matrix.
    pub fn from_columns(matrix: &ComplexMatrix, labels: Vec<String>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.rows(),
                found: matrix.cols(),
            });
        }
        if labels.len() != matrix.cols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.cols(),
                found: labels.len(),
            });
        }
        let vectors = labels
            .into_iter()
            .enumerate()
            .map(|(j, label)| StateVector {
                amplitudes: matrix.column(j),
                label,
            })
            .collect();
        Self::from_vectors(vectors)
    }

    /// Validates pairwise orthonormality to 1e-10.
    pub fn from_vectors(vectors: Vec<StateVector>) -> Result<Self> {
        let dim = vectors.len();
        for v in &vectors {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.dim(),
                });
            }
            check_finite(v.amplitudes())?;
        }
        let basis = Self { vectors };
        let deviation = basis.orthonormality_defect();
        if deviation > UNIT_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(basis)
    }

    /// The computational basis with labels `"0"`, `"1"`, ...
    pub fn computational(dim: usize) -> Self {
        Self {
            vectors: (0..dim)
                .map(|k| StateVector::basis_vector(dim, k, k.to_string()))
                .collect(),
        }
    }

    /// `max |<u_i|u_j> - delta_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, u) in self.vectors.iter().enumerate() {
            for (j, v) in self.vectors.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                let d = (dot(u.amplitudes(), v.amplitudes()) - target).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vector(&self, k: usize) -> &StateVector {
        &self.vectors[k]
    }

    pub fn vectors(&self) -> &[StateVector] {
        &self.vectors
    }

    pub fn labels(&self) -> Vec<String> {
        self.vectors.iter().map(|v| v.label.clone()).collect()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.vectors.iter().position(|v| v.label == label)
    }

    /// Column matrix whose `k`-th column is the `k`-th basis vector.
    pub fn to_matrix(&self) -> ComplexMatrix {
        let n = self.dim();
        ComplexMatrix::from_fn(n, n, |i, j| self.vectors[j].amplitudes[i])
    }

    /// Same basis with vector `k` multiplied by `exp(i phases[k])`.
    pub fn with_phases(&self, phases: &[f64]) -> Self {
        Self {
            vectors: self
                .vectors
                .iter()
                .zip(phases)
                .map(|(v, &p)| v.with_global_phase(p))
                .collect(),
        }
    }

    /// Amplitudes `<k|psi>` for every basis vector `k`.
    pub fn coefficients(&self, psi: &StateVector) -> Result<Vec<C64>> {
        self.vectors.iter().map(|v| inner(v, psi)).collect()
    }
}

/// Eigenvalues (ascending) and phase-fixed eigenvectors of a Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: OrthonormalBasis,
    groups: Vec<Vec<usize>>,
    group_of: Vec<usize>,
    eps_deg: f64,
}

impl SpectralDecomposition {
    /// Assembles a decomposition from known eigenpairs. Eigenvalues must be
    /// sorted ascending; degeneracy groups are formed by chaining neighbours
    /// closer than `eps_deg`.
    pub fn from_eigenpairs(
        eigenvalues: Vec<f64>,
        eigenvectors: OrthonormalBasis,
        eps_deg: f64,
    ) -> Result<Self> {
        if eigenvalues.len() != eigenvectors.dim() {
            return Err(Error::DimensionMismatch {
                expected: eigenvectors.dim(),
                found: eigenvalues.len(),
            });
        }
        if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter(
                "eigenvalues must be sorted ascending".into(),
            ));
        }
        if eigenvalues.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter("non-finite eigenvalue".into()));
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut group_of = Vec::with_capacity(eigenvalues.len());
        for (i, &e) in eigenvalues.iter().enumerate() {
            let joins = i > 0 && (e - eigenvalues[i - 1]).abs() <= eps_deg;
            if joins {
                groups.last_mut().expect("nonempty").push(i);
            } else {
                groups.push(vec![i]);
            }
            group_of.push(groups.len() - 1);
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
            groups,
            group_of,
            eps_deg,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn energy(&self, n: usize) -> f64 {
        self.eigenvalues[n]
    }

    pub fn eigenvectors(&self) -> &OrthonormalBasis {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, n: usize) -> &StateVector {
        self.eigenvectors.vector(n)
    }

    pub fn degeneracy_groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Members of the degeneracy group containing level `n`.
    pub fn group_members(&self, n: usize) -> &[usize] {
        &self.groups[self.group_of[n]]
    }

    pub fn is_degenerate(&self, n: usize) -> bool {
        self.group_members(n).len() > 1
    }

    pub fn eps_deg(&self) -> f64 {
        self.eps_deg
    }

    /// Largest Bohr frequency numerator `max |E_n - E_m|`.
    pub fn spectral_span(&self) -> f64 {
        match (self.eigenvalues.first(), self.eigenvalues.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }

    /// Smallest gap between distinct degeneracy groups, `None` for a single group.
    pub fn min_gap(&self) -> Option<f64> {
        self.groups
            .windows(2)
            .map(|w| self.eigenvalues[w[1][0]] - self.eigenvalues[*w[0].last().unwrap()])
            .min_by(f64::total_cmp)
    }

    /// `sum_n E_n |n><n|`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.weighted_sum(|n| C64::new(self.eigenvalues[n], 0.0))
    }

    /// Projector onto the eigenspace containing level `n`.
    pub fn eigenspace_projector(&self, n: usize) -> ComplexMatrix {
        let members = self.group_members(n);
        self.weighted_sum(|k| {
            if members.contains(&k) {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// `sum_n w(n) |n><n|`.
    pub fn weighted_sum(&self, w: impl Fn(usize) -> C64) -> ComplexMatrix {
        let d = self.dim();
        let weights: Vec<C64> = (0..d).map(w).collect();
        ComplexMatrix::from_fn(d, d, |i, j| {
            (0..d)
                .map(|n| {
                    let v = self.eigenvectors.vector(n).amplitudes();
                    weights[n] * v[i] * v[j].conj()
                })
                .sum()
        })
    }

    /// Applies `exp(-i H t / hbar)` to a raw amplitude vector.
    pub fn evolve(&self, psi: &[C64], t: f64, hbar: f64) -> Vec<C64> {
        let d = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); d];
        for n in 0..d {
            let v = self.eigenvectors.vector(n).amplitudes();
            let c = dot(v, psi) * Complex64::from_polar(1.0, -self.eigenvalues[n] * t / hbar);
            for (o, x) in out.iter_mut().zip(v) {
                *o += c * x;
            }
        }
        out
    }
}

/// `U(t) = sum_n exp(-i E_n t / hbar) |n><n|`.
pub fn propagator(spec: &SpectralDecomposition, t: f64, hbar: f64) -> Result<ComplexMatrix> {
    if !(hbar > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "hbar must be positive, got {hbar}"
        )));
    }
    Ok(spec.weighted_sum(|n| Complex64::from_polar(1.0, -spec.energy(n) * t / hbar)))
}
