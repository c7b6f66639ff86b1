//! Complex probabilities relating non-commuting properties: Kirkwood–Dirac
//! joint distributions, conditional action phase probabilities, their time
//! dependence along an energy eigenstate, and weak values of the energy.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    dot, inner, ComplexMatrix, OrthonormalBasis, SpectralDecomposition, StateVector,
};
use crate::phase::{action_distance, arg, C64};

/// Default threshold below which an overlap counts as orthogonal.
pub const DEFAULT_EPS_SING: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    /// Entries sum to one.
    Joint,
    /// Each column sums to one over the rows.
    Conditional,
    /// Rows are outcomes, columns are times; each column sums to one.
    TimeSeries,
}

/// How the energy condition `n` enters conditional probabilities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    /// Use the individual phase-fixed eigenvector `|n>`.
    #[default]
    Eigenvector,
    /// Use the projector onto the degenerate eigenspace containing `n`.
    Eigenspace,
}

/// A labelled two-axis table of complex probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexProbTable {
    kind: TableKind,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    times: Option<Vec<f64>>,
    values: Vec<C64>,
    /// Set when entries depend on the choice of vectors inside a degenerate level.
    pub basis_dependent: bool,
}

impl ComplexProbTable {
    pub fn new(
        kind: TableKind,
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        values: Vec<C64>,
    ) -> Result<Self> {
        let expected = row_labels.len() * col_labels.len();
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(Self {
            kind,
            row_labels,
            col_labels,
            times: None,
            values,
            basis_dependent: false,
        })
    }

    /// Time-series table with rows `row_labels` and one column per time.
    pub fn time_series(row_labels: Vec<String>, times: Vec<f64>, values: Vec<C64>) -> Result<Self> {
        let col_labels = times.iter().map(|t| t.to_string()).collect();
        let mut table = Self::new(TableKind::TimeSeries, row_labels, col_labels, values)?;
        table.times = Some(times);
        Ok(table)
    }

    pub fn kind(&self) -> TableKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn times(&self) -> Option<&[f64]> {
        self.times.as_deref()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.values[row * self.cols() + col]
    }

    pub fn row(&self, row: usize) -> &[C64] {
        let c = self.cols();
        &self.values[row * c..(row + 1) * c]
    }

    pub fn column(&self, col: usize) -> Vec<C64> {
        (0..self.rows()).map(|r| self.get(r, col)).collect()
    }

    pub fn total(&self) -> C64 {
        self.values.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<C64> {
        (0..self.rows()).map(|r| self.row(r).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<C64> {
        (0..self.cols())
            .map(|c| self.column(c).iter().sum())
            .collect()
    }

    /// Largest deviation from the normalization implied by [`TableKind`].
    pub fn normalization_defect(&self) -> f64 {
        match self.kind {
            TableKind::Joint => (self.total() - 1.0).norm(),
            TableKind::Conditional | TableKind::TimeSeries => self
                .col_sums()
                .iter()
                .map(|s| (s - 1.0).norm())
                .fold(0.0, f64::max),
        }
    }

    /// Swaps rows and columns.
    pub fn transposed(&self) -> Self {
        let (r, c) = (self.rows(), self.cols());
        let values = (0..c)
            .flat_map(|j| (0..r).map(move |i| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        Self {
            kind: self.kind,
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
            times: None,
            values,
            basis_dependent: self.basis_dependent,
        }
    }
}

/// Complex energy weak values on a strictly increasing time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakValueSeries {
    times: Vec<f64>,
    values: Vec<C64>,
}

impl WeakValueSeries {
    pub fn new(times: Vec<f64>, values: Vec<C64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: values.len(),
            });
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::GridMismatch(
                "times must be strictly increasing".into(),
            ));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Split of the total action phase into a time part, the dynamical phase
/// `E_n t`, and an energy part.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionDecomposition {
    pub s_t: f64,
    pub e_n_t: f64,
    pub s_e: f64,
    pub total: f64,
    pub hbar: f64,
}

impl ActionDecomposition {
    /// `|total - (S_t + E_n t - S_E)|` modulo `2 pi hbar`.
    pub fn identity_defect(&self) -> f64 {
        action_distance(self.total, self.s_t + self.e_n_t - self.s_e, self.hbar)
    }
}

fn require_overlap(z: C64, eps_sing: f64) -> Result<()> {
    if z.norm() <= eps_sing {
        Err(Error::SingularCondition {
            overlap: z.norm(),
            threshold: eps_sing,
        })
    } else {
        Ok(())
    }
}

fn require_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// `rho(a, b) = <psi|b><b|a><a|psi>`, rows indexed by `a`, columns by `b`.
pub fn kd_joint(
    psi: &StateVector,
    a_basis: &OrthonormalBasis,
    b_basis: &OrthonormalBasis,
) -> Result<ComplexProbTable> {
    require_dim(psi.dim(), a_basis.dim())?;
    require_dim(psi.dim(), b_basis.dim())?;
    let a_psi = a_basis.coefficients(psi)?;
    let b_psi = b_basis.coefficients(psi)?;
    let mut values = Vec::with_capacity(a_basis.dim() * b_basis.dim());
    for (a, a_amp) in a_basis.vectors().iter().zip(&a_psi) {
        for (b, b_amp) in b_basis.vectors().iter().zip(&b_psi) {
            values.push(b_amp.conj() * dot(b.amplitudes(), a.amplitudes()) * a_amp);
        }
    }
    ComplexProbTable::new(TableKind::Joint, a_basis.labels(), b_basis.labels(), values)
}

/// `P(n|a,b) = <b|n><n|a> / <b|a>` for every `n` in `n_basis`.
pub fn conditional_app(
    a: &StateVector,
    b: &StateVector,
    n_basis: &OrthonormalBasis,
    eps_sing: f64,
) -> Result<Vec<C64>> {
    let ba = inner(b, a)?;
    require_dim(a.dim(), n_basis.dim())?;
    require_overlap(ba, eps_sing)?;
    Ok(n_basis
        .vectors()
        .iter()
        .map(|n| dot(b.amplitudes(), n.amplitudes()) * dot(n.amplitudes(), a.amplitudes()) / ba)
        .collect())
}

/// `P(g|a,b) = <b|Pi_g|a> / <b|a>` for every degeneracy group `g`.
pub fn conditional_app_eigenspaces(
    a: &StateVector,
    b: &StateVector,
    spec: &SpectralDecomposition,
    eps_sing: f64,
) -> Result<Vec<C64>> {
    let per_vector = conditional_app(a, b, spec.eigenvectors(), eps_sing)?;
    Ok(spec
        .degeneracy_groups()
        .iter()
        .map(|g| g.iter().map(|&n| per_vector[n]).sum())
        .collect())
}

/// `S = hbar Arg p`, in `(-pi hbar, pi hbar]`.
pub fn action_phase(p: C64, hbar: f64) -> Result<f64> {
    if p.norm() == 0.0 {
        return Err(Error::ZeroProbability);
    }
    Ok(hbar * arg(p))
}

/// Both sides of `|<b|U|a>|^2 = |<b|a>|^2 |sum_n P(n|a,b) exp(-i S_n/hbar)|^2`
/// where `U = sum_n exp(-i S_n/hbar) |n><n|` over the eigenvectors of `spec`.
pub fn unitary_decomposition_check(
    a: &StateVector,
    b: &StateVector,
    spec: &SpectralDecomposition,
    actions: &[f64],
    hbar: f64,
    eps_sing: f64,
) -> Result<(f64, f64)> {
    require_dim(spec.dim(), actions.len())?;
    let u = spec.weighted_sum(|n| Complex64::from_polar(1.0, -actions[n] / hbar));
    let ua = u.mul_vec(a.amplitudes())?;
    let lhs = dot(b.amplitudes(), &ua).norm_sqr();

    let p = conditional_app(a, b, spec.eigenvectors(), eps_sing)?;
    let sum: C64 = p
        .iter()
        .zip(actions)
        .map(|(p, s)| p * Complex64::from_polar(1.0, -s / hbar))
        .sum();
    let rhs = inner(b, a)?.norm_sqr() * sum.norm_sqr();
    Ok((lhs, rhs))
}

/// `<n| B U(t) A |n> exp(i E_n t / hbar)`.
pub fn two_time_correlation(
    a_op: &ComplexMatrix,
    b_op: &ComplexMatrix,
    spec: &SpectralDecomposition,
    n: usize,
    t: f64,
    hbar: f64,
) -> Result<C64> {
    require_dim(spec.dim(), a_op.rows())?;
    require_dim(spec.dim(), b_op.rows())?;
    let ket = spec.eigenvector(n).amplitudes();
    let v = a_op.mul_vec(ket)?;
    let v = spec.evolve(&v, t, hbar);
    let v = b_op.mul_vec(&v)?;
    Ok(dot(ket, &v) * Complex64::from_polar(1.0, spec.energy(n) * t / hbar))
}

/// `P(b(t)|a,n)` for all `b` in a basis, as a sum of Bohr-frequency
/// components `sum_m W[b][m] exp(-i (E_m - E_n) t / hbar)`.
#[derive(Clone, Debug)]
pub struct MotionApp {
    labels: Vec<String>,
    weights: Vec<Vec<C64>>,
    detunings: Vec<f64>,
    hbar: f64,
    basis_dependent: bool,
}

impl MotionApp {
    pub fn new(
        a: &StateVector,
        b_basis: &OrthonormalBasis,
        spec: &SpectralDecomposition,
        n: usize,
        hbar: f64,
        eps_sing: f64,
        resolution: Resolution,
    ) -> Result<Self> {
        require_dim(spec.dim(), a.dim())?;
        require_dim(spec.dim(), b_basis.dim())?;
        if n >= spec.dim() {
            return Err(Error::InvalidParameter(format!(
                "level index {n} out of range"
            )));
        }
        let coeffs = spec.eigenvectors().coefficients(a)?; // <m|a>
        let e_n = spec.energy(n);
        let factors: Vec<C64> = match resolution {
            Resolution::Eigenvector => {
                let na = coeffs[n];
                require_overlap(na, eps_sing)?;
                let ket_n = spec.eigenvector(n).amplitudes();
                b_basis
                    .vectors()
                    .iter()
                    .map(|b| dot(ket_n, b.amplitudes()) / na)
                    .collect()
            }
            Resolution::Eigenspace => {
                // <a|Pi|b> / <a|Pi|a>
                let members = spec.group_members(n);
                let apa: f64 = members.iter().map(|&m| coeffs[m].norm_sqr()).sum();
                require_overlap(C64::new(apa.sqrt(), 0.0), eps_sing)?;
                b_basis
                    .vectors()
                    .iter()
                    .map(|b| {
                        members
                            .iter()
                            .map(|&m| {
                                coeffs[m].conj()
                                    * dot(spec.eigenvector(m).amplitudes(), b.amplitudes())
                            })
                            .sum::<C64>()
                            / apa
                    })
                    .collect()
            }
        };
        let weights = b_basis
            .vectors()
            .iter()
            .zip(&factors)
            .map(|(b, f)| {
                (0..spec.dim())
                    .map(|m| f * dot(b.amplitudes(), spec.eigenvector(m).amplitudes()) * coeffs[m])
                    .collect()
            })
            .collect();
        Ok(Self {
            labels: b_basis.labels(),
            weights,
            detunings: spec.eigenvalues().iter().map(|e| e - e_n).collect(),
            hbar,
            basis_dependent: resolution == Resolution::Eigenvector && spec.is_degenerate(n),
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// `W[b][m]`.
    pub fn weights(&self) -> &[Vec<C64>] {
        &self.weights
    }

    /// `E_m - E_n` for each level `m`.
    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }

    /// Largest `|E_m - E_k|` over the spectrum.
    pub fn max_bohr_energy(&self) -> f64 {
        let lo = self.detunings.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self
            .detunings
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    pub fn basis_dependent(&self) -> bool {
        self.basis_dependent
    }

    /// `P(b(t)|a,n)` for every `b`.
    pub fn eval(&self, t: f64) -> Vec<C64> {
        let phases: Vec<C64> = self
            .detunings
            .iter()
            .map(|d| Complex64::from_polar(1.0, -d * t / self.hbar))
            .collect();
        self.weights
            .iter()
            .map(|w| w.iter().zip(&phases).map(|(w, p)| w * p).sum())
            .collect()
    }

    /// Evaluates on a grid (in parallel; each point independently).
    pub fn table(&self, times: &[f64]) -> Result<ComplexProbTable> {
        let columns: Vec<Vec<C64>> = times.par_iter().map(|&t| self.eval(t)).collect();
        let rows = self.labels.len();
        let mut values = Vec::with_capacity(rows * times.len());
        for b in 0..rows {
            values.extend(columns.iter().map(|col| col[b]));
        }
        let mut table = ComplexProbTable::time_series(self.labels.clone(), times.to_vec(), values)?;
        table.basis_dependent = self.basis_dependent;
        Ok(table)
    }
}

/// `P(b(t)|a,n) = <b|U(t)|a> exp(i E_n t/hbar) <n|b>/<n|a>` over `b` and `t`.
#[allow(clippy::too_many_arguments)]
pub fn time_dependent_app(
    a: &StateVector,
    b_basis: &OrthonormalBasis,
    spec: &SpectralDecomposition,
    n: usize,
    times: &[f64],
    hbar: f64,
    eps_sing: f64,
    resolution: Resolution,
) -> Result<ComplexProbTable> {
    MotionApp::new(a, b_basis, spec, n, hbar, eps_sing, resolution)?.table(times)
}

/// `P(b(t)|a,n)` for a single final state `b`, which need not belong to
/// any stored basis.
#[allow(clippy::too_many_arguments)]
pub fn conditional_motion(
    a: &StateVector,
    b: &StateVector,
    spec: &SpectralDecomposition,
    n: usize,
    times: &[f64],
    hbar: f64,
    eps_sing: f64,
) -> Result<Vec<C64>> {
    require_dim(spec.dim(), a.dim())?;
    require_dim(spec.dim(), b.dim())?;
    if n >= spec.dim() {
        return Err(Error::InvalidParameter(format!(
            "level index {n} out of range"
        )));
    }
    let coeffs = spec.eigenvectors().coefficients(a)?;
    require_overlap(coeffs[n], eps_sing)?;
    let f = dot(spec.eigenvector(n).amplitudes(), b.amplitudes()) / coeffs[n];
    let weights: Vec<C64> = (0..spec.dim())
        .map(|m| f * dot(b.amplitudes(), spec.eigenvector(m).amplitudes()) * coeffs[m])
        .collect();
    let e_n = spec.energy(n);
    Ok(times
        .iter()
        .map(|&t| {
            weights
                .iter()
                .zip(spec.eigenvalues())
                .map(|(w, e)| w * Complex64::from_polar(1.0, -(e - e_n) * t / hbar))
                .sum()
        })
        .collect())
}

/// `H(b,a,t) = <b|U(t) H|a> / <b|U(t)|a>`.
pub fn weak_energy(
    b: &StateVector,
    a: &StateVector,
    spec: &SpectralDecomposition,
    t: f64,
    hbar: f64,
    eps_sing: f64,
) -> Result<C64> {
    require_dim(spec.dim(), a.dim())?;
    require_dim(spec.dim(), b.dim())?;
    let mut num = C64::new(0.0, 0.0);
    let mut den = C64::new(0.0, 0.0);
    for (m, ket) in spec.eigenvectors().vectors().iter().enumerate() {
        let amp = dot(b.amplitudes(), ket.amplitudes())
            * dot(ket.amplitudes(), a.amplitudes())
            * Complex64::from_polar(1.0, -spec.energy(m) * t / hbar);
        den += amp;
        num += amp * spec.energy(m);
    }
    require_overlap(den, eps_sing)?;
    Ok(num / den)
}

pub fn weak_energy_series(
    b: &StateVector,
    a: &StateVector,
    spec: &SpectralDecomposition,
    times: &[f64],
    hbar: f64,
    eps_sing: f64,
) -> Result<WeakValueSeries> {
    let values = times
        .par_iter()
        .map(|&t| weak_energy(b, a, spec, t, hbar, eps_sing))
        .collect::<Result<Vec<_>>>()?;
    WeakValueSeries::new(times.to_vec(), values)
}

/// Max residual of `dP/dt = (i/hbar)(E_n - H(b,a,t)) P` with the derivative
/// taken by central differences at interior grid points.
pub fn phase_evolution_check(
    series: &[C64],
    times: &[f64],
    weak: &WeakValueSeries,
    e_n: f64,
    hbar: f64,
) -> Result<f64> {
    if series.len() != times.len() || weak.times() != times {
        return Err(Error::GridMismatch(
            "probability series and weak values must share one grid".into(),
        ));
    }
    if times.len() < 3 {
        return Err(Error::GridMismatch(
            "need at least three grid points".into(),
        ));
    }
    let dt = times[1] - times[0];
    if times
        .windows(2)
        .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1e-300))
    {
        return Err(Error::GridMismatch("grid spacing is not uniform".into()));
    }
    let i_over_hbar = C64::new(0.0, 1.0 / hbar);
    let mut worst = 0.0_f64;
    for k in 1..times.len() - 1 {
        let derivative = (series[k + 1] - series[k - 1]) / (2.0 * dt);
        let rhs = i_over_hbar * (e_n - weak.values()[k]) * series[k];
        worst = worst.max((derivative - rhs).norm());
    }
    Ok(worst)
}

/// `S_t = hbar Arg <b|U(t)|a>`, `S_E = hbar Arg <b|n><n|a>`, and the total
/// `hbar Arg P(b(t)|a,n)`.
pub fn decompose_action(
    a: &StateVector,
    b: &StateVector,
    spec: &SpectralDecomposition,
    n: usize,
    t: f64,
    hbar: f64,
    eps_sing: f64,
) -> Result<ActionDecomposition> {
    require_dim(spec.dim(), a.dim())?;
    require_dim(spec.dim(), b.dim())?;
    let ua = spec.evolve(a.amplitudes(), t, hbar);
    let bua = dot(b.amplitudes(), &ua);
    let ket_n = spec.eigenvector(n).amplitudes();
    let bn = dot(b.amplitudes(), ket_n);
    let na = dot(ket_n, a.amplitudes());
    require_overlap(bua, eps_sing)?;
    require_overlap(na, eps_sing)?;
    require_overlap(bn, eps_sing)?;
    let e_n = spec.energy(n);
    let p = bua * Complex64::from_polar(1.0, e_n * t / hbar) * bn.conj() / na;
    Ok(ActionDecomposition {
        s_t: action_phase(bua, hbar)?,
        e_n_t: e_n * t,
        s_e: action_phase(bn * na, hbar)?,
        total: action_phase(p, hbar)?,
        hbar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{qubit, random_state, random_system};
    use crate::hilbert::propagator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn kd_joint_commuting_case_is_diagonal() {
        let q = qubit();
        let psi = q.y.vector(0).clone();
        let t = kd_joint(&psi, &q.x, &q.x).unwrap();
        assert!(close(t.get(0, 0), c(0.5, 0.0), 1e-15));
        assert!(close(t.get(1, 1), c(0.5, 0.0), 1e-15));
        assert!(close(t.get(0, 1), c(0.0, 0.0), 1e-15));
    }

    #[test]
    fn kd_joint_z_then_x_for_zero_state() {
        let q = qubit();
        let t = kd_joint(q.z.vector(0), &q.z, &q.x).unwrap();
        assert!(close(t.get(0, 0), c(0.5, 0.0), 1e-15));
        assert!(close(t.get(0, 1), c(0.5, 0.0), 1e-15));
        assert!(close(t.get(1, 0), c(0.0, 0.0), 1e-15));
        assert!(close(t.get(1, 1), c(0.0, 0.0), 1e-15));
    }

    #[test]
    fn kd_joint_plus_y_has_imaginary_part() {
        // <psi|+> = (1-i)/2, <+|0> = 1/sqrt2, <0|psi> = 1/sqrt2.
        let q = qubit();
        let t = kd_joint(q.y.vector(0), &q.z, &q.x).unwrap();
        assert!(close(t.get(0, 0), c(0.25, -0.25), 1e-15));
        assert!(t.normalization_defect() < 1e-15);
    }

    #[test]
    fn kd_joint_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sys = random_system(&mut rng, 6);
        let psi = random_state(&mut rng, 6, "psi");
        let t = kd_joint(&psi, &sys.a_basis, &sys.b_basis).unwrap();
        let pa = sys.a_basis.coefficients(&psi).unwrap();
        let pb = sys.b_basis.coefficients(&psi).unwrap();
        for (s, amp) in t.row_sums().iter().zip(&pa) {
            assert!(close(*s, c(amp.norm_sqr(), 0.0), 1e-12));
        }
        for (s, amp) in t.col_sums().iter().zip(&pb) {
            assert!(close(*s, c(amp.norm_sqr(), 0.0), 1e-12));
        }
    }

    #[test]
    fn conditional_motion_matches_basis_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let sys = random_system(&mut rng, 5);
        let a = random_state(&mut rng, 5, "a");
        let times = [0.0, 0.3, 1.7];
        let table = time_dependent_app(
            &a,
            &sys.b_basis,
            &sys.spectrum,
            2,
            &times,
            1.0,
            DEFAULT_EPS_SING,
            Resolution::Eigenvector,
        )
        .unwrap();
        let single = conditional_motion(
            &a,
            sys.b_basis.vector(3),
            &sys.spectrum,
            2,
            &times,
            1.0,
            DEFAULT_EPS_SING,
        )
        .unwrap();
        for (k, z) in single.iter().enumerate() {
            assert!(close(*z, table.get(3, k), 1e-13));
        }
    }

    #[test]
    fn conditional_trivial_when_n_basis_is_a_basis() {
        let q = qubit();
        let p = conditional_app(q.z.vector(0), q.x.vector(0), &q.z, DEFAULT_EPS_SING).unwrap();
        assert!(close(p[0], c(1.0, 0.0), 1e-15));
        assert!(close(p[1], c(0.0, 0.0), 1e-15));
    }

    #[test]
    fn conditional_y_outcomes() {
        let q = qubit();
        let p = conditional_app(q.z.vector(0), q.x.vector(0), &q.y, DEFAULT_EPS_SING).unwrap();
        assert!(close(p[0], c(0.5, 0.5), 1e-15));
        assert!(close(p[1], c(0.5, -0.5), 1e-15));
        assert!(close(p.iter().sum(), c(1.0, 0.0), 1e-15));
    }

    #[test]
    fn conditional_rejects_orthogonal_pair() {
        let q = qubit();
        let err =
            conditional_app(q.z.vector(0), q.z.vector(1), &q.x, DEFAULT_EPS_SING).unwrap_err();
        assert!(matches!(err, Error::SingularCondition { .. }));
    }

    #[test]
    fn swapping_a_and_b_conjugates() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sys = random_system(&mut rng, 5);
        let (a, b) = (sys.a_basis.vector(1), sys.b_basis.vector(3));
        let ab = conditional_app(a, b, sys.spectrum.eigenvectors(), DEFAULT_EPS_SING).unwrap();
        let ba = conditional_app(b, a, sys.spectrum.eigenvectors(), DEFAULT_EPS_SING).unwrap();
        for (x, y) in ab.iter().zip(&ba) {
            assert!(close(*x, y.conj(), 1e-12));
        }
    }

    #[test]
    fn action_phase_examples() {
        assert_eq!(action_phase(c(0.3, 0.0), 1.0).unwrap(), 0.0);
        assert!((action_phase(c(0.5, 0.5), 1.0).unwrap() - PI / 4.0).abs() < 1e-15);
        assert_eq!(action_phase(c(-0.25, 0.0), 2.0).unwrap(), 2.0 * PI);
        assert_eq!(action_phase(c(0.0, 0.0), 1.0), Err(Error::ZeroProbability));
    }

    #[test]
    fn unitary_decomposition_identity_transformation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sys = random_system(&mut rng, 4);
        let (a, b) = (sys.a_basis.vector(0), sys.b_basis.vector(2));
        let (lhs, rhs) =
            unitary_decomposition_check(a, b, &sys.spectrum, &[0.0; 4], 1.0, DEFAULT_EPS_SING)
                .unwrap();
        let direct = inner(b, a).unwrap().norm_sqr();
        assert!((lhs - direct).abs() < 1e-14 && (rhs - direct).abs() < 1e-14);
    }

    #[test]
    fn unitary_decomposition_qubit_against_matrix_exponential() {
        // a = b = |+>, H = sigma_z: |<+|U|+>|^2 = cos^2(t/hbar).
        let q = qubit();
        let t = 0.7;
        let plus = q.x.vector(0);
        let actions: Vec<f64> = q.spectrum.eigenvalues().iter().map(|e| e * t).collect();
        let (lhs, rhs) =
            unitary_decomposition_check(plus, plus, &q.spectrum, &actions, 1.0, DEFAULT_EPS_SING)
                .unwrap();
        let expected = t.cos().powi(2);
        assert!((lhs - expected).abs() < 1e-12);
        assert!((rhs - expected).abs() < 1e-12);
    }

    #[test]
    fn unitary_decomposition_random_five() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let sys = random_system(&mut rng, 5);
        let t = 1.37;
        let hbar = 0.8;
        let (a, b) = (sys.a_basis.vector(2), sys.b_basis.vector(4));
        let actions: Vec<f64> = sys.spectrum.eigenvalues().iter().map(|e| e * t).collect();
        let (lhs, rhs) =
            unitary_decomposition_check(a, b, &sys.spectrum, &actions, hbar, DEFAULT_EPS_SING)
                .unwrap();
        let u = propagator(&sys.spectrum, t, hbar).unwrap();
        let direct = dot(b.amplitudes(), &u.mul_vec(a.amplitudes()).unwrap()).norm_sqr();
        assert!((lhs - direct).abs() < 1e-12);
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn two_time_correlation_examples() {
        let q = qubit();
        let sx = ComplexMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        // Ground state |1>: sigma_x U sigma_x gives exp(-i t) and the
        // dynamical factor exp(i E_0 t) = exp(-i t).
        for t in [0.0, 0.4, 2.5] {
            let v = two_time_correlation(&sx, &sx, &q.spectrum, 0, t, 1.0).unwrap();
            assert!(close(v, Complex64::from_polar(1.0, -2.0 * t), 1e-14));
        }
        // A = B = H: constant E_n^2.
        let v =
            two_time_correlation(&q.hamiltonian, &q.hamiltonian, &q.spectrum, 1, 3.3, 1.0).unwrap();
        assert!(close(v, c(1.0, 0.0), 1e-14));
    }

    #[test]
    fn motion_app_conserved_in_n_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sys = random_system(&mut rng, 4);
        let a = sys.a_basis.vector(1);
        let n = 2;
        let times: Vec<f64> = (0..20).map(|k| 0.3 * k as f64).collect();
        let table = time_dependent_app(
            a,
            sys.spectrum.eigenvectors(),
            &sys.spectrum,
            n,
            &times,
            1.0,
            DEFAULT_EPS_SING,
            Resolution::Eigenvector,
        )
        .unwrap();
        for b in 0..4 {
            let expected = if b == n { c(1.0, 0.0) } else { c(0.0, 0.0) };
            for t in 0..times.len() {
                assert!(close(table.get(b, t), expected, 1e-12));
            }
        }
    }

    #[test]
    fn motion_app_qubit_closed_form() {
        // a = |+>, n = |0> (E = 1), b = |+>: P = cos(t) exp(i t).
        let q = qubit();
        let times: Vec<f64> = (0..50).map(|k| 0.1 * k as f64).collect();
        let n = 1; // ascending order puts E = +1 (|0>) second
        let table = time_dependent_app(
            q.x.vector(0),
            &q.x,
            &q.spectrum,
            n,
            &times,
            1.0,
            DEFAULT_EPS_SING,
            Resolution::Eigenvector,
        )
        .unwrap();
        for (k, &t) in times.iter().enumerate() {
            let expected = t.cos() * Complex64::from_polar(1.0, t);
            assert!(close(table.get(0, k), expected, 1e-14));
        }
        assert!(table.normalization_defect() < 1e-14);
    }

    #[test]
    fn motion_app_instantaneous_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let sys = random_system(&mut rng, 5);
        let a = sys.a_basis.vector(3);
        let n = 1;
        let app = MotionApp::new(
            a,
            &sys.b_basis,
            &sys.spectrum,
            n,
            1.0,
            DEFAULT_EPS_SING,
            Resolution::Eigenvector,
        )
        .unwrap();
        let p0 = app.eval(0.0);
        let ket_n = sys.spectrum.eigenvector(n);
        for (b, p) in sys.b_basis.vectors().iter().zip(&p0) {
            let expected =
                inner(b, a).unwrap() * inner(ket_n, b).unwrap() / inner(ket_n, a).unwrap();
            assert!(close(*p, expected, 1e-12));
        }
    }

    #[test]
    fn eigenspace_resolution_normalizes_on_degenerate_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let u = crate::fixtures::random_unitary(&mut rng, 4);
        let d = ComplexMatrix::from_real_diagonal(&[0.0, 1.0, 1.0, 2.5]);
        let h = u.matmul(&d).unwrap().matmul(&u.adjoint()).unwrap();
        let spec = crate::hilbert::eigendecompose_hermitian(&h, None).unwrap();
        let b_basis = crate::fixtures::random_basis(&mut rng, 4, "b");
        let a = random_state(&mut rng, 4, "a");
        let times = [0.0, 0.5, 1.7];
        let table = time_dependent_app(
            &a,
            &b_basis,
            &spec,
            1,
            &times,
            1.0,
            DEFAULT_EPS_SING,
            Resolution::Eigenspace,
        )
        .unwrap();
        assert!(table.normalization_defect() < 1e-12);
        assert!(!table.basis_dependent);
        let per_vector = time_dependent_app(
            &a,
            &b_basis,
            &spec,
            1,
            &times,
            1.0,
            DEFAULT_EPS_SING,
            Resolution::Eigenvector,
        )
        .unwrap();
        assert!(per_vector.basis_dependent);
        let groups =
            conditional_app_eigenspaces(&a, b_basis.vector(0), &spec, DEFAULT_EPS_SING).unwrap();
        assert_eq!(groups.len(), 3);
        assert!(close(groups.iter().sum(), c(1.0, 0.0), 1e-12));
    }

    #[test]
    fn weak_energy_examples() {
        let q = qubit();
        // Eigenstate: E_n for all t.
        let ket = q.spectrum.eigenvector(1);
        for t in [0.0, 1.3] {
            let w = weak_energy(ket, ket, &q.spectrum, t, 1.0, DEFAULT_EPS_SING).unwrap();
            assert!(close(w, c(1.0, 0.0), 1e-14));
        }
        let plus = q.x.vector(0);
        let w = weak_energy(plus, plus, &q.spectrum, 0.0, 1.0, DEFAULT_EPS_SING).unwrap();
        assert!(close(w, c(0.0, 0.0), 1e-15));
        // <+i|sigma_z|+> / <+i|+> = ((1+i)/2) / ((1-i)/2) = i.
        let w = weak_energy(q.y.vector(0), plus, &q.spectrum, 0.0, 1.0, DEFAULT_EPS_SING).unwrap();
        assert!(close(w, c(0.0, 1.0), 1e-14));
    }

    #[test]
    fn weak_energy_rejects_orthogonal_evolution() {
        // <+|U(pi/2)|+> = cos(pi/2) = 0.
        let q = qubit();
        let plus = q.x.vector(0);
        let err = weak_energy(plus, plus, &q.spectrum, PI / 2.0, 1.0, 1e-10).unwrap_err();
        assert!(matches!(err, Error::SingularCondition { .. }));
    }

    fn qubit_residual(dt: f64) -> f64 {
        let q = qubit();
        let plus = q.x.vector(0);
        let steps = (1.0 / dt).round() as usize;
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        let n = 1;
        let table = time_dependent_app(
            plus,
            &q.x,
            &q.spectrum,
            n,
            &times,
            1.0,
            DEFAULT_EPS_SING,
            Resolution::Eigenvector,
        )
        .unwrap();
        let weak = weak_energy_series(
            q.x.vector(0),
            plus,
            &q.spectrum,
            &times,
            1.0,
            DEFAULT_EPS_SING,
        )
        .unwrap();
        phase_evolution_check(table.row(0), &times, &weak, q.spectrum.energy(n), 1.0).unwrap()
    }

    #[test]
    fn phase_evolution_second_order() {
        let r1 = qubit_residual(1e-3);
        let r2 = qubit_residual(5e-4);
        let r3 = qubit_residual(1e-4);
        assert!(r1 < 1e-5, "{r1}");
        assert!(r3 < 1e-7, "{r3}");
        let ratio = r1 / r2;
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn phase_evolution_conserved_case_vanishes() {
        let q = qubit();
        let plus = q.x.vector(0);
        let times: Vec<f64> = (0..=100).map(|k| 0.01 * k as f64).collect();
        let n = 1;
        let table = time_dependent_app(
            plus,
            q.spectrum.eigenvectors(),
            &q.spectrum,
            n,
            &times,
            1.0,
            DEFAULT_EPS_SING,
            Resolution::Eigenvector,
        )
        .unwrap();
        let b = q.spectrum.eigenvector(n);
        let weak = weak_energy_series(b, plus, &q.spectrum, &times, 1.0, DEFAULT_EPS_SING).unwrap();
        let r =
            phase_evolution_check(table.row(n), &times, &weak, q.spectrum.energy(n), 1.0).unwrap();
        assert!(r < 1e-12, "{r}");
    }

    #[test]
    fn phase_evolution_rejects_mismatched_grid() {
        let weak = WeakValueSeries::new(vec![0.0, 1.0, 2.0], vec![c(0.0, 0.0); 3]).unwrap();
        let err = phase_evolution_check(&[c(1.0, 0.0); 3], &[0.0, 1.0, 2.5], &weak, 0.0, 1.0)
            .unwrap_err();
        assert!(matches!(err, Error::GridMismatch(_)));
    }

    #[test]
    fn decompose_action_identity() {
        let q = qubit();
        let (a, b) = (q.x.vector(0), q.y.vector(0));
        let n = 1;
        for t in [0.0, 0.3, 2.9] {
            let d = decompose_action(a, b, &q.spectrum, n, t, 1.0, DEFAULT_EPS_SING).unwrap();
            assert!(d.identity_defect() < 1e-10);
            assert_eq!(d.e_n_t, t);
        }
        let d0 = decompose_action(a, b, &q.spectrum, n, 0.0, 1.0, DEFAULT_EPS_SING).unwrap();
        assert!((d0.s_t - arg(inner(b, a).unwrap())).abs() < 1e-15);
    }

    #[test]
    fn decompose_action_stationary_state() {
        // b = n: total phase Arg(<n|U|a> e^{iEt} <n|n>/<n|a>) = 0 for all t.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let sys = random_system(&mut rng, 3);
        let a = sys.a_basis.vector(0);
        let n = 2;
        let b = sys.spectrum.eigenvector(n);
        for t in [0.1, 0.2, 5.0] {
            let d = decompose_action(a, b, &sys.spectrum, n, t, 1.0, DEFAULT_EPS_SING).unwrap();
            assert!(d.total.abs() < 1e-12);
            assert!(d.identity_defect() < 1e-10);
        }
    }
}
