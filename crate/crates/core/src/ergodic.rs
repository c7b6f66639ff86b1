//! Time averaging of action phase probabilities: full dephasing, the
//! ergodic identity `P(n|a,b) P(b|a,n) = |<b|n>|^2`, and partial
//! randomization by a finite-width temporal kernel.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::app::{kd_joint, ComplexProbTable, MotionApp};
use crate::error::{Error, Result};
use crate::hilbert::{
    dot, eigendecompose_hermitian, inner, norm2, ComplexMatrix, OrthonormalBasis,
    SpectralDecomposition, StateVector,
};
use crate::phase::C64;
use crate::quad::{gauss_hermite, pairwise_sum_c, trapezoid_nodes};

const DENSITY_TOL: f64 = 1e-10;
const KERNEL_TAIL_MAX: f64 = 1e-8;
const GAUSS_HERMITE_NODES: usize = 64;
const CHUNK: usize = 4096;

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.rows(),
                found: matrix.cols(),
            });
        }
        let (dev, row, col) = matrix.hermitian_defect();
        if dev > DENSITY_TOL {
            return Err(Error::NotHermitian {
                row,
                col,
                deviation: dev,
            });
        }
        let trace = matrix.trace();
        if (trace - 1.0).norm() > DENSITY_TOL {
            return Err(Error::NotNormalized {
                deviation: (trace - 1.0).norm(),
            });
        }
        let spec = eigendecompose_hermitian(&matrix, None)?;
        if let Some(&lowest) = spec.eigenvalues().first() {
            if lowest < -DENSITY_TOL {
                return Err(Error::Validation(format!(
                    "density matrix has negative eigenvalue {lowest:e}"
                )));
            }
        }
        Ok(Self { matrix })
    }

    /// `|psi><psi|`.
    pub fn pure(psi: &StateVector) -> Self {
        let a = psi.amplitudes();
        Self {
            matrix: ComplexMatrix::from_fn(a.len(), a.len(), |i, j| a[i] * a[j].conj()),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `Tr rho^2`.
    pub fn purity(&self) -> f64 {
        self.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Gaussian,
    Uniform,
    Grid,
}

/// Normalized temporal distribution `G(t)` used for partial averaging.
///
/// `width` is the standard deviation for a Gaussian kernel and the half-width
/// for a uniform one. Grid kernels carry explicit `(t, weight)` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomizationKernel {
    pub kind: KernelKind,
    pub center: f64,
    pub width: f64,
    pub grid: Option<Vec<(f64, f64)>>,
}

impl RandomizationKernel {
    pub fn gaussian(center: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite() && center.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gaussian width must be positive, got {sigma}"
            )));
        }
        Ok(Self {
            kind: KernelKind::Gaussian,
            center,
            width: sigma,
            grid: None,
        })
    }

    pub fn uniform(center: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite() && center.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "uniform half-width must be positive, got {half_width}"
            )));
        }
        Ok(Self {
            kind: KernelKind::Uniform,
            center,
            width: half_width,
            grid: None,
        })
    }

    /// Uniform kernel on `[start, end]`.
    pub fn uniform_on(start: f64, end: f64) -> Result<Self> {
        Self::uniform(0.5 * (start + end), 0.5 * (end - start))
    }

    pub fn grid(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter(
                "grid kernel needs at least one point".into(),
            ));
        }
        if let Some(i) = points
            .iter()
            .position(|(t, w)| !t.is_finite() || !w.is_finite() || *w < 0.0)
        {
            return Err(Error::NonFinite { index: i });
        }
        let total: f64 = points.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized {
                deviation: (total - 1.0).abs(),
            });
        }
        let mean: f64 = points.iter().map(|(t, w)| t * w).sum();
        let var: f64 = points.iter().map(|(t, w)| w * (t - mean).powi(2)).sum();
        Ok(Self {
            kind: KernelKind::Grid,
            center: mean,
            width: var.sqrt(),
            grid: Some(points),
        })
    }

    /// Parses `gaussian:<sigma>` or `uniform:<half-width>`, centred at zero.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, value) = spec.split_once(':').ok_or_else(|| {
            Error::Parse(format!("kernel `{spec}` is not of the form kind:width"))
        })?;
        let width: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("kernel width `{value}` is not a number")))?;
        match kind.trim() {
            "gaussian" => Self::gaussian(0.0, width),
            "uniform" => Self::uniform(0.0, width),
            other => Err(Error::Parse(format!("unknown kernel kind `{other}`"))),
        }
    }

    pub fn mean(&self) -> f64 {
        self.center
    }

    /// Standard deviation of `G`.
    pub fn std_dev(&self) -> f64 {
        match self.kind {
            KernelKind::Gaussian | KernelKind::Grid => self.width,
            KernelKind::Uniform => self.width / 3f64.sqrt(),
        }
    }

    /// Probability mass of `G` outside `[lo, hi]`.
    pub fn mass_outside(&self, lo: f64, hi: f64) -> f64 {
        if hi < lo {
            return 1.0;
        }
        match self.kind {
            KernelKind::Gaussian => {
                let s = self.width * std::f64::consts::SQRT_2;
                0.5 * libm::erfc((self.center - lo) / s) + 0.5 * libm::erfc((hi - self.center) / s)
            }
            KernelKind::Uniform => {
                let (a, b) = (self.center - self.width, self.center + self.width);
                let inside = (b.min(hi) - a.max(lo)).max(0.0);
                1.0 - inside / (b - a)
            }
            KernelKind::Grid => self
                .grid
                .as_deref()
                .unwrap_or_default()
                .iter()
                .filter(|(t, _)| *t < lo || *t > hi)
                .map(|p| p.1)
                .sum(),
        }
    }

    /// Quadrature nodes `(t', weight)` for `int G(t') f(t') dt'`, with
    /// weights summing to one. Gauss–Hermite for Gaussian kernels; the
    /// trapezoid rule for uniform kernels, fine enough to resolve angular
    /// frequency `omega_max`; the points themselves for grid kernels.
    pub fn quadrature_nodes(&self, omega_max: f64) -> Vec<(f64, f64)> {
        match self.kind {
            KernelKind::Gaussian => {
                let (x, w) = gauss_hermite(GAUSS_HERMITE_NODES);
                let total: f64 = w.iter().sum();
                x.iter()
                    .zip(&w)
                    .map(|(x, w)| {
                        (
                            self.center + std::f64::consts::SQRT_2 * self.width * x,
                            w / total,
                        )
                    })
                    .collect()
            }
            KernelKind::Uniform => {
                let span = 2.0 * self.width;
                let n = ((span * omega_max.abs() / 5e-3).ceil() as usize + 1).clamp(65, 200_001);
                trapezoid_nodes(self.center - self.width, self.center + self.width, n)
            }
            KernelKind::Grid => self.grid.clone().unwrap_or_default(),
        }
    }
}

/// Energy–time uncertainty of a kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub delta_t: f64,
    pub delta_e: f64,
    pub mean_e: f64,
    pub product_over_hbar: f64,
}

/// A function of time giving complex probabilities over a fixed set of
/// outcomes, such as `P(b(t)|a,n)`.
pub trait TimeSeriesSource: Sync {
    fn labels(&self) -> &[String];
    fn eval(&self, t: f64) -> Vec<C64>;
    fn hbar(&self) -> f64;
    /// Largest energy difference whose oscillation the series may contain.
    fn max_bohr_energy(&self) -> f64;
    /// Smallest nonzero energy difference, if any.
    fn min_bohr_energy(&self) -> Option<f64>;
    /// Times at which the series is defined; `None` means all real `t`.
    fn domain(&self) -> Option<(f64, f64)> {
        None
    }
}

impl TimeSeriesSource for MotionApp {
    fn labels(&self) -> &[String] {
        MotionApp::labels(self)
    }

    fn eval(&self, t: f64) -> Vec<C64> {
        MotionApp::eval(self, t)
    }

    fn hbar(&self) -> f64 {
        MotionApp::hbar(self)
    }

    fn max_bohr_energy(&self) -> f64 {
        MotionApp::max_bohr_energy(self)
    }

    fn min_bohr_energy(&self) -> Option<f64> {
        let mut d = self.detunings().to_vec();
        d.sort_by(f64::total_cmp);
        let tol = 1e-9 * self.max_bohr_energy().max(f64::MIN_POSITIVE);
        d.windows(2)
            .map(|w| w[1] - w[0])
            .filter(|g| *g > tol)
            .fold(None, |acc: Option<f64>, g| {
                Some(acc.map_or(g, |a| a.min(g)))
            })
    }
}

/// A time series known only on a uniform grid, interpolated with cubic
/// Catmull–Rom splines between samples.
#[derive(Clone, Debug)]
pub struct TabulatedSeries {
    labels: Vec<String>,
    t0: f64,
    dt: f64,
    columns: Vec<Vec<C64>>,
    hbar: f64,
}

impl TabulatedSeries {
    pub fn from_table(table: &ComplexProbTable, hbar: f64) -> Result<Self> {
        let times = table
            .times()
            .ok_or_else(|| Error::GridMismatch("table has no time axis".into()))?;
        if times.len() < 4 {
            return Err(Error::GridMismatch("need at least four samples".into()));
        }
        let dt = times[1] - times[0];
        if dt <= 0.0
            || times
                .windows(2)
                .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt)
        {
            return Err(Error::GridMismatch(
                "tabulated series needs a uniform grid".into(),
            ));
        }
        Ok(Self {
            labels: table.row_labels().to_vec(),
            t0: times[0],
            dt,
            columns: (0..table.cols()).map(|c| table.column(c)).collect(),
            hbar,
        })
    }
}

impl TimeSeriesSource for TabulatedSeries {
    fn labels(&self) -> &[String] {
        &self.labels
    }

    fn eval(&self, t: f64) -> Vec<C64> {
        let last = self.columns.len() - 1;
        let x = ((t - self.t0) / self.dt).clamp(0.0, last as f64);
        let k = (x.floor() as usize).min(last - 1);
        let u = x - k as f64;
        let p1 = &self.columns[k];
        let p2 = &self.columns[k + 1];
        let p0 = if k == 0 { p1 } else { &self.columns[k - 1] };
        let p3 = if k + 2 > last {
            p2
        } else {
            &self.columns[k + 2]
        };
        (0..p1.len())
            .map(|i| {
                let (a, b, c, d) = (p0[i], p1[i], p2[i], p3[i]);
                b + 0.5
                    * u
                    * ((c - a)
                        + u * ((2.0 * a - 5.0 * b + 4.0 * c - d) + u * (3.0 * (b - c) + d - a)))
            })
            .collect()
    }

    fn hbar(&self) -> f64 {
        self.hbar
    }

    /// The Nyquist limit of the sampling grid.
    fn max_bohr_energy(&self) -> f64 {
        std::f64::consts::PI * self.hbar / self.dt
    }

    fn min_bohr_energy(&self) -> Option<f64> {
        None
    }

    fn domain(&self) -> Option<(f64, f64)> {
        Some((self.t0, self.t0 + self.dt * (self.columns.len() - 1) as f64))
    }
}

/// Infinite-time average of `U(t)|a><a|U^dagger(t)`: the projection of
/// `|a><a|` onto each energy eigenspace, `sum_g Pi_g |a><a| Pi_g`.
pub fn dephase(a: &StateVector, spec: &SpectralDecomposition) -> Result<DensityMatrix> {
    if a.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: a.dim(),
        });
    }
    let coeffs = spec.eigenvectors().coefficients(a)?;
    let d = spec.dim();
    let mut out = ComplexMatrix::zeros(d, d);
    for group in spec.degeneracy_groups() {
        let mut v = vec![C64::new(0.0, 0.0); d];
        for &n in group {
            for (x, e) in v.iter_mut().zip(spec.eigenvector(n).amplitudes()) {
                *x += coeffs[n] * e;
            }
        }
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] += v[i] * v[j].conj();
            }
        }
    }
    Ok(DensityMatrix { matrix: out })
}

/// `C = sum_{n != m} |c_n||c_m| hbar / |E_n - E_m|` over pairs in different
/// degeneracy groups; the entries of a time average over `[0, T]` differ
/// from the infinite-time limit by at most `2C/T` in Frobenius norm.
pub fn spectral_constant(a: &StateVector, spec: &SpectralDecomposition, hbar: f64) -> Result<f64> {
    let coeffs = spec.eigenvectors().coefficients(a)?;
    let mut c = 0.0;
    for n in 0..spec.dim() {
        for m in 0..spec.dim() {
            if spec.group_members(n).contains(&m) {
                continue;
            }
            c += coeffs[n].norm() * coeffs[m].norm() * hbar
                / (spec.energy(n) - spec.energy(m)).abs();
        }
    }
    Ok(c)
}

fn check_grid(t_total: f64, dt: f64) -> Result<usize> {
    if !(t_total > 0.0 && dt > 0.0 && t_total.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "averaging window T={t_total} and step dt={dt} must be positive"
        )));
    }
    Ok(((t_total / dt).round() as usize).max(1))
}

/// Largest trapezoid step allowed for a series whose fastest Bohr energy
/// is `bohr`: a tenth of half its period.
pub fn max_dt(bohr: f64, hbar: f64) -> f64 {
    if bohr > 0.0 {
        std::f64::consts::PI * hbar / (10.0 * bohr)
    } else {
        f64::INFINITY
    }
}

/// Trapezoid time average `(1/T) int_0^T f(t) dt` of a vector-valued
/// function with `steps` panels, reduced chunk by chunk in a fixed order.
fn trapezoid_average(
    dim: usize,
    steps: usize,
    t_total: f64,
    f: impl Fn(f64) -> Vec<C64> + Sync,
) -> Vec<C64> {
    let h = t_total / steps as f64;
    let chunk_sums: Vec<Vec<C64>> = (0..=steps)
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|idx| {
            let mut cols: Vec<Vec<C64>> = vec![Vec::with_capacity(idx.len()); dim];
            for &k in idx {
                let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
                for (c, v) in cols.iter_mut().zip(f(k as f64 * h)) {
                    c.push(v * w);
                }
            }
            cols.iter().map(|c| pairwise_sum_c(c)).collect()
        })
        .collect();
    (0..dim)
        .map(|i| {
            let parts: Vec<C64> = chunk_sums.iter().map(|s| s[i]).collect();
            pairwise_sum_c(&parts) / steps as f64
        })
        .collect()
}

/// Numerical time average of `U(t)|a><a|U^dagger(t)` over `[0, T]`.
pub fn time_averaged_density(
    a: &StateVector,
    spec: &SpectralDecomposition,
    t_total: f64,
    dt: f64,
    hbar: f64,
) -> Result<ComplexMatrix> {
    let steps = check_grid(t_total, dt)?;
    let limit = max_dt(spec.spectral_span(), hbar);
    if dt > limit {
        return Err(Error::GridTooCoarse { dt, max_dt: limit });
    }
    let d = spec.dim();
    let amps = a.amplitudes().to_vec();
    let flat = trapezoid_average(d * d, steps, t_total, |t| {
        let psi = spec.evolve(&amps, t, hbar);
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                out.push(psi[i] * psi[j].conj());
            }
        }
        out
    });
    Ok(ComplexMatrix::from_fn(d, d, |i, j| flat[i * d + j]))
}

/// `(1/T) int_0^T P(b(t)|a,n) dt` for every outcome, by the composite
/// trapezoid rule. `T` is rounded to a whole number of steps.
pub fn ergodic_average_numeric(
    source: &dyn TimeSeriesSource,
    t_total: f64,
    dt: f64,
) -> Result<Vec<C64>> {
    let steps = check_grid(t_total, dt)?;
    let limit = max_dt(source.max_bohr_energy(), source.hbar());
    if dt > limit {
        return Err(Error::GridTooCoarse { dt, max_dt: limit });
    }
    Ok(trapezoid_average(
        source.labels().len(),
        steps,
        t_total,
        |t| source.eval(t),
    ))
}

/// Running-average convergence of a time average towards a known limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub t_total: f64,
    pub average: Vec<C64>,
    /// `max_b |average - limit|` at `T`.
    pub residual: f64,
    /// Largest residual of the running average over the last slowest Bohr
    /// period before `T`; this envelope decays as `1/T`.
    pub envelope: f64,
}

/// Accumulates the running average on `[0, T]` and reports both the residual
/// at `T` and its envelope over the final period `2 pi hbar / min gap`.
pub fn ergodic_convergence(
    source: &dyn TimeSeriesSource,
    limit: &[C64],
    t_total: f64,
    dt: f64,
) -> Result<ConvergenceReport> {
    let steps = check_grid(t_total, dt)?;
    let max = max_dt(source.max_bohr_energy(), source.hbar());
    if dt > max {
        return Err(Error::GridTooCoarse { dt, max_dt: max });
    }
    if limit.len() != source.labels().len() {
        return Err(Error::DimensionMismatch {
            expected: source.labels().len(),
            found: limit.len(),
        });
    }
    let h = t_total / steps as f64;
    let period = source
        .min_bohr_energy()
        .map(|g| 2.0 * std::f64::consts::PI * source.hbar() / g)
        .unwrap_or(0.0);
    let window_start = t_total - period;
    let dim = limit.len();
    let mut integral = vec![C64::new(0.0, 0.0); dim];
    let mut comp = vec![C64::new(0.0, 0.0); dim];
    let mut prev = source.eval(0.0);
    let mut envelope = 0.0_f64;
    for k in 1..=steps {
        let t = k as f64 * h;
        let cur = source.eval(t);
        for i in 0..dim {
            // Kahan-compensated cumulative trapezoid.
            let y = 0.5 * h * (prev[i] + cur[i]) - comp[i];
            let s = integral[i] + y;
            comp[i] = (s - integral[i]) - y;
            integral[i] = s;
        }
        if t >= window_start - 0.5 * h {
            let r = integral
                .iter()
                .zip(limit)
                .map(|(s, l)| (s / t - l).norm())
                .fold(0.0, f64::max);
            envelope = envelope.max(r);
        }
        prev = cur;
    }
    let average: Vec<C64> = integral.iter().map(|s| s / t_total).collect();
    let residual = average
        .iter()
        .zip(limit)
        .map(|(a, l)| (a - l).norm())
        .fold(0.0, f64::max);
    Ok(ConvergenceReport {
        t_total,
        average,
        residual,
        envelope,
    })
}

/// The two factors of the ergodic identity and the Born probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicLaw {
    /// `P(n|a,b)`.
    pub conditional: C64,
    /// `P(b(0)|a,n)`.
    pub motion: C64,
    pub product: C64,
    pub born: f64,
}

impl ErgodicLaw {
    pub fn defect(&self) -> f64 {
        (self.product - self.born).norm()
    }
}

/// `P(n|a,b) P(b(0)|a,n)` evaluated factor by factor, and `|<b|n>|^2`.
pub fn ergodic_law_analytic(
    a: &StateVector,
    b: &StateVector,
    n: &StateVector,
    eps_sing: f64,
) -> Result<ErgodicLaw> {
    let ba = inner(b, a)?;
    let na = inner(n, a)?;
    let bn = inner(b, n)?;
    for z in [ba, na] {
        if z.norm() <= eps_sing {
            return Err(Error::SingularCondition {
                overlap: z.norm(),
                threshold: eps_sing,
            });
        }
    }
    let conditional = bn * na / ba;
    let motion = ba * bn.conj() / na;
    Ok(ErgodicLaw {
        conditional,
        motion,
        product: conditional * motion,
        born: bn.norm_sqr(),
    })
}

/// Eigenspace form: `P(Pi|a,b) P(b|a,Pi)` with the projector `Pi` of the
/// level containing `n`. The limit is the Born probability of `b` in the
/// projected state `Pi|a> / |Pi|a>|`.
pub fn ergodic_law_eigenspace(
    a: &StateVector,
    b: &StateVector,
    spec: &SpectralDecomposition,
    n: usize,
    eps_sing: f64,
) -> Result<ErgodicLaw> {
    let pi = spec.eigenspace_projector(n);
    let pa = pi.mul_vec(a.amplitudes())?;
    let pb = pi.mul_vec(b.amplitudes())?;
    let ba = inner(b, a)?;
    let apa = dot(a.amplitudes(), &pa).re;
    for z in [ba.norm(), apa.sqrt()] {
        if z <= eps_sing {
            return Err(Error::SingularCondition {
                overlap: z,
                threshold: eps_sing,
            });
        }
    }
    let bpa = dot(b.amplitudes(), &pa);
    let apb = dot(a.amplitudes(), &pb);
    let conditional = bpa / ba;
    let motion = ba * apb / apa;
    Ok(ErgodicLaw {
        conditional,
        motion,
        product: conditional * motion,
        born: bpa.norm_sqr() / apa,
    })
}

/// `D = int G(t) exp(-i (E_n - E_m) t / hbar) dt`.
pub fn decoherence_factor(kernel: &RandomizationKernel, e_n: f64, e_m: f64, hbar: f64) -> C64 {
    let omega = (e_n - e_m) / hbar;
    if omega == 0.0 {
        return C64::new(1.0, 0.0);
    }
    let centre_phase = Complex64::from_polar(1.0, -omega * kernel.center);
    match kernel.kind {
        KernelKind::Gaussian => centre_phase * (-0.5 * (omega * kernel.width).powi(2)).exp(),
        KernelKind::Uniform => {
            let x = omega * kernel.width;
            centre_phase * (x.sin() / x)
        }
        KernelKind::Grid => {
            let terms: Vec<C64> = kernel
                .grid
                .as_deref()
                .unwrap_or_default()
                .iter()
                .map(|(t, w)| Complex64::from_polar(*w, -omega * t))
                .collect();
            pairwise_sum_c(&terms)
        }
    }
}

/// `P_G(b(t)|a,n) = int G(t') P(b(t - t')|a,n) dt'` on a time grid.
pub fn partial_randomize(
    source: &dyn TimeSeriesSource,
    kernel: &RandomizationKernel,
    times: &[f64],
) -> Result<ComplexProbTable> {
    if let Some((lo, hi)) = source.domain() {
        for &t in times {
            let tail = kernel.mass_outside(t - hi, t - lo);
            if tail > KERNEL_TAIL_MAX {
                return Err(Error::KernelTruncated { tail_mass: tail });
            }
        }
    }
    let nodes = kernel.quadrature_nodes(source.max_bohr_energy() / source.hbar());
    let dim = source.labels().len();
    let columns: Vec<Vec<C64>> = times
        .par_iter()
        .map(|&t| {
            let mut acc: Vec<Vec<C64>> = vec![Vec::with_capacity(nodes.len()); dim];
            for &(tp, w) in &nodes {
                for (a, v) in acc.iter_mut().zip(source.eval(t - tp)) {
                    a.push(v * w);
                }
            }
            acc.iter().map(|a| pairwise_sum_c(a)).collect()
        })
        .collect();
    let mut values = Vec::with_capacity(dim * times.len());
    for b in 0..dim {
        values.extend(columns.iter().map(|c| c[b]));
    }
    ComplexProbTable::time_series(source.labels().to_vec(), times.to_vec(), values)
}

/// Posterior `|D_n|^2 P(n) / sum_m |D_m|^2 P(m)`.
pub fn bayesian_energy_update(prior: &[f64], d_values: &[C64]) -> Result<Vec<f64>> {
    if prior.len() != d_values.len() {
        return Err(Error::DimensionMismatch {
            expected: prior.len(),
            found: d_values.len(),
        });
    }
    if let Some(i) = prior.iter().position(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::NonFinite { index: i });
    }
    let total: f64 = prior.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized {
            deviation: (total - 1.0).abs(),
        });
    }
    let unnorm: Vec<f64> = prior
        .iter()
        .zip(d_values)
        .map(|(p, d)| d.norm_sqr() * p)
        .collect();
    let denominator: f64 = unnorm.iter().sum();
    if denominator <= 1e-300 {
        return Err(Error::DegenerateUpdate { denominator });
    }
    Ok(unnorm.iter().map(|u| u / denominator).collect())
}

/// `Delta t` of the kernel against `Delta E`, the spread of the likelihood
/// `|D(E)|^2` under a flat prior on `energy_grid` (trapezoid weights).
pub fn uncertainty_product(
    kernel: &RandomizationKernel,
    energy_grid: &[f64],
    hbar: f64,
) -> Result<UncertaintyReport> {
    if energy_grid.len() < 3 {
        return Err(Error::GridTooNarrow {
            span: 0.0,
            required: f64::INFINITY,
        });
    }
    if energy_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::GridMismatch(
            "energy grid must be strictly increasing".into(),
        ));
    }
    let n = energy_grid.len();
    let mut mass = Vec::with_capacity(n);
    for (k, &e) in energy_grid.iter().enumerate() {
        let left = if k > 0 { e - energy_grid[k - 1] } else { 0.0 };
        let right = if k + 1 < n {
            energy_grid[k + 1] - e
        } else {
            0.0
        };
        let w = 0.5 * (left + right);
        mass.push(w * decoherence_factor(kernel, e, 0.0, hbar).norm_sqr());
    }
    let z: f64 = mass.iter().sum();
    if z <= 1e-300 {
        return Err(Error::DegenerateUpdate { denominator: z });
    }
    let mean: f64 = mass
        .iter()
        .zip(energy_grid)
        .map(|(m, e)| m * e)
        .sum::<f64>()
        / z;
    let var: f64 = mass
        .iter()
        .zip(energy_grid)
        .map(|(m, e)| m * (e - mean).powi(2))
        .sum::<f64>()
        / z;
    let delta_e = var.sqrt();
    let lo = energy_grid[0];
    let hi = energy_grid[n - 1];
    if mean - 4.0 * delta_e < lo || mean + 4.0 * delta_e > hi {
        return Err(Error::GridTooNarrow {
            span: hi - lo,
            required: 8.0 * delta_e,
        });
    }
    let delta_t = kernel.std_dev();
    Ok(UncertaintyReport {
        delta_t,
        delta_e,
        mean_e: mean,
        product_over_hbar: delta_t * delta_e / hbar,
    })
}

/// State with energy amplitudes `<n|a> D(n, prep)`, renormalized.
pub fn randomized_state(
    a: &StateVector,
    spec: &SpectralDecomposition,
    kernel: &RandomizationKernel,
    e_prep: f64,
    hbar: f64,
) -> Result<StateVector> {
    let coeffs = spec.eigenvectors().coefficients(a)?;
    let mut amps = vec![C64::new(0.0, 0.0); spec.dim()];
    for (n, c) in coeffs.iter().enumerate() {
        let w = c * decoherence_factor(kernel, spec.energy(n), e_prep, hbar);
        for (x, e) in amps.iter_mut().zip(spec.eigenvector(n).amplitudes()) {
            *x += w * e;
        }
    }
    let norm = norm2(&amps).sqrt();
    if norm < 1e-150 {
        return Err(Error::ZeroNorm { threshold: 1e-150 });
    }
    for x in &mut amps {
        *x /= norm;
    }
    Ok(StateVector::new(amps, format!("{}~", a.label()))
        .expect("renormalized amplitudes have unit norm"))
}

/// `rho(b,n) = <psi|b><b|n><n|psi>` with rows `b` and columns `n`.
pub fn composed_state_joint(
    psi: &StateVector,
    b_basis: &OrthonormalBasis,
    n_basis: &OrthonormalBasis,
) -> Result<ComplexProbTable> {
    Ok(kd_joint(psi, n_basis, b_basis)?.transposed())
}
