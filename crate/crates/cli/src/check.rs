//! The invariant suite behind `ergophase check`.
//!
//! Model-dependent invariants run over every named state and basis vector of
//! the model (capped at [`MAX_CANDIDATES`] preparations). Invariants that are
//! statements about a fixed system (the energy ladder, the free particle,
//! the barrier, the kernels) run on that system with the model's `hbar`
//! where one enters.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use ergophase_core::app::{
    conditional_app, conditional_motion, kd_joint, phase_evolution_check, time_dependent_app,
    unitary_decomposition_check, weak_energy, weak_energy_series,
};
use ergophase_core::ergodic::{
    dephase, ergodic_average_numeric, ergodic_law_analytic, ergodic_law_eigenspace, max_dt,
    spectral_constant, time_averaged_density, uncertainty_product, TimeSeriesSource,
};
use ergophase_core::fixtures::ladder;
use ergophase_core::freespace::{
    free_action_split, free_phase_curvature, partial_ergodic_free, stationary_concentration,
    stationary_width, tunnel_ergodic, tunnel_time_integral, TUNNEL_REL_TOL,
};
use ergophase_core::phase::{arg, unwrap_actions};
use ergophase_core::semiclassical::{
    classical_arrival, coarse_grain_energy, discrete_time_estimate,
};
use ergophase_core::{
    eigendecompose_hermitian, inner, propagator, ArrivalOutcome, ComplexMatrix, Error,
    FreeParticleConfig, MotionApp, OrthonormalBasis, RandomizationKernel, Resolution,
    SpectralDecomposition, StateVector, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::model::ModelSystem;
use crate::output::num;
use crate::tolerances::Tolerances;

/// Largest number of preparations `a` the model-wide sweeps iterate over.
pub const MAX_CANDIDATES: usize = 24;

/// Step budget for the numeric long-time averages.
const MAX_STEPS: f64 = 4.0e6;

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub module: &'static str,
    pub name: &'static str,
    #[serde(serialize_with = "finite_or_null")]
    pub measured: f64,
    pub limit: String,
    pub passed: bool,
    pub detail: String,
}

fn finite_or_null<S: serde::Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    num(*x).serialize(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub checks: Vec<CheckResult>,
}

impl CheckReport {
    pub fn failed(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "passed": self.failed() == 0,
            "failed": self.failed(),
            "total": self.checks.len(),
            "checks": self.checks,
        })
    }
}

struct Outcome {
    measured: f64,
    limit: String,
    passed: bool,
    detail: String,
}

fn at_most(measured: f64, tol: f64, detail: impl Into<String>) -> Outcome {
    Outcome {
        measured,
        limit: format!("<= {tol:e}"),
        passed: measured <= tol,
        detail: detail.into(),
    }
}

fn within(measured: f64, band: [f64; 2], detail: impl Into<String>) -> Outcome {
    Outcome {
        measured,
        limit: format!("in [{}, {}]", band[0], band[1]),
        passed: measured >= band[0] && measured <= band[1],
        detail: detail.into(),
    }
}

fn not_applicable(detail: impl Into<String>) -> Outcome {
    Outcome {
        measured: 0.0,
        limit: "n/a".into(),
        passed: true,
        detail: detail.into(),
    }
}

type Step = Result<Outcome, Error>;

struct Suite {
    checks: Vec<CheckResult>,
}

impl Suite {
    fn run(&mut self, module: &'static str, name: &'static str, f: impl FnOnce() -> Step) {
        let result = match f() {
            Ok(o) => CheckResult {
                module,
                name,
                measured: o.measured,
                limit: o.limit,
                passed: o.passed,
                detail: o.detail,
            },
            Err(e) => CheckResult {
                module,
                name,
                measured: f64::NAN,
                limit: String::new(),
                passed: false,
                detail: format!("error [{}]: {e}", e.code()),
            },
        };
        self.checks.push(result);
    }
}

/// Relative difference with unit floor, for values that may be large.
fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

fn is_singular(e: &Error) -> bool {
    matches!(e, Error::SingularCondition { .. } | Error::ZeroProbability)
}

/// Preparations to sweep: named states first, then basis vectors.
fn candidates(model: &ModelSystem) -> Vec<StateVector> {
    let mut out: Vec<StateVector> = model.states().map(|(_, s)| s.clone()).collect();
    for (name, basis) in model.bases() {
        for v in basis.vectors() {
            out.push(v.clone().with_label(format!("{name}/{}", v.label())));
        }
    }
    out.truncate(MAX_CANDIDATES);
    out
}

fn energy_scale(spec: &SpectralDecomposition) -> f64 {
    let m = spec
        .eigenvalues()
        .iter()
        .fold(0.0_f64, |m, e| m.max(e.abs()));
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

fn rephase(rng: &mut ChaCha8Rng, basis: &OrthonormalBasis) -> OrthonormalBasis {
    let phases: Vec<f64> = (0..basis.dim())
        .map(|_| rng.random_range(-PI..PI))
        .collect();
    basis.with_phases(&phases)
}

pub fn run_checks(model: &ModelSystem, tol: &Tolerances) -> CheckReport {
    let mut s = Suite { checks: Vec::new() };
    hilbert_checks(&mut s, model, tol);
    app_checks(&mut s, model, tol);
    ergodic_checks(&mut s, model, tol);
    semiclassical_checks(&mut s, model, tol);
    freespace_checks(&mut s, tol);
    CheckReport { checks: s.checks }
}

fn sample_times(model: &ModelSystem) -> [f64; 3] {
    let u = model.hbar / energy_scale(&model.spectrum);
    [0.37 * u, 3.1 * u, 29.0 * u]
}

fn hilbert_checks(s: &mut Suite, model: &ModelSystem, tol: &Tolerances) {
    let spec = &model.spectrum;
    s.run("hilbert", "unitarity", || {
        let mut worst = 0.0_f64;
        for t in sample_times(model) {
            worst = worst.max(propagator(spec, t, model.hbar)?.unitarity_defect());
        }
        Ok(at_most(
            worst,
            tol.unitarity,
            "max |U U^dag - I| over three times",
        ))
    });
    s.run("hilbert", "spectral exactness", || {
        let mut worst = 0.0_f64;
        for t in sample_times(model) {
            let u = propagator(spec, t, model.hbar)?;
            for n in 0..spec.dim() {
                let ket = spec.eigenvector(n).amplitudes();
                let phase = C64::from_polar(1.0, -spec.energy(n) * t / model.hbar);
                for (x, y) in u.mul_vec(ket)?.iter().zip(ket) {
                    worst = worst.max((x - phase * y).norm());
                }
            }
        }
        Ok(at_most(
            worst,
            tol.spectral_exactness,
            "max |U|n> - exp(-iE_n t/hbar)|n>| componentwise",
        ))
    });
    s.run("hilbert", "reconstruction", || {
        let defect = spec.reconstruct().max_abs_diff(&model.hamiltonian);
        let scale = model.hamiltonian.max_abs().max(1.0);
        Ok(at_most(
            defect / scale,
            tol.spectral_exactness,
            "max |V diag(E) V^dag - H| / max(1, |H|)",
        ))
    });
    s.run("hilbert", "phase-fixing determinism", || {
        let again = eigendecompose_hermitian(&model.hamiltonian, Some(spec.eps_deg()))?;
        let mut mismatches = 0usize;
        for n in 0..spec.dim() {
            if again.energy(n).to_bits() != spec.energy(n).to_bits() {
                mismatches += 1;
            }
            let same = again
                .eigenvector(n)
                .amplitudes()
                .iter()
                .zip(spec.eigenvector(n).amplitudes())
                .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits());
            if !same {
                mismatches += 1;
            }
        }
        Ok(Outcome {
            measured: mismatches as f64,
            limit: "== 0".into(),
            passed: mismatches == 0,
            detail: "bitwise differences between two decompositions".into(),
        })
    });
}

fn app_checks(s: &mut Suite, model: &ModelSystem, tol: &Tolerances) {
    let spec = &model.spectrum;
    let hbar = model.hbar;
    let eps = tol.eps_sing;
    let cands = candidates(model);
    let bases: Vec<(&str, &OrthonormalBasis)> = model.bases().collect();
    let times = sample_times(model);

    s.run("app", "gauge invariance", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6a09e667);
        let mut worst = 0.0_f64;
        let mut compared = 0usize;
        let spec_g = SpectralDecomposition::from_eigenpairs(
            spec.eigenvalues().to_vec(),
            rephase(&mut rng, spec.eigenvectors()),
            spec.eps_deg(),
        )?;
        for a in cands.iter().take(6) {
            let a_g = a.with_global_phase(rng.random_range(-PI..PI));
            for (_, ba) in &bases {
                let ba_g = rephase(&mut rng, ba);
                for (_, bb) in &bases {
                    let bb_g = rephase(&mut rng, bb);
                    let t0 = kd_joint(a, ba, bb)?;
                    let t1 = kd_joint(&a_g, &ba_g, &bb_g)?;
                    for (x, y) in t0.values().iter().zip(t1.values()) {
                        worst = worst.max(rel(*x, *y));
                        compared += 1;
                    }
                }
                for b in ba.vectors().iter().take(4) {
                    let b_g = b.with_global_phase(rng.random_range(-PI..PI));
                    for (_, nb) in &bases {
                        let nb_g = rephase(&mut rng, nb);
                        match (conditional_app(a, b, nb, eps), conditional_app(&a_g, &b_g, &nb_g, eps)) {
                            (Ok(p0), Ok(p1)) => {
                                for (x, y) in p0.iter().zip(&p1) {
                                    worst = worst.max(rel(*x, *y));
                                    compared += 1;
                                }
                            }
                            (Err(e), _) | (_, Err(e)) if is_singular(&e) => {}
                            (Err(e), _) | (_, Err(e)) => return Err(e),
                        }
                    }
                    for &t in &times {
                        match (weak_energy(b, a, spec, t, hbar, eps), weak_energy(&b_g, &a_g, &spec_g, t, hbar, eps)) {
                            (Ok(h0), Ok(h1)) => {
                                worst = worst.max(rel(h0, h1));
                                compared += 1;
                            }
                            (Err(e), _) | (_, Err(e)) if is_singular(&e) => {}
                            (Err(e), _) | (_, Err(e)) => return Err(e),
                        }
                    }
                }
                for n in 0..spec.dim().min(4) {
                    let r0 = time_dependent_app(a, ba, spec, n, &times, hbar, eps, Resolution::Eigenvector);
                    let r1 = time_dependent_app(&a_g, &ba_g, &spec_g, n, &times, hbar, eps, Resolution::Eigenvector);
                    match (r0, r1) {
                        (Ok(t0), Ok(t1)) => {
                            for (x, y) in t0.values().iter().zip(t1.values()) {
                                worst = worst.max(rel(*x, *y));
                                compared += 1;
                            }
                        }
                        (Err(e), _) | (_, Err(e)) if is_singular(&e) => {}
                        (Err(e), _) | (_, Err(e)) => return Err(e),
                    }
                }
            }
        }
        Ok(at_most(
            worst,
            tol.gauge,
            format!("{compared} values of kd-joint, conditional, time-dependent and weak-energy outputs under random phases (relative to max(1,|value|))"),
        ))
    });

    s.run("app", "normalization", || {
        let mut worst = 0.0_f64;
        let mut tables = 0usize;
        for a in &cands {
            for (_, ba) in &bases {
                for (_, bb) in &bases {
                    worst = worst.max(kd_joint(a, ba, bb)?.normalization_defect());
                    tables += 1;
                }
                for b in ba.vectors() {
                    for (_, nb) in &bases {
                        match conditional_app(a, b, nb, eps) {
                            Ok(p) => {
                                worst = worst.max((p.iter().sum::<C64>() - 1.0).norm());
                                tables += 1;
                            }
                            Err(e) if is_singular(&e) => {}
                            Err(e) => return Err(e),
                        }
                    }
                }
                for n in 0..spec.dim() {
                    match time_dependent_app(
                        a,
                        ba,
                        spec,
                        n,
                        &times,
                        hbar,
                        eps,
                        Resolution::Eigenvector,
                    ) {
                        Ok(t) => {
                            worst = worst.max(t.normalization_defect());
                            tables += 1;
                        }
                        Err(e) if is_singular(&e) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        Ok(at_most(
            worst,
            tol.normalization,
            format!("{tables} joint, conditional and time-dependent tables"),
        ))
    });

    s.run("app", "mixture law", || {
        let mut worst = 0.0_f64;
        for a in &cands {
            let coeffs = spec.eigenvectors().coefficients(a)?;
            for (_, bb) in &bases {
                let mut mix = vec![C64::new(0.0, 0.0); bb.dim()];
                for (n, c) in coeffs.iter().enumerate() {
                    match MotionApp::new(a, bb, spec, n, hbar, eps, Resolution::Eigenvector) {
                        Ok(app) => {
                            for (m, p) in mix.iter_mut().zip(app.eval(0.0)) {
                                *m += p * c.norm_sqr();
                            }
                        }
                        Err(e) if is_singular(&e) => {}
                        Err(e) => return Err(e),
                    }
                }
                for (m, b) in mix.iter().zip(bb.vectors()) {
                    worst = worst.max((m - inner(b, a)?.norm_sqr()).norm());
                }
            }
        }
        Ok(at_most(
            worst,
            tol.mixture,
            "max |sum_n P(b(0)|a,n)|<n|a>|^2 - |<b|a>|^2|",
        ))
    });

    s.run("app", "conjugation symmetry", || {
        let mut worst = 0.0_f64;
        for a in &cands {
            for b in &cands {
                for (_, nb) in &bases {
                    match (
                        conditional_app(a, b, nb, eps),
                        conditional_app(b, a, nb, eps),
                    ) {
                        (Ok(p), Ok(q)) => {
                            for (x, y) in p.iter().zip(&q) {
                                worst = worst.max(rel(*x, y.conj()));
                            }
                        }
                        (Err(e), _) | (_, Err(e)) if is_singular(&e) => {}
                        (Err(e), _) | (_, Err(e)) => return Err(e),
                    }
                }
            }
        }
        Ok(at_most(
            worst,
            tol.conjugation,
            "max |P(n|a,b) - conj P(n|b,a)| relative to max(1,|P|)",
        ))
    });

    s.run("app", "unitary decomposition identity", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xbb67ae85);
        let mut worst = 0.0_f64;
        let mut draws = 0usize;
        for a in &cands {
            for b in &cands {
                let t = rng.random_range(0.0..10.0) * hbar / energy_scale(spec);
                let actions: Vec<f64> = spec.eigenvalues().iter().map(|e| e * t).collect();
                match unitary_decomposition_check(a, b, spec, &actions, hbar, eps) {
                    Ok((lhs, rhs)) => {
                        worst = worst.max((lhs - rhs).abs());
                        draws += 1;
                    }
                    Err(e) if is_singular(&e) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(at_most(
            worst,
            tol.unitary_decomposition,
            format!("{draws} (a, b, t) draws"),
        ))
    });

    s.run("app", "phase evolution second order", || {
        second_order(model, &cands, tol)
    });
}

/// Residual of the phase-evolution equation at `dt` and `dt/2` on one
/// interval, for the first preparation pair where it is not identically zero.
fn second_order(model: &ModelSystem, cands: &[StateVector], tol: &Tolerances) -> Step {
    let spec = &model.spectrum;
    let span = spec.spectral_span();
    if span == 0.0 {
        return Ok(not_applicable(
            "single energy level: P(b(t)|a,n) is constant",
        ));
    }
    let t_end = 0.5 * model.hbar / span;
    let grid = |steps: usize| -> Vec<f64> {
        (0..=steps)
            .map(|k| t_end * k as f64 / steps as f64)
            .collect()
    };
    let (coarse, fine) = (grid(20), grid(40));
    for a in cands {
        for b in cands {
            for n in 0..spec.dim() {
                let residual = |ts: &[f64]| -> Result<f64, Error> {
                    let p = conditional_motion(a, b, spec, n, ts, model.hbar, tol.eps_sing)?;
                    let w = weak_energy_series(b, a, spec, ts, model.hbar, tol.eps_sing)?;
                    phase_evolution_check(&p, ts, &w, spec.energy(n), model.hbar)
                };
                let (r1, r2) = match (residual(&coarse), residual(&fine)) {
                    (Ok(x), Ok(y)) => (x, y),
                    (Err(e), _) | (_, Err(e)) if is_singular(&e) => continue,
                    (Err(e), _) | (_, Err(e)) => return Err(e),
                };
                if r1 < 1e-9 {
                    continue;
                }
                return Ok(within(
                    r1 / r2,
                    tol.second_order_ratio,
                    format!(
                        "a={}, b={}, n={n}: residual {r1:e} at dt={:e}, {r2:e} at dt/2",
                        a.label(),
                        b.label(),
                        coarse[1]
                    ),
                ));
            }
        }
    }
    Ok(not_applicable(
        "no preparation pair with a nonzero finite-difference residual",
    ))
}

fn ergodic_checks(s: &mut Suite, model: &ModelSystem, tol: &Tolerances) {
    let spec = &model.spectrum;
    let eps = tol.eps_sing;
    let cands = candidates(model);
    let finals: Vec<StateVector> = model
        .bases()
        .flat_map(|(_, b)| b.vectors().to_vec())
        .collect();

    let law = |a: &StateVector, b: &StateVector, n: usize| {
        if spec.is_degenerate(n) {
            ergodic_law_eigenspace(a, b, spec, n, eps)
        } else {
            ergodic_law_analytic(a, b, spec.eigenvector(n), eps)
        }
    };

    s.run("ergodic", "law of quantum ergodicity", || {
        let mut worst = 0.0_f64;
        let mut triples = 0usize;
        for a in &cands {
            for b in &finals {
                for n in 0..spec.dim() {
                    match law(a, b, n) {
                        Ok(l) => {
                            worst = worst.max(l.defect());
                            triples += 1;
                        }
                        Err(e) if is_singular(&e) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        Ok(at_most(
            worst,
            tol.ergodic_law,
            format!("{triples} valid (a,b,n) triples: max(|Im P(n|a,b)P(b|a,n)|, |Re - Born|); degenerate levels use eigenspaces"),
        ))
    });

    // Inside a degenerate eigenspace the limit keeps the coherences of `a`,
    // so independence of the preparation is a statement about single levels.
    s.run("ergodic", "independence of a", || {
        let mut worst = 0.0_f64;
        let levels: Vec<usize> = (0..spec.dim())
            .filter(|&n| !spec.is_degenerate(n))
            .collect();
        for b in &finals {
            for &n in &levels {
                let mut first: Option<C64> = None;
                for a in &cands {
                    match law(a, b, n) {
                        Ok(l) => match first {
                            None => first = Some(l.product),
                            Some(p) => worst = worst.max((l.product - p).norm()),
                        },
                        Err(e) if is_singular(&e) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        Ok(at_most(
            worst,
            tol.a_independence,
            format!(
                "spread of P(n|a,b)P(b|a,n) across preparations over {} nondegenerate of {} levels",
                levels.len(),
                spec.dim()
            ),
        ))
    });

    s.run("ergodic", "numeric-analytic O(1/T)", || {
        numeric_convergence(model, &cands, tol)
    });
    s.run("ergodic", "dephasing consistency", || {
        dephasing(model, &cands, tol)
    });

    s.run("ergodic", "gaussian minimality", || {
        let hbar = model.hbar;
        let grid = |n: usize, reach: f64| -> Vec<f64> {
            (0..n)
                .map(|k| -reach + 2.0 * reach * k as f64 / (n - 1) as f64)
                .collect()
        };
        let g = RandomizationKernel::gaussian(0.0, 1.0)?;
        let r = uncertainty_product(&g, &grid(4001, 32.0 * hbar), hbar)?;
        let r2 = uncertainty_product(&g, &grid(8001, 32.0 * hbar), hbar)?;
        let u = RandomizationKernel::uniform(0.0, 1.0)?;
        let ru = uncertainty_product(&u, &grid(4001, 64.0 * hbar), hbar)?;
        let err = (r.product_over_hbar - FRAC_1_SQRT_2).abs() / FRAC_1_SQRT_2;
        let refine = (r.product_over_hbar - r2.product_over_hbar).abs() / r.product_over_hbar;
        let strict = ru.product_over_hbar > FRAC_1_SQRT_2;
        Ok(Outcome {
            measured: err,
            limit: format!(
                "<= {:e}, refinement <= {:e}, uniform > 1/sqrt2",
                tol.uncertainty_rel, tol.grid_independence
            ),
            passed: err <= tol.uncertainty_rel && refine <= tol.grid_independence && strict,
            detail: format!(
                "gaussian product/hbar {}, 2x grid change {refine:e}, uniform product/hbar {}",
                r.product_over_hbar, ru.product_over_hbar
            ),
        })
    });
}

/// Chooses a preparation, final basis and level with a nontrivial motion
/// probability; the resolution is eigenspace when the level is degenerate.
fn pick_motion(
    model: &ModelSystem,
    cands: &[StateVector],
    tol: &Tolerances,
) -> Option<(MotionApp, String)> {
    let spec = &model.spectrum;
    for a in cands {
        for (name, basis) in model.bases() {
            for n in 0..spec.dim() {
                let res = if spec.is_degenerate(n) {
                    Resolution::Eigenspace
                } else {
                    Resolution::Eigenvector
                };
                if let Ok(app) = MotionApp::new(a, basis, spec, n, model.hbar, tol.eps_sing, res) {
                    let oscillates = app
                        .weights()
                        .iter()
                        .flat_map(|w| w.iter().zip(app.detunings()))
                        .any(|(w, d)| d.abs() > spec.eps_deg() && w.norm() > 1e-6);
                    if oscillates {
                        return Some((app, format!("a={}, b basis {name}, n={n}", a.label())));
                    }
                }
            }
        }
    }
    None
}

fn numeric_convergence(model: &ModelSystem, cands: &[StateVector], tol: &Tolerances) -> Step {
    let Some((app, what)) = pick_motion(model, cands, tol) else {
        return Ok(not_applicable(
            "no preparation with an oscillating motion probability",
        ));
    };
    let gap = app.min_bohr_energy().expect("oscillating series has a gap");
    let dt = max_dt(app.max_bohr_energy(), model.hbar);
    let t1 = 50.0 * 2.0 * PI * model.hbar / gap;
    if 2.0 * t1 / dt > MAX_STEPS {
        return Ok(not_applicable(format!(
            "{what}: time scale ratio too large for the step budget"
        )));
    }
    let eps = model.spectrum.eps_deg();
    // |(1/T) int_0^T W e^{-i d t/hbar} dt| <= 2 |W| hbar / (|d| T) for each oscillating term.
    let limit: Vec<C64> = app
        .weights()
        .iter()
        .map(|w| {
            w.iter()
                .zip(app.detunings())
                .filter(|(_, d)| d.abs() <= eps)
                .map(|(w, _)| *w)
                .sum()
        })
        .collect();
    let bound_t: Vec<f64> = app
        .weights()
        .iter()
        .map(|w| {
            w.iter()
                .zip(app.detunings())
                .filter(|(_, d)| d.abs() > eps)
                .map(|(w, d)| 2.0 * w.norm() * model.hbar / d.abs())
                .sum()
        })
        .collect();
    let mut worst_ratio = 0.0_f64;
    let mut residuals = Vec::new();
    for t in [t1, 2.0 * t1] {
        let avg = ergodic_average_numeric(&app, t, dt)?;
        for ((x, l), b) in avg.iter().zip(&limit).zip(&bound_t) {
            let r = (x - l).norm();
            if *b > 0.0 {
                worst_ratio = worst_ratio.max(r * t / b);
            }
        }
        residuals.push(
            avg.iter()
                .zip(&limit)
                .map(|(x, l)| (x - l).norm())
                .fold(0.0, f64::max),
        );
    }
    Ok(at_most(
        worst_ratio,
        1.05,
        format!(
            "{what}: residual {:e} at T={t1}, {:e} at 2T; measured = max residual / (sum 2|W|hbar/(|dE| T)), trapezoid slack 5%",
            residuals[0], residuals[1]
        ),
    ))
}

fn dephasing(model: &ModelSystem, cands: &[StateVector], tol: &Tolerances) -> Step {
    let spec = &model.spectrum;
    let Some(gap) = spec.min_gap() else {
        return Ok(not_applicable("single energy level: nothing dephases"));
    };
    let dt = max_dt(spec.spectral_span(), model.hbar);
    let t1 = 20.0 * 2.0 * PI * model.hbar / gap;
    if 2.0 * t1 / dt * (spec.dim() as f64) > MAX_STEPS * 4.0 {
        return Ok(not_applicable(
            "time scale ratio too large for the step budget",
        ));
    }
    let mut worst_formula = 0.0_f64;
    let mut worst_ratio = 0.0_f64;
    for a in cands.iter().take(4) {
        let rho = dephase(a, spec)?;
        // sum_g Pi_g |a><a| Pi_g, assembled from projectors.
        let mut expected = ComplexMatrix::zeros(spec.dim(), spec.dim());
        for group in spec.degeneracy_groups() {
            let pa = spec
                .eigenspace_projector(group[0])
                .mul_vec(a.amplitudes())?;
            expected = ComplexMatrix::from_fn(spec.dim(), spec.dim(), |i, j| {
                expected[(i, j)] + pa[i] * pa[j].conj()
            });
        }
        worst_formula = worst_formula.max(rho.matrix().max_abs_diff(&expected));
        let c = spectral_constant(a, spec, model.hbar)?;
        for t in [t1, 2.0 * t1] {
            let numeric = time_averaged_density(a, spec, t, dt, model.hbar)?;
            let dev = numeric.max_abs_diff(rho.matrix());
            if c > 0.0 {
                worst_ratio = worst_ratio.max(dev / (tol.dephasing_factor * c / t));
            }
        }
    }
    Ok(Outcome {
        measured: worst_ratio,
        limit: format!(
            "<= 1 (deviation over {} C/T); projector form <= {:e}",
            tol.dephasing_factor, tol.normalization
        ),
        passed: worst_ratio <= 1.0 && worst_formula <= tol.normalization,
        detail: format!(
            "projector-form difference {worst_formula:e}; T = {t1} and {}",
            2.0 * t1
        ),
    })
}

fn semiclassical_checks(s: &mut Suite, model: &ModelSystem, tol: &Tolerances) {
    s.run("semiclassical", "stationarity at arrival", || {
        stationarity(model, tol)
    });

    s.run("semiclassical", "coarse-graining monotonicity", || {
        let lad = ladder(1.0);
        let p = conditional_app(&lad.a, &lad.b, lad.spectrum.eigenvectors(), tol.eps_sing)?;
        let mut l1 = Vec::new();
        for w in [0.5, 1.0, 2.0, 4.0] {
            let out = coarse_grain_energy(&p, lad.spectrum.eigenvalues(), w * lad.gap, model.hbar)?;
            l1.push(out.iter().map(|z| z.im.abs()).sum::<f64>());
        }
        let worst_rise = l1
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Outcome {
            measured: worst_rise,
            limit: "<= 0".into(),
            passed: worst_rise <= 0.0,
            detail: format!(
                "imaginary L1 norms on the 16-level ladder for widths 0.5..4 gaps: {l1:?}"
            ),
        })
    });

    s.run("semiclassical", "legendre duality second order", || {
        let (m, l, e) = (1.0, 3.0, 2.0);
        let s_e = |e: f64| (2.0 * m * e).sqrt() * l;
        let exact = l * (m / (2.0 * e)).sqrt();
        let err = |h: f64| -> Result<f64, Error> {
            Ok((discrete_time_estimate(s_e(e + h), s_e(e - h), e + h, e - h)? - exact).abs())
        };
        let (e1, e2) = (err(0.2)?, err(0.1)?);
        Ok(within(
            e1 / e2,
            tol.legendre_order_ratio,
            format!("free particle m=1, L=3, E=2: t_nm error {e1:e} at spacing 0.4, {e2:e} at 0.2"),
        ))
    });
}

/// At a located crossing `Re H = E_n` the phase of `P(b(t)|a,n)` must be
/// stationary up to the bisection tolerance times `|d Re H / dt|`.
fn stationarity(model: &ModelSystem, tol: &Tolerances) -> Step {
    let spec = &model.spectrum;
    let span = spec.spectral_span();
    if span == 0.0 {
        return Ok(not_applicable("single energy level"));
    }
    let hbar = model.hbar;
    let steps = 400usize;
    let t_end = 4.0 * PI * hbar / span;
    let dt = t_end / steps as f64;
    let ts: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let cands = candidates(model);
    for a in &cands {
        for b in &cands {
            let Ok(weak) = weak_energy_series(b, a, spec, &ts, hbar, tol.eps_sing) else {
                continue;
            };
            // Stay away from near-orthogonal points, where H has poles.
            if weak
                .values()
                .iter()
                .any(|h| h.norm() > 1e3 * energy_scale(spec))
            {
                continue;
            }
            for n in 0..spec.dim() {
                let Ok(ArrivalOutcome::Crossings(found)) = classical_arrival(&weak, spec.energy(n))
                else {
                    continue;
                };
                let Some(c) = found
                    .iter()
                    .find(|c| c.t_classical > 2.0 * dt && c.t_classical < t_end - 2.0 * dt)
                else {
                    continue;
                };
                let t = c.t_classical;
                let h = 1e-4 * dt;
                let probe = [t - h, t, t + h];
                let Ok(p) = conditional_motion(a, b, spec, n, &probe, hbar, tol.eps_sing) else {
                    continue;
                };
                let phases = unwrap_actions(&p.iter().map(|z| arg(*z)).collect::<Vec<_>>(), 1.0);
                let slope = (phases[2] - phases[0]) / (2.0 * h);
                let w = weak_energy_series(b, a, spec, &probe, hbar, tol.eps_sing)?;
                let d_re_h = (w.values()[2].re - w.values()[0].re) / (2.0 * h);
                let allowed = dt * 1e-3 * d_re_h.abs() / hbar;
                return Ok(Outcome {
                    measured: slope.abs(),
                    limit: format!("<= {allowed:e}"),
                    passed: slope.abs() <= allowed,
                    detail: format!(
                        "a={}, b={}, n={n}, crossing at t={t}: |d(phase)/dt| against bisection tolerance {:e} x |d Re H/dt| {:e} / hbar",
                        a.label(),
                        b.label(),
                        dt * 1e-3,
                        d_re_h.abs()
                    ),
                });
            }
        }
    }
    Ok(not_applicable(
        "no crossing Re H = E_n found for any preparation pair",
    ))
}

/// Reference propagation: Delta t / T = 0.005.
fn reference_propagation() -> Result<(FreeParticleConfig, f64), Error> {
    Ok((
        FreeParticleConfig::propagating(1.0, 10.0, 0.0, 4000.0, 1.0)?,
        400.0,
    ))
}

fn freespace_checks(s: &mut Suite, tol: &Tolerances) {
    s.run("freespace", "phase decomposition identity", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x3c6ef372);
        let mut worst = 0.0_f64;
        for _ in 0..200 {
            let m = rng.random_range(0.5..2.0);
            let p = rng.random_range(0.5..3.0);
            let l = rng.random_range(0.5..10.0);
            let hbar = rng.random_range(0.5..2.0);
            let t = rng.random_range(0.2..5.0) * m * l / p;
            let cfg = FreeParticleConfig::propagating(m, p, 0.0, l, hbar)?;
            worst = worst.max(free_action_split(&cfg, t)?.identity_defect() / hbar);
        }
        Ok(at_most(
            worst,
            tol.phase_identity,
            "200 random (m, p, L, hbar, t): phase defect mod 2 pi",
        ))
    });

    s.run("freespace", "stationary width", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xa54ff53a);
        let mut worst = 0.0_f64;
        for _ in 0..100 {
            let m = rng.random_range(0.1..10.0);
            let p = rng.random_range(0.1..10.0);
            let l = rng.random_range(0.1..100.0);
            let hbar = rng.random_range(0.1..2.0);
            let cfg = FreeParticleConfig::propagating(m, p, 0.0, l, hbar)?;
            let w = stationary_width(&cfg)?;
            let oracle = 1.0 / free_phase_curvature(&cfg)?.sqrt();
            worst = worst.max((w - oracle).abs() / oracle);
        }
        Ok(at_most(
            worst,
            tol.stationary_width,
            "Delta t against 1/sqrt(phase curvature), relative",
        ))
    });

    s.run("freespace", "stationary-phase concentration", || {
        let (cfg, _) = reference_propagation()?;
        let (window, prediction) = stationary_concentration(&cfg, 3.0)?;
        let err = (window - prediction).norm() / prediction.norm();
        Ok(at_most(
            err,
            tol.fresnel_concentration,
            "integral over t_c +- 3 Delta t against its Fresnel value (m=1, p=10, L=4000)",
        ))
    });

    s.run("freespace", "window average", || {
        let (cfg, window) = reference_propagation()?;
        let w = partial_ergodic_free(&cfg, window)?;
        Ok(at_most(
            w.relative_error(),
            tol.window_rel,
            format!(
                "m=1, p=10, L=4000, T=400 (Delta t/T = {}): numeric against m/(Tp)",
                w.width_ratio()
            ),
        ))
    });

    s.run("freespace", "tunneling half suppression", || {
        let mut ratios = Vec::new();
        for l in [1.0, 2.0, 4.0] {
            let cfg = FreeParticleConfig::tunneling(1.0, 0.5, 0.0, 0.0, l, 1.0)?;
            let integral = tunnel_time_integral(&cfg, TUNNEL_REL_TOL)?;
            ratios.push(integral.value.norm() / cfg.suppression()?);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let spread = ratios
            .iter()
            .map(|r| (r - mean).abs() / mean)
            .fold(0.0, f64::max);
        Ok(at_most(
            spread,
            tol.tunnel_split,
            format!("|time integral| / exp(-kappa L/hbar) for L = 1, 2, 4: {ratios:?}"),
        ))
    });

    s.run("freespace", "ergodic tunneling probability", || {
        let mut worst = 0.0_f64;
        for gap in [0.25, 0.5, 1.0] {
            for l in [1.0, 2.0, 4.0] {
                let cfg = FreeParticleConfig::tunneling(1.0, gap, 0.0, 0.0, l, 1.0)?;
                worst = worst.max(tunnel_ergodic(&cfg, 1.0)?.relative_error());
            }
        }
        Ok(at_most(
            worst,
            tol.tunnel_rel,
            "V-E in {0.25, 0.5, 1}, L in {1, 2, 4}",
        ))
    });
}
