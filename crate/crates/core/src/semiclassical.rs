//! Classical-limit diagnostics: where the weak energy meets the energy
//! eigenvalue, propagation times from energy differences of the reduced
//! action, energy coarse-graining, and the Legendre relation between the
//! time- and energy-indexed actions.

use serde::{Deserialize, Serialize};

use crate::app::WeakValueSeries;
use crate::error::{Error, Result};
use crate::hilbert::{dot, SpectralDecomposition, StateVector};
use crate::phase::{arg, unwrap_actions, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalMethod {
    WeakValueCrossing,
    DiscreteTnm,
    LegendreGradient,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalEstimate {
    pub t_classical: f64,
    pub method: ArrivalMethod,
    /// `|Re H(b,a,t) - E_n|` at `t_classical`.
    pub residual: f64,
}

/// Result of scanning a weak-energy series for `Re H = E_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "estimates")]
pub enum ArrivalOutcome {
    /// `Re H = E_n` over the whole series, so every time is a crossing.
    Flat,
    Crossings(Vec<ArrivalEstimate>),
}

/// Cubic (Catmull–Rom) interpolant of uniformly sampled real values.
fn catmull_rom(values: &[f64], x: f64) -> f64 {
    let last = values.len() - 1;
    let x = x.clamp(0.0, last as f64);
    let k = (x.floor() as usize).min(last - 1);
    let u = x - k as f64;
    let p1 = values[k];
    let p2 = values[k + 1];
    let p0 = if k == 0 { 2.0 * p1 - p2 } else { values[k - 1] };
    let p3 = if k + 2 > last {
        2.0 * p2 - p1
    } else {
        values[k + 2]
    };
    p1 + 0.5
        * u
        * ((p2 - p0)
            + u * ((2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) + u * (3.0 * (p1 - p2) + p3 - p0)))
}

/// Locates every sign change of `Re H(b,a,t) - E_n` on a uniformly spaced
/// series, refining each by bisection on the cubic interpolant to
/// `dt * 1e-3`.
pub fn classical_arrival(weak: &WeakValueSeries, e_n: f64) -> Result<ArrivalOutcome> {
    let times = weak.times();
    if times.len() < 2 {
        return Err(Error::GridMismatch("need at least two samples".into()));
    }
    let dt = times[1] - times[0];
    if times
        .windows(2)
        .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt)
    {
        return Err(Error::GridMismatch(
            "weak-energy series must be uniformly spaced".into(),
        ));
    }
    let f: Vec<f64> = weak.values().iter().map(|h| h.re - e_n).collect();
    let scale = 1e-12 * e_n.abs().max(1.0);
    if f.iter().all(|v| v.abs() <= scale) {
        return Ok(ArrivalOutcome::Flat);
    }
    let eval = |x: f64| catmull_rom(&f, x);
    let mut found = Vec::new();
    for k in 0..f.len() - 1 {
        let (fa, fb) = (f[k], f[k + 1]);
        if fa == 0.0 {
            found.push(k as f64);
            continue;
        }
        if fa.signum() == fb.signum() || fb == 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (k as f64, (k + 1) as f64);
        let mut flo = fa;
        while hi - lo > 1e-3 {
            let mid = 0.5 * (lo + hi);
            let fm = eval(mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        found.push(0.5 * (lo + hi));
    }
    if f.last().copied() == Some(0.0) {
        found.push((f.len() - 1) as f64);
    }
    if found.is_empty() {
        return Err(Error::NoCrossing);
    }
    Ok(ArrivalOutcome::Crossings(
        found
            .into_iter()
            .map(|x| ArrivalEstimate {
                t_classical: times[0] + x * dt,
                method: ArrivalMethod::WeakValueCrossing,
                residual: eval(x).abs(),
            })
            .collect(),
    ))
}

/// `t_nm = (S_E(E_n) - S_E(E_m)) / (E_n - E_m)`; both actions must already
/// lie on one branch.
pub fn discrete_time_estimate(s_n: f64, s_m: f64, e_n: f64, e_m: f64) -> Result<f64> {
    if e_n == e_m || !(e_n - e_m).is_finite() {
        return Err(Error::DegenerateEnergies { e_n, e_m });
    }
    Ok((s_n - s_m) / (e_n - e_m))
}

/// Reduced actions `S_E(n) = hbar Arg <b|n><n|a>` in order of increasing
/// energy, continued across the branch cut by nearest-branch unwrapping.
/// Levels with a vanishing product are reported as `None`; unwrapping
/// restarts after them.
pub fn reduced_actions(
    a: &StateVector,
    b: &StateVector,
    spec: &SpectralDecomposition,
    hbar: f64,
    eps_sing: f64,
) -> Result<Vec<Option<f64>>> {
    if a.dim() != spec.dim() || b.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: if a.dim() != spec.dim() {
                a.dim()
            } else {
                b.dim()
            },
        });
    }
    let raw: Vec<Option<f64>> = spec
        .eigenvectors()
        .vectors()
        .iter()
        .map(|n| {
            let z = dot(b.amplitudes(), n.amplitudes()) * dot(n.amplitudes(), a.amplitudes());
            (z.norm() > eps_sing).then(|| hbar * arg(z))
        })
        .collect();
    let mut out = vec![None; raw.len()];
    let mut run: Vec<(usize, f64)> = Vec::new();
    let flush = |run: &mut Vec<(usize, f64)>, out: &mut Vec<Option<f64>>| {
        let vals: Vec<f64> = run.iter().map(|r| r.1).collect();
        for ((i, _), v) in run.iter().zip(unwrap_actions(&vals, hbar)) {
            out[*i] = Some(v);
        }
        run.clear();
    };
    for (i, s) in raw.iter().enumerate() {
        match s {
            Some(s) => run.push((i, *s)),
            None => flush(&mut run, &mut out),
        }
    }
    flush(&mut run, &mut out);
    Ok(out)
}

/// One row of the propagation-time table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TnmEntry {
    pub n: usize,
    pub m: usize,
    pub e_n: f64,
    pub e_m: f64,
    pub t_nm: f64,
}

/// `t_nm` for each pair of neighbouring levels with known actions and
/// distinct energies.
pub fn tnm_table(actions: &[Option<f64>], energies: &[f64]) -> Result<Vec<TnmEntry>> {
    if actions.len() != energies.len() {
        return Err(Error::DimensionMismatch {
            expected: energies.len(),
            found: actions.len(),
        });
    }
    let mut rows = Vec::new();
    for m in 0..energies.len().saturating_sub(1) {
        let n = m + 1;
        if let (Some(s_m), Some(s_n)) = (actions[m], actions[n]) {
            if energies[n] == energies[m] {
                continue;
            }
            rows.push(TnmEntry {
                n,
                m,
                e_n: energies[n],
                e_m: energies[m],
                t_nm: discrete_time_estimate(s_n, s_m, energies[n], energies[m])?,
            });
        }
    }
    Ok(rows)
}

/// Gaussian energy smoothing of a distribution over levels: each level's
/// weight is spread over its neighbours with a kernel of width `delta_e`
/// normalized over the spectrum, so totals are preserved.
pub fn coarse_grain_energy(
    values: &[C64],
    energies: &[f64],
    delta_e: f64,
    _hbar: f64,
) -> Result<Vec<C64>> {
    if values.len() != energies.len() {
        return Err(Error::DimensionMismatch {
            expected: energies.len(),
            found: values.len(),
        });
    }
    if !(delta_e > 0.0 && delta_e.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "coarse-graining width must be positive, got {delta_e}"
        )));
    }
    let kernel = |x: f64| (-0.5 * (x / delta_e).powi(2)).exp();
    let norms: Vec<f64> = energies
        .iter()
        .map(|em| energies.iter().map(|ek| kernel(ek - em)).sum())
        .collect();
    Ok(energies
        .iter()
        .map(|en| {
            values
                .iter()
                .zip(energies)
                .zip(&norms)
                .map(|((p, em), z)| p * (kernel(en - em) / z))
                .sum()
        })
        .collect())
}

fn lookup(series: &[(f64, f64)], key: f64, what: &str) -> Result<f64> {
    series
        .iter()
        .find(|(k, _)| (k - key).abs() <= 1e-12 * key.abs().max(1.0))
        .map(|p| p.1)
        .ok_or_else(|| Error::UnmatchedPairs(format!("no {what} sample at {key}")))
}

/// `max |S_E(E) - (S_t(t) + E t)|` over matched `(t, E)` pairs.
pub fn legendre_check(
    s_t_series: &[(f64, f64)],
    s_e_series: &[(f64, f64)],
    pairs: &[(f64, f64)],
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::UnmatchedPairs("no (t, E) pairs given".into()));
    }
    let mut worst = 0.0_f64;
    for &(t, e) in pairs {
        let s_t = lookup(s_t_series, t, "S_t")?;
        let s_e = lookup(s_e_series, e, "S_E")?;
        worst = worst.max((s_e - (s_t + e * t)).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::app::{conditional_app, weak_energy_series, DEFAULT_EPS_SING};
    use crate::fixtures::{ladder, qubit};
    use std::f64::consts::PI;

    fn series(times: Vec<f64>, f: impl Fn(f64) -> C64) -> WeakValueSeries {
        let values = times.iter().map(|&t| f(t)).collect();
        WeakValueSeries::new(times, values).unwrap()
    }

    fn grid(t0: f64, dt: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| t0 + dt * k as f64).collect()
    }

    #[test]
    fn arrival_on_eigenstate_is_flat() {
        let q = qubit();
        let ket = q.spectrum.eigenvector(1);
        let w = weak_energy_series(
            ket,
            ket,
            &q.spectrum,
            &grid(0.0, 0.1, 30),
            1.0,
            DEFAULT_EPS_SING,
        )
        .unwrap();
        assert_eq!(classical_arrival(&w, 1.0).unwrap(), ArrivalOutcome::Flat);
    }

    #[test]
    fn arrival_on_free_weak_energy() {
        // Re H = m L^2 / 2 t^2 meets E = p^2 / 2m at t = m L / p.
        let (m, l, p) = (1.0, 10.0, 2.0);
        let e = p * p / (2.0 * m);
        let dt = 0.05;
        let w = series(grid(1.0, dt, 300), |t| {
            C64::new(m * l * l / (2.0 * t * t), -0.5 / t)
        });
        let ArrivalOutcome::Crossings(found) = classical_arrival(&w, e).unwrap() else {
            panic!("expected crossings")
        };
        assert_eq!(found.len(), 1);
        assert!(
            (found[0].t_classical - m * l / p).abs() < 2e-4,
            "{:?}",
            found[0]
        );
        assert!(found[0].residual < 1e-3);
    }

    #[test]
    fn arrival_finds_every_crossing() {
        let w = series(grid(0.0, 0.01, 1000), |t| C64::new(t.sin(), 0.0));
        let ArrivalOutcome::Crossings(found) = classical_arrival(&w, 0.5).unwrap() else {
            panic!("expected crossings")
        };
        let expected = [
            PI / 6.0,
            5.0 * PI / 6.0,
            2.0 * PI + PI / 6.0,
            2.0 * PI + 5.0 * PI / 6.0,
        ];
        assert_eq!(found.len(), expected.len());
        for (f, e) in found.iter().zip(expected) {
            assert!((f.t_classical - e).abs() < 1e-5);
        }
    }

    #[test]
    fn arrival_above_barrier_has_no_crossing() {
        let w = series(grid(0.1, 0.05, 200), |t| {
            C64::new(1.0 + 4.0 / (2.0 * t * t), -0.5 / t)
        });
        assert_eq!(classical_arrival(&w, 0.5), Err(Error::NoCrossing));
    }

    #[test]
    fn discrete_time_examples() {
        assert_eq!(discrete_time_estimate(7.0, 3.0, 2.0, 1.0).unwrap(), 4.0);
        assert_eq!(
            discrete_time_estimate(7.0, 3.0, 2.0, 1.0).unwrap(),
            discrete_time_estimate(3.0, 7.0, 1.0, 2.0).unwrap()
        );
        assert!(matches!(
            discrete_time_estimate(1.0, 2.0, 1.0, 1.0),
            Err(Error::DegenerateEnergies { .. })
        ));
        let s = |e: f64| (2.0 * e).sqrt() * 10.0;
        let t = discrete_time_estimate(s(0.505), s(0.5), 0.505, 0.5).unwrap();
        let exact = 10.0 * (1.0 / (2.0 * 0.5025f64)).sqrt();
        assert!((t - exact).abs() / exact < 1e-2);
    }

    fn chirped(beta: f64) -> (crate::fixtures::Ladder, StateVector) {
        let lad = ladder(1.0);
        let amp = 0.25;
        let b = StateVector::new(
            (0..16)
                .map(|n| C64::from_polar(amp, beta * (n as f64 - 7.5).powi(2)))
                .collect(),
            "b",
        )
        .unwrap();
        (lad, b)
    }

    #[test]
    fn reduced_actions_follow_gentle_chirp() {
        // <b|n><n|a> = exp(-i beta (n - 7.5)^2) / 16, so S_E is minus the chirp.
        let beta = 0.05;
        let (lad, b) = chirped(beta);
        let s = reduced_actions(&lad.a, &b, &lad.spectrum, 1.0, DEFAULT_EPS_SING).unwrap();
        let s: Vec<f64> = s.into_iter().map(Option::unwrap).collect();
        let offset = s[0] + beta * 7.5f64.powi(2);
        for (n, v) in s.iter().enumerate() {
            let expected = -beta * (n as f64 - 7.5).powi(2) + offset;
            assert!((v - expected).abs() < 1e-9, "{n}: {v} vs {expected}");
        }
        let known: Vec<Option<f64>> = s.iter().map(|v| Some(*v)).collect();
        let table = tnm_table(&known, lad.spectrum.eigenvalues()).unwrap();
        assert_eq!(table.len(), 15);
        for row in &table {
            let slope = -beta * ((row.n as f64 - 7.5).powi(2) - (row.m as f64 - 7.5).powi(2));
            assert!((row.t_nm - slope).abs() < 1e-9);
        }
    }

    #[test]
    fn steep_chirp_aliases_under_nearest_branch_unwrapping() {
        // Neighbouring phases differ by more than pi at the edges of the
        // 0.35 chirp, so unwrapping lands on the wrong branch there.
        let lad = ladder(1.0);
        let s = reduced_actions(&lad.a, &lad.b, &lad.spectrum, 1.0, DEFAULT_EPS_SING).unwrap();
        let s: Vec<f64> = s.into_iter().map(Option::unwrap).collect();
        let true_step = -0.35 * ((1.0f64 - 7.5).powi(2) - 7.5f64.powi(2));
        assert!(((s[1] - s[0]) - true_step).abs() > 1.0);
        assert!(crate::phase::action_distance(s[1] - s[0], true_step, 1.0) < 1e-9);
    }

    fn ladder_conditional() -> (Vec<C64>, Vec<f64>) {
        let lad = ladder(1.0);
        let p = conditional_app(
            &lad.a,
            &lad.b,
            lad.spectrum.eigenvectors(),
            DEFAULT_EPS_SING,
        )
        .unwrap();
        (p, lad.spectrum.eigenvalues().to_vec())
    }

    fn imag_l1(v: &[C64]) -> f64 {
        v.iter().map(|z| z.im.abs()).sum()
    }

    #[test]
    fn coarse_grain_narrow_is_identity() {
        let (p, e) = ladder_conditional();
        let out = coarse_grain_energy(&p, &e, 0.05, 1.0).unwrap();
        for (x, y) in out.iter().zip(&p) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn coarse_grain_preserves_total_and_suppresses_imaginary_part() {
        let (p, e) = ladder_conditional();
        let total: C64 = p.iter().sum();
        let mut previous = f64::INFINITY;
        let base = imag_l1(&coarse_grain_energy(&p, &e, 0.25, 1.0).unwrap());
        for de in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let out = coarse_grain_energy(&p, &e, de, 1.0).unwrap();
            assert!((out.iter().sum::<C64>() - total).norm() < 1e-12);
            let l1 = imag_l1(&out);
            assert!(l1 <= previous);
            previous = l1;
        }
        assert!(previous < 0.2 * base);
    }

    #[test]
    fn coarse_grain_wide_kernel_is_nonnegative() {
        let (p, e) = ladder_conditional();
        let out = coarse_grain_energy(&p, &e, 100.0, 1.0).unwrap();
        for z in out {
            assert!(z.re >= -1e-3);
        }
        assert!(matches!(
            coarse_grain_energy(&p, &e, 0.0, 1.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn legendre_free_particle_offset() {
        let (m, hbar, l) = (1.0, 1.0, 3.0);
        let mut s_t = Vec::new();
        let mut s_e = Vec::new();
        let mut pairs = Vec::new();
        for p in [0.5, 1.0, 2.0] {
            let e = p * p / (2.0 * m);
            let t = m * l / p;
            s_t.push((t, m * l * l / (2.0 * t) - hbar * PI / 4.0));
            s_e.push((e, (2.0 * m * e).sqrt() * l));
            pairs.push((t, e));
        }
        let r = legendre_check(&s_t, &s_e, &pairs).unwrap();
        assert!((r - hbar * PI / 4.0).abs() < 1e-12);
        assert!(matches!(
            legendre_check(&s_t, &s_e, &[(0.1234, 0.5)]),
            Err(Error::UnmatchedPairs(_))
        ));
    }

    #[test]
    fn legendre_perturbed_pairing_is_quadratic() {
        let (m, l, p) = (1.0, 3.0, 1.0);
        let e = p * p / (2.0 * m);
        let tc = m * l / p;
        let excess = |dt: f64| {
            let t = tc + dt;
            let s_t = [(t, m * l * l / (2.0 * t))];
            let s_e = [(e, (2.0 * m * e).sqrt() * l)];
            legendre_check(&s_t, &s_e, &[(t, e)]).unwrap()
        };
        let (r1, r2) = (excess(1e-2), excess(5e-3));
        assert!(r1 < 1e-3);
        assert!((r1 / r2 - 4.0).abs() < 0.05, "{}", r1 / r2);
    }
}
