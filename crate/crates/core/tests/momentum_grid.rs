//! Free particle on a periodic grid: the weak energy between two Gaussian
//! packets crosses p^2/2m near the classical flight time m L / p.

use std::f64::consts::PI;
use std::sync::OnceLock;

use ergophase_core::app::weak_energy_series;
use ergophase_core::semiclassical::classical_arrival;
use ergophase_core::{
    eigendecompose_hermitian, ArrivalOutcome, ComplexMatrix, FreeParticleConfig,
    SpectralDecomposition, StateVector, C64, DEFAULT_EPS_SING,
};

const N: usize = 256;
const DX: f64 = 0.125; // ring length 32
const MASS: f64 = 1.0;
const HBAR: f64 = 1.0;

fn momentum(k: usize) -> f64 {
    // signed index in -N/2 .. N/2
    let j = if k < N / 2 {
        k as f64
    } else {
        k as f64 - N as f64
    };
    2.0 * PI * HBAR * j / (N as f64 * DX)
}

/// `H = F^dagger diag(p^2 / 2m) F` in the position basis.
fn hamiltonian() -> ComplexMatrix {
    let energies: Vec<f64> = (0..N).map(|k| momentum(k).powi(2) / (2.0 * MASS)).collect();
    ComplexMatrix::from_fn(N, N, |x, y| {
        let s: C64 = (0..N)
            .map(|k| {
                let phase = 2.0 * PI * (k * ((x + N - y) % N)) as f64 / N as f64;
                energies[k] * C64::from_polar(1.0, phase)
            })
            .sum();
        s / N as f64
    })
}

fn system() -> &'static (ComplexMatrix, SpectralDecomposition) {
    static SYSTEM: OnceLock<(ComplexMatrix, SpectralDecomposition)> = OnceLock::new();
    SYSTEM.get_or_init(|| {
        let h = hamiltonian();
        let spec = eigendecompose_hermitian(&h, None).unwrap();
        (h, spec)
    })
}

/// Gaussian of width `s` centred at `x0` on the ring (nearest image).
fn packet(x0: f64, s: f64, label: &str) -> StateVector {
    let ring = N as f64 * DX;
    let amps = (0..N)
        .map(|j| {
            let mut d = j as f64 * DX - x0;
            d -= ring * (d / ring).round();
            C64::new((-d * d / (4.0 * s * s)).exp(), 0.0)
        })
        .collect();
    StateVector::normalized(amps, label).unwrap()
}

#[test]
fn weak_energy_crossing_matches_flight_time() {
    let (_, spec) = system();
    // Packets of width s act like an imaginary time shift tau = 4 m s^2 / hbar,
    // which lowers Re H by about 3 (tau / t)^2 / 2; the path the other way
    // round the ring is damped by exp(-tau p^2 (R^2 - 2 R L) / 2 L^2), R = 32.
    // s = 0.16, L = 8 keep both well under 1%.
    let (x0, l, s) = (0.0, 8.0, 0.16);
    let a = packet(x0, s, "a");
    let b = packet(x0 + l, s, "b");

    let p = momentum(25);
    let e_n = p * p / (2.0 * MASS);
    // the level exists in the computed spectrum (twice, for +p and -p)
    let hits = spec
        .eigenvalues()
        .iter()
        .filter(|e| (*e - e_n).abs() < 1e-9 * e_n)
        .count();
    assert_eq!(hits, 2);

    let times: Vec<f64> = (0..=1000).map(|k| 0.8 + 0.002 * k as f64).collect();
    let weak = weak_energy_series(&b, &a, spec, &times, HBAR, DEFAULT_EPS_SING).unwrap();
    let ArrivalOutcome::Crossings(found) = classical_arrival(&weak, e_n).unwrap() else {
        panic!("a free flight has a crossing");
    };
    assert_eq!(found.len(), 1, "{found:?}");

    let t_c = FreeParticleConfig::propagating(MASS, p, x0, x0 + l, HBAR)
        .unwrap()
        .arrival_time();
    assert!((t_c - MASS * l / p).abs() < 1e-12);
    let rel = (found[0].t_classical - t_c).abs() / t_c;
    assert!(
        rel < 0.02,
        "crossing {} against {t_c}: {rel}",
        found[0].t_classical
    );
}

#[test]
fn grid_hamiltonian_is_diagonalized_exactly() {
    let (h, spec) = system();
    let scale = h.max_abs().max(1.0);
    assert!(spec.reconstruct().max_abs_diff(h) / scale < 1e-10);
    let mut expected: Vec<f64> = (0..N).map(|k| momentum(k).powi(2) / (2.0 * MASS)).collect();
    expected.sort_by(f64::total_cmp);
    for (e, x) in spec.eigenvalues().iter().zip(&expected) {
        assert!((e - x).abs() < 1e-9 * x.max(1.0), "{e} vs {x}");
    }
}
