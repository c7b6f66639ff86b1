//! Reproducible test systems: Haar-like random unitaries and Hermitian
//! matrices, the qubit Z/X/Y model, and the 16-level chirped ladder.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::hilbert::{
    eigendecompose_hermitian, ComplexMatrix, OrthonormalBasis, SpectralDecomposition, StateVector,
};
use crate::phase::C64;

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Random unitary from Gram–Schmidt (applied twice) on complex Gaussian columns.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    for _ in 0..dim {
        let mut v: Vec<C64> = (0..dim).map(|_| gaussian_c64(rng)).collect();
        for _ in 0..2 {
            for u in &cols {
                let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= proj * y;
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for x in &mut v {
                *x /= norm;
            }
        }
        cols.push(v);
    }
    ComplexMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

/// Random Hermitian matrix `(G + G^dagger)/2` with entries of size `scale`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> ComplexMatrix {
    let mut g = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            g[(i, j)] = gaussian_c64(rng) * scale;
        }
    }
    ComplexMatrix::from_fn(dim, dim, |i, j| 0.5 * (g[(i, j)] + g[(j, i)].conj()))
}

pub fn random_state<R: Rng + ?Sized>(rng: &mut R, dim: usize, label: &str) -> StateVector {
    let amps = (0..dim).map(|_| gaussian_c64(rng)).collect();
    StateVector::normalized(amps, label).expect("Gaussian vector is nonzero")
}

pub fn random_basis<R: Rng + ?Sized>(rng: &mut R, dim: usize, prefix: &str) -> OrthonormalBasis {
    let u = random_unitary(rng, dim);
    let labels = (0..dim).map(|k| format!("{prefix}{k}")).collect();
    OrthonormalBasis::from_columns(&u, labels).expect("Gram-Schmidt output is unitary")
}

/// A random system: Hamiltonian spectrum plus two unrelated bases.
#[derive(Clone, Debug)]
pub struct RandomSystem {
    pub hamiltonian: ComplexMatrix,
    pub spectrum: SpectralDecomposition,
    pub a_basis: OrthonormalBasis,
    pub b_basis: OrthonormalBasis,
}

pub fn random_system<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> RandomSystem {
    let hamiltonian = random_hermitian(rng, dim, 1.0);
    let spectrum = eigendecompose_hermitian(&hamiltonian, None).expect("random Hermitian");
    RandomSystem {
        hamiltonian,
        spectrum,
        a_basis: random_basis(rng, dim, "a"),
        b_basis: random_basis(rng, dim, "b"),
    }
}

/// Pauli eigenbases for one qubit: Z = {0, 1}, X = {+, -}, Y = {+i, -i}.
pub struct Qubit {
    pub hamiltonian: ComplexMatrix,
    pub spectrum: SpectralDecomposition,
    pub z: OrthonormalBasis,
    pub x: OrthonormalBasis,
    pub y: OrthonormalBasis,
}

/// The qubit with `H = sigma_z` (energies -1 for |1>, +1 for |0>).
pub fn qubit() -> Qubit {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| C64::new(re, im);
    let hamiltonian = ComplexMatrix::from_real_diagonal(&[1.0, -1.0]);
    let spectrum = eigendecompose_hermitian(&hamiltonian, None).expect("diagonal");
    let z = OrthonormalBasis::computational(2);
    let x = OrthonormalBasis::from_vectors(vec![
        StateVector::new(vec![c(s, 0.0), c(s, 0.0)], "+").unwrap(),
        StateVector::new(vec![c(s, 0.0), c(-s, 0.0)], "-").unwrap(),
    ])
    .unwrap();
    let y = OrthonormalBasis::from_vectors(vec![
        StateVector::new(vec![c(s, 0.0), c(0.0, s)], "+i").unwrap(),
        StateVector::new(vec![c(s, 0.0), c(0.0, -s)], "-i").unwrap(),
    ])
    .unwrap();
    Qubit {
        hamiltonian,
        spectrum,
        z,
        x,
        y,
    }
}

/// Sixteen equally spaced levels with a flat state `a` and a chirped state `b`
/// whose overlaps `<n|b>` carry the quadratic phase `0.35 (n - 7.5)^2`.
pub struct Ladder {
    pub spectrum: SpectralDecomposition,
    pub a: StateVector,
    pub b: StateVector,
    pub gap: f64,
}

pub const LADDER_DIM: usize = 16;
pub const LADDER_CHIRP: f64 = 0.35;

pub fn ladder(gap: f64) -> Ladder {
    let d = LADDER_DIM;
    let energies: Vec<f64> = (0..d).map(|n| gap * n as f64).collect();
    let spectrum = SpectralDecomposition::from_eigenpairs(
        energies,
        OrthonormalBasis::computational(d),
        1e-9 * gap,
    )
    .expect("sorted ladder");
    let amp = 1.0 / (d as f64).sqrt();
    let a = StateVector::normalized(vec![C64::new(amp, 0.0); d], "flat").unwrap();
    let centre = 0.5 * (d as f64 - 1.0);
    let b = StateVector::normalized(
        (0..d)
            .map(|n| C64::from_polar(amp, LADDER_CHIRP * (n as f64 - centre).powi(2)))
            .collect(),
        "chirp",
    )
    .unwrap();
    Ladder {
        spectrum,
        a,
        b,
        gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in [1, 2, 7, 16] {
            assert!(random_unitary(&mut rng, d).unitarity_defect() < 1e-13);
        }
    }

    #[test]
    fn qubit_energies() {
        let q = qubit();
        assert_eq!(q.spectrum.eigenvalues(), &[-1.0, 1.0]);
        assert!(q.y.orthonormality_defect() < 1e-15);
    }
}
