//! Seeded random generators for matrices and states used by sweeps, examples
//! and property runs.
//!
//! All sampling in the crate goes through [`rng_from_seed`], a ChaCha8 stream
//! cipher generator, so any run is reproducible from its 64-bit seed.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, CMatrix, RMatrix};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(normal(rng), normal(rng)))
}

/// Haar-random unitary (QR of a Ginibre matrix with the phases of R's diagonal
/// divided out).
pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(n, n, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random matrix with unit-norm columns (a generic, non-unitary evolution operator).
pub fn unit_column_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let mut m = ginibre(n, n, rng);
    for mut col in m.column_iter_mut() {
        let norm = col.norm();
        col.unscale_mut(norm);
    }
    m
}

/// Random column-stochastic matrix (each column uniform on the simplex).
pub fn stochastic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> RMatrix {
    let mut m = RMatrix::from_fn(n, n, |_, _| -(1.0 - rng.random::<f64>()).ln());
    for mut col in m.column_iter_mut() {
        let sum = col.sum();
        col.unscale_mut(sum);
    }
    m
}

/// Random probability vector, uniform on the simplex.
pub fn probability<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

/// Random Hermitian matrix from the Gaussian unitary ensemble.
pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(n, n, rng);
    (&g + g.adjoint()).scale(0.5)
}

/// Random full-rank density matrix `G G^† / tr(G G^†)`.
pub fn density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(n, n, rng);
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    let rho = rho.unscale(tr);
    (&rho + rho.adjoint()).scale(0.5)
}

/// Random pure state vector.
pub fn state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<num_complex::Complex64> {
    let v = ginibre(n, 1, rng).column(0).into_owned();
    let norm = v.norm();
    v.unscale(norm)
}

/// Random phase matrix with entries uniform in `[0, 2 pi)`.
pub fn phases<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> RMatrix {
    RMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>() * std::f64::consts::TAU)
}

/// Random permutation of `0..n` (Fisher-Yates).
pub fn permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for k in (1..n).rev() {
        let j = rng.random_range(0..=k);
        p.swap(k, j);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::is_unitary;

    #[test]
    fn generators_respect_their_contracts() {
        let mut rng = rng_from_seed(7);
        for n in 1..6 {
            assert!(is_unitary(&unitary(n, &mut rng), 1e-12));
            let s = stochastic(n, &mut rng);
            for col in s.column_iter() {
                assert!((col.sum() - 1.0).abs() < 1e-14);
            }
            let theta = unit_column_matrix(n, &mut rng);
            for col in theta.column_iter() {
                assert!((col.norm() - 1.0).abs() < 1e-14);
            }
            let mut p = permutation(n, &mut rng);
            p.sort_unstable();
            assert_eq!(p, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let a = ginibre(3, 3, &mut rng_from_seed(99));
        let b = ginibre(3, 3, &mut rng_from_seed(99));
        assert_eq!(a, b);
    }
}
