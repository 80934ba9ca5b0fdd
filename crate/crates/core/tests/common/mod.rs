#![allow(dead_code)]

use lyapunov_gates::matrix::{kron, reunitarize};
use lyapunov_gates::ComplexMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn random_matrix<R: Rng>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let data = (0..dim * dim).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    ComplexMatrix::from_vec(dim, data).unwrap()
}

pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let a = random_matrix(rng, dim);
    (&a + &a.adjoint()).scale_real(0.5)
}

/// Polar factor of a random complex matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, dim: usize) -> ComplexMatrix {
    loop {
        if let Ok(u) = reunitarize(&random_matrix(rng, dim)) {
            return u;
        }
    }
}

pub fn random_local<R: Rng>(rng: &mut R) -> ComplexMatrix {
    kron(&random_unitary(rng, 2), &random_unitary(rng, 2))
}

pub fn matrix_from_parts(dim: usize, parts: &[f64]) -> ComplexMatrix {
    let data = parts.chunks(2).take(dim * dim).map(|p| c(p[0], p[1])).collect();
    ComplexMatrix::from_vec(dim, data).unwrap()
}

pub fn phase(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}
