//! Makhlin local invariants of two-qubit gates.
//!
//! For `U ∈ U(4)` let `m_U = Qᵀ Uᵀ Q* Q† U Q` with `Q` the magic-basis change
//! below. Then
//!
//! ```text
//! G₁ = Tr²(m_U) · det(U†) / 16
//! G₂ = (Tr²(m_U) − Tr(m_U²)) · det(U†) / 4
//! ```
//!
//! and the triple `(Re G₁, Im G₁, G₂)` is constant on local equivalence
//! classes `L₁ U L₂`, `L_i ∈ SU(2)⊗SU(2)`, and blind to global phase.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::matrix::{unitarity_defect, ComplexMatrix};

/// Unitarity tolerance for inputs of [`m_matrix`] and [`makhlin`].
pub const INVARIANT_UNITARY_TOL: f64 = 1e-8;
/// Largest tolerated `|Im G₂|` before the input is rejected.
pub const G2_IMAG_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MakhlinInvariants {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl MakhlinInvariants {
    pub fn new(d1: f64, d2: f64, d3: f64) -> Self {
        Self { d1, d2, d3 }
    }

    /// Euclidean distance between invariant triples.
    pub fn distance(&self, other: &Self) -> f64 {
        ((self.d1 - other.d1).powi(2) + (self.d2 - other.d2).powi(2) + (self.d3 - other.d3).powi(2)).sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.d1 - other.d1).abs().max((self.d2 - other.d2).abs()).max((self.d3 - other.d3).abs())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.d1, self.d2, self.d3]
    }
}

pub fn q_matrix() -> ComplexMatrix {
    let o = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    ComplexMatrix::from_rows([
        [one, o, o, i],
        [o, i, one, o],
        [o, i, -one, o],
        [one, o, o, -i],
    ])
    .scale_real(FRAC_1_SQRT_2)
}

fn check_two_qubit_unitary(u: &ComplexMatrix) -> Result<()> {
    if u.dim() != 4 {
        return Err(Error::DimMismatch { left: u.dim(), right: 4 });
    }
    let defect = unitarity_defect(u);
    if defect > INVARIANT_UNITARY_TOL {
        return Err(Error::NotUnitary { defect });
    }
    Ok(())
}

/// `Qᵀ Uᵀ Q* Q† U Q`, evaluated literally.
pub fn m_matrix(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_two_qubit_unitary(u)?;
    Ok(m_matrix_unchecked(u))
}

fn m_matrix_unchecked(u: &ComplexMatrix) -> ComplexMatrix {
    let q = q_matrix();
    let left = &(&q.transpose() * &u.transpose()) * &q.conj();
    let right = &(&q.adjoint() * u) * &q;
    &left * &right
}

pub fn makhlin(u: &ComplexMatrix) -> Result<MakhlinInvariants> {
    check_two_qubit_unitary(u)?;
    let m = m_matrix_unchecked(u);
    let det_adj = u.adjoint().determinant();
    let tr = m.trace();
    let tr2 = tr * tr;
    let tr_m2 = m.trace_of_product(&m);
    let g1 = tr2 * det_adj / 16.0;
    let g2 = (tr2 - tr_m2) * det_adj / 4.0;
    if g2.im.abs() > G2_IMAG_TOL {
        return Err(Error::NonRealG2 { imag: g2.im });
    }
    Ok(MakhlinInvariants { d1: g1.re, d2: g1.im, d3: g2.re })
}

/// A local equivalence class identified by the invariants of one
/// representative. The reference triple is computed once.
#[derive(Clone, Copy, Debug)]
pub struct EquivalenceClass {
    reference: MakhlinInvariants,
}

impl EquivalenceClass {
    pub fn of(representative: &ComplexMatrix) -> Result<Self> {
        Ok(Self { reference: makhlin(representative)? })
    }

    pub fn reference(&self) -> MakhlinInvariants {
        self.reference
    }

    pub fn distance(&self, u: &ComplexMatrix) -> Result<f64> {
        Ok(makhlin(u)?.distance(&self.reference))
    }
}

pub fn distance_to_class(u: &ComplexMatrix, reference: &ComplexMatrix) -> Result<f64> {
    EquivalenceClass::of(reference)?.distance(u)
}

/// Invariants of the uncontrolled Ising propagator started from the identity:
/// `(cos²(Jt/2), 0, 2 + cos(Jt))`.
pub fn free_ising_invariants(coupling: f64, t: f64) -> MakhlinInvariants {
    let c = (coupling * t / 2.0).cos();
    MakhlinInvariants { d1: c * c, d2: 0.0, d3: 2.0 + (coupling * t).cos() }
}

/// Distance of the uncontrolled Ising propagator from the CNOT class:
/// `√5 · cos²(Jt/2)`.
pub fn free_ising_distance(coupling: f64, t: f64) -> f64 {
    let c = (coupling * t / 2.0).cos();
    5.0f64.sqrt() * c * c
}
