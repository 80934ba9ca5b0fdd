//! Pauli operators, target gates and the free Hamiltonians of the single-qubit
//! and two-spin models.
//!
//! Two-qubit operators use the basis |00⟩, |01⟩, |10⟩, |11⟩ with qubit 1 as
//! the most significant index. Frequencies are angular (ħ = 1).

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::matrix::{kron, ComplexMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

pub fn pauli(axis: Axis) -> ComplexMatrix {
    let o = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match axis {
        Axis::X => ComplexMatrix::from_rows([[o, one], [one, o]]),
        Axis::Y => ComplexMatrix::from_rows([[o, -i], [i, o]]),
        Axis::Z => ComplexMatrix::from_rows([[one, o], [o, -one]]),
    }
}

/// Lifts a single-qubit operator onto `site` (1 or 2) of a two-qubit register.
pub fn embed(op: &ComplexMatrix, site: usize) -> Result<ComplexMatrix> {
    if op.dim() != 2 {
        return Err(Error::DimMismatch { left: op.dim(), right: 2 });
    }
    let id = ComplexMatrix::identity(2);
    match site {
        1 => Ok(kron(op, &id)),
        2 => Ok(kron(&id, op)),
        other => Err(Error::BadSite(other)),
    }
}

pub fn hadamard() -> ComplexMatrix {
    ComplexMatrix::from_real_rows([[1.0, 1.0], [1.0, -1.0]]).scale_real(FRAC_1_SQRT_2)
}

/// CNOT with qubit 1 as control.
pub fn cnot() -> ComplexMatrix {
    ComplexMatrix::from_real_rows([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
    ])
}

/// Single-qubit rotation `exp(-i θ/2 n·σ)` with the axis given by polar and
/// azimuthal angles on the Bloch sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationTarget {
    pub theta: f64,
    pub polar: f64,
    pub azimuth: f64,
}

impl RotationTarget {
    pub fn new(theta: f64, polar: f64, azimuth: f64) -> Result<Self> {
        if ![theta, polar, azimuth].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("rotation angles must be finite".into()));
        }
        Ok(Self { theta, polar, azimuth })
    }

    pub fn axis(&self) -> [f64; 3] {
        let (sp, cp) = self.polar.sin_cos();
        let (sa, ca) = self.azimuth.sin_cos();
        [sp * ca, sp * sa, cp]
    }
}

pub fn rotation_gate(r: &RotationTarget) -> ComplexMatrix {
    let [nx, ny, nz] = r.axis();
    let (s, c) = (r.theta / 2.0).sin_cos();
    // cos(θ/2)·I − i·sin(θ/2)·(n·σ)
    let a = C64::new(c, -s * nz);
    let d = C64::new(c, s * nz);
    let b = C64::new(-s * ny, -s * nx);
    let e = C64::new(s * ny, -s * nx);
    ComplexMatrix::from_rows([[a, b], [e, d]])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HamiltonianKind {
    SingleQubit,
    Ising,
    Heisenberg,
}

impl HamiltonianKind {
    pub fn qubits(self) -> usize {
        match self {
            HamiltonianKind::SingleQubit => 1,
            HamiltonianKind::Ising | HamiltonianKind::Heisenberg => 2,
        }
    }

    pub fn dim(self) -> usize {
        1 << self.qubits()
    }
}

impl fmt::Display for HamiltonianKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HamiltonianKind::SingleQubit => "single_qubit",
            HamiltonianKind::Ising => "ising",
            HamiltonianKind::Heisenberg => "heisenberg",
        })
    }
}

impl FromStr for HamiltonianKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "single_qubit" | "single" => Ok(HamiltonianKind::SingleQubit),
            "ising" => Ok(HamiltonianKind::Ising),
            "heisenberg" => Ok(HamiltonianKind::Heisenberg),
            other => Err(Error::config(format!("unknown hamiltonian kind `{other}`"))),
        }
    }
}

/// Parameters of a free Hamiltonian H₀.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub kind: HamiltonianKind,
    pub omega1: f64,
    /// Ignored for [`HamiltonianKind::SingleQubit`].
    pub omega2: f64,
    /// Ignored for [`HamiltonianKind::SingleQubit`].
    pub coupling: f64,
}

impl HamiltonianSpec {
    pub fn single_qubit(omega: f64) -> Result<Self> {
        Self { kind: HamiltonianKind::SingleQubit, omega1: omega, omega2: 0.0, coupling: 0.0 }.validated()
    }

    pub fn ising(omega1: f64, omega2: f64, coupling: f64) -> Result<Self> {
        Self { kind: HamiltonianKind::Ising, omega1, omega2, coupling }.validated()
    }

    pub fn heisenberg(omega1: f64, omega2: f64, coupling: f64) -> Result<Self> {
        Self { kind: HamiltonianKind::Heisenberg, omega1, omega2, coupling }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.omega1.is_finite() && self.omega1 > 0.0) {
            return Err(Error::InvalidParameter(format!("omega1 must be positive, got {}", self.omega1)));
        }
        if self.kind != HamiltonianKind::SingleQubit {
            if !(self.omega2.is_finite() && self.omega2 > 0.0) {
                return Err(Error::InvalidParameter(format!("omega2 must be positive, got {}", self.omega2)));
            }
            if !self.coupling.is_finite() {
                return Err(Error::InvalidParameter("coupling must be finite".into()));
            }
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }
}

/// Builds the matrix of H₀:
///
/// * single qubit: `ω/2 σz`
/// * Ising: `ω₁/2 σz⁽¹⁾ + ω₂/2 σz⁽²⁾ + J/4 σz⊗σz`
/// * Heisenberg: `ω₁/2 σz⁽¹⁾ + ω₂/2 σz⁽²⁾ + J/4 (σx⊗σx + σy⊗σy + σz⊗σz)`
pub fn materialize_h0(spec: &HamiltonianSpec) -> ComplexMatrix {
    let sz = pauli(Axis::Z);
    match spec.kind {
        HamiltonianKind::SingleQubit => sz.scale_real(spec.omega1 / 2.0),
        HamiltonianKind::Ising | HamiltonianKind::Heisenberg => {
            let id = ComplexMatrix::identity(2);
            let zeeman = &kron(&sz, &id).scale_real(spec.omega1 / 2.0) + &kron(&id, &sz).scale_real(spec.omega2 / 2.0);
            let mut coupling = kron(&sz, &sz);
            if spec.kind == HamiltonianKind::Heisenberg {
                let sx = pauli(Axis::X);
                let sy = pauli(Axis::Y);
                coupling = &(&coupling + &kron(&sx, &sx)) + &kron(&sy, &sy);
            }
            &zeeman + &coupling.scale_real(spec.coupling / 4.0)
        }
    }
}

/// Available control Hamiltonian sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControlSet {
    /// `σx` on a single qubit.
    SigmaXSingle,
    /// `σx` on qubit 2 of a pair.
    SigmaX2,
    /// One field driving `σx⁽¹⁾ + σx⁽²⁾`.
    SigmaX1PlusX2,
}

impl ControlSet {
    pub fn hamiltonians(self) -> Vec<ComplexMatrix> {
        let sx = pauli(Axis::X);
        match self {
            ControlSet::SigmaXSingle => vec![sx],
            ControlSet::SigmaX2 => vec![embed(&sx, 2).expect("2x2 operator")],
            ControlSet::SigmaX1PlusX2 => {
                vec![&embed(&sx, 1).expect("2x2 operator") + &embed(&sx, 2).expect("2x2 operator")]
            }
        }
    }

    pub fn dim(self) -> usize {
        match self {
            ControlSet::SigmaXSingle => 2,
            ControlSet::SigmaX2 | ControlSet::SigmaX1PlusX2 => 4,
        }
    }
}

impl fmt::Display for ControlSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControlSet::SigmaXSingle => "sigma_x_single",
            ControlSet::SigmaX2 => "sigma_x2",
            ControlSet::SigmaX1PlusX2 => "sigma_x1_plus_x2",
        })
    }
}

impl FromStr for ControlSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sigma_x_single" => Ok(ControlSet::SigmaXSingle),
            "sigma_x2" => Ok(ControlSet::SigmaX2),
            "sigma_x1_plus_x2" => Ok(ControlSet::SigmaX1PlusX2),
            other => Err(Error::config(format!("unknown control set `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::unitarity_defect;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn paulis() {
        assert_eq!(pauli(Axis::X), ComplexMatrix::from_real_rows([[0.0, 1.0], [1.0, 0.0]]));
        assert_eq!(pauli(Axis::Z), ComplexMatrix::real_diagonal(&[1.0, -1.0]));
        assert_eq!(pauli(Axis::Y), ComplexMatrix::from_rows([[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]]));
        for ax in [Axis::X, Axis::Y, Axis::Z] {
            let p = pauli(ax);
            assert_eq!(p.hermiticity_defect(), 0.0);
            assert_eq!(unitarity_defect(&p), 0.0);
            assert_eq!(p.trace(), c(0.0, 0.0));
        }
    }

    #[test]
    fn embed_sites() {
        let sx = pauli(Axis::X);
        let id = ComplexMatrix::identity(2);
        assert_eq!(embed(&sx, 2).unwrap(), kron(&id, &sx));
        assert_eq!(embed(&pauli(Axis::Z), 1).unwrap(), ComplexMatrix::real_diagonal(&[1.0, 1.0, -1.0, -1.0]));
        assert_eq!(embed(&id, 1).unwrap(), ComplexMatrix::identity(4));
        assert!(matches!(embed(&sx, 3), Err(Error::BadSite(3))));
        assert!(matches!(embed(&ComplexMatrix::identity(4), 1), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn hadamard_properties() {
        let h = hadamard();
        assert_eq!(h[(0, 0)], c(FRAC_1_SQRT_2, 0.0));
        assert_eq!(h[(1, 1)], c(-FRAC_1_SQRT_2, 0.0));
        assert!((&h * &h).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
        assert_eq!(h.trace(), c(0.0, 0.0));
        assert_eq!(h.hermiticity_defect(), 0.0);
    }

    #[test]
    fn cnot_properties() {
        let x = cnot();
        assert_eq!(x[(2, 3)], c(1.0, 0.0));
        assert_eq!(x[(3, 2)], c(1.0, 0.0));
        assert_eq!(x[(2, 2)], c(0.0, 0.0));
        assert_eq!(&x * &x, ComplexMatrix::identity(4));
        assert_eq!(x.trace(), c(2.0, 0.0));
        assert_eq!(unitarity_defect(&x), 0.0);
        assert_eq!(x.hermiticity_defect(), 0.0);
    }

    #[test]
    fn rotation_examples() {
        let id = rotation_gate(&RotationTarget::new(0.0, 1.1, 2.2).unwrap());
        assert!(id.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);

        let half_x = rotation_gate(&RotationTarget::new(PI, FRAC_PI_2, 0.0).unwrap());
        assert!(half_x.max_abs_diff(&pauli(Axis::X).scale(c(0.0, -1.0))) < 1e-15);

        let z = rotation_gate(&RotationTarget::new(FRAC_PI_2, 0.0, 0.0).unwrap());
        let expected = ComplexMatrix::diagonal(&[C64::from_polar(1.0, -FRAC_PI_4), C64::from_polar(1.0, FRAC_PI_4)]);
        assert!(z.max_abs_diff(&expected) < 1e-15);

        let full = rotation_gate(&RotationTarget::new(2.0 * PI, 0.7, 4.0).unwrap());
        assert!(full.max_abs_diff(&ComplexMatrix::identity(2).scale_real(-1.0)) < 1e-13);
    }

    #[test]
    fn rotation_matches_explicit_formula() {
        let r = RotationTarget::new(1.234, 0.9, 5.1).unwrap();
        let [nx, ny, nz] = r.axis();
        let ndots = &(&pauli(Axis::X).scale_real(nx) + &pauli(Axis::Y).scale_real(ny)) + &pauli(Axis::Z).scale_real(nz);
        let expected = ComplexMatrix::identity(2)
            .scale_real((r.theta / 2.0).cos())
            .add_scaled(&ndots, c(0.0, -(r.theta / 2.0).sin()));
        let u = rotation_gate(&r);
        assert!(u.max_abs_diff(&expected) < 1e-15);
        assert!(unitarity_defect(&u) < 1e-14);
        assert!((u.determinant().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ising_is_analytic_diagonal() {
        let h = materialize_h0(&HamiltonianSpec::ising(1.0, 2.0, 0.05).unwrap());
        let expected = ComplexMatrix::real_diagonal(&[1.5125, -0.5125, 0.4875, -1.4875]);
        assert!(h.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn heisenberg_differs_only_in_central_block() {
        let (w1, w2, j) = (1.0, 2.0, 0.2);
        let ising = materialize_h0(&HamiltonianSpec::ising(w1, w2, j).unwrap());
        let heis = materialize_h0(&HamiltonianSpec::heisenberg(w1, w2, j).unwrap());
        let diff = &heis - &ising;
        for r in 0..4 {
            for col in 0..4 {
                let expected = if (r, col) == (1, 2) || (r, col) == (2, 1) { j / 2.0 } else { 0.0 };
                assert!((diff[(r, col)] - c(expected, 0.0)).norm() < 1e-15, "entry ({r},{col})");
            }
        }
        let off = materialize_h0(&HamiltonianSpec::heisenberg(w1, w2, 0.0).unwrap());
        assert_eq!(off, materialize_h0(&HamiltonianSpec::ising(w1, w2, 0.0).unwrap()));
    }

    #[test]
    fn single_qubit_h0() {
        let h = materialize_h0(&HamiltonianSpec::single_qubit(1.0).unwrap());
        assert_eq!(h, ComplexMatrix::real_diagonal(&[0.5, -0.5]));
    }

    #[test]
    fn hamiltonians_are_hermitian() {
        for spec in [
            HamiltonianSpec::single_qubit(0.7).unwrap(),
            HamiltonianSpec::ising(1.0, 2.3, 0.4).unwrap(),
            HamiltonianSpec::heisenberg(1.0, 2.3, 0.4).unwrap(),
        ] {
            assert!(materialize_h0(&spec).hermiticity_defect() <= 1e-14);
        }
    }

    #[test]
    fn hamiltonian_parameter_validation() {
        assert!(HamiltonianSpec::single_qubit(0.0).is_err());
        assert!(HamiltonianSpec::ising(1.0, -1.0, 0.1).is_err());
        assert!(HamiltonianSpec::heisenberg(1.0, 2.0, f64::NAN).is_err());
    }

    #[test]
    fn control_sets() {
        let sx = pauli(Axis::X);
        assert_eq!(ControlSet::SigmaXSingle.hamiltonians(), vec![sx.clone()]);
        assert_eq!(ControlSet::SigmaX2.hamiltonians(), vec![kron(&ComplexMatrix::identity(2), &sx)]);
        let sum = &ControlSet::SigmaX1PlusX2.hamiltonians()[0];
        assert_eq!(sum, &(&kron(&sx, &ComplexMatrix::identity(2)) + &kron(&ComplexMatrix::identity(2), &sx)));
        for cs in [ControlSet::SigmaXSingle, ControlSet::SigmaX2, ControlSet::SigmaX1PlusX2] {
            assert_eq!(cs.to_string().parse::<ControlSet>().unwrap(), cs);
        }
    }
}
