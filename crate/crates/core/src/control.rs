//! Lyapunov tracking control of the time-evolution operator.
//!
//! The controller steers `U(t)` towards the moving reference
//! `Õ(t+τ) = exp(-i H₀ (t+τ)) · O` using the phase-blind distance
//!
//! ```text
//! V = 1 − |Tr(Õ†(t+τ) U)|² / N²
//! ```
//!
//! and the feedback fields
//!
//! ```text
//! f_n = K · Re{ Tr(−i Õ†(t+τ) H_n U) · conj(Tr(Õ†(t+τ) U)) },
//! ```
//!
//! for which `dV/dt = −2/(K N²) Σ f_n²` along solutions of
//! `i dU/dt = (H₀ + Σ f_n H_n) U`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::matrix::{expm_herm_scaled, herm_eig, unitarity_defect, ComplexMatrix, SpectralDecomposition};

/// Unitarity tolerance for the target gate.
pub const TARGET_UNITARY_TOL: f64 = 1e-12;
/// Hermiticity tolerance for control Hamiltonians.
pub const CONTROL_HERMITIAN_TOL: f64 = 1e-12;
/// Unitarity tolerance for arguments of [`fidelity`].
pub const FIDELITY_UNITARY_TOL: f64 = 1e-8;
/// A start is flagged degenerate when every `|f_n(0)|` is below this
/// multiple of `K·N²`.
pub const DEGENERATE_FIELD_RATIO: f64 = 1e-10;

/// `|Tr(u1† u2)| / N`.
pub fn fidelity(u1: &ComplexMatrix, u2: &ComplexMatrix) -> Result<f64> {
    if u1.dim() != u2.dim() {
        return Err(Error::DimMismatch { left: u1.dim(), right: u2.dim() });
    }
    for u in [u1, u2] {
        let defect = unitarity_defect(u);
        if defect > FIDELITY_UNITARY_TOL {
            return Err(Error::NotUnitary { defect });
        }
    }
    Ok(fidelity_unchecked(u1, u2))
}

pub(crate) fn fidelity_unchecked(u1: &ComplexMatrix, u2: &ComplexMatrix) -> f64 {
    u1.adjoint().trace_of_product(u2).norm() / u1.dim() as f64
}

/// Lyapunov function value and feedback fields at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct LawEvaluation {
    pub lyapunov: f64,
    pub fields: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ControlLaw {
    target: ComplexMatrix,
    tau: f64,
    gain: f64,
    h0: ComplexMatrix,
    h0_spec: SpectralDecomposition,
    controls: Vec<ComplexMatrix>,
}

impl ControlLaw {
    /// A gain of zero is accepted and yields an uncontrolled law (all fields
    /// vanish), which is how free-evolution reference runs are expressed.
    pub fn new(
        target: ComplexMatrix,
        tau: f64,
        gain: f64,
        h0: ComplexMatrix,
        controls: Vec<ComplexMatrix>,
    ) -> Result<Self> {
        let n = target.dim();
        if h0.dim() != n {
            return Err(Error::DimMismatch { left: n, right: h0.dim() });
        }
        let defect = unitarity_defect(&target);
        if defect > TARGET_UNITARY_TOL {
            return Err(Error::NotUnitary { defect });
        }
        if !tau.is_finite() {
            return Err(Error::InvalidParameter("tau must be finite".into()));
        }
        if !(gain.is_finite() && gain >= 0.0) {
            return Err(Error::InvalidParameter(format!("gain K must be non-negative, got {gain}")));
        }
        for h in &controls {
            if h.dim() != n {
                return Err(Error::DimMismatch { left: n, right: h.dim() });
            }
            let defect = h.hermiticity_defect();
            if defect > CONTROL_HERMITIAN_TOL {
                return Err(Error::NotHermitian { defect });
            }
        }
        let h0_spec = herm_eig(&h0)?;
        Ok(Self { target, tau, gain, h0, h0_spec, controls })
    }

    pub fn target(&self) -> &ComplexMatrix {
        &self.target
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn h0(&self) -> &ComplexMatrix {
        &self.h0
    }

    pub fn h0_spectrum(&self) -> &SpectralDecomposition {
        &self.h0_spec
    }

    pub fn controls(&self) -> &[ComplexMatrix] {
        &self.controls
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    /// Same law with a different shift.
    pub fn with_tau(&self, tau: f64) -> Self {
        Self { tau, ..self.clone() }
    }

    /// Same law with a different gain.
    pub fn with_gain(&self, gain: f64) -> Result<Self> {
        if !(gain.is_finite() && gain >= 0.0) {
            return Err(Error::InvalidParameter(format!("gain K must be non-negative, got {gain}")));
        }
        Ok(Self { gain, ..self.clone() })
    }

    /// `exp(−i H₀ (t+τ)) · O`.
    pub fn tracked_target(&self, t: f64) -> ComplexMatrix {
        let s = t + self.tau;
        if s == 0.0 {
            return self.target.clone();
        }
        &expm_herm_scaled(&self.h0_spec, s) * &self.target
    }

    /// `Õ†(t+τ) = O† exp(+i H₀ (t+τ))`.
    fn tracked_adjoint(&self, t: f64) -> ComplexMatrix {
        self.tracked_target(t).adjoint()
    }

    /// `V = 1 − |Tr(Õ†(t+τ) u)|² / N²`. Expects `u` unitary.
    pub fn lyapunov_v(&self, u: &ComplexMatrix, t: f64) -> f64 {
        let overlap = self.tracked_adjoint(t).trace_of_product(u);
        lyapunov_from_overlap(overlap, self.dim())
    }

    /// Feedback fields `f_n`, one per control Hamiltonian. Expects `u`
    /// unitary.
    pub fn control_fields(&self, u: &ComplexMatrix, t: f64) -> Vec<f64> {
        self.evaluate(u, t).fields
    }

    /// Computes V and all fields sharing one evaluation of `Õ†(t+τ)`.
    pub fn evaluate(&self, u: &ComplexMatrix, t: f64) -> LawEvaluation {
        let tracked_adj = self.tracked_adjoint(t);
        let overlap = tracked_adj.trace_of_product(u);
        let fields = if self.gain == 0.0 {
            vec![0.0; self.controls.len()]
        } else {
            // Tr(Õ† H U) = Tr(H · U Õ†)
            let u_tracked_adj = u * &tracked_adj;
            let minus_i = C64::new(0.0, -1.0);
            self.controls
                .iter()
                .map(|h| {
                    let drive = h.trace_of_product(&u_tracked_adj);
                    self.gain * (minus_i * drive * overlap.conj()).re
                })
                .collect()
        };
        LawEvaluation { lyapunov: lyapunov_from_overlap(overlap, self.dim()), fields }
    }

    /// Exact `dV/dt = −2/(K N²) Σ f_n²` for the given fields. Zero when the
    /// gain is zero.
    pub fn dissipation_rate(&self, fields: &[f64]) -> f64 {
        if self.gain == 0.0 {
            return 0.0;
        }
        let n = self.dim() as f64;
        -2.0 / (self.gain * n * n) * fields.iter().map(|f| f * f).sum::<f64>()
    }

    /// Fields at `t = 0`, `U = I`.
    pub fn initial_fields(&self) -> Vec<f64> {
        self.control_fields(&ComplexMatrix::identity(self.dim()), 0.0)
    }

    /// True when the tracked operator produces no field at the start, so the
    /// controller would remain idle for a while.
    pub fn is_degenerate_start(&self) -> bool {
        let n = self.dim() as f64;
        let floor = DEGENERATE_FIELD_RATIO * self.gain * n * n;
        self.initial_fields().iter().all(|f| f.abs() < floor)
    }
}

fn lyapunov_from_overlap(overlap: C64, n: usize) -> f64 {
    let n2 = (n * n) as f64;
    (1.0 - overlap.norm_sqr() / n2).max(0.0)
}
