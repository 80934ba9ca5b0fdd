//! Dense complex matrices sized for few-qubit unitary dynamics.
//!
//! Everything here is written for N <= 16 and favours clarity over speed:
//! storage is a flat row-major `Vec<C64>` and products are the textbook triple
//! loop. The Hermitian eigensolver is cyclic Jacobi, which is unconditionally
//! convergent and accurate to a few ulps for the 2x2 and 4x4 problems we care
//! about.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Relative Hermiticity tolerance accepted by [`herm_eig`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Smallest admissible eigenvalue of `u†u` in [`reunitarize`].
pub const SINGULAR_TOL: f64 = 1e-6;

const JACOBI_MAX_SWEEPS: usize = 64;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting bad shapes and
    /// non-finite values.
    pub fn from_vec(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("matrix dimension must be at least 1".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::Shape(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dim, data })
    }

    /// Row-major construction from nested rows. Panics on ragged input, so
    /// this is meant for literals.
    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Self {
        assert!(N > 0, "empty matrix literal");
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self { dim: N, data }
    }

    pub fn from_real_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        Self::from_rows(rows.map(|r| r.map(|x| C64::new(x, 0.0))))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be at least 1");
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn real_diagonal(values: &[f64]) -> Self {
        let diag: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::diagonal(&diag)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major view of the entries.
    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&z| z * factor).collect() }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    /// `self + factor * other`, the workhorse of the Runge-Kutta stages.
    pub fn add_scaled(&self, other: &Self, factor: C64) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in add_scaled");
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b * factor).collect();
        Self { dim: self.dim, data }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in matmul");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_of_product(&self, other: &Self) -> C64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch in trace_of_product");
        let n = self.dim;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch in max_abs_diff");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `‖A − A†‖_F`.
    pub fn hermiticity_defect(&self) -> f64 {
        (self - &self.adjoint()).frobenius_norm()
    }

    /// Determinant by Laplace expansion along the first row. Exact in
    /// structure and adequate for the 2x2/4x4 matrices used here; cost grows
    /// factorially, so it refuses anything above 6x6.
    pub fn determinant(&self) -> C64 {
        assert!(self.dim <= 6, "cofactor determinant limited to dim <= 6");
        let idx: Vec<usize> = (0..self.dim).collect();
        cofactor_det(self, 0, &idx)
    }
}

fn cofactor_det(m: &ComplexMatrix, row: usize, cols: &[usize]) -> C64 {
    match cols.len() {
        1 => m[(row, cols[0])],
        2 => m[(row, cols[0])] * m[(row + 1, cols[1])] - m[(row, cols[1])] * m[(row + 1, cols[0])],
        _ => {
            let mut acc = C64::new(0.0, 0.0);
            for (k, &c) in cols.iter().enumerate() {
                let a = m[(row, c)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let minor: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
                let term = a * cofactor_det(m, row + 1, &minor);
                if k % 2 == 0 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            acc
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.add_scaled(rhs, C64::new(1.0, 0.0))
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.add_scaled(rhs, C64::new(-1.0, 0.0))
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product with the first factor as the most significant index.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (a.dim, b.dim);
    let n = na * nb;
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..na {
        for j in 0..na {
            let aij = a[(i, j)];
            for k in 0..nb {
                for l in 0..nb {
                    out[(i * nb + k, j * nb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Eigen-decomposition `H = V·diag(λ)·V†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Unitary matrix whose columns are the eigenvectors.
    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V · diag(g(λ_i)) · V†` for an arbitrary scalar function of the
    /// spectrum.
    pub fn apply_fn(&self, g: impl Fn(f64) -> C64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let n = self.dim();
        let weights: Vec<C64> = self.eigenvalues.iter().map(|&l| g(l)).collect();
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n {
                    acc += v[(i, k)] * weights[k] * v[(j, k)].conj();
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_fn(|l| C64::new(l, 0.0))
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Eigenvalues come back ascending; equal eigenvalues keep the order of the
/// diagonal slot they converged into.
pub fn herm_eig(h: &ComplexMatrix) -> Result<SpectralDecomposition> {
    let n = h.dim();
    let scale = h.frobenius_norm();
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) && defect > 0.0 {
        return Err(Error::NotHermitian { defect });
    }

    // Symmetrise so the rotations work on an exactly Hermitian matrix.
    let mut a = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
        }
    }
    let mut v = ComplexMatrix::identity(n);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * 1e-2 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&x, &y| diag[x].total_cmp(&diag[y]));

    let eigenvalues = order.iter().map(|&k| diag[k]).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n);
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            eigenvectors[(row, col)] = v[(row, k)];
        }
    }
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// Annihilates `a[(p, q)]` with `a ← J†·a·J`, `v ← v·J`, where
/// `J = diag(1, e^{-iφ}) · [[c, s], [-s, c]]` acts on rows/columns p and q.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = 0.5 * (2.0 * mag).atan2(aqq - app);
    let (s, c) = theta.sin_cos();

    // J entries: J_pp = c, J_pq = s, J_qp = -s·conj(phase), J_qq = c·conj(phase)
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    let n = a.dim();
    // a ← a·J (columns p, q)
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = aip * jpp + aiq * jqp;
        a[(i, q)] = aip * jpq + aiq * jqq;
    }
    // a ← J†·a (rows p, q)
    for j in 0..n {
        let apj = a[(p, j)];
        let aqj = a[(q, j)];
        a[(p, j)] = jpp.conj() * apj + jqp.conj() * aqj;
        a[(q, j)] = jpq.conj() * apj + jqq.conj() * aqj;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * jpp + viq * jqp;
        v[(i, q)] = vip * jpq + viq * jqq;
    }
}

/// `exp(-i·H·s)` from a cached spectral decomposition of `H`.
pub fn expm_herm_scaled(spec: &SpectralDecomposition, s: f64) -> ComplexMatrix {
    if s == 0.0 {
        return ComplexMatrix::identity(spec.dim());
    }
    spec.apply_fn(|l| C64::from_polar(1.0, -l * s))
}

/// `‖u†u − I‖_F`.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let n = u.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut g = C64::new(0.0, 0.0);
            for k in 0..n {
                g += u[(k, i)].conj() * u[(k, j)];
            }
            if i == j {
                g -= 1.0;
            }
            acc += g.norm_sqr();
        }
    }
    acc.sqrt()
}

/// Closest unitary to `u` in Frobenius norm: the polar factor
/// `u·(u†u)^{-1/2}`.
pub fn reunitarize(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    let gram = &u.adjoint() * u;
    let spec = herm_eig(&gram)?;
    let smallest = spec.eigenvalues()[0];
    if smallest <= SINGULAR_TOL {
        return Err(Error::SingularInput { smallest });
    }
    let inv_sqrt = spec.apply_fn(|l| C64::new(1.0 / l.sqrt(), 0.0));
    Ok(u * &inv_sqrt)
}
