//! Dense complex linear algebra for small square matrices.
//!
//! Everything here is sized for the handful-of-levels systems the simulator
//! targets (M up to a few dozen). Matrices are stored row-major in a flat
//! `Vec<Complex64>`. Hermitian exponentials and unitary logarithms both go
//! through a cyclic complex Jacobi eigensolver, so evolution operators are
//! unitary to eigensolver precision.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hermiticity tolerance, relative to `max(1, ‖H‖)`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Unitarity tolerance on `‖UU† − 1‖`.
pub const UNITARY_TOL: f64 = 1e-10;
/// Eigenphases closer than this to ±π are rejected by the principal logarithm.
pub const BRANCH_GUARD: f64 = 1e-6;
/// Off-diagonal mass at which Jacobi sweeps stop, relative to `max(1, ‖H‖)`.
pub const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        ComplexMatrix {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m[(k, k)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries; `entries.len()` must be a
    /// nonzero perfect square.
    pub fn from_row_major(entries: Vec<Complex64>) -> Result<Self> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != entries.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(ComplexMatrix { dim, data: entries })
    }

    pub fn from_rows<const M: usize>(rows: [[Complex64; M]; M]) -> Self {
        ComplexMatrix {
            dim: M,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (k, v) in values.iter().enumerate() {
            m[(k, k)] = *v;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out.data[c * n + r] = self.data[r * n + c].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|k| self[(k, k)]).sum()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// `sqrt(Tr[A A†])`.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn try_matmul(&self, rhs: &Self) -> Result<Self> {
        self.check_dim(rhs)?;
        Ok(self.matmul_unchecked(rhs))
    }

    fn matmul_unchecked(&self, rhs: &Self) -> Self {
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                for (o, b) in out[r * n..(r + 1) * n].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        ComplexMatrix { dim: n, data: out }
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self> {
        self.check_dim(rhs)?;
        Ok(self.zip_with(rhs, |a, b| a + b))
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self> {
        self.check_dim(rhs)?;
        Ok(self.zip_with(rhs, |a, b| a - b))
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    fn check_dim(&self, rhs: &Self) -> Result<()> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rhs.dim,
            });
        }
        Ok(())
    }

    /// `‖A − A†‖_F`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for r in 0..n {
            for c in 0..n {
                acc += (self.data[r * n + c] - self.data[c * n + r].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// `‖A A† − 1‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.matmul_unchecked(&self.adjoint());
        (&prod - &Self::identity(self.dim)).frobenius_norm()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }
}

// Operator impls panic on dimension mismatch; the `try_*` methods return errors.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_matmul(rhs).expect("matrix product dimension mismatch")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_add(rhs).expect("matrix sum dimension mismatch")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_sub(rhs).expect("matrix difference dimension mismatch")
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
        writeln!(f, "ComplexMatrix({}x{})[", self.dim, self.dim)?;
        for r in 0..self.dim {
            write!(f, "  ")?;
            for c in 0..self.dim {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// `AB − BA`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let ab = a.try_matmul(b)?;
    let ba = b.matmul_unchecked(a);
    Ok(&ab - &ba)
}

pub fn frobenius_norm(a: &ComplexMatrix) -> f64 {
    a.frobenius_norm()
}

/// The Pauli matrices σ_x, σ_y, σ_z.
pub fn pauli() -> [ComplexMatrix; 3] {
    [
        ComplexMatrix::from_rows([[ZERO, ONE], [ONE, ZERO]]),
        ComplexMatrix::from_rows([[ZERO, -I], [I, ZERO]]),
        ComplexMatrix::from_rows([[ONE, ZERO], [ZERO, -ONE]]),
    ]
}

/// A Hermitian matrix, `H = H†` to within [`HERMITIAN_TOL`].
#[derive(Clone, PartialEq, Debug)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let defect = m.hermiticity_defect();
        if defect > HERMITIAN_TOL * m.frobenius_norm().max(1.0) {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self::hermitize(m))
    }

    /// Takes `(A + A†)/2`. Used where Hermiticity holds analytically and only
    /// rounding needs to be removed.
    pub fn hermitize(m: ComplexMatrix) -> Self {
        let n = m.dim;
        let mut out = m;
        for r in 0..n {
            out.data[r * n + r].im = 0.0;
            for c in (r + 1)..n {
                let avg = (out.data[r * n + c] + out.data[c * n + r].conj()) * 0.5;
                out.data[r * n + c] = avg;
                out.data[c * n + r] = avg.conj();
            }
        }
        HermitianMatrix(out)
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix(ComplexMatrix::zeros(dim))
    }

    /// Real diagonal matrix.
    pub fn from_diagonal(values: &[f64]) -> Self {
        let diag: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        HermitianMatrix(ComplexMatrix::diagonal(&diag))
    }

    /// `c_0·1 + c_x σ_x + c_y σ_y + c_z σ_z` on a qubit.
    pub fn from_pauli(identity: f64, xyz: [f64; 3]) -> Self {
        let [x, y, z] = xyz;
        HermitianMatrix(ComplexMatrix::from_rows([
            [Complex64::new(identity + z, 0.0), Complex64::new(x, -y)],
            [Complex64::new(x, y), Complex64::new(identity - z, 0.0)],
        ]))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    pub fn scale(&self, factor: f64) -> Self {
        HermitianMatrix(self.0.scale_real(factor))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(HermitianMatrix(self.0.try_add(&other.0)?))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(HermitianMatrix(self.0.try_sub(&other.0)?))
    }

    /// Eigenvalues (ascending) and the unitary matrix of column eigenvectors.
    pub fn eigh(&self) -> Result<Eigen> {
        jacobi_eigh(&self.0)
    }
}

/// Spectral decomposition `H = V diag(λ) V†`.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigen {
    /// `V diag(f(λ)) V†`.
    pub fn reconstruct(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let n = self.vectors.dim;
        let v = &self.vectors;
        let fl: Vec<Complex64> = self.values.iter().map(|l| f(*l)).collect();
        let mut out = ComplexMatrix::zeros(n);
        for r in 0..n {
            for c in 0..n {
                let mut acc = ZERO;
                for k in 0..n {
                    acc += v[(r, k)] * fl[k] * v[(c, k)].conj();
                }
                out[(r, c)] = acc;
            }
        }
        out
    }
}

/// A unitary matrix, `‖UU† − 1‖ ≤ UNITARY_TOL`.
#[derive(Clone, PartialEq, Debug)]
pub struct UnitaryMatrix(ComplexMatrix);

impl UnitaryMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let defect = m.unitarity_defect();
        if defect > UNITARY_TOL {
            return Err(Error::NotUnitary { defect });
        }
        Ok(UnitaryMatrix(m))
    }

    pub fn identity(dim: usize) -> Self {
        UnitaryMatrix(ComplexMatrix::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        UnitaryMatrix(self.0.adjoint())
    }

    /// `self · rhs`, i.e. `rhs` acts first.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        Ok(UnitaryMatrix(self.0.try_matmul(&rhs.0)?))
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.0.unitarity_defect()
    }
}

/// `exp(−i s H)`, built from the eigendecomposition of `H`.
pub fn herm_exp(h: &HermitianMatrix, s: f64) -> Result<UnitaryMatrix> {
    if !s.is_finite() {
        return Err(Error::InvalidProtocol(format!("non-finite time step {s}")));
    }
    let eig = h.eigh()?;
    Ok(UnitaryMatrix(eig.reconstruct(|l| Complex64::from_polar(1.0, -s * l))))
}

// Mixing weights for the Hermitian combination Re U + c·Im U whose eigenvectors
// are those of U. Tried in order until the reconstruction checks out.
const LOG_MIX_WEIGHTS: [f64; 4] = [
    0.414_213_562_373_095_1,
    1.732_050_807_568_877,
    -0.577_215_664_901_532_9,
    std::f64::consts::E,
];

/// Principal logarithm: the Hermitian `H` with `exp(−iH) = U` and every
/// eigenvalue in `(−π, π)`. Fails with [`Error::BranchAmbiguity`] when an
/// eigenphase lies within [`BRANCH_GUARD`] of ±π.
pub fn principal_log_unitary(u: &UnitaryMatrix) -> Result<HermitianMatrix> {
    let m = &u.0;
    let n = m.dim;
    let ud = m.adjoint();
    let re = (m + &ud).scale_real(0.5);
    let im = (m - &ud).scale(Complex64::new(0.0, -0.5));

    let mut best: Option<(f64, Eigen, Vec<f64>)> = None;
    for c in LOG_MIX_WEIGHTS {
        let mix = &re + &im.scale_real(c);
        let eig = jacobi_eigh(&mix)?;
        let v = &eig.vectors;
        let uv = m.matmul_unchecked(v);
        let mut phases = Vec::with_capacity(n);
        let mut residual = 0.0;
        for k in 0..n {
            let mut lam = ZERO;
            for r in 0..n {
                lam += v[(r, k)].conj() * uv[(r, k)];
            }
            for r in 0..n {
                residual += (uv[(r, k)] - v[(r, k)] * lam).norm_sqr();
            }
            phases.push(lam.arg());
        }
        let residual = residual.sqrt();
        let better = best.as_ref().is_none_or(|(r, _, _)| residual < *r);
        if better {
            best = Some((residual, eig, phases));
        }
        if residual <= 1e-11 {
            break;
        }
    }
    let (_, eig, phases) = best.expect("at least one mixing weight is tried");

    for &phase in &phases {
        if PI - phase.abs() < BRANCH_GUARD {
            return Err(Error::BranchAmbiguity { phase });
        }
    }
    let log = Eigen {
        values: phases.iter().map(|p| -p).collect(),
        vectors: eig.vectors,
    };
    Ok(HermitianMatrix::hermitize(log.reconstruct(|l| Complex64::new(l, 0.0))))
}

fn off_diagonal_mass(a: &ComplexMatrix) -> f64 {
    let n = a.dim;
    let mut acc = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                acc += a.data[r * n + c].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Cyclic Jacobi for a Hermitian matrix. Each rotation first removes the
/// phase of the pivot, then applies the real symmetric Jacobi rotation.
fn jacobi_eigh(h: &ComplexMatrix) -> Result<Eigen> {
    let n = h.dim;
    let mut a = h.clone();
    let mut v = ComplexMatrix::identity(n);
    let tol = JACOBI_TOL * h.frobenius_norm().max(1.0);

    let mut converged = off_diagonal_mass(&a) <= tol;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::EigenNoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = if theta.is_finite() {
                    theta.signum() / (theta.abs() + theta.hypot(1.0))
                } else {
                    0.0
                };
                if t == 0.0 {
                    continue;
                }
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                // G = diag(1, conj(phase)) · [[c, s], [−s, c]] on coordinates (p, q).
                let gpp = Complex64::new(c, 0.0);
                let gpq = Complex64::new(s, 0.0);
                let gqp = -phase.conj() * s;
                let gqq = phase.conj() * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * gpp + akq * gqp;
                    a[(k, q)] = akp * gpq + akq * gqq;
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * gpp + vkq * gqp;
                    v[(k, q)] = vkp * gpq + vkq * gqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = gpp.conj() * apk + gqp.conj() * aqk;
                    a[(q, k)] = gpq.conj() * apk + gqq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
            }
        }
        converged = off_diagonal_mass(&a) <= tol;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].re.total_cmp(&a[(y, y)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, dst)] = v[(r, src)];
        }
    }
    Ok(Eigen { values, vectors })
}
