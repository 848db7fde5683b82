//! Truncated Baker–Campbell–Hausdorff expansion of the effective Hamiltonian.
//!
//! With `A_k = −iτH_k` and the first step rightmost,
//! `log U_N = (1/N) Σ_k A_k + (1/2N²) Σ_{j>k} [A_j, A_k] + O(‖A‖³)`.
//! Converting back to Hamiltonian units (`H̃ = (i/τ) log U`), the second-order
//! contribution is `−(iτ/2N²) Σ_{j>k} [H_j, H_k]`.

use crate::error::{Error, Result};
use crate::matrix::{commutator, ComplexMatrix, HermitianMatrix};
use crate::protocol::{effective_hamiltonian, QuenchRealization};

use num_complex::Complex64;

/// Truncated series `P_1 + P_2`, each term in Hamiltonian units.
#[derive(Clone, Debug)]
pub struct BchTruncation {
    pub order: usize,
    pub terms: Vec<HermitianMatrix>,
}

impl BchTruncation {
    pub fn sum(&self) -> HermitianMatrix {
        let mut iter = self.terms.iter();
        let first = iter.next().expect("a truncation has at least one term").clone();
        iter.fold(first, |acc, t| acc.add(t).expect("terms share one dimension"))
    }
}

/// Arithmetic mean of the step Hamiltonians.
pub fn bch_p1(realization: &QuenchRealization) -> HermitianMatrix {
    let hs = realization.hamiltonians();
    let mut acc = ComplexMatrix::zeros(realization.dim());
    for h in hs {
        acc = &acc + h.as_matrix();
    }
    HermitianMatrix::hermitize(acc.scale_real(1.0 / hs.len() as f64))
}

/// Second-order term alone: `−(iτ/2N²) Σ_{j>k} [H_j, H_k]`.
pub fn bch_p2(realization: &QuenchRealization) -> Result<HermitianMatrix> {
    let hs = realization.hamiltonians();
    let n = hs.len() as f64;
    let tau = realization.total_time();
    let mut prefix = ComplexMatrix::zeros(realization.dim());
    let mut acc = ComplexMatrix::zeros(realization.dim());
    for h in hs {
        acc = &acc + &commutator(h.as_matrix(), &prefix)?;
        prefix = &prefix + h.as_matrix();
    }
    let factor = Complex64::new(0.0, -tau / (2.0 * n * n));
    HermitianMatrix::new(acc.scale(factor))
}

pub fn bch_truncation(realization: &QuenchRealization, order: usize) -> Result<BchTruncation> {
    let terms = match order {
        1 => vec![bch_p1(realization)],
        2 => vec![bch_p1(realization), bch_p2(realization)?],
        _ => {
            return Err(Error::InvalidProtocol(format!(
                "BCH truncation order must be 1 or 2, got {order}"
            )))
        }
    };
    Ok(BchTruncation { order, terms })
}

/// `P_1 + P_2` in Hamiltonian units.
pub fn bch_order2(realization: &QuenchRealization) -> Result<HermitianMatrix> {
    if realization.n_quenches() < 2 {
        return Err(Error::InvalidProtocol("order-2 BCH needs N >= 2".into()));
    }
    Ok(bch_truncation(realization, 2)?.sum())
}

/// Exact effective Hamiltonian from the principal matrix logarithm.
pub fn log_oracle(realization: &QuenchRealization) -> Result<HermitianMatrix> {
    effective_hamiltonian(realization)
}

/// Certificate that every step lies in `{H : ‖H‖τ < 1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceCertificate {
    pub certified: bool,
    /// `1 − max_k ‖H_k‖τ`; negative outside the domain.
    pub margin: f64,
}

pub fn check_convergence_domain(realization: &QuenchRealization) -> ConvergenceCertificate {
    let tau = realization.total_time();
    let worst = realization
        .hamiltonians()
        .iter()
        .map(|h| h.frobenius_norm() * tau)
        .fold(0.0, f64::max);
    ConvergenceCertificate {
        certified: worst < 1.0,
        margin: 1.0 - worst,
    }
}
