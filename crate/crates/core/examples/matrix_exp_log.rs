//! Exponentiate a Hermitian matrix and take the principal logarithm back.

use quench_sim::matrix::{herm_exp, principal_log_unitary, HermitianMatrix};

fn main() -> quench_sim::Result<()> {
    let h = HermitianMatrix::from_pauli(0.2, [0.7, -0.4, 1.1]);
    let eig = h.eigh()?;
    println!("eigenvalues: {:?}", eig.values);

    let u = herm_exp(&h, 1.5)?;
    println!("U = exp(-1.5 i H):\n{:?}", u.as_matrix());
    println!("unitarity defect: {:.2e}", u.unitarity_defect());

    let back = principal_log_unitary(&u)?.scale(1.0 / 1.5);
    println!("round trip error: {:.2e}", back.sub(&h)?.frobenius_norm());
    Ok(())
}
