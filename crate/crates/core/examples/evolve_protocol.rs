//! Sample one multiple-quench realization, evolve it and extract the
//! effective Hamiltonian.

use quench_sim::ensemble::{EnsembleSpec, MeanProfile, RngStream};
use quench_sim::protocol::{
    effective_hamiltonian, evolve, mean_generated_evolution, sample_realization, ProtocolConfig,
};
use std::f64::consts::FRAC_PI_4;

fn main() -> quench_sim::Result<()> {
    let spec = EnsembleSpec::gaussian_pauli(MeanProfile::noncommuting(1.0, FRAC_PI_4), 5.0);
    let config = ProtocolConfig::new(spec, 1.0, 64)?;
    let realization = sample_realization(&config, RngStream::new(2024, 0))?;

    let u = evolve(&realization)?;
    let h_eff = effective_hamiltonian(&realization)?;
    let reference = mean_generated_evolution(&config)?;
    println!("U_N:\n{:?}", u.as_matrix());
    println!("H_eff:\n{:?}", h_eff.as_matrix());
    println!(
        "|U_N - U_mean| = {:.4}",
        (u.as_matrix() - reference.as_matrix()).frobenius_norm()
    );

    let (first, second) = realization.split_at(32)?;
    let joined = evolve(&second)?.compose(&evolve(&first)?)?;
    println!(
        "composition error: {:.2e}",
        joined.as_matrix().max_abs_diff(u.as_matrix())
    );
    Ok(())
}
