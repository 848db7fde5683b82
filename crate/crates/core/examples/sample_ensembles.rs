//! Draw qubit Hamiltonians from the three mean profiles and compare the
//! sample mean with the analytic one.

use quench_sim::ensemble::{
    estimate_mean_hamiltonian, is_statistically_commuting, mean_hamiltonian, EnsembleSpec, MeanProfile, RngStream,
};
use std::f64::consts::FRAC_PI_4;

fn main() -> quench_sim::Result<()> {
    let profiles = [
        ("iid", MeanProfile::iid(1.0)),
        ("commuting", MeanProfile::commuting(1.0, FRAC_PI_4)),
        ("noncommuting", MeanProfile::noncommuting(1.0, FRAC_PI_4)),
    ];
    for (i, (name, profile)) in profiles.into_iter().enumerate() {
        let spec = EnsembleSpec::gaussian_pauli(profile, 2.0);
        let t = 0.6;
        let exact = mean_hamiltonian(&spec, t)?;
        let estimate = estimate_mean_hamiltonian(&spec, t, 50_000, RngStream::new(1, i as u64))?;
        println!(
            "{name:>13}: |<H> - mean of 5e4 draws| = {:.4}, statistically commuting: {}",
            estimate.sub(&exact)?.frobenius_norm(),
            is_statistically_commuting(&spec, 1.0, 32, 1e-12)?
        );
    }
    Ok(())
}
