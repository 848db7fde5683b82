//! Estimate S_N and D_N with jackknife errors for a single N.

use quench_sim::ensemble::{EnsembleSpec, MeanProfile};
use quench_sim::estimators::{d_n, s_n, simulate_moments};
use quench_sim::protocol::{mean_generated_evolution, ProtocolConfig};

fn main() -> quench_sim::Result<()> {
    let spec = EnsembleSpec::gaussian_pauli(MeanProfile::iid(1.0), 5.0);
    for n in [16, 64, 256] {
        let config = ProtocolConfig::new(spec.clone(), 1.0, n)?;
        let moments = simulate_moments(&config, 5_000, 2024, 0)?;
        let s = s_n(&moments)?;
        let d = d_n(&moments, &mean_generated_evolution(&config)?)?;
        println!(
            "N = {n:>4}: S_N = {:.5} ± {:.5}, D_N = {:.5} ± {:.5}",
            s.value, s.std_error, d.value, d.std_error
        );
    }
    Ok(())
}
