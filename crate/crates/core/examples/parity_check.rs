//! Average evolution for an even, time-independent pdf.

use quench_sim::ensemble::{EnsembleSpec, MeanProfile, RngStream};
use quench_sim::estimators::parity_test_even_pdf;
use quench_sim::protocol::ProtocolConfig;

fn main() -> quench_sim::Result<()> {
    let spec = EnsembleSpec::gaussian_pauli(MeanProfile::iid(0.0), 1.0);
    for n in [4, 16, 64] {
        let config = ProtocolConfig::new(spec.clone(), 1.0, n)?;
        let r = parity_test_even_pdf(&config, 20_000, RngStream::new(2024, n as u64), 0)?;
        println!(
            "N = {n:>3}: |<U> - 1| = {:.4} (noise {:.4}), closed form c^N = {:.5}, |<H_eff>| = {:.4}",
            r.deviation,
            r.noise_floor,
            r.exact_identity_factor.unwrap_or(f64::NAN),
            r.heff_mean_norm
        );
    }
    Ok(())
}
