//! Compare first- and second-order BCH truncations with the exact effective
//! Hamiltonian as the step norms shrink.

use quench_sim::bch::{bch_order2, bch_p1, check_convergence_domain, log_oracle};
use quench_sim::ensemble::{EnsembleSpec, MeanProfile, RngStream};
use quench_sim::protocol::{sample_realization, ProtocolConfig, QuenchRealization};
use std::f64::consts::FRAC_PI_4;

fn main() -> quench_sim::Result<()> {
    let spec = EnsembleSpec::gaussian_pauli(MeanProfile::noncommuting(1.0, FRAC_PI_4), 3.0);
    let base = sample_realization(&ProtocolConfig::new(spec, 1.0, 6)?, RngStream::new(7, 0))?;
    println!(
        "{:>8} {:>12} {:>12} {:>10}",
        "scale", "|exact-P1|", "|exact-P12|", "certified"
    );
    for scale in [0.2, 0.1, 0.05, 0.025] {
        let r = QuenchRealization::new(base.hamiltonians().iter().map(|h| h.scale(scale)).collect(), 1.0)?;
        let exact = log_oracle(&r)?;
        println!(
            "{scale:>8} {:>12.3e} {:>12.3e} {:>10}",
            exact.sub(&bch_p1(&r))?.frobenius_norm(),
            exact.sub(&bch_order2(&r)?)?.frobenius_norm(),
            check_convergence_domain(&r).certified
        );
    }
    Ok(())
}
