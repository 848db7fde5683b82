//! Run a scaling series over a grid of N and fit power laws to S_N and D_N.

use quench_sim::analysis::{run_scaling, FitRange};
use quench_sim::ensemble::{EnsembleSpec, MeanProfile};
use quench_sim::protocol::ProtocolConfig;
use std::f64::consts::FRAC_PI_4;

fn main() -> quench_sim::Result<()> {
    let spec = EnsembleSpec::gaussian_pauli(MeanProfile::commuting(1.0, FRAC_PI_4), 5.0);
    let protocol = ProtocolConfig::new(spec, 1.0, 1)?;
    let grid = [16, 32, 64, 128, 256];
    let result = run_scaling(&protocol, &grid, 2_000, 2024, 0, FitRange { n_min: 16, n_max: 256 })?;
    for series in [&result.s_n, &result.d_n] {
        print!("{}", series.to_csv());
        if let Some(fit) = series.fit {
            println!("slope {:.3}, R² {:.4}\n", fit.slope, fit.r_squared);
        }
    }
    Ok(())
}
