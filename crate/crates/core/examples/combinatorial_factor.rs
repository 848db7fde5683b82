//! The fraction R_n(N) of index tuples with a repeated index.

use quench_sim::analysis::r_n_factor;

fn main() -> quench_sim::Result<()> {
    println!("{:>6} {:>10} {:>10} {:>10}", "N", "N·R_2", "N·R_3", "N·R_4");
    for big_n in [10, 100, 1_000, 10_000] {
        let row: Vec<f64> = (2..=4)
            .map(|n| r_n_factor(n, big_n).map(|r| r * big_n as f64))
            .collect::<Result<_, _>>()?;
        println!("{big_n:>6} {:>10.5} {:>10.5} {:>10.5}", row[0], row[1], row[2]);
    }
    Ok(())
}
