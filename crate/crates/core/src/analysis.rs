//! Scaling experiments over grids of quench counts and power-law fits.

use serde::{Deserialize, Serialize};

use crate::ensemble::RngStream;
use crate::error::{Error, Result};
use crate::estimators::{d_n, s_n, simulate_moments, EstimateWithError};
use crate::protocol::{mean_generated_evolution, ProtocolConfig};

/// Default N grid: 2⁴ … 2¹⁰.
pub fn default_n_grid() -> Vec<usize> {
    (4..=10).map(|p| 1usize << p).collect()
}

/// Default fit range: drop N < 16.
pub const DEFAULT_FIT_RANGE: FitRange = FitRange {
    n_min: 16,
    n_max: usize::MAX,
};

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
pub struct FitRange {
    pub n_min: usize,
    pub n_max: usize,
}

impl FitRange {
    pub fn contains(&self, n: usize) -> bool {
        (self.n_min..=self.n_max).contains(&n)
    }
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq)]
pub struct PowerLawFit {
    /// Exponent `p` of `value ∝ N^p`.
    pub slope: f64,
    /// Intercept of `ln value` against `ln N`.
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `ln value` on `ln N` over the points in `range`.
pub fn power_law_fit(points: &[(usize, f64)], range: FitRange) -> Result<PowerLawFit> {
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, _)| range.contains(*n))
        .map(|&(n, v)| {
            if v > 0.0 && v.is_finite() {
                Ok(((n as f64).ln(), v.ln()))
            } else {
                Err(Error::Fit(format!("nonpositive or non-finite value {v} at N = {n}")))
            }
        })
        .collect::<Result<_>>()?;
    if used.len() < 3 {
        return Err(Error::Fit(format!("need >= 3 points in range, have {}", used.len())));
    }
    let k = used.len() as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / k;
    let my = used.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = used.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all N in range are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = used.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(PowerLawFit {
        slope,
        intercept,
        r_squared,
    })
}

/// `R_n(N) = 1 − N!/(Nⁿ(N−n)!) = 1 − ∏_{j<n} (N−j)/N`.
pub fn r_n_factor(n: usize, big_n: usize) -> Result<f64> {
    if n == 0 || n >= big_n {
        return Err(Error::InvalidProtocol(format!(
            "R_n(N) requires N > n >= 1, got n = {n}, N = {big_n}"
        )));
    }
    let nf = big_n as f64;
    let prod: f64 = (0..n).map(|j| (nf - j as f64) / nf).product();
    Ok(1.0 - prod)
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    #[serde(rename = "S_N")]
    SN,
    #[serde(rename = "D_N")]
    DN,
}

#[derive(Serialize, Clone, Copy, Debug, PartialEq)]
pub struct ScalingPoint {
    pub n: usize,
    pub estimate: EstimateWithError,
}

#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct ScalingSeries {
    pub quantity: Quantity,
    pub points: Vec<ScalingPoint>,
    pub fit_range: FitRange,
    /// `None` when the series cannot be fitted (see `fit_error`).
    pub fit: Option<PowerLawFit>,
    pub fit_error: Option<String>,
}

impl ScalingSeries {
    pub fn new(quantity: Quantity, mut points: Vec<ScalingPoint>, fit_range: FitRange) -> Self {
        points.sort_by_key(|p| p.n);
        let raw: Vec<(usize, f64)> = points.iter().map(|p| (p.n, p.estimate.value)).collect();
        let (fit, fit_error) = match power_law_fit(&raw, fit_range) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        ScalingSeries {
            quantity,
            points,
            fit_range,
            fit,
            fit_error,
        }
    }

    /// True when every estimate is exactly zero (no randomness).
    pub fn is_degenerate(&self) -> bool {
        self.points.iter().all(|p| p.estimate.value == 0.0)
    }

    /// Plot-ready CSV: header `N,value,std_error`, `\n` line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,value,std_error\n");
        for p in &self.points {
            out.push_str(&format!("{},{:e},{:e}\n", p.n, p.estimate.value, p.estimate.std_error));
        }
        out
    }
}

#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct ScalingResult {
    pub s_n: ScalingSeries,
    pub d_n: ScalingSeries,
}

/// For every N in `n_grid`: sample `samples` realizations, accumulate
/// `U_N(τ, 0)`, estimate `S_N` and `D_N` (against the evolution generated by
/// the step-like mean), then fit both series over `fit_range`.
///
/// The stream family for each N is keyed by `(seed, N)`, so adding or
/// removing grid points leaves the other points unchanged.
pub fn run_scaling(
    protocol: &ProtocolConfig,
    n_grid: &[usize],
    samples: u64,
    seed: u64,
    workers: usize,
    fit_range: FitRange,
) -> Result<ScalingResult> {
    if n_grid.is_empty() {
        return Err(Error::Config("n_grid is empty".into()));
    }
    let mut grid = n_grid.to_vec();
    grid.sort_unstable();
    if grid.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("n_grid contains duplicates".into()));
    }
    let mut s_points = Vec::with_capacity(grid.len());
    let mut d_points = Vec::with_capacity(grid.len());
    for &n in &grid {
        let cfg = protocol.with_n_quenches(n);
        cfg.validate()?;
        let moments = simulate_moments(&cfg, samples, RngStream::derive_seed(seed, n as u64), workers)?;
        let reference = mean_generated_evolution(&cfg)?;
        s_points.push(ScalingPoint {
            n,
            estimate: s_n(&moments)?,
        });
        d_points.push(ScalingPoint {
            n,
            estimate: d_n(&moments, &reference)?,
        });
    }
    Ok(ScalingResult {
        s_n: ScalingSeries::new(Quantity::SN, s_points, fit_range),
        d_n: ScalingSeries::new(Quantity::DN, d_points, fit_range),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{EnsembleSpec, MeanProfile};

    #[test]
    fn fit_exact_inverse_law() {
        let pts: Vec<(usize, f64)> = (3..=10).map(|p| 1usize << p).map(|n| (n, 4.0 / n as f64)).collect();
        let fit = power_law_fit(
            &pts,
            FitRange {
                n_min: 1,
                n_max: usize::MAX,
            },
        )
        .unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!((fit.intercept - 4f64.ln()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_constant_has_zero_slope() {
        let pts: Vec<(usize, f64)> = [8, 16, 32, 64].iter().map(|&n| (n, 0.3)).collect();
        let fit = power_law_fit(&pts, DEFAULT_FIT_RANGE).unwrap();
        assert!(fit.slope.abs() < 1e-12);
    }

    #[test]
    fn fit_respects_range_and_refuses_bad_input() {
        let pts = vec![(4, 1.0), (8, 0.5), (16, 0.25), (32, 0.125)];
        assert!(power_law_fit(&pts, FitRange { n_min: 16, n_max: 64 }).is_err());
        let with_zero = vec![(16, 1.0), (32, 0.0), (64, 0.5)];
        assert!(power_law_fit(&with_zero, DEFAULT_FIT_RANGE).is_err());
        // out-of-range garbage is ignored
        let pts = vec![(2, -1.0), (16, 1.0), (32, 0.5), (64, 0.25)];
        let fit = power_law_fit(&pts, DEFAULT_FIT_RANGE).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn r_n_examples() {
        assert_eq!(r_n_factor(1, 17).unwrap(), 0.0);
        assert!((r_n_factor(2, 10).unwrap() - 0.1).abs() < 1e-15);
        let scaled = 1000.0 * r_n_factor(3, 1000).unwrap();
        assert!((scaled - 2.998).abs() < 1e-9, "{scaled}");
        assert!(r_n_factor(3, 3).is_err());
        assert!(r_n_factor(0, 3).is_err());
    }

    #[test]
    fn r_n_monotonicity_by_enumeration() {
        for big_n in [7usize, 20, 150, 10_000] {
            for n in 1..6.min(big_n - 1) {
                let lo = r_n_factor(n, big_n).unwrap();
                let hi = r_n_factor(n + 1, big_n).unwrap();
                assert!(hi > lo, "n = {n}, N = {big_n}");
                assert!((0.0..1.0).contains(&hi));
            }
        }
        for n in 2..=6 {
            for big_n in (n + 1)..400 {
                assert!(r_n_factor(n, big_n + 1).unwrap() < r_n_factor(n, big_n).unwrap());
            }
        }
    }

    #[test]
    fn degenerate_scaling_refuses_fit() {
        let spec = EnsembleSpec::gaussian_pauli(MeanProfile::iid(1.0), 0.0);
        let cfg = ProtocolConfig::new(spec, 1.0, 1).unwrap();
        let res = run_scaling(&cfg, &[16, 32, 64], 100, 1, 1, DEFAULT_FIT_RANGE).unwrap();
        assert!(res.s_n.is_degenerate() && res.d_n.is_degenerate());
        assert!(res.s_n.fit.is_none() && res.s_n.fit_error.is_some());
        assert!(res.d_n.fit.is_none());
    }

    #[test]
    fn csv_layout() {
        let est = |v| EstimateWithError {
            value: v,
            std_error: 0.5,
            n_samples: 10,
        };
        let series = ScalingSeries::new(
            Quantity::SN,
            vec![
                ScalingPoint {
                    n: 32,
                    estimate: est(0.25),
                },
                ScalingPoint {
                    n: 16,
                    estimate: est(1.0),
                },
            ],
            DEFAULT_FIT_RANGE,
        );
        assert_eq!(series.to_csv(), "N,value,std_error\n16,1e0,5e-1\n32,2.5e-1,5e-1\n");
    }

    #[test]
    fn bad_grids() {
        let spec = EnsembleSpec::gaussian_pauli(MeanProfile::iid(1.0), 1.0);
        let cfg = ProtocolConfig::new(spec, 1.0, 1).unwrap();
        assert!(run_scaling(&cfg, &[], 10, 0, 1, DEFAULT_FIT_RANGE).is_err());
        assert!(run_scaling(&cfg, &[4, 4], 10, 0, 1, DEFAULT_FIT_RANGE).is_err());
    }
}
