//! JSON-configured experiment recipes.
//!
//! Each recipe reads a [`RunConfig`], writes its artifacts into
//! `output_dir`, and returns a [`Outcome`] carrying the process exit code.
//! Every JSON artifact embeds the resolved config, the seed, and the
//! dimensionless products `στ`, `μτ`, `ωτ`.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{default_n_grid, run_scaling, FitRange, ScalingSeries, DEFAULT_FIT_RANGE};
use crate::bch::{bch_order2, bch_p1, check_convergence_domain, log_oracle};
use crate::ensemble::{mean_hamiltonian, sample_hamiltonian, EnsembleSpec, RngStream};
use crate::error::{Error, Result};
use crate::estimators::{parity_test_even_pdf, run_batched, JACKKNIFE_BATCHES};
use crate::matrix::{herm_exp, HermitianMatrix};
use crate::protocol::{
    continuum_mean_evolution, evolve_deterministic, sample_realization, ProtocolConfig, QuenchRealization,
    DEFAULT_N_REF,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Scaling,
    Parity,
    BchVerify,
    ConvergenceReport,
    DeterministicConvergence,
}

impl Experiment {
    pub fn parse(name: &str) -> Result<Self> {
        serde_json::from_value(Value::String(name.to_owned()))
            .map_err(|_| Error::Config(format!("unknown experiment '{name}'")))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Scaling => "scaling",
            Experiment::Parity => "parity",
            Experiment::BchVerify => "bch-verify",
            Experiment::ConvergenceReport => "convergence-report",
            Experiment::DeterministicConvergence => "deterministic-convergence",
        }
    }
}

fn default_samples() -> u64 {
    10_000
}
fn default_seed() -> u64 {
    2024
}
fn default_fit_range() -> FitRange {
    DEFAULT_FIT_RANGE
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_n_ref() -> usize {
    DEFAULT_N_REF
}
fn default_bch_realizations() -> usize {
    100
}
fn default_bch_max_norm() -> f64 {
    0.1
}

/// A single experiment run, as read from a JSON document.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub ensemble: EnsembleSpec,
    /// Total driving time τ.
    pub tau: f64,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads; 0 picks the number of CPUs.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_fit_range")]
    pub fit_range: FitRange,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Fine steps for continuum references.
    #[serde(default = "default_n_ref")]
    pub n_ref: usize,
    /// Random realizations in the BCH remainder suite.
    #[serde(default = "default_bch_realizations")]
    pub bch_realizations: usize,
    /// Largest `τ‖H_k‖` in the BCH remainder suite.
    #[serde(default = "default_bch_max_norm")]
    pub bch_max_norm: f64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        self.ensemble.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return cfg(format!("tau must be > 0, got {}", self.tau));
        }
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return cfg("n_grid must be a non-empty list of positive integers".into());
        }
        let mut sorted = self.n_grid.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.n_grid.len() {
            return cfg("n_grid contains duplicates".into());
        }
        if self.samples < 2 {
            return cfg(format!("samples must be >= 2, got {}", self.samples));
        }
        if self.fit_range.n_min > self.fit_range.n_max {
            return cfg("fit_range.n_min exceeds fit_range.n_max".into());
        }
        if self.n_ref == 0 {
            return cfg("n_ref must be >= 1".into());
        }
        if self.experiment == Experiment::BchVerify {
            if self.bch_realizations == 0 {
                return cfg("bch_realizations must be >= 1".into());
            }
            if !(self.bch_max_norm > 0.0 && self.bch_max_norm < 1.0) {
                return cfg(format!("bch_max_norm must lie in (0, 1), got {}", self.bch_max_norm));
            }
        }
        if self.experiment == Experiment::Parity && !self.ensemble.is_even() {
            return cfg(format!(
                "parity requires an even pdf (mu = 0), got mu = {}",
                self.ensemble.mean_profile.mu
            ));
        }
        Ok(())
    }

    fn protocol(&self, n: usize) -> Result<ProtocolConfig> {
        ProtocolConfig::new(self.ensemble.clone(), self.tau, n)
    }

    /// `στ`, `μτ`, `ωτ` plus the full config and seed.
    pub fn provenance(&self) -> Value {
        json!({
            "config": self,
            "seed": self.seed,
            "dimensionless": {
                "sigma_tau": self.ensemble.sigma * self.tau,
                "mu_tau": self.ensemble.mean_profile.mu * self.tau,
                "omega_tau": self.ensemble.mean_profile.omega * self.tau,
            },
        })
    }
}

/// Result of running one recipe.
#[derive(Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    pub report: Value,
}

pub fn run(config: &RunConfig) -> Result<Outcome> {
    config.validate()?;
    fs::create_dir_all(&config.output_dir)?;
    match config.experiment {
        Experiment::Scaling => cmd_scaling(config),
        Experiment::Parity => cmd_parity(config),
        Experiment::BchVerify => cmd_bch_verify(config),
        Experiment::ConvergenceReport => cmd_convergence_report(config),
        Experiment::DeterministicConvergence => cmd_deterministic_convergence(config),
    }
}

fn write_json(dir: &Path, name: &str, value: &Value, artifacts: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text)?;
    artifacts.push(path);
    Ok(())
}

fn write_text(dir: &Path, name: &str, text: &str, artifacts: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text)?;
    artifacts.push(path);
    Ok(())
}

fn with_provenance(config: &RunConfig, experiment: Value) -> Value {
    let mut v = config.provenance();
    v["experiment"] = json!(config.experiment.name());
    v["results"] = experiment;
    v
}

fn series_summary(series: &ScalingSeries) -> Value {
    json!({
        "quantity": series.quantity,
        "fit_range": series.fit_range,
        "slope": series.fit.map(|f| f.slope),
        "intercept": series.fit.map(|f| f.intercept),
        "r_squared": series.fit.map(|f| f.r_squared),
        "fit_error": series.fit_error,
        "degenerate": series.is_degenerate(),
        "points": series.points,
    })
}

/// `s_n.csv`, `d_n.csv`, `summary.json`.
pub fn cmd_scaling(config: &RunConfig) -> Result<Outcome> {
    let base = config.protocol(1)?;
    let result = run_scaling(
        &base,
        &config.n_grid,
        config.samples,
        config.seed,
        config.workers,
        config.fit_range,
    )?;
    let dir = &config.output_dir;
    let mut artifacts = Vec::new();
    write_text(dir, "s_n.csv", &result.s_n.to_csv(), &mut artifacts)?;
    write_text(dir, "d_n.csv", &result.d_n.to_csv(), &mut artifacts)?;
    let report = with_provenance(
        config,
        json!({
            "degenerate": result.s_n.is_degenerate() && result.d_n.is_degenerate(),
            "s_n": series_summary(&result.s_n),
            "d_n": series_summary(&result.d_n),
        }),
    );
    write_json(dir, "summary.json", &report, &mut artifacts)?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        artifacts,
        report,
    })
}

/// `parity.json`: `⟨U_N⟩` against the identity for every N in the grid.
pub fn cmd_parity(config: &RunConfig) -> Result<Outcome> {
    let mut reports = Vec::with_capacity(config.n_grid.len());
    for &n in &config.n_grid {
        let protocol = config.protocol(n)?;
        reports.push(parity_test_even_pdf(
            &protocol,
            config.samples,
            RngStream::new(config.seed, n as u64),
            config.workers,
        )?);
    }
    let all_pass = reports.iter().all(|r| r.pass);
    let report = with_provenance(config, json!({ "pass": all_pass, "per_n": reports }));
    let mut artifacts = Vec::new();
    write_json(&config.output_dir, "parity.json", &report, &mut artifacts)?;
    Ok(Outcome {
        exit_code: if all_pass { EXIT_OK } else { EXIT_VERIFY_FAILED },
        artifacts,
        report,
    })
}

/// Largest tolerated deviation between the log oracle and the order-1
/// truncation on commuting realizations.
pub const COMMUTING_TOL: f64 = 1e-9;
/// Minimum remainder reduction when all step norms are halved.
pub const HALVING_MIN_RATIO: f64 = 6.0;

/// Outcome of the BCH property suites.
#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct BchReport {
    pub commuting_max_deviation: f64,
    pub commuting_pass: bool,
    /// `max ‖Z_exact − Z_2‖ / s³` with `Z = −iτH̃` and `s = max_k τ‖H_k‖`.
    pub remainder_constant: f64,
    pub remainder_pass: bool,
    /// Smallest remainder reduction observed when halving all norms.
    pub min_halving_ratio: f64,
    pub halving_pass: bool,
    pub realizations: usize,
    /// Fraction of untruncated draws of the configured ensemble outside the
    /// certified convergence domain.
    pub certificate_failure_rate: f64,
    pub certificate_samples: u64,
    pub pass: bool,
}

/// Steps per realization in the BCH suites, cycling through 2..=8.
fn suite_steps(i: usize) -> usize {
    2 + i % 7
}

/// Draws a realization of the configured ensemble and rescales it so that
/// `max_k τ‖H_k‖ = s`.
fn scaled_realization(config: &RunConfig, n: usize, s: f64, stream: RngStream) -> Result<QuenchRealization> {
    let r = sample_realization(&config.protocol(n)?, stream)?;
    let worst = r.hamiltonians().iter().map(|h| h.frobenius_norm()).fold(0.0, f64::max) * config.tau;
    let hs = if worst > 0.0 {
        r.hamiltonians().iter().map(|h| h.scale(s / worst)).collect()
    } else {
        r.hamiltonians().to_vec()
    };
    QuenchRealization::new(hs, config.tau)
}

/// `τ‖H̃_exact − H̃_2‖`, the remainder in log units.
fn remainder(r: &QuenchRealization) -> Result<f64> {
    Ok(log_oracle(r)?.sub(&bch_order2(r)?)?.frobenius_norm() * r.total_time())
}

pub fn bch_suite(config: &RunConfig) -> Result<BchReport> {
    let dim = config.ensemble.dim;
    let seed = RngStream::derive_seed(config.seed, 0xBC);

    // Commuting suite: steps share one random eigenbasis.
    let mut commuting_max_deviation: f64 = 0.0;
    for i in 0..config.bch_realizations {
        let mut rng = RngStream::new(seed, i as u64).rng();
        let basis_gen = {
            let mut spec = config.ensemble.clone();
            spec.sigma = spec.sigma.max(1.0);
            spec.truncation_radius = None;
            sample_hamiltonian(&spec, 0.0, &mut rng)?
        };
        let basis = herm_exp(&basis_gen, 1.0)?;
        let n = suite_steps(i);
        let hs = (0..n)
            .map(|_| {
                let diag: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0) / config.tau).collect();
                let d = HermitianMatrix::from_diagonal(&diag);
                let v = basis.as_matrix();
                HermitianMatrix::hermitize(&(v * d.as_matrix()) * &v.adjoint())
            })
            .collect();
        let r = QuenchRealization::new(hs, config.tau)?;
        let dev = log_oracle(&r)?.sub(&bch_p1(&r))?.frobenius_norm();
        commuting_max_deviation = commuting_max_deviation.max(dev);
    }

    // Cubic remainder suite.
    let mut remainder_constant: f64 = 0.0;
    let mut min_halving_ratio = f64::INFINITY;
    for i in 0..config.bch_realizations {
        let stream = RngStream::new(seed ^ 0xFFFF, i as u64);
        let s = config.bch_max_norm * (0.1 + 0.9 * (i as f64 + 0.5) / config.bch_realizations as f64);
        let n = suite_steps(i);
        let r = scaled_realization(config, n, s, stream)?;
        let rem = remainder(&r)?;
        remainder_constant = remainder_constant.max(rem / s.powi(3));
        let half = QuenchRealization::new(r.hamiltonians().iter().map(|h| h.scale(0.5)).collect(), config.tau)?;
        let rem_half = remainder(&half)?;
        if rem > 1e-13 {
            min_halving_ratio = min_halving_ratio.min(rem / rem_half);
        }
    }
    if !min_halving_ratio.is_finite() {
        // every remainder vanished (commuting ensemble); nothing to halve
        min_halving_ratio = f64::INFINITY;
    }

    // Certificate failure frequency for the unscaled ensemble.
    let n_cert = config.n_grid[0];
    let protocol = config.protocol(n_cert)?;
    let failures: u64 = run_batched(
        config.samples,
        JACKKNIFE_BATCHES,
        config.workers,
        || 0u64,
        |count, i| {
            let r = sample_realization(&protocol, RngStream::new(config.seed, i))?;
            if !check_convergence_domain(&r).certified {
                *count += 1;
            }
            Ok(())
        },
    )?
    .into_iter()
    .sum();

    let commuting_pass = commuting_max_deviation <= COMMUTING_TOL;
    let remainder_pass = remainder_constant.is_finite();
    let halving_pass = min_halving_ratio >= HALVING_MIN_RATIO;
    Ok(BchReport {
        commuting_max_deviation,
        commuting_pass,
        remainder_constant,
        remainder_pass,
        min_halving_ratio,
        halving_pass,
        realizations: config.bch_realizations,
        certificate_failure_rate: failures as f64 / config.samples as f64,
        certificate_samples: config.samples,
        pass: commuting_pass && remainder_pass && halving_pass,
    })
}

/// `bch.json`.
pub fn cmd_bch_verify(config: &RunConfig) -> Result<Outcome> {
    let suite = bch_suite(config)?;
    let report = with_provenance(config, serde_json::to_value(&suite)?);
    let mut artifacts = Vec::new();
    write_json(&config.output_dir, "bch.json", &report, &mut artifacts)?;
    Ok(Outcome {
        exit_code: if suite.pass { EXIT_OK } else { EXIT_VERIFY_FAILED },
        artifacts,
        report,
    })
}

/// `convergence.json`: per N, the fraction of realizations outside the
/// certified BCH convergence domain and the mean margin.
pub fn cmd_convergence_report(config: &RunConfig) -> Result<Outcome> {
    let mut rows = Vec::new();
    for &n in &config.n_grid {
        let protocol = config.protocol(n)?;
        let seed = RngStream::derive_seed(config.seed, n as u64);
        let per_batch = run_batched(
            config.samples,
            JACKKNIFE_BATCHES,
            config.workers,
            || (0u64, 0.0f64),
            |(fails, margin), i| {
                let cert = check_convergence_domain(&sample_realization(&protocol, RngStream::new(seed, i))?);
                if !cert.certified {
                    *fails += 1;
                }
                *margin += cert.margin;
                Ok(())
            },
        )?;
        let (fails, margin) = per_batch.iter().fold((0u64, 0.0), |(f, m), (bf, bm)| (f + bf, m + bm));
        rows.push(json!({
            "n": n,
            "failure_rate": fails as f64 / config.samples as f64,
            "mean_margin": margin / config.samples as f64,
        }));
    }
    let report = with_provenance(config, json!({ "per_n": rows }));
    let mut artifacts = Vec::new();
    write_json(&config.output_dir, "convergence.json", &report, &mut artifacts)?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        artifacts,
        report,
    })
}

/// `deterministic.csv` and `deterministic.json`: step-like evolution of the
/// mean Hamiltonian `⟨H(t)⟩` against the continuum reference, and the
/// Cauchy difference between N and 2N steps.
pub fn cmd_deterministic_convergence(config: &RunConfig) -> Result<Outcome> {
    let spec = config.ensemble.clone();
    mean_hamiltonian(&spec, 0.0)?;
    let h_of_t = |t: f64| mean_hamiltonian(&spec, t).expect("analytic mean checked above");
    let reference = continuum_mean_evolution(&spec, config.tau, config.n_ref)?;
    let mut grid = config.n_grid.clone();
    grid.sort_unstable();
    let mut csv = String::from("N,distance_to_reference,cauchy_distance\n");
    let mut rows = Vec::new();
    for &n in &grid {
        let u = evolve_deterministic(h_of_t, config.tau, n)?;
        let u2 = evolve_deterministic(h_of_t, config.tau, 2 * n)?;
        let dist = (u.as_matrix() - reference.as_matrix()).frobenius_norm();
        let cauchy = (u.as_matrix() - u2.as_matrix()).frobenius_norm();
        csv.push_str(&format!("{n},{dist:e},{cauchy:e}\n"));
        rows.push(json!({ "n": n, "distance_to_reference": dist, "cauchy_distance": cauchy }));
    }
    let report = with_provenance(config, json!({ "n_ref": config.n_ref, "per_n": rows }));
    let mut artifacts = Vec::new();
    write_text(&config.output_dir, "deterministic.csv", &csv, &mut artifacts)?;
    write_json(&config.output_dir, "deterministic.json", &report, &mut artifacts)?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        artifacts,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(experiment: &str) -> String {
        format!(
            r#"{{
  "experiment": "{experiment}",
  "ensemble": {{"dim": 2, "kind": "gaussian-pauli", "mean_profile": {{"kind": "iid-constant", "mu": 0.0}}, "sigma": 1.0}},
  "tau": 1.0
}}"#
        )
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::from_json(&minimal("scaling")).unwrap();
        assert_eq!(cfg.n_grid, default_n_grid());
        assert_eq!(cfg.samples, 10_000);
        assert_eq!(cfg.fit_range, DEFAULT_FIT_RANGE);
        assert_eq!(cfg.n_ref, DEFAULT_N_REF);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::from_json("{").is_err());
        assert!(RunConfig::from_json(&minimal("nonsense")).is_err());
        let bad_tau = minimal("scaling").replace("\"tau\": 1.0", "\"tau\": -1.0");
        assert!(matches!(RunConfig::from_json(&bad_tau), Err(Error::Config(_))));
        let odd = minimal("parity").replace("\"mu\": 0.0", "\"mu\": 1.0");
        assert!(matches!(RunConfig::from_json(&odd), Err(Error::Config(_))));
        let unknown = minimal("scaling").replace("\"tau\"", "\"bogus\": 1, \"tau\"");
        assert!(RunConfig::from_json(&unknown).is_err());
        let dupes = minimal("scaling").replace("\"tau\": 1.0", "\"tau\": 1.0, \"n_grid\": [4, 4]");
        assert!(RunConfig::from_json(&dupes).is_err());
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in [
            Experiment::Scaling,
            Experiment::Parity,
            Experiment::BchVerify,
            Experiment::ConvergenceReport,
            Experiment::DeterministicConvergence,
        ] {
            assert_eq!(Experiment::parse(e.name()).unwrap(), e);
        }
        assert!(Experiment::parse("fig2").is_err());
    }

    #[test]
    fn provenance_echoes_dimensionless_products() {
        let mut cfg = RunConfig::from_json(&minimal("scaling")).unwrap();
        cfg.tau = 2.0;
        cfg.ensemble.sigma = 2.5;
        let p = cfg.provenance();
        assert_eq!(p["dimensionless"]["sigma_tau"], 5.0);
        assert_eq!(p["seed"], 2024);
        assert_eq!(p["config"]["tau"], 2.0);
    }
}
