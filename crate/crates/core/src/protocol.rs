//! Multiple-random-quench protocols.
//!
//! The interval `[0, τ)` is cut into `N` equal steps of length `δt = τ/N`
//! starting at `t_k = (k−1)τ/N`. On step `k` the Hamiltonian is the constant
//! `H_k`, drawn independently from `ϱ_{t_k}`.
//!
//! Factor ordering: the first step acts first, so
//! `U = e^{−iH_N δt} ⋯ e^{−iH_2 δt} e^{−iH_1 δt}` with `H_1` rightmost.

use serde::{Deserialize, Serialize};

use crate::ensemble::{mean_hamiltonian, sample_hamiltonian, EnsembleSpec, RngStream};
use crate::error::{Error, Result};
use crate::matrix::{herm_exp, principal_log_unitary, HermitianMatrix, UnitaryMatrix};

/// Default number of fine steps for the continuum reference evolution.
pub const DEFAULT_N_REF: usize = 1 << 15;

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct ProtocolConfig {
    pub spec: EnsembleSpec,
    /// Total driving time τ.
    pub total_time: f64,
    /// Number of quenches N.
    pub n_quenches: usize,
}

impl ProtocolConfig {
    pub fn new(spec: EnsembleSpec, total_time: f64, n_quenches: usize) -> Result<Self> {
        let cfg = ProtocolConfig {
            spec,
            total_time,
            n_quenches,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_time.is_finite() && self.total_time > 0.0) {
            return Err(Error::InvalidProtocol(format!(
                "total_time must be > 0, got {}",
                self.total_time
            )));
        }
        if self.n_quenches == 0 {
            return Err(Error::InvalidProtocol("n_quenches must be >= 1".into()));
        }
        self.spec.validate()
    }

    /// Step duration `δt = τ/N`.
    pub fn step(&self) -> f64 {
        self.total_time / self.n_quenches as f64
    }

    /// Start of step `k` (zero-based): `kτ/N`.
    pub fn quench_time(&self, k: usize) -> f64 {
        k as f64 * self.total_time / self.n_quenches as f64
    }

    pub fn with_n_quenches(&self, n_quenches: usize) -> Self {
        ProtocolConfig {
            n_quenches,
            ..self.clone()
        }
    }
}

/// One draw `(H_1, …, H_N)` of the step Hamiltonians.
#[derive(Clone, Debug, PartialEq)]
pub struct QuenchRealization {
    hamiltonians: Vec<HermitianMatrix>,
    step: f64,
    total_time: f64,
}

impl QuenchRealization {
    /// Wraps explicit step Hamiltonians for a protocol of total time `τ`.
    pub fn new(hamiltonians: Vec<HermitianMatrix>, total_time: f64) -> Result<Self> {
        if hamiltonians.is_empty() {
            return Err(Error::InvalidProtocol("a realization needs at least one step".into()));
        }
        if !(total_time.is_finite() && total_time > 0.0) {
            return Err(Error::InvalidProtocol(format!(
                "total_time must be > 0, got {total_time}"
            )));
        }
        let dim = hamiltonians[0].dim();
        if let Some(h) = hamiltonians.iter().find(|h| h.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: h.dim(),
            });
        }
        Ok(QuenchRealization {
            step: total_time / hamiltonians.len() as f64,
            hamiltonians,
            total_time,
        })
    }

    pub fn hamiltonians(&self) -> &[HermitianMatrix] {
        &self.hamiltonians
    }

    pub fn n_quenches(&self) -> usize {
        self.hamiltonians.len()
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn dim(&self) -> usize {
        self.hamiltonians[0].dim()
    }

    /// Same step Hamiltonians over a different total time.
    pub fn rescaled(&self, total_time: f64) -> Result<Self> {
        Self::new(self.hamiltonians.clone(), total_time)
    }

    /// The reverse protocol `(H_N, …, H_1)`.
    pub fn reversed(&self) -> Self {
        QuenchRealization {
            hamiltonians: self.hamiltonians.iter().rev().cloned().collect(),
            ..self.clone()
        }
    }

    /// `(−H_1, …, −H_N)`.
    pub fn negated(&self) -> Self {
        QuenchRealization {
            hamiltonians: self.hamiltonians.iter().map(|h| h.scale(-1.0)).collect(),
            ..self.clone()
        }
    }

    /// Splits after the first `k` steps, keeping the step duration.
    pub fn split_at(&self, k: usize) -> Result<(Self, Self)> {
        if k == 0 || k >= self.n_quenches() {
            return Err(Error::InvalidProtocol(format!(
                "split point {k} outside 1..{}",
                self.n_quenches()
            )));
        }
        let (a, b) = self.hamiltonians.split_at(k);
        Ok((
            Self::new(a.to_vec(), self.step * a.len() as f64)?,
            Self::new(b.to_vec(), self.step * b.len() as f64)?,
        ))
    }
}

/// Draws `H_k ~ ϱ_{t_k}` independently for every step.
pub fn sample_realization(config: &ProtocolConfig, stream: RngStream) -> Result<QuenchRealization> {
    let mut rng = stream.rng();
    let hamiltonians = (0..config.n_quenches)
        .map(|k| sample_hamiltonian(&config.spec, config.quench_time(k), &mut rng))
        .collect::<Result<Vec<_>>>()?;
    QuenchRealization::new(hamiltonians, config.total_time)
}

fn ordered_product<'a>(
    steps: impl IntoIterator<Item = &'a HermitianMatrix>,
    dt: f64,
    dim: usize,
) -> Result<UnitaryMatrix> {
    let mut u = UnitaryMatrix::identity(dim);
    for h in steps {
        u = herm_exp(h, dt)?.compose(&u)?;
    }
    Ok(u)
}

/// `U_N(τ, 0)` with the first step rightmost.
pub fn evolve(realization: &QuenchRealization) -> Result<UnitaryMatrix> {
    ordered_product(&realization.hamiltonians, realization.step, realization.dim())
}

/// `H̃_N` with `U_N(τ, 0) = exp(−iτH̃_N)`, on the principal branch.
pub fn effective_hamiltonian(realization: &QuenchRealization) -> Result<HermitianMatrix> {
    let log = principal_log_unitary(&evolve(realization)?)?;
    Ok(log.scale(1.0 / realization.total_time))
}

/// Evolution generated by the step-like mean `⟨H_N(t)⟩`, i.e. the ordered
/// product of `exp(−i⟨H(t_k)⟩δt)`. Exact, since the generator is piecewise
/// constant.
pub fn mean_generated_evolution(config: &ProtocolConfig) -> Result<UnitaryMatrix> {
    config.validate()?;
    let means = (0..config.n_quenches)
        .map(|k| mean_hamiltonian(&config.spec, config.quench_time(k)))
        .collect::<Result<Vec<_>>>()?;
    ordered_product(&means, config.step(), config.spec.dim)
}

/// Continuum reference `T exp(−i∫₀^τ ⟨H(t)⟩ dt)`, approximated by an ordered
/// midpoint product over `n_ref` fine steps.
pub fn continuum_mean_evolution(spec: &EnsembleSpec, total_time: f64, n_ref: usize) -> Result<UnitaryMatrix> {
    if n_ref == 0 {
        return Err(Error::InvalidProtocol("n_ref must be >= 1".into()));
    }
    let dt = total_time / n_ref as f64;
    let mut u = UnitaryMatrix::identity(spec.dim);
    for j in 0..n_ref {
        let h = mean_hamiltonian(spec, (j as f64 + 0.5) * dt)?;
        u = herm_exp(&h, dt)?.compose(&u)?;
    }
    Ok(u)
}

/// Step-like evolution of a deterministic `h(t)` sampled at `t_k`.
pub fn evolve_deterministic<F>(h_of_t: F, total_time: f64, n_quenches: usize) -> Result<UnitaryMatrix>
where
    F: Fn(f64) -> HermitianMatrix,
{
    if n_quenches == 0 {
        return Err(Error::InvalidProtocol("n_quenches must be >= 1".into()));
    }
    let hs = (0..n_quenches)
        .map(|k| h_of_t(k as f64 * total_time / n_quenches as f64))
        .collect();
    evolve(&QuenchRealization::new(hs, total_time)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::MeanProfile;
    use crate::matrix::ComplexMatrix;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn pauli_h(xyz: [f64; 3]) -> HermitianMatrix {
        HermitianMatrix::from_pauli(0.0, xyz)
    }

    fn diff(a: &UnitaryMatrix, b: &UnitaryMatrix) -> f64 {
        (a.as_matrix() - b.as_matrix()).frobenius_norm()
    }

    /// `exp(−iθ n̂·σ⃗) = cos θ − i sin θ n̂·σ⃗` for unit `n̂`.
    fn closed_form(theta: f64, n: [f64; 3]) -> ComplexMatrix {
        let g = pauli_h(n).into_matrix();
        let cos = ComplexMatrix::identity(2).scale_real(theta.cos());
        &cos - &g.scale(Complex64::new(0.0, theta.sin()))
    }

    #[test]
    fn config_validation_and_grid() {
        let spec = EnsembleSpec::gaussian_pauli(MeanProfile::iid(1.0), 1.0);
        assert!(ProtocolConfig::new(spec.clone(), 0.0, 4).is_err());
        assert!(ProtocolConfig::new(spec.clone(), 1.0, 0).is_err());
        let cfg = ProtocolConfig::new(spec, 2.0, 4).unwrap();
        assert_eq!(cfg.step(), 0.5);
        assert_eq!(cfg.quench_time(0), 0.0);
        assert_eq!(cfg.quench_time(3), 1.5);
    }

    #[test]
    fn degenerate_realization_equals_means() {
        let spec = EnsembleSpec::gaussian_pauli(MeanProfile::noncommuting(1.0, PI / 4.0), 0.0);
        let cfg = ProtocolConfig::new(spec.clone(), 1.0, 8).unwrap();
        let r = sample_realization(&cfg, RngStream::new(0, 0)).unwrap();
        for (k, h) in r.hamiltonians().iter().enumerate() {
            assert_eq!(h, &mean_hamiltonian(&spec, cfg.quench_time(k)).unwrap());
        }
        let u = evolve(&r).unwrap();
        assert_eq!(u, mean_generated_evolution(&cfg).unwrap());
    }

    #[test]
    fn single_quench_draws_at_time_zero() {
        let spec = EnsembleSpec::gaussian_pauli(MeanProfile::noncommuting(1.0, 3.0), 0.0);
        let cfg = ProtocolConfig::new(spec.clone(), 1.0, 1).unwrap();
        let r = sample_realization(&cfg, RngStream::new(0, 0)).unwrap();
        assert_eq!(r.n_quenches(), 1);
        assert_eq!(r.hamiltonians()[0], mean_hamiltonian(&spec, 0.0).unwrap());
    }

    #[test]
    fn constant_steps_match_single_exponential() {
        let h = pauli_h([0.3, -0.2, 0.5]);
        let r = QuenchRealization::new(vec![h.clone(); 7], 1.3).unwrap();
        let u = evolve(&r).unwrap();
        assert!(diff(&u, &herm_exp(&h, 1.3).unwrap()) < 1e-13);
        let heff = effective_hamiltonian(&r).unwrap();
        assert!((heff.as_matrix() - h.as_matrix()).frobenius_norm() < 1e-9);
    }

    #[test]
    fn two_step_ordering_against_closed_form() {
        let tau = 0.9;
        let r = QuenchRealization::new(vec![pauli_h([1.0, 0.0, 0.0]), pauli_h([0.0, 1.0, 0.0])], tau).unwrap();
        let u = evolve(&r).unwrap();
        // σ_y step acts last, so it is the left factor.
        let expected = &closed_form(tau / 2.0, [0.0, 1.0, 0.0]) * &closed_form(tau / 2.0, [1.0, 0.0, 0.0]);
        assert!((u.as_matrix() - &expected).frobenius_norm() < 1e-14);
        let wrong = &closed_form(tau / 2.0, [1.0, 0.0, 0.0]) * &closed_form(tau / 2.0, [0.0, 1.0, 0.0]);
        assert!((u.as_matrix() - &wrong).frobenius_norm() > 1e-2);
    }

    #[test]
    fn rescaling_tau_changes_effective_hamiltonian() {
        let r = QuenchRealization::new(vec![pauli_h([1.0, 0.0, 0.0]), pauli_h([0.0, 1.0, 0.0])], 0.5).unwrap();
        let a = effective_hamiltonian(&r).unwrap();
        let b = effective_hamiltonian(&r.rescaled(1.5).unwrap()).unwrap();
        assert!((a.as_matrix() - b.as_matrix()).frobenius_norm() > 1e-3);
    }

    #[test]
    fn mean_generated_evolution_iid_and_commuting() {
        let tau = 1.0;
        let spec = EnsembleSpec::gaussian_pauli(MeanProfile::iid(1.0), 5.0);
        let half_sx = pauli_h([0.5, 0.0, 0.0]);
        for n in [1, 3, 16] {
            let cfg = ProtocolConfig::new(spec.clone(), tau, n).unwrap();
            let u = mean_generated_evolution(&cfg).unwrap();
            assert!(diff(&u, &herm_exp(&half_sx, tau).unwrap()) < 1e-12);
        }

        let omega = PI / 4.0;
        let spec = EnsembleSpec::gaussian_pauli(MeanProfile::commuting(1.0, omega), 5.0);
        let cfg = ProtocolConfig::new(spec, tau, 16).unwrap();
        let m_bar = (0..16).map(|k| (omega * cfg.quench_time(k)).sin()).sum::<f64>() / 16.0;
        let expected = herm_exp(&pauli_h([0.5 * m_bar, 0.0, 0.0]), tau).unwrap();
        assert!(diff(&mean_generated_evolution(&cfg).unwrap(), &expected) < 1e-12);
    }

    #[test]
    fn continuum_reference_commuting_closed_form() {
        let tau = 1.0;
        let omega = PI / 4.0;
        let spec = EnsembleSpec::gaussian_pauli(MeanProfile::commuting(1.0, omega), 0.0);
        let u = continuum_mean_evolution(&spec, tau, DEFAULT_N_REF).unwrap();
        let integral = (1.0 - (omega * tau).cos()) / omega;
        let expected = herm_exp(&pauli_h([0.5, 0.0, 0.0]), integral).unwrap();
        assert!(diff(&u, &expected) < 1e-10);
    }

    #[test]
    fn deterministic_evolution() {
        let h = pauli_h([0.2, 0.4, -0.1]);
        for n in [1, 5, 64] {
            let u = evolve_deterministic(|_| h.clone(), 2.0, n).unwrap();
            assert!(diff(&u, &herm_exp(&h, 2.0).unwrap()) < 1e-12);
        }
        // commuting family: exponent of the step-averaged generator
        let omega = 1.7;
        let tau = 1.0;
        for n in [2, 9, 33] {
            let u = evolve_deterministic(|t| pauli_h([0.5 * (omega * t).sin(), 0.0, 0.0]), tau, n).unwrap();
            let avg = (0..n)
                .map(|k| 0.5 * (omega * k as f64 * tau / n as f64).sin())
                .sum::<f64>()
                / n as f64;
            assert!(diff(&u, &herm_exp(&pauli_h([avg, 0.0, 0.0]), tau).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn deterministic_cauchy_convergence() {
        let omega = PI / 4.0;
        let h = |t: f64| pauli_h([0.5 * (omega * t).sin(), 0.0, 0.0]);
        let a = evolve_deterministic(h, 1.0, 1 << 14).unwrap();
        let b = evolve_deterministic(h, 1.0, 1 << 15).unwrap();
        assert!(diff(&a, &b) <= 1e-3);
    }

    #[test]
    fn split_rejects_bad_points() {
        let r = QuenchRealization::new(vec![pauli_h([1.0, 0.0, 0.0]); 4], 1.0).unwrap();
        assert!(r.split_at(0).is_err());
        assert!(r.split_at(4).is_err());
        let (a, b) = r.split_at(1).unwrap();
        assert_eq!((a.n_quenches(), b.n_quenches()), (1, 3));
        assert_eq!(a.step(), b.step());
    }
}
