//! Monte Carlo estimators for averaged evolutions.
//!
//! Samples are assigned to one of [`JACKKNIFE_BATCHES`] batches by sample
//! index (`i mod B`), each batch is filled in index order, and batches are
//! merged in batch order. The result is therefore bitwise independent of the
//! number of worker threads. Error bars come from a leave-one-batch-out
//! jackknife.

use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::RngStream;
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, HermitianMatrix, UnitaryMatrix};
use crate::protocol::{effective_hamiltonian, evolve, sample_realization, ProtocolConfig};

pub const JACKKNIFE_BATCHES: usize = 50;
/// Elementwise variances may dip this far below zero from rounding.
pub const VARIANCE_FLOOR: f64 = -1e-12;

/// Streaming first and second elementwise moments of a random matrix.
///
/// Sums are kept relative to a shift (the first sample seen), so a stream of
/// identical samples has an exactly zero variance and an exact mean.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentAccumulator {
    dim: usize,
    count: u64,
    shift: Option<ComplexMatrix>,
    /// `Σ (U − shift)`.
    sum: ComplexMatrix,
    /// `Σ |U_ab − shift_ab|²`.
    sum_sq: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(dim: usize) -> Self {
        MomentAccumulator {
            dim,
            count: 0,
            shift: None,
            sum: ComplexMatrix::zeros(dim),
            sum_sq: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn accumulate(&mut self, u: &UnitaryMatrix) -> Result<()> {
        self.push_matrix(u.as_matrix())
    }

    pub fn push_matrix(&mut self, m: &ComplexMatrix) -> Result<()> {
        self.check_dim(m.dim())?;
        let shift = self.shift.get_or_insert_with(|| m.clone());
        let d = m - shift;
        for (s, z) in self.sum_sq.iter_mut().zip(d.as_slice()) {
            *s += z.norm_sqr();
        }
        self.sum = &self.sum + &d;
        self.count += 1;
        Ok(())
    }

    /// Re-expresses the sums relative to `shift`.
    fn rebased(&self, shift: &ComplexMatrix) -> Self {
        let Some(own) = &self.shift else {
            return MomentAccumulator {
                shift: Some(shift.clone()),
                ..self.clone()
            };
        };
        if own == shift {
            return self.clone();
        }
        let n = self.count as f64;
        let d = own - shift;
        let sum = &self.sum + &d.scale_real(n);
        let sum_sq = self
            .sum_sq
            .iter()
            .zip(self.sum.as_slice().iter().zip(d.as_slice()))
            .map(|(sq, (s, dz))| sq + 2.0 * (s * dz.conj()).re + n * dz.norm_sqr())
            .collect();
        MomentAccumulator {
            dim: self.dim,
            count: self.count,
            shift: Some(shift.clone()),
            sum,
            sum_sq,
        }
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        self.check_dim(other.dim)?;
        if other.count == 0 {
            return Ok(());
        }
        if self.count == 0 {
            *self = other.clone();
            return Ok(());
        }
        let other = other.rebased(self.shift.as_ref().expect("non-empty accumulator has a shift"));
        self.sum = &self.sum + &other.sum;
        for (s, o) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *s += o;
        }
        self.count += other.count;
        Ok(())
    }

    /// Removes a previously merged sub-accumulator (used by the jackknife).
    fn without(&self, part: &Self) -> Self {
        let Some(shift) = &self.shift else {
            return self.clone();
        };
        let part = part.rebased(shift);
        MomentAccumulator {
            dim: self.dim,
            count: self.count - part.count,
            shift: self.shift.clone(),
            sum: &self.sum - &part.sum,
            sum_sq: self.sum_sq.iter().zip(&part.sum_sq).map(|(a, b)| a - b).collect(),
        }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: dim,
            });
        }
        Ok(())
    }

    /// Sample mean `⟨U⟩`.
    pub fn mean(&self) -> ComplexMatrix {
        let centred = self.sum.scale_real(1.0 / self.count as f64);
        match &self.shift {
            Some(shift) => shift + &centred,
            None => centred,
        }
    }

    /// Real matrix (row-major) of `⟨|U_ab|²⟩ − |⟨U_ab⟩|²`.
    pub fn variance_matrix(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.sum_sq
            .iter()
            .zip(self.sum.as_slice())
            .map(|(sq, s)| sq / n - (s / n).norm_sqr())
            .collect()
    }

    /// Frobenius norm of the variance matrix.
    pub fn variance_norm(&self) -> f64 {
        self.variance_matrix().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Per-batch moment accumulators.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchedMoments {
    batches: Vec<MomentAccumulator>,
}

impl BatchedMoments {
    pub fn new(dim: usize) -> Self {
        Self::with_batches(dim, JACKKNIFE_BATCHES)
    }

    pub fn with_batches(dim: usize, batches: usize) -> Self {
        assert!(batches >= 1);
        BatchedMoments {
            batches: vec![MomentAccumulator::new(dim); batches],
        }
    }

    pub fn from_batches(batches: Vec<MomentAccumulator>) -> Result<Self> {
        let Some(first) = batches.first() else {
            return Err(Error::InsufficientSamples { needed: 1, have: 0 });
        };
        let dim = first.dim;
        if let Some(b) = batches.iter().find(|b| b.dim != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: b.dim,
            });
        }
        Ok(BatchedMoments { batches })
    }

    pub fn accumulate(&mut self, sample_index: u64, u: &UnitaryMatrix) -> Result<()> {
        let b = (sample_index % self.batches.len() as u64) as usize;
        self.batches[b].accumulate(u)
    }

    pub fn batches(&self) -> &[MomentAccumulator] {
        &self.batches
    }

    pub fn dim(&self) -> usize {
        self.batches[0].dim
    }

    pub fn count(&self) -> u64 {
        self.batches.iter().map(|b| b.count).sum()
    }

    /// All batches merged in batch order.
    pub fn total(&self) -> MomentAccumulator {
        let mut acc = MomentAccumulator::new(self.dim());
        for b in &self.batches {
            acc.merge(b).expect("batches share one dimension");
        }
        acc
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if other.batches.len() != self.batches.len() {
            return Err(Error::DimensionMismatch {
                expected: self.batches.len(),
                found: other.batches.len(),
            });
        }
        for (a, b) in self.batches.iter_mut().zip(&other.batches) {
            a.merge(b)?;
        }
        Ok(())
    }

    /// Jackknife estimate of a scalar statistic: the value on all samples and
    /// the leave-one-batch-out standard error.
    pub fn jackknife(&self, statistic: impl Fn(&MomentAccumulator) -> f64) -> Result<EstimateWithError> {
        let total = self.total();
        if total.count < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                have: total.count,
            });
        }
        let value = statistic(&total);
        let leave_out: Vec<f64> = self
            .batches
            .iter()
            .filter(|b| b.count > 0)
            .map(|b| statistic(&total.without(b)))
            .collect();
        Ok(EstimateWithError {
            value,
            std_error: jackknife_error(&leave_out),
            n_samples: total.count,
        })
    }

    /// Jackknife standard error of the mean matrix, combined over entries in
    /// quadrature: the Monte Carlo noise floor of `‖⟨U⟩ − X‖` for fixed `X`.
    pub fn mean_noise_floor(&self) -> Result<f64> {
        let total = self.total();
        if total.count < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                have: total.count,
            });
        }
        let means: Vec<ComplexMatrix> = self
            .batches
            .iter()
            .filter(|b| b.count > 0)
            .map(|b| total.without(b).mean())
            .collect();
        let b = means.len() as f64;
        if means.len() < 2 {
            return Ok(0.0);
        }
        let mut centre = ComplexMatrix::zeros(total.dim);
        for m in &means {
            centre = &centre + m;
        }
        let centre = centre.scale_real(1.0 / b);
        let ss: f64 = means.iter().map(|m| (m - &centre).frobenius_norm().powi(2)).sum();
        Ok(((b - 1.0) / b * ss).sqrt())
    }
}

fn jackknife_error(leave_out: &[f64]) -> f64 {
    let b = leave_out.len() as f64;
    if leave_out.len() < 2 {
        return 0.0;
    }
    let mean = leave_out.iter().sum::<f64>() / b;
    let ss: f64 = leave_out.iter().map(|x| (x - mean).powi(2)).sum();
    ((b - 1.0) / b * ss).sqrt()
}

#[derive(Serialize, Clone, Copy, Debug, PartialEq)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
}

/// `S_N = ‖Var[U_N]‖` with jackknife error.
pub fn s_n(moments: &BatchedMoments) -> Result<EstimateWithError> {
    moments.jackknife(MomentAccumulator::variance_norm)
}

/// `D_N = ‖⟨U_N⟩ − reference‖` with jackknife error.
pub fn d_n(moments: &BatchedMoments, reference: &UnitaryMatrix) -> Result<EstimateWithError> {
    if reference.dim() != moments.dim() {
        return Err(Error::DimensionMismatch {
            expected: moments.dim(),
            found: reference.dim(),
        });
    }
    let r = reference.as_matrix();
    moments.jackknife(|acc| (&acc.mean() - r).frobenius_norm())
}

/// Thread pool with `workers` threads; `0` means rayon's default.
pub fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))
}

/// Runs `per_sample` for sample indices `0..n_samples`, split into `batches`
/// deterministic batches (`i mod batches`), each batch processed in index
/// order by one worker.
pub fn run_batched<T, I, F>(n_samples: u64, batches: usize, workers: usize, init: I, per_sample: F) -> Result<Vec<T>>
where
    T: Send,
    I: Fn() -> T + Sync,
    F: Fn(&mut T, u64) -> Result<()> + Sync,
{
    let pool = worker_pool(workers)?;
    pool.install(|| {
        (0..batches)
            .into_par_iter()
            .map(|b| {
                let mut state = init();
                let mut i = b as u64;
                while i < n_samples {
                    per_sample(&mut state, i)?;
                    i += batches as u64;
                }
                Ok(state)
            })
            .collect()
    })
}

/// Samples `n_samples` realizations of `config` (sample `i` uses stream
/// `(seed, i)`) and accumulates `U_N(τ, 0)`.
pub fn simulate_moments(config: &ProtocolConfig, n_samples: u64, seed: u64, workers: usize) -> Result<BatchedMoments> {
    config.validate()?;
    let dim = config.spec.dim;
    let batches = run_batched(
        n_samples,
        JACKKNIFE_BATCHES,
        workers,
        || MomentAccumulator::new(dim),
        |acc, i| {
            let r = sample_realization(config, RngStream::new(seed, i))?;
            acc.accumulate(&evolve(&r)?)
        },
    )?;
    BatchedMoments::from_batches(batches)
}

/// Outcome of the even-pdf parity check `⟨U_N⟩ = 1`.
#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct ParityReport {
    pub n_quenches: usize,
    pub n_samples: u64,
    /// `‖⟨U_N⟩ − 1‖`.
    pub deviation: f64,
    /// Jackknife noise floor of the mean matrix.
    pub noise_floor: f64,
    /// `deviation / noise_floor` (0 when both vanish).
    pub z_score: f64,
    pub pass: bool,
    /// Frobenius norm of the sample mean of `H̃_N`, over samples whose
    /// effective Hamiltonian is on the principal branch.
    pub heff_mean_norm: f64,
    pub heff_noise_floor: f64,
    pub heff_branch_failures: u64,
    /// `⟨H̃_N⟩` compatible with zero at [`PARITY_SIGMAS`].
    pub heff_pass: bool,
    /// Closed-form `⟨U_N⟩ = c^N · 1`, when the ensemble admits one.
    pub exact_identity_factor: Option<f64>,
    /// `‖⟨U_N⟩ − c^N·1‖` against the closed form.
    pub exact_mean_deviation: Option<f64>,
    pub exact_mean_pass: Option<bool>,
}

/// For the untruncated, zero-mean qubit ensemble `H = ½α⃗·σ⃗` with
/// `α⃗ ~ Normal(0, σ²·1₃)`, one step averages to
/// `⟨e^{−iHδt}⟩ = (1 − k²σ²) e^{−k²σ²/2} · 1` with `k = δt/2`.
pub fn even_pauli_step_mean(sigma: f64, dt: f64) -> f64 {
    let x = (0.5 * dt * sigma).powi(2);
    (1.0 - x) * (-0.5 * x).exp()
}

fn exact_identity_factor(config: &ProtocolConfig) -> Option<f64> {
    let spec = &config.spec;
    let applies = spec.kind == crate::ensemble::EnsembleKind::GaussianPauli
        && spec.truncation_radius.is_none()
        && spec.mean_profile.mu == 0.0;
    applies.then(|| even_pauli_step_mean(spec.sigma, config.step()).powi(config.n_quenches as i32))
}

/// Number of noise-floor units within which `⟨U_N⟩` must match the identity.
pub const PARITY_SIGMAS: f64 = 3.0;

/// Estimates `⟨U_N⟩` for an even, time-independent pdf and tests it against
/// the identity at [`PARITY_SIGMAS`] standard errors.
pub fn parity_test_even_pdf(
    config: &ProtocolConfig,
    n_samples: u64,
    rng_base: RngStream,
    workers: usize,
) -> Result<ParityReport> {
    config.validate()?;
    if !config.spec.is_even() {
        return Err(Error::Config(format!(
            "parity test requires an even pdf (mu = 0), got mu = {}",
            config.spec.mean_profile.mu
        )));
    }
    let dim = config.spec.dim;
    let seed = RngStream::derive_seed(rng_base.seed, rng_base.stream_index);
    let batches = run_batched(
        n_samples,
        JACKKNIFE_BATCHES,
        workers,
        || (MomentAccumulator::new(dim), MomentAccumulator::new(dim), 0u64),
        |(u_acc, h_acc, failures), i| {
            let r = sample_realization(config, RngStream::new(seed, i))?;
            u_acc.accumulate(&evolve(&r)?)?;
            match effective_hamiltonian(&r) {
                Ok(h) => h_acc.push_matrix(h.as_matrix()),
                Err(Error::BranchAmbiguity { .. }) => {
                    *failures += 1;
                    Ok(())
                }
                Err(e) => Err(e),
            }
        },
    )?;
    let mut u_batches = Vec::with_capacity(batches.len());
    let mut h_batches = Vec::with_capacity(batches.len());
    let mut branch_failures = 0;
    for (u, h, f) in batches {
        u_batches.push(u);
        h_batches.push(h);
        branch_failures += f;
    }
    let u_moments = BatchedMoments::from_batches(u_batches)?;
    let h_moments = BatchedMoments::from_batches(h_batches)?;

    let identity = ComplexMatrix::identity(dim);
    let deviation = (&u_moments.total().mean() - &identity).frobenius_norm();
    let noise_floor = u_moments.mean_noise_floor()?;
    let z_score = if deviation == 0.0 { 0.0 } else { deviation / noise_floor };
    let factor = exact_identity_factor(config);
    let exact_mean_deviation = factor.map(|c| (&u_moments.total().mean() - &identity.scale_real(c)).frobenius_norm());

    let h_total = h_moments.total();
    let (heff_mean_norm, heff_noise_floor) = if h_total.count() >= 2 {
        (
            HermitianMatrix::hermitize(h_total.mean()).frobenius_norm(),
            h_moments.mean_noise_floor()?,
        )
    } else {
        (f64::NAN, f64::NAN)
    };

    Ok(ParityReport {
        n_quenches: config.n_quenches,
        n_samples: u_moments.count(),
        deviation,
        noise_floor,
        z_score,
        pass: deviation <= PARITY_SIGMAS * noise_floor,
        heff_mean_norm,
        heff_noise_floor,
        heff_branch_failures: branch_failures,
        heff_pass: heff_mean_norm <= PARITY_SIGMAS * heff_noise_floor,
        exact_identity_factor: factor,
        exact_mean_deviation,
        exact_mean_pass: exact_mean_deviation.map(|d| d <= PARITY_SIGMAS * noise_floor),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{EnsembleSpec, MeanProfile};
    use crate::matrix::{herm_exp, HermitianMatrix};

    #[test]
    fn identity_twice_has_zero_variance() {
        let mut acc = MomentAccumulator::new(2);
        let id = UnitaryMatrix::identity(2);
        acc.accumulate(&id).unwrap();
        acc.accumulate(&id).unwrap();
        assert_eq!(&acc.mean(), id.as_matrix());
        assert!(acc.variance_matrix().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn symmetric_pair_variance() {
        let u = herm_exp(&HermitianMatrix::from_pauli(0.0, [0.3, -0.4, 0.2]), 1.1).unwrap();
        let minus_u = UnitaryMatrix::new(u.as_matrix().scale_real(-1.0)).unwrap();
        let mut acc = MomentAccumulator::new(2);
        acc.accumulate(&u).unwrap();
        acc.accumulate(&minus_u).unwrap();
        assert!(acc.mean().frobenius_norm() < 1e-16);
        for (v, z) in acc.variance_matrix().iter().zip(u.as_matrix().as_slice()) {
            assert!((v - z.norm_sqr()).abs() < 1e-15);
        }
    }

    #[test]
    fn two_point_identity_gives_sqrt2() {
        let mut m = BatchedMoments::new(2);
        m.accumulate(0, &UnitaryMatrix::identity(2)).unwrap();
        m.accumulate(
            1,
            &UnitaryMatrix::new(ComplexMatrix::identity(2).scale_real(-1.0)).unwrap(),
        )
        .unwrap();
        let v = m.total().variance_matrix();
        assert_eq!(v, vec![1.0, 0.0, 0.0, 1.0]);
        let s = s_n(&m).unwrap();
        assert!((s.value - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.n_samples, 2);
    }

    #[test]
    fn dimension_and_count_errors() {
        let mut acc = MomentAccumulator::new(2);
        assert!(acc.accumulate(&UnitaryMatrix::identity(3)).is_err());
        let mut m = BatchedMoments::new(2);
        assert!(matches!(s_n(&m), Err(Error::InsufficientSamples { .. })));
        m.accumulate(0, &UnitaryMatrix::identity(2)).unwrap();
        assert!(s_n(&m).is_err());
        m.accumulate(1, &UnitaryMatrix::identity(2)).unwrap();
        assert!(d_n(&m, &UnitaryMatrix::identity(3)).is_err());
    }

    #[test]
    fn degenerate_ensemble_has_zero_s_and_d() {
        let spec = EnsembleSpec::gaussian_pauli(MeanProfile::noncommuting(1.0, 0.7), 0.0);
        let cfg = ProtocolConfig::new(spec, 1.0, 8).unwrap();
        let m = simulate_moments(&cfg, 200, 1, 1).unwrap();
        assert_eq!(s_n(&m).unwrap().value, 0.0);
        let reference = crate::protocol::mean_generated_evolution(&cfg).unwrap();
        let d = d_n(&m, &reference).unwrap();
        assert_eq!(d.value, 0.0);
        assert_eq!(d.std_error, 0.0);
    }

    #[test]
    fn scaled_ratio_equals_s_over_m_for_exact_unitary_mean() {
        // σ = 0: the mean is itself unitary, so ‖⟨U⟩‖² = M.
        let spec = EnsembleSpec::gaussian_pauli(MeanProfile::iid(1.0), 0.0);
        let cfg = ProtocolConfig::new(spec, 1.0, 4).unwrap();
        let m = simulate_moments(&cfg, 100, 3, 1).unwrap();
        let total = m.total();
        let mean_norm_sq = total.mean().frobenius_norm().powi(2);
        assert!((mean_norm_sq - 2.0).abs() < 1e-12);
        let s = s_n(&m).unwrap().value;
        assert!((s / mean_norm_sq - s / 2.0).abs() < 1e-15);
    }

    #[test]
    fn parity_rejects_odd_pdf_and_is_exact_when_degenerate() {
        let odd = EnsembleSpec::gaussian_pauli(MeanProfile::iid(1.0), 1.0);
        let cfg = ProtocolConfig::new(odd, 1.0, 4).unwrap();
        assert!(matches!(
            parity_test_even_pdf(&cfg, 100, RngStream::new(0, 0), 1),
            Err(Error::Config(_))
        ));

        let flat = EnsembleSpec::gaussian_pauli(MeanProfile::iid(0.0), 0.0);
        let cfg = ProtocolConfig::new(flat, 1.0, 4).unwrap();
        let r = parity_test_even_pdf(&cfg, 100, RngStream::new(0, 0), 1).unwrap();
        assert_eq!(r.deviation, 0.0);
        assert!(r.pass);
        assert_eq!(r.heff_mean_norm, 0.0);
    }

    #[test]
    fn batched_runner_covers_every_index_once() {
        let out = run_batched(103, 7, 2, Vec::new, |v: &mut Vec<u64>, i| {
            v.push(i);
            Ok(())
        })
        .unwrap();
        let mut all: Vec<u64> = out.into_iter().flatten().collect();
        all.sort_unstable();
        assert_eq!(all, (0..103).collect::<Vec<_>>());
    }
}
