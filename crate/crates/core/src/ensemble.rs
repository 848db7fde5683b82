//! Time-dependent random Hermitian matrix ensembles.
//!
//! An [`EnsembleSpec`] describes the matrix-pdf at each instant: a mean
//! matrix that follows a [`MeanProfile`], plus independent noise on every
//! real parameter of the Hermitian matrix. Draws at different times are
//! statistically independent; nothing here carries state between calls.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{commutator, ComplexMatrix, HermitianMatrix};

/// Number of consecutive draws the truncating sampler tries before giving up.
pub const TRUNCATION_WINDOW: usize = 100_000;
/// Minimum acceptance rate tolerated by the truncating sampler.
pub const TRUNCATION_MIN_RATE: f64 = 1e-4;

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    /// `μ⃗(t) = μ·d̂` for a fixed unit direction `d̂`.
    IidConstant,
    /// `μ⃗(t) = μ (sin ωt, 0, 0)`.
    HarmonicCommuting,
    /// `μ⃗(t) = μ (sin ωt, cos ωt, 0)`.
    HarmonicNoncommuting,
}

/// Time dependence of the mean Pauli vector.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct MeanProfile {
    pub kind: ProfileKind,
    /// Magnitude `μ` (1/time).
    pub mu: f64,
    /// Angular frequency `ω` (1/time); ignored by the IID profile.
    #[serde(default)]
    pub omega: f64,
    /// Direction of the IID mean vector, normalized on use. Defaults to x̂.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<[f64; 3]>,
}

impl MeanProfile {
    pub fn iid(mu: f64) -> Self {
        MeanProfile {
            kind: ProfileKind::IidConstant,
            mu,
            omega: 0.0,
            direction: None,
        }
    }

    pub fn commuting(mu: f64, omega: f64) -> Self {
        MeanProfile {
            kind: ProfileKind::HarmonicCommuting,
            mu,
            omega,
            direction: None,
        }
    }

    pub fn noncommuting(mu: f64, omega: f64) -> Self {
        MeanProfile {
            kind: ProfileKind::HarmonicNoncommuting,
            mu,
            omega,
            direction: None,
        }
    }

    pub fn is_time_independent(&self) -> bool {
        self.kind == ProfileKind::IidConstant
    }

    fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::InvalidEnsemble(format!(
                "mu must be finite and >= 0, got {}",
                self.mu
            )));
        }
        if !self.omega.is_finite() {
            return Err(Error::InvalidEnsemble("omega must be finite".into()));
        }
        if let Some(d) = self.direction {
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(Error::InvalidEnsemble(
                    "direction must be a nonzero finite vector".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Mean Pauli vector `μ⃗(t)`.
pub fn mean_vector(profile: &MeanProfile, t: f64) -> [f64; 3] {
    let mu = profile.mu;
    match profile.kind {
        ProfileKind::IidConstant => {
            let d = profile.direction.unwrap_or([1.0, 0.0, 0.0]);
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            [mu * d[0] / norm, mu * d[1] / norm, mu * d[2] / norm]
        }
        ProfileKind::HarmonicCommuting => [mu * (profile.omega * t).sin(), 0.0, 0.0],
        ProfileKind::HarmonicNoncommuting => {
            let phase = profile.omega * t;
            [mu * phase.sin(), mu * phase.cos(), 0.0]
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    /// Qubit `H = ½ α⃗·σ⃗` with `α_i ~ Normal(μ_i(t), σ²)`.
    GaussianPauli,
    /// Mean matrix plus GUE noise: diagonal variance σ², off-diagonal real and
    /// imaginary parts σ²/2 each.
    GaussianGue,
    /// Mean matrix plus uniform noise with the same per-parameter variances as
    /// `GaussianGue`; bounded support. No analytic mean is offered.
    CustomBounded,
}

/// Description of the matrix-pdf `ϱ_t(H)`.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub dim: usize,
    pub kind: EnsembleKind,
    pub mean_profile: MeanProfile,
    /// Noise scale σ (1/time).
    pub sigma: f64,
    /// Frobenius-norm cap; draws outside the ball are rejected and redrawn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_radius: Option<f64>,
}

impl EnsembleSpec {
    pub fn gaussian_pauli(mean_profile: MeanProfile, sigma: f64) -> Self {
        EnsembleSpec {
            dim: 2,
            kind: EnsembleKind::GaussianPauli,
            mean_profile,
            sigma,
            truncation_radius: None,
        }
    }

    pub fn with_truncation(mut self, radius: f64) -> Self {
        self.truncation_radius = Some(radius);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidEnsemble("dim must be >= 1".into()));
        }
        if self.kind == EnsembleKind::GaussianPauli && self.dim != 2 {
            return Err(Error::InvalidEnsemble(format!(
                "gaussian-pauli requires dim = 2, got {}",
                self.dim
            )));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidEnsemble(format!(
                "sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        if let Some(r) = self.truncation_radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidEnsemble(format!(
                    "truncation_radius must be > 0, got {r}"
                )));
            }
        }
        self.mean_profile.validate()
    }

    /// True when `ϱ_t(−H) = ϱ_t(H)` for every t: zero mean, untruncated or
    /// truncated to a centered ball.
    pub fn is_even(&self) -> bool {
        self.mean_profile.mu == 0.0
    }

    /// Location parameter of the pdf at time `t` (the mean for untruncated
    /// Gaussians).
    fn center(&self, t: f64) -> ComplexMatrix {
        let [mx, my, mz] = mean_vector(&self.mean_profile, t);
        let qubit = HermitianMatrix::from_pauli(0.0, [0.5 * mx, 0.5 * my, 0.5 * mz]).into_matrix();
        if self.dim == 2 {
            return qubit;
        }
        let mut m = ComplexMatrix::zeros(self.dim);
        let block = self.dim.min(2);
        for r in 0..block {
            for c in 0..block {
                m[(r, c)] = qubit[(r, c)];
            }
        }
        m
    }
}

/// One counter-based random stream: `(seed, stream_index)` fully determines
/// the sequence, independent of which worker consumes it.
#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        RngStream { seed, stream_index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// A seed for an independent family of streams, keyed by `label`.
    pub fn derive_seed(seed: u64, label: u64) -> u64 {
        splitmix64(seed ^ splitmix64(label.wrapping_add(0x5151_5151)))
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws `H ~ ϱ_t`.
pub fn sample_hamiltonian<R: Rng + ?Sized>(spec: &EnsembleSpec, t: f64, rng: &mut R) -> Result<HermitianMatrix> {
    let Some(radius) = spec.truncation_radius else {
        return Ok(draw_once(spec, t, rng));
    };
    for _ in 0..TRUNCATION_WINDOW {
        let h = draw_once(spec, t, rng);
        if h.frobenius_norm() <= radius {
            return Ok(h);
        }
    }
    Err(Error::TruncationRejected {
        min_rate: TRUNCATION_MIN_RATE,
        window: TRUNCATION_WINDOW,
    })
}

fn draw_once<R: Rng + ?Sized>(spec: &EnsembleSpec, t: f64, rng: &mut R) -> HermitianMatrix {
    let sigma = spec.sigma;
    match spec.kind {
        EnsembleKind::GaussianPauli => {
            let mu = mean_vector(&spec.mean_profile, t);
            let mut alpha = [0.0; 3];
            for (a, m) in alpha.iter_mut().zip(mu) {
                let z: f64 = StandardNormal.sample(rng);
                *a = m + sigma * z;
            }
            HermitianMatrix::from_pauli(0.0, [0.5 * alpha[0], 0.5 * alpha[1], 0.5 * alpha[2]])
        }
        EnsembleKind::GaussianGue => add_noise(spec.center(t), sigma, rng, |rng| StandardNormal.sample(rng)),
        EnsembleKind::CustomBounded => {
            let half_width = 3f64.sqrt();
            add_noise(spec.center(t), sigma, rng, |rng| {
                rng.random_range(-half_width..half_width)
            })
        }
    }
}

/// Adds unit-variance noise `draw` scaled so that diagonal entries get
/// variance σ² and off-diagonal real/imaginary parts σ²/2.
fn add_noise<R: Rng + ?Sized>(
    mut m: ComplexMatrix,
    sigma: f64,
    rng: &mut R,
    draw: impl Fn(&mut R) -> f64,
) -> HermitianMatrix {
    let n = m.dim();
    let off = sigma / 2f64.sqrt();
    for r in 0..n {
        m[(r, r)].re += sigma * draw(rng);
        for c in (r + 1)..n {
            let re = off * draw(rng);
            let im = off * draw(rng);
            m[(r, c)].re += re;
            m[(r, c)].im += im;
            m[(c, r)] = m[(r, c)].conj();
        }
    }
    HermitianMatrix::hermitize(m)
}

/// Analytic `⟨H(t)⟩` for untruncated Gaussian ensembles.
pub fn mean_hamiltonian(spec: &EnsembleSpec, t: f64) -> Result<HermitianMatrix> {
    if spec.kind == EnsembleKind::CustomBounded {
        return Err(Error::NoAnalyticMean("custom-bounded ensemble".into()));
    }
    if spec.truncation_radius.is_some() {
        return Err(Error::NoAnalyticMean("truncation shifts the moments".into()));
    }
    Ok(HermitianMatrix::hermitize(spec.center(t)))
}

/// Monte Carlo estimate of `⟨H(t)⟩`, for ensembles without an analytic mean.
pub fn estimate_mean_hamiltonian(
    spec: &EnsembleSpec,
    t: f64,
    draws: usize,
    stream: RngStream,
) -> Result<HermitianMatrix> {
    if draws == 0 {
        return Err(Error::InsufficientSamples { needed: 1, have: 0 });
    }
    let mut rng = stream.rng();
    let mut acc = ComplexMatrix::zeros(spec.dim);
    for _ in 0..draws {
        acc = &acc + sample_hamiltonian(spec, t, &mut rng)?.as_matrix();
    }
    Ok(HermitianMatrix::hermitize(acc.scale_real(1.0 / draws as f64)))
}

/// Whether `[⟨H(t_a)⟩, ⟨H(t_b)⟩]` vanishes (to `tol`) for every pair on a
/// uniform grid of `grid_points` times in `[0, τ)`.
pub fn is_statistically_commuting(spec: &EnsembleSpec, tau: f64, grid_points: usize, tol: f64) -> Result<bool> {
    if grid_points < 2 {
        return Err(Error::InvalidProtocol(
            "statistical commutation needs >= 2 grid points".into(),
        ));
    }
    let means = (0..grid_points)
        .map(|a| mean_hamiltonian(spec, a as f64 * tau / grid_points as f64))
        .collect::<Result<Vec<_>>>()?;
    for (a, ha) in means.iter().enumerate() {
        for hb in &means[a + 1..] {
            if commutator(ha.as_matrix(), hb.as_matrix())?.frobenius_norm() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
