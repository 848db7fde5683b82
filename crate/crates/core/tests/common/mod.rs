//! Test-only oracles that do not go through the simulator's eigensolver or
//! sampler.
//!
//! `ExactQubit` computes `⟨U_N⟩` and `⟨U_N ⊗ Ū_N⟩` for the Gaussian-Pauli
//! ensemble by Gauss–Hermite quadrature over `α⃗` on each step, with
//! closed-form Pauli exponentials, and multiplies the per-step averages in
//! time order.

#![allow(dead_code)]

use num_complex::Complex64;
use std::f64::consts::PI;

pub type C2 = [[Complex64; 2]; 2];
pub type C4 = [[Complex64; 4]; 4];

const Z: Complex64 = Complex64::new(0.0, 0.0);
const O: Complex64 = Complex64::new(1.0, 0.0);

/// Probabilists' Gauss–Hermite rule (weight `e^{−x²/2}/√(2π)`), via Newton
/// iteration on the orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut z = 0.0f64;
    let pim4 = PI.powf(-0.25);
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-0.16667),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * out[0].0,
            3 => 1.91 * z - 0.91 * out[1].0,
            _ => 2.0 * z - out[i - 2].0,
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j as f64 + 1.0)).sqrt() * p2 - (j as f64 / (j as f64 + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 {
                break;
            }
        }
        out.push((z, 2.0 / (pp * pp)));
    }
    // physicists' nodes/weights -> probabilists'
    let mut rule: Vec<(f64, f64)> = Vec::with_capacity(n);
    for &(x, w) in &out {
        rule.push((x * 2f64.sqrt(), w / PI.sqrt()));
        if x != 0.0 && rule.len() < n {
            rule.push((-x * 2f64.sqrt(), w / PI.sqrt()));
        }
    }
    rule.truncate(n);
    rule
}

pub fn mul2(a: &C2, b: &C2) -> C2 {
    let mut o = [[Z; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            o[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    o
}

pub fn mul4(a: &C4, b: &C4) -> C4 {
    let mut o = [[Z; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            for k in 0..4 {
                o[r][c] += a[r][k] * b[k][c];
            }
        }
    }
    o
}

pub fn id2() -> C2 {
    [[O, Z], [Z, O]]
}

pub fn id4() -> C4 {
    let mut o = [[Z; 4]; 4];
    for (k, row) in o.iter_mut().enumerate() {
        row[k] = O;
    }
    o
}

/// `exp(−i (½ a⃗·σ⃗) dt)` in closed form.
pub fn pauli_step(a: [f64; 3], dt: f64) -> C2 {
    let norm = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    let theta = 0.5 * norm * dt;
    let (s, c) = theta.sin_cos();
    let (nx, ny, nz) = if norm > 0.0 {
        (a[0] / norm, a[1] / norm, a[2] / norm)
    } else {
        (0.0, 0.0, 0.0)
    };
    // cos θ − i sin θ (n·σ)
    [
        [Complex64::new(c, -s * nz), Complex64::new(-s * ny, -s * nx)],
        [Complex64::new(s * ny, -s * nx), Complex64::new(c, s * nz)],
    ]
}

pub fn frob2(a: &C2, b: &C2) -> f64 {
    let mut acc = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            acc += (a[r][c] - b[r][c]).norm_sqr();
        }
    }
    acc.sqrt()
}

#[derive(Clone, Copy, Debug)]
pub enum Profile {
    Iid,
    Commuting,
    Noncommuting,
}

impl Profile {
    pub fn mean(&self, mu: f64, omega: f64, t: f64) -> [f64; 3] {
        match self {
            Profile::Iid => [mu, 0.0, 0.0],
            Profile::Commuting => [mu * (omega * t).sin(), 0.0, 0.0],
            Profile::Noncommuting => [mu * (omega * t).sin(), mu * (omega * t).cos(), 0.0],
        }
    }
}

pub struct ExactQubit {
    rule: Vec<(f64, f64)>,
}

pub struct ExactMoments {
    pub mean: C2,
    /// `E[U_ab Ū_cd]` indexed `[2a + c][2b + d]`.
    pub second: C4,
    pub reference: C2,
}

impl ExactMoments {
    pub fn s_n(&self) -> f64 {
        let mut acc = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let v = self.second[3 * a][3 * b].re - self.mean[a][b].norm_sqr();
                acc += v * v;
            }
        }
        acc.sqrt()
    }

    pub fn d_n(&self) -> f64 {
        frob2(&self.mean, &self.reference)
    }
}

impl ExactQubit {
    pub fn new(nodes: usize) -> Self {
        ExactQubit {
            rule: gauss_hermite(nodes),
        }
    }

    /// `(E[V], E[V ⊗ V̄])` for one step with `α⃗ ~ Normal(m⃗, σ²·1₃)`.
    pub fn step(&self, m: [f64; 3], sigma: f64, dt: f64) -> (C2, C4) {
        let mut ev = [[Z; 2]; 2];
        let mut t = [[Z; 4]; 4];
        for &(x, wx) in &self.rule {
            for &(y, wy) in &self.rule {
                for &(z, wz) in &self.rule {
                    let w = wx * wy * wz;
                    let v = pauli_step([m[0] + sigma * x, m[1] + sigma * y, m[2] + sigma * z], dt);
                    for a in 0..2 {
                        for b in 0..2 {
                            ev[a][b] += v[a][b] * w;
                            for c in 0..2 {
                                for d in 0..2 {
                                    t[2 * a + c][2 * b + d] += v[a][b] * v[c][d].conj() * w;
                                }
                            }
                        }
                    }
                }
            }
        }
        (ev, t)
    }

    pub fn moments(&self, profile: Profile, mu: f64, omega: f64, sigma: f64, tau: f64, n: usize) -> ExactMoments {
        let dt = tau / n as f64;
        let mut mean = id2();
        let mut second = id4();
        let mut reference = id2();
        let mut cached: Option<(C2, C4)> = None;
        for k in 0..n {
            let m = profile.mean(mu, omega, k as f64 * dt);
            let (ev, t) = match (profile, &cached) {
                (Profile::Iid, Some(c)) => *c,
                _ => {
                    let s = self.step(m, sigma, dt);
                    cached = Some(s);
                    s
                }
            };
            mean = mul2(&ev, &mean);
            second = mul4(&t, &second);
            reference = mul2(&pauli_step(m, dt), &reference);
        }
        ExactMoments {
            mean,
            second,
            reference,
        }
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0.ln()).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0.ln() - mx) * (p.1.ln() - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0.ln() - mx).powi(2)).sum();
    sxy / sxx
}
