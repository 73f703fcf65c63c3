//! Decoy-state bounds and finite-key secret key length.
//!
//! Bounds follow the two-decoy (μ > ν > vacuum) finite-key analysis of
//! Lim, Curty, Walenta, Xu, Zbinden, PRA 89, 022307 (2014): Hoeffding
//! deviations on per-intensity counts and ε_sec split over 21 events.

use crate::detection::{DetectorConfig, Intensity, Tallies};
use crate::error::{Error, Result};
use crate::reconcile::binary_entropy;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecurityParams {
    pub eps_cor: f64,
    pub eps_sec: f64,
}

impl Default for SecurityParams {
    fn default() -> Self {
        Self {
            eps_cor: 1e-15,
            eps_sec: 1e-9,
        }
    }
}

impl SecurityParams {
    pub fn validate(&self) -> Result<()> {
        for (k, v) in [("security.eps_cor", self.eps_cor), ("security.eps_sec", self.eps_sec)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidConfig(format!("{k} must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }

    /// log₂(2/ε_cor) + 6·log₂(21/ε_sec).
    pub fn penalty_bits(&self) -> f64 {
        (2.0 / self.eps_cor).log2() + 6.0 * (21.0 / self.eps_sec).log2()
    }
}

/// Counts for one basis, indexed by [`Intensity::index`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BasisCounts {
    pub sent: [f64; 3],
    pub clicks: [f64; 3],
    pub errors: [f64; 3],
}

impl BasisCounts {
    pub fn total_clicks(&self) -> f64 {
        self.clicks.iter().sum()
    }

    pub fn total_errors(&self) -> f64 {
        self.errors.iter().sum()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            sent: self.sent.map(|x| x * k),
            clicks: self.clicks.map(|x| x * k),
            errors: self.errors.map(|x| x * k),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DecoyObservations {
    pub z: BasisCounts,
    pub x: BasisCounts,
}

impl DecoyObservations {
    /// Uses detection tallies; `pulses` is the number of slots in the pass,
    /// split over bases and intensities by their choice probabilities.
    pub fn from_tallies(t: &Tallies, pulses: u64, d: &DetectorConfig<f64>) -> Self {
        let f = |v: [u64; 3]| v.map(|x| x as f64);
        let sent = |pb: f64| Intensity::ALL.map(|a| pulses as f64 * pb * d.probability(a));
        Self {
            z: BasisCounts {
                sent: sent(d.p_z * d.p_z),
                clicks: f(t.z_clicks),
                errors: f(t.z_errors),
            },
            x: BasisCounts {
                sent: sent((1.0 - d.p_z) * (1.0 - d.p_z)),
                clicks: f(t.x_clicks),
                errors: f(t.x_errors),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        for b in [&self.z, &self.x] {
            for k in 0..3 {
                let (s, c, e) = (b.sent[k], b.clicks[k], b.errors[k]);
                if !(e >= 0.0 && e <= c && c <= s) {
                    return Err(Error::InvalidConfig(format!(
                        "decoy counts must satisfy 0 <= errors <= clicks <= sent, got {e}, {c}, {s}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Intensities (μ1 > μ2 > μ3 ≥ 0) and their choice probabilities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoySetup {
    pub intensity: [f64; 3],
    pub probability: [f64; 3],
}

impl DecoySetup {
    pub fn from_detector(d: &DetectorConfig<f64>) -> Self {
        Self {
            intensity: Intensity::ALL.map(|a| d.mean_photons(a)),
            probability: Intensity::ALL.map(|a| d.probability(a)),
        }
    }

    /// τ_n = Σ_k p_k e^{−k} kⁿ/n!.
    pub fn tau(&self, n: i32) -> f64 {
        let fact: f64 = (1..=n).map(|i| i as f64).product();
        (0..3)
            .map(|i| {
                let k = self.intensity[i];
                self.probability[i] * (-k).exp() * k.powi(n) / fact
            })
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoyBounds {
    pub s_z0_lower: f64,
    pub s_z1_lower: f64,
    pub s_x1_lower: f64,
    pub v_x1_upper: f64,
    pub phi_x1_upper: f64,
    /// Set when a bound had to be clamped (statistics too small).
    pub clamped: bool,
}

impl DecoyBounds {
    /// Bounds for the part of the sifted key that survives reconciliation.
    /// A removed vacuum-intensity bit can only be a zero-photon event; any
    /// other removed bit is at most one event of either kind.
    pub fn trimmed(&self, removed_vacuum: f64, removed_other: f64) -> Self {
        Self {
            s_z0_lower: (self.s_z0_lower - removed_vacuum - removed_other).max(0.0),
            s_z1_lower: (self.s_z1_lower - removed_other).max(0.0),
            ..*self
        }
    }
}

/// n^±_k = (e^k/p_k)(n_k ± δ), δ = sqrt(n/2·ln(21/ε_sec)).
fn deviated(c: &[f64; 3], total: f64, s: &DecoySetup, eps_sec: f64) -> ([f64; 3], [f64; 3]) {
    let delta = (total / 2.0 * (21.0 / eps_sec).ln()).sqrt();
    let f = |sign: f64| {
        [0, 1, 2].map(|i| {
            let w = s.intensity[i].exp() / s.probability[i];
            if s.probability[i] > 0.0 {
                w * (c[i] + sign * delta)
            } else {
                0.0
            }
        })
    };
    (f(-1.0), f(1.0))
}

fn vacuum_and_single(b: &BasisCounts, s: &DecoySetup, eps_sec: f64) -> (f64, f64) {
    let [m1, m2, m3] = s.intensity;
    let (lo, hi) = deviated(&b.clicks, b.total_clicks(), s, eps_sec);
    let (t0, t1) = (s.tau(0), s.tau(1));
    let s0 = t0 * (m2 * lo[2] - m3 * hi[1]) / (m2 - m3);
    let s1 = t1 * m1 / (m1 * (m2 - m3) - m2 * m2 + m3 * m3)
        * (lo[1] - hi[2] - (m2 * m2 - m3 * m3) / (m1 * m1) * (hi[0] - s0 / t0));
    (s0, s1)
}

/// γ(a, b, c, d) from the random-sampling bound between bases.
pub fn sampling_deviation(a: f64, b: f64, c: f64, d: f64) -> f64 {
    if !(b > 0.0 && b < 1.0 && c > 0.0 && d > 0.0) {
        return 0.0;
    }
    let arg = (c + d) / (c * d * (1.0 - b) * b) * 441.0 / (a * a);
    let v = (c + d) * (1.0 - b) * b / (c * d * std::f64::consts::LN_2) * arg.log2();
    v.max(0.0).sqrt()
}

pub fn decoy_bounds(
    obs: &DecoyObservations,
    params: &SecurityParams,
    setup: &DecoySetup,
) -> DecoyBounds {
    let eps = params.eps_sec;
    let mut clamped = false;
    let mut clamp = |v: f64, hi: f64| {
        if !(v >= 0.0) {
            clamped = true;
            0.0
        } else if v > hi {
            clamped = true;
            hi
        } else {
            v
        }
    };
    let nz = obs.z.total_clicks();
    let nx = obs.x.total_clicks();
    let (z0, z1) = vacuum_and_single(&obs.z, setup, eps);
    let s_z0 = clamp(z0, nz);
    let s_z1 = clamp(z1, nz);
    let (_, x1) = vacuum_and_single(&obs.x, setup, eps);
    let s_x1 = clamp(x1, nx);
    let [_, m2, m3] = setup.intensity;
    let (lo, hi) = deviated(&obs.x.errors, obs.x.total_errors(), setup, eps);
    let v_x1 = clamp(setup.tau(1) * (hi[1] - lo[2]) / (m2 - m3), f64::INFINITY);
    let phi = if s_x1 > 0.0 {
        let b = v_x1 / s_x1;
        b + sampling_deviation(eps, b, s_z1, s_x1)
    } else {
        0.5
    };
    let phi = if phi > 0.5 {
        clamped = true;
        0.5
    } else {
        phi
    };
    DecoyBounds {
        s_z0_lower: s_z0,
        s_z1_lower: s_z1,
        s_x1_lower: s_x1,
        v_x1_upper: v_x1,
        phi_x1_upper: phi,
        clamped,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SklResult {
    pub s_z0_lower: f64,
    pub s_z1_lower: f64,
    pub phi_x1_upper: f64,
    pub leakage_bits: f64,
    pub penalty_bits: f64,
    /// Unclamped value of the key-length expression.
    pub raw_bits: f64,
    /// ℓ, clamped at 0.
    pub length_bits: f64,
}

/// ℓ = s_Z0 + s_Z1(1 − h₂(φ)) − λ_IR − log₂(2/ε_cor) − 6 log₂(21/ε_sec).
pub fn skl(b: &DecoyBounds, leakage_bits: f64, params: &SecurityParams) -> SklResult {
    let penalty = params.penalty_bits();
    let raw = b.s_z0_lower + b.s_z1_lower * (1.0 - binary_entropy(b.phi_x1_upper))
        - leakage_bits
        - penalty;
    SklResult {
        s_z0_lower: b.s_z0_lower,
        s_z1_lower: b.s_z1_lower,
        phi_x1_upper: b.phi_x1_upper,
        leakage_bits,
        penalty_bits: penalty,
        raw_bits: raw,
        length_bits: raw.max(0.0),
    }
}

/// 1 − h₂(φ_X) − h₂(φ_Z).
pub fn asymptotic_rate(phi_x: f64, phi_z: f64) -> f64 {
    1.0 - binary_entropy(phi_x) - binary_entropy(phi_z)
}

/// (Σ n_j h₂(φ_j), n·h₂(⟨φ⟩)) with ⟨φ⟩ the length-weighted mean.
pub fn blockwise_leakage_bound(blocks: &[(usize, f64)]) -> (f64, f64) {
    let n: f64 = blocks.iter().map(|b| b.0 as f64).sum();
    let per_block: f64 = blocks.iter().map(|&(k, p)| k as f64 * binary_entropy(p)).sum();
    if n == 0.0 {
        return (0.0, 0.0);
    }
    let mean = blocks.iter().map(|&(k, p)| k as f64 * p).sum::<f64>() / n;
    (per_block, n * binary_entropy(mean))
}
