//! Decoy-state BB84 detection: Poisson click model, skip sampling over the
//! pulse grid with detector hold-off, and a-posteriori metadata assignment.

use std::io::{Read, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::open_unit;
use crate::scalar::Real;

pub const SIFTED_MAGIC: [u8; 4] = *b"QSFT";
pub const SIFTED_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Intensity {
    Signal = 0,
    Decoy = 1,
    Vacuum = 2,
}

impl Intensity {
    pub const ALL: [Intensity; 3] = [Intensity::Signal, Intensity::Decoy, Intensity::Vacuum];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Self::Signal),
            1 => Some(Self::Decoy),
            2 => Some(Self::Vacuum),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Z,
    X,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorConfig<T> {
    pub p_z: T,
    pub mu: T,
    pub nu: T,
    pub p_mu: T,
    pub p_nu: T,
    pub misalignment_deg: T,
    /// r_noise = R_noise/R_Tx.
    pub noise_per_slot: T,
    pub holdoff_s: T,
    pub seed: u64,
}

impl<T: Real> Default for DetectorConfig<T> {
    fn default() -> Self {
        Self {
            p_z: T::lit(0.85),
            mu: T::lit(0.59),
            nu: T::lit(0.21),
            p_mu: T::lit(0.80),
            p_nu: T::lit(0.14),
            misalignment_deg: T::lit(5.0),
            noise_per_slot: T::lit(3e-6),
            holdoff_s: T::lit(100e-9),
            seed: 0,
        }
    }
}

impl<T: Real> DetectorConfig<T> {
    pub fn p_vac(&self) -> T {
        T::one() - self.p_mu - self.p_nu
    }

    pub fn mean_photons(&self, a: Intensity) -> T {
        match a {
            Intensity::Signal => self.mu,
            Intensity::Decoy => self.nu,
            Intensity::Vacuum => T::zero(),
        }
    }

    pub fn probability(&self, a: Intensity) -> T {
        match a {
            Intensity::Signal => self.p_mu,
            Intensity::Decoy => self.p_nu,
            Intensity::Vacuum => self.p_vac(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, v: T, d: &str| {
            Err(Error::InvalidConfig(format!("detector.{k} = {v} must be {d}")))
        };
        let unit = |v: T| v >= T::zero() && v <= T::one();
        if !unit(self.p_z) {
            return bad("p_z", self.p_z, "in [0, 1]");
        }
        if !unit(self.p_mu) {
            return bad("p_mu", self.p_mu, "in [0, 1]");
        }
        if !unit(self.p_nu) {
            return bad("p_nu", self.p_nu, "in [0, 1]");
        }
        if self.p_vac() < -T::lit(1e-12) {
            return bad("p_nu", self.p_nu, "at most 1 - p_mu");
        }
        if !(self.nu > T::zero()) {
            return bad("nu", self.nu, "positive");
        }
        if !(self.mu > self.nu) {
            return bad("mu", self.mu, "greater than detector.nu");
        }
        if !(self.misalignment_deg >= T::zero() && self.misalignment_deg < T::lit(45.0)) {
            return bad("misalignment_deg", self.misalignment_deg, "in [0, 45)");
        }
        if !(self.noise_per_slot >= T::zero() && self.noise_per_slot.is_finite()) {
            return bad("noise_per_slot", self.noise_per_slot, "non-negative");
        }
        if !(self.holdoff_s >= T::zero() && self.holdoff_s.is_finite()) {
            return bad("holdoff_s", self.holdoff_s, "non-negative");
        }
        Ok(())
    }

    /// Hold-off in pulse slots, t_holdoff·R_Tx rounded to the nearest slot.
    pub fn holdoff_slots(&self, pulse_rate_hz: T) -> u64 {
        (self.holdoff_s * pulse_rate_hz).round().to_u64().unwrap_or(0)
    }
}

/// (τ✓, τ✗): mean photon numbers at the correct and wrong detector.
pub fn expected_counts<T: Real>(eta: T, alpha: T, d: &DetectorConfig<T>) -> (T, T) {
    let (s, c) = d.misalignment_deg.to_radians().sin_cos();
    let ea = eta * alpha;
    (ea * c * c + d.noise_per_slot, ea * s * s + d.noise_per_slot)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClickStats<T> {
    pub p_correct: T,
    pub p_wrong: T,
    pub p_click: T,
    pub qber: T,
}

/// Click probability and QBER with double clicks assigned at random.
pub fn click_and_qber<T: Real>(eta: T, alpha: T, d: &DetectorConfig<T>) -> ClickStats<T> {
    let (tc, tw) = expected_counts(eta, alpha, d);
    let pc = -(-tc).exp_m1();
    let pw = -(-tw).exp_m1();
    let half = T::lit(0.5);
    // Split p_click into correct and wrong outcomes, double clicks shared.
    let right = pc * (T::one() - half * pw);
    let wrong = pw * (T::one() - half * pc);
    let p_click = right + wrong;
    let qber = if p_click > T::zero() {
        wrong / p_click
    } else {
        half
    };
    ClickStats {
        p_correct: pc,
        p_wrong: pw,
        p_click,
        qber,
    }
}

/// Per-intensity statistics for one channel window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowStats<T> {
    pub by_intensity: [ClickStats<T>; 3],
    /// Σ_α p_α·p(click|α).
    pub p_click: T,
}

impl<T: Real> WindowStats<T> {
    pub fn new(eta: T, d: &DetectorConfig<T>) -> Self {
        let by_intensity = Intensity::ALL.map(|a| click_and_qber(eta, d.mean_photons(a), d));
        let p_click = Intensity::ALL
            .iter()
            .fold(T::zero(), |s, &a| s + d.probability(a) * by_intensity[a.index()].p_click);
        Self {
            by_intensity,
            p_click,
        }
    }

    /// p(α | click) ∝ p_α·p(click|α).
    pub fn posterior(&self, d: &DetectorConfig<T>) -> [T; 3] {
        let w = Intensity::ALL.map(|a| d.probability(a) * self.by_intensity[a.index()].p_click);
        let s = w[0] + w[1] + w[2];
        if s > T::zero() {
            w.map(|x| x / s)
        } else {
            Intensity::ALL.map(|a| d.probability(a))
        }
    }
}

/// Marginal per-slot click probability of each channel window.
pub fn window_click_probabilities<T: Real>(eta: &[T], d: &DetectorConfig<T>) -> Vec<T> {
    eta.iter().map(|&e| WindowStats::new(e, d).p_click).collect()
}

/// Number of failures before the first success of a Bernoulli(p) sequence.
pub fn geometric_skip<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    let g = (open_unit(rng).ln() / (-p).ln_1p()).floor();
    if g >= u64::MAX as f64 {
        u64::MAX
    } else {
        g as u64
    }
}

/// Exact sampling of per-slot Bernoulli clicks with window-constant
/// probabilities `p_click` over windows of `n_window` slots. After a click in
/// slot c the next slot that can click is c + n_holdoff (n_holdoff ≥ 1).
pub fn sample_clicks<R: Rng + ?Sized>(
    p_click: &[f64],
    n_window: u64,
    n_holdoff: u64,
    rng: &mut R,
) -> Vec<u64> {
    assert!(n_window > 0);
    let n_holdoff = n_holdoff.max(1);
    let end = p_click.len() as u64 * n_window;
    let mut clicks = Vec::new();
    let mut next = 0u64;
    while next < end {
        let w = next / n_window;
        let p = p_click[w as usize];
        let window_end = (w + 1) * n_window;
        if !(p > 0.0) {
            next = window_end;
            continue;
        }
        // Memorylessness lets the skip restart at the window edge.
        let cand = next.saturating_add(geometric_skip(p, rng));
        if cand < window_end {
            clicks.push(cand);
            next = cand + n_holdoff;
        } else {
            next = window_end;
        }
    }
    clicks
}

/// Parameter-estimation counts per basis and intensity (indexed by
/// [`Intensity::index`]).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tallies {
    pub z_clicks: [u64; 3],
    pub z_errors: [u64; 3],
    pub x_clicks: [u64; 3],
    pub x_errors: [u64; 3],
    /// Clicks dropped at sifting because the bases differed.
    pub mixed: u64,
}

/// One both-X event kept for parameter estimation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XEvent {
    pub slot: u64,
    pub intensity: Intensity,
    pub error: bool,
    pub qber: f32,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SiftedData {
    pub slot: Vec<u64>,
    pub intensity: Vec<u8>,
    pub alice: Vec<u8>,
    pub error: Vec<u8>,
    pub qber: Vec<f32>,
    pub x_events: Vec<XEvent>,
    pub tallies: Tallies,
}

impl SiftedData {
    pub fn len(&self) -> usize {
        self.alice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice.is_empty()
    }

    /// z_B = z_A ⊕ e.
    pub fn bob(&self) -> Vec<u8> {
        self.alice.iter().zip(&self.error).map(|(a, e)| a ^ e).collect()
    }

    pub fn vacuum_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let v = self
            .intensity
            .iter()
            .filter(|&&i| i == Intensity::Vacuum as u8)
            .count();
        v as f64 / self.len() as f64
    }

    pub fn mean_qber(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.qber.iter().map(|&q| q as f64).sum::<f64>() / self.len() as f64
    }

    fn push(&mut self, slot: u64, a: Intensity, bit: u8, err: u8, q: f32) {
        self.slot.push(slot);
        self.intensity.push(a as u8);
        self.alice.push(bit);
        self.error.push(err);
        self.qber.push(q);
    }

    /// Binary form: magic, version u32, count u64, then per bit
    /// (slot u64, intensity u8, alice u8, error u8, q f32), little endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let mut out = Vec::with_capacity(16 + 15 * self.len());
        out.extend_from_slice(&SIFTED_MAGIC);
        out.extend_from_slice(&SIFTED_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for i in 0..self.len() {
            out.extend_from_slice(&self.slot[i].to_le_bytes());
            out.push(self.intensity[i]);
            out.push(self.alice[i]);
            out.push(self.error[i]);
            out.extend_from_slice(&self.qber[i].to_le_bytes());
        }
        w.write_all(&out)?;
        Ok(())
    }

    /// Reads the sifted bits written by [`SiftedData::write_binary`]. X events
    /// and tallies are not part of this format.
    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 16];
        r.read_exact(&mut head)?;
        if head[..4] != SIFTED_MAGIC {
            return Err(Error::Format("bad sifted-data magic".into()));
        }
        let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
        if version != SIFTED_VERSION {
            return Err(Error::Format(format!("unsupported sifted-data version {version}")));
        }
        let n = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
        let mut body = vec![0u8; n * 15];
        r.read_exact(&mut body)?;
        let mut s = SiftedData::default();
        for rec in body.chunks_exact(15) {
            let a = Intensity::from_u8(rec[8])
                .ok_or_else(|| Error::Format(format!("bad intensity label {}", rec[8])))?;
            if rec[9] > 1 || rec[10] > 1 {
                return Err(Error::Format("bit fields must be 0 or 1".into()));
            }
            s.push(
                u64::from_le_bytes(rec[..8].try_into().unwrap()),
                a,
                rec[9],
                rec[10],
                f32::from_le_bytes(rec[11..15].try_into().unwrap()),
            );
        }
        Ok(s)
    }
}

/// Draws bases, intensity, bit and error for every click. `eta` holds the
/// channel efficiency of each window of `n_window` slots.
pub fn assign_metadata<R: Rng + ?Sized>(
    clicks: &[u64],
    eta: &[f64],
    n_window: u64,
    d: &DetectorConfig<f64>,
    rng: &mut R,
) -> SiftedData {
    let zz = d.p_z * d.p_z;
    let xx = (1.0 - d.p_z) * (1.0 - d.p_z);
    let mut out = SiftedData::default();
    let mut cached: Option<(usize, WindowStats<f64>, [f64; 3])> = None;
    for &slot in clicks {
        let w = (slot / n_window) as usize;
        let (stats, post) = match &cached {
            Some((cw, s, p)) if *cw == w => (*s, *p),
            _ => {
                let s = WindowStats::new(eta[w], d);
                let p = s.posterior(d);
                cached = Some((w, s, p));
                (s, p)
            }
        };
        let u: f64 = rng.random();
        let basis = if u < zz {
            Some(Basis::Z)
        } else if u < zz + xx {
            Some(Basis::X)
        } else {
            None
        };
        let v: f64 = rng.random();
        let a = if v < post[0] {
            Intensity::Signal
        } else if v < post[0] + post[1] {
            Intensity::Decoy
        } else {
            Intensity::Vacuum
        };
        let bit = rng.random::<bool>() as u8;
        let q = stats.by_intensity[a.index()].qber;
        let err = (rng.random::<f64>() < q) as u8;
        let k = a.index();
        match basis {
            Some(Basis::Z) => {
                out.tallies.z_clicks[k] += 1;
                out.tallies.z_errors[k] += err as u64;
                out.push(slot, a, bit, err, q as f32);
            }
            Some(Basis::X) => {
                out.tallies.x_clicks[k] += 1;
                out.tallies.x_errors[k] += err as u64;
                out.x_events.push(XEvent {
                    slot,
                    intensity: a,
                    error: err == 1,
                    qber: q as f32,
                });
            }
            None => out.tallies.mixed += 1,
        }
    }
    out
}

/// One row of the per-second summary.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondSummary {
    pub t_s: u64,
    pub clicks: u64,
    pub sifted_z: u64,
    pub mean_qber: f64,
}

pub fn per_second_summary(
    clicks: &[u64],
    sifted: &SiftedData,
    pulse_rate: u64,
    seconds: usize,
) -> Vec<SecondSummary> {
    let mut rows: Vec<SecondSummary> = (0..seconds)
        .map(|t| SecondSummary {
            t_s: t as u64,
            clicks: 0,
            sifted_z: 0,
            mean_qber: 0.0,
        })
        .collect();
    for &c in clicks {
        if let Some(r) = rows.get_mut((c / pulse_rate) as usize) {
            r.clicks += 1;
        }
    }
    for (i, &s) in sifted.slot.iter().enumerate() {
        if let Some(r) = rows.get_mut((s / pulse_rate) as usize) {
            r.sifted_z += 1;
            r.mean_qber += sifted.qber[i] as f64;
        }
    }
    for r in &mut rows {
        if r.sifted_z > 0 {
            r.mean_qber /= r.sifted_z as f64;
        }
    }
    rows
}
