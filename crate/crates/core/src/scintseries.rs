//! Scintillation time series: filtered Gaussian noise pushed through a
//! lognormal map, with filter and variance refreshed once per window.

use std::io::{Read, Write};

use num_complex::Complex;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Real;
use crate::turbulence::TurbulenceState;

pub const TRACE_MAGIC: [u8; 4] = *b"QSCN";
pub const TRACE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct ScintConfig<T> {
    pub sample_rate_hz: T,
    /// Filter memory; correlations beyond this lag are dropped.
    pub filter_memory_s: T,
    /// Interval between filter refreshes.
    pub update_interval_s: T,
    pub order: u32,
    pub seed: u64,
}

impl<T: Real> Default for ScintConfig<T> {
    fn default() -> Self {
        Self {
            sample_rate_hz: T::lit(40e3),
            filter_memory_s: T::lit(0.03),
            update_interval_s: T::one(),
            order: 4,
            seed: 0,
        }
    }
}

fn integral_count<T: Real>(x: T, key: &str) -> Result<usize> {
    let r = x.round();
    let tol = T::lit(1e-9) * x.abs().max(T::one());
    if !(x >= T::one()) || (x - r).abs() > tol {
        return Err(Error::InvalidConfig(format!(
            "{key}: product must be a positive integer, got {x}"
        )));
    }
    Ok(r.to_usize().unwrap_or(0))
}

impl<T: Real> ScintConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > T::zero()) || !self.sample_rate_hz.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "scint.sample_rate_hz must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        if self.order == 0 {
            return Err(Error::InvalidConfig("scint.order must be at least 1".into()));
        }
        if !(self.update_interval_s * self.sample_rate_hz >= T::one()) {
            return Err(Error::InvalidConfig(format!(
                "scint.update_interval_s must be at least one sample, got {}",
                self.update_interval_s
            )));
        }
        self.tap_count()?;
        self.window_len()?;
        Ok(())
    }

    /// n_max = R_sample·τ_corr_max.
    pub fn tap_count(&self) -> Result<usize> {
        integral_count(
            self.sample_rate_hz * self.filter_memory_s,
            "scint.filter_memory_s * scint.sample_rate_hz",
        )
    }

    /// Samples per filter-update window.
    pub fn window_len(&self) -> Result<usize> {
        integral_count(
            self.sample_rate_hz * self.update_interval_s,
            "scint.update_interval_s * scint.sample_rate_hz",
        )
    }

    /// Samples per second of pass time.
    pub fn samples_per_second(&self) -> Result<usize> {
        integral_count(self.sample_rate_hz, "scint.sample_rate_hz")
    }
}

/// Target magnitude |H(f)| = (1 + (f/f_G)^(2n))^(-1/2).
pub fn butterworth_magnitude<T: Real>(f: T, cutoff_hz: T, order: u32) -> T {
    let r = (f / cutoff_hz).abs().powi(2 * order as i32);
    (T::one() + r).sqrt().recip()
}

/// Sampled impulse response of the analog Butterworth low-pass, truncated
/// to `n_max` taps and scaled to unit energy (so unit-variance white noise
/// stays unit-variance after filtering).
pub fn filter_taps<T: Real>(cutoff_hz: T, scfg: &ScintConfig<T>) -> Result<Vec<T>> {
    let nyquist = scfg.sample_rate_hz / T::lit(2.0);
    if !(cutoff_hz > T::zero()) || cutoff_hz >= nyquist {
        return Err(Error::FilterCutoff {
            cutoff_hz: cutoff_hz.to_f64_lossy(),
            nyquist_hz: nyquist.to_f64_lossy(),
        });
    }
    let n_max = scfg.tap_count()?;
    let n = scfg.order as usize;
    let wc = T::TAU() * cutoff_hz;
    let poles: Vec<Complex<T>> = (0..n)
        .map(|k| {
            let th = T::PI() * T::from_count(2 * k + n + 1) / T::from_count(2 * n);
            Complex::from_polar(wc, th)
        })
        .collect();
    let gain = Complex::new(wc.powi(n as i32), T::zero());
    let residues: Vec<Complex<T>> = (0..n)
        .map(|k| {
            let mut den = Complex::new(T::one(), T::zero());
            for j in 0..n {
                if j != k {
                    den = den * (poles[k] - poles[j]);
                }
            }
            gain / den
        })
        .collect();
    let dt = scfg.sample_rate_hz.recip();
    let mut taps: Vec<T> = (0..n_max)
        .map(|i| {
            let t = T::from_count(i) * dt;
            poles
                .iter()
                .zip(&residues)
                .map(|(p, r)| (*r * (*p * t).exp()).re)
                .fold(T::zero(), |a, b| a + b)
        })
        .collect();
    let energy = taps.iter().fold(T::zero(), |a, &h| a + h * h);
    if !(energy > T::zero()) {
        return Err(Error::FilterCutoff {
            cutoff_hz: cutoff_hz.to_f64_lossy(),
            nyquist_hz: nyquist.to_f64_lossy(),
        });
    }
    let s = energy.sqrt().recip();
    for h in &mut taps {
        *h = *h * s;
    }
    Ok(taps)
}

/// |Σ h_k e^{-iωk}| at frequency `f`, normalized by the DC gain.
pub fn frequency_response<T: Real>(taps: &[T], f: T, sample_rate_hz: T) -> T {
    let w = T::TAU() * f / sample_rate_hz;
    let mut acc = Complex::new(T::zero(), T::zero());
    let mut dc = T::zero();
    for (k, &h) in taps.iter().enumerate() {
        acc = acc + Complex::from_polar(h, -w * T::from_count(k));
        dc = dc + h;
    }
    acc.norm() / dc.abs()
}

/// Gaussian-stage autocorrelation r(k) = Σ_j h_j h_{j+k} of unit-energy taps.
pub fn tap_autocorrelation<T: Real>(taps: &[T], lag: usize) -> T {
    if lag >= taps.len() {
        return T::zero();
    }
    taps.iter()
        .zip(&taps[lag..])
        .fold(T::zero(), |a, (&x, &y)| a + x * y)
}

/// F(v) = exp(vΣ − Σ²/2): unit-mean lognormal with variance e^{Σ²} − 1.
pub fn lognormal_transform<T: Real>(v: T, sigma2: T) -> T {
    (v * sigma2.sqrt() - sigma2 / T::lit(2.0)).exp()
}

/// Σ² = ln(1 + σ_scint²).
pub fn log_variance<T: Real>(psi: T) -> T {
    psi.ln_1p()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScintSeries<T> {
    pub sample_rate_hz: T,
    pub window_len: usize,
    pub samples: Vec<T>,
    /// Σ² per window.
    pub log_variance: Vec<T>,
    /// f_G per window.
    pub cutoff_hz: Vec<T>,
}

/// Per-window parameters for [`synthesize_windows`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowParams<T> {
    pub psi: T,
    pub cutoff_hz: T,
}

/// Synthesizes one sample per `1/R_sample` over the pass described by the
/// per-second turbulence states.
pub fn synthesize<T: Real>(
    states: &[TurbulenceState<T>],
    scfg: &ScintConfig<T>,
) -> Result<ScintSeries<T>> {
    scfg.validate()?;
    let per_s = scfg.samples_per_second()?;
    let total = states.len() * per_s;
    let wl = scfg.window_len()?;
    let n_windows = total.div_ceil(wl);
    let params: Vec<WindowParams<T>> = (0..n_windows)
        .map(|w| {
            let sec = (w * wl) / per_s;
            let st = &states[sec.min(states.len() - 1)];
            WindowParams {
                psi: st.psi,
                cutoff_hz: st.greenwood_hz,
            }
        })
        .collect();
    synthesize_windows(&params, total, scfg)
}

/// Synthesizes `total` samples with explicit per-window parameters.
/// Filter state carries across window boundaries.
pub fn synthesize_windows<T: Real>(
    params: &[WindowParams<T>],
    total: usize,
    scfg: &ScintConfig<T>,
) -> Result<ScintSeries<T>> {
    scfg.validate()?;
    let wl = scfg.window_len()?;
    let n_max = scfg.tap_count()?;
    if params.len() < total.div_ceil(wl) {
        return Err(Error::LengthMismatch {
            expected: total.div_ceil(wl),
            actual: params.len(),
        });
    }
    let mut gauss = GaussianSource::new(scfg.seed);
    let mut buf: Vec<T> = Vec::with_capacity(n_max - 1 + wl);
    buf.extend((0..n_max - 1).map(|_| gauss.next::<T>()));
    let mut samples = Vec::with_capacity(total);
    let mut out = vec![T::zero(); wl];
    let mut log_var = Vec::new();
    let mut cutoffs = Vec::new();
    let mut done = 0;
    for p in params {
        if done >= total {
            break;
        }
        let len = wl.min(total - done);
        let taps = filter_taps(p.cutoff_hz, scfg)?;
        let s2 = log_variance(p.psi);
        buf.truncate(n_max - 1);
        buf.extend((0..len).map(|_| gauss.next::<T>()));
        convolve_into(&taps, &buf, &mut out[..len]);
        samples.extend(out[..len].iter().map(|&v| lognormal_transform(v, s2)));
        let keep = buf.len() - (n_max - 1);
        buf.copy_within(keep.., 0);
        log_var.push(s2);
        cutoffs.push(p.cutoff_hz);
        done += len;
    }
    Ok(ScintSeries {
        sample_rate_hz: scfg.sample_rate_hz,
        window_len: wl,
        samples,
        log_variance: log_var,
        cutoff_hz: cutoffs,
    })
}

/// out[i] = Σ_j h[j]·x[n−1+i−j], summed in ascending j for every i.
pub fn convolve_into<T: Real>(taps: &[T], x: &[T], out: &mut [T]) {
    let n = taps.len();
    debug_assert!(x.len() + 1 >= n + out.len());
    out.fill(T::zero());
    for (j, &h) in taps.iter().enumerate() {
        let src = &x[n - 1 - j..n - 1 - j + out.len()];
        for (o, &u) in out.iter_mut().zip(src) {
            *o = *o + h * u;
        }
    }
}

/// Seeded standard-normal stream.
pub struct GaussianSource {
    rng: ChaCha8Rng,
}

impl GaussianSource {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: stream_rng(seed, Stream::Scintillation),
        }
    }

    pub fn next<T: Real>(&mut self) -> T {
        let v: f64 = StandardNormal.sample(&mut self.rng);
        T::lit(v)
    }
}

/// η(t_i) = η_static(⌊t_i⌋)·η_scint(t_i).
pub fn combine<T: Real>(eta_static: &[T], scint: &ScintSeries<T>) -> Result<Vec<T>> {
    let per_s = integral_count(scint.sample_rate_hz, "scint.sample_rate_hz")?;
    let expected = eta_static.len() * per_s;
    if scint.samples.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: scint.samples.len(),
        });
    }
    Ok(scint
        .samples
        .iter()
        .enumerate()
        .map(|(i, &s)| eta_static[i / per_s] * s)
        .collect())
}

pub fn write_trace<W: Write>(mut w: W, sample_rate_hz: u32, eta: &[f32]) -> Result<()> {
    let count = u32::try_from(eta.len())
        .map_err(|_| Error::Format(format!("trace too long: {} samples", eta.len())))?;
    w.write_all(&TRACE_MAGIC)?;
    w.write_all(&TRACE_VERSION.to_le_bytes())?;
    w.write_all(&sample_rate_hz.to_le_bytes())?;
    w.write_all(&count.to_le_bytes())?;
    let mut bytes = Vec::with_capacity(eta.len() * 4);
    for v in eta {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes)?;
    Ok(())
}

/// Returns (R_sample, samples).
pub fn read_trace<R: Read>(mut r: R) -> Result<(u32, Vec<f32>)> {
    let mut head = [0u8; 16];
    r.read_exact(&mut head)?;
    if head[..4] != TRACE_MAGIC {
        return Err(Error::Format("bad trace magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(head[i..i + 4].try_into().unwrap());
    if word(4) != TRACE_VERSION {
        return Err(Error::Format(format!("unsupported trace version {}", word(4))));
    }
    let rate = word(8);
    let count = word(12) as usize;
    let mut bytes = vec![0u8; count * 4];
    r.read_exact(&mut bytes)?;
    let v = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((rate, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(rate: f64, taps: usize) -> ScintConfig<f64> {
        ScintConfig {
            sample_rate_hz: rate,
            filter_memory_s: taps as f64 / rate,
            ..ScintConfig::default()
        }
    }

    #[test]
    fn default_tap_count() {
        assert_eq!(ScintConfig::<f64>::default().tap_count().unwrap(), 1200);
        assert_eq!(ScintConfig::<f64>::default().window_len().unwrap(), 40000);
    }

    #[test]
    fn non_integral_tap_count_rejected() {
        let mut c = ScintConfig::<f64>::default();
        c.filter_memory_s = 0.030_01;
        assert!(c.validate().is_err());
    }

    #[test]
    fn cutoff_above_nyquist_rejected() {
        let c = ScintConfig::<f64>::default();
        assert!(filter_taps(20e3, &c).is_err());
        assert!(filter_taps(0.0, &c).is_err());
        assert!(filter_taps(19e3, &c).is_ok());
    }

    #[test]
    fn taps_have_unit_energy() {
        let c = ScintConfig::<f64>::default();
        let h = filter_taps(60.0, &c).unwrap();
        assert_eq!(h.len(), 1200);
        let e: f64 = h.iter().map(|x| x * x).sum();
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn magnitude_within_two_percent() {
        for &(rate, taps, fg) in &[(40e3, 1200, 60.0), (40e3, 1200, 100.0), (800.0, 24, 60.0)] {
            let c = cfg(rate, taps);
            let h = filter_taps(fg, &c).unwrap();
            assert!((frequency_response(&h, 0.0, rate) - 1.0).abs() < 1e-12);
            let half = frequency_response(&h, fg, rate);
            assert!((half / std::f64::consts::FRAC_1_SQRT_2 - 1.0).abs() < 0.02);
            let steps = 400;
            for k in 0..=steps {
                let f = rate / 4.0 * k as f64 / steps as f64;
                let got = frequency_response(&h, f, rate);
                let want = butterworth_magnitude(f, fg, 4);
                assert!((got - want).abs() < 0.02, "rate {rate} fg {fg} f {f}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn f32_taps_track_f64() {
        let c64 = ScintConfig::<f64>::default();
        let c32 = ScintConfig::<f32>::default();
        let a = filter_taps(60.0, &c64).unwrap();
        let b = filter_taps(60.0f32, &c32).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - *y as f64).abs() < 1e-5);
        }
    }

    #[test]
    fn lognormal_identities() {
        assert_eq!(lognormal_transform(0.0, 0.4), (-0.2f64).exp());
        assert_eq!(lognormal_transform(1.3, 0.0), 1.0);
        assert!(lognormal_transform(-40.0, 2.0) > 0.0);
        let s2 = log_variance(0.3f64);
        assert!((s2.exp() - 1.0 - 0.3).abs() < 1e-14);
    }

    #[test]
    fn zero_psi_gives_unit_series() {
        let c = cfg(800.0, 24);
        let p = vec![
            WindowParams {
                psi: 0.0,
                cutoff_hz: 60.0
            };
            3
        ];
        let s = synthesize_windows(&p, 2400, &c).unwrap();
        assert_eq!(s.samples.len(), 2400);
        assert!(s.samples.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn convolution_matches_direct_bitwise() {
        let c = cfg(40e3, 1200);
        let h = filter_taps(80.0, &c).unwrap();
        let mut g = GaussianSource::new(3);
        let x: Vec<f64> = (0..1199 + 10_000).map(|_| g.next()).collect();
        let mut out = vec![0.0; 10_000];
        convolve_into(&h, &x, &mut out);
        for i in (0..10_000).step_by(97) {
            let mut acc = 0.0;
            for j in 0..1200 {
                acc += h[j] * x[1199 + i - j];
            }
            assert_eq!(acc.to_bits(), out[i].to_bits());
        }
    }

    #[test]
    fn combine_checks_lengths() {
        let s = ScintSeries {
            sample_rate_hz: 4.0,
            window_len: 4,
            samples: vec![1.0; 8],
            log_variance: vec![0.0; 2],
            cutoff_hz: vec![1.0; 2],
        };
        let eta = combine(&[0.5, 0.25], &s).unwrap();
        assert_eq!(eta, vec![0.5, 0.5, 0.5, 0.5, 0.25, 0.25, 0.25, 0.25]);
        assert!(combine(&[0.5], &s).is_err());
    }

    #[test]
    fn trace_round_trip() {
        let v = vec![1.0f32, 0.5, 3.25e-7];
        let mut bytes = Vec::new();
        write_trace(&mut bytes, 40000, &v).unwrap();
        assert_eq!(bytes.len(), 16 + 12);
        assert_eq!(&bytes[..4], b"QSCN");
        let (rate, back) = read_trace(&bytes[..]).unwrap();
        assert_eq!(rate, 40000);
        assert_eq!(back, v);
        bytes[0] = b'X';
        assert!(read_trace(&bytes[..]).is_err());
    }
}
