//! Turbulence statistics along the downlink: refractive-index structure
//! profile, Rytov variance, aperture averaging, extended-Rytov power
//! scintillation index and the slew-driven Greenwood frequency.
//!
//! All altitude integrals are independent of the zenith angle, so they are
//! evaluated once into [`TurbulenceMoments`]; per-second states then follow
//! in closed form.

use crate::error::{Error, Result};
use crate::passlink::{zenith_cos, PassConfig, PassPoint, QUAD_REL_TOL};
use crate::quad;
use crate::scalar::Real;

/// Modified Hufnagel-Valley profile parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbulenceProfile<T> {
    /// Effective high-altitude wind speed (m/s).
    pub wind_mps: T,
    /// Ground-level structure constant, m^(−2/3).
    pub ground_cn2: T,
    /// Boundary-layer correction for an elevated site.
    pub boundary_factor: T,
    pub ogs_altitude_m: T,
}

impl<T: Real> Default for TurbulenceProfile<T> {
    fn default() -> Self {
        Self {
            wind_mps: T::lit(21.0),
            ground_cn2: T::lit(1.7e-14),
            boundary_factor: T::lit(0.93),
            ogs_altitude_m: T::lit(602.0),
        }
    }
}

impl<T: Real> TurbulenceProfile<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.wind_mps > T::zero()) {
            return Err(Error::InvalidConfig("turbulence.wind_mps must be > 0".into()));
        }
        if !(self.ground_cn2 > T::zero()) {
            return Err(Error::InvalidConfig("turbulence.ground_cn2 must be > 0".into()));
        }
        if !(self.boundary_factor > T::zero() && self.boundary_factor <= T::one()) {
            return Err(Error::InvalidConfig("turbulence.boundary_factor must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// Structure constant without the domain check, for use inside integrands.
    #[inline]
    fn cn2_unchecked(&self, h: T) -> T {
        let upper = T::lit(0.00594)
            * (self.wind_mps / T::lit(27.0)).powi(2)
            * (h * T::lit(1e-5)).powi(10)
            * (-h / T::lit(1000.0)).exp();
        let mid = T::lit(2.7e-16) * (-h / T::lit(1500.0)).exp();
        let ground = self.ground_cn2
            * self.boundary_factor
            * self.boundary_factor
            * (-(h - self.ogs_altitude_m) / T::lit(100.0)).exp();
        upper + mid + ground
    }
}

/// Refractive-index structure constant `Cn²(h)` in m^(−2/3).
pub fn cn2<T: Real>(h: T, profile: &TurbulenceProfile<T>) -> Result<T> {
    if !(h >= profile.ogs_altitude_m) {
        return Err(Error::OutOfDomain {
            what: "altitude_m",
            value: h.to_f64_lossy(),
            domain: ">= ogs altitude",
        });
    }
    Ok(profile.cn2_unchecked(h))
}

/// Zenith-independent altitude integrals of the profile over `[h_OGS, h_sat]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbulenceMoments<T> {
    /// `∫ Cn²(h)·(h − h_OGS)^(5/6) dh`
    pub rytov: T,
    /// `∫ Cn²(h)·h² dh`
    pub second: T,
    /// `∫ Cn²(h)·h^(5/6) dh`
    pub five_sixths: T,
    /// `∫ Cn²(h)·((h − h_OGS)/(h_sat − h_OGS))^(5/3) dh`; multiply by
    /// `v_perp^(5/3)` for the pseudo-wind moment.
    pub slew: T,
}

/// Altitudes at which the integrands change character.
pub fn altitude_breaks<T: Real>(ogs_altitude_m: T, sat_altitude_m: T) -> Vec<T> {
    let mut breaks = vec![ogs_altitude_m];
    for offset in [100.0, 300.0, 1000.0, 3000.0] {
        breaks.push(ogs_altitude_m + T::lit(offset));
    }
    for h in [6e3, 10e3, 15e3, 20e3, 30e3, 50e3, 100e3] {
        breaks.push(T::lit(h));
    }
    breaks.retain(|&b| b >= ogs_altitude_m && b < sat_altitude_m);
    breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    breaks.dedup();
    breaks.push(sat_altitude_m);
    breaks
}

impl<T: Real> TurbulenceMoments<T> {
    pub fn compute(profile: &TurbulenceProfile<T>, cfg: &PassConfig<T>) -> Result<Self> {
        profile.validate()?;
        let h0 = profile.ogs_altitude_m;
        let span = cfg.sat_altitude_m - h0;
        let breaks = altitude_breaks(h0, cfg.sat_altitude_m);
        let tol = T::lit(QUAD_REL_TOL);
        let p = profile;
        let rytov = quad::integrate_pieces(
            |h| p.cn2_unchecked(h) * (h - h0).max(T::zero()).powf(T::lit(5.0 / 6.0)),
            &breaks,
            tol,
        )?;
        let second = quad::integrate_pieces(|h| p.cn2_unchecked(h) * h * h, &breaks, tol)?;
        let five_sixths =
            quad::integrate_pieces(|h| p.cn2_unchecked(h) * h.powf(T::lit(5.0 / 6.0)), &breaks, tol)?;
        let slew = quad::integrate_pieces(
            |h| p.cn2_unchecked(h) * ((h - h0).max(T::zero()) / span).powf(T::lit(5.0 / 3.0)),
            &breaks,
            tol,
        )?;
        Ok(Self {
            rytov,
            second,
            five_sixths,
            slew,
        })
    }
}

/// Per-second turbulence state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbulenceState<T> {
    pub rytov_variance: T,
    pub effective_length_m: T,
    pub d_aa: T,
    pub f_aa: T,
    /// Aperture-averaged power scintillation index σ²_scint.
    pub psi: T,
    pub greenwood_hz: T,
    pub wavenumber: T,
}

/// Precomputed turbulence model for one pass configuration.
#[derive(Debug, Clone, Copy)]
pub struct TurbulenceModel<T> {
    pub moments: TurbulenceMoments<T>,
    pub wavelength_m: T,
    pub ogs_diameter_m: T,
}

impl<T: Real> TurbulenceModel<T> {
    pub fn new(profile: &TurbulenceProfile<T>, cfg: &PassConfig<T>) -> Result<Self> {
        Ok(Self {
            moments: TurbulenceMoments::compute(profile, cfg)?,
            wavelength_m: cfg.wavelength_m,
            ogs_diameter_m: cfg.ogs_diameter_m,
        })
    }

    pub fn wavenumber(&self) -> T {
        T::lit(2.0) * T::PI() / self.wavelength_m
    }

    pub fn rytov_variance(&self, zenith_deg: T) -> Result<T> {
        let cos_z = zenith_cos(zenith_deg)?;
        let k = self.wavenumber();
        Ok(T::lit(2.25) * k.powf(T::lit(7.0 / 6.0)) / cos_z.powf(T::lit(11.0 / 6.0))
            * self.moments.rytov)
    }

    pub fn effective_length(&self, zenith_deg: T) -> Result<T> {
        let cos_z = zenith_cos(zenith_deg)?;
        let ratio = T::lit(18.0) * self.moments.second / (T::lit(11.0) * self.moments.five_sixths);
        Ok(ratio.powf(T::lit(6.0 / 7.0)) / cos_z)
    }

    pub fn greenwood(&self, zenith_deg: T, v_perp_mps: T) -> Result<T> {
        if !(v_perp_mps >= T::zero()) {
            return Err(Error::OutOfDomain {
                what: "v_perp_mps",
                value: v_perp_mps.to_f64_lossy(),
                domain: ">= 0",
            });
        }
        let cos_z = zenith_cos(zenith_deg)?;
        let integral = v_perp_mps.powf(T::lit(5.0 / 3.0)) * self.moments.slew / cos_z;
        Ok(T::lit(2.31) * self.wavelength_m.powf(T::lit(-1.2)) * integral.powf(T::lit(0.6)))
    }

    pub fn state(&self, zenith_deg: T, v_perp_mps: T) -> Result<TurbulenceState<T>> {
        let rytov_variance = self.rytov_variance(zenith_deg)?;
        let effective_length_m = self.effective_length(zenith_deg)?;
        let (d_aa, f_aa) = aperture_averaging(effective_length_m, self.ogs_diameter_m, self.wavelength_m)?;
        Ok(TurbulenceState {
            rytov_variance,
            effective_length_m,
            d_aa,
            f_aa,
            psi: psi(rytov_variance, d_aa),
            greenwood_hz: self.greenwood(zenith_deg, v_perp_mps)?,
            wavenumber: self.wavenumber(),
        })
    }

    /// One state per second of the pass.
    pub fn states(&self, points: &[PassPoint<T>]) -> Result<Vec<TurbulenceState<T>>> {
        points.iter().map(|p| self.state(p.zenith_deg, p.v_perp_mps)).collect()
    }
}

/// Rytov variance for a point receiver at `zenith_deg`.
pub fn rytov_variance<T: Real>(zenith_deg: T, profile: &TurbulenceProfile<T>, cfg: &PassConfig<T>) -> Result<T> {
    TurbulenceModel::new(profile, cfg)?.rytov_variance(zenith_deg)
}

/// Effective turbulent path length at `zenith_deg`.
pub fn effective_length<T: Real>(zenith_deg: T, profile: &TurbulenceProfile<T>, cfg: &PassConfig<T>) -> Result<T> {
    TurbulenceModel::new(profile, cfg)?.effective_length(zenith_deg)
}

/// Greenwood frequency driven by the line-of-sight slew.
pub fn greenwood<T: Real>(
    zenith_deg: T,
    v_perp_mps: T,
    profile: &TurbulenceProfile<T>,
    cfg: &PassConfig<T>,
) -> Result<T> {
    TurbulenceModel::new(profile, cfg)?.greenwood(zenith_deg, v_perp_mps)
}

/// Normalised aperture `d_aa` and aperture-averaging factor `f_aa`.
pub fn aperture_averaging<T: Real>(effective_length_m: T, diameter_m: T, wavelength_m: T) -> Result<(T, T)> {
    if !(effective_length_m > T::zero()) {
        return Err(Error::OutOfDomain {
            what: "effective_length_m",
            value: effective_length_m.to_f64_lossy(),
            domain: "> 0",
        });
    }
    let k = T::lit(2.0) * T::PI() / wavelength_m;
    let d_aa = diameter_m * (k / (T::lit(4.0) * effective_length_m)).sqrt();
    Ok((d_aa, aperture_factor(d_aa)))
}

/// `(1 + 1.062·d²)^(−7/6)`
pub fn aperture_factor<T: Real>(d_aa: T) -> T {
    (T::one() + T::lit(1.062) * d_aa * d_aa).powf(T::lit(-7.0 / 6.0))
}

/// Extended-Rytov power scintillation index for an extended receiver.
pub fn psi<T: Real>(rytov_variance: T, d_aa: T) -> T {
    let s2 = rytov_variance;
    let s12 = s2.powf(T::lit(1.2));
    let d2 = d_aa * d_aa;
    let large = T::lit(0.49) * s2
        / (T::one() + T::lit(0.65) * d2 + T::lit(1.11) * s12).powf(T::lit(7.0 / 6.0));
    let small = T::lit(0.51) * s2 * (T::one() + T::lit(0.69) * s12).powf(T::lit(-5.0 / 6.0))
        / (T::one() + T::lit(0.9) * d2 + T::lit(0.62) * d2 * s12);
    (large + small).exp() - T::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> TurbulenceModel<f64> {
        TurbulenceModel::new(&TurbulenceProfile::default(), &PassConfig::default()).unwrap()
    }

    #[test]
    fn ground_value_term_by_term() {
        let p = TurbulenceProfile::<f64>::default();
        let v = cn2(602.0, &p).unwrap();
        let ground = 1.7e-14_f64 * 0.93 * 0.93;
        let mid = 2.7e-16 * (-602.0f64 / 1500.0).exp();
        let upper = 0.00594 * (21.0f64 / 27.0).powi(2) * (602e-5f64).powi(10) * (-0.602f64).exp();
        assert!((ground - 1.4703e-14).abs() < 1e-18);
        assert!(mid < 3e-16 && upper < 3e-16);
        assert!((v - (ground + mid + upper)).abs() < 1e-28);
    }

    #[test]
    fn profile_decays_and_rejects_below_site() {
        let p = TurbulenceProfile::<f64>::default();
        assert!(cn2(400e3, &p).unwrap() < 1e-30);
        assert!(cn2(500.0, &p).is_err());
    }

    #[test]
    fn classical_limit_at_ground() {
        let p = TurbulenceProfile::<f64> {
            boundary_factor: 1.0,
            ogs_altitude_m: 0.0,
            ..Default::default()
        };
        let v = cn2(0.0, &p).unwrap();
        assert!((v - (1.7e-14 + 2.7e-16)).abs() < 1e-30);
    }

    #[test]
    fn secant_scalings_are_exact() {
        let m = model();
        let r0 = m.rytov_variance(0.0).unwrap();
        let l0 = m.effective_length(0.0).unwrap();
        for z in [10.0, 35.0, 70.0] {
            let sec = 1.0 / f64::to_radians(z).cos();
            assert!((m.rytov_variance(z).unwrap() / r0 - sec.powf(11.0 / 6.0)).abs() < 1e-12);
            assert!((m.effective_length(z).unwrap() / l0 - sec).abs() < 1e-12);
        }
        assert!(m.rytov_variance(60.0).unwrap() > m.rytov_variance(30.0).unwrap());
        assert!(m.rytov_variance(90.0).is_err());
    }

    #[test]
    fn effective_length_below_slant_range() {
        let m = model();
        let cfg = PassConfig::default();
        for el in [20.0, 35.0, 50.0, 65.0, 80.0] {
            let l = crate::passlink::slant_range(el, &cfg);
            assert!(m.effective_length(90.0 - el).unwrap() < l);
        }
    }

    #[test]
    fn aperture_factor_cases() {
        assert_eq!(aperture_factor(0.0_f64), 1.0);
        assert!((aperture_factor(1.0_f64) - 2.062f64.powf(-7.0 / 6.0)).abs() < 1e-15);
        assert!((aperture_factor(1.0_f64) - 0.430).abs() < 5e-4);
        let mut prev = 1.0;
        for i in 1..100 {
            let f = aperture_factor(i as f64 * 0.1);
            assert!(f < prev);
            prev = f;
        }
    }

    #[test]
    fn psi_limits() {
        assert_eq!(psi(0.0_f64, 3.0), 0.0);
        for &s in &[0.001_f64, 0.01, 0.03, 0.05] {
            for &d in &[0.0, 0.1, 0.3, 0.5] {
                let weak = aperture_factor(d) * s;
                let ext = psi(s, d);
                assert!((ext - weak).abs() / weak < 0.2, "s={s} d={d} {ext} {weak}");
            }
        }
        // Grows through the weak regime, saturates in strong turbulence.
        let mut prev = 0.0;
        for i in 1..=100 {
            let v = psi(i as f64 * 0.01, 0.0);
            assert!(v > prev);
            prev = v;
        }
        for i in 1..=2500 {
            let v = psi(i as f64 * 0.01, 0.0);
            assert!(v.is_finite() && v > 0.0);
        }
    }

    #[test]
    fn greenwood_homogeneity() {
        let m = model();
        assert_eq!(m.greenwood(10.0, 0.0).unwrap(), 0.0);
        let a = m.greenwood(10.0, 3000.0).unwrap();
        let b = m.greenwood(10.0, 6000.0).unwrap();
        assert!((b / a - 2.0).abs() < 1e-12);
    }
}
