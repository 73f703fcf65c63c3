//! Pass geometry and the deterministic part of the downlink budget.
//!
//! The overflight is a circular orbit over a spherical, non-rotating Earth.
//! The ground station sits off the ground track by the central angle that
//! makes the culmination elevation equal to `max_elevation_deg`; the pass is
//! sampled once per second, symmetric about culmination.

use crate::error::{Error, Result};
use crate::quad;
use crate::scalar::Real;
use crate::units::{db, from_db};

/// Standard gravitational parameter of the Earth (m³/s²).
pub const EARTH_GM: f64 = 3.986_004_418e14;

/// Relative tolerance used by every altitude integral in this crate.
pub const QUAD_REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassConfig<T> {
    pub wavelength_m: T,
    pub pulse_rate_hz: T,
    pub sat_altitude_m: T,
    pub ogs_altitude_m: T,
    /// Beam half-divergence (1/e² intensity), rad.
    pub beam_divergence_rad: T,
    pub ogs_diameter_m: T,
    /// Secondary-mirror obscuration diameter.
    pub ogs_obscuration_m: T,
    pub min_elevation_deg: T,
    pub max_elevation_deg: T,
    pub pass_duration_s: T,
    pub earth_radius_m: T,
}

impl<T: Real> Default for PassConfig<T> {
    fn default() -> Self {
        Self {
            wavelength_m: T::lit(1550e-9),
            pulse_rate_hz: T::lit(1e9),
            sat_altitude_m: T::lit(567e3),
            ogs_altitude_m: T::lit(602.0),
            beam_divergence_rad: T::lit(5e-6),
            ogs_diameter_m: T::lit(0.8),
            ogs_obscuration_m: T::lit(0.3),
            min_elevation_deg: T::lit(20.0),
            max_elevation_deg: T::lit(80.0),
            pass_duration_s: T::lit(330.0),
            earth_radius_m: T::lit(6371e3),
        }
    }
}

impl<T: Real> PassConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pass.wavelength_m", self.wavelength_m),
            ("pass.pulse_rate_hz", self.pulse_rate_hz),
            ("pass.sat_altitude_m", self.sat_altitude_m),
            ("pass.beam_divergence_rad", self.beam_divergence_rad),
            ("pass.ogs_diameter_m", self.ogs_diameter_m),
            ("pass.earth_radius_m", self.earth_radius_m),
        ];
        for (key, v) in positive {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{key} must be positive and finite")));
            }
        }
        if !(self.pass_duration_s >= T::zero() && self.pass_duration_s.is_finite()) {
            return Err(Error::InvalidConfig("pass.pass_duration_s must be non-negative and finite".into()));
        }
        if !(self.ogs_obscuration_m >= T::zero() && self.ogs_obscuration_m < self.ogs_diameter_m) {
            return Err(Error::InvalidConfig(
                "pass.ogs_obscuration_m must lie in [0, pass.ogs_diameter_m)".into(),
            ));
        }
        if !(self.ogs_altitude_m >= T::zero() && self.ogs_altitude_m < self.sat_altitude_m) {
            return Err(Error::InvalidConfig(
                "pass.ogs_altitude_m must lie in [0, pass.sat_altitude_m)".into(),
            ));
        }
        if !(self.min_elevation_deg > T::zero()
            && self.min_elevation_deg < self.max_elevation_deg
            && self.max_elevation_deg <= T::lit(90.0))
        {
            return Err(Error::InvalidConfig(
                "pass elevations must satisfy 0 < min_elevation_deg < max_elevation_deg <= 90".into(),
            ));
        }
        Ok(())
    }

    /// Orbital angular rate `sqrt(GM / r³)` of the circular orbit.
    pub fn angular_rate(&self) -> T {
        let r = self.earth_radius_m + self.sat_altitude_m;
        (T::lit(EARTH_GM) / (r * r * r)).sqrt()
    }

    /// Central angle between the ground track and the station.
    fn off_track_angle(&self) -> T {
        let (rs, rg) = self.radii();
        let el = self.max_elevation_deg.to_radians();
        T::FRAC_PI_2() - el - (rg * el.cos() / rs).asin()
    }

    fn radii(&self) -> (T, T) {
        (
            self.earth_radius_m + self.sat_altitude_m,
            self.earth_radius_m + self.ogs_altitude_m,
        )
    }
}

/// Geometry of one second of the pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassPoint<T> {
    /// Start of the second, measured from the start of the pass.
    pub t_s: T,
    pub elevation_deg: T,
    pub zenith_deg: T,
    pub range_m: T,
    /// Satellite velocity component orthogonal to the line of sight.
    pub v_perp_mps: T,
}

/// One second of the pass with its static loss terms (all in dB, all ≤ 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample<T> {
    pub t_s: T,
    pub elevation_deg: T,
    pub zenith_deg: T,
    pub range_m: T,
    pub v_perp_mps: T,
    pub coll_db: T,
    pub pointing_db: T,
    pub atm_db: T,
    pub rx_db: T,
    pub det_db: T,
}

impl<T: Real> LinkSample<T> {
    pub fn static_db(&self) -> T {
        self.coll_db + self.pointing_db + self.atm_db + self.rx_db + self.det_db
    }

    /// Linear efficiency of the deterministic budget.
    pub fn eta_static(&self) -> T {
        from_db(self.static_db())
    }
}

/// Exponential attenuation profile `α(h) = α₀·exp(−h/h_scale)` in dB/km.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttenuationProfile<T> {
    pub sea_level_db_per_km: T,
    pub scale_height_m: T,
}

impl<T: Real> Default for AttenuationProfile<T> {
    /// Calibrated to about −0.5 dB at zenith from a 602 m site at 1550 nm.
    fn default() -> Self {
        Self {
            sea_level_db_per_km: T::lit(0.5),
            scale_height_m: T::lit(1500.0),
        }
    }
}

impl<T: Real> AttenuationProfile<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.sea_level_db_per_km >= T::zero()) {
            return Err(Error::InvalidConfig("atmosphere.sea_level_db_per_km must be >= 0".into()));
        }
        if !(self.scale_height_m > T::zero()) {
            return Err(Error::InvalidConfig("atmosphere.scale_height_m must be > 0".into()));
        }
        Ok(())
    }

    /// Attenuation at altitude `h` in dB/km.
    pub fn alpha(&self, h: T) -> T {
        self.sea_level_db_per_km * (-h / self.scale_height_m).exp()
    }
}

/// Loss terms that do not depend on geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedLosses<T> {
    pub jitter_rad: T,
    pub bias_rad: T,
    pub rx_db: T,
    pub det_db: T,
}

impl<T: Real> Default for FixedLosses<T> {
    fn default() -> Self {
        Self {
            jitter_rad: T::lit(2.5e-6),
            bias_rad: T::zero(),
            rx_db: T::lit(-1.5),
            det_db: T::lit(-7.0),
        }
    }
}

/// Slant range from the station to a satellite seen at `elevation_deg`.
pub fn slant_range<T: Real>(elevation_deg: T, cfg: &PassConfig<T>) -> T {
    let (rs, rg) = cfg.radii();
    let el = elevation_deg.to_radians();
    let c = rg * el.cos();
    (rs * rs - c * c).sqrt() - rg * el.sin()
}

/// Elevation, range and orthogonal velocity at `tau` seconds from culmination.
pub fn geometry_at<T: Real>(cfg: &PassConfig<T>, tau: T) -> (T, T, T) {
    let (rs, rg) = cfg.radii();
    let w = cfg.angular_rate();
    let beta = cfg.off_track_angle();
    let phase = w * tau;
    let sat = [rs * phase.cos(), rs * phase.sin(), T::zero()];
    let vel = [-rs * w * phase.sin(), rs * w * phase.cos(), T::zero()];
    let up = [beta.cos(), T::zero(), beta.sin()];
    let los = [sat[0] - rg * up[0], sat[1] - rg * up[1], sat[2] - rg * up[2]];
    let range = dot(&los, &los).sqrt();
    let elevation = (dot(&los, &up) / range).asin().to_degrees();
    let along = dot(&vel, &los) / range;
    let v2 = dot(&vel, &vel);
    let v_perp = (v2 - along * along).max(T::zero()).sqrt();
    (elevation, range, v_perp)
}

fn dot<T: Real>(a: &[T; 3], b: &[T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Time spent above `elevation_deg` by the overflight, from the orbit model.
pub fn visibility_duration<T: Real>(cfg: &PassConfig<T>, elevation_deg: T) -> T {
    let (rs, rg) = cfg.radii();
    let el = elevation_deg.to_radians();
    let central = T::FRAC_PI_2() - el - (rg * el.cos() / rs).asin();
    let beta = cfg.off_track_angle();
    let ratio = (central.cos() / beta.cos()).min(T::one());
    T::lit(2.0) * ratio.acos() / cfg.angular_rate()
}

/// One geometry sample per second of the configured pass duration.
pub fn pass_profile<T: Real>(cfg: &PassConfig<T>) -> Result<Vec<PassPoint<T>>> {
    cfg.validate()?;
    let n = cfg.pass_duration_s.round().to_usize().unwrap_or(0);
    let horizon = visibility_duration(cfg, T::zero());
    if cfg.pass_duration_s >= horizon {
        return Err(Error::Geometry(format!(
            "pass duration {} s exceeds the horizon-to-horizon visibility {} s",
            cfg.pass_duration_s, horizon
        )));
    }
    let half = T::from_count(n) * T::lit(0.5);
    let points = (0..n)
        .map(|k| {
            let t = T::from_count(k);
            let tau = t + T::lit(0.5) - half;
            let (elevation_deg, range_m, v_perp_mps) = geometry_at(cfg, tau);
            PassPoint {
                t_s: t,
                elevation_deg,
                zenith_deg: T::lit(90.0) - elevation_deg,
                range_m,
                v_perp_mps,
            }
        })
        .collect::<Vec<_>>();
    let peak = points
        .iter()
        .map(|p| p.elevation_deg)
        .fold(T::neg_infinity(), T::max);
    if n > 0 && (peak - cfg.max_elevation_deg).abs() > T::lit(1.0) {
        return Err(Error::Geometry(format!(
            "peak elevation {peak} deg does not reach the configured maximum {}",
            cfg.max_elevation_deg
        )));
    }
    Ok(points)
}

/// Friis collection efficiency in dB for a Gaussian beam into an obscured
/// Cassegrain aperture.
pub fn collection_efficiency<T: Real>(range_m: T, cfg: &PassConfig<T>) -> Result<T> {
    if !(range_m > T::zero()) {
        return Err(Error::OutOfDomain {
            what: "range_m",
            value: range_m.to_f64_lossy(),
            domain: "> 0",
        });
    }
    let lambda = cfg.wavelength_m;
    let d2 = cfg.ogs_diameter_m * cfg.ogs_diameter_m - cfg.ogs_obscuration_m * cfg.ogs_obscuration_m;
    if !(d2 > T::zero()) {
        return Err(Error::InvalidConfig("receiver aperture is fully obscured".into()));
    }
    let g_tx = T::lit(8.0) / (cfg.beam_divergence_rad * cfg.beam_divergence_rad);
    let g_rx = T::PI() * T::PI() / (lambda * lambda) * d2;
    let fsl = lambda / (T::lit(4.0) * T::PI() * range_m);
    Ok(db(g_tx) + db(g_rx) + db(fsl * fsl))
}

/// Pointing loss in dB for jitter `jitter_rad` (std. dev.) and bias `bias_rad`.
pub fn pointing_loss<T: Real>(divergence_rad: T, jitter_rad: T, bias_rad: T) -> T {
    let d2 = divergence_rad * divergence_rad;
    let spread = d2 + T::lit(4.0) * jitter_rad * jitter_rad;
    db(d2 / spread) - T::lit(2.0) * bias_rad * bias_rad / spread * T::lit(10.0) * T::LOG10_E()
}

/// Atmospheric absorption in dB (≤ 0) along the slant path at `zenith_deg`.
pub fn atmospheric_loss<T: Real>(
    profile: &AttenuationProfile<T>,
    zenith_deg: T,
    cfg: &PassConfig<T>,
) -> Result<T> {
    let cos_z = zenith_cos(zenith_deg)?;
    let column_db = atmospheric_column_db(profile, cfg)?;
    Ok(-column_db / cos_z)
}

/// Vertical attenuation column `∫ α(h) dh` between station and satellite, in dB.
pub fn atmospheric_column_db<T: Real>(profile: &AttenuationProfile<T>, cfg: &PassConfig<T>) -> Result<T> {
    let lo = cfg.ogs_altitude_m;
    let hi = cfg.sat_altitude_m;
    let hs = profile.scale_height_m;
    let mut breaks = vec![lo];
    for k in [1.0, 4.0, 12.0, 40.0] {
        let b = lo + hs * T::lit(k);
        if b < hi {
            breaks.push(b);
        }
    }
    breaks.push(hi);
    let per_m = quad::integrate_pieces(|h| profile.alpha(h), &breaks, T::lit(QUAD_REL_TOL))?;
    Ok(per_m / T::lit(1000.0))
}

pub(crate) fn zenith_cos<T: Real>(zenith_deg: T) -> Result<T> {
    if !(zenith_deg >= T::zero() && zenith_deg < T::lit(90.0)) {
        return Err(Error::OutOfDomain {
            what: "zenith_deg",
            value: zenith_deg.to_f64_lossy(),
            domain: "[0, 90)",
        });
    }
    Ok(zenith_deg.to_radians().cos())
}

/// Attaches every static loss term to the pass geometry.
pub fn static_budget<T: Real>(
    points: &[PassPoint<T>],
    cfg: &PassConfig<T>,
    profile: &AttenuationProfile<T>,
    fixed: &FixedLosses<T>,
) -> Result<Vec<LinkSample<T>>> {
    profile.validate()?;
    let pointing_db = pointing_loss(cfg.beam_divergence_rad, fixed.jitter_rad, fixed.bias_rad);
    let column_db = atmospheric_column_db(profile, cfg)?;
    points
        .iter()
        .map(|p| {
            let cos_z = zenith_cos(p.zenith_deg)?;
            Ok(LinkSample {
                t_s: p.t_s,
                elevation_deg: p.elevation_deg,
                zenith_deg: p.zenith_deg,
                range_m: p.range_m,
                v_perp_mps: p.v_perp_mps,
                coll_db: collection_efficiency(p.range_m, cfg)?,
                pointing_db,
                atm_db: -column_db / cos_z,
                rx_db: fixed.rx_db,
                det_db: fixed.det_db,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PassConfig<f64> {
        PassConfig::default()
    }

    #[test]
    fn zenith_range_is_altitude_difference() {
        let c = cfg();
        assert!((slant_range(90.0, &c) - 566_398.0).abs() < 1e-6);
    }

    #[test]
    fn low_elevation_range_matches_law_of_cosines() {
        // Independent construction: triangle Earth-centre / station / satellite.
        // Nadir angle from the sine rule, then the range from the law of cosines.
        let c = cfg();
        let (rs, rg) = (c.earth_radius_m + c.sat_altitude_m, c.earth_radius_m + c.ogs_altitude_m);
        let el = 20f64.to_radians();
        let nadir = (rg / rs * (std::f64::consts::FRAC_PI_2 + el).sin()).asin();
        let central = std::f64::consts::PI - (std::f64::consts::FRAC_PI_2 + el) - nadir;
        let expect = (rs * rs + rg * rg - 2.0 * rs * rg * central.cos()).sqrt();
        let got = slant_range(20.0, &c);
        assert!((got - expect).abs() < 1e-6 * expect);
        assert!(got > 1.3e6 && got < 1.4e6);
        assert!(got > slant_range(90.0, &c));
    }

    #[test]
    fn range_decreases_with_elevation() {
        let c = cfg();
        let mut prev = f64::INFINITY;
        for e in (20..=90).map(f64::from) {
            let l = slant_range(e, &c);
            assert!(l < prev);
            prev = l;
        }
    }

    #[test]
    fn collection_efficiency_reference_value() {
        let v = collection_efficiency(600e3, &cfg()).unwrap();
        assert!((v + 15.15).abs() < 0.01, "{v}");
    }

    #[test]
    fn collection_efficiency_inverse_square() {
        let c = cfg();
        let a = collection_efficiency(1.2e6, &c).unwrap();
        let b = collection_efficiency(0.6e6, &c).unwrap();
        assert!((b - a - 20.0 * 2f64.log10()).abs() < 1e-9);
    }

    #[test]
    fn fully_obscured_aperture_is_rejected() {
        let mut c = cfg();
        c.ogs_obscuration_m = c.ogs_diameter_m;
        assert!(collection_efficiency(600e3, &c).is_err());
    }

    #[test]
    fn pointing_loss_reference_values() {
        assert!((pointing_loss(5e-6_f64, 2.5e-6, 0.0) + 3.01).abs() < 0.005);
        assert!((pointing_loss(5e-6_f64, 0.47e-6, 0.0) + 0.15).abs() < 0.01);
        assert_eq!(pointing_loss(5e-6_f64, 0.0, 0.0), 0.0);
        assert!(pointing_loss(5e-6_f64, 0.0, 1e-6) < 0.0);
    }

    #[test]
    fn atmospheric_secant_scaling() {
        let c = cfg();
        let p = AttenuationProfile::default();
        let z0 = atmospheric_loss(&p, 0.0, &c).unwrap();
        let z60 = atmospheric_loss(&p, 60.0, &c).unwrap();
        assert!((z60 / z0 - 2.0).abs() < 1e-12);
        let z37 = atmospheric_loss(&p, 37.0, &c).unwrap();
        assert!((z37 / z0 - 1.0 / 37f64.to_radians().cos()).abs() < 1e-12);
    }

    #[test]
    fn atmospheric_quadrature_matches_closed_form() {
        let c = cfg();
        let p = AttenuationProfile::<f64>::default();
        let hs = p.scale_height_m;
        let exact = p.sea_level_db_per_km * hs / 1000.0
            * ((-c.ogs_altitude_m / hs).exp() - (-c.sat_altitude_m / hs).exp());
        let got = -atmospheric_loss(&p, 0.0, &c).unwrap();
        assert!((got - exact).abs() / exact < 1e-4);
    }

    #[test]
    fn default_profile_calibration_band() {
        let z0 = atmospheric_loss(&AttenuationProfile::default(), 0.0, &cfg()).unwrap();
        assert!((-1.0..=-0.3).contains(&z0), "{z0}");
    }

    #[test]
    fn horizon_zenith_is_rejected() {
        assert!(atmospheric_loss(&AttenuationProfile::default(), 90.0, &cfg()).is_err());
    }

    #[test]
    fn receiver_and_detector_constants() {
        assert!((db(0.95f64.powi(7)) + 1.56).abs() < 0.005);
        assert!((db(0.2f64) + 6.99).abs() < 0.005);
    }

    #[test]
    fn invalid_configs() {
        let mut c = cfg();
        c.min_elevation_deg = 85.0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.ogs_altitude_m = 600e3;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.pass_duration_s = 5000.0;
        assert!(matches!(pass_profile(&c), Err(Error::Geometry(_))));
    }
}
