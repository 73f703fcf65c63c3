//! Flat dotted-key run configuration (`detector.p_z = 0.85`).

use std::collections::BTreeMap;
use std::path::Path;

use satqkd::keyrate::SecurityParams;
use satqkd::ldpc::LadderConfig;
use satqkd::passlink::{AttenuationProfile, FixedLosses};
use satqkd::reconcile::{ReconcileConfig, Strategy};
use satqkd::{DetectorConfig, PassConfig, ScintConfig, TurbulenceProfile};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub pass: PassConfig,
    pub atmosphere: AttenuationProfile<f64>,
    pub losses: FixedLosses<f64>,
    pub turbulence: TurbulenceProfile,
    pub scint: ScintConfig,
    pub detector: DetectorConfig,
    pub security: SecurityParams,
    pub reconcile: ReconcileConfig,
    pub ladder: LadderConfig,
    pub strategies: Vec<Strategy>,
    pub seed: u64,
    /// Multiplies the pulse rate and the scintillation sample rate.
    pub scale: f64,
    /// Every scalar value actually set, in key order, for hashing.
    pub overrides: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pass: PassConfig::default(),
            atmosphere: AttenuationProfile::default(),
            losses: FixedLosses::default(),
            turbulence: TurbulenceProfile::default(),
            scint: ScintConfig::default(),
            detector: DetectorConfig::default(),
            security: SecurityParams::default(),
            reconcile: ReconcileConfig::default(),
            ladder: LadderConfig::default(),
            strategies: Strategy::sweep().iter().map(|(_, s)| *s).collect(),
            seed: 1,
            scale: 1.0,
            overrides: BTreeMap::new(),
        }
    }
}

fn bad(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

fn as_f64(key: &str, v: &toml::Value) -> Result<f64, CliError> {
    match v {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(bad(key, "expected a number")),
    }
}

fn as_u64(key: &str, v: &toml::Value) -> Result<u64, CliError> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        toml::Value::String(s) => s.parse().map_err(|_| bad(key, "expected a non-negative integer")),
        _ => Err(bad(key, "expected a non-negative integer")),
    }
}

fn flatten(prefix: &str, t: &toml::Table, out: &mut Vec<(String, toml::Value)>) {
    for (k, v) in t {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(inner) => flatten(&key, inner, out),
            _ => out.push((key, v.clone())),
        }
    }
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Config(format!("parse error: {}", e.message())))?;
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);
        let mut cfg = Self::default();
        for (k, v) in &flat {
            cfg.set(k, v)?;
            cfg.overrides.insert(k.clone(), v.to_string());
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => CliError::MissingInput(path.display().to_string()),
            _ => CliError::Config(format!("{}: {e}", path.display())),
        })?;
        Self::from_str(&text)
    }

    fn set(&mut self, key: &str, v: &toml::Value) -> Result<(), CliError> {
        let f = || as_f64(key, v);
        let u = || as_u64(key, v);
        let p = &mut self.pass;
        let d = &mut self.detector;
        let r = &mut self.reconcile;
        match key {
            "seed" => self.seed = u()?,
            "scale" => self.scale = f()?,
            "strategies" => {
                let arr = v.as_array().ok_or_else(|| bad(key, "expected a list of names"))?;
                self.strategies = arr
                    .iter()
                    .map(|s| {
                        s.as_str()
                            .ok_or_else(|| bad(key, "expected strings"))?
                            .parse::<Strategy>()
                            .map_err(|e| bad(key, e))
                    })
                    .collect::<Result<_, _>>()?;
            }
            "pass.wavelength_m" => p.wavelength_m = f()?,
            "pass.pulse_rate_hz" => p.pulse_rate_hz = f()?,
            "pass.sat_altitude_m" => p.sat_altitude_m = f()?,
            "pass.ogs_altitude_m" => {
                p.ogs_altitude_m = f()?;
                self.turbulence.ogs_altitude_m = p.ogs_altitude_m;
            }
            "pass.beam_divergence_rad" => p.beam_divergence_rad = f()?,
            "pass.ogs_diameter_m" => p.ogs_diameter_m = f()?,
            "pass.ogs_obscuration_m" => p.ogs_obscuration_m = f()?,
            "pass.min_elevation_deg" => p.min_elevation_deg = f()?,
            "pass.max_elevation_deg" => p.max_elevation_deg = f()?,
            "pass.pass_duration_s" => p.pass_duration_s = f()?,
            "pass.earth_radius_m" => p.earth_radius_m = f()?,
            "atmosphere.sea_level_db_per_km" => self.atmosphere.sea_level_db_per_km = f()?,
            "atmosphere.scale_height_m" => self.atmosphere.scale_height_m = f()?,
            "losses.jitter_rad" => self.losses.jitter_rad = f()?,
            "losses.bias_rad" => self.losses.bias_rad = f()?,
            "losses.rx_db" => self.losses.rx_db = f()?,
            "losses.det_db" => self.losses.det_db = f()?,
            "turbulence.wind_mps" => self.turbulence.wind_mps = f()?,
            "turbulence.ground_cn2" => self.turbulence.ground_cn2 = f()?,
            "turbulence.boundary_factor" => self.turbulence.boundary_factor = f()?,
            "scint.sample_rate_hz" => self.scint.sample_rate_hz = f()?,
            "scint.filter_memory_s" => self.scint.filter_memory_s = f()?,
            "scint.update_interval_s" => self.scint.update_interval_s = f()?,
            "scint.order" => {
                self.scint.order = u32::try_from(u()?).map_err(|_| bad(key, "too large"))?
            }
            "detector.p_z" => d.p_z = f()?,
            "detector.mu" => d.mu = f()?,
            "detector.nu" => d.nu = f()?,
            "detector.p_mu" => d.p_mu = f()?,
            "detector.p_nu" => d.p_nu = f()?,
            "detector.misalignment_deg" => d.misalignment_deg = f()?,
            "detector.noise_per_slot" => d.noise_per_slot = f()?,
            "detector.holdoff_s" => d.holdoff_s = f()?,
            "security.eps_cor" => self.security.eps_cor = f()?,
            "security.eps_sec" => self.security.eps_sec = f()?,
            "reconcile.block_len" => r.plan.block_len = u()? as usize,
            "reconcile.granule" => r.plan.granule = u()? as usize,
            "reconcile.f_margin" => r.f_margin = f()?,
            "reconcile.max_iters" => r.max_iters = u()? as usize,
            "reconcile.stall_iters" => {
                let s = u()? as usize;
                r.stall_iters = (s > 0).then_some(s);
            }
            "reconcile.noise_sigma" => r.noise_sigma = f()?,
            "reconcile.tag_bits" => r.tag_bits = u()? as usize,
            "ldpc.rate_min" => self.ladder.rate_min = f()?,
            "ldpc.rate_max" => self.ladder.rate_max = f()?,
            "ldpc.step_rows" => self.ladder.step_rows = u()? as usize,
            "ldpc.seed" => self.ladder.seed = u()?,
            _ => return Err(bad(key, "unknown configuration key")),
        }
        Ok(())
    }

    /// Applies the scale factor and the master seed, then validates every
    /// module. The result is what the pipeline runs on.
    pub fn resolved(&self) -> Result<Self, CliError> {
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(CliError::Config(format!("scale must lie in (0, 1], got {}", self.scale)));
        }
        let mut c = self.clone();
        c.pass.pulse_rate_hz *= self.scale;
        c.scint.sample_rate_hz *= self.scale;
        c.scint.seed = self.seed;
        c.detector.seed = self.seed;
        c.reconcile.seed = self.seed;
        c.turbulence.ogs_altitude_m = c.pass.ogs_altitude_m;
        let wrap = |e: satqkd::Error| CliError::Config(e.to_string());
        c.pass.validate().map_err(wrap)?;
        c.atmosphere.validate().map_err(wrap)?;
        c.turbulence.validate().map_err(wrap)?;
        c.scint.validate().map_err(wrap)?;
        c.detector.validate().map_err(wrap)?;
        c.security.validate().map_err(wrap)?;
        c.reconcile.validate().map_err(wrap)?;
        c.ladder.validate().map_err(wrap)?;
        c.window_slots()?;
        if c.strategies.is_empty() {
            return Err(CliError::Config("strategies: list is empty".into()));
        }
        Ok(c)
    }

    /// Pulse slots per scintillation sample, n_window = R_Tx/R_sample.
    pub fn window_slots(&self) -> Result<u64, CliError> {
        let r = self.pass.pulse_rate_hz / self.scint.sample_rate_hz;
        if !(r >= 1.0) || (r - r.round()).abs() > 1e-9 * r {
            return Err(CliError::Config(format!(
                "pass.pulse_rate_hz / scint.sample_rate_hz must be a positive integer, got {r}"
            )));
        }
        Ok(r.round() as u64)
    }

    /// SHA-256 over the canonical key list, the seed and the scale.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.overrides {
            h.update(format!("{k}={v}\n").as_bytes());
        }
        h.update(format!("seed={}\nscale={}\n", self.seed, self.scale).as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
