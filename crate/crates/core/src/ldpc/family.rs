use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::lift::{lift, lift_relaxed, LiftedCode};
use super::protograph::{DegreeProfile, Protograph};
use crate::error::{Error, Result};

/// Protograph width. Divides 1800 and 46080, so both block sizes lift with
/// an integer factor, and gives a rate step of 1/360.
pub const BASE_COLS: usize = 360;

/// Width the anchor profiles are written for.
const ANCHOR_COLS: usize = 120;

/// Variable-degree profiles for a 120-column base at a few heights, from
/// density evolution on the BSC followed by finite-length screening at
/// n = 46080. Columns: rows, degree-2, degree-4, then two (degree, count)
/// pairs for heavy columns; degree 3 fills the rest.
const ANCHORS: &[(usize, [usize; 6])] = &[
    (6, [5, 2, 6, 28, 6, 6]),
    (12, [7, 2, 10, 29, 12, 10]),
    (18, [11, 2, 8, 30, 18, 11]),
    (24, [14, 2, 8, 30, 20, 10]),
    (36, [22, 2, 8, 26, 20, 10]),
    (60, [36, 2, 8, 20, 20, 10]),
];

/// Degree profile for a base matrix with `rows` checks and [`BASE_COLS`]
/// variables, interpolated between the anchors.
pub fn degree_profile(rows: usize) -> DegreeProfile {
    let scale = (BASE_COLS / ANCHOR_COLS) as f64;
    let at = rows as f64 / scale;
    let (lo, hi) = match ANCHORS.iter().position(|a| a.0 as f64 >= at) {
        Some(0) => (ANCHORS[0], ANCHORS[0]),
        Some(k) => (ANCHORS[k - 1], ANCHORS[k]),
        None => (ANCHORS[ANCHORS.len() - 1], ANCHORS[ANCHORS.len() - 1]),
    };
    let t = if hi.0 == lo.0 {
        0.0
    } else {
        ((at - lo.0 as f64) / (hi.0 as f64 - lo.0 as f64)).clamp(0.0, 1.0)
    };
    let mix = |k: usize| (1.0 - t) * lo.1[k] as f64 + t * hi.1[k] as f64;
    let count = |k: usize| (mix(k) * scale).round() as usize;
    let degree = |k: usize| (mix(k).round() as u32).min(rows as u32);
    let n2 = count(0).min(rows.saturating_sub(1));
    let n4 = count(1);
    let (d1, k1) = (degree(2), count(3));
    let (d2, k2) = (degree(4), count(5));
    let n3 = BASE_COLS.saturating_sub(n2 + n4 + k1 + k2);
    let mut counts: Vec<(u32, usize)> = Vec::new();
    for (d, c) in [(2, n2), (3.min(rows as u32), n3), (4.min(rows as u32), n4), (d1, k1), (d2, k2)] {
        if c == 0 {
            continue;
        }
        match counts.iter_mut().find(|e| e.0 == d) {
            Some(e) => e.1 += c,
            None => counts.push((d, c)),
        }
    }
    counts.sort_unstable();
    DegreeProfile { classes: counts }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LadderConfig {
    pub rate_min: f64,
    pub rate_max: f64,
    /// Ladder step in base rows; one row is a rate step of 1/360.
    pub step_rows: usize,
    /// Construction seed of the shipped family.
    pub seed: u64,
}

impl Default for LadderConfig {
    fn default() -> Self {
        Self {
            rate_min: 0.5,
            rate_max: 0.95,
            step_rows: 1,
            seed: 0x51ED_C0DE,
        }
    }
}

impl LadderConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |r: f64| r > 0.0 && r < 1.0;
        if !ok(self.rate_min) || !ok(self.rate_max) || self.rate_min > self.rate_max {
            return Err(Error::InvalidConfig(format!(
                "ldpc.rate_min/ldpc.rate_max must satisfy 0 < min <= max < 1, got {} and {}",
                self.rate_min, self.rate_max
            )));
        }
        if self.step_rows == 0 {
            return Err(Error::InvalidConfig("ldpc.step_rows must be at least 1".into()));
        }
        if self.rows().is_empty() {
            return Err(Error::InvalidConfig("ldpc rate range holds no ladder rate".into()));
        }
        Ok(())
    }

    /// Base heights of the ladder, highest rate first.
    pub fn rows(&self) -> Vec<usize> {
        let lo = ((1.0 - self.rate_max) * BASE_COLS as f64).round().max(3.0) as usize;
        let hi = ((1.0 - self.rate_min) * BASE_COLS as f64).round() as usize;
        (lo..=hi.min(BASE_COLS - 1)).step_by(self.step_rows).collect()
    }
}

/// Lazily constructed codes, shared across blocks and strategies.
#[derive(Debug)]
pub struct CodeLibrary {
    cfg: LadderConfig,
    rows: Vec<usize>,
    cache: Mutex<HashMap<(usize, usize), Option<Arc<LiftedCode>>>>,
}

impl CodeLibrary {
    pub fn new(cfg: LadderConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            rows: cfg.rows(),
            cfg,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &LadderConfig {
        &self.cfg
    }

    /// Base heights, highest rate first.
    pub fn ladder(&self) -> &[usize] {
        &self.rows
    }

    pub fn rate_of(rows: usize) -> f64 {
        1.0 - rows as f64 / BASE_COLS as f64
    }

    pub fn protograph(&self, rows: usize) -> Result<Protograph> {
        Protograph::from_profile(rows, &degree_profile(rows), self.cfg.seed ^ rows as u64)
    }

    /// Code of length `n` with `rows` base checks. Short lengths where no
    /// 4-cycle-free lift is found get a relaxed lift; `None` when the lift
    /// factor is below the protograph multiplicity.
    pub fn code(&self, n: usize, rows: usize) -> Result<Option<Arc<LiftedCode>>> {
        if n == 0 || n % BASE_COLS != 0 {
            return Err(Error::InvalidConfig(format!(
                "block length {n} is not a multiple of {BASE_COLS}"
            )));
        }
        if let Some(c) = self.cache.lock().unwrap().get(&(n, rows)) {
            return Ok(c.clone());
        }
        let z = n / BASE_COLS;
        let proto = self.protograph(rows)?;
        let seed = self.cfg.seed ^ ((rows as u64) << 32) ^ z as u64;
        let built = match lift(&proto, z, seed) {
            Ok(c) => Some(Arc::new(c)),
            Err(Error::Girth { .. }) => Some(Arc::new(lift_relaxed(&proto, z, seed)?)),
            Err(Error::InvalidConfig(_)) => None,
            Err(e) => return Err(e),
        };
        self.cache
            .lock()
            .unwrap()
            .insert((n, rows), built.clone());
        Ok(built)
    }
}
