//! Brute-force references shared by the core tests and the acceptance run.
#![allow(dead_code)]

use rand::Rng;
use satqkd::ldpc::{has_four_cycle, lift, syndrome, LiftedCode, Protograph};
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub const SMALL_N: usize = 18;

/// 2×6 base lifted ×3. Among bases with a 4-cycle-free lift of 3, this one
/// leaves the fewest syndromes with tied minimum-weight cosets.
pub fn small_code() -> LiftedCode {
    let p = Protograph::new(&[vec![1, 2, 1, 1, 1, 0], vec![0, 0, 1, 1, 1, 2]]).unwrap();
    let code = lift(&p, 3, 0).unwrap();
    assert!(!has_four_cycle(&code));
    code
}

pub fn pack(v: &[u8]) -> usize {
    v.iter().enumerate().map(|(i, &b)| (b as usize) << i).sum()
}

/// Exhaustive posterior over all 2^18 error patterns, per syndrome.
pub struct Exhaustive {
    pub total: Vec<f64>,
    pub marginal: Vec<[f64; SMALL_N]>,
    pub min_weight: Vec<u32>,
    /// Number of minimum-weight patterns per syndrome.
    pub leaders: Vec<u32>,
}

impl Exhaustive {
    pub fn new(code: &LiftedCode, p: f64) -> Self {
        assert_eq!(code.n(), SMALL_N);
        let cols: Vec<usize> = (0..SMALL_N)
            .map(|v| {
                let mut e = vec![0u8; SMALL_N];
                e[v] = 1;
                pack(&syndrome(code, &e).unwrap())
            })
            .collect();
        let k = 1 << code.m();
        let mut o = Self {
            total: vec![0.0; k],
            marginal: vec![[0.0; SMALL_N]; k],
            min_weight: vec![u32::MAX; k],
            leaders: vec![0; k],
        };
        let mut syn = vec![0usize; 1 << SMALL_N];
        for x in 0usize..1 << SMALL_N {
            if x > 0 {
                syn[x] = syn[x & (x - 1)] ^ cols[x.trailing_zeros() as usize];
            }
            let s = syn[x];
            let w = x.count_ones();
            let pr = p.powi(w as i32) * (1.0 - p).powi((SMALL_N as u32 - w) as i32);
            o.total[s] += pr;
            for v in 0..SMALL_N {
                if x >> v & 1 == 1 {
                    o.marginal[s][v] += pr;
                }
            }
            if w < o.min_weight[s] {
                o.min_weight[s] = w;
                o.leaders[s] = 1;
            } else if w == o.min_weight[s] {
                o.leaders[s] += 1;
            }
        }
        o
    }

    pub fn bitwise_map(&self, s: usize) -> Vec<u8> {
        (0..SMALL_N).map(|v| (self.marginal[s][v] > self.total[s] / 2.0) as u8).collect()
    }
}

/// One Bernoulli draw per slot, slots inside the hold-off skipped.
pub fn direct_clicks<R: Rng>(p: &[f64], n_window: u64, holdoff: u64, rng: &mut R) -> Vec<u64> {
    let mut clicks = Vec::new();
    let mut next = 0;
    for slot in 0..p.len() as u64 * n_window {
        if slot >= next && rng.random_bool(p[(slot / n_window) as usize]) {
            clicks.push(slot);
            next = slot + holdoff;
        }
    }
    clicks
}

/// Clicks per window and the histogram of gaps beyond the hold-off.
pub fn click_histograms(runs: &[Vec<u64>], windows: usize, n_window: u64, holdoff: u64) -> (Vec<f64>, Vec<f64>) {
    let mut per_window = vec![0.0; windows];
    let mut gaps = vec![0.0; 64];
    for c in runs {
        for &s in c {
            per_window[(s / n_window) as usize] += 1.0;
        }
        for w in c.windows(2) {
            gaps[((w[1] - w[0] - holdoff) as usize).min(63)] += 1.0;
        }
    }
    (per_window, gaps)
}

/// Two-sample chi-square homogeneity p-value over bins with at least 10
/// pooled counts.
pub fn homogeneity(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    let mut stat = 0.0;
    let mut bins = 0;
    for (&x, &y) in a.iter().zip(b) {
        let t = x + y;
        if t < 10.0 {
            continue;
        }
        let (ea, eb) = (t * na / (na + nb), t * nb / (na + nb));
        stat += (x - ea).powi(2) / ea + (y - eb).powi(2) / eb;
        bins += 1;
    }
    1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat)
}
