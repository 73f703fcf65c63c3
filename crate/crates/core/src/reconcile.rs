//! Blockwise syndrome reconciliation of the sifted key with rate-ladder
//! descent, LLR strategies and leakage accounting.

use std::fmt;
use std::io::Write;
use std::ops::Range;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::detection::{Intensity, SiftedData};
use crate::error::{Error, Result};
use crate::ldpc::{decode_with, syndrome, CodeLibrary, DecodeOptions, LLR_CLAMP};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Real;
use crate::units::sig9;

/// h₂(p), with h₂(0) = h₂(1) = 0.
pub fn binary_entropy<T: Real>(p: T) -> T {
    if p <= T::zero() || p >= T::one() {
        return T::zero();
    }
    let q = T::one() - p;
    -(p * p.log2() + q * q.log2())
}

/// Φ ∈ [0, 0.5] with 1 − h₂(Φ) = c, by bisection to 1e-9.
pub fn inverse_entropy(c: f64) -> f64 {
    let target = 1.0 - c.clamp(0.0, 1.0);
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if c >= 1.0 {
        0.0
    } else if c <= 0.0 {
        0.5
    } else {
        0.5 * (lo + hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Selection {
    MeanQber,
    MeanCapacity,
}

impl Selection {
    pub fn name(self) -> &'static str {
        match self {
            Self::MeanQber => "mean-qber",
            Self::MeanCapacity => "mean-capacity",
        }
    }
}

/// Equivalent crossover probability of a block used to pick the first code.
pub fn select_phi<Q: Copy + Into<f64>>(q: &[Q], mode: Selection) -> f64 {
    if q.is_empty() {
        return 0.0;
    }
    let n = q.len() as f64;
    match mode {
        Selection::MeanQber => q.iter().map(|&x| x.into()).sum::<f64>() / n,
        Selection::MeanCapacity => {
            let h = q.iter().map(|&x| binary_entropy(x.into())).sum::<f64>() / n;
            inverse_entropy(1.0 - h)
        }
    }
}

/// ln((1 − q)/q) clamped to the decoder range.
pub fn llr_of(q: f64) -> f64 {
    if q <= 0.0 {
        return LLR_CLAMP;
    }
    ((1.0 - q) / q).ln().clamp(-LLR_CLAMP, LLR_CLAMP)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LlrMode {
    /// One LLR for the whole block, from the selection Φ.
    None,
    Full,
    /// Block mean of q per intensity class.
    ThreeLevel,
    /// Vacuum bits removed, block means for signal and decoy.
    TwoLevelNoVacuum,
    FullNoVacuum,
    /// Full LLR plus Gaussian noise.
    Noisy,
}

impl LlrMode {
    pub fn drops_vacuum(self) -> bool {
        matches!(self, Self::TwoLevelNoVacuum | Self::FullNoVacuum)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Strategy {
    pub llr: LlrMode,
    pub selection: Selection,
    /// Shuffle bit positions before blocking.
    pub shuffle: bool,
}

impl Strategy {
    pub const BASELINE: Strategy = Strategy {
        llr: LlrMode::Full,
        selection: Selection::MeanCapacity,
        shuffle: false,
    };

    /// The eight compared configurations, labelled a through h.
    pub fn sweep() -> [(char, Strategy); 8] {
        let b = Self::BASELINE;
        [
            ('a', Strategy { llr: LlrMode::None, ..b }),
            ('b', Strategy { shuffle: true, ..b }),
            ('c', Strategy { llr: LlrMode::Noisy, ..b }),
            ('d', Strategy { selection: Selection::MeanQber, ..b }),
            ('e', b),
            ('f', Strategy { llr: LlrMode::ThreeLevel, ..b }),
            ('g', Strategy { llr: LlrMode::TwoLevelNoVacuum, ..b }),
            ('h', Strategy { llr: LlrMode::FullNoVacuum, ..b }),
        ]
    }

    pub fn label(&self) -> Option<char> {
        Self::sweep().iter().find(|(_, s)| s == self).map(|(c, _)| *c)
    }

    pub fn name(&self) -> String {
        match Self::sweep().iter().find(|(_, s)| s == self) {
            Some((c, _)) => NAMES[(*c as u8 - b'a') as usize].to_string(),
            None => format!(
                "{:?}/{}{}",
                self.llr,
                self.selection.name(),
                if self.shuffle { "/shuffled" } else { "" }
            ),
        }
    }
}

const NAMES: [&str; 8] = [
    "no-llr",
    "randomized",
    "noisy-llr",
    "mean-qber",
    "baseline",
    "three-level",
    "two-level-no-vacuum",
    "baseline-no-vacuum",
];

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    /// Accepts the sweep names, their letters, and `full-llr` for the baseline.
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let key = if key == "full-llr" { "baseline".to_string() } else { key };
        Self::sweep()
            .iter()
            .zip(NAMES)
            .find(|((c, _), n)| *n == key || key.len() == 1 && key.starts_with(*c))
            .map(|((_, st), _)| *st)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown strategy {s:?}; expected one of {} or a letter a-h",
                    NAMES.join(", ")
                ))
            })
    }
}

/// Splits a key into full blocks and one tail block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockPlan {
    pub block_len: usize,
    /// The tail block is the largest multiple of this not exceeding the rest.
    pub granule: usize,
}

impl Default for BlockPlan {
    fn default() -> Self {
        Self {
            block_len: 460_800,
            granule: 1800,
        }
    }
}

impl BlockPlan {
    pub fn validate(&self) -> Result<()> {
        use crate::ldpc::BASE_COLS;
        if self.block_len == 0 || self.block_len % BASE_COLS != 0 {
            return Err(Error::InvalidConfig(format!(
                "reconcile.block_len must be a positive multiple of {BASE_COLS}, got {}",
                self.block_len
            )));
        }
        if self.granule == 0 || self.granule % BASE_COLS != 0 {
            return Err(Error::InvalidConfig(format!(
                "reconcile.granule must be a positive multiple of {BASE_COLS}, got {}",
                self.granule
            )));
        }
        Ok(())
    }

    /// Block ranges over `total` bits and the number of discarded bits.
    pub fn split(&self, total: usize) -> (Vec<Range<usize>>, usize) {
        let full = total / self.block_len;
        let mut out: Vec<Range<usize>> =
            (0..full).map(|k| k * self.block_len..(k + 1) * self.block_len).collect();
        let start = full * self.block_len;
        let tail = (total - start) / self.granule * self.granule;
        if tail > 0 {
            out.push(start..start + tail);
        }
        (out, total - start - tail)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconcileConfig {
    pub plan: BlockPlan,
    /// Initial code: highest rate with R ≤ 1 − f_margin·h₂(Φ).
    pub f_margin: f64,
    pub max_iters: usize,
    pub stall_iters: Option<usize>,
    pub noise_sigma: f64,
    pub tag_bits: usize,
    /// Seeds the shuffle, the LLR noise and the verification hashes.
    pub seed: u64,
}

impl Default for ReconcileConfig {
    fn default() -> Self {
        Self {
            plan: BlockPlan::default(),
            f_margin: 1.05,
            max_iters: 100,
            stall_iters: Some(12),
            noise_sigma: 0.125,
            tag_bits: 50,
            seed: 0,
        }
    }
}

impl ReconcileConfig {
    pub fn validate(&self) -> Result<()> {
        self.plan.validate()?;
        if !(self.f_margin.is_finite() && self.f_margin > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "reconcile.f_margin must be positive, got {}",
                self.f_margin
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("reconcile.max_iters must be at least 1".into()));
        }
        if self.stall_iters == Some(0) {
            return Err(Error::InvalidConfig("reconcile.stall_iters must be at least 1".into()));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "reconcile.noise_sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        if self.tag_bits == 0 || self.tag_bits > 64 {
            return Err(Error::InvalidConfig(format!(
                "reconcile.tag_bits must lie in 1..=64, got {}",
                self.tag_bits
            )));
        }
        Ok(())
    }
}

/// One block ready for reconciliation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Block {
    pub alice: Vec<u8>,
    pub bob: Vec<u8>,
    pub qber: Vec<f32>,
    pub intensity: Vec<u8>,
}

impl Block {
    pub fn len(&self) -> usize {
        self.alice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice.is_empty()
    }

    pub fn error_rate(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let e = self.alice.iter().zip(&self.bob).filter(|(a, b)| a != b).count();
        e as f64 / self.len() as f64
    }
}

/// Sifted key after vacuum filtering and shuffling.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PreparedKey {
    pub key: Block,
    pub removed_vacuum: usize,
    pub shuffle_seed: Option<u64>,
}

pub fn prepare(sifted: &SiftedData, strategy: &Strategy, seed: u64) -> PreparedKey {
    let bob = sifted.bob();
    let keep: Vec<usize> = (0..sifted.len())
        .filter(|&i| !strategy.llr.drops_vacuum() || sifted.intensity[i] != Intensity::Vacuum as u8)
        .collect();
    let removed_vacuum = sifted.len() - keep.len();
    let mut order = keep;
    let shuffle_seed = strategy.shuffle.then_some(seed);
    if strategy.shuffle {
        order.shuffle(&mut stream_rng(seed, Stream::Shuffle));
    }
    let key = Block {
        alice: order.iter().map(|&i| sifted.alice[i]).collect(),
        bob: order.iter().map(|&i| bob[i]).collect(),
        qber: order.iter().map(|&i| sifted.qber[i]).collect(),
        intensity: order.iter().map(|&i| sifted.intensity[i]).collect(),
    };
    PreparedKey {
        key,
        removed_vacuum,
        shuffle_seed,
    }
}

/// q values the strategy exposes to the decoder and to code selection.
pub fn effective_qber(block: &Block, mode: LlrMode) -> Vec<f64> {
    match mode {
        LlrMode::ThreeLevel | LlrMode::TwoLevelNoVacuum => {
            let mut sum = [0.0f64; 3];
            let mut cnt = [0usize; 3];
            for (&q, &a) in block.qber.iter().zip(&block.intensity) {
                let k = (a as usize).min(2);
                sum[k] += q as f64;
                cnt[k] += 1;
            }
            let mean = |k: usize| if cnt[k] > 0 { sum[k] / cnt[k] as f64 } else { 0.0 };
            block.intensity.iter().map(|&a| mean((a as usize).min(2))).collect()
        }
        _ => block.qber.iter().map(|&q| q as f64).collect(),
    }
}

/// Decoder LLRs of a block. `phi` is the selection value, used by
/// [`LlrMode::None`]; the noise stream is used by [`LlrMode::Noisy`].
pub fn build_llrs<R: Rng + ?Sized>(
    mode: LlrMode,
    q: &[f64],
    phi: f64,
    sigma: f64,
    rng: &mut R,
) -> Vec<f64> {
    match mode {
        LlrMode::None => vec![llr_of(phi); q.len()],
        LlrMode::Noisy if sigma > 0.0 => {
            let g = Normal::new(0.0, sigma).expect("sigma is finite and positive");
            q.iter()
                .map(|&x| (llr_of(x) + g.sample(rng)).clamp(-LLR_CLAMP, LLR_CLAMP))
                .collect()
        }
        _ => q.iter().map(|&x| llr_of(x)).collect(),
    }
}

/// Random linear GF(2) hash: bit j of the tag is the parity of the key
/// masked by the j-th random row.
pub fn hash_tag(bits: &[u8], tag_bits: usize, seed: u64) -> u64 {
    let words: Vec<u64> = bits
        .chunks(64)
        .map(|c| c.iter().enumerate().fold(0u64, |w, (i, &b)| w | ((b as u64 & 1) << i)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(Stream::Verification as u64);
    let mut tag = 0u64;
    for j in 0..tag_bits.min(64) {
        let mut acc = 0u64;
        for &w in &words {
            acc ^= w & rng.random::<u64>();
        }
        tag |= ((acc.count_ones() & 1) as u64) << j;
    }
    tag
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockOutcome {
    pub index: usize,
    pub n: usize,
    pub phi_sel: f64,
    /// Empirical error rate of the block.
    pub phi_actual: f64,
    pub rate_initial: f64,
    pub rate_final: f64,
    /// Syndrome bits of the last code tried.
    pub m_bits: usize,
    pub tag_bits: usize,
    pub success: bool,
    /// (1 − R)/h₂(Φ_actual) at the final rate.
    pub f: f64,
    pub decodes: usize,
    pub iterations: usize,
    /// Bob's corrected key equals Alice's (checked directly, not via the tag).
    pub verified_equal: bool,
}

impl BlockOutcome {
    pub fn leakage_bits(&self) -> usize {
        self.m_bits + self.tag_bits
    }
}

fn block_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Reconciles one block by descending the rate ladder until a decode
/// passes verification or the ladder is exhausted.
pub fn reconcile_block(
    index: usize,
    block: &Block,
    strategy: &Strategy,
    cfg: &ReconcileConfig,
    lib: &CodeLibrary,
) -> Result<BlockOutcome> {
    let n = block.len();
    let q = effective_qber(block, strategy.llr);
    let phi_sel = select_phi(&q, strategy.selection);
    let bseed = block_seed(cfg.seed, index);
    let llr: Vec<f32> = build_llrs(
        strategy.llr,
        &q,
        phi_sel,
        cfg.noise_sigma,
        &mut stream_rng(bseed, Stream::LlrNoise),
    )
    .into_iter()
    .map(|x| x as f32)
    .collect();
    let phi_actual = block.error_rate();
    let bound = 1.0 - cfg.f_margin * binary_entropy(phi_sel);
    let ladder = lib.ladder();
    let start = ladder
        .iter()
        .position(|&m| CodeLibrary::rate_of(m) <= bound + 1e-12)
        .unwrap_or(ladder.len().saturating_sub(1));
    let opts = DecodeOptions {
        max_iters: cfg.max_iters,
        stall_iters: cfg.stall_iters,
    };
    let tag_a = hash_tag(&block.alice, cfg.tag_bits, bseed);
    let mut out = BlockOutcome {
        index,
        n,
        phi_sel,
        phi_actual,
        rate_initial: f64::NAN,
        rate_final: f64::NAN,
        m_bits: 0,
        tag_bits: cfg.tag_bits,
        success: false,
        f: f64::NAN,
        decodes: 0,
        iterations: 0,
        verified_equal: false,
    };
    for &rows in &ladder[start..] {
        let Some(code) = lib.code(n, rows)? else {
            continue;
        };
        let rate = code.rate();
        if out.rate_initial.is_nan() {
            out.rate_initial = rate;
        }
        let sa = syndrome(&code, &block.alice)?;
        let sb = syndrome(&code, &block.bob)?;
        let target: Vec<u8> = sa.iter().zip(&sb).map(|(a, b)| a ^ b).collect();
        let res = decode_with(&code, &target, &llr, &opts)?;
        out.decodes += 1;
        out.iterations += res.iterations;
        out.rate_final = rate;
        out.m_bits = code.m();
        if !res.success {
            continue;
        }
        let corrected: Vec<u8> = block.bob.iter().zip(&res.error).map(|(b, e)| b ^ e).collect();
        if hash_tag(&corrected, cfg.tag_bits, bseed) == tag_a {
            out.success = true;
            out.verified_equal = corrected == block.alice;
            break;
        }
    }
    let h = binary_entropy(phi_actual);
    out.f = if out.rate_final.is_nan() {
        f64::NAN
    } else if h > 0.0 {
        (1.0 - out.rate_final) / h
    } else {
        f64::INFINITY
    };
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PassOutcome {
    pub strategy: Strategy,
    pub blocks: Vec<BlockOutcome>,
    pub sifted_bits: usize,
    pub removed_vacuum: usize,
    pub discarded_bits: usize,
    pub shuffle_seed: Option<u64>,
}

impl PassOutcome {
    /// λ_IR: syndrome plus tag bits over all blocks, failed ones included.
    pub fn leakage_bits(&self) -> usize {
        self.blocks.iter().map(BlockOutcome::leakage_bits).sum()
    }

    pub fn corrected_bits(&self) -> usize {
        self.blocks.iter().filter(|b| b.success).map(|b| b.n).sum()
    }

    pub fn failed_blocks(&self) -> usize {
        self.blocks.iter().filter(|b| !b.success).count()
    }

    pub fn mean_rate(&self) -> f64 {
        let r: Vec<f64> = self.blocks.iter().map(|b| b.rate_final).filter(|r| r.is_finite()).collect();
        if r.is_empty() {
            return f64::NAN;
        }
        r.iter().sum::<f64>() / r.len() as f64
    }

    /// Aggregate inefficiency Σ m / Σ n·h₂(Φ_actual) over successful blocks.
    pub fn mean_f(&self) -> f64 {
        let ok = self.blocks.iter().filter(|b| b.success);
        let (m, h) = ok.fold((0.0, 0.0), |(m, h), b| {
            (m + b.m_bits as f64, h + b.n as f64 * binary_entropy(b.phi_actual))
        });
        if h > 0.0 {
            m / h
        } else {
            f64::NAN
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "block_idx,n,phi_sel,mode,strategy,rate_final,m_bits,success,f")?;
        for b in &self.blocks {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                b.index,
                b.n,
                sig9(b.phi_sel),
                self.strategy.selection.name(),
                self.strategy.name(),
                sig9(b.rate_final),
                b.m_bits,
                b.success as u8,
                sig9(b.f)
            )?;
        }
        Ok(())
    }
}

/// Reconciles a whole pass. Blocks run on all available cores; results are
/// ordered by block index.
pub fn run_pass(
    sifted: &SiftedData,
    strategy: &Strategy,
    cfg: &ReconcileConfig,
    lib: &CodeLibrary,
) -> Result<PassOutcome> {
    cfg.validate()?;
    let prepared = prepare(sifted, strategy, cfg.seed);
    let (ranges, discarded_bits) = cfg.plan.split(prepared.key.len());
    let key = &prepared.key;
    let slice = |r: &Range<usize>| Block {
        alice: key.alice[r.clone()].to_vec(),
        bob: key.bob[r.clone()].to_vec(),
        qber: key.qber[r.clone()].to_vec(),
        intensity: key.intensity[r.clone()].to_vec(),
    };
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(ranges.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<BlockOutcome>>>> =
        Mutex::new((0..ranges.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= ranges.len() {
                    break;
                }
                let r = reconcile_block(k, &slice(&ranges[k]), strategy, cfg, lib);
                results.lock().unwrap()[k] = Some(r);
            });
        }
    });
    let blocks = results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every block index is processed"))
        .collect::<Result<Vec<_>>>()?;
    Ok(PassOutcome {
        strategy: *strategy,
        blocks,
        sifted_bits: sifted.len(),
        removed_vacuum: prepared.removed_vacuum,
        discarded_bits,
        shuffle_seed: prepared.shuffle_seed,
    })
}
