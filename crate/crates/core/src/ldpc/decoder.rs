use super::lift::LiftedCode;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Magnitude bound on every LLR and message.
pub const LLR_CLAMP: f64 = 30.0;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeResult {
    /// Estimated error pattern (hard decision of the last iteration).
    pub error: Vec<u8>,
    pub success: bool,
    pub iterations: usize,
}

/// tanh(x/2) = (eˣ − 1)/(eˣ + 1). The cancellation near 0 costs relative
/// but not absolute precision, which is all the products need; exp_m1 is
/// several times slower.
#[inline]
fn half_tanh<T: Real>(x: T) -> T {
    let e = x.abs().exp();
    let t = (e - T::one()) / (e + T::one());
    if x < T::zero() {
        -t
    } else {
        t
    }
}

/// 2·atanh(p) = ln((1 + p)/(1 − p)), odd in p.
#[inline]
fn twice_atanh<T: Real>(p: T) -> T {
    let a = p.abs();
    let v = ((T::one() + a) / (T::one() - a)).ln();
    if p < T::zero() {
        -v
    } else {
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecodeOptions {
    pub max_iters: usize,
    /// Give up once the number of unsatisfied checks has not reached a new
    /// minimum for this many iterations.
    pub stall_iters: Option<usize>,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            stall_iters: None,
        }
    }
}

/// Sum-product syndrome decoding. The sign of every check-to-variable
/// message is flipped where the target syndrome bit is 1. Positive LLR favors
/// error bit 0; ties decide 0.
pub fn decode<T: Real>(
    code: &LiftedCode,
    target: &[u8],
    llr: &[T],
    max_iters: usize,
) -> Result<DecodeResult> {
    decode_with(
        code,
        target,
        llr,
        &DecodeOptions {
            max_iters,
            stall_iters: None,
        },
    )
}

pub fn decode_with<T: Real>(
    code: &LiftedCode,
    target: &[u8],
    llr: &[T],
    opts: &DecodeOptions,
) -> Result<DecodeResult> {
    let max_iters = opts.max_iters;
    if target.len() != code.m() {
        return Err(Error::LengthMismatch {
            expected: code.m(),
            actual: target.len(),
        });
    }
    if llr.len() != code.n() {
        return Err(Error::LengthMismatch {
            expected: code.n(),
            actual: llr.len(),
        });
    }
    if let Some(v) = llr.iter().find(|v| !v.is_finite()) {
        return Err(Error::OutOfDomain {
            what: "llr",
            value: v.to_f64_lossy(),
            domain: "finite",
        });
    }
    let clamp = T::lit(LLR_CLAMP);
    let prior: Vec<T> = llr.iter().map(|&l| l.max(-clamp).min(clamp)).collect();
    let e = code.edges();
    let mut v2c: Vec<T> = (0..e).map(|k| prior[code.edge_var(k)]).collect();
    let mut c2v = vec![T::zero(); e];
    let mut t = vec![T::zero(); e];
    let mut hard = vec![0u8; code.n()];
    let (mut best, mut since) = (usize::MAX, 0usize);
    for it in 1..=max_iters.max(1) {
        for c in 0..code.m() {
            let r = code.check_range(c);
            // Leave-one-out products of tanh(m/2): prefix pass into `t`,
            // suffix pass applied on the way back. v2c is overwritten by its
            // tanh; the variable update rewrites it.
            let mut acc = if target[c] & 1 == 1 { -T::one() } else { T::one() };
            for k in r.clone() {
                t[k] = acc;
                v2c[k] = half_tanh(v2c[k]);
                acc = acc * v2c[k];
            }
            let mut suffix = T::one();
            for k in r.rev() {
                let out = twice_atanh(t[k] * suffix);
                c2v[k] = out.max(-clamp).min(clamp);
                suffix = suffix * v2c[k];
            }
        }
        for v in 0..code.n() {
            let edges = code.var_edges(v);
            let mut total = prior[v];
            for &k in edges {
                total = total + c2v[k as usize];
            }
            hard[v] = (total < T::zero()) as u8;
            for &k in edges {
                let m = total - c2v[k as usize];
                v2c[k as usize] = m.max(-clamp).min(clamp);
            }
        }
        let bad = unsatisfied(code, &hard, target);
        if bad == 0 {
            return Ok(DecodeResult {
                error: hard,
                success: true,
                iterations: it,
            });
        }
        if bad < best {
            (best, since) = (bad, 0);
        } else {
            since += 1;
        }
        if opts.stall_iters.is_some_and(|s| since >= s) {
            return Ok(DecodeResult {
                error: hard,
                success: false,
                iterations: it,
            });
        }
    }
    Ok(DecodeResult {
        error: hard,
        success: false,
        iterations: max_iters.max(1),
    })
}

fn unsatisfied(code: &LiftedCode, x: &[u8], target: &[u8]) -> usize {
    (0..code.m())
        .filter(|&c| code.check(c).iter().fold(0u8, |s, &v| s ^ x[v as usize]) != target[c])
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::{lift, syndrome, Protograph};

    #[test]
    fn tanh_helpers() {
        for &x in &[-25.0f64, -3.0, -0.01, 0.0, 1e-6, 0.5, 4.0, 29.0] {
            assert!((half_tanh(x) - (x / 2.0).tanh()).abs() < 1e-15);
            if x.abs() < 20.0 {
                assert!((twice_atanh(half_tanh(x)) - x).abs() < 1e-9 * x.abs().max(1.0));
            }
        }
        assert!(twice_atanh(1.0f64).is_infinite());
    }

    #[test]
    fn zero_syndrome_confident_llr() {
        let p = Protograph::new(&[vec![1, 1, 1, 1, 1, 0], vec![0, 1, 1, 1, 1, 1]]).unwrap();
        let c = lift(&p, 20, 1).unwrap();
        let r = decode(&c, &vec![0; c.m()], &vec![20.0f64; c.n()], 100).unwrap();
        assert!(r.success);
        assert_eq!(r.iterations, 1);
        assert!(r.error.iter().all(|&b| b == 0));
    }

    #[test]
    fn stall_stops_early() {
        let p = Protograph::new(&[vec![1, 1, 1, 1, 1, 1], vec![1, 1, 1, 1, 1, 1]]).unwrap();
        let c = lift(&p, 7, 3).unwrap();
        let target: Vec<u8> = (0..c.m()).map(|i| (i % 2) as u8).collect();
        let llr = vec![0.2f64; c.n()];
        let full = decode(&c, &target, &llr, 60).unwrap();
        let opts = DecodeOptions {
            max_iters: 60,
            stall_iters: Some(5),
        };
        let short = decode_with(&c, &target, &llr, &opts).unwrap();
        assert_eq!(full.success, short.success);
        if !full.success {
            assert!(short.iterations < 60);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = Protograph::new(&[vec![1, 1, 1]]).unwrap();
        let c = lift(&p, 3, 1).unwrap();
        assert!(decode(&c, &[0; 2], &[1.0f64; 9], 5).is_err());
        assert!(decode(&c, &[0; 3], &[1.0f64; 8], 5).is_err());
        let mut l = vec![1.0f64; 9];
        l[4] = f64::NAN;
        assert!(decode(&c, &[0; 3], &l, 5).is_err());
    }

    #[test]
    fn corrects_single_error() {
        let p = Protograph::new(&[
            vec![1, 1, 1, 1, 0, 0],
            vec![0, 1, 1, 1, 1, 0],
            vec![1, 0, 1, 0, 1, 1],
        ])
        .unwrap();
        let c = lift(&p, 31, 2).unwrap();
        let mut e = vec![0u8; c.n()];
        e[17] = 1;
        let s = syndrome(&c, &e).unwrap();
        let r = decode(&c, &s, &vec![3.0f32; c.n()], 50).unwrap();
        assert!(r.success);
        assert_eq!(r.error, e);
    }
}
