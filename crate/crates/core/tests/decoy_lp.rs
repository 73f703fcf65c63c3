use satqkd::detection::DetectorConfig;
use satqkd::keyrate::{decoy_bounds, BasisCounts, DecoyObservations, DecoySetup, SecurityParams};

const PHOTONS: usize = 40;

#[derive(Clone, Copy, PartialEq)]
enum Sense {
    Le,
    Ge,
}

/// Two-phase dense simplex with Bland's rule; minimizes c·x, x ≥ 0.
/// Every right-hand side must be non-negative.
fn simplex_min(c: &[f64], rows: &[(Vec<f64>, Sense, f64)]) -> f64 {
    let nv = c.len();
    let m = rows.len();
    let n_art = rows.iter().filter(|r| r.1 == Sense::Ge).count();
    let cols = nv + m + n_art;
    let mut t = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0; m];
    let mut art = nv + m;
    for (i, (a, sense, b)) in rows.iter().enumerate() {
        assert!(*b >= 0.0);
        t[i][..nv].copy_from_slice(a);
        t[i][cols] = *b;
        match sense {
            Sense::Le => {
                t[i][nv + i] = 1.0;
                basis[i] = nv + i;
            }
            Sense::Ge => {
                t[i][nv + i] = -1.0;
                t[i][art] = 1.0;
                basis[i] = art;
                art += 1;
            }
        }
    }
    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, obj: &[f64], allowed: usize| loop {
        let enter = (0..allowed).find(|&j| {
            let d = obj[j] - (0..m).map(|i| obj[basis[i]] * t[i][j]).sum::<f64>();
            d < -1e-12
        });
        let Some(j) = enter else { break };
        let mut leave: Option<(f64, usize, usize)> = None;
        for i in 0..m {
            if t[i][j] > 1e-12 {
                let ratio = t[i][cols] / t[i][j];
                let better = match leave {
                    None => true,
                    Some((r, _, b)) => ratio < r - 1e-15 || (ratio <= r + 1e-15 && basis[i] < b),
                };
                if better {
                    leave = Some((ratio, i, basis[i]));
                }
            }
        }
        let (_, r, _) = leave.expect("bounded program");
        pivot(t, r, j);
        basis[r] = j;
    };
    let mut phase1 = vec![0.0; cols];
    phase1[nv + m..].fill(1.0);
    run(&mut t, &mut basis, &phase1, cols);
    let infeasible: f64 = (0..m).filter(|&i| basis[i] >= nv + m).map(|i| t[i][cols]).sum();
    assert!(infeasible < 1e-9, "program infeasible ({infeasible})");
    // Drive zero-valued artificials out of the basis.
    for i in 0..m {
        if basis[i] >= nv + m {
            if let Some(j) = (0..nv + m).find(|&j| t[i][j].abs() > 1e-9) {
                pivot(&mut t, i, j);
                basis[i] = j;
            }
        }
    }
    let mut phase2 = vec![0.0; cols];
    phase2[..nv].copy_from_slice(c);
    run(&mut t, &mut basis, &phase2, nv + m);
    (0..m).map(|i| phase2[basis[i]] * t[i][cols]).sum()
}

fn pivot(t: &mut [Vec<f64>], r: usize, j: usize) {
    let p = t[r][j];
    for v in t[r].iter_mut() {
        *v /= p;
    }
    let row = t[r].clone();
    for (i, other) in t.iter_mut().enumerate() {
        if i != r && other[j] != 0.0 {
            let f = other[j];
            for (o, &x) in other.iter_mut().zip(&row) {
                *o -= f * x;
            }
        }
    }
}

fn poisson(k: f64, n: usize) -> f64 {
    if k == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let ln_fact: f64 = (1..=n).map(|i| (i as f64).ln()).sum();
    (-k + n as f64 * k.ln() - ln_fact).exp()
}

/// Gain Q_k for the yield model Y_n = 1 − (1 − Y_0)(1 − η)^n.
fn gain(k: f64, eta: f64, y0: f64) -> f64 {
    1.0 - (1.0 - y0) * (-eta * k).exp()
}

/// Minimum Y_1 over yields in [0, 1] consistent with the three gains.
fn lp_single_yield(setup: &DecoySetup, q: [f64; 3]) -> f64 {
    let mut c = vec![0.0; PHOTONS];
    c[1] = 1.0;
    let mut rows = Vec::new();
    for i in 0..3 {
        let k = setup.intensity[i];
        let a: Vec<f64> = (0..PHOTONS).map(|n| poisson(k, n) / q[i]).collect();
        let tail = (1.0 - a.iter().sum::<f64>() * q[i]).max(0.0) / q[i];
        rows.push((a.clone(), Sense::Le, 1.0));
        rows.push((a, Sense::Ge, (1.0 - tail).max(0.0)));
    }
    for n in 0..PHOTONS {
        let mut a = vec![0.0; PHOTONS];
        a[n] = 1.0;
        rows.push((a, Sense::Le, 1.0));
    }
    simplex_min(&c, &rows)
}

#[test]
fn simplex_solves_a_known_program() {
    // min x + y s.t. x + 2y ≥ 2, 3x + y ≥ 3, x ≤ 4: optimum 1.4 at (0.8, 0.6).
    let v = simplex_min(
        &[1.0, 1.0],
        &[
            (vec![1.0, 2.0], Sense::Ge, 2.0),
            (vec![3.0, 1.0], Sense::Ge, 3.0),
            (vec![1.0, 0.0], Sense::Le, 4.0),
        ],
    );
    assert!((v - 1.4).abs() < 1e-12, "{v}");
}

#[test]
fn analytic_bound_matches_linear_program_asymptotically() {
    let d = DetectorConfig::default();
    let setup = DecoySetup::from_detector(&d);
    for (eta, y0) in [(1e-3, 1e-6), (5e-3, 2e-6), (2e-2, 1e-5)] {
        let q = setup.intensity.map(|k| gain(k, eta, y0));
        // A 1e8-pulse pass scaled by 1e6 so the sampling deviations vanish.
        let pulses = 1e8 * 1e6;
        let sent = setup.probability.map(|p| pulses * p);
        let clicks = [0, 1, 2].map(|i| sent[i] * q[i]);
        let z = BasisCounts {
            sent,
            clicks,
            errors: [0.0; 3],
        };
        let obs = DecoyObservations { z, x: z };
        let b = decoy_bounds(&obs, &SecurityParams::default(), &setup);
        let analytic = b.s_z1_lower / z.total_clicks();
        let mean_gain: f64 = (0..3).map(|i| setup.probability[i] * q[i]).sum();
        let lp = setup.tau(1) * lp_single_yield(&setup, q) / mean_gain;
        let rel = (analytic - lp).abs() / lp;
        println!("eta {eta:e}: analytic {analytic:.6}, LP {lp:.6}, rel {rel:.2e}");
        assert!(rel < 0.02, "eta {eta}: analytic {analytic}, LP {lp}");
        assert!(analytic <= lp, "a lower bound cannot beat the program optimum");
    }
}
