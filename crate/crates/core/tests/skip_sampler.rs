#[path = "common/oracles.rs"]
mod oracles;

use oracles::{click_histograms, direct_clicks, homogeneity};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use satqkd::detection::sample_clicks;

const WINDOWS: usize = 200;
const N_WINDOW: u64 = 1000;
const HOLDOFF: u64 = 3;
const REPLICATES: usize = 60;

fn probabilities() -> Vec<f64> {
    (0..WINDOWS)
        .map(|w| 1e-3 + 0.04 * (0.5 + 0.5 * (w as f64 * 0.07).sin()))
        .collect()
}

#[test]
fn skip_sampler_matches_per_slot_bernoulli() {
    let p = probabilities();
    let mut r1 = ChaCha8Rng::seed_from_u64(21);
    let mut r2 = ChaCha8Rng::seed_from_u64(22);
    let skip: Vec<Vec<u64>> = (0..REPLICATES).map(|_| sample_clicks(&p, N_WINDOW, HOLDOFF, &mut r1)).collect();
    let slot: Vec<Vec<u64>> = (0..REPLICATES).map(|_| direct_clicks(&p, N_WINDOW, HOLDOFF, &mut r2)).collect();
    for c in &skip {
        assert!(c.windows(2).all(|w| w[1] >= w[0] + HOLDOFF));
    }
    let (a_count, a_gap) = click_histograms(&skip, WINDOWS, N_WINDOW, HOLDOFF);
    let (b_count, b_gap) = click_histograms(&slot, WINDOWS, N_WINDOW, HOLDOFF);
    let p_count = homogeneity(&a_count, &b_count);
    let p_gap = homogeneity(&a_gap, &b_gap);
    println!("per-window counts p = {p_count:.3}, gap histogram p = {p_gap:.3}");
    assert!(p_count > 0.01, "per-window counts differ, p = {p_count}");
    assert!(p_gap > 0.01, "inter-click gaps differ, p = {p_gap}");
}

#[test]
fn zero_probability_windows_stay_silent() {
    let mut p = vec![0.02; 10];
    p[3] = 0.0;
    p[7] = 0.0;
    let c = sample_clicks(&p, N_WINDOW, HOLDOFF, &mut ChaCha8Rng::seed_from_u64(1));
    assert!(c.iter().all(|&s| s / N_WINDOW != 3 && s / N_WINDOW != 7));
    assert!(c.iter().all(|&s| s < 10 * N_WINDOW));
}
