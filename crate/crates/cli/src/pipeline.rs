//! End-to-end stages: channel, detection, reconciliation, key length.

use satqkd::detection::{
    assign_metadata, per_second_summary, sample_clicks, window_click_probabilities, SecondSummary,
    SiftedData, Tallies,
};
use satqkd::keyrate::{decoy_bounds, skl, DecoyBounds, DecoyObservations, DecoySetup, SklResult};
use satqkd::ldpc::CodeLibrary;
use satqkd::passlink::{pass_profile, static_budget};
use satqkd::reconcile::{run_pass, PassOutcome, Strategy};
use satqkd::rng::{stream_rng, Stream};
use satqkd::scintseries::synthesize;
use satqkd::turbulence::TurbulenceModel;
use satqkd::{LinkSample, TurbulenceState};

use crate::config::RunConfig;
use crate::CliError;

pub struct Channel {
    pub links: Vec<LinkSample>,
    pub states: Vec<TurbulenceState>,
    pub sample_rate_hz: u32,
    /// η_scint per sample.
    pub scint: Vec<f64>,
    /// Total efficiency per sample, stored at trace precision.
    pub eta: Vec<f32>,
}

pub fn simulate_channel(cfg: &RunConfig) -> Result<Channel, CliError> {
    let points = pass_profile(&cfg.pass)?;
    let links = static_budget(&points, &cfg.pass, &cfg.atmosphere, &cfg.losses)?;
    let model = TurbulenceModel::new(&cfg.turbulence, &cfg.pass)?;
    let states = model.states(&points)?;
    let series = synthesize(&states, &cfg.scint)?;
    let per_s = cfg.scint.samples_per_second()?;
    let eta = series
        .samples
        .iter()
        .enumerate()
        .map(|(i, &s)| (links[i / per_s].eta_static() * s) as f32)
        .collect();
    Ok(Channel {
        links,
        states,
        sample_rate_hz: per_s as u32,
        scint: series.samples,
        eta,
    })
}

pub struct Detection {
    pub pulses: u64,
    pub clicks: u64,
    pub n_window: u64,
    pub n_holdoff: u64,
    pub sifted: SiftedData,
    pub seconds: Vec<SecondSummary>,
}

/// Clicks and sifting over the pulse grid; every trace sample is one window.
pub fn simulate_detection(cfg: &RunConfig, eta: &[f32]) -> Result<Detection, CliError> {
    let n_window = cfg.window_slots()?;
    let n_holdoff = cfg.detector.holdoff_slots(cfg.pass.pulse_rate_hz);
    let eta: Vec<f64> = eta.iter().map(|&x| x as f64).collect();
    let p_click = window_click_probabilities(&eta, &cfg.detector);
    let clicks = sample_clicks(&p_click, n_window, n_holdoff, &mut stream_rng(cfg.seed, Stream::Clicks));
    let sifted = assign_metadata(
        &clicks,
        &eta,
        n_window,
        &cfg.detector,
        &mut stream_rng(cfg.seed, Stream::Metadata),
    );
    let rate = cfg.pass.pulse_rate_hz.round() as u64;
    let pulses = eta.len() as u64 * n_window;
    let seconds = per_second_summary(&clicks, &sifted, rate, pulses.div_ceil(rate.max(1)) as usize);
    Ok(Detection {
        pulses,
        clicks: clicks.len() as u64,
        n_window,
        n_holdoff,
        sifted,
        seconds,
    })
}

pub fn code_library(cfg: &RunConfig) -> Result<CodeLibrary, CliError> {
    Ok(CodeLibrary::new(cfg.ladder.clone())?)
}

pub fn reconcile(
    cfg: &RunConfig,
    sifted: &SiftedData,
    strategy: &Strategy,
    lib: &CodeLibrary,
) -> Result<PassOutcome, CliError> {
    Ok(run_pass(sifted, strategy, &cfg.reconcile, lib)?)
}

/// Summary of one reconciliation run, enough to evaluate the key length.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReconcileSummary {
    pub strategy: String,
    pub label: Option<char>,
    pub sifted_bits: usize,
    pub removed_vacuum: usize,
    pub discarded_bits: usize,
    pub blocks: usize,
    pub failed_blocks: usize,
    /// Bits in failed blocks.
    pub failed_bits: usize,
    pub corrected_bits: usize,
    pub leakage_bits: usize,
    pub mean_rate: f64,
    pub mean_f: f64,
    pub shuffle_seed: Option<u64>,
}

impl ReconcileSummary {
    pub fn of(o: &PassOutcome) -> Self {
        Self {
            strategy: o.strategy.name(),
            label: o.strategy.label(),
            sifted_bits: o.sifted_bits,
            removed_vacuum: o.removed_vacuum,
            discarded_bits: o.discarded_bits,
            blocks: o.blocks.len(),
            failed_blocks: o.failed_blocks(),
            failed_bits: o.blocks.iter().filter(|b| !b.success).map(|b| b.n).sum(),
            corrected_bits: o.corrected_bits(),
            leakage_bits: o.leakage_bits(),
            mean_rate: o.mean_rate(),
            mean_f: o.mean_f(),
            shuffle_seed: o.shuffle_seed,
        }
    }
}

pub fn bounds_of(cfg: &RunConfig, tallies: &Tallies, pulses: u64) -> DecoyBounds {
    let obs = DecoyObservations::from_tallies(tallies, pulses, &cfg.detector);
    decoy_bounds(&obs, &cfg.security, &DecoySetup::from_detector(&cfg.detector))
}

/// ℓ for the key that survives a reconciliation run.
pub fn key_length(cfg: &RunConfig, bounds: &DecoyBounds, r: &ReconcileSummary) -> SklResult {
    let other = (r.discarded_bits + r.failed_bits) as f64;
    let kept = bounds.trimmed(r.removed_vacuum as f64, other);
    skl(&kept, r.leakage_bits as f64, &cfg.security)
}
