//! The five commands. Each reads and writes fixed file names inside the
//! output directory, so stages can run separately or in one sweep.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use satqkd::detection::{SiftedData, Tallies};
use satqkd::keyrate::{DecoyBounds, SklResult};
use satqkd::reconcile::{PassOutcome, Strategy};
use satqkd::scintseries::{read_trace, write_trace};
use satqkd::units::sig9;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::pipeline::{self, Channel, Detection, ReconcileSummary};
use crate::CliError;

pub const BUDGET_CSV: &str = "budget.csv";
pub const TURBULENCE_CSV: &str = "turbulence.csv";
pub const CHANNEL_BIN: &str = "channel.bin";
pub const SCINT_CSV: &str = "scint_decimated.csv";
pub const SIFTED_BIN: &str = "sifted.bin";
pub const SECONDS_CSV: &str = "qkd_seconds.csv";
pub const DETECTION_JSON: &str = "detection.json";
pub const SKL_CSV: &str = "skl_report.csv";
pub const SKL_JSON: &str = "skl_report.json";

/// Decimated trace rows per second of pass.
const TRACE_CSV_RATE: usize = 100;

pub fn blocks_csv(s: &Strategy) -> String {
    format!("blocks_{}.csv", s.name())
}

pub fn reconcile_json(s: &Strategy) -> String {
    format!("reconcile_{}.json", s.name())
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    std::fs::create_dir_all(out)?;
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn open(out: &Path, name: &str) -> Result<BufReader<File>, CliError> {
    let p = out.join(name);
    File::open(&p)
        .map(BufReader::new)
        .map_err(|_| CliError::MissingInput(p.display().to_string()))
}

fn write_json<T: Serialize>(out: &Path, name: &str, v: &T) -> Result<(), CliError> {
    let mut w = create(out, name)?;
    serde_json::to_writer_pretty(&mut w, v).map_err(|e| CliError::Internal(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_json<T: for<'a> Deserialize<'a>>(out: &Path, name: &str) -> Result<T, CliError> {
    serde_json::from_reader(open(out, name)?)
        .map_err(|e| CliError::Internal(format!("{}: {e}", out.join(name).display())))
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config_hash: String,
    seed: u64,
    scale: f64,
    outputs: Vec<String>,
}

fn write_manifest(out: &Path, cfg: &RunConfig, command: &str, outputs: &[String]) -> Result<(), CliError> {
    write_json(
        out,
        &format!("manifest_{command}.json"),
        &Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            scale: cfg.scale,
            outputs: outputs.to_vec(),
        },
    )
}

fn write_channel(out: &Path, ch: &Channel) -> Result<(), CliError> {
    let mut w = create(out, BUDGET_CSV)?;
    writeln!(w, "t_s,elevation_deg,zenith_deg,range_m,v_perp_mps,coll_db,pointing_db,atm_db,rx_db,det_db,static_db")?;
    for l in &ch.links {
        let row = [
            l.t_s, l.elevation_deg, l.zenith_deg, l.range_m, l.v_perp_mps, l.coll_db, l.pointing_db,
            l.atm_db, l.rx_db, l.det_db, l.static_db(),
        ];
        writeln!(w, "{}", row.map(sig9).join(","))?;
    }
    w.flush()?;
    let mut w = create(out, TURBULENCE_CSV)?;
    writeln!(w, "t_s,rytov_variance,effective_length_m,d_aa,f_aa,psi,greenwood_hz")?;
    for (l, s) in ch.links.iter().zip(&ch.states) {
        let row = [l.t_s, s.rytov_variance, s.effective_length_m, s.d_aa, s.f_aa, s.psi, s.greenwood_hz];
        writeln!(w, "{}", row.map(sig9).join(","))?;
    }
    w.flush()?;
    let mut w = create(out, CHANNEL_BIN)?;
    write_trace(&mut w, ch.sample_rate_hz, &ch.eta)?;
    w.flush()?;
    let mut w = create(out, SCINT_CSV)?;
    writeln!(w, "t_s,eta_scint,eta")?;
    let step = (ch.sample_rate_hz as usize / TRACE_CSV_RATE).max(1);
    for i in (0..ch.scint.len()).step_by(step) {
        let t = i as f64 / ch.sample_rate_hz as f64;
        writeln!(w, "{},{},{}", sig9(t), sig9(ch.scint[i]), sig9(ch.eta[i] as f64))?;
    }
    w.flush()?;
    Ok(())
}

pub fn simulate_pass(cfg: &RunConfig, out: &Path) -> Result<Channel, CliError> {
    let ch = pipeline::simulate_channel(cfg)?;
    write_channel(out, &ch)?;
    let outputs = [BUDGET_CSV, TURBULENCE_CSV, CHANNEL_BIN, SCINT_CSV].map(String::from);
    write_manifest(out, cfg, "simulate-pass", &outputs)?;
    Ok(ch)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TallyRecord {
    pub z_clicks: [u64; 3],
    pub z_errors: [u64; 3],
    pub x_clicks: [u64; 3],
    pub x_errors: [u64; 3],
    pub mixed: u64,
}

impl From<&Tallies> for TallyRecord {
    fn from(t: &Tallies) -> Self {
        Self {
            z_clicks: t.z_clicks,
            z_errors: t.z_errors,
            x_clicks: t.x_clicks,
            x_errors: t.x_errors,
            mixed: t.mixed,
        }
    }
}

impl From<&TallyRecord> for Tallies {
    fn from(t: &TallyRecord) -> Self {
        Self {
            z_clicks: t.z_clicks,
            z_errors: t.z_errors,
            x_clicks: t.x_clicks,
            x_errors: t.x_errors,
            mixed: t.mixed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub pulses: u64,
    pub clicks: u64,
    pub n_window: u64,
    pub n_holdoff: u64,
    pub sifted_bits: usize,
    pub mean_qber: f64,
    pub vacuum_fraction: f64,
    pub tallies: TallyRecord,
}

fn write_detection(out: &Path, d: &Detection) -> Result<DetectionReport, CliError> {
    let mut w = create(out, SIFTED_BIN)?;
    d.sifted.write_binary(&mut w)?;
    w.flush()?;
    let mut w = create(out, SECONDS_CSV)?;
    writeln!(w, "t_s,clicks,sifted_z,mean_qber")?;
    for s in &d.seconds {
        writeln!(w, "{},{},{},{}", s.t_s, s.clicks, s.sifted_z, sig9(s.mean_qber))?;
    }
    w.flush()?;
    let rep = DetectionReport {
        pulses: d.pulses,
        clicks: d.clicks,
        n_window: d.n_window,
        n_holdoff: d.n_holdoff,
        sifted_bits: d.sifted.len(),
        mean_qber: d.sifted.mean_qber(),
        vacuum_fraction: d.sifted.vacuum_fraction(),
        tallies: (&d.sifted.tallies).into(),
    };
    write_json(out, DETECTION_JSON, &rep)?;
    Ok(rep)
}

pub fn simulate_qkd(cfg: &RunConfig, out: &Path) -> Result<Detection, CliError> {
    let (rate, eta) = read_trace(open(out, CHANNEL_BIN)?)?;
    if rate as usize != cfg.scint.samples_per_second()? {
        return Err(CliError::Config(format!(
            "{CHANNEL_BIN} was written at {rate} samples/s but the configuration implies {}",
            cfg.scint.sample_rate_hz
        )));
    }
    let d = pipeline::simulate_detection(cfg, &eta)?;
    write_detection(out, &d)?;
    let outputs = [SIFTED_BIN, SECONDS_CSV, DETECTION_JSON].map(String::from);
    write_manifest(out, cfg, "simulate-qkd", &outputs)?;
    Ok(d)
}

fn write_reconcile(out: &Path, o: &PassOutcome) -> Result<ReconcileSummary, CliError> {
    let mut w = create(out, &blocks_csv(&o.strategy))?;
    o.write_csv(&mut w)?;
    w.flush()?;
    let s = ReconcileSummary::of(o);
    write_json(out, &reconcile_json(&o.strategy), &s)?;
    Ok(s)
}

fn read_sifted(out: &Path) -> Result<SiftedData, CliError> {
    Ok(SiftedData::read_binary(open(out, SIFTED_BIN)?)?)
}

pub fn reconcile(cfg: &RunConfig, out: &Path, strategy: &Strategy) -> Result<PassOutcome, CliError> {
    let sifted = read_sifted(out)?;
    let lib = pipeline::code_library(cfg)?;
    let o = pipeline::reconcile(cfg, &sifted, strategy, &lib)?;
    write_reconcile(out, &o)?;
    let outputs = vec![blocks_csv(strategy), reconcile_json(strategy)];
    write_manifest(out, cfg, &format!("reconcile-{}", strategy.name()), &outputs)?;
    Ok(o)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SklRow {
    pub label: Option<char>,
    pub strategy: String,
    pub corrected_bits: usize,
    pub leakage_bits: usize,
    pub failed_blocks: usize,
    pub mean_rate: f64,
    pub mean_f: f64,
    pub s_z0_lower: f64,
    pub s_z1_lower: f64,
    pub phi_x1_upper: f64,
    pub penalty_bits: f64,
    pub skl_bits: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SklReport {
    /// Reference recipe of the decoy bounds.
    pub bound_recipe: String,
    pub pulses: u64,
    pub sifted_bits: usize,
    pub bounds_clamped: bool,
    pub rows: Vec<SklRow>,
}

fn skl_row(r: &ReconcileSummary, k: &SklResult) -> SklRow {
    SklRow {
        label: r.label,
        strategy: r.strategy.clone(),
        corrected_bits: r.corrected_bits,
        leakage_bits: r.leakage_bits,
        failed_blocks: r.failed_blocks,
        mean_rate: r.mean_rate,
        mean_f: r.mean_f,
        s_z0_lower: k.s_z0_lower,
        s_z1_lower: k.s_z1_lower,
        phi_x1_upper: k.phi_x1_upper,
        penalty_bits: k.penalty_bits,
        skl_bits: k.length_bits,
    }
}

fn build_report(
    cfg: &RunConfig,
    det: &DetectionReport,
    recs: &[ReconcileSummary],
) -> (SklReport, DecoyBounds) {
    let bounds = pipeline::bounds_of(cfg, &(&det.tallies).into(), det.pulses);
    let rows = recs
        .iter()
        .map(|r| skl_row(r, &pipeline::key_length(cfg, &bounds, r)))
        .collect();
    let rep = SklReport {
        bound_recipe: "two-decoy finite-key bounds with Hoeffding deviations, eps_sec split over 21 terms \
                       (Lim, Curty, Walenta, Xu, Zbinden 2014)"
            .into(),
        pulses: det.pulses,
        sifted_bits: det.sifted_bits,
        bounds_clamped: bounds.clamped,
        rows,
    };
    (rep, bounds)
}

fn write_skl(out: &Path, rep: &SklReport) -> Result<(), CliError> {
    let mut w = create(out, SKL_CSV)?;
    writeln!(w, "label,strategy,corrected_bits,leakage_bits,failed_blocks,mean_rate,f,s_z0_lower,s_z1_lower,phi_x1_upper,skl_bits")?;
    for r in &rep.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.label.map(String::from).unwrap_or_default(),
            r.strategy,
            r.corrected_bits,
            r.leakage_bits,
            r.failed_blocks,
            sig9(r.mean_rate),
            sig9(r.mean_f),
            sig9(r.s_z0_lower),
            sig9(r.s_z1_lower),
            sig9(r.phi_x1_upper),
            sig9(r.skl_bits)
        )?;
    }
    w.flush()?;
    write_json(out, SKL_JSON, rep)
}

pub fn skl_report(cfg: &RunConfig, out: &Path) -> Result<SklReport, CliError> {
    let det: DetectionReport = read_json(out, DETECTION_JSON)?;
    let mut recs = Vec::new();
    for s in &cfg.strategies {
        if out.join(reconcile_json(s)).exists() {
            recs.push(read_json::<ReconcileSummary>(out, &reconcile_json(s))?);
        }
    }
    if recs.is_empty() {
        return Err(CliError::MissingInput(format!(
            "no reconcile_<strategy>.json in {}",
            out.display()
        )));
    }
    let (rep, _) = build_report(cfg, &det, &recs);
    write_skl(out, &rep)?;
    write_manifest(out, cfg, "skl-report", &[SKL_CSV.into(), SKL_JSON.into()])?;
    Ok(rep)
}

pub struct Sweep {
    pub detection: DetectionReport,
    pub outcomes: Vec<PassOutcome>,
    pub report: SklReport,
}

/// One channel and detection realization shared by every strategy.
pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<Sweep, CliError> {
    let ch = pipeline::simulate_channel(cfg)?;
    write_channel(out, &ch)?;
    let det = pipeline::simulate_detection(cfg, &ch.eta)?;
    let detection = write_detection(out, &det)?;
    let lib = pipeline::code_library(cfg)?;
    let mut outcomes = Vec::new();
    let mut recs = Vec::new();
    let mut outputs: Vec<String> = [BUDGET_CSV, TURBULENCE_CSV, CHANNEL_BIN, SCINT_CSV, SIFTED_BIN, SECONDS_CSV, DETECTION_JSON]
        .map(String::from)
        .to_vec();
    for s in &cfg.strategies {
        let o = pipeline::reconcile(cfg, &det.sifted, s, &lib)?;
        recs.push(write_reconcile(out, &o)?);
        outputs.push(blocks_csv(s));
        outputs.push(reconcile_json(s));
        outcomes.push(o);
    }
    let (report, _) = build_report(cfg, &detection, &recs);
    write_skl(out, &report)?;
    outputs.push(SKL_CSV.into());
    outputs.push(SKL_JSON.into());
    write_manifest(out, cfg, "sweep-strategies", &outputs)?;
    Ok(Sweep {
        detection,
        outcomes,
        report,
    })
}

pub fn default_out() -> PathBuf {
    PathBuf::from("out")
}
