//! Monte Carlo FER/BER simulation over BI-AWGN.
//!
//! Every frame is a pure function of `(master_seed, frame_index, Eb/N0)`:
//! the message and the channel noise come from per-frame ChaCha streams. A
//! point runs frames in parallel batches and then folds the results in frame
//! order, stopping at exactly the same frame whatever the worker count.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{self, frame_rng, ChannelConfig};
use crate::code::{BaseOrder, FdpcCode, FdpcParams};
use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::lnms::{DecodeOutcome, DecoderConfig, LnmsDecoder};
use crate::schedule::{schedule_for, LayerSchedule};
use crate::sgbf::{run_sgbf, CandidateMode, SgbfConfig, SgbfOutcome};

/// Header of the sweep CSV.
pub const CSV_HEADER: &str = "ebno_db,frames,frame_errors,bit_errors,fer,ber,avg_iterations,sgbf_invocations,sgbf_rescues,undetected_errors,wall_seconds";

const MESSAGE_SALT: u64 = 0x6d65_7373_6167_6573;
const FIRST_BATCH: u64 = 512;
const MAX_BATCH: u64 = 1 << 15;

fn default_alpha() -> f64 {
    0.75
}
fn default_max_iter() -> usize {
    5
}
fn default_min_frame_errors() -> u64 {
    100
}
fn default_max_frames() -> u64 {
    10_000_000
}

/// A full experiment description. Serialized flat as the JSON config file
/// and the sweep sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    /// Construction overrides; the parameter solver fills whatever is unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_per: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_order: Option<BaseOrder>,
    #[serde(default)]
    pub perm_seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Force the schedule to this many layers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip: Option<f64>,
    /// Flip-set size; 0 disables bit flipping.
    #[serde(default)]
    pub sgbf_t: usize,
    #[serde(default)]
    pub sgbf_strict: bool,
    pub ebno_points: Vec<f64>,
    #[serde(default = "default_min_frame_errors")]
    pub min_frame_errors: u64,
    #[serde(default = "default_max_frames")]
    pub max_frames: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub clean: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl SweepConfig {
    /// Defaults for an `(N, K)` code: α = 0.75, 5 iterations, no flipping.
    pub fn new(n: usize, k: usize, ebno_points: Vec<f64>) -> Self {
        Self {
            n,
            k,
            t: None,
            num_per: None,
            base_order: None,
            perm_seed: 0,
            alpha: default_alpha(),
            max_iter: default_max_iter(),
            layers: None,
            clip: None,
            sgbf_t: 0,
            sgbf_strict: false,
            ebno_points,
            min_frame_errors: default_min_frame_errors(),
            max_frames: default_max_frames(),
            master_seed: 0,
            clean: false,
            label: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ebno_points.is_empty() {
            return Err(Error::Config("ebno_points must not be empty".into()));
        }
        if self.ebno_points.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("ebno_points must be finite".into()));
        }
        if self.ebno_points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "ebno_points must be strictly increasing".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if self.min_frame_errors == 0 {
            return Err(Error::Config("min_frame_errors must be at least 1".into()));
        }
        if self.max_frames == 0 {
            return Err(Error::Config("max_frames must be at least 1".into()));
        }
        if self.sgbf_t > self.n {
            return Err(Error::Config(format!(
                "sgbf_t = {} exceeds N = {}",
                self.sgbf_t, self.n
            )));
        }
        Ok(())
    }

    /// Resolves the construction parameters: explicit `t`/`num_per` win,
    /// otherwise the parameter solver decides.
    pub fn code_params(&self) -> Result<FdpcParams> {
        let params = match (self.t, self.num_per) {
            (Some(t), Some(num_per)) => FdpcParams {
                t,
                num_per,
                n: self.n,
                k: self.k,
                base_order: self.base_order.unwrap_or(BaseOrder::BaseT1),
                perm_seed: self.perm_seed,
            },
            (None, None) => FdpcParams::solve(self.n, self.k, self.perm_seed, self.base_order)?,
            _ => return Err(Error::Config("t and num_per must be given together".into())),
        };
        params.validate()?;
        Ok(params)
    }
}

/// Statistics of one Eb/N0 point; field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FerRecord {
    pub ebno_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub fer: f64,
    pub ber: f64,
    pub avg_iterations: f64,
    pub sgbf_invocations: u64,
    pub sgbf_rescues: u64,
    pub undetected_errors: u64,
    pub wall_seconds: f64,
}

impl FerRecord {
    /// Everything except the wall-clock time.
    pub fn data_columns(&self) -> (f64, u64, u64, u64, f64, f64, f64, u64, u64, u64) {
        (
            self.ebno_db,
            self.frames,
            self.frame_errors,
            self.bit_errors,
            self.fer,
            self.ber,
            self.avg_iterations,
            self.sgbf_invocations,
            self.sgbf_rescues,
            self.undetected_errors,
        )
    }
}

/// Compact per-frame result used for aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameResult {
    pub frame_index: u64,
    pub frame_error: bool,
    pub bit_errors: usize,
    pub lnms_iterations: usize,
    pub sgbf_invoked: bool,
    pub sgbf_rescued: bool,
    pub undetected: bool,
}

/// Everything that happened to one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrace {
    pub frame_index: u64,
    pub codeword: BitVector,
    pub channel_llr: Vec<f64>,
    pub lnms: DecodeOutcome,
    pub sgbf: Option<SgbfOutcome>,
}

impl FrameTrace {
    pub fn decoded(&self) -> &BitVector {
        match &self.sgbf {
            Some(s) => &s.final_outcome.hard_decisions,
            None => &self.lnms.hard_decisions,
        }
    }

    pub fn final_syndrome_weight(&self) -> usize {
        match &self.sgbf {
            Some(s) => s.final_outcome.syndrome_weight,
            None => self.lnms.syndrome_weight,
        }
    }

    pub fn summary(&self) -> FrameResult {
        let bit_errors = self.decoded().hamming_distance(&self.codeword);
        FrameResult {
            frame_index: self.frame_index,
            frame_error: bit_errors > 0,
            bit_errors,
            lnms_iterations: self.lnms.iterations_run,
            sgbf_invoked: self.sgbf.is_some(),
            sgbf_rescued: self.sgbf.as_ref().is_some_and(|s| s.rescued),
            undetected: bit_errors > 0 && self.final_syndrome_weight() == 0,
        }
    }
}

/// Result of a sweep: the records plus how many CSV writes failed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub records: Vec<FerRecord>,
    pub write_failures: usize,
}

/// A configured code, decoder and channel ready to simulate frames.
pub struct Simulator {
    cfg: SweepConfig,
    code: FdpcCode,
    decoder: LnmsDecoder,
    sgbf: Option<SgbfConfig>,
    pool: Option<rayon::ThreadPool>,
}

impl Simulator {
    pub fn new(cfg: SweepConfig) -> Result<Self> {
        cfg.validate()?;
        let code = FdpcCode::build(cfg.code_params()?)?;
        Self::with_code(cfg, code)
    }

    /// Uses an already constructed code instead of solving for one.
    pub fn with_code(cfg: SweepConfig, code: FdpcCode) -> Result<Self> {
        cfg.validate()?;
        if code.n() != cfg.n || code.k() != cfg.k {
            return Err(Error::Config(format!(
                "code is ({}, {}) but the config asks for ({}, {})",
                code.n(),
                code.k(),
                cfg.n,
                cfg.k
            )));
        }
        let schedule = schedule_for(code.h(), cfg.layers)?;
        let mut dec_cfg = DecoderConfig::new(cfg.alpha, cfg.max_iter, schedule);
        dec_cfg.clip = cfg.clip;
        let decoder = LnmsDecoder::new(code.h(), dec_cfg)?;
        let sgbf = (cfg.sgbf_t > 0).then_some(SgbfConfig {
            flip_set_size: cfg.sgbf_t,
            mode: if cfg.sgbf_strict {
                CandidateMode::Strict
            } else {
                CandidateMode::Lazy
            },
        });
        let p = code.params();
        log::info!(
            "FDPC({}, {}): t={} num_per={} {} layers={} chi={} compromised={} alpha={} max_iter={} T={}",
            code.n(),
            code.k(),
            p.t,
            p.num_per,
            p.base_order,
            decoder.config().schedule.len(),
            decoder.config().schedule.chromatic_number(),
            decoder.config().schedule.is_compromised(),
            cfg.alpha,
            cfg.max_iter,
            cfg.sgbf_t
        );
        Ok(Self {
            cfg,
            code,
            decoder,
            sgbf,
            pool: None,
        })
    }

    /// Limits frame parallelism to `jobs` worker threads.
    pub fn with_jobs(mut self, jobs: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))?;
        self.pool = Some(pool);
        Ok(self)
    }

    pub fn config(&self) -> &SweepConfig {
        &self.cfg
    }

    pub fn code(&self) -> &FdpcCode {
        &self.code
    }

    pub fn decoder(&self) -> &LnmsDecoder {
        &self.decoder
    }

    pub fn schedule(&self) -> &LayerSchedule {
        &self.decoder.config().schedule
    }

    /// The message of frame `frame_index`.
    pub fn message(&self, frame_index: u64) -> BitVector {
        let mut rng = frame_rng(self.cfg.master_seed ^ MESSAGE_SALT, frame_index);
        BitVector::from_bools((0..self.code.k()).map(|_| rng.random_bool(0.5)))
    }

    pub fn channel(&self, ebno_db: f64) -> Result<ChannelConfig> {
        let mut ch = ChannelConfig::new(ebno_db, self.code.rate(), self.cfg.master_seed)?;
        ch.clean = self.cfg.clean;
        Ok(ch)
    }

    /// Runs one frame end to end. Identical arguments give identical traces.
    pub fn trace_frame(&self, ebno_db: f64, frame_index: u64) -> Result<FrameTrace> {
        let ch = self.channel(ebno_db)?;
        self.trace_with_channel(&ch, frame_index)
    }

    fn trace_with_channel(&self, ch: &ChannelConfig, frame_index: u64) -> Result<FrameTrace> {
        let codeword = self.code.encode(&self.message(frame_index))?;
        let y = channel::transmit(&channel::modulate(&codeword), ch, frame_index);
        let channel_llr = channel::llr(&y, ch.sigma2())?;
        let lnms = self.decoder.decode(&channel_llr)?;
        let sgbf = match &self.sgbf {
            Some(sc) if !lnms.converged => {
                let out = run_sgbf(&lnms, &channel_llr, self.code.h(), &self.decoder, sc)?;
                log::debug!(
                    "frame {frame_index}: rescued={} flip={:?} w*={}",
                    out.rescued,
                    out.chosen_flip,
                    out.candidate_weights.iter().min().copied().unwrap_or(0)
                );
                Some(out)
            }
            _ => None,
        };
        Ok(FrameTrace {
            frame_index,
            codeword,
            channel_llr,
            lnms,
            sgbf,
        })
    }

    /// Runs frames `range` and returns their summaries in frame order.
    pub fn run_frames(
        &self,
        ebno_db: f64,
        range: std::ops::Range<u64>,
    ) -> Result<Vec<FrameResult>> {
        let ch = self.channel(ebno_db)?;
        let work = || {
            range
                .clone()
                .into_par_iter()
                .map(|i| self.trace_with_channel(&ch, i).map(|t| t.summary()))
                .collect::<Result<Vec<_>>>()
        };
        match &self.pool {
            Some(pool) => pool.install(work),
            None => work(),
        }
    }

    /// Simulates one Eb/N0 point until `min_frame_errors` frame errors or
    /// `max_frames` frames, whichever comes first.
    pub fn run_point(&self, ebno_db: f64) -> Result<FerRecord> {
        let start = Instant::now();
        let mut acc = Accumulator::default();
        let mut next = 0u64;
        let mut batch = FIRST_BATCH;
        'outer: while next < self.cfg.max_frames {
            let end = (next + batch).min(self.cfg.max_frames);
            for r in self.run_frames(ebno_db, next..end)? {
                acc.add(&r);
                if acc.frame_errors >= self.cfg.min_frame_errors {
                    break 'outer;
                }
            }
            next = end;
            batch = (batch * 2).min(MAX_BATCH);
        }
        let record = acc.record(ebno_db, self.code.n(), start.elapsed().as_secs_f64());
        log::info!(
            "Eb/N0 {:.2} dB: {} frames, {} errors, FER {:.3e}, BER {:.3e}, rescues {}/{}",
            record.ebno_db,
            record.frames,
            record.frame_errors,
            record.fer,
            record.ber,
            record.sgbf_rescues,
            record.sgbf_invocations
        );
        Ok(record)
    }

    /// Runs every configured point, appending each record to `csv_path` (and
    /// writing the config sidecar next to it) as soon as it is done.
    pub fn run_sweep(&self, csv_path: Option<&Path>) -> Result<SweepOutcome> {
        let mut writer = match csv_path {
            Some(path) => {
                self.write_sidecar(&sidecar_path(path))?;
                Some(csv::Writer::from_writer(File::create(path)?))
            }
            None => None,
        };
        let mut records = Vec::with_capacity(self.cfg.ebno_points.len());
        let mut write_failures = 0;
        for &ebno in &self.cfg.ebno_points {
            let record = self.run_point(ebno)?;
            if let Some(w) = writer.as_mut() {
                let written = w.serialize(&record).map_err(Error::from).and_then(|_| {
                    w.flush()?;
                    Ok(())
                });
                if let Err(e) = written {
                    log::error!("writing the {ebno} dB record failed: {e}");
                    write_failures += 1;
                }
            }
            records.push(record);
        }
        Ok(SweepOutcome {
            records,
            write_failures,
        })
    }

    /// The config with every construction parameter resolved.
    pub fn resolved_config(&self) -> SweepConfig {
        let p = self.code.params();
        SweepConfig {
            t: Some(p.t),
            num_per: Some(p.num_per),
            base_order: Some(p.base_order),
            ..self.cfg.clone()
        }
    }

    pub fn write_sidecar(&self, path: &Path) -> Result<()> {
        fs::write(
            path,
            serde_json::to_string_pretty(&self.resolved_config())? + "\n",
        )?;
        Ok(())
    }
}

/// `foo.csv` → `foo.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn read_csv(path: &Path) -> Result<Vec<FerRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let records = reader
        .deserialize()
        .collect::<Result<Vec<FerRecord>, _>>()?;
    Ok(records)
}

#[derive(Debug, Default)]
struct Accumulator {
    frames: u64,
    frame_errors: u64,
    bit_errors: u64,
    iterations: u64,
    sgbf_invocations: u64,
    sgbf_rescues: u64,
    undetected: u64,
}

impl Accumulator {
    fn add(&mut self, r: &FrameResult) {
        self.frames += 1;
        self.frame_errors += u64::from(r.frame_error);
        self.bit_errors += r.bit_errors as u64;
        self.iterations += r.lnms_iterations as u64;
        self.sgbf_invocations += u64::from(r.sgbf_invoked);
        self.sgbf_rescues += u64::from(r.sgbf_rescued);
        self.undetected += u64::from(r.undetected);
    }

    fn record(&self, ebno_db: f64, n: usize, wall_seconds: f64) -> FerRecord {
        let frames = self.frames.max(1) as f64;
        FerRecord {
            ebno_db,
            frames: self.frames,
            frame_errors: self.frame_errors,
            bit_errors: self.bit_errors,
            fer: self.frame_errors as f64 / frames,
            ber: self.bit_errors as f64 / (frames * n as f64),
            avg_iterations: self.iterations as f64 / frames,
            sgbf_invocations: self.sgbf_invocations,
            sgbf_rescues: self.sgbf_rescues,
            undetected_errors: self.undetected,
            wall_seconds,
        }
    }
}

/// Eb/N0 at which the FER curve crosses `target`, by linear interpolation of
/// `log10(FER)` between the bracketing points. Points without errors are
/// skipped; `None` if the curve never brackets the target.
pub fn crossing_ebno(records: &[FerRecord], target: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.frame_errors > 0)
        .map(|r| (r.ebno_db, r.fer.log10()))
        .collect();
    let goal = target.log10();
    pts.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if y0 >= goal && y1 <= goal && y0 != y1 {
            Some(x0 + (goal - y0) * (x1 - x0) / (y1 - y0))
        } else if y0 == goal {
            Some(x0)
        } else {
            None
        }
    })
}

/// Half-width of a normal-approximation confidence band of `z` standard
/// deviations around a binomial proportion.
pub fn binomial_band(fer: f64, frames: u64, z: f64) -> f64 {
    z * (fer * (1.0 - fer) / frames.max(1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> SweepConfig {
        let mut cfg = SweepConfig::new(128, 80, vec![3.0, 4.0]);
        cfg.min_frame_errors = 20;
        cfg.max_frames = 2_000;
        cfg.master_seed = 5;
        cfg
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_cfg();
        cfg.ebno_points = vec![];
        assert!(cfg.validate().is_err());
        cfg.ebno_points = vec![2.0, 2.0];
        assert!(cfg.validate().is_err());
        cfg.ebno_points = vec![2.0];
        cfg.min_frame_errors = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let err = serde_json::from_str::<SweepConfig>(
            r#"{"N":128,"K":80,"ebno_points":[1.0],"bogus":1}"#,
        );
        assert!(err.is_err());
        let ok: SweepConfig =
            serde_json::from_str(r#"{"N":128,"K":80,"ebno_points":[1.0]}"#).unwrap();
        assert_eq!(ok.alpha, 0.75);
        assert_eq!(ok.max_iter, 5);
        assert_eq!(ok.min_frame_errors, 100);
        assert_eq!(ok.max_frames, 10_000_000);
    }

    #[test]
    fn clean_channel_has_no_errors() {
        let mut cfg = small_cfg();
        cfg.clean = true;
        cfg.max_frames = 300;
        let sim = Simulator::new(cfg).unwrap();
        let r = sim.run_point(0.0).unwrap();
        assert_eq!((r.frames, r.frame_errors, r.bit_errors), (300, 0, 0));
        assert_eq!(r.avg_iterations, 1.0);
    }

    #[test]
    fn point_statistics_are_consistent() {
        let mut cfg = small_cfg();
        cfg.sgbf_t = 16;
        let sim = Simulator::new(cfg).unwrap();
        let r = sim.run_point(3.0).unwrap();
        assert!(r.frame_errors == 20 || r.frames == 2_000);
        assert!((r.fer - r.frame_errors as f64 / r.frames as f64).abs() < 1e-15);
        assert!((r.ber - r.bit_errors as f64 / (r.frames as f64 * 128.0)).abs() < 1e-15);
        assert!(r.sgbf_rescues <= r.sgbf_invocations);
        assert!(r.undetected_errors <= r.frame_errors);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = small_cfg();
        let one = Simulator::new(cfg.clone()).unwrap().with_jobs(1).unwrap();
        let three = Simulator::new(cfg).unwrap().with_jobs(3).unwrap();
        let a = one.run_point(3.5).unwrap();
        let b = three.run_point(3.5).unwrap();
        assert_eq!(a.data_columns(), b.data_columns());
    }

    #[test]
    fn frames_replay() {
        let mut cfg = small_cfg();
        cfg.sgbf_t = 8;
        let sim = Simulator::new(cfg).unwrap();
        let batch = sim.run_frames(3.0, 0..64).unwrap();
        for r in batch {
            assert_eq!(sim.trace_frame(3.0, r.frame_index).unwrap().summary(), r);
        }
    }

    #[test]
    fn crossing_interpolates_in_log_domain() {
        let rec = |ebno, fer: f64| FerRecord {
            ebno_db: ebno,
            frames: 1000,
            frame_errors: (fer * 1000.0) as u64,
            bit_errors: 0,
            fer,
            ber: 0.0,
            avg_iterations: 0.0,
            sgbf_invocations: 0,
            sgbf_rescues: 0,
            undetected_errors: 0,
            wall_seconds: 0.0,
        };
        let recs = [rec(1.0, 1e-1), rec(2.0, 1e-2), rec(3.0, 1e-3)];
        assert!((crossing_ebno(&recs, 1e-2).unwrap() - 2.0).abs() < 1e-12);
        assert!((crossing_ebno(&recs, 10f64.powf(-2.5)).unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(crossing_ebno(&recs, 1e-4), None);
    }

    #[test]
    fn sweep_writes_csv_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fer.csv");
        let mut cfg = small_cfg();
        cfg.max_frames = 500;
        let sim = Simulator::new(cfg).unwrap();
        let out = sim.run_sweep(Some(&path)).unwrap();
        assert_eq!(out.write_failures, 0);
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().count(), 3);
        let back = read_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].data_columns(), out.records[0].data_columns());
        let sidecar = SweepConfig::load(&sidecar_path(&path)).unwrap();
        assert_eq!(sidecar.t, Some(12));
        assert_eq!(sidecar.num_per, Some(1));
    }
}
