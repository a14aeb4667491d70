//! `fdpc` command-line tool: construct codes, encode, decode, inspect
//! schedules and run FER sweeps.
//!
//! Exit codes: 0 on success, 2 for configuration or input errors, 3 for I/O
//! failures. Log level comes from `FDPC_LOG` (error, info, debug, trace).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use fdpc::code::{BaseOrder, FdpcCode, FdpcParams};
use fdpc::error::Error;
use fdpc::gf2::{alist, BinaryMatrix, BitVector};
use fdpc::lnms::{DecoderConfig, LnmsDecoder};
use fdpc::schedule::schedule_for;
use fdpc::sgbf::{run_sgbf, SgbfConfig};
use fdpc::sim::{sidecar_path, Simulator, SweepConfig};

#[derive(Parser, Debug)]
#[command(
    name = "fdpc",
    version,
    about = "FDPC codes with layered min-sum and bit-flipping decoding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a parity-check matrix and write it as alist plus a JSON descriptor.
    Construct(ConstructArgs),
    /// Systematically encode a message.
    Encode(EncodeArgs),
    /// Decode a vector of channel LLRs.
    Decode(DecodeArgs),
    /// Print the layered schedule of a code as JSON.
    #[command(name = "schedule-info")]
    ScheduleInfo(ScheduleArgs),
    /// Run an Eb/N0 sweep and write the FER table as CSV.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
struct ConstructArgs {
    #[arg(long = "n", short = 'n')]
    n: usize,
    #[arg(long = "k", short = 'k')]
    k: usize,
    #[arg(long)]
    base_order: Option<BaseOrder>,
    #[arg(long, default_value_t = 0)]
    perm_seed: u64,
    /// Explicit t (requires --num-per); otherwise solved from N and K.
    #[arg(long, requires = "num_per")]
    t: Option<usize>,
    #[arg(long, requires = "t")]
    num_per: Option<usize>,
    #[arg(long)]
    out_alist: PathBuf,
    #[arg(long)]
    out_descriptor: PathBuf,
}

#[derive(Args, Debug)]
struct CodeSource {
    /// JSON code descriptor written by `construct`.
    #[arg(long, conflicts_with = "alist")]
    descriptor: Option<PathBuf>,
    /// Parity-check matrix in alist format.
    #[arg(long)]
    alist: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    #[arg(long)]
    descriptor: PathBuf,
    /// File holding the message as 0/1 characters.
    #[arg(long, conflicts_with = "bits", required_unless_present = "bits")]
    message: Option<PathBuf>,
    /// The message inline as a 0/1 string.
    #[arg(long)]
    bits: Option<String>,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    #[command(flatten)]
    code: CodeSource,
    /// Channel LLRs, one real number per line.
    #[arg(long)]
    llr: PathBuf,
    #[arg(long, default_value_t = 0.75)]
    alpha: f64,
    #[arg(long, default_value_t = 5)]
    max_iter: usize,
    /// Force the schedule to this many layers.
    #[arg(long)]
    layers: Option<usize>,
    /// Bit-flipping set size (0 disables bit flipping).
    #[arg(long = "sgbf-T", default_value_t = 0)]
    sgbf_t: usize,
    /// Decode all T candidates instead of stopping at the first success.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    #[command(flatten)]
    code: CodeSource,
    #[arg(long)]
    layers: Option<usize>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Sweep configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV; the sidecar goes next to it with a .json extension.
    /// Defaults to `<config stem>.fer.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "sgbf-T")]
    sgbf_t: Option<usize>,
    #[arg(long)]
    strict: bool,
    /// Noise-free channel.
    #[arg(long)]
    clean: bool,
    /// Worker threads (default: available cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    min_frame_errors: Option<u64>,
    #[arg(long)]
    max_frames: Option<u64>,
    /// Comma-separated Eb/N0 points in dB.
    #[arg(long, value_delimiter = ',')]
    ebno: Option<Vec<f64>>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FDPC_LOG", "info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Construct(a) => construct(a),
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::ScheduleInfo(a) => schedule_info(a),
        Command::Simulate(a) => simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 3,
        Error::Csv(c) if matches!(c.kind(), csv::ErrorKind::Io(_)) => 3,
        Error::Json(j) if j.is_io() => 3,
        _ => 2,
    }
}

fn construct(a: ConstructArgs) -> Result<(), Error> {
    let params = match (a.t, a.num_per) {
        (Some(t), Some(num_per)) => FdpcParams {
            t,
            num_per,
            n: a.n,
            k: a.k,
            base_order: a.base_order.unwrap_or(BaseOrder::BaseT1),
            perm_seed: a.perm_seed,
        },
        _ => FdpcParams::solve(a.n, a.k, a.perm_seed, a.base_order)?,
    };
    log::info!("construct: {params:?}");
    let code = FdpcCode::build(params)?;
    let schedule = schedule_for(code.h(), None)?;
    alist::write_alist(code.h(), &a.out_alist)?;
    code.write_descriptor(&a.out_descriptor)?;
    let p = code.params();
    println!(
        "{}",
        json!({
            "N": code.n(),
            "K": code.k(),
            "M": code.m(),
            "t": p.t,
            "num_per": p.num_per,
            "base_order": p.base_order,
            "m_size": p.m_size(),
            "punctured": code.punctured_cols().len(),
            "chromatic_number": schedule.chromatic_number(),
        })
    );
    Ok(())
}

fn load_matrix(src: &CodeSource) -> Result<BinaryMatrix, Error> {
    match (&src.descriptor, &src.alist) {
        (Some(d), _) => Ok(FdpcCode::read_descriptor(d)?.h().clone()),
        (None, Some(p)) => alist::read_alist(p),
        (None, None) => Err(Error::Config(
            "one of --descriptor or --alist is required".into(),
        )),
    }
}

fn encode(a: EncodeArgs) -> Result<(), Error> {
    let code = FdpcCode::read_descriptor(&a.descriptor)?;
    let text = match (&a.bits, &a.message) {
        (Some(bits), _) => bits.clone(),
        (None, Some(path)) => fs::read_to_string(path)?,
        (None, None) => unreachable!("clap enforces one message source"),
    };
    let message = BitVector::parse(&text)?;
    println!("{}", code.encode(&message)?);
    Ok(())
}

fn read_llrs(path: &Path) -> Result<Vec<f64>, Error> {
    fs::read_to_string(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<f64>().map_err(|_| {
                Error::InvalidInput(format!(
                    "{}:{}: {:?} is not a number",
                    path.display(),
                    i + 1,
                    l.trim()
                ))
            })
        })
        .collect()
}

fn decode(a: DecodeArgs) -> Result<(), Error> {
    let h = load_matrix(&a.code)?;
    let llr = read_llrs(&a.llr)?;
    let schedule = schedule_for(&h, a.layers)?;
    let decoder = LnmsDecoder::new(&h, DecoderConfig::new(a.alpha, a.max_iter, schedule))?;
    let lnms = decoder.decode(&llr)?;
    let mut report = json!({
        "iterations": lnms.iterations_run,
        "lnms_converged": lnms.converged,
    });
    let final_outcome = if !lnms.converged && a.sgbf_t > 0 {
        let cfg = if a.strict {
            SgbfConfig::strict(a.sgbf_t)
        } else {
            SgbfConfig::new(a.sgbf_t)
        };
        let out = run_sgbf(&lnms, &llr, &h, &decoder, &cfg)?;
        report["sgbf_rescued"] = json!(out.rescued);
        report["sgbf_flip"] = json!(out.chosen_flip);
        report["sgbf_candidate_weights"] = json!(out.candidate_weights);
        out.final_outcome
    } else {
        lnms
    };
    report["hard_decisions"] = json!(final_outcome.hard_decisions.to_string());
    report["syndrome_weight"] = json!(final_outcome.syndrome_weight);
    println!("{report}");
    Ok(())
}

fn schedule_info(a: ScheduleArgs) -> Result<(), Error> {
    let h = load_matrix(&a.code)?;
    let schedule = schedule_for(&h, a.layers)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "checks": h.rows(),
            "chromatic_number": schedule.chromatic_number(),
            "layers": schedule.len(),
            "layer_sizes": schedule.layer_sizes(),
            "compromised": schedule.is_compromised(),
            "conflict": schedule.find_conflict(&h),
        }))?
    );
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<(), Error> {
    let mut cfg = SweepConfig::load(&a.config)?;
    if let Some(t) = a.sgbf_t {
        cfg.sgbf_t = t;
    }
    if a.strict {
        cfg.sgbf_strict = true;
    }
    if a.clean {
        cfg.clean = true;
    }
    if let Some(s) = a.master_seed {
        cfg.master_seed = s;
    }
    if let Some(e) = a.min_frame_errors {
        cfg.min_frame_errors = e;
    }
    if let Some(f) = a.max_frames {
        cfg.max_frames = f;
    }
    if let Some(points) = a.ebno {
        cfg.ebno_points = points;
    }
    cfg.validate()?;
    log::info!("simulate: {}", serde_json::to_string(&cfg)?);

    let out = a.out.unwrap_or_else(|| {
        let stem = a
            .config
            .file_stem()
            .map_or("sweep".into(), |s| s.to_string_lossy().into_owned());
        PathBuf::from(format!("{stem}.fer.csv"))
    });
    if sidecar_path(&out) == a.config {
        return Err(Error::Config(format!(
            "output {} would overwrite the config file with its sidecar",
            out.display()
        )));
    }
    let mut sim = Simulator::new(cfg)?;
    if let Some(jobs) = a.jobs {
        sim = sim.with_jobs(jobs)?;
    }
    let outcome = sim.run_sweep(Some(&out))?;
    log::info!(
        "wrote {} points to {}",
        outcome.records.len(),
        out.display()
    );
    if outcome.write_failures > 0 {
        return Err(Error::Io(std::io::Error::other(format!(
            "{} record(s) could not be written to {}",
            outcome.write_failures,
            out.display()
        ))));
    }
    Ok(())
}
