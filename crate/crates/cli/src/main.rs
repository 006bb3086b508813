use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use orbitlet::Error;

mod commands;
mod files;

pub const SCHEMA: &str = "orbitlet/1";

#[derive(Parser, Debug)]
#[command(name = "orbitlet", version, about = "Dilation groups, orbit envelopes, moment orders and wavelet transforms")]
pub struct Cli {
    /// JSON file whose keys mirror the long flags of the chosen subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Family, orbit, modular functions and orbit operator of a group.
    Describe(GroupArg),
    /// Structural checks on a group description.
    Validate(GroupArg),
    /// Shearing groups up to conjugacy in dimension 2, 3 or 4.
    Classify {
        #[arg(long)]
        dim: usize,
    },
    /// Decay exponents, analytic or sampled.
    Exponents(ExponentArgs),
    /// Exponents, embedding indices and vanishing-moment orders.
    Moments(ExponentArgs),
    /// Envelope values and robustness constants.
    Envelope(EnvelopeArgs),
    /// Build or verify spline atoms.
    #[command(subcommand)]
    Atom(AtomCommand),
    /// Dyadic shell test of the admissibility integral.
    Admissibility(AdmissibilityArgs),
    /// Sampled wavelet coefficients of a signal.
    Cwt(CwtArgs),
    /// Reconstruction from wavelet coefficients.
    Icwt(IcwtArgs),
    /// Haar measure against orbit measure on a Gaussian.
    HaarCheck(QuadArgs),
    /// Direct against convolution evaluation of Phi_ell.
    PhiCheck(PhiArgs),
}

#[derive(Args, Debug)]
pub struct GroupArg {
    /// Group JSON file, `-` for stdin, or inline JSON.
    #[arg(long)]
    group: String,
}

#[derive(Args, Debug)]
pub struct ExponentArgs {
    #[command(flatten)]
    group: GroupArg,
    /// `p,q,s,w` with `w` one of `max-delta`, `power:k`.
    #[arg(long, default_value = "2,2,0,max-delta")]
    weight: String,
    /// Where the exponents come from.
    #[arg(long, value_enum, default_value = "analytic")]
    mode: ExponentMode,
    /// Explicit `e1,e2,e3,e4`, overriding the mode.
    #[arg(long)]
    exponents: Option<String>,
    #[command(flatten)]
    sampling: SamplingArgs,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExponentMode {
    /// Closed forms.
    Analytic,
    /// Least exponents judged bounded by sampling.
    Empirical,
    /// Closed forms, then a sampled boundedness check.
    Check,
}

#[derive(Args, Debug)]
pub struct SamplingArgs {
    #[arg(long, default_value_t = 100_000)]
    budget: usize,
    #[arg(long, default_value_t = 5)]
    stages: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
pub struct EnvelopeArgs {
    #[command(flatten)]
    group: GroupArg,
    /// A point `x1,...,xd`; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    xi: Vec<String>,
    /// CSV of points, one per line.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Sample the moderateness and norm-ratio constants with this many points.
    #[arg(long)]
    robustness: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum AtomCommand {
    /// `D^r f` for a tensor spline `f`.
    Build(AtomBuildArgs),
    /// Spectral decay and moment integrals on the orbit complement.
    Verify(AtomVerifyArgs),
}

#[derive(Args, Debug)]
pub struct AtomBuildArgs {
    #[command(flatten)]
    group: GroupArg,
    #[arg(long)]
    order: u32,
    /// Spline degree on every axis (default: smallest allowed).
    #[arg(long)]
    degree: Option<usize>,
    /// Support `[-w, w]^d` (default: unit knots).
    #[arg(long)]
    half_width: Option<f64>,
    /// Atom JSON destination.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write samples (`.csv` or binary).
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Points per axis for `--samples`.
    #[arg(long, default_value_t = 65)]
    sample_points: usize,
}

#[derive(Args, Debug)]
pub struct PsiArgs {
    /// Atom JSON from `atom build`.
    #[arg(long, conflicts_with = "sampled")]
    atom: Option<PathBuf>,
    /// Sampled function (`.csv` or binary).
    #[arg(long)]
    sampled: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AtomVerifyArgs {
    #[command(flatten)]
    group: GroupArg,
    #[command(flatten)]
    psi: PsiArgs,
    /// Claimed order (default: the atom's own).
    #[arg(long)]
    order: Option<u32>,
}

#[derive(Args, Debug)]
pub struct QuadArgs {
    #[command(flatten)]
    group: GroupArg,
    #[arg(long, default_value_t = 1e-4)]
    rel_tol: f64,
    #[arg(long, default_value_t = 8)]
    quad_order: usize,
    #[arg(long, default_value_t = 12)]
    max_levels: usize,
}

#[derive(Args, Debug)]
pub struct AdmissibilityArgs {
    #[command(flatten)]
    quad: QuadArgs,
    #[command(flatten)]
    psi: PsiArgs,
}

#[derive(Args, Debug)]
pub struct PhiArgs {
    #[command(flatten)]
    quad: QuadArgs,
    /// Exponent (default: d + 2).
    #[arg(long)]
    ell: Option<u32>,
    #[arg(long, default_value_t = 10)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
pub struct DilationArgs {
    #[arg(long, default_value_t = 3.0)]
    r_max: f64,
    #[arg(long, default_value_t = 25)]
    r_points: usize,
    #[arg(long, default_value_t = 2.0)]
    t_max: f64,
    #[arg(long, default_value_t = 9)]
    t_points: usize,
    #[arg(long, default_value_t = 16)]
    angle_points: usize,
    /// Double the points on every dilation axis.
    #[arg(long)]
    refine: bool,
    /// Extra translation points on each side of the signal grid.
    #[arg(long, default_value_t = 32)]
    pad: usize,
}

#[derive(Args, Debug)]
pub struct CwtArgs {
    #[command(flatten)]
    group: GroupArg,
    #[arg(long)]
    atom: PathBuf,
    /// Signal file (`.csv` or binary).
    #[arg(long, conflicts_with = "test_signal")]
    signal: Option<PathBuf>,
    /// Bundled signal: packet, sheared_packet or two_packets.
    #[arg(long)]
    test_signal: Option<String>,
    /// Grid points per axis for a bundled signal.
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 0.08)]
    spacing: f64,
    #[arg(long, default_value_t = 0.6)]
    sigma: f64,
    /// Save the bundled signal here.
    #[arg(long)]
    signal_out: Option<PathBuf>,
    #[command(flatten)]
    dilations: DilationArgs,
    /// Coefficient destination (`.csv` or binary).
    #[arg(long)]
    out: PathBuf,
    /// Also report the discrete `L^{p,q}_v` norm for this weight.
    #[arg(long)]
    weight: Option<String>,
}

#[derive(Args, Debug)]
pub struct IcwtArgs {
    #[command(flatten)]
    group: GroupArg,
    #[arg(long)]
    atom: PathBuf,
    /// Coefficients written by `cwt`.
    #[arg(long)]
    coeffs: PathBuf,
    #[command(flatten)]
    dilations: DilationArgs,
    /// Reconstruct on this signal's grid and report the relative error.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Reconstruction destination (`.csv` or binary).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failures with their exit codes.
pub enum Failure {
    Parse(String),
    Unsupported(String),
    NonConvergence(String),
    /// Input checked and rejected; the report is still emitted.
    Rejected(String, serde_json::Value),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Parse(_) => 2,
            Failure::Unsupported(_) | Failure::Rejected(..) => 3,
            Failure::NonConvergence(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Parse(m) | Failure::Unsupported(m) | Failure::NonConvergence(m) | Failure::Rejected(m, _) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::Parse(_) | Error::Json(_) | Error::Io(_) => Failure::Parse(m),
            Error::NonConvergence(_) => Failure::NonConvergence(m),
            _ => Failure::Unsupported(m),
        }
    }
}

const GLOBAL_VALUED: [&str; 3] = ["--config", "--threads", "--output"];

/// Position just past the subcommand path (`atom build` has two words) and
/// the `--config` value, found before clap sees the arguments.
fn scan(argv: &[OsString]) -> (usize, Option<PathBuf>) {
    let mut config = None;
    let mut i = 1;
    let mut end = None;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if let Some(v) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(v));
        } else if GLOBAL_VALUED.contains(&a.as_ref()) {
            if a == "--config" {
                config = argv.get(i + 1).map(PathBuf::from);
            }
            i += 1;
        } else if end.is_none() && !a.starts_with('-') {
            end = Some(if a == "atom" && i + 1 < argv.len() { i + 2 } else { i + 1 });
        }
        i += 1;
    }
    (end.unwrap_or(argv.len()), config)
}

/// Turns a config object into flags; scalars become `--key value`, arrays are
/// joined with commas unless the flag repeats, `true` becomes a bare flag.
fn config_flags(value: &serde_json::Value) -> Result<Vec<OsString>, Failure> {
    let obj = value.as_object().ok_or_else(|| Failure::Parse("config must be a JSON object".into()))?;
    let mut out = Vec::new();
    for (k, v) in obj {
        let flag = format!("--{}", k.replace('_', "-"));
        let scalar = |v: &serde_json::Value| -> Result<String, Failure> {
            match v {
                serde_json::Value::String(s) => Ok(s.clone()),
                serde_json::Value::Number(n) => Ok(n.to_string()),
                serde_json::Value::Object(_) => Ok(v.to_string()),
                other => Err(Failure::Parse(format!("config key {k:?}: unsupported value {other}"))),
            }
        };
        match v {
            serde_json::Value::Bool(true) => out.push(flag.into()),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) if k == "xi" => {
                for it in items {
                    out.push(flag.clone().into());
                    out.push(scalar(it)?.into());
                }
            }
            serde_json::Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?;
                out.push(flag.into());
                out.push(parts.join(",").into());
            }
            other => {
                out.push(flag.into());
                out.push(scalar(other)?.into());
            }
        }
    }
    Ok(out)
}

fn parse(args: Vec<OsString>) -> Result<Cli, clap::Error> {
    let cmd = Cli::command().args_override_self(true);
    let m = cmd.try_get_matches_from(args)?;
    Cli::from_arg_matches(&m)
}

/// Parses `argv`, splicing config-file flags right after the subcommand so
/// explicit flags, which come later, win.
fn resolve(argv: Vec<OsString>) -> Result<Cli, Result<clap::Error, Failure>> {
    let (end, config) = scan(&argv);
    let Some(path) = config else { return parse(argv).map_err(Ok) };
    let text = std::fs::read_to_string(&path).map_err(|e| Err(Failure::Parse(format!("{}: {e}", path.display()))))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Err(Failure::Parse(format!("{}: {e}", path.display()))))?;
    let extra = config_flags(&value).map_err(Err)?;
    let mut merged = argv[..end].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&argv[end..]);
    parse(merged).map_err(Ok)
}

fn main() -> ExitCode {
    let cli = match resolve(std::env::args_os().collect()) {
        Ok(c) => c,
        Err(Ok(e)) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
        Err(Err(f)) => {
            eprintln!("error: {}", f.message());
            return ExitCode::from(f.code());
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    match commands::run(&cli.command).and_then(|report| files::emit(&report, cli.output.as_deref())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if let Failure::Rejected(_, report) = &f {
                let _ = files::emit(report, cli.output.as_deref());
            }
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
