//! Command-line surface.
//!
//! Exit status: 0 success with a result, 1 well-formed "no result" (no
//! witness, rejected certificate, nothing found within limits), 2 usage or
//! input error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::coloring::{count_colourings, RestrictedGrowthIter, TypedColouring};
use crate::format::{family_to_json, parse_colouring, parse_family};
use crate::polynomial::{
    bstar_family, h_value, scale_family, weight_vector, FamilyRole, PolynomialFamily,
};
use crate::search::{
    canonical_number, extremal_colourings, naive_canonical_number, RunReport, SearchConfig,
    DEFAULT_NAIVE_CAP, DEFAULT_SPLIT_DEPTH,
};
use crate::witness::{find_witness, verify_certificate, Certificate, DPolicy, WitnessQuery};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_RESULT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "canonvdw",
    version,
    about = "Canonical polynomial Van der Waerden search and certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Find a monochromatic or rainbow witness in a colouring.
    Witness(WitnessArgs),
    /// Replay a certificate against a colouring.
    Verify(VerifyArgs),
    /// Compute the least N whose every colouring contains a witness.
    Number(NumberArgs),
    /// List witness-free colourings of [N].
    Extremal(ExtremalArgs),
    /// Shift threshold h of a family.
    Hvalue(FamilyArgs),
    /// Weight vector of a family.
    Weight(FamilyArgs),
    /// Reduced family B* of a rainbow family.
    Bstar(BstarArgs),
    /// Scaled family p(Nx)/N.
    Scale(ScaleArgs),
    /// List colourings of [N] up to palette renaming.
    Enumerate(EnumerateArgs),
}

#[derive(Debug, Args)]
struct FamilyOpts {
    /// Family for monochromatic witnesses.
    #[arg(long)]
    mono: Option<PathBuf>,
    /// Family for rainbow witnesses (defaults to the mono family).
    #[arg(long, conflicts_with = "no_rainbow")]
    rainbow: Option<PathBuf>,
    /// Look for monochromatic witnesses only.
    #[arg(long)]
    no_rainbow: bool,
    #[arg(long, default_value = "nonzero")]
    d_policy: DPolicy,
    #[arg(long, default_value_t = 0)]
    h: i64,
}

#[derive(Debug, Args)]
struct WitnessArgs {
    #[arg(long)]
    colouring: PathBuf,
    #[command(flatten)]
    families: FamilyOpts,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    colouring: PathBuf,
    #[arg(long)]
    cert: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SearchOpts {
    #[command(flatten)]
    families: FamilyOpts,
    /// Bounded palette: at most this many colour classes.
    #[arg(long)]
    max_classes: Option<u32>,
    #[arg(long, default_value_t = 12)]
    n_limit: usize,
    #[arg(long)]
    node_budget: Option<u64>,
    #[arg(long, env = "CANONVDW_THREADS", default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = DEFAULT_SPLIT_DEPTH)]
    split_depth: usize,
}

#[derive(Debug, Args)]
struct NumberArgs {
    #[command(flatten)]
    search: SearchOpts,
    #[arg(long, default_value_t = 1)]
    n_start: usize,
    /// Use full enumeration instead of the pruned search.
    #[arg(long)]
    naive: bool,
    #[arg(long, default_value_t = DEFAULT_NAIVE_CAP)]
    naive_cap: u64,
    /// Include wall time in the report (makes it non-reproducible).
    #[arg(long)]
    timing: bool,
    /// Print the full report instead of just the number.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExtremalArgs {
    #[command(flatten)]
    search: SearchOpts,
    #[arg(long = "n")]
    len: usize,
    #[arg(long, default_value_t = 10)]
    limit: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FamilyArgs {
    #[arg(long)]
    family: PathBuf,
}

#[derive(Debug, Args)]
struct BstarArgs {
    #[arg(long)]
    family: PathBuf,
    /// Defaults to the family's own shift threshold.
    #[arg(long)]
    h: Option<i64>,
    #[arg(long)]
    d_max: i64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScaleArgs {
    #[arg(long)]
    family: PathBuf,
    #[arg(long)]
    factor: i64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EnumerateArgs {
    #[arg(long = "n")]
    len: usize,
    #[arg(long)]
    max_classes: Option<u32>,
    /// Print only the number of colourings.
    #[arg(long)]
    count: bool,
}

/// An input problem: reported on stderr with exit status 2.
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

type CmdResult = Result<i32, InputError>;

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn load_colouring(path: &Path) -> Result<TypedColouring, InputError> {
    parse_colouring(&read(path)?).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn load_family(path: &Path) -> Result<PolynomialFamily, InputError> {
    parse_family(&read(path)?).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), InputError> {
    if let Some(path) = path {
        fs::write(path, text).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

impl FamilyOpts {
    fn load(&self) -> Result<(Option<PolynomialFamily>, Option<PolynomialFamily>), InputError> {
        let mono = self.mono.as_deref().map(load_family).transpose()?;
        let rainbow = match (&self.rainbow, self.no_rainbow) {
            (_, true) => None,
            (Some(path), false) => Some(load_family(path)?),
            (None, false) => mono.clone(),
        };
        if mono.is_none() && rainbow.is_none() {
            return Err(InputError(
                "at least one of --mono or --rainbow is required".into(),
            ));
        }
        let rainbow = rainbow
            .map(|f| f.into_role(FamilyRole::Rainbow))
            .transpose()?;
        Ok((mono, rainbow))
    }

    fn query(&self) -> Result<WitnessQuery, InputError> {
        let (mono, rainbow) = self.load()?;
        Ok(WitnessQuery::new(mono, rainbow, self.h, self.d_policy)?)
    }
}

impl SearchOpts {
    fn config(&self, n_start: usize, verify_prunes: bool) -> Result<SearchConfig, InputError> {
        let (mono, rainbow) = self.families.load()?;
        let cfg = SearchConfig {
            mono,
            rainbow,
            h: self.families.h,
            d_policy: self.families.d_policy,
            max_classes: self.max_classes,
            n_start,
            n_limit: self.n_limit,
            node_budget: self.node_budget,
            workers: self.threads,
            split_depth: self.split_depth,
            verify_prunes,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn witness(args: &WitnessArgs, out: &mut dyn Write) -> CmdResult {
    let colouring = load_colouring(&args.colouring)?;
    let query = args.families.query()?;
    match find_witness(&colouring, &query) {
        Some(cert) => {
            let text = cert.to_json();
            write_out(args.out.as_deref(), &text)?;
            out.write_all(text.as_bytes())?;
            Ok(EXIT_OK)
        }
        None => {
            writeln!(out, "no witness")?;
            Ok(EXIT_NO_RESULT)
        }
    }
}

#[derive(Serialize)]
struct Verdict {
    accepted: bool,
    reason: Option<String>,
}

fn verify(args: &VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let colouring = load_colouring(&args.colouring)?;
    let text = read(&args.cert)?;
    let cert: Certificate = serde_json::from_str(&text)
        .map_err(|e| InputError(format!("{}: line {}: {e}", args.cert.display(), e.line())))?;
    let result = verify_certificate(&colouring, &cert);
    let verdict = Verdict {
        accepted: result.is_ok(),
        reason: result.err().map(|r| r.code().to_string()),
    };
    write_out(args.out.as_deref(), &json(&verdict))?;
    match result {
        Ok(()) => {
            writeln!(out, "accepted")?;
            Ok(EXIT_OK)
        }
        Err(reason) => {
            writeln!(out, "rejected: {}", reason.code())?;
            Ok(EXIT_NO_RESULT)
        }
    }
}

fn number(args: &NumberArgs, out: &mut dyn Write) -> CmdResult {
    let cfg = args.search.config(args.n_start, false)?;
    let (engine, result) = if args.naive {
        ("naive", naive_canonical_number(&cfg, args.naive_cap)?)
    } else {
        ("pruned", canonical_number(&cfg)?)
    };
    let report = RunReport::new(engine, &cfg, &result, args.timing).to_json();
    write_out(args.out.as_deref(), &report)?;
    if args.json {
        out.write_all(report.as_bytes())?;
    } else {
        match result.canonical_number {
            Some(n) => writeln!(out, "{n}")?,
            None if result.budget_hit => writeln!(out, "not found: node budget exhausted")?,
            None => writeln!(out, "not found: no answer up to N = {}", cfg.n_limit)?,
        }
    }
    Ok(if result.canonical_number.is_some() {
        EXIT_OK
    } else {
        EXIT_NO_RESULT
    })
}

fn extremal(args: &ExtremalArgs, out: &mut dyn Write) -> CmdResult {
    let cfg = args.search.config(1, false)?;
    let found = extremal_colourings(&cfg, args.len, args.limit)?;
    let mut text = String::new();
    for c in &found {
        let labels: Vec<String> = c.coordinate(1).iter().map(u32::to_string).collect();
        text.push_str(&labels.join(" "));
        text.push('\n');
    }
    write_out(args.out.as_deref(), &text)?;
    out.write_all(text.as_bytes())?;
    Ok(if found.is_empty() {
        EXIT_NO_RESULT
    } else {
        EXIT_OK
    })
}

fn enumerate(args: &EnumerateArgs, out: &mut dyn Write) -> CmdResult {
    if args.len == 0 {
        return Err(InputError("--n must be at least 1".into()));
    }
    if args.count {
        writeln!(out, "{}", count_colourings(args.len, args.max_classes))?;
        return Ok(EXIT_OK);
    }
    for s in RestrictedGrowthIter::new(args.len, args.max_classes) {
        let labels: Vec<String> = s.iter().map(u32::to_string).collect();
        writeln!(out, "{}", labels.join(" "))?;
    }
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> CmdResult {
    match cli.command {
        Command::Witness(args) => witness(&args, out),
        Command::Verify(args) => verify(&args, out),
        Command::Number(args) => number(&args, out),
        Command::Extremal(args) => extremal(&args, out),
        Command::Hvalue(args) => {
            writeln!(out, "{}", h_value(&load_family(&args.family)?)?)?;
            Ok(EXIT_OK)
        }
        Command::Weight(args) => {
            let w = weight_vector(&load_family(&args.family)?)?;
            writeln!(out, "{}", serde_json::to_string(&w.0)?)?;
            Ok(EXIT_OK)
        }
        Command::Bstar(args) => {
            let family = load_family(&args.family)?;
            let h = match args.h {
                Some(h) => h,
                None => h_value(&family)?,
            };
            let text = family_to_json(&bstar_family(&family, h, args.d_max)?) + "\n";
            write_out(args.out.as_deref(), &text)?;
            out.write_all(text.as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Scale(args) => {
            let text =
                family_to_json(&scale_family(&load_family(&args.family)?, args.factor)?) + "\n";
            write_out(args.out.as_deref(), &text)?;
            out.write_all(text.as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Enumerate(args) => enumerate(&args, out),
    }
}

/// Parses `argv` and runs one subcommand, returning the exit status.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let informational = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let sink: &mut dyn Write = if informational { out } else { err };
            let _ = write!(sink, "{}", e.render());
            return if informational { EXIT_OK } else { EXIT_INPUT };
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(InputError(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INPUT
        }
    }
}
