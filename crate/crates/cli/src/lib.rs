//! Subcommands of the `tower-aes` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tower_aes::aes::{decrypt_ecb, encrypt_ecb, Backend, KEY_LEN};
use tower_aes::attack::{measurements_to_disclosure, run_attack, Attack, AttackResult, Selection};
use tower_aes::calibration::{CALIBRATED_SIGMA, EVALUATION_KEY};
use tower_aes::iso::{enumerate_all, lambda_discrepancy, phi_candidates, Catalog};
use tower_aes::leakage::{generate_set, key_fingerprint, LeakConfig, Mode, TraceSet};
use tower_aes::sched::RandomizationContext;
use tower_aes::{traceio, Error};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

pub const REPORT_HEADER: &str = "guess,peak_statistic,peak_sample_index,rank";
pub const CURVES_HEADER: &str = "guess,rank,sample_index,value";
pub const MTD_HEADER: &str = "prefix_size,rank_of_true_key";
pub const SUMMARY_HEADER: &str =
    "mode,traces,method,true_key_rank,best_guess,true_key_peak,best_peak,disclosed_at";

const DEFAULT_SEED: &str = "c0de5eed";
const CURVE_GUESSES: usize = 5;

#[derive(Debug, Parser)]
#[command(
    name = "tower-aes",
    version,
    about = "AES-128 with randomized composite-field S-boxes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate tower-field isomorphisms and write the cheapest as a catalog.
    SearchIso {
        #[arg(long)]
        out: PathBuf,
        /// Number of lowest-cost sets to keep.
        #[arg(long, default_value_t = 32)]
        top: usize,
    },
    /// Validate the published matrices in both orientations.
    CheckPaperSets {
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ECB-encrypt a 16-byte aligned file.
    Encrypt(CipherArgs),
    /// ECB-decrypt a 16-byte aligned file.
    Decrypt(CipherArgs),
    /// Simulate a trace set.
    GenTraces(GenArgs),
    /// Attack one key byte and write a ranking report.
    Attack(AttackArgs),
    /// Scan trace prefixes and record the rank of the true key byte.
    Mtd(MtdArgs),
    /// Paired unprotected/protected run with attacks and a summary.
    RunExperiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SboxMode {
    Lut,
    Composite,
    Randomized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LeakMode {
    Unprotected,
    Protected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

impl OnOff {
    fn enabled(self) -> bool {
        self == OnOff::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Cpa,
    Dom,
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    /// Catalog JSON; defaults to the 32 lowest-cost sets.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CipherArgs {
    /// 32 hex digits.
    #[arg(long)]
    pub key: String,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = SboxMode::Lut)]
    pub mode: SboxMode,
    /// Catalog index for composite mode.
    #[arg(long, default_value_t = 0)]
    pub set: usize,
    /// 8 hex digits, randomized mode.
    #[arg(long, default_value = DEFAULT_SEED)]
    pub seed: String,
    #[arg(long, value_enum, default_value_t = OnOff::On)]
    pub decoys: OnOff,
    #[command(flatten)]
    pub catalog: CatalogArgs,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum)]
    pub mode: LeakMode,
    #[arg(long, default_value_t = CALIBRATED_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value = DEFAULT_SEED)]
    pub seed: String,
    /// 32 hex digits; defaults to the evaluation key.
    #[arg(long)]
    pub key: Option<String>,
    #[arg(long, value_enum, default_value_t = OnOff::On)]
    pub decoys: OnOff,
    #[arg(long, default_value_t = 0)]
    pub target_byte: u8,
    /// Add the other 15 S-box outputs' Hamming weights to every sample.
    #[arg(long)]
    pub algorithmic_noise: bool,
    /// Protected mode: add a leak point for the final S-box output.
    #[arg(long)]
    pub expose_sbox_output: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub catalog: CatalogArgs,
}

#[derive(Debug, Args)]
pub struct MethodArgs {
    #[arg(long, value_enum, default_value_t = Method::Cpa)]
    pub method: Method,
    /// DoM selection: hw4 or monobit:<b>.
    #[arg(long, default_value = "hw4")]
    pub selection: String,
    #[arg(long, default_value_t = 0)]
    pub byte: usize,
}

impl MethodArgs {
    fn attack(&self) -> Result<Attack, Error> {
        let selection: Selection = self.selection.parse()?;
        Ok(match self.method {
            Method::Cpa => Attack::Cpa,
            Method::Dom => Attack::Dom(selection),
        })
    }
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long)]
    pub report: PathBuf,
    /// Per-sample curves of the top-ranked guesses.
    #[arg(long)]
    pub curves: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MtdArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// The true key, checked against the file's fingerprint.
    #[arg(long)]
    pub key: String,
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long, default_value_t = 50)]
    pub step: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// 32 hex digits; defaults to the evaluation key.
    #[arg(long)]
    pub key: Option<String>,
    #[arg(long, default_value = DEFAULT_SEED)]
    pub seed: String,
    #[arg(long, default_value_t = CALIBRATED_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1000)]
    pub n_unprotected: usize,
    #[arg(long, default_value_t = 6000)]
    pub n_protected: usize,
    #[arg(long, value_enum, default_value_t = OnOff::On)]
    pub decoys: OnOff,
    #[arg(long, default_value_t = 50)]
    pub step: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub catalog: CatalogArgs,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Invariant(_) => EXIT_INVARIANT,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Invariant(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Io { .. } | Error::TraceFormat(_) | Error::Catalog(_) => CliError::Io(msg),
            Error::Config(_) | Error::InvalidLength { .. } | Error::NotEnoughSets { .. } => {
                CliError::Usage(msg)
            }
            Error::CatalogTooSmall { .. } | Error::ZeroLfsrState => CliError::Usage(msg),
            Error::Field(_) | Error::InvalidParameterSet { .. } => CliError::Invariant(msg),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn parse_key(s: &str) -> CliResult<[u8; KEY_LEN]> {
    let bytes = hex::decode(s).map_err(|e| usage(format!("key {s:?} is not hex: {e}")))?;
    bytes
        .try_into()
        .map_err(|_| usage(format!("key must be {} hex digits", 2 * KEY_LEN)))
}

pub fn parse_seed(s: &str) -> CliResult<u32> {
    let digits = s.strip_prefix("0x").unwrap_or(s);
    if digits.len() != 8 {
        return Err(usage(format!("seed {s:?} must be 8 hex digits")));
    }
    u32::from_str_radix(digits, 16).map_err(|e| usage(format!("seed {s:?} is not hex: {e}")))
}

fn load_catalog(args: &CatalogArgs) -> CliResult<Arc<Catalog>> {
    Ok(Arc::new(match &args.catalog {
        Some(path) => Catalog::load(path)?,
        None => Catalog::low_cost(32)?,
    }))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e).into())
}

fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e).into())
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::SearchIso { out, top } => search_iso(&out, top),
        Command::CheckPaperSets { out } => check_paper_sets(out.as_deref()),
        Command::Encrypt(args) => cipher(&args, true),
        Command::Decrypt(args) => cipher(&args, false),
        Command::GenTraces(args) => gen_traces(&args),
        Command::Attack(args) => attack(&args),
        Command::Mtd(args) => mtd(&args),
        Command::RunExperiment(args) => {
            let summary = run_experiment(&args)?;
            print!("{summary}");
            Ok(())
        }
    }
}

fn search_iso(out: &Path, top: usize) -> CliResult<()> {
    let all = enumerate_all();
    let phis = phi_candidates();
    println!("phi candidates: {phis:?}");
    for &phi in &phis {
        let d = lambda_discrepancy(phi)?;
        let status = if d.is_empty() {
            "matches 8..=15".to_string()
        } else {
            format!("missing {:?}, unexpected {:?}", d.missing, d.unexpected)
        };
        println!("phi {phi}: lambda {status}");
    }
    println!("isomorphisms: {}", all.len());
    let catalog = Catalog::new(tower_aes::iso::select_low_cost(&all, top)?);
    catalog.save(out)?;
    println!("wrote {} sets to {}", catalog.len(), out.display());
    Ok(())
}

fn check_paper_sets(out: Option<&Path>) -> CliResult<()> {
    let report = tower_aes::iso::check_paper_sets().to_string();
    print!("{report}");
    if let Some(path) = out {
        write_file(path, &report)?;
    }
    Ok(())
}

fn cipher(args: &CipherArgs, encrypt: bool) -> CliResult<()> {
    let key = parse_key(&args.key)?;
    let data = read_file(&args.input)?;
    let run = |backend: &mut Backend<'_>| {
        if encrypt {
            encrypt_ecb(&data, &key, backend)
        } else {
            decrypt_ecb(&data, &key, backend)
        }
    };
    let output = match args.mode {
        SboxMode::Lut => run(&mut Backend::Lut)?,
        SboxMode::Composite => {
            let catalog = load_catalog(&args.catalog)?;
            let set = catalog.get(args.set).ok_or_else(|| {
                usage(format!(
                    "set {} not in a catalog of {}",
                    args.set,
                    catalog.len()
                ))
            })?;
            run(&mut Backend::Composite(set))?
        }
        SboxMode::Randomized => {
            let catalog = load_catalog(&args.catalog)?;
            let mut ctx =
                RandomizationContext::new(parse_seed(&args.seed)?, catalog, args.decoys.enabled())?;
            run(&mut Backend::Randomized(&mut ctx))?
        }
    };
    write_file(&args.out, output)
}

fn key_or_default(key: Option<&str>) -> CliResult<[u8; KEY_LEN]> {
    key.map_or(Ok(EVALUATION_KEY), parse_key)
}

fn gen_traces(args: &GenArgs) -> CliResult<()> {
    let key = key_or_default(args.key.as_deref())?;
    let seed = parse_seed(&args.seed)?;
    let protected = args.mode == LeakMode::Protected;
    let cfg = LeakConfig {
        mode: if protected {
            Mode::Protected
        } else {
            Mode::Unprotected
        },
        decoys: protected && args.decoys.enabled(),
        noise_sigma: args.sigma,
        target_byte: args.target_byte,
        algorithmic_noise: args.algorithmic_noise,
        expose_sbox_output: args.expose_sbox_output,
    };
    let catalog = if protected {
        Some(load_catalog(&args.catalog)?)
    } else {
        None
    };
    let ts = generate_set(args.n, &key, &cfg, seed, catalog)?;
    traceio::save(&ts, &args.out)?;
    Ok(())
}

/// Ranking CSV, one row per guess in ascending guess order.
pub fn report_csv(res: &AttackResult) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for g in 0..256 {
        let _ = writeln!(
            out,
            "{},{:.12},{},{}",
            g,
            res.peaks[g],
            res.peak_index[g],
            res.rank_of(g as u8)
        );
    }
    out
}

/// Curves of the top-ranked guesses, plus any `extra` guesses not among them.
pub fn curves_csv(res: &AttackResult, extra: &[u8]) -> String {
    let mut guesses: Vec<u8> = res.ranking[..CURVE_GUESSES].to_vec();
    for &g in extra {
        if !guesses.contains(&g) {
            guesses.push(g);
        }
    }
    let mut out = format!("{CURVES_HEADER}\n");
    for g in guesses {
        for (j, v) in res.curves[g as usize].iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{:.12}", g, res.rank_of(g), j, v);
        }
    }
    out
}

pub fn emit_report(
    res: &AttackResult,
    report: &Path,
    curves: Option<&Path>,
    extra: &[u8],
) -> CliResult<()> {
    write_file(report, report_csv(res))?;
    if let Some(path) = curves {
        write_file(path, curves_csv(res, extra))?;
    }
    Ok(())
}

fn attack(args: &AttackArgs) -> CliResult<()> {
    let ts = traceio::load(&args.input)?;
    let res = run_attack(&ts, args.method.byte, args.method.attack()?)?;
    emit_report(&res, &args.report, args.curves.as_deref(), &[])?;
    println!(
        "best guess 0x{:02x}, peak {:.6} at sample {}",
        res.best_guess(),
        res.peaks[res.best_guess() as usize],
        res.peak_index[res.best_guess() as usize]
    );
    Ok(())
}

fn check_fingerprint(ts: &TraceSet, key: &[u8]) -> CliResult<()> {
    if key_fingerprint(key) != ts.key_fingerprint {
        return Err(usage("key does not match the trace file's key fingerprint"));
    }
    Ok(())
}

fn mtd_csv(scan: &[(usize, usize)]) -> String {
    let mut out = format!("{MTD_HEADER}\n");
    for (n, rank) in scan {
        let _ = writeln!(out, "{n},{rank}");
    }
    out
}

fn fmt_disclosure(d: Option<usize>) -> String {
    d.map_or_else(|| "not_disclosed".to_string(), |n| n.to_string())
}

fn mtd(args: &MtdArgs) -> CliResult<()> {
    let key = parse_key(&args.key)?;
    let ts = traceio::load(&args.input)?;
    check_fingerprint(&ts, &key)?;
    let byte = args.method.byte;
    if byte >= KEY_LEN {
        return Err(usage(format!("byte index must be in 0..16, got {byte}")));
    }
    let d = measurements_to_disclosure(&ts, byte, key[byte], args.method.attack()?, args.step)?;
    write_file(&args.out, mtd_csv(&d.scan))?;
    println!("disclosed at: {}", fmt_disclosure(d.disclosed_at));
    Ok(())
}

/// Generates both arms with one seed, attacks each with CPA and DoM (hw4),
/// and writes per-arm trace files, reports, curves and disclosure scans plus
/// `summary.csv`. Returns the summary text.
pub fn run_experiment(args: &ExperimentArgs) -> CliResult<String> {
    let key = key_or_default(args.key.as_deref())?;
    let seed = parse_seed(&args.seed)?;
    if args.n_unprotected == 0 || args.n_protected == 0 {
        return Err(usage("trace counts must be at least 1"));
    }
    if args.step == 0 {
        return Err(usage("scan step must be at least 1"));
    }
    let catalog = load_catalog(&args.catalog)?;
    let arms = [
        (LeakConfig::unprotected(args.sigma), args.n_unprotected),
        (
            LeakConfig::protected(args.sigma, args.decoys.enabled()),
            args.n_protected,
        ),
    ];
    for (cfg, _) in &arms {
        cfg.validate()?;
    }
    fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;

    let mut summary = format!("{SUMMARY_HEADER}\n");
    for (cfg, n) in arms {
        let mode = cfg.mode.name();
        let ts = generate_set(n, &key, &cfg, seed, Some(Arc::clone(&catalog)))?;
        traceio::save(&ts, &args.out_dir.join(format!("{mode}.bin")))?;
        for attack in [Attack::Cpa, Attack::Dom(Selection::HwThreshold)] {
            let tag = match attack {
                Attack::Cpa => "cpa",
                Attack::Dom(_) => "dom",
            };
            let res = run_attack(&ts, 0, attack)?;
            emit_report(
                &res,
                &args.out_dir.join(format!("{mode}_{tag}.csv")),
                Some(&args.out_dir.join(format!("{mode}_{tag}_curves.csv"))),
                &[key[0]],
            )?;
            let d = measurements_to_disclosure(&ts, 0, key[0], attack, args.step)?;
            write_file(
                &args.out_dir.join(format!("{mode}_{tag}_mtd.csv")),
                mtd_csv(&d.scan),
            )?;
            let _ = writeln!(
                summary,
                "{},{},{},{},{},{:.12},{:.12},{}",
                mode,
                n,
                attack.name(),
                res.rank_of(key[0]),
                res.best_guess(),
                res.peaks[key[0] as usize],
                res.peaks[res.best_guess() as usize],
                fmt_disclosure(d.disclosed_at)
            );
        }
    }
    write_file(&args.out_dir.join("summary.csv"), &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_and_seed_parsing() {
        assert_eq!(
            parse_key("000102030405060708090a0b0c0d0e0f").unwrap()[15],
            0x0f
        );
        assert!(parse_key("0001").is_err());
        assert!(parse_key("zz0102030405060708090a0b0c0d0e0f").is_err());
        assert_eq!(parse_seed("c0de5eed").unwrap(), 0xC0DE_5EED);
        assert_eq!(parse_seed("0x00010001").unwrap(), 0x0001_0001);
        assert!(parse_seed("123").is_err());
        assert!(parse_seed("1234567g").is_err());
    }

    #[test]
    fn error_exit_codes() {
        assert_eq!(
            CliError::from(Error::Config("x".into())).exit_code(),
            EXIT_USAGE
        );
        assert_eq!(
            CliError::from(Error::TraceFormat("x".into())).exit_code(),
            EXIT_IO
        );
        let io = Error::io("p", std::io::Error::other("boom"));
        assert_eq!(CliError::from(io).exit_code(), EXIT_IO);
        let inv = Error::InvalidParameterSet {
            id: 1,
            reason: "r".into(),
        };
        assert_eq!(CliError::from(inv).exit_code(), EXIT_INVARIANT);
    }

    #[test]
    fn report_layout() {
        let ts =
            generate_set(300, &EVALUATION_KEY, &LeakConfig::unprotected(0.0), 1, None).unwrap();
        let res = run_attack(&ts, 0, Attack::Cpa).unwrap();
        let csv = report_csv(&res);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 257);
        assert_eq!(lines[0], REPORT_HEADER);
        let row: Vec<&str> = lines[1 + 0x3C].split(',').collect();
        assert_eq!(row[0], "60");
        assert_eq!(row[2], "1");
        assert_eq!(row[3], "1");
        let curves = curves_csv(&res, &[0x3C, 0x00]);
        let guesses: std::collections::BTreeSet<&str> = curves
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap())
            .collect();
        assert!(guesses.len() == 5 || guesses.len() == 6);
        assert!(guesses.contains("0"));
    }

    #[test]
    fn experiment_rejects_zero_traces() {
        let dir = tempfile::tempdir().unwrap();
        let args = ExperimentArgs {
            key: None,
            seed: DEFAULT_SEED.into(),
            sigma: 1.0,
            n_unprotected: 0,
            n_protected: 10,
            decoys: OnOff::On,
            step: 10,
            out_dir: dir.path().join("out"),
            catalog: CatalogArgs { catalog: None },
        };
        assert_eq!(run_experiment(&args).unwrap_err().exit_code(), EXIT_USAGE);
        assert!(!dir.path().join("out").exists());
    }
}
