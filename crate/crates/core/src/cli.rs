//! The `fairlens` command line.
//!
//! Exit codes: 0 on success, 1 on any validation or I/O error, 2 when
//! `--fail-on-bias` is set and a finding exceeds its tolerance.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{AuditConfig, DatasetSource};
use crate::curves::CurveFormat;
use crate::error::{Error, Result};
use crate::ledger::{load_ledger, render_report, save_ledger, write_atomic, AuditLedger};
use crate::model::PredictionOracle;
use crate::pipeline::{
    load_dataset, resolve_synth_config, run_audit, run_explain, run_mitigation, train_audited_model, verify_ledger,
    LoadedDataset, ModelFile,
};
use crate::synth::{generate, preset};

/// `println!` that ignores a closed stdout instead of panicking.
macro_rules! outln {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_BIAS: i32 = 2;

pub const DATASET_FILE: &str = "dataset.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const MODEL_FILE: &str = "model.json";
pub const REPORT_FILE: &str = "report.md";

#[derive(Debug, Parser)]
#[command(name = "fairlens", version, about = "Fairness audits, mitigation and risk curves for binary classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset (dataset.csv) and its ground truth (truth.csv).
    Synth(SynthArgs),
    /// Train the model under audit and write model.json.
    Train(TrainArgs),
    /// Steps 1 to 4: scope, categories, metrics and findings. Writes a new ledger.
    Audit(AuditArgs),
    /// Step 5: evaluate interventions and append the plan to the ledger.
    Mitigate(LedgerArgs),
    /// Risk curves for the audited model; appends explainability entries.
    Explain(ExplainArgs),
    /// Render a ledger as Markdown or canonical JSON.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Md,
    Csv,
    Svg,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Master seed. Falls back to FAIRLENS_SEED, then the config's seed.
    #[arg(long, env = "FAIRLENS_SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// operator1-like, operator2-like or null.
    #[arg(long)]
    pub preset: Option<String>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub ledger: PathBuf,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Exit with status 2 when any finding exceeds its tolerance.
    #[arg(long)]
    pub fail_on_bias: bool,
}

#[derive(Debug, Args)]
pub struct LedgerArgs {
    #[arg(long)]
    pub ledger: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub ledger: PathBuf,
    /// Model file from `train`; retrained from the ledger when omitted.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Directory for curve files; defaults to the ledger's directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Restrict artifacts to one format (csv or svg).
    #[arg(long)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub ledger: PathBuf,
    /// md (default) or json.
    #[arg(long, default_value = "md")]
    pub format: Format,
    /// Write into this directory instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Recompute every stored number from the recorded config and seed.
    #[arg(long)]
    pub verify: bool,
}

/// Parses arguments and runs, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn load_config(path: &Path, seed: &SeedArg) -> Result<(AuditConfig, u64)> {
    let config = AuditConfig::load(path)?;
    let seed = seed.seed.unwrap_or(config.seed);
    Ok((config, seed))
}

fn existing_ledger(path: &Path) -> Result<AuditLedger> {
    if !path.exists() {
        return Err(Error::InvalidLedger(format!("{} does not exist; run `audit` first", path.display())));
    }
    load_ledger(path)
}

fn ledger_data(ledger: &AuditLedger) -> Result<LoadedDataset> {
    let p = ledger
        .provenance
        .as_ref()
        .ok_or_else(|| Error::InvalidLedger("ledger has no provenance; run `audit` first".into()))?;
    load_dataset(&p.config, ledger.seed)
}

fn save(ledger: &mut AuditLedger, path: &Path) -> Result<()> {
    ledger.updated_at = Some(now());
    save_ledger(ledger, path)
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => {
            let (config, seed) = load_config(&a.config, &a.seed)?;
            let data = load_dataset(&config, seed)?;
            let model = train_audited_model(&config, &data.dataset, seed)?;
            let file = ModelFile {
                kind: model.kind().to_string(),
                seed,
                dataset_sha256: data.sha256()?,
                model,
            };
            std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
            let path = a.out.join(MODEL_FILE);
            write_atomic(&path, serde_json::to_string(&file)?.as_bytes())?;
            outln!("wrote {} (sha256 {})", path.display(), &file.sha256()?[..16]);
            Ok(EXIT_OK)
        }
        Command::Audit(a) => {
            let (config, seed) = load_config(&a.config, &a.seed)?;
            let data = load_dataset(&config, seed)?;
            let mut ledger = run_audit(&config, seed, &data)?;
            ledger.created_at = Some(now());
            save(&mut ledger, &a.ledger)?;
            let step4 = ledger.step4_findings.as_ref().expect("audit records findings");
            for f in &step4.findings {
                let disparity = f.disparity.map_or("undefined".to_string(), |d| format!("{:.1}%", 100.0 * d));
                outln!(
                    "{} disparity {disparity} over {} vs ±{:.1}%: {}",
                    f.metric,
                    f.groups.join("/"),
                    100.0 * f.threshold.half_width,
                    if f.exceeded { "EXCEEDED" } else { "within tolerance" }
                );
            }
            outln!("ledger {} written to {}", ledger.ledger_id, a.ledger.display());
            Ok(if a.fail_on_bias && step4.any_exceeded { EXIT_BIAS } else { EXIT_OK })
        }
        Command::Mitigate(a) => {
            let mut ledger = existing_ledger(&a.ledger)?;
            let data = ledger_data(&ledger)?;
            run_mitigation(&mut ledger, &data)?;
            save(&mut ledger, &a.ledger)?;
            let plan = ledger.step5_plan.as_ref().expect("mitigation records a plan");
            for c in &plan.candidates {
                let r = &c.report;
                outln!(
                    "{}: {} disparity {:.1}% -> {:.1}%, accuracy {:+.1} points, {:?}",
                    r.candidate,
                    r.priority_metric,
                    100.0 * r.baseline_disparity,
                    100.0 * r.intervention_disparity,
                    100.0 * r.accuracy_delta,
                    r.verdict
                );
            }
            outln!("adopted: {}", plan.adopted.map_or("none", |c| c.name()));
            Ok(EXIT_OK)
        }
        Command::Explain(a) => {
            let mut ledger = existing_ledger(&a.ledger)?;
            let data = ledger_data(&ledger)?;
            let model = match &a.model {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                    serde_json::from_str::<ModelFile>(&text)?.model
                }
                None => train_audited_model(&ledger.provenance.as_ref().expect("checked").config, &data.dataset, ledger.seed)?,
            };
            let formats = match a.format {
                None => None,
                Some(Format::Csv) => Some(vec![CurveFormat::Csv]),
                Some(Format::Svg) => Some(vec![CurveFormat::Svg]),
                Some(other) => {
                    return Err(Error::InvalidParameter(format!(
                        "explain writes csv or svg, not {}",
                        other.to_possible_value().expect("no skipped variants").get_name()
                    )))
                }
            };
            let out = a
                .out
                .clone()
                .unwrap_or_else(|| a.ledger.parent().map(Path::to_path_buf).unwrap_or_default());
            let written = run_explain(&mut ledger, &data, &model, Some(&out), formats.as_deref())?;
            save(&mut ledger, &a.ledger)?;
            for p in written {
                outln!("wrote {}", p.display());
            }
            Ok(EXIT_OK)
        }
        Command::Report(a) => report(a),
    }
}

fn synth(a: SynthArgs) -> Result<i32> {
    let cfg = match (&a.config, &a.preset) {
        (Some(path), None) => {
            let (config, seed) = load_config(path, &a.seed)?;
            if !matches!(config.dataset, DatasetSource::Synth { .. }) {
                return Err(Error::InvalidConfig(format!("{}: dataset source is not synthetic", path.display())));
            }
            resolve_synth_config(&config.dataset, seed)?
        }
        (None, Some(name)) => {
            let mut cfg = preset(name)?;
            cfg.seed = a.seed.seed.unwrap_or(0);
            cfg
        }
        _ => return Err(Error::InvalidParameter("synth needs --config or --preset".into())),
    };
    let out = generate(&cfg)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let mut data = Vec::new();
    out.dataset.write_csv(&mut data, &cfg.label)?;
    write_atomic(&a.out.join(DATASET_FILE), &data)?;
    let mut truth = Vec::new();
    out.write_truth_csv(&mut truth)?;
    write_atomic(&a.out.join(TRUTH_FILE), &truth)?;
    outln!(
        "wrote {} rows ({} positive) to {}",
        out.dataset.n_rows(),
        out.dataset.positives(),
        a.out.join(DATASET_FILE).display()
    );
    Ok(EXIT_OK)
}

fn report(a: ReportArgs) -> Result<i32> {
    let ledger = existing_ledger(&a.ledger)?;
    let (body, name) = match a.format {
        Format::Md => (render_report(&ledger), REPORT_FILE),
        Format::Json => (ledger.to_canonical_json()?, "ledger.json"),
        other => {
            return Err(Error::InvalidParameter(format!(
                "report renders md or json, not {}",
                other.to_possible_value().expect("no skipped variants").get_name()
            )))
        }
    };
    match &a.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            write_atomic(&dir.join(name), body.as_bytes())?;
        }
        None => {
            let _ = std::io::stdout().write_all(body.as_bytes());
        }
    }
    if !a.verify {
        return Ok(EXIT_OK);
    }
    let data = ledger_data(&ledger)?;
    let mismatches = verify_ledger(&ledger, &data)?;
    if mismatches.is_empty() {
        eprintln!("verify: every recorded number reproduces");
        Ok(EXIT_OK)
    } else {
        for m in &mismatches {
            eprintln!("verify: mismatch at {}: stored {} recomputed {}", m.path, m.stored, m.recomputed);
        }
        Err(Error::InvalidLedger(format!("{} value(s) do not reproduce", mismatches.len())))
    }
}
