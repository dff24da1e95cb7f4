//! `fairpain` command-line harness.
//!
//! Exit codes: 0 success, 1 other failure (including integrity errors),
//! 2 spec or argument error, 3 IO error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fairpain::baselines::ModelKind;
use fairpain::cohort::{ingest_cohort, synthesize_cohort, write_bundle, Attribute, BiasStrengths, SynthConfig};
use fairpain::exec::Exec;
use fairpain::features::{build_feature_matrix, EncodingPlan, FeatureSelection};
use fairpain::harness::{
    detect_bias, rank, render_ranking, run_experiment_with, write_outputs, BiasEntry, DataSource, ExperimentSpec,
    ResultTable,
};
use fairpain::mitigation::Mitigation;
use fairpain::net::LossKind;
use fairpain::Error;

#[derive(Parser, Debug)]
#[command(name = "fairpain", version, about = "Fairness-aware pain-recovery classification experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate a synthetic cohort bundle.
    Synth(SynthArgs),
    /// Report label bias per protected attribute.
    Detect(DetectArgs),
    /// Encode a bundle into a feature matrix CSV.
    Extract(ExtractArgs),
    /// Run an experiment grid.
    Run(RunArgs),
    /// Rank the rows of a result table.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// `none` or e.g. `gender=0.4,age=0.2`.
    #[arg(long, default_value = "none")]
    bias: String,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    signal: Option<f64>,
    #[arg(long)]
    missing_rate: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DetectArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// An attribute name or `all`.
    #[arg(long, default_value = "all")]
    attribute: String,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// Encoding plan JSON; defaults to every feature domain.
    #[arg(long, conflicts_with = "raw")]
    plan: Option<PathBuf>,
    /// Raw minute encoding with demographic slots.
    #[arg(long)]
    raw: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// ExperimentSpec JSON. Flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// An attribute name, or `all` to train the fairness loss on all five.
    #[arg(long)]
    attribute: Option<String>,
    /// Keep only the network trained with this loss.
    #[arg(long)]
    loss: Option<LossKind>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    reg_coef: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// Comma-separated model list.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<ModelKind>>,
    /// Comma-separated mitigation list.
    #[arg(long, value_delimiter = ',')]
    mitigations: Option<Vec<Mitigation>>,
    /// Data from a bundle instead of the synthetic generator.
    #[arg(long)]
    bundle: Option<PathBuf>,
    /// Synthetic cohort size when no spec or bundle is given.
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value = "none")]
    bias: String,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run cells one after another.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// `results.json` or the directory holding it.
    #[arg(long)]
    results: PathBuf,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Csv { .. } => 3,
        Error::Spec(_) | Error::Invalid(_) | Error::UnknownAttribute(_) | Error::Json(_) => 2,
        _ => 1,
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, body: &str) -> Result<(), Error> {
    fs::write(path, body).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_attributes(s: &str) -> Result<(Vec<Attribute>, bool), Error> {
    if s.trim().eq_ignore_ascii_case("all") {
        Ok((Attribute::ALL.to_vec(), true))
    } else {
        Ok((vec![s.parse()?], false))
    }
}

fn print_bias(entries: &[BiasEntry]) {
    let f = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.4}"));
    for e in entries {
        println!(
            "{:<10} n={:<5} spd={:<10} di={:<10} {}",
            e.attribute.name(),
            e.instances,
            f(e.spd),
            f(e.di),
            if e.biased { "biased" } else { "fair" }
        );
    }
}

fn synth(a: SynthArgs) -> Result<(), Error> {
    let mut cfg = SynthConfig::new(a.n, a.bias.parse::<BiasStrengths>()?, a.seed);
    if let Some(s) = a.signal {
        cfg.signal = s;
    }
    if let Some(m) = a.missing_rate {
        cfg.missing_rate = m;
    }
    let cohort = synthesize_cohort(&cfg)?;
    write_bundle(&cohort, &a.out)?;
    println!(
        "wrote {} participants, {} days, {} labels to {}",
        cohort.participants.len(),
        cohort.days.len(),
        cohort.labels.len(),
        a.out.display()
    );
    print_bias(&detect_bias(&cohort, &Attribute::ALL)?);
    Ok(())
}

fn detect(a: DetectArgs) -> Result<(), Error> {
    let (attrs, _) = parse_attributes(&a.attribute)?;
    let cohort = ingest_cohort(&a.bundle, &EncodingPlan::default())?;
    let json = serde_json::to_string_pretty(&detect_bias(&cohort, &attrs)?)?;
    match a.out {
        Some(p) => write(&p, &json),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn extract(a: ExtractArgs) -> Result<(), Error> {
    let plan = match (&a.plan, a.raw) {
        (Some(p), _) => EncodingPlan::from_json(&read(p)?)?,
        (None, true) => EncodingPlan::raw(),
        (None, false) => EncodingPlan::features(FeatureSelection::default()),
    };
    let cohort = ingest_cohort(&a.bundle, &plan)?;
    let ds = build_feature_matrix(&cohort, &plan)?;
    ds.save_csv(&a.out)?;
    println!("{} instances x {} columns ({} dropped) -> {}", ds.len(), ds.columns.len(), ds.dropped.len(), a.out.display());
    Ok(())
}

fn build_spec(a: &RunArgs) -> Result<ExperimentSpec, Error> {
    let mut spec = match &a.spec {
        Some(p) => ExperimentSpec::from_json(&read(p)?)?,
        None => {
            let seed = a.seed.ok_or_else(|| Error::Spec("--seed is required without --spec".into()))?;
            let data = match &a.bundle {
                Some(b) => DataSource::Bundle(b.clone()),
                None => DataSource::Synth(SynthConfig::new(a.n, a.bias.parse()?, seed)),
            };
            ExperimentSpec::new(seed, data, ModelKind::ALL.to_vec())
        }
    };
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if let Some(b) = &a.bundle {
        spec.data = DataSource::Bundle(b.clone());
    }
    if let Some(at) = &a.attribute {
        (spec.attributes, spec.joint_attributes) = parse_attributes(at)?;
    }
    if let Some(m) = &a.models {
        spec.models = m.clone();
    }
    if let Some(m) = &a.mitigations {
        spec.mitigations = m.clone();
    }
    if let Some(loss) = a.loss {
        let keep = match loss {
            LossKind::Mafl => ModelKind::MaflCnn,
            LossKind::Bce => ModelKind::BceCnn,
        };
        let mut models: Vec<ModelKind> = spec.models.iter().copied().filter(|m| !m.is_network()).collect();
        models.insert(0, keep);
        spec.models = models;
    }
    if let Some(l) = a.lambda {
        spec.train.lambda = l;
    }
    if let Some(r) = a.reg_coef {
        spec.train.reg_coef = r;
    }
    if let Some(e) = a.epochs {
        spec.train.epochs = e;
    }
    if let Some(r) = a.repetitions {
        spec.repetitions = r;
    }
    if let Some(o) = &a.out {
        spec.out_dir = Some(o.clone());
    }
    spec.validate()?;
    Ok(spec)
}

fn run(a: RunArgs) -> Result<(), Error> {
    let spec = build_spec(&a)?;
    let exec = if a.sequential { Exec::Sequential } else { Exec::Parallel };
    let table = run_experiment_with(&spec, exec)?;
    let out = spec.out_dir.clone().unwrap_or_else(|| PathBuf::from("results"));
    write_outputs(&table, &spec, &out)?;
    let failures = table.rows.iter().filter(|r| r.error.is_some()).count();
    println!("{} rows ({failures} failed) -> {}", table.rows.len(), out.display());
    print!("{}", render_ranking(&rank(&table)?));
    Ok(())
}

fn report(a: ReportArgs) -> Result<(), Error> {
    let path = if a.results.is_dir() { a.results.join("results.json") } else { a.results };
    let table = ResultTable::from_json(&read(&path)?)?;
    print!("{}", render_ranking(&rank(&table)?));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Synth(a) => synth(a),
        Cmd::Detect(a) => detect(a),
        Cmd::Extract(a) => extract(a),
        Cmd::Run(a) => run(a),
        Cmd::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
