use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qbcomp::binning::{run_binning, BinningMethod, ProbVector};
use qbcomp::channel::protocol_report;
use qbcomp::experiments::{
    aggregate, fit_dim_sweep, fit_error_sweep, read_csv, reference_fit, sweep_dimension,
    sweep_error, sweep_plot, write_aggregate_csv, write_csv, write_differences_csv, EpsilonRule,
    ExperimentConfig, FitModel, MethodFit, RateKind, SampleRecord,
};
use qbcomp::gallery::{example1, example2, GalleryCase};
use qbcomp::io::{
    read_ensemble, read_json, read_structure, write_json, DistributionJson, EnsembleJson,
    StructureJson,
};
use qbcomp::{Error, Result};

#[derive(Parser)]
#[command(
    name = "qbcomp",
    version,
    about = "Blind compression of quantum ensembles with finite approximations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Protocol report for the two-qubit example.
    Example1 {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Protocol report for the growing-dimension example.
    Example2 {
        #[arg(long)]
        epsilon: f64,
        #[arg(long, short = 'n')]
        n: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Bin a probability distribution against the flat state.
    Bin {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long)]
        epsilon: f64,
        /// Include the error and the rates.
        #[arg(long)]
        report: bool,
        #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.5, 0.5])]
        priors: Vec<f64>,
    },
    /// Protocol report for an ensemble file and a structure file.
    Report {
        #[arg(long)]
        ensemble: PathBuf,
        #[arg(long)]
        structure: PathBuf,
        /// Exact structure used for the reference rate.
        #[arg(long)]
        exact: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Rate against ε at one dimension.
    SweepError {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
    },
    /// Rate against dimension at ε = 1/√d.
    SweepDim {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
    },
    /// Fit mean rates from a records CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long, value_enum, default_value = "both")]
        rate_kind: RateKindArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a gallery case as ensemble and structure files.
    GalleryDump {
        #[arg(long, value_enum)]
        case: CaseArg,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, short = 'n', default_value_t = 8)]
        n: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// JSON config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    rate_kind: Option<RateKindArg>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out_dir: PathBuf,
    /// Omit the timestamp comment line from records.csv.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Arithmetic,
    Geometric,
}

impl From<MethodArg> for BinningMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Arithmetic => BinningMethod::Arithmetic,
            MethodArg::Geometric => BinningMethod::Geometric,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Error,
    Dim,
}

#[derive(Clone, Copy, ValueEnum)]
enum RateKindArg {
    Entropy,
    #[value(name = "log2L", alias = "log2l")]
    Log2L,
    Both,
}

impl From<RateKindArg> for RateKind {
    fn from(k: RateKindArg) -> Self {
        match k {
            RateKindArg::Entropy => RateKind::Entropy,
            RateKindArg::Log2L => RateKind::Log2L,
            RateKindArg::Both => RateKind::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Example1,
    Example2,
}

const DEFAULT_SAMPLES: usize = 1000;
const DEFAULT_SEED: u64 = 20240521;

fn emit(value: &Value, output: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn case_report(case: &GalleryCase) -> Result<Value> {
    let report = protocol_report(
        &case.approx_structure,
        &case.ensemble,
        Some(&case.exact_structure),
    )?;
    let mut value = serde_json::to_value(&report)?;
    value["case"] = json!(case.name);
    value["epsilon"] = json!(case.epsilon);
    value["expected"] = json!(case.expected);
    Ok(value)
}

fn bin(
    input: &Path,
    method: BinningMethod,
    epsilon: f64,
    report: bool,
    priors: &[f64],
) -> Result<Value> {
    let values = read_json::<DistributionJson>(input)?.into_values();
    let p = ProbVector::new(values)?;
    let out = run_binning(&p, method, epsilon, (priors[0], priors[1]))?;
    let mut value = json!({
        "method": method,
        "epsilon": epsilon,
        "partition": out.partition.boundaries(),
        "L": out.partition.len(),
        "binned": p.unsort(out.binned.values()),
        "order": p.permutation(),
    });
    if report {
        value["error"] = json!(out.error);
        value["R"] = json!(out.rate.rate);
        value["log2L"] = json!(out.rate.log2_l);
    }
    Ok(value)
}

fn sweep_config(args: &SweepArgs, default: ExperimentConfig) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => default,
    };
    if let Some(s) = args.samples {
        cfg.samples = s;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(k) = args.rate_kind {
        cfg.rate_kind = k.into();
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    Ok(cfg)
}

fn timestamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix={secs}")
}

fn fits_json(fits: &[MethodFit], model: FitModel) -> String {
    let items: Vec<String> = fits
        .iter()
        .map(|f| {
            let (ra, rb) = reference_fit(model, f.method);
            format!(
                "{{\"method\":\"{}\",\"rate_kind\":\"{}\",\"fit\":{},\"reference\":{{\"a\":{ra},\"b\":{rb}}}}}",
                f.method.tag(),
                f.kind.name(),
                f.fit.to_json()
            )
        })
        .collect();
    format!("[\n  {}\n]\n", items.join(",\n  "))
}

fn print_fit_summary(fits: &[MethodFit], model: FitModel) {
    for f in fits {
        let (ra, rb) = reference_fit(model, f.method);
        println!(
            "{} {} {:>7}: a = {:.4} (ref {ra}), b = {:.4} (ref {rb}), rss = {:.3e}{}",
            model.name(),
            f.method.tag(),
            f.kind.name(),
            f.fit.a,
            f.fit.b,
            f.fit.rss,
            if f.fit.b_identifiable {
                ""
            } else {
                ", b unidentifiable"
            }
        );
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_sweep_outputs(
    args: &SweepArgs,
    cfg: &ExperimentConfig,
    records: &[SampleRecord],
    model: FitModel,
) -> Result<()> {
    std::fs::create_dir_all(&args.out_dir)?;
    let dir = args.out_dir.as_path();
    let ts = (!args.no_timestamp).then(timestamp);
    let mut w = create(dir, "records.csv")?;
    write_csv(&mut w, records, ts.as_deref())?;
    w.flush()?;

    let agg = aggregate(records);
    let mut w = create(dir, "aggregate.csv")?;
    write_aggregate_csv(&mut w, &agg)?;
    w.flush()?;
    let mut w = create(dir, "differences.csv")?;
    write_differences_csv(&mut w, &agg)?;
    w.flush()?;

    let fits = match model {
        FitModel::ErrorCurve => fit_error_sweep(&agg, cfg.rate_kind)?,
        FitModel::DimCurve => fit_dim_sweep(&agg, cfg.rate_kind)?,
    };
    std::fs::write(dir.join("fits.json"), fits_json(&fits, model))?;
    for kind in cfg.rate_kind.kinds() {
        let svg = sweep_plot(&agg, &fits, model, kind).to_svg();
        std::fs::write(dir.join(format!("rate_{}.svg", kind.name())), svg)?;
    }
    write_json(&dir.join("config.json"), cfg)?;
    println!("{} records written to {}", records.len(), dir.display());
    print_fit_summary(&fits, model);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Example1 { epsilon, output } => {
            emit(&case_report(&example1(epsilon)?)?, output.as_deref())
        }
        Command::Example2 { epsilon, n, output } => emit(
            &case_report(&example2(epsilon, n, None, None)?)?,
            output.as_deref(),
        ),
        Command::Bin {
            input,
            method,
            epsilon,
            report,
            priors,
        } => emit(&bin(&input, method.into(), epsilon, report, &priors)?, None),
        Command::Report {
            ensemble,
            structure,
            exact,
            output,
        } => {
            let ens = read_ensemble(&ensemble)?;
            let st = read_structure(&structure)?;
            let exact = exact.as_deref().map(read_structure).transpose()?;
            let report = protocol_report(&st, &ens, exact.as_ref())?;
            emit(&serde_json::to_value(&report)?, output.as_deref())
        }
        Command::SweepError {
            sweep,
            dim,
            epsilons,
        } => {
            let mut cfg = sweep_config(
                &sweep,
                ExperimentConfig::error_sweep_default(DEFAULT_SAMPLES, DEFAULT_SEED),
            )?;
            if let Some(d) = dim {
                cfg.dims = vec![d];
            }
            if let Some(e) = epsilons {
                cfg.epsilons = EpsilonRule::List(e);
            }
            cfg.validate()?;
            let records = sweep_error(&cfg)?;
            write_sweep_outputs(&sweep, &cfg, &records, FitModel::ErrorCurve)
        }
        Command::SweepDim { sweep, dims } => {
            let mut cfg = sweep_config(
                &sweep,
                ExperimentConfig::dim_sweep_default(DEFAULT_SAMPLES, DEFAULT_SEED),
            )?;
            if let Some(d) = dims {
                cfg.dims = d;
            }
            cfg.validate()?;
            let records = sweep_dimension(&cfg)?;
            write_sweep_outputs(&sweep, &cfg, &records, FitModel::DimCurve)
        }
        Command::Fit {
            input,
            model,
            rate_kind,
            output,
        } => {
            let records = read_csv(BufReader::new(File::open(&input)?))?;
            if records.is_empty() {
                return Err(Error::InvalidArgument("records file has no rows".into()));
            }
            let agg = aggregate(&records);
            let (model, fits) = match model {
                ModelArg::Error => (
                    FitModel::ErrorCurve,
                    fit_error_sweep(&agg, rate_kind.into())?,
                ),
                ModelArg::Dim => (FitModel::DimCurve, fit_dim_sweep(&agg, rate_kind.into())?),
            };
            let text = fits_json(&fits, model);
            match output {
                Some(path) => {
                    std::fs::write(path, text)?;
                    print_fit_summary(&fits, model);
                }
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::GalleryDump {
            case,
            epsilon,
            n,
            out_dir,
        } => {
            let case = match case {
                CaseArg::Example1 => example1(epsilon)?,
                CaseArg::Example2 => example2(epsilon, n, None, None)?,
            };
            std::fs::create_dir_all(&out_dir)?;
            let stem = &case.name;
            write_json(
                &out_dir.join(format!("{stem}_ensemble.json")),
                &EnsembleJson::from_ensemble(&case.ensemble),
            )?;
            write_json(
                &out_dir.join(format!("{stem}_approx_ensemble.json")),
                &EnsembleJson::from_ensemble(&case.approx_ensemble),
            )?;
            write_json(
                &out_dir.join(format!("{stem}_structure.json")),
                &StructureJson::from_structure(&case.approx_structure),
            )?;
            write_json(
                &out_dir.join(format!("{stem}_exact_structure.json")),
                &StructureJson::from_structure(&case.exact_structure),
            )?;
            write_json(
                &out_dir.join(format!("{stem}_summary.json")),
                &case.summary_json(),
            )?;
            println!("wrote {stem} files to {}", out_dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
