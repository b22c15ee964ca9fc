use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use attribench::config::{default_metric_for_model, Arm, DatasetEntry, ExperimentConfig, MethodEntry};
use attribench::io;
use attribench::runner::{attribute_parallel, model_performance, run_experiment, RunOptions};
use attribench::table::{render_table, RenderOptions, TableFormat};
use attribench_core::attr::AttributionMethod;
use attribench_core::data::{generate_dataset, train_on_bundles, DatasetSpec, Split};
use attribench_core::forge::{build_model, Family};
use attribench_core::metrics::{evaluate, Metric, MetricConfig};
use attribench_core::nn::{Loss, TrainConfig};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "attribench", version, about = "Ground-truth benchmark for feature attribution methods")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Val,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Val => Split::Val,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ArmArg {
    Handcrafted,
    Trained,
}

#[derive(clap::Args)]
struct DatasetArgs {
    /// Dataset spec as TOML (keys as in a `[[datasets]]` entry).
    #[arg(long, conflicts_with = "family")]
    config: Option<PathBuf>,
    /// Family with default settings, e.g. `weighted`.
    #[arg(long)]
    family: Option<String>,
    /// Boolean formula (Boolean family only).
    #[arg(long)]
    formula: Option<String>,
    #[arg(long)]
    n_features: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one split of a dataset as CSV plus a `.meta.json` sidecar.
    Generate {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the handcrafted network of a dataset spec, or train one.
    BuildModel {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long, value_enum, default_value = "handcrafted")]
        arm: ArmArg,
        /// Trainer settings as TOML (trained arm only).
        #[arg(long)]
        train_config: Option<PathBuf>,
        /// Output path; JSON goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Attribute every row of a dataset with one method.
    Attribute {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Method name with default settings, e.g. `integrated_gradients`.
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        method: Option<String>,
        /// Method config as TOML (keys as in a `[[methods]]` entry).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score an attribution file against its dataset.
    Evaluate {
        #[arg(long)]
        attributions: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Metric name; the family default when omitted.
        #[arg(long, conflicts_with = "config")]
        metric: Option<String>,
        /// Metric config as TOML, e.g. `metric = "infidelity"`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full experiment grid from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output path; overrides the config's paths. Stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<TableFormat>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Add a mean runtime column (makes the output run-dependent).
        #[arg(long)]
        timings: bool,
    },
    /// List families, methods and metrics.
    List,
}

fn dataset_spec(args: &DatasetArgs) -> Result<DatasetSpec> {
    let mut spec = match (&args.config, &args.family) {
        (Some(path), _) => {
            let entry: DatasetEntry = toml::from_str(&io::read_input(path)?)
                .with_context(|| format!("parsing {}", path.display()))?;
            entry.spec
        }
        (None, Some(name)) => {
            let family = Family::from_name(name).with_context(|| format!("unknown family `{name}` (see `attribench list`)"))?;
            DatasetSpec::new(family)
        }
        (None, None) => bail!("give --family or --config"),
    };
    if let Some(f) = &args.formula {
        spec.formula = Some(f.clone());
    }
    if let Some(n) = args.n_features {
        spec.n_features = n;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    spec.validate()?;
    Ok(spec)
}

/// Parses a single-key TOML document such as `method = "deeplift"`.
fn from_name<T: serde::de::DeserializeOwned>(key: &str, name: &str) -> Result<T> {
    toml::from_str(&format!("{key} = {}", toml::Value::String(name.to_owned())))
        .with_context(|| format!("unknown {key} `{name}` (see `attribench list`)"))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<usize> {
    match cli.command {
        Command::Generate { dataset, split, out } => {
            let spec = dataset_spec(&dataset)?;
            let data = generate_dataset(&spec)?;
            let split = Split::from(split);
            io::write_bundle(&out, data.split(split), Some(split))?;
            eprintln!("wrote {} rows to {}", data.split(split).len(), out.display());
        }
        Command::BuildModel {
            dataset,
            arm,
            train_config,
            out,
        } => {
            let spec = dataset_spec(&dataset)?;
            let net = match arm {
                ArmArg::Handcrafted => build_model(&spec.draw_model()?)?,
                ArmArg::Trained => {
                    let mut tc: TrainConfig = match &train_config {
                        Some(p) => toml::from_str(&io::read_input(p)?).with_context(|| format!("parsing {}", p.display()))?,
                        None => TrainConfig::default(),
                    };
                    if spec.family == Family::Uncertainty {
                        tc.loss = Loss::CrossEntropy;
                    }
                    let data = generate_dataset(&spec)?;
                    let (net, report) = train_on_bundles(&data.train, &data.val, &tc)?;
                    let classification = spec.family == Family::Uncertainty;
                    let perf = model_performance(&net, &data.test, classification)?;
                    eprintln!(
                        "best epoch {}, val loss {:.6}, test {} {perf:.6}",
                        report.best_epoch,
                        report.val_loss,
                        if classification { "accuracy" } else { "mse" }
                    );
                    net
                }
            };
            match out {
                Some(p) => io::write_net(&p, &net)?,
                None => println!("{}", io::net_to_json(&net)?),
            }
        }
        Command::Attribute {
            model,
            data,
            method,
            config,
            seed,
            jobs,
            out,
        } => {
            let net = io::read_net(&model)?;
            let bundle = io::read_bundle(&data)?;
            let entry: MethodEntry = match (&config, &method) {
                (Some(p), _) => toml::from_str(&io::read_input(p)?).with_context(|| format!("parsing {}", p.display()))?,
                (None, Some(name)) => MethodEntry::new(from_name::<AttributionMethod>("method", name)?),
                (None, None) => unreachable!("clap requires one of them"),
            };
            let cfg = entry.resolve(bundle.model.family(), seed);
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(j) = jobs {
                pool = pool.num_threads(j);
            }
            let attr = pool.build()?.install(|| attribute_parallel(&cfg, &net, &bundle.features))?;
            io::write_attribution(&out, &attr)?;
            eprintln!(
                "{} on {} rows in {:.3}s",
                entry.label(),
                attr.rows(),
                attr.elapsed.unwrap_or_default().as_secs_f64()
            );
        }
        Command::Evaluate {
            attributions,
            data,
            model,
            metric,
            config,
            seed,
            out,
        } => {
            let attr = io::read_attribution(&attributions)?;
            let bundle = io::read_bundle(&data)?;
            let net = io::read_net(&model)?;
            let metric: Metric = match (&config, &metric) {
                (Some(p), _) => toml::from_str(&io::read_input(p)?).with_context(|| format!("parsing {}", p.display()))?,
                (None, Some(name)) => from_name("metric", name)?,
                (None, None) => default_metric_for_model(&bundle.model),
            };
            let r = evaluate(
                &MetricConfig { metric, seed },
                &attr,
                &net,
                &bundle.features,
                &bundle.ground_truth,
                &bundle.kinds,
            )?;
            let mut text = String::from("metric,mean,std,n,degenerate\n");
            text.push_str(&format!("{},{},{},{},{}\n", metric.name(), r.mean, r.std, r.scores.len(), r.degenerate));
            emit(out.as_deref(), &text)?;
        }
        Command::Run {
            config,
            out,
            format,
            trials,
            seed,
            jobs,
            timings,
        } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if let Some(t) = trials {
                cfg.n_trials = t;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let table = run_experiment(&cfg, RunOptions { jobs })?;
            let opts = RenderOptions { timings };
            let paths = cfg.output.clone().unwrap_or(attribench::config::OutputPaths { csv: None, markdown: None });
            let inferred = format.unwrap_or_else(|| match out.as_deref().and_then(Path::extension) {
                Some(e) if e == "md" => TableFormat::Markdown,
                _ => TableFormat::Csv,
            });
            if out.is_some() || (paths.csv.is_none() && paths.markdown.is_none()) {
                emit(out.as_deref(), &render_table(&table, inferred, opts)?)?;
            } else {
                if let Some(p) = &paths.csv {
                    io::write_output(p, &render_table(&table, TableFormat::Csv, opts)?)?;
                }
                if let Some(p) = &paths.markdown {
                    io::write_output(p, &render_table(&table, TableFormat::Markdown, opts)?)?;
                }
            }
            let errors = table.error_count();
            if errors > 0 {
                eprintln!("{errors} error cell(s)");
            }
            return Ok(errors);
        }
        Command::List => {
            println!("families:");
            for f in Family::ALL {
                println!("  {f}");
            }
            println!("arms:");
            for a in Arm::ALL {
                println!("  {a}");
            }
            println!("methods:");
            for m in [
                AttributionMethod::DeepLift,
                AttributionMethod::InputXGradient,
                AttributionMethod::integrated_gradients(),
                AttributionMethod::FeatureAblation,
                AttributionMethod::shapley_value_sampling(),
                AttributionMethod::ExactShapley,
                AttributionMethod::kernel_shap(),
                AttributionMethod::lime(),
            ] {
                println!("  {}", m.name());
            }
            println!("metrics:");
            for m in [Metric::Mse, Metric::MaskError, Metric::sensitivity_max(), Metric::infidelity()] {
                println!("  {}", m.name());
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(errors) => ExitCode::from(errors.min(255) as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(255)
        }
    }
}
