use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use anacp::feature_store::{
    self, CovarianceKind, FeatureDataset, MeanLayout, SynthSpec, TaskStream,
};
use anacp::pipeline::{self, LearnerConfig, RunReport};
use anacp::report;
use anacp::{Error, Result};

#[derive(Parser)]
#[command(name = "anacp", version, about = "Analytic class-incremental learning on frozen features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic Gaussian feature directory.
    Synth(SynthArgs),
    /// Run learners over a class-incremental task stream.
    Run(RunArgs),
    /// Summarize report JSON files.
    Report {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CovArg {
    Identity,
    Spd,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Isotropic,
    Clustered,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 64)]
    d: usize,
    #[arg(long, default_value_t = 20)]
    classes: usize,
    #[arg(long, default_value_t = 100)]
    train_per_class: usize,
    #[arg(long, default_value_t = 100)]
    test_per_class: usize,
    #[arg(long, default_value_t = 4.0)]
    mean_scale: f64,
    #[arg(long, value_enum, default_value = "spd")]
    cov: CovArg,
    /// Condition number bound for `--cov spd`.
    #[arg(long, default_value_t = 10.0)]
    kappa: f64,
    #[arg(long, value_enum, default_value = "isotropic")]
    layout: LayoutArg,
    #[arg(long, default_value_t = 4)]
    clusters: usize,
    #[arg(long, default_value_t = 0.3)]
    spread: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

impl SynthArgs {
    fn spec(&self) -> SynthSpec {
        SynthSpec {
            dim: self.d,
            num_classes: self.classes,
            train_per_class: self.train_per_class,
            test_per_class: self.test_per_class,
            mean_scale: self.mean_scale,
            covariance: match self.cov {
                CovArg::Identity => CovarianceKind::Identity,
                CovArg::Spd => CovarianceKind::RandomSpd { condition: self.kappa },
            },
            layout: match self.layout {
                LayoutArg::Isotropic => MeanLayout::Isotropic,
                LayoutArg::Clustered => MeanLayout::Clustered {
                    clusters: self.clusters,
                    spread: self.spread,
                },
            },
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Feature directory (manifest.json, train.feat, test.feat).
    #[arg(long, conflicts_with = "synth", required_unless_present = "synth")]
    features: Option<PathBuf>,
    /// Inline synthetic data, e.g. `d=64,classes=20,scale=2,cov=spd,kappa=10`.
    #[arg(long)]
    synth: Option<String>,
    #[arg(long, default_value_t = 5)]
    tasks: usize,
    /// anacp, raw_ncm, incremental_ridge or rp_ridge. Repeat for several.
    #[arg(long = "method", value_delimiter = ',')]
    methods: Vec<String>,
    #[arg(long)]
    heads: Option<usize>,
    #[arg(long)]
    rp_dim: Option<usize>,
    #[arg(long)]
    replay: Option<usize>,
    #[arg(long)]
    lambda_cp: Option<f64>,
    #[arg(long)]
    lambda_cls: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eps_scale: Option<f64>,
    #[arg(long)]
    no_repulsion: bool,
    /// ncm or elm.
    #[arg(long)]
    classifier: Option<String>,
    #[arg(long)]
    normalize_inputs: bool,
    /// Stream seed; repetition k uses seed + k.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seed of the random projections and replay sampler; fixed across
    /// repetitions.
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Sweep one config field, e.g. `alpha=0,0.5,1`. May be repeated.
    #[arg(long = "ablate")]
    ablate: Vec<String>,
    /// JSON file with config fields; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

/// Parses `true`/`false`, numbers, and falls back to a string.
fn scalar(raw: &str) -> Value {
    serde_json::from_str::<Value>(raw)
        .ok()
        .filter(|v| v.is_number() || v.is_boolean())
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Short ablation names for config fields.
fn field_name(key: &str) -> &str {
    match key {
        "H" => "heads",
        "D" => "rp_dim",
        "R" => "replay",
        "NR" => "use_repulsion",
        "CLS" => "classifier",
        other => other,
    }
}

fn set_field(config: &LearnerConfig, key: &str, value: Value) -> Result<LearnerConfig> {
    let key = field_name(key);
    let Value::Object(mut map) = serde_json::to_value(config).expect("config serializes") else {
        unreachable!()
    };
    if !map.contains_key(key) {
        return Err(invalid(format!("unknown config field '{key}'")));
    }
    map.insert(key.to_string(), value);
    serde_json::from_value(Value::Object(map)).map_err(|e| invalid(format!("bad value for '{key}': {e}")))
}

fn parse_synth(spec: &str) -> Result<SynthSpec> {
    let mut s = SynthSpec::default();
    let mut kappa = None;
    let mut cov = "spd".to_string();
    let mut clusters = 4usize;
    let mut spread = 0.3;
    let mut layout = "isotropic".to_string();
    for pair in spec.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::InvalidSpec(format!("expected key=value, got '{pair}'")))?;
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| Error::InvalidSpec(format!("bad number for {k}: '{v}'")));
        let int = |v: &str| v.trim().parse::<usize>().map_err(|_| Error::InvalidSpec(format!("bad integer for {k}: '{v}'")));
        match k.trim() {
            "d" | "dim" => s.dim = int(v)?,
            "classes" => s.num_classes = int(v)?,
            "train" | "train_per_class" => s.train_per_class = int(v)?,
            "test" | "test_per_class" => s.test_per_class = int(v)?,
            "scale" | "mean_scale" => s.mean_scale = num(v)?,
            "seed" => s.seed = int(v)? as u64,
            "cov" => cov = v.trim().to_string(),
            "kappa" => kappa = Some(num(v)?),
            "layout" => layout = v.trim().to_string(),
            "clusters" => clusters = int(v)?,
            "spread" => spread = num(v)?,
            other => return Err(Error::InvalidSpec(format!("unknown synth key '{other}'"))),
        }
    }
    s.covariance = match cov.as_str() {
        "identity" => CovarianceKind::Identity,
        "spd" => CovarianceKind::RandomSpd {
            condition: kappa.unwrap_or(10.0),
        },
        other => return Err(Error::InvalidSpec(format!("unknown covariance '{other}'"))),
    };
    s.layout = match layout.as_str() {
        "isotropic" => MeanLayout::Isotropic,
        "clustered" => MeanLayout::Clustered { clusters, spread },
        other => return Err(Error::InvalidSpec(format!("unknown layout '{other}'"))),
    };
    s.validate()?;
    Ok(s)
}

fn load_data(args: &RunArgs) -> Result<(FeatureDataset, FeatureDataset)> {
    match (&args.features, &args.synth) {
        (Some(dir), _) => {
            let (train, test, manifest) = feature_store::load_feature_dir(dir)?;
            log::info!(
                "loaded {} ({} train / {} test, d = {})",
                manifest.dataset,
                train.len(),
                test.len(),
                train.dim()
            );
            Ok((train, test))
        }
        (None, Some(spec)) => {
            let data = feature_store::generate_synthetic(&parse_synth(spec)?)?;
            Ok((data.train, data.test))
        }
        (None, None) => Err(invalid("one of --features or --synth is required")),
    }
}

/// Defaults, then the config file, then explicit flags.
fn base_config(args: &RunArgs) -> Result<LearnerConfig> {
    let mut config = LearnerConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        let value: Value = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.clone(),
            source,
        })?;
        let Value::Object(fields) = value else {
            return Err(invalid(format!("{} must hold a JSON object", path.display())));
        };
        for (k, v) in fields {
            config = set_field(&config, &k, v)?;
        }
    }
    let flags: [(&str, Option<Value>); 8] = [
        ("heads", args.heads.map(Value::from)),
        ("rp_dim", args.rp_dim.map(Value::from)),
        ("replay", args.replay.map(Value::from)),
        ("lambda_cp", args.lambda_cp.map(Value::from)),
        ("lambda_cls", args.lambda_cls.map(Value::from)),
        ("alpha", args.alpha.map(Value::from)),
        ("eps_scale", args.eps_scale.map(Value::from)),
        ("base_seed", args.base_seed.map(Value::from)),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            config = set_field(&config, key, v)?;
        }
    }
    if let Some(c) = &args.classifier {
        config.classifier = c.parse()?;
    }
    if args.no_repulsion {
        config.use_repulsion = false;
    }
    if args.normalize_inputs {
        config.normalize_inputs = true;
    }
    Ok(config)
}

/// Every configuration to run: methods crossed with ablation values.
fn expand_configs(args: &RunArgs, base: &LearnerConfig) -> Result<Vec<LearnerConfig>> {
    let mut configs = if args.methods.is_empty() {
        vec![base.clone()]
    } else {
        args.methods
            .iter()
            .map(|m| Ok(LearnerConfig { method: m.parse()?, ..base.clone() }))
            .collect::<Result<Vec<_>>>()?
    };
    for sweep in &args.ablate {
        let (key, values) = sweep
            .split_once('=')
            .ok_or_else(|| invalid(format!("--ablate expects KEY=v1,v2, got '{sweep}'")))?;
        let mut next = Vec::new();
        for config in &configs {
            for v in values.split(',') {
                next.push(set_field(config, key.trim(), scalar(v.trim()))?);
            }
        }
        configs = next;
    }
    for c in &configs {
        c.validate()?;
    }
    Ok(configs)
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' { c } else { '_' })
        .collect::<String>()
        .trim_matches('_')
        .to_string()
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let spec = args.spec();
    let data = feature_store::generate_synthetic(&spec)?;
    let name = format!("synthetic-d{}-c{}-seed{}", spec.dim, spec.num_classes, spec.seed);
    feature_store::write_feature_dir(&args.out, &data.train, &data.test, &name, "gaussian")?;
    println!(
        "wrote {} train / {} test samples to {}",
        data.train.len(),
        data.test.len(),
        args.out.display()
    );
    Ok(())
}

fn run_one(config: &LearnerConfig, stream: &TaskStream, out: &Path, stem: &str) -> Result<RunReport> {
    let report = pipeline::run_stream(config, stream)?;
    report.write_json(out.join(format!("{stem}.json")))?;
    Ok(report)
}

fn cmd_run(args: &RunArgs) -> Result<bool> {
    if args.reps == 0 {
        return Err(invalid("--reps must be at least 1"));
    }
    let base = base_config(args)?;
    let configs = expand_configs(args, &base)?;
    let (train, test) = load_data(args)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for rep in 0..args.reps {
        let stream = feature_store::make_task_stream(&train, &test, args.tasks, args.seed + rep as u64)?;
        for config in &configs {
            let label = report::config_label(config);
            let stem = format!("{}_rep{rep}", file_stem(&label));
            match run_one(config, &stream, &args.out, &stem) {
                Ok(r) => {
                    println!("{label} rep {rep}: A_avg {:.2}  A_last {:.2}", r.a_avg, r.a_last);
                    reports.push(r);
                }
                Err(e) => failures.push(format!("{label} rep {rep}: {e}")),
            }
        }
    }

    let summaries = report::summarize(&reports);
    for (name, text) in [
        ("aggregate.csv", report::summary_csv(&summaries)),
        ("runs.csv", report::csv(&reports)),
    ] {
        let path = args.out.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    if !reports.is_empty() {
        print!("\n{}", report::comparison_table(&summaries));
    }
    if !failures.is_empty() {
        eprintln!("{} run(s) failed:", failures.len());
        for f in &failures {
            eprintln!("  {f}");
        }
    }
    Ok(failures.is_empty())
}

fn cmd_report(paths: &[PathBuf]) -> Result<()> {
    let reports = report::load_reports(paths)?;
    print!("{}", report::comparison_table(&report::summarize(&reports)));
    Ok(())
}

fn init_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("ANACP_THREADS") {
        let n: usize = raw
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| invalid(format!("ANACP_THREADS must be a positive integer, got '{raw}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| invalid(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| match &cli.command {
        Command::Synth(args) => cmd_synth(args).map(|_| true),
        Command::Run(args) => cmd_run(args),
        Command::Report { paths } => cmd_report(paths).map(|_| true),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
