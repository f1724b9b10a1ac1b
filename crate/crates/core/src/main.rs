use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use specscale::dataio::{generate_toy, load_matrix, save_matrix, split, standardize, DataMatrix, Delimiter};
use specscale::experiment::{
    format_table, learn_on_training, loocv, parse_negative, parse_sigma_grid, run_pipeline, sweep,
    write_manifest, write_runs_csv, write_summary_csv, DataView, EvalReport, ExperimentConfig,
    Manifest, Method, Task,
};
use specscale::fscale::write_factor_table;
use specscale::{Error, Result};

#[derive(Parser)]
#[command(name = "specscale", version, about = "Feature-scaled spectral clustering and classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic ball-in-shell data set.
    Generate {
        #[arg(long, default_value_t = 800)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spectral clustering evaluated over all samples.
    Cluster(RunArgs),
    /// Transductive 1-NN classification of held-out samples.
    Classify(RunArgs),
    /// One classification or clustering report per training fraction.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = TaskArg::Classify)]
        task: TaskArg,
        /// Comma-separated training fractions; empty for none.
        #[arg(long, default_value = "0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5")]
        fractions: String,
    },
    /// Leave-one-out classification.
    Loocv {
        #[command(flatten)]
        run: RunArgs,
        /// Only hold out the first K samples.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Learn scaling factors on one split and print the factor table.
    InspectScaling {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        flags: ConfigFlags,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        repetition: usize,
        /// Write the table here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Cluster,
    Classify,
}

#[derive(Clone, Copy, ValueEnum)]
enum DelimiterArg {
    Auto,
    Comma,
    Tab,
}

#[derive(Args)]
struct InputArgs {
    /// Delimited data file; a `label` column holds the classes.
    #[arg(long, conflicts_with = "toy")]
    data: Option<PathBuf>,
    /// Use N generated toy samples instead of a file.
    #[arg(long)]
    toy: Option<usize>,
    #[arg(long, default_value_t = 1)]
    toy_seed: u64,
    #[arg(long, value_enum, default_value_t = DelimiterArg::Auto)]
    delimiter: DelimiterArg,
}

#[derive(Args)]
struct ConfigFlags {
    /// Key-value file; its settings override flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    sigma_grid: Option<String>,
    #[arg(long)]
    k_neighbors: Option<usize>,
    /// Number, or `auto` for the degree ratio.
    #[arg(long, allow_hyphen_values = true)]
    fiedler_negative: Option<String>,
    #[arg(long)]
    residual_tol: Option<f64>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    kmeans_restarts: Option<usize>,
    #[arg(long)]
    kmeans_max_iter: Option<usize>,
    #[arg(long)]
    no_standardize: bool,
    /// Build graphs from the signed scaled distance.
    #[arg(long)]
    signed_metric: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    flags: ConfigFlags,
    /// Directory for runs.csv, summary.csv and manifest.json.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl ConfigFlags {
    fn resolve(&self, task: Task) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig {
            task,
            ..ExperimentConfig::default()
        };
        if let Some(m) = &self.method {
            c.method = m.parse()?;
        }
        if let Some(v) = self.ell {
            c.ell = v;
        }
        if let Some(v) = &self.sigma_grid {
            c.sigma_grid = parse_sigma_grid(v)?;
        }
        if let Some(v) = self.k_neighbors {
            c.k_neighbors = v;
        }
        if let Some(v) = &self.fiedler_negative {
            c.fiedler_negative = parse_negative(v)?;
        }
        if let Some(v) = self.residual_tol {
            c.residual_tol = v;
        }
        if let Some(v) = self.train_fraction {
            c.split.train_fraction = v;
        }
        if let Some(v) = self.repetitions {
            c.split.repetitions = v;
        }
        if let Some(v) = self.split_seed {
            c.split.seed = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.kmeans_restarts {
            c.kmeans_restarts = v;
        }
        if let Some(v) = self.kmeans_max_iter {
            c.kmeans_max_iter = v;
        }
        if self.no_standardize {
            c.standardize = false;
        }
        if self.signed_metric {
            c.signed_metric = true;
        }
        if let Some(p) = &self.config {
            c.apply_file(p)?;
        }
        c.validate()?;
        Ok(c)
    }
}

impl InputArgs {
    fn load(&self) -> Result<(DataMatrix, DataView)> {
        let data = match (&self.data, self.toy) {
            (Some(path), _) => {
                let d = match self.delimiter {
                    DelimiterArg::Auto => Delimiter::for_path(path),
                    DelimiterArg::Comma => Delimiter::Comma,
                    DelimiterArg::Tab => Delimiter::Tab,
                };
                (load_matrix(path, d)?, path.display().to_string())
            }
            (None, Some(n)) => (generate_toy(n, self.toy_seed)?, format!("toy(n={n}, seed={})", self.toy_seed)),
            (None, None) => return Err(Error::Config("give --data or --toy".into())),
        };
        let view = DataView {
            source: data.1,
            n_samples: data.0.n_samples(),
            n_features: data.0.n_features(),
        };
        Ok((data.0, view))
    }
}

fn write_outputs(
    dir: &Path,
    command: &str,
    config: &ExperimentConfig,
    data: DataView,
    fractions: Vec<f64>,
    reports: &[EvalReport],
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let names = ["runs.csv", "summary.csv", "manifest.json"];
    write_runs_csv(BufWriter::new(File::create(dir.join(names[0]))?), reports)?;
    write_summary_csv(BufWriter::new(File::create(dir.join(names[1]))?), reports)?;
    let manifest = Manifest::new(
        command,
        config,
        data,
        fractions,
        names.iter().map(|s| s.to_string()).collect(),
        reports,
    );
    write_manifest(BufWriter::new(File::create(dir.join(names[2]))?), &manifest)?;
    Ok(())
}

fn finish(
    args: &RunArgs,
    command: &str,
    config: &ExperimentConfig,
    data: DataView,
    fractions: Vec<f64>,
    reports: &[EvalReport],
) -> Result<()> {
    print!("{}", format_table(reports));
    if let Some(dir) = &args.out_dir {
        write_outputs(dir, command, config, data, fractions, reports)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { n, seed, out } => {
            let data = generate_toy(n, seed)?;
            save_matrix(&data, &out, Delimiter::for_path(&out))?;
        }
        Command::Cluster(args) => {
            let config = args.flags.resolve(Task::Cluster)?;
            let (data, view) = args.input.load()?;
            let report = run_pipeline(&config, &data)?;
            finish(&args, "cluster", &config, view, vec![config.split.train_fraction], &[report])?;
        }
        Command::Classify(args) => {
            let config = args.flags.resolve(Task::Classify)?;
            let (data, view) = args.input.load()?;
            let report = run_pipeline(&config, &data)?;
            finish(&args, "classify", &config, view, vec![config.split.train_fraction], &[report])?;
        }
        Command::Sweep { run, task, fractions } => {
            let task = match task {
                TaskArg::Cluster => Task::Cluster,
                TaskArg::Classify => Task::Classify,
            };
            let config = run.flags.resolve(task)?;
            let fractions: Vec<f64> = if fractions.trim().is_empty() {
                Vec::new()
            } else {
                parse_sigma_grid(&fractions)
                    .map_err(|_| Error::Config(format!("bad fraction list '{fractions}'")))?
            };
            if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
                return Err(Error::Config(format!("fraction {f} outside (0, 1]")));
            }
            let (data, view) = run.input.load()?;
            let reports = sweep(&config, &data, &fractions)?;
            finish(&run, "sweep", &config, view, fractions, &reports)?;
        }
        Command::Loocv { run, limit } => {
            let config = run.flags.resolve(Task::Classify)?;
            let (data, view) = run.input.load()?;
            let report = loocv(&config, &data, limit)?;
            let f = report.train_fraction;
            finish(&run, "loocv", &config, view, vec![f], &[report])?;
        }
        Command::InspectScaling {
            input,
            flags,
            sigma,
            repetition,
            out,
        } => {
            let mut config = flags.resolve(Task::Classify)?;
            config.method = Method::Supervised;
            let (data, _) = input.load()?;
            let labels = data.require_labels()?.to_vec();
            let y = if config.standardize { standardize(&data)?.values } else { data.values.clone() };
            let sp = split(&labels, &config.split, repetition)?;
            let (sv, diag) = learn_on_training(&y, &labels, &sp.train, sigma, &config)?;
            let sv = sv.ok_or_else(|| {
                Error::Config(diag.fallback_reason.unwrap_or_else(|| "no scaling factors".into()))
            })?;
            eprintln!(
                "mu = {}, residual = {:e}, linearization violation = {}",
                sv.mu,
                sv.residual,
                diag.linearization_violation.unwrap_or(f64::NAN)
            );
            match out {
                Some(p) => write_factor_table(BufWriter::new(File::create(p)?), &data.feature_names, &sv.s)?,
                None => write_factor_table(std::io::stdout().lock(), &data.feature_names, &sv.s)?,
            }
        }
    }
    Ok(())
}

fn report_error(kind: &str, message: &str) -> ExitCode {
    let msg = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{msg}");
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report_error("usage", e.render().to_string().trim_end()),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_error(e.kind(), &e.to_string()),
    }
}
