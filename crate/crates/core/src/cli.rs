//! `dc-optlab` command-line surface.
//!
//! Exit codes: 0 success, 1 verification or numerical failure, 2 usage or
//! invalid input, 3 I/O or file format error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::convergence::RateCurve;
use crate::data::{generate_split, Dataset, SyntheticSpec};
use crate::dc_loss::{
    loss_derivative, margin_transform, per_sample_loss, response_probability, DCParams,
};
use crate::error::{Error, Result};
use crate::neuron::{
    save_trace_csv, train_full, write_trace_csv, InitScheme, TrainConfig, TrainMode,
};
use crate::plot::{plot_file, PlotKind};
use crate::sweep::{build_grid, run_sweep, sample_grid, GridSpec};
use crate::verify::{run_suite, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dc-optlab", version, about = "Differential-capability loss laboratory")]
pub struct Cli {
    /// Worker threads for sweeps and verification grids (default: all cores).
    #[arg(long, global = true, env = "DC_OPTLAB_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a mirrored-blob dataset and write train.csv / test.csv.
    GenData(GenDataArgs),
    /// Emit loss shape curves (probability, loss, derivative, f) as CSV.
    Curves(CurvesArgs),
    /// Emit the convergence rate, default rate and bounds as CSV.
    Rates(RatesArgs),
    /// Run numerical property suites and print a JSON report.
    Verify(VerifyArgs),
    /// Train a single neuron and write its per-epoch trace.
    Train(TrainArgs),
    /// Run the hyperparameter grid protocol.
    Sweep(SweepArgs),
    /// Render a CSV produced by this tool as an SVG chart.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Number of samples (reference protocol).
    #[arg(long, default_value_t = 1000)]
    pub m: usize,
    /// Feature dimension (reference protocol).
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Per-coordinate offset of the class centres from the origin.
    #[arg(long, default_value_t = 1.5)]
    pub center_distance: f64,
    /// Per-coordinate noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub noise_sigma: f64,
    /// Training fraction of the split (reference protocol).
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
}

impl DataArgs {
    fn spec(&self, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            m: self.m,
            n: self.n,
            center_distance: self.center_distance,
            noise_sigma: self.noise_sigma,
            split_fraction: self.split,
            seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Load the dataset recipe from a JSON file instead of the flags above.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for train.csv and test.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Growth rate of differential capability.
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    /// Decay rate.
    #[arg(long, default_value_t = 0.0)]
    pub c: f64,
    /// Difficulty, in margin units.
    #[arg(long, default_value_t = 0.0)]
    pub d: f64,
    /// Response probability at t = d.
    #[arg(long, default_value_t = 0.5)]
    pub p_d: f64,
}

impl ParamArgs {
    fn params(&self) -> Result<DCParams> {
        DCParams::new(self.r, self.c, self.d, self.p_d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    All,
    NoDc,
    Growing,
    Decaying,
    GrowDecay,
    /// Use --r/--c/--d/--p-d.
    Custom,
}

/// The four loss shapes, all with `d = 0` and `p_d = 0.5`.
pub fn preset_configs() -> Vec<(&'static str, DCParams)> {
    [(1.0, 0.0), (3.0, 0.0), (1.0, 2.0), (3.0, 2.0)]
        .into_iter()
        .map(|(r, c)| {
            let p = DCParams::new(r, c, 0.0, 0.5).expect("valid preset");
            (p.kind().label(), p)
        })
        .collect()
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[arg(long, value_enum, default_value_t = Preset::All)]
    pub preset: Preset,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = -6.0, allow_hyphen_values = true)]
    pub t_min: f64,
    #[arg(long, default_value_t = 6.0, allow_hyphen_values = true)]
    pub t_max: f64,
    #[arg(long, default_value_t = 241)]
    pub samples: usize,
    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 0.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.0)]
    pub d: f64,
    /// Response probability at t = d; the default e^-1 gives b = -1.
    #[arg(long, default_value_t = (-1.0f64).exp())]
    pub p_d: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub z_from: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub z_to: f64,
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    /// Seed for the random gradient triples.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Training CSV; generated from --data-seed when omitted.
    #[arg(long, requires = "test")]
    pub train: Option<PathBuf>,
    #[arg(long, requires = "train")]
    pub test: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
    #[command(flatten)]
    pub data: DataArgs,
    /// Fixed step size.
    #[arg(long, default_value_t = 0.01)]
    pub eta: f64,
    /// Minibatch size (reference protocol).
    #[arg(long, default_value_t = 75)]
    pub batch_size: usize,
    /// Passes over the training set (reference protocol).
    #[arg(long, default_value_t = 1500)]
    pub epochs: usize,
    #[arg(long, value_enum, default_value_t = TrainMode::Sgd)]
    pub mode: TrainMode,
    #[arg(long, value_enum, default_value_t = InitScheme::Zeros)]
    pub init: InitScheme,
    /// Seed for initialisation and shuffling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trace CSV (default: stdout).
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
    /// Final weights as JSON.
    #[arg(long)]
    pub weights_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// GridSpec JSON file; flags below override its pick/runs/seed when given.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Fraction of the full grid to sample (reference protocol: 0.025).
    #[arg(long)]
    pub pick: Option<f64>,
    /// Repeated runs per config (reference protocol: 10).
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep only the first N sampled configs.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Desk-scale profile: runs 3, epochs 300, at most 8 sampled configs.
    #[arg(long)]
    pub desk: bool,
    /// Do not prepend the no-DC reference config (r=1, c=0, d=0, p_d=0.5).
    #[arg(long)]
    pub no_baseline: bool,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.01)]
    pub eta: f64,
    /// Minibatch size (reference protocol).
    #[arg(long, default_value_t = 75)]
    pub batch_size: usize,
    /// Passes over the training set (reference protocol: 1500).
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub json_out: Option<PathBuf>,
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    /// Column to plot for `curves` and `trace`.
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `std::env::args` and runs the command, returning the exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.threads {
        Some(0) => Err(Error::validation("--threads must be >= 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(Error::validation(e.to_string())),
        },
        None => dispatch(cli.command),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::Format { .. } => EXIT_IO,
        Error::Numerical { .. } => EXIT_FAILURE,
        Error::Domain(_) | Error::Validation(_) | Error::Dimension { .. } | Error::EmptyDataset => {
            EXIT_USAGE
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::GenData(a) => gen_data(a),
        Command::Curves(a) => curves(a),
        Command::Rates(a) => rates(a),
        Command::Verify(a) => verify(a),
        Command::Train(a) => train_cmd(a),
        Command::Sweep(a) => sweep(a),
        Command::Plot(a) => {
            plot_file(&a.input, a.kind, a.column.as_deref(), &a.out)?;
            Ok(EXIT_OK)
        }
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::io(p, e)),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        line: e.line() as u64,
        message: e.to_string(),
    })
}

fn gen_data(a: GenDataArgs) -> Result<i32> {
    let spec = match &a.spec {
        Some(path) => read_json(path)?,
        None => a.data.spec(a.seed),
    };
    let (train, test) = generate_split(&spec)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    train.save_csv(&a.out_dir.join("train.csv"))?;
    test.save_csv(&a.out_dir.join("test.csv"))?;
    eprintln!(
        "wrote {} training and {} test samples to {}",
        train.len(),
        test.len(),
        a.out_dir.display()
    );
    Ok(EXIT_OK)
}

/// `config,t,prob,loss,derivative,f` rows for each config over an even t grid.
pub fn curves_csv(configs: &[(String, DCParams)], t_min: f64, t_max: f64, samples: usize) -> Result<String> {
    if samples < 2 {
        return Err(Error::validation("samples must be >= 2"));
    }
    if !(t_min.is_finite() && t_max.is_finite() && t_min < t_max) {
        return Err(Error::validation("t range must be finite with t_min < t_max"));
    }
    let mut out = String::from("config,t,prob,loss,derivative,f\n");
    for (name, p) in configs {
        for k in 0..samples {
            let t = t_min + (t_max - t_min) * k as f64 / (samples - 1) as f64;
            out.push_str(&format!(
                "{name},{t},{},{},{},{}\n",
                response_probability(p, t),
                per_sample_loss(p, t),
                loss_derivative(p, t),
                margin_transform(p, t)
            ));
        }
    }
    Ok(out)
}

fn curves(a: CurvesArgs) -> Result<i32> {
    let presets = preset_configs();
    let pick = |label: &str| -> Vec<(String, DCParams)> {
        presets
            .iter()
            .filter(|(l, _)| *l == label)
            .map(|(l, p)| (l.to_string(), *p))
            .collect()
    };
    let configs: Vec<(String, DCParams)> = match a.preset {
        Preset::All => presets.iter().map(|(l, p)| (l.to_string(), *p)).collect(),
        Preset::NoDc => pick("no-DC"),
        Preset::Growing => pick("growing-DC"),
        Preset::Decaying => pick("decaying-DC"),
        Preset::GrowDecay => pick("grow+decay-DC"),
        Preset::Custom => vec![("custom".to_string(), a.params.params()?)],
    };
    let csv = curves_csv(&configs, a.t_min, a.t_max, a.samples)?;
    write_output(a.out.as_deref(), csv.as_bytes())?;
    Ok(EXIT_OK)
}

/// Rate curve CSV with the `z_min` column, rows restricted to the real domain.
pub fn rates_csv(params: DCParams, z_from: f64, z_to: f64, samples: usize) -> Result<String> {
    if samples < 2 {
        return Err(Error::validation("samples must be >= 2"));
    }
    if !(z_from < z_to) {
        return Err(Error::validation("z range must satisfy z_from < z_to"));
    }
    let zs: Vec<f64> = (0..samples)
        .map(|k| z_from + (z_to - z_from) * k as f64 / (samples - 1) as f64)
        .collect();
    let curve = RateCurve::sample(params, &zs)?;
    let mut buf = Vec::new();
    curve.write_csv(&mut buf, true)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

fn rates(a: RatesArgs) -> Result<i32> {
    let params = DCParams::new(a.r, a.c, a.d, a.p_d)?;
    let csv = rates_csv(params, a.z_from, a.z_to, a.samples)?;
    write_output(a.out.as_deref(), csv.as_bytes())?;
    Ok(EXIT_OK)
}

fn verify(a: VerifyArgs) -> Result<i32> {
    let report = run_suite(a.suite, a.seed)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    if let Some(p) = &a.out {
        std::fs::write(p, &json).map_err(|e| Error::io(p, e))?;
    }
    print!("{json}");
    Ok(if report.passed { EXIT_OK } else { EXIT_FAILURE })
}

fn train_cmd(a: TrainArgs) -> Result<i32> {
    let params = a.params.params()?;
    let (train, test) = match (&a.train, &a.test) {
        (Some(tr), Some(te)) => (Dataset::load_csv(tr)?, Dataset::load_csv(te)?),
        _ => generate_split(&a.data.spec(a.data_seed))?,
    };
    let cfg = TrainConfig {
        eta: a.eta,
        batch_size: a.batch_size,
        epochs: a.epochs,
        seed: a.seed,
        mode: a.mode,
        init: a.init,
    };
    let outcome = train_full(&params, &train, &test, &cfg)?;
    match &a.trace_out {
        Some(p) => save_trace_csv(&outcome.trace, p)?,
        None => write_trace_csv(&outcome.trace, std::io::stdout().lock())?,
    }
    if let Some(p) = &a.weights_out {
        outcome.theta.save_json(p)?;
    }
    if let Some(last) = outcome.trace.last() {
        eprintln!(
            "epoch {}: train_loss {:.6}, test_accuracy {:.4}, |theta| {:.4}",
            last.epoch, last.train_loss, last.test_accuracy, last.theta_norm
        );
    }
    Ok(EXIT_OK)
}

fn sweep(a: SweepArgs) -> Result<i32> {
    let mut grid_spec: GridSpec = match &a.grid {
        Some(p) => read_json(p)?,
        None => GridSpec::default(),
    };
    let mut epochs = 1500;
    let mut limit = a.limit;
    if a.desk {
        grid_spec.runs = 3;
        epochs = 300;
        limit = Some(limit.unwrap_or(8).min(8));
    }
    if let Some(v) = a.pick {
        grid_spec.pick_fraction = v;
    }
    if let Some(v) = a.runs {
        grid_spec.runs = v;
    }
    if let Some(v) = a.seed {
        grid_spec.seed = v;
    }
    if let Some(v) = a.epochs {
        epochs = v;
    }

    let grid = build_grid(&grid_spec)?;
    let mut configs = sample_grid(&grid, grid_spec.pick_fraction, grid_spec.seed)?;
    if let Some(n) = limit {
        configs.truncate(n);
    }
    eprintln!(
        "grid {} configs, sampled {}, runs {}, epochs {}",
        grid.len(),
        configs.len(),
        grid_spec.runs,
        epochs
    );
    if !a.no_baseline {
        configs.insert(0, DCParams::no_dc());
    }
    let train_cfg = TrainConfig {
        eta: a.eta,
        batch_size: a.batch_size,
        epochs,
        ..Default::default()
    };
    let result = run_sweep(
        &configs,
        &a.data.spec(grid_spec.seed),
        &train_cfg,
        grid_spec.runs,
        grid_spec.seed,
    )?;
    if let Some(p) = &a.json_out {
        std::fs::write(p, result.to_json()).map_err(|e| Error::io(p, e))?;
    }
    if let Some(p) = &a.csv_out {
        let file = std::fs::File::create(p).map_err(|e| Error::io(p, e))?;
        result.write_csv(std::io::BufWriter::new(file))?;
    }
    print!("{}", result.comparison_table());
    Ok(EXIT_OK)
}
