mod spectral;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use metabayes::bounds::BoundCurve;
use metabayes::experiments::{
    bound_curve_csv, figure_curve, figure_setup, run_study, summary_text, write_report,
    ExperimentConfig, FigureId, FigureOverrides, FigureSetup,
};
use metabayes::measure::MeasureConfig;
use metabayes::par::{configure_threads, ExecPolicy};

use crate::spectral::{spectral_report, SpectralFile};
use crate::svg::{render, CsvColumns, PlotSpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{stage}: {source}")]
    Core {
        stage: &'static str,
        #[source]
        source: metabayes::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core { source: metabayes::Error::InfeasibleRegime { .. }, .. } => 3,
            CliError::Core { source: metabayes::Error::InvalidArgument(_), .. } => 1,
            CliError::Core { .. } | CliError::Io { .. } => 2,
        }
    }
}

fn core(stage: &'static str) -> impl FnOnce(metabayes::Error) -> CliError {
    move |source| CliError::Core { stage, source }
}

#[derive(Debug, Parser)]
#[command(name = "metabayes", version, about = "Posterior contraction and metaconsistency for metastable diffusions")]
struct Cli {
    /// Treat truncation warnings as errors.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads for path-parallel loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectral gap, Fisher information and escape rate of a family.
    Spectral {
        #[arg(long)]
        config: PathBuf,
        /// Also write the constants as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Bound curves (CSV, SVG and manifest) for one figure.
    Bounds {
        #[arg(long)]
        figure: String,
        /// TOML file with override keys; command-line flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: OverrideArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a Monte Carlo study described by a TOML config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Run the path loop on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Regenerate the data and plots of every figure with default constants.
    Figures {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        points_per_decade: Option<usize>,
    },
}

#[derive(Debug, Args, Default)]
struct OverrideArgs {
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    fisher_sigma: Option<f64>,
    #[arg(long = "C")]
    c: Option<f64>,
    #[arg(long = "C-hat")]
    c_hat: Option<f64>,
    #[arg(long)]
    c_escape: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    points_per_decade: Option<usize>,
}

impl OverrideArgs {
    fn apply(&self, base: FigureOverrides) -> FigureOverrides {
        FigureOverrides {
            sigma: self.sigma.or(base.sigma),
            fisher_sigma: self.fisher_sigma.or(base.fisher_sigma),
            c: self.c.or(base.c),
            c_hat: self.c_hat.or(base.c_hat),
            c_escape: self.c_escape.or(base.c_escape),
            eta: self.eta.or(base.eta),
            lambda_exit: self.lambda.or(base.lambda_exit),
            t_min: self.t_min.or(base.t_min),
            t_max: self.t_max.or(base.t_max),
            points_per_decade: self.points_per_decade.or(base.points_per_decade),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_owned(), source })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn parse_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    toml::from_str(&read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct FigureManifest<'a> {
    crate_version: &'static str,
    figure: String,
    sigma: f64,
    fisher_sigma: f64,
    bounds: &'a metabayes::bounds::BoundConfig,
    gamma: f64,
    s1: f64,
    gamma_hat: f64,
    s1_hat: f64,
    lambda_exit: f64,
    tail: &'a metabayes::bounds::TailModel,
    t_range: (f64, f64),
    n_times: usize,
    window: Option<(f64, f64)>,
    notes: &'a [String],
    files: [String; 2],
}

fn emit_figure(setup: &FigureSetup, curve: &BoundCurve, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let id = setup.id.to_string();
    let csv = bound_curve_csv(curve);
    let cols = CsvColumns::parse(&csv)?;
    let series = [
        ("epsilon", "eps_t"),
        ("epsilon_hat", "eps_hat_t"),
        ("h_sqrt", "H^1/2"),
        ("h_hat_sqrt", "H_hat^1/2"),
        ("p_escaped", "P[t > tau]"),
        ("meta_bound", "meta bound"),
    ];
    let title = format!("{id}: bounds, sigma = {}", setup.sigma);
    let plot = PlotSpec { title: &title, x: "t", series: &series, log_y: setup.id.log_y(), shade: Some("in_window") };
    let svg = render(&cols, &plot)?;
    let manifest = FigureManifest {
        crate_version: env!("CARGO_PKG_VERSION"),
        figure: id.clone(),
        sigma: setup.sigma,
        fisher_sigma: setup.fisher_sigma,
        bounds: &setup.bounds,
        gamma: setup.inputs.gamma,
        s1: setup.inputs.s1,
        gamma_hat: setup.inputs.gamma_hat,
        s1_hat: setup.inputs.s1_hat,
        lambda_exit: setup.inputs.lambda_exit,
        tail: &setup.inputs.tail,
        t_range: (curve.times[0], *curve.times.last().unwrap()),
        n_times: curve.len(),
        window: curve.window(),
        notes: &setup.notes,
        files: [format!("{id}.csv"), format!("{id}.svg")],
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Usage(e.to_string()))? + "\n";
    let paths = [out.join(format!("{id}.csv")), out.join(format!("{id}.svg")), out.join(format!("{id}.json"))];
    write(&paths[0], &csv)?;
    write(&paths[1], &svg)?;
    write(&paths[2], &json)?;
    Ok(paths.to_vec())
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        configure_threads(n);
    }
    let measure = MeasureConfig { strict: cli.strict, ..Default::default() };
    match cli.command {
        Command::Spectral { config, csv } => {
            let mut file: SpectralFile = parse_toml(&config)?;
            file.measure.strict |= cli.strict;
            let report = spectral_report(&file).map_err(core("spectral"))?;
            print!("{}", report.to_text());
            if let Some(p) = csv {
                write(&p, &report.to_csv())?;
            }
        }
        Command::Bounds { figure, config, overrides, out } => {
            let id: FigureId = figure.parse().map_err(|e: metabayes::Error| CliError::Usage(e.to_string()))?;
            let base = match config {
                Some(p) => parse_toml(&p)?,
                None => FigureOverrides::default(),
            };
            let setup = figure_setup(id, &overrides.apply(base), &measure).map_err(core("bounds"))?;
            let curve = figure_curve(&setup).map_err(core("bounds"))?;
            for p in emit_figure(&setup, &curve, &out)? {
                println!("wrote {}", p.display());
            }
            match curve.window() {
                Some((a, b)) => println!("window [{a:.4e}, {b:.4e}]"),
                None => println!("no window with meta bound <= {}", setup.bounds.eta_threshold),
            }
        }
        Command::Experiment { config, out, sequential } => {
            let text = read(&config)?;
            let mut cfg = ExperimentConfig::from_toml_str(&text).map_err(core("config"))?;
            cfg.measure.strict |= cli.strict;
            let policy = if sequential { ExecPolicy::Sequential } else { ExecPolicy::Parallel };
            let report = run_study(&cfg, policy).map_err(core("experiment"))?;
            print!("{}", summary_text(&report));
            for p in write_report(&out, &cfg, &report).map_err(core("output"))? {
                println!("wrote {}", p.display());
            }
        }
        Command::Figures { out, points_per_decade } => {
            let ov = FigureOverrides { points_per_decade, ..Default::default() };
            for id in FigureId::ALL {
                let setup = figure_setup(id, &ov, &measure).map_err(core("figures"))?;
                let curve = figure_curve(&setup).map_err(core("figures"))?;
                for p in emit_figure(&setup, &curve, &out)? {
                    println!("wrote {}", p.display());
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
