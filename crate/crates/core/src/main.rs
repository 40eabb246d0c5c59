use clap::{Parser, Subcommand};
use serde_json::json;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use w2lab::harness::{
    fit_rate, read_records, run_experiment_with, sample_process, write_records, write_summary, ExperimentConfig,
    ProcessId, RateModel, RunOptions,
};
use w2lab::processes::{equilibrium_measure, PotentialSpec};
use w2lab::smoothing::{bound_empirical, SmoothingSettings};
use w2lab::transport::w2_semidiscrete;
use w2lab::{Domain, Error, PointConfiguration, ReferenceMeasure, RngStream};

#[derive(Parser)]
#[command(name = "w2lab", version, about = "Point-process samplers, exact W2 and heat-smoothing bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one configuration and write it as CSV with a JSON sidecar.
    Sample {
        #[arg(long)]
        process: String,
        /// Intensity L, or N for finite ensembles.
        #[arg(long, visible_aliases = ["intensity", "n"])]
        param: f64,
        #[arg(long, default_value = "unit-square")]
        domain: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[arg(long, default_value = "sample.csv")]
        out: PathBuf,
    },
    /// Exact W2 between a configuration and a reference measure.
    W2 {
        #[arg(long)]
        points: PathBuf,
        /// uniform-square, uniform-disk, ginibre, or uniform:<domain>.
        #[arg(long = "ref")]
        reference: String,
        #[arg(long, default_value_t = 128)]
        resolution: usize,
    },
    /// Optimized heat-smoothing bound for a configuration on a box.
    Bound {
        #[arg(long)]
        points: PathBuf,
        #[arg(long = "ref", default_value = "uniform-square")]
        reference: String,
        #[arg(long)]
        lambda_max: Option<f64>,
        #[arg(long, default_value_t = 1e-4)]
        t_lo: f64,
        #[arg(long, default_value_t = 1.0)]
        t_hi: f64,
        #[arg(long)]
        c: Option<f64>,
    },
    /// Run a full experiment grid from a JSON or TOML config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Write ms = 0 so reruns are byte-identical.
        #[arg(long)]
        no_timing: bool,
    },
    /// Fit a convergence rate to a records CSV.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "pure-power")]
        model: String,
    },
}

fn parse_reference(s: &str) -> w2lab::Result<ReferenceMeasure> {
    match s {
        "uniform-square" => Ok(ReferenceMeasure::uniform(Domain::unit_square())),
        "uniform-disk" => Ok(ReferenceMeasure::uniform(Domain::unit_disk())),
        "ginibre" => equilibrium_measure(&PotentialSpec::Ginibre),
        _ => match s.strip_prefix("uniform:") {
            Some(d) => Ok(ReferenceMeasure::uniform(d.parse()?)),
            None => Err(Error::Parse(format!("unknown reference '{s}'"))),
        },
    }
}

fn read_points(path: &Path) -> w2lab::Result<PointConfiguration> {
    PointConfiguration::read_csv(BufReader::new(File::open(path)?))
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn run(cli: Cli) -> w2lab::Result<()> {
    let stdout = std::io::stdout();
    match cli.command {
        Command::Sample {
            process,
            param,
            domain,
            seed,
            stream,
            out,
        } => {
            let process: ProcessId = process.parse()?;
            let dom: Domain = domain.parse()?;
            let pts = sample_process(process, param, &dom, RngStream::new(seed, stream))?;
            pts.write_csv(BufWriter::new(File::create(&out)?))?;
            let meta = json!({
                "process": process.as_str(),
                "params": {"param": param, "domain": domain},
                "seed": seed,
                "stream": stream,
            });
            serde_json::to_writer_pretty(File::create(sidecar(&out))?, &meta)?;
            eprintln!("{} points written to {}", pts.len(), out.display());
        }
        Command::W2 {
            points,
            reference,
            resolution,
        } => {
            let res = w2_semidiscrete(&read_points(&points)?, &parse_reference(&reference)?, resolution)?;
            writeln!(stdout.lock(), "{}", res.to_json()?)?;
        }
        Command::Bound {
            points,
            reference,
            lambda_max,
            t_lo,
            t_hi,
            c,
        } => {
            let settings = SmoothingSettings {
                lambda_max,
                t_lo,
                t_hi,
                c,
            };
            let (_, report) = bound_empirical(&read_points(&points)?, &parse_reference(&reference)?, &settings)?;
            writeln!(stdout.lock(), "{}", report.to_json()?)?;
        }
        Command::Experiment { config, no_timing } => {
            let cfg = ExperimentConfig::load(&config)?;
            let records = run_experiment_with(&cfg, &RunOptions { timing: !no_timing })?;
            let out = PathBuf::from(&cfg.output);
            write_records(&records, BufWriter::new(File::create(&out)?))?;
            write_summary(&cfg, &records, BufWriter::new(File::create(sidecar(&out))?))?;
            let failed = records.iter().filter(|r| r.error.is_some()).count();
            eprintln!("{} records written to {} ({failed} failed)", records.len(), out.display());
        }
        Command::Fit { input, model } => {
            let model: RateModel = model.parse()?;
            let records = read_records(BufReader::new(File::open(&input)?))?;
            let fit = fit_rate(&records, model)?;
            writeln!(stdout.lock(), "{}", serde_json::to_string(&fit)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
