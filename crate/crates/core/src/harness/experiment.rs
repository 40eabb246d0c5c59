use super::config::{ExperimentConfig, ProcessId};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::measure::{PointConfiguration, ReferenceMeasure};
use crate::processes::{
    equilibrium_measure, kernel_bessel, kernel_infinite_ginibre, sample_finite_ginibre, sample_gaf_zeros,
    sample_poisson, sample_rnm_mcmc, GafSpec, KernelEvaluator, NystromSampler, PotentialSpec,
};
use crate::rng::RngStream;
use crate::smoothing::{bound_empirical, SmoothingSettings};
use crate::transport::w2_semidiscrete;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::sync::Arc;
use std::time::Instant;

/// Initial Nyström resolution per axis (dense) or per sector (Gram).
const NYSTROM_GRID: usize = 64;
/// MALA sweeps per chain; the first half is burn-in.
const MCMC_SWEEPS: usize = 200;

/// One trial. Missing values are written as empty CSV fields: `w2` is absent
/// for empty configurations and failures, `smooth_bound` whenever the
/// reference does not live on a box or a hypothesis check failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub process: String,
    pub param: f64,
    pub trial: usize,
    pub n_points: usize,
    pub w2: Option<f64>,
    pub w2_qbound: Option<f64>,
    pub smooth_bound: Option<f64>,
    pub t_star: Option<f64>,
    pub ms: f64,
    #[serde(skip)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Record wall time; when false `ms` is 0 so reruns are byte-identical.
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { timing: true }
    }
}

enum Prepared {
    Poisson { intensity: f64, window: Domain },
    GinibreFinite { n: usize },
    Nystrom(NystromSampler),
    Gaf(GafSpec),
    Rnm { n: usize },
}

impl Prepared {
    fn new(process: ProcessId, param: f64, domain: &Domain) -> Result<Self> {
        Ok(match process {
            ProcessId::Poisson => Prepared::Poisson {
                intensity: param,
                window: domain.clone(),
            },
            ProcessId::GinibreFinite => Prepared::GinibreFinite { n: param as usize },
            ProcessId::RnmMcmc => Prepared::Rnm { n: param as usize },
            ProcessId::GinibreInfinite => {
                let k: Arc<dyn KernelEvaluator> = Arc::new(kernel_infinite_ginibre(param)?);
                Prepared::Nystrom(NystromSampler::new(k, domain, NYSTROM_GRID)?)
            }
            ProcessId::Bessel => {
                let k: Arc<dyn KernelEvaluator> = Arc::new(kernel_bessel(param, domain.dim())?);
                Prepared::Nystrom(NystromSampler::new(k, domain, NYSTROM_GRID)?)
            }
            ProcessId::Gaf => Prepared::Gaf(GafSpec::new(param, domain.clone())?),
        })
    }

    fn draw<R: RngCore>(&self, rng: &mut R) -> Result<PointConfiguration> {
        match self {
            Prepared::Poisson { intensity, window } => sample_poisson(*intensity, window, rng),
            Prepared::GinibreFinite { n } => sample_finite_ginibre(*n, rng),
            Prepared::Nystrom(s) => s.sample(rng),
            Prepared::Gaf(spec) => sample_gaf_zeros(spec, rng),
            Prepared::Rnm { n } => Ok(sample_rnm_mcmc(&PotentialSpec::Ginibre, *n, MCMC_SWEEPS, rng)?.points),
        }
    }
}

/// A single draw of `process` at parameter `param` on `domain`, using the
/// same samplers and settings as experiment runs.
pub fn sample_process(process: ProcessId, param: f64, domain: &Domain, stream: RngStream) -> Result<PointConfiguration> {
    Prepared::new(process, param, domain)?.draw(&mut stream.rng())
}

/// Limit measure: the equilibrium measure for finite ensembles, normalized
/// volume on the window for homogeneous processes.
fn reference_for(config: &ExperimentConfig, domain: &Domain) -> Result<ReferenceMeasure> {
    if config.process.is_finite_ensemble() {
        equilibrium_measure(&PotentialSpec::Ginibre)
    } else {
        Ok(ReferenceMeasure::uniform(domain.clone()))
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    run_experiment_with(config, &RunOptions::default())
}

/// One record per (parameter, trial), sorted by parameter then trial. Trial
/// t of parameter index p draws from stream `RngStream(seed, 0).child(p).child(t)`,
/// so results do not depend on the thread count. Failures are captured in
/// the record and the run continues.
pub fn run_experiment_with(config: &ExperimentConfig, options: &RunOptions) -> Result<Vec<ExperimentRecord>> {
    config.validate()?;
    let domain = config.domain()?;
    let reference = reference_for(config, &domain)?;
    let settings: SmoothingSettings = config.smoothing.into();
    let prepared: Vec<Result<Prepared>> = config
        .params
        .iter()
        .map(|&p| Prepared::new(config.process, p, &domain))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..config.params.len())
        .flat_map(|p| (0..config.trials).map(move |t| (p, t)))
        .collect();
    let root = RngStream::new(config.seed, 0);
    let mut records: Vec<ExperimentRecord> = jobs
        .par_iter()
        .map(|&(p, t)| {
            let start = Instant::now();
            let mut rec = ExperimentRecord {
                process: config.process.to_string(),
                param: config.params[p],
                trial: t,
                n_points: 0,
                w2: None,
                w2_qbound: None,
                smooth_bound: None,
                t_star: None,
                ms: 0.0,
                error: None,
            };
            let outcome = prepared[p]
                .as_ref()
                .map_err(|e| Error::InvalidParameter(e.to_string()))
                .and_then(|sampler| {
                    let mut rng = root.child(p as u64).child(t as u64).rng();
                    let pts = sampler.draw(&mut rng)?;
                    fill_record(&mut rec, &pts, &reference, config.transport.resolution, &settings)
                });
            if let Err(e) = outcome {
                rec.error = Some(e.to_string());
            }
            if options.timing {
                rec.ms = (start.elapsed().as_secs_f64() * 1e6).round() / 1e3;
            }
            rec
        })
        .collect();
    records.sort_by(|a, b| a.param.total_cmp(&b.param).then(a.trial.cmp(&b.trial)));
    Ok(records)
}

fn fill_record(
    rec: &mut ExperimentRecord,
    pts: &PointConfiguration,
    reference: &ReferenceMeasure,
    resolution: usize,
    settings: &SmoothingSettings,
) -> Result<()> {
    rec.n_points = pts.len();
    if pts.is_empty() {
        return Ok(());
    }
    let w2 = w2_semidiscrete(pts, reference, resolution)?;
    rec.w2 = Some(w2.cost);
    rec.w2_qbound = Some(w2.quantization_bound);
    if reference.domain().is_box() {
        // Only reported when the mass and c > 0 checks inside the bound pass.
        let (t, report) = bound_empirical(pts, reference, settings)?;
        rec.smooth_bound = Some(report.bound);
        rec.t_star = Some(t);
    }
    Ok(())
}

pub fn write_records<W: Write>(records: &[ExperimentRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(["process", "param", "trial", "n_points", "w2", "w2_qbound", "smooth_bound", "t_star", "ms"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<ExperimentRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let expected = ["process", "param", "trial", "n_points", "w2", "w2_qbound", "smooth_bound", "t_star", "ms"];
    let headers = r.headers()?.clone();
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse(format!("unexpected records header {headers:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Serialize)]
struct Failure<'a> {
    param: f64,
    trial: usize,
    error: &'a str,
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a ExperimentConfig,
    records: usize,
    empty_configurations: usize,
    failures: Vec<Failure<'a>>,
}

/// JSON sidecar with the config, failure messages and the number of trials
/// excluded from means because the configuration was empty.
pub fn write_summary<W: Write>(config: &ExperimentConfig, records: &[ExperimentRecord], writer: W) -> Result<()> {
    let summary = Summary {
        config,
        records: records.len(),
        empty_configurations: records.iter().filter(|r| r.error.is_none() && r.n_points == 0).count(),
        failures: records
            .iter()
            .filter_map(|r| {
                r.error.as_deref().map(|e| Failure {
                    param: r.param,
                    trial: r.trial,
                    error: e,
                })
            })
            .collect(),
    };
    serde_json::to_writer_pretty(writer, &summary)?;
    Ok(())
}
