use super::experiment::ExperimentRecord;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

const MIN_PARAMS: usize = 4;
const MIN_TRIALS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateModel {
    /// log W̄ = α + γ log p.
    PurePower,
    /// log W̄ − ½ log log p = α + γ log p.
    SqrtLog,
}

impl FromStr for RateModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pure-power" => Ok(RateModel::PurePower),
            "sqrt-log" => Ok(RateModel::SqrtLog),
            _ => Err(Error::Parse(format!("unknown rate model '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub gamma: f64,
    pub std_error: f64,
    pub intercept: f64,
    pub log_corrected: bool,
    /// Euclidean norm of the regression residuals in log space.
    pub residual_norm: f64,
    pub param_min: f64,
    pub param_max: f64,
    pub n_params: usize,
}

impl RateFit {
    /// Model prediction of log W̄ at parameter p.
    pub fn predict_log(&self, p: f64) -> f64 {
        let base = self.intercept + self.gamma * p.ln();
        if self.log_corrected {
            base + 0.5 * p.ln().ln()
        } else {
            base
        }
    }
}

/// Least-squares fit of the mean W2 per parameter against the parameter on
/// log scales. Trials without a W2 value are excluded from the means.
pub fn fit_rate(records: &[ExperimentRecord], model: RateModel) -> Result<RateFit> {
    let mut groups: Vec<(f64, Vec<f64>)> = Vec::new();
    for r in records {
        let Some(w) = r.w2 else { continue };
        match groups.iter_mut().find(|(p, _)| *p == r.param) {
            Some((_, v)) => v.push(w),
            None => groups.push((r.param, vec![w])),
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    if groups.len() < MIN_PARAMS {
        return Err(Error::InvalidParameter(format!(
            "rate fit needs at least {MIN_PARAMS} parameters, got {}",
            groups.len()
        )));
    }
    if let Some((p, v)) = groups.iter().find(|(_, v)| v.len() < MIN_TRIALS) {
        return Err(Error::InvalidParameter(format!(
            "parameter {p} has {} usable trials, at least {MIN_TRIALS} needed",
            v.len()
        )));
    }
    let log_corrected = model == RateModel::SqrtLog;
    let mut xs = Vec::with_capacity(groups.len());
    let mut ys = Vec::with_capacity(groups.len());
    for (p, v) in &groups {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        if !(mean > 0.0) {
            return Err(Error::InvalidParameter(format!("mean W2 at {p} is not positive")));
        }
        let mut y = mean.ln();
        if log_corrected {
            if *p <= std::f64::consts::E {
                return Err(Error::InvalidParameter(format!("sqrt-log model needs parameters above e, got {p}")));
            }
            y -= 0.5 * p.ln().ln();
        }
        xs.push(p.ln());
        ys.push(y);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let gamma = sxy / sxx;
    let intercept = my - gamma * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - gamma * x).powi(2)).sum();
    Ok(RateFit {
        gamma,
        std_error: (rss / (n - 2.0) / sxx).sqrt(),
        intercept,
        log_corrected,
        residual_norm: rss.sqrt(),
        param_min: groups[0].0,
        param_max: groups[groups.len() - 1].0,
        n_params: groups.len(),
    })
}
