use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::smoothing::SmoothingSettings;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessId {
    Poisson,
    GinibreFinite,
    GinibreInfinite,
    Bessel,
    Gaf,
    RnmMcmc,
}

impl ProcessId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProcessId::Poisson => "poisson",
            ProcessId::GinibreFinite => "ginibre_finite",
            ProcessId::GinibreInfinite => "ginibre_infinite",
            ProcessId::Bessel => "bessel",
            ProcessId::Gaf => "gaf",
            ProcessId::RnmMcmc => "rnm_mcmc",
        }
    }

    /// Parameters are matrix sizes N rather than intensities L.
    pub fn is_finite_ensemble(&self) -> bool {
        matches!(self, ProcessId::GinibreFinite | ProcessId::RnmMcmc)
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProcessId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('-', "_").as_str() {
            "poisson" => ProcessId::Poisson,
            "ginibre_finite" | "ginibre" => ProcessId::GinibreFinite,
            "ginibre_infinite" => ProcessId::GinibreInfinite,
            "bessel" => ProcessId::Bessel,
            "gaf" => ProcessId::Gaf,
            "rnm_mcmc" => ProcessId::RnmMcmc,
            _ => return Err(Error::Parse(format!("unknown process '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportConfig {
    pub resolution: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingConfig {
    /// Basis truncation Λ; automatic when absent.
    #[serde(default)]
    pub lambda_max: Option<f64>,
    pub t_lo: f64,
    pub t_hi: f64,
    /// Density lower bound of the reference; taken from the reference when absent.
    #[serde(default)]
    pub c: Option<f64>,
}

impl From<SmoothingConfig> for SmoothingSettings {
    fn from(s: SmoothingConfig) -> Self {
        SmoothingSettings {
            lambda_max: s.lambda_max,
            t_lo: s.t_lo,
            t_hi: s.t_hi,
            c: s.c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub process: ProcessId,
    /// N for finite ensembles, L otherwise; strictly increasing.
    pub params: Vec<f64>,
    /// Textual domain, e.g. `unit-square`, `unit-disk`, `box:0,2,0,1`.
    pub domain: String,
    pub trials: usize,
    pub seed: u64,
    pub transport: TransportConfig,
    pub smoothing: SmoothingConfig,
    pub output: String,
}

impl ExperimentConfig {
    /// Reads JSON or TOML, chosen by the file extension.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => Self::from_toml(&text)?,
            Some("json") => Self::from_json(&text)?,
            _ => {
                return Err(Error::Parse(format!(
                    "config '{}' must end in .json or .toml",
                    path.display()
                )))
            }
        };
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn domain(&self) -> Result<Domain> {
        self.domain.parse()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.params.is_empty() {
            return Err(Error::InvalidParameter("params must not be empty".into()));
        }
        if self.params.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidParameter("params must be positive and finite".into()));
        }
        if self.params.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("params must be strictly increasing".into()));
        }
        if self.process.is_finite_ensemble() && self.params.iter().any(|p| p.fract() != 0.0 || *p < 2.0) {
            return Err(Error::InvalidParameter(format!("{} needs integer N ≥ 2", self.process)));
        }
        if self.transport.resolution == 0 {
            return Err(Error::InvalidParameter("transport resolution must be positive".into()));
        }
        let s = &self.smoothing;
        if !(s.t_lo > 0.0 && s.t_lo < s.t_hi && s.t_hi.is_finite()) {
            return Err(Error::InvalidParameter(format!("t range [{}, {}]", s.t_lo, s.t_hi)));
        }
        if s.lambda_max.is_some_and(|l| !(l > 0.0 && l.is_finite())) || s.c.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::InvalidParameter("lambda_max and c must be positive".into()));
        }
        let domain = self.domain()?;
        match self.process {
            ProcessId::GinibreFinite | ProcessId::RnmMcmc if domain != Domain::unit_disk() => Err(Error::InvalidParameter(
                format!("{} compares against the unit-disk equilibrium measure; domain must be unit-disk", self.process),
            )),
            ProcessId::GinibreInfinite | ProcessId::Gaf if domain.dim() != 2 => {
                Err(Error::InvalidParameter(format!("{} is planar", self.process)))
            }
            ProcessId::GinibreInfinite | ProcessId::Gaf | ProcessId::Bessel if !domain.is_box() => Err(
                Error::InvalidParameter(format!("{} windows must be boxes", self.process)),
            ),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const JSON: &str = r#"{
        "process": "poisson",
        "params": [64, 256],
        "domain": "unit-square",
        "trials": 4,
        "seed": 11,
        "transport": {"resolution": 32},
        "smoothing": {"lambda_max": null, "t_lo": 0.0001, "t_hi": 1.0, "c": 1.0},
        "output": "records.csv"
    }"#;

    #[test]
    fn json_and_toml_agree() {
        let a = ExperimentConfig::from_json(JSON).unwrap();
        let toml_text = r#"
            process = "poisson"
            params = [64.0, 256.0]
            domain = "unit-square"
            trials = 4
            seed = 11
            output = "records.csv"
            [transport]
            resolution = 32
            [smoothing]
            t_lo = 0.0001
            t_hi = 1.0
            c = 1.0
        "#;
        let b = ExperimentConfig::from_toml(toml_text).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = JSON.replace("\"seed\": 11", "\"seed\": 11, \"extra\": 1");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn invariants_enforced() {
        let dec = JSON.replace("[64, 256]", "[256, 64]");
        assert!(ExperimentConfig::from_json(&dec).is_err());
        let zero = JSON.replace("\"trials\": 4", "\"trials\": 0");
        assert!(ExperimentConfig::from_json(&zero).is_err());
        let gin = JSON.replace("\"poisson\"", "\"ginibre_finite\"");
        assert!(ExperimentConfig::from_json(&gin).is_err());
        let gin_disk = gin.replace("unit-square", "unit-disk");
        assert!(ExperimentConfig::from_json(&gin_disk).is_ok());
    }
}
