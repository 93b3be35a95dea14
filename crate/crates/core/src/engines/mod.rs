//! Global inference engines and the plug-in interface used to run them on
//! LASER samples.

pub mod bh;
pub mod lindsey;
pub mod locfdr;
pub mod npmle;
pub mod null;

use serde::{Deserialize, Serialize};

use self::locfdr::{LocfdrConfig, LocfdrFit};
use self::null::{fit_empirical_null, EmpiricalNull};
use crate::error::Result;

pub use self::bh::{bh_adjust, bh_procedure};
pub use self::lindsey::LindseyDensity;
pub use self::locfdr::{locfdr_curve, FdrCurve};
pub use self::npmle::{npmle_on_grid, npmle_prior, posterior, NpmleConfig, Posterior, PriorEstimate};
pub use self::null::NullWindow;

/// Engine output for a set of target scores.
#[derive(Debug, Clone)]
pub struct EngineReport {
    pub null: EmpiricalNull,
    /// Local fdr at each target (absent for p-value engines).
    pub fdr: Option<Vec<f64>>,
    /// Two-sided p-values under `null`.
    pub p_values: Vec<f64>,
    pub fit: Option<LocfdrFit>,
}

/// `engine(z-sample, target-z) -> report`.
pub trait GlobalEngine: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, sample: &[f64], targets: &[f64]) -> Result<EngineReport>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Locfdr {
    pub config: LocfdrConfig,
}

impl GlobalEngine for Locfdr {
    fn name(&self) -> &'static str {
        "locfdr"
    }

    fn run(&self, sample: &[f64], targets: &[f64]) -> Result<EngineReport> {
        let fit = LocfdrFit::fit(sample, &self.config)?;
        Ok(EngineReport {
            null: fit.null,
            fdr: Some(targets.iter().map(|&z| fit.fdr(z)).collect()),
            p_values: targets.iter().map(|&z| fit.null.p_value(z)).collect(),
            fit: Some(fit),
        })
    }
}

/// Null-calibrated p-values for a Benjamini-Hochberg step across cases.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Bh {
    pub window: NullWindow,
}

impl GlobalEngine for Bh {
    fn name(&self) -> &'static str {
        "bh"
    }

    fn run(&self, sample: &[f64], targets: &[f64]) -> Result<EngineReport> {
        let null = fit_empirical_null(sample, self.window)?;
        Ok(EngineReport { null, fdr: None, p_values: targets.iter().map(|&z| null.p_value(z)).collect(), fit: None })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Locfdr,
    Bh,
}

impl EngineKind {
    pub fn engine(self) -> Box<dyn GlobalEngine> {
        match self {
            EngineKind::Locfdr => Box::new(Locfdr::default()),
            EngineKind::Bh => Box::new(Bh::default()),
        }
    }
}

impl std::str::FromStr for EngineKind {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "locfdr" => Ok(Self::Locfdr),
            "bh" => Ok(Self::Bh),
            other => Err(crate::error::Error::Config(format!("unknown engine {other:?}"))),
        }
    }
}
