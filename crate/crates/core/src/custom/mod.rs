//! Customized inference: global engines run on LASER samples at each
//! target covariate profile.

pub mod adjust;
pub mod inference;
pub mod reb;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::engines::locfdr::{FdrCurve, LocfdrConfig, LocfdrFit};
use crate::engines::null::{fit_empirical_null, EmpiricalNull};
use crate::engines::GlobalEngine;
use crate::error::{Error, Result};
use crate::laser::{generate_laser, LaserSample};
use crate::relevance::{LocalRelevance, RelevanceConfig, RelevanceModel};
use crate::rng::{Purpose, RngStream};
use crate::stats;

pub use self::adjust::{regression_adjust, AdjustMethod, RegressionAdjustment};
pub use self::inference::{
    global_inference, macro_inference, reproducibility_report, CaseResult, GroupSummary, InferenceReport,
    ReproducibilityReport,
};
pub use self::reb::{finite_bayes_ci, reb_inference, EbConfig, FiniteBayes, RebResult};

/// DPS floor on fdr before taking logs.
pub const FDR_FLOOR: f64 = 1e-12;
/// IQR-to-sd factor for the quantile relevant null.
pub const QUANTILE_NULL_IQR: f64 = 1.349;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NullMethod {
    /// Empirical null fitted on the LASER sample.
    #[serde(rename = "laser-locfdr")]
    Laser,
    /// Conditional quartiles through the relevance cdf.
    #[serde(rename = "quantile")]
    Quantile,
}

impl std::str::FromStr for NullMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "laser" | "laser-locfdr" => Ok(Self::Laser),
            "quantile" => Ok(Self::Quantile),
            other => Err(Error::Config(format!("unknown null method {other:?}"))),
        }
    }
}

impl NullMethod {
    pub fn tag(self) -> &'static str {
        match self {
            NullMethod::Laser => "laser-locfdr",
            NullMethod::Quantile => "quantile",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomConfig {
    pub relevance: RelevanceConfig,
    pub locfdr: LocfdrConfig,
    pub null_method: NullMethod,
    pub adjust: Option<AdjustMethod>,
    /// LASER size; `None` uses N.
    pub laser_size: Option<usize>,
    pub bags: usize,
    pub seed: u64,
}

impl Default for CustomConfig {
    fn default() -> Self {
        Self {
            relevance: RelevanceConfig::default(),
            locfdr: LocfdrConfig::default(),
            null_method: NullMethod::Laser,
            adjust: None,
            laser_size: None,
            bags: 1,
            seed: 0,
        }
    }
}

impl CustomConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelevantNull {
    pub mu0: f64,
    pub sigma0: f64,
    pub pi0: f64,
    pub method: NullMethod,
}

impl RelevantNull {
    pub fn as_null(&self) -> EmpiricalNull {
        EmpiricalNull { mu0: self.mu0, sigma0: self.sigma0, pi0: self.pi0 }
    }
}

/// Engine output for one covariate profile.
#[derive(Debug, Clone)]
pub struct GroupResult {
    pub x: Vec<f64>,
    pub shift: f64,
    pub flat: bool,
    pub cust: f64,
    pub null: RelevantNull,
    pub fdr: Option<Vec<f64>>,
    pub p_values: Vec<f64>,
    pub acceptance_rate: f64,
}

/// Bag-averaged customized fdr at one profile, in the z-domain.
#[derive(Debug, Clone)]
pub struct CustomFdr {
    pub x: Vec<f64>,
    pub shift: f64,
    pub flat: bool,
    pub curve: FdrCurve,
    pub fits: Vec<LocfdrFit>,
    pub acceptance_rate: f64,
}

impl CustomFdr {
    pub fn fdr_at(&self, z: f64) -> f64 {
        self.fits.iter().map(|f| f.fdr(z - self.shift)).sum::<f64>() / self.fits.len() as f64
    }
}

/// The three bracket factors of the conditional fdr decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Factorization {
    pub factor_pi: f64,
    pub factor_null_ratio: f64,
    pub factor_inv_d: f64,
    /// Global fdr times the three factors.
    pub product: f64,
    /// The relevance floor was active at `F(z)`.
    pub floored: bool,
}

/// `fdr(z|x) = fdr(z) * pi0(x)/pi0 * f0(z|x)/f0(z) * 1/d_x(F(z))`.
pub fn factorize(global_fdr: f64, pi0_x: f64, pi0: f64, f0_x: f64, f0: f64, d: f64) -> Factorization {
    let factor_pi = pi0_x / pi0;
    let factor_null_ratio = f0_x / f0;
    let factor_inv_d = 1.0 / d;
    Factorization {
        factor_pi,
        factor_null_ratio,
        factor_inv_d,
        product: global_fdr * factor_pi * factor_null_ratio * factor_inv_d,
        floored: false,
    }
}

/// Factorization with fitted components at score `z`.
pub fn fdr_factorization(
    global_fdr: f64,
    relevant: &RelevantNull,
    global: &EmpiricalNull,
    local: &LocalRelevance,
    z: f64,
) -> Factorization {
    let u = local.basis().rank_of(z);
    let mut f = factorize(
        global_fdr,
        relevant.pi0,
        global.pi0,
        stats::normal_pdf(z, relevant.mu0, relevant.sigma0),
        global.pdf(z),
        local.density(u),
    );
    f.floored = local.floored(u);
    f
}

/// `-log10(max(fdr, 1e-12))`.
pub fn dps(fdr: f64) -> f64 {
    0.0 - fdr.max(FDR_FLOOR).log10()
}

pub fn dps_scores(fdr: &[f64]) -> Vec<f64> {
    fdr.iter().map(|&f| dps(f)).collect()
}

/// Canonical row order: by covariates, then score, then input position.
fn canonical_order(data: &Dataset) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.sort_by(|&a, &b| {
        let xa = data.x_row(a);
        let xb = data.x_row(b);
        xa.iter()
            .zip(xb)
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(data.z()[a].total_cmp(&data.z()[b]))
            .then(a.cmp(&b))
    });
    idx
}

/// Shared state for customized (or global) runs on one dataset: the
/// optional mean adjustment, the relevance model on the working scores and
/// the configuration. Rows are held in a canonical order so results do not
/// depend on input order.
#[derive(Debug, Clone)]
pub struct Customizer {
    data: Dataset,
    order: Vec<usize>,
    scores: Vec<f64>,
    adjustment: Option<RegressionAdjustment>,
    model: Option<RelevanceModel>,
    config: CustomConfig,
}

impl Customizer {
    pub fn new(data: &Dataset, config: &CustomConfig) -> Result<Self> {
        Self::build(data, config, true)
    }

    /// Same machinery with relevance fixed at 1 (the global engine).
    pub fn global(data: &Dataset, config: &CustomConfig) -> Result<Self> {
        Self::build(data, config, false)
    }

    fn build(data: &Dataset, config: &CustomConfig, customize: bool) -> Result<Self> {
        if config.bags == 0 {
            return Err(Error::Config("bags must be >= 1".into()));
        }
        if config.laser_size == Some(0) {
            return Err(Error::Config("LASER size must be >= 1".into()));
        }
        let order = canonical_order(data);
        let data = data.select_rows(&order);
        let adjustment = config.adjust.map(|m| RegressionAdjustment::fit(&data, m)).transpose()?;
        let scores = match &adjustment {
            Some(a) => a.residuals().to_vec(),
            None => data.z().to_vec(),
        };
        let model = if customize {
            Some(RelevanceModel::fit(&data.with_scores(scores.clone())?, &config.relevance)?)
        } else {
            None
        };
        Ok(Self { data, order, scores, adjustment, model, config: config.clone() })
    }

    pub fn config(&self) -> &CustomConfig {
        &self.config
    }

    pub fn is_global(&self) -> bool {
        self.model.is_none()
    }

    /// Rows in canonical order.
    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// `order()[k]` is the input position of canonical row `k`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Working scores (residuals when adjusted), canonical order.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn model(&self) -> Option<&RelevanceModel> {
        self.model.as_ref()
    }

    pub fn adjustment(&self) -> Option<&RegressionAdjustment> {
        self.adjustment.as_ref()
    }

    /// `E[z | x0]` removed by the adjustment (0 without one).
    pub fn shift(&self, x0: &[f64]) -> f64 {
        self.adjustment.as_ref().map_or(0.0, |a| a.mean_at(x0))
    }

    pub fn local(&self, x0: &[f64]) -> Result<Option<LocalRelevance>> {
        self.model.as_ref().map(|m| m.at(x0)).transpose()
    }

    pub fn laser_size(&self) -> usize {
        self.config.laser_size.unwrap_or(self.scores.len())
    }

    pub fn laser_stream(&self, x0: &[f64], bag: usize) -> RngStream {
        let base = RngStream::for_profile(self.config.seed, Purpose::Laser, x0);
        if bag == 0 {
            base
        } else {
            base.child(Purpose::Bag, bag as u64)
        }
    }

    /// LASER sample for bag `bag` at `x0`, in the working domain.
    pub fn laser(&self, x0: &[f64], bag: usize) -> Result<LaserSample> {
        let stream = self.laser_stream(x0, bag);
        match self.local(x0)? {
            Some(local) => generate_laser(&self.scores, &local, self.laser_size(), stream),
            None => Ok(LaserSample {
                x: x0.to_vec(),
                samples: self.scores.clone(),
                proposals: 0,
                acceptance_rate: 1.0,
                seed: stream.seed,
                stream: stream.stream,
                flat: true,
            }),
        }
    }

    /// Lasers for every bag; a flat profile needs only one.
    pub fn lasers(&self, x0: &[f64]) -> Result<Vec<LaserSample>> {
        let first = self.laser(x0, 0)?;
        if first.flat {
            return Ok(vec![first]);
        }
        let mut out = vec![first];
        for b in 1..self.config.bags {
            out.push(self.laser(x0, b)?);
        }
        Ok(out)
    }

    /// Empirical null of the working scores.
    pub fn global_null(&self) -> Result<EmpiricalNull> {
        fit_empirical_null(&self.scores, self.config.locfdr.window)
    }

    /// Null at `x0` from conditional quartiles, in the z-domain.
    fn quantile_null(&self, x0: &[f64], local: Option<&LocalRelevance>) -> Result<RelevantNull> {
        let q = |u: f64| match local {
            Some(l) => l.conditional_quantile(u),
            None => stats::quantile(&self.scores, u),
        };
        let sigma0 = (q(0.75) - q(0.25)) / QUANTILE_NULL_IQR;
        if !(sigma0 > 0.0) {
            return Err(Error::Numerical("conditional quartiles coincide".into()));
        }
        let pi0 = self.global_null()?.pi0;
        Ok(RelevantNull { mu0: q(0.5) + self.shift(x0), sigma0, pi0, method: NullMethod::Quantile })
    }

    /// `Q(u | x0)` in the z-domain.
    pub fn conditional_quantile(&self, x0: &[f64], u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::InvalidInput(format!("probability {u} outside (0, 1)")));
        }
        let q = match self.local(x0)? {
            Some(l) => l.conditional_quantile(u),
            None => stats::quantile(&self.scores, u),
        };
        Ok(q + self.shift(x0))
    }

    pub fn relevant_null(&self, x0: &[f64], method: NullMethod) -> Result<RelevantNull> {
        match method {
            NullMethod::Quantile => self.quantile_null(x0, self.local(x0)?.as_ref()),
            NullMethod::Laser => {
                let shift = self.shift(x0);
                let nulls = self
                    .lasers(x0)?
                    .iter()
                    .map(|l| fit_empirical_null(&l.samples, self.config.locfdr.window))
                    .collect::<Result<Vec<_>>>()?;
                let k = nulls.len() as f64;
                Ok(RelevantNull {
                    mu0: nulls.iter().map(|n| n.mu0).sum::<f64>() / k + shift,
                    sigma0: nulls.iter().map(|n| n.sigma0).sum::<f64>() / k,
                    pi0: nulls.iter().map(|n| n.pi0).sum::<f64>() / k,
                    method,
                })
            }
        }
    }

    /// Customized locfdr curve at `x0`, averaged over bags on a grid
    /// spanning the working scores.
    pub fn customized_fdr(&self, x0: &[f64]) -> Result<CustomFdr> {
        let shift = self.shift(x0);
        let lasers = self.lasers(x0)?;
        let fits =
            lasers.iter().map(|l| LocfdrFit::fit(&l.samples, &self.config.locfdr)).collect::<Result<Vec<_>>>()?;
        let lo = self.scores.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let grid = stats::linspace(lo, hi, 200);
        let k = fits.len() as f64;
        let curves: Vec<FdrCurve> = fits.iter().map(|f| f.curve(&grid)).collect();
        let avg = |get: fn(&FdrCurve) -> &Vec<f64>| -> Vec<f64> {
            (0..grid.len()).map(|i| curves.iter().map(|c| get(c)[i]).sum::<f64>() / k).collect()
        };
        let null = EmpiricalNull {
            mu0: fits.iter().map(|f| f.null.mu0).sum::<f64>() / k,
            sigma0: fits.iter().map(|f| f.null.sigma0).sum::<f64>() / k,
            pi0: fits.iter().map(|f| f.null.pi0).sum::<f64>() / k,
        };
        let curve =
            FdrCurve { z: grid.clone(), fdr: avg(|c| &c.fdr), f: avg(|c| &c.f), f0: avg(|c| &c.f0), null, shift: 0.0 }
                .shifted(shift);
        Ok(CustomFdr {
            x: x0.to_vec(),
            shift,
            flat: lasers[0].flat,
            curve,
            fits,
            acceptance_rate: lasers.iter().map(|l| l.acceptance_rate).sum::<f64>() / k,
        })
    }

    /// Runs `engine` on the LASERs at `x0` for target scores `z`
    /// (z-domain), averaging over bags.
    pub fn evaluate_group(&self, x0: &[f64], z: &[f64], engine: &dyn GlobalEngine) -> Result<GroupResult> {
        let shift = self.shift(x0);
        let targets: Vec<f64> = z.iter().map(|v| v - shift).collect();
        let local = self.local(x0)?;
        let lasers = self.lasers(x0)?;
        let reports = lasers.iter().map(|l| engine.run(&l.samples, &targets)).collect::<Result<Vec<_>>>()?;
        let k = reports.len() as f64;
        let mean_of = |f: &dyn Fn(usize) -> Vec<f64>| -> Vec<f64> {
            let mut acc = vec![0.0; targets.len()];
            for b in 0..reports.len() {
                for (a, v) in acc.iter_mut().zip(f(b)) {
                    *a += v / k;
                }
            }
            acc
        };
        let (null, fdr, p_values) = match self.config.null_method {
            NullMethod::Laser => {
                let null = RelevantNull {
                    mu0: reports.iter().map(|r| r.null.mu0).sum::<f64>() / k + shift,
                    sigma0: reports.iter().map(|r| r.null.sigma0).sum::<f64>() / k,
                    pi0: reports.iter().map(|r| r.null.pi0).sum::<f64>() / k,
                    method: NullMethod::Laser,
                };
                let fdr = if reports[0].fdr.is_some() {
                    Some(mean_of(&|b| reports[b].fdr.clone().unwrap_or_default()))
                } else {
                    None
                };
                (null, fdr, mean_of(&|b| reports[b].p_values.clone()))
            }
            NullMethod::Quantile => {
                let null = self.quantile_null(x0, local.as_ref())?;
                let working = EmpiricalNull { mu0: null.mu0 - shift, ..null.as_null() };
                let fdr = if reports[0].fdr.is_some() {
                    Some(mean_of(&|b| match &reports[b].fit {
                        Some(fit) => targets
                            .iter()
                            .map(|&t| {
                                let f = fit.density.pdf(t);
                                if f > 0.0 {
                                    (working.pi0 * working.pdf(t) / f).min(1.0)
                                } else {
                                    1.0
                                }
                            })
                            .collect(),
                        None => vec![1.0; targets.len()],
                    }))
                } else {
                    None
                };
                let p = targets.iter().map(|&t| working.p_value(t)).collect();
                (null, fdr, p)
            }
        };
        Ok(GroupResult {
            x: x0.to_vec(),
            shift,
            flat: lasers[0].flat,
            cust: local.as_ref().map_or(0.0, |l| l.cust()),
            null,
            fdr,
            p_values,
            acceptance_rate: lasers.iter().map(|l| l.acceptance_rate).sum::<f64>() / k,
        })
    }
}
