//! Relevance function estimation.
//!
//! `d_x(u) = 1 + sum_j LP_{j|x} T_j(u)`, where `LP_{j|x}` is the conditional
//! mean of the z-basis function `T_j` given the covariates. Each conditional
//! mean is fitted by regressing `T_j(z_i)` on a rank basis of `x`.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::lp::{LpBasis, DEFAULT_M};
use crate::regress::{self, Gram, LinearFit, Selector};
use crate::rng::{Purpose, RngStream};
use crate::stats;

pub const DEFAULT_EPSILON: f64 = 1e-4;
pub const DEFAULT_K: usize = 6;
/// Covariates with at most this many distinct values are treated as
/// categorical.
pub const MAX_LEVELS: usize = 12;
/// Points used to normalize and integrate a local density over `[0, 1]`.
const FINE_GRID: usize = 4001;
/// Equispaced points used (with the observed ranks) to locate the maximum.
pub const MAX_GRID: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Fitter {
    /// Least-squares regression on the covariate rank basis.
    LeastSquares,
    /// Average of the `neighbors` nearest cases in covariate rank space
    /// (`0` selects `round(sqrt(N))`).
    Knn { neighbors: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceConfig {
    pub m: usize,
    pub k: usize,
    pub selector: Selector,
    pub fitter: Fitter,
    pub interactions: bool,
    pub epsilon: f64,
    /// Zero evaluated coefficients below `2/sqrt(N)` in magnitude.
    pub smooth: bool,
}

impl Default for RelevanceConfig {
    fn default() -> Self {
        Self {
            m: DEFAULT_M,
            k: DEFAULT_K,
            selector: Selector::Bic,
            fitter: Fitter::LeastSquares,
            interactions: true,
            epsilon: DEFAULT_EPSILON,
            smooth: true,
        }
    }
}

impl RelevanceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 {
            return Err(Error::Config("m and k must be >= 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config("density floor must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Midrank of `x` among `sorted`, divided by N; `x` need not be in-sample.
fn rank_in(sorted: &[f64], x: f64) -> f64 {
    let less = sorted.partition_point(|v| *v < x);
    let le = sorted.partition_point(|v| *v <= x);
    let eq = le - less;
    (less as f64 + (eq as f64 + 1.0) / 2.0) / sorted.len() as f64
}

#[derive(Debug, Clone)]
enum CovariateBasis {
    Continuous(LpBasis),
    /// Indicator contrasts for every level but the first.
    Discrete(Vec<f64>),
}

impl CovariateBasis {
    fn width(&self) -> usize {
        match self {
            CovariateBasis::Continuous(b) => b.m(),
            CovariateBasis::Discrete(levels) => levels.len() - 1,
        }
    }

    fn eval(&self, x: f64, out: &mut Vec<f64>) {
        match self {
            CovariateBasis::Continuous(b) => out.extend(b.evaluate(x)),
            CovariateBasis::Discrete(levels) => out.extend(levels[1..].iter().map(|l| if *l == x { 1.0 } else { 0.0 })),
        }
    }
}

/// Rank basis of the covariates: per-covariate LP polynomials or indicator
/// contrasts, plus products of first terms for each covariate pair.
#[derive(Debug, Clone)]
pub struct XBasis {
    covariates: Vec<CovariateBasis>,
    /// Column offset of each covariate's first term.
    offsets: Vec<usize>,
    pairs: Vec<(usize, usize)>,
    names: Vec<String>,
}

impl XBasis {
    pub fn build(data: &Dataset, k: usize, interactions: bool) -> Result<Self> {
        let mut covariates = Vec::with_capacity(data.p());
        let mut offsets = Vec::with_capacity(data.p());
        let mut names = Vec::new();
        let mut width = 0;
        for c in 0..data.p() {
            let col = data.x_column(c);
            let cname = &data.covariate_names()[c];
            let distinct = stats::distinct_count(&col);
            if distinct < 2 {
                return Err(Error::SingularDesign { terms: vec![cname.clone()] });
            }
            let basis = if distinct <= MAX_LEVELS {
                let mut levels = stats::sorted(&col);
                levels.dedup();
                for l in &levels[1..] {
                    names.push(format!("{cname}=={l}"));
                }
                CovariateBasis::Discrete(levels)
            } else {
                let deg = k.min(distinct - 1);
                for j in 1..=deg {
                    names.push(format!("T{j}({cname})"));
                }
                CovariateBasis::Continuous(LpBasis::build(&col, deg)?)
            };
            offsets.push(width);
            width += basis.width();
            covariates.push(basis);
        }
        let mut pairs = Vec::new();
        if interactions {
            for a in 0..data.p() {
                for b in a + 1..data.p() {
                    pairs.push((a, b));
                    names.push(format!("{}:{}", names[offsets[a]].clone(), names[offsets[b]].clone()));
                }
            }
        }
        Ok(Self { covariates, offsets, pairs, names })
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn p(&self) -> usize {
        self.covariates.len()
    }

    pub fn row(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.width());
        for (b, &v) in self.covariates.iter().zip(x) {
            b.eval(v, &mut out);
        }
        for &(a, b) in &self.pairs {
            out.push(out[self.offsets[a]] * out[self.offsets[b]]);
        }
        out
    }

    /// In-sample design columns.
    pub fn columns(&self, data: &Dataset) -> Vec<Vec<f64>> {
        let mut cols = vec![Vec::with_capacity(data.len()); self.width()];
        for i in 0..data.len() {
            for (c, v) in cols.iter_mut().zip(self.row(data.x_row(i))) {
                c.push(v);
            }
        }
        cols
    }
}

#[derive(Debug, Clone)]
enum Fitted {
    Linear(Vec<LinearFit>),
    Knn {
        neighbors: usize,
        /// Sorted covariate columns, for ranking new profiles.
        sorted: Vec<Vec<f64>>,
        /// In-sample rank coordinates, row-major `N x p`.
        coords: Vec<f64>,
        /// In-sample `T_j(z_i)`, row-major `N x m`.
        responses: Vec<f64>,
    },
}

/// Fitted coefficient functions `x -> LP_{j|x}`, `j = 1..m`.
#[derive(Debug, Clone)]
pub struct RelevanceModel {
    config: RelevanceConfig,
    n: usize,
    basis: Arc<LpBasis>,
    xbasis: XBasis,
    fitted: Fitted,
}

impl RelevanceModel {
    pub fn fit(data: &Dataset, config: &RelevanceConfig) -> Result<Self> {
        config.validate()?;
        let n = data.len();
        let basis = LpBasis::build(data.z(), config.m)?;
        let xbasis = XBasis::build(data, config.k, config.interactions)?;
        if n <= xbasis.width() + 1 {
            return Err(Error::InvalidInput(format!("N = {n} is too small for {} covariate terms", xbasis.width())));
        }
        let fitted = match config.fitter {
            Fitter::LeastSquares => {
                let cols = xbasis.columns(data);
                let gram = Gram::new(&cols, xbasis.names());
                gram.check_full_rank()?;
                let fits = (1..=config.m)
                    .map(|j| {
                        let y = basis.column(j);
                        let xty = gram.cross(&cols, &y);
                        let yty = y.iter().map(|v| v * v).sum();
                        regress::fit(&gram, &xty, yty, config.selector)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Fitted::Linear(fits)
            }
            Fitter::Knn { neighbors } => {
                let neighbors =
                    if neighbors == 0 { ((n as f64).sqrt().round() as usize).max(1) } else { neighbors.min(n) };
                let p = data.p();
                let sorted: Vec<Vec<f64>> = (0..p).map(|c| stats::sorted(&data.x_column(c))).collect();
                let mut coords = Vec::with_capacity(n * p);
                for i in 0..n {
                    for (c, s) in sorted.iter().enumerate() {
                        coords.push(rank_in(s, data.x_row(i)[c]));
                    }
                }
                let mut responses = Vec::with_capacity(n * config.m);
                for i in 0..n {
                    responses.extend_from_slice(basis.row(i));
                }
                Fitted::Knn { neighbors, sorted, coords, responses }
            }
        };
        Ok(Self { config: config.clone(), n, basis: Arc::new(basis), xbasis, fitted })
    }

    pub fn config(&self) -> &RelevanceConfig {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &LpBasis {
        &self.basis
    }

    pub fn xbasis(&self) -> &XBasis {
        &self.xbasis
    }

    /// Selected covariate terms per response `j` (empty for kNN).
    pub fn selected_terms(&self) -> Vec<Vec<String>> {
        match &self.fitted {
            Fitted::Linear(fits) => {
                fits.iter().map(|f| f.terms.iter().map(|&t| self.xbasis.names()[t - 1].clone()).collect()).collect()
            }
            Fitted::Knn { .. } => vec![Vec::new(); self.config.m],
        }
    }

    fn zero_threshold(&self) -> f64 {
        match (&self.fitted, self.config.smooth) {
            (_, false) => 0.0,
            (Fitted::Linear(_), true) => 2.0 / (self.n as f64).sqrt(),
            (Fitted::Knn { neighbors, .. }, true) => 2.0 / (*neighbors as f64).sqrt(),
        }
    }

    /// Fitted `LP_{j|x}` before zeroing small values.
    pub fn raw_coefficients(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.xbasis.p() {
            return Err(Error::InvalidInput(format!(
                "target profile has {} covariates, model has {}",
                x.len(),
                self.xbasis.p()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite target profile".into()));
        }
        Ok(match &self.fitted {
            Fitted::Linear(fits) => {
                let row = self.xbasis.row(x);
                fits.iter().map(|f| if f.terms.is_empty() { 0.0 } else { f.predict(&row) }).collect()
            }
            Fitted::Knn { neighbors, sorted, coords, responses } => {
                let p = sorted.len();
                let m = self.config.m;
                let target: Vec<f64> = sorted.iter().zip(x).map(|(s, v)| rank_in(s, *v)).collect();
                let mut dist: Vec<(f64, usize)> = (0..self.n)
                    .map(|i| {
                        let d =
                            coords[i * p..(i + 1) * p].iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                        (d, i)
                    })
                    .collect();
                dist.select_nth_unstable_by(*neighbors - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let mut out = vec![0.0; m];
                for &(_, i) in &dist[..*neighbors] {
                    for (o, r) in out.iter_mut().zip(&responses[i * m..(i + 1) * m]) {
                        *o += r;
                    }
                }
                out.iter_mut().for_each(|o| *o /= *neighbors as f64);
                out
            }
        })
    }

    /// `LP_{j|x}` with small values zeroed.
    pub fn coefficients(&self, x: &[f64]) -> Result<Vec<f64>> {
        let t = self.zero_threshold();
        Ok(self.raw_coefficients(x)?.into_iter().map(|c| if c.abs() < t { 0.0 } else { c }).collect())
    }

    pub fn at(&self, x: &[f64]) -> Result<LocalRelevance> {
        let coef = self.coefficients(x)?;
        Ok(LocalRelevance::new(self.basis.clone(), x.to_vec(), coef, self.config.epsilon))
    }

    pub fn cust(&self, x: &[f64]) -> Result<f64> {
        Ok(cust(&self.coefficients(x)?))
    }

    pub fn rel(&self, x: &[f64]) -> Result<f64> {
        Ok(rel(self.cust(x)?))
    }

    pub fn n_rel(&self, x: &[f64]) -> Result<f64> {
        Ok(n_rel(self.cust(x)?, self.n))
    }
}

pub fn cust(coef: &[f64]) -> f64 {
    coef.iter().map(|c| c * c).sum()
}

pub fn rel(cust: f64) -> f64 {
    1.0 / (1.0 + cust)
}

pub fn n_rel(cust: f64, n: usize) -> f64 {
    n as f64 * rel(cust)
}

/// `d_x` at one covariate profile, floored and normalized over `[0, 1]`.
#[derive(Debug, Clone)]
pub struct LocalRelevance {
    basis: Arc<LpBasis>,
    x: Vec<f64>,
    coef: Vec<f64>,
    epsilon: f64,
    flat: bool,
    norm: f64,
    /// Unnormalized cdf on the fine grid.
    cum: Vec<f64>,
}

impl LocalRelevance {
    pub fn new(basis: Arc<LpBasis>, x: Vec<f64>, coef: Vec<f64>, epsilon: f64) -> Self {
        let flat = coef.iter().all(|c| *c == 0.0);
        let mut out = Self { basis, x, coef, epsilon, flat, norm: 1.0, cum: Vec::new() };
        if !flat {
            let grid = stats::linspace(0.0, 1.0, FINE_GRID);
            let raw: Vec<f64> = grid.iter().map(|&u| out.raw(u)).collect();
            let h = 1.0 / (FINE_GRID - 1) as f64;
            let mut cum = Vec::with_capacity(FINE_GRID);
            cum.push(0.0);
            for w in raw.windows(2) {
                let last = *cum.last().unwrap();
                cum.push(last + 0.5 * h * (w[0] + w[1]));
            }
            out.norm = *cum.last().unwrap();
            out.cum = cum;
        }
        out
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn basis(&self) -> &LpBasis {
        &self.basis
    }

    pub fn is_flat(&self) -> bool {
        self.flat
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn cust(&self) -> f64 {
        cust(&self.coef)
    }

    /// Floored series value, before normalization.
    pub fn raw(&self, u: f64) -> f64 {
        if self.flat {
            1.0
        } else {
            (1.0 + self.basis.combine(&self.coef, u)).max(self.epsilon)
        }
    }

    /// Whether the floor is active at `u`.
    pub fn floored(&self, u: f64) -> bool {
        !self.flat && 1.0 + self.basis.combine(&self.coef, u) < self.epsilon
    }

    pub fn density(&self, u: f64) -> f64 {
        self.raw(u) / self.norm
    }

    /// Floored values on `grid`, renormalized by the trapezoid rule on that
    /// same grid.
    pub fn density_on_grid(&self, grid: &[f64]) -> Vec<f64> {
        let raw: Vec<f64> = grid.iter().map(|&u| self.raw(u)).collect();
        if grid.len() < 2 {
            return raw;
        }
        let total = stats::trapezoid(grid, &raw);
        raw.into_iter().map(|v| v / total).collect()
    }

    /// Largest floored value over the 1001-point grid on
    /// `[1/(2N), 1 - 1/(2N)]` and the observed ranks.
    pub fn max_raw(&self) -> f64 {
        if self.flat {
            return 1.0;
        }
        let nf = self.basis.n() as f64;
        let grid = stats::linspace(0.5 / nf, 1.0 - 0.5 / nf, MAX_GRID);
        grid.iter().chain(self.basis.sorted_ranks()).map(|&u| self.raw(u)).fold(f64::MIN, f64::max)
    }

    /// Maximum of the normalized density.
    pub fn max(&self) -> f64 {
        self.max_raw() / self.norm
    }

    /// `D_x(u)`.
    pub fn cdf(&self, u: f64) -> f64 {
        if self.flat {
            return u.clamp(0.0, 1.0);
        }
        let u = u.clamp(0.0, 1.0);
        let h = 1.0 / (FINE_GRID - 1) as f64;
        let pos = u / h;
        let i = (pos.floor() as usize).min(FINE_GRID - 2);
        let t = pos - i as f64;
        let (a, b) = (self.raw(i as f64 * h), self.raw(u));
        (self.cum[i] + 0.5 * (a + b) * t * h) / self.norm
    }

    /// `D_x^{-1}(p)`, linear within fine-grid cells.
    pub fn inverse_cdf(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        if self.flat {
            return p;
        }
        let target = p * self.norm;
        let j = self.cum.partition_point(|c| *c < target).clamp(1, FINE_GRID - 1);
        let (lo, hi) = (self.cum[j - 1], self.cum[j]);
        let h = 1.0 / (FINE_GRID - 1) as f64;
        let t = if hi > lo { (target - lo) / (hi - lo) } else { 0.0 };
        ((j - 1) as f64 + t) * h
    }

    /// `Q(u | x) = Q_Z(D_x^{-1}(u))` through the sample quantile of z.
    pub fn conditional_quantile(&self, u: f64) -> f64 {
        stats::quantile_sorted(self.basis.sorted_sample(), self.inverse_cdf(u))
    }
}

/// Pointwise bootstrap variability of `d_x` on a u-grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelevanceBands {
    pub x: Vec<f64>,
    pub grid: Vec<f64>,
    pub estimate: Vec<f64>,
    pub sd: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub replicates: usize,
    pub skipped: usize,
}

/// Resample-with-replacement refits of the relevance model, evaluated at
/// `x` on `grid`. Replicates whose fit fails are skipped and counted.
pub fn bootstrap_relevance(
    data: &Dataset,
    config: &RelevanceConfig,
    x: &[f64],
    grid: &[f64],
    b: usize,
    seed: u64,
) -> Result<RelevanceBands> {
    if b < 2 {
        return Err(Error::InvalidInput("bootstrap needs B >= 2 replicates".into()));
    }
    let base = RelevanceModel::fit(data, config)?;
    let estimate = base.at(x)?.density_on_grid(grid);
    let n = data.len();
    let curves: Vec<Option<Vec<f64>>> = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::derive(seed, Purpose::Bootstrap, r as u64).rng();
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let sample = data.select_rows(&idx);
            let model = RelevanceModel::fit(&sample, config).ok()?;
            Some(model.at(x).ok()?.density_on_grid(grid))
        })
        .collect();
    let ok: Vec<Vec<f64>> = curves.into_iter().flatten().collect();
    let skipped = b - ok.len();
    if ok.len() < 2 {
        return Err(Error::TooManyFailures { failed: skipped, total: b });
    }
    let mut sd = Vec::with_capacity(grid.len());
    let mut lower = Vec::with_capacity(grid.len());
    let mut upper = Vec::with_capacity(grid.len());
    for g in 0..grid.len() {
        let col: Vec<f64> = ok.iter().map(|c| c[g]).collect();
        sd.push(stats::sd(&col));
        let s = stats::sorted(&col);
        lower.push(stats::quantile_sorted(&s, 0.025));
        upper.push(stats::quantile_sorted(&s, 0.975));
    }
    Ok(RelevanceBands { x: x.to_vec(), grid: grid.to_vec(), estimate, sd, lower, upper, replicates: ok.len(), skipped })
}
