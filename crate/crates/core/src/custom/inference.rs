//! Case-level inference over a whole dataset: per-profile engine runs,
//! DPS ranking and discovery accounting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::custom::{dps, CustomConfig, Customizer, GroupResult, RelevantNull};
use crate::data::Dataset;
use crate::engines::{bh_adjust, bh_procedure, GlobalEngine};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    /// Input row position.
    pub index: usize,
    pub id: String,
    pub x: Vec<f64>,
    pub z: f64,
    /// Local fdr (locfdr path) or BH q-value (BH path).
    pub fdr: f64,
    pub p_value: f64,
    pub dps: f64,
    /// 1-based position in descending DPS order.
    pub rank: usize,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub x: Vec<f64>,
    pub cases: usize,
    pub flat: bool,
    pub cust: f64,
    pub n_rel: f64,
    pub null: RelevantNull,
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub engine: String,
    pub mode: String,
    pub alpha: f64,
    /// fdr cutoff (locfdr path) or BH level.
    pub threshold: f64,
    pub seed: u64,
    pub cases: Vec<CaseResult>,
    pub groups: Vec<GroupSummary>,
    pub rejections: usize,
    pub true_signals: Option<usize>,
    pub true_discoveries: Option<usize>,
    pub false_discoveries: Option<usize>,
    pub misses: Option<usize>,
}

impl InferenceReport {
    /// Input positions of significant cases, ascending.
    pub fn discoveries(&self) -> Vec<usize> {
        self.cases.iter().filter(|c| c.significant).map(|c| c.index).collect()
    }
}

/// locfdr significance cutoff `min(0.2, 2 alpha)`.
pub fn locfdr_threshold(alpha: f64) -> f64 {
    (2.0 * alpha).min(0.2)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("alpha {alpha} outside (0, 1)")))
    }
}

/// Contiguous runs of identical covariate profiles in canonical order.
fn profile_runs(data: &Dataset) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=data.len() {
        if i == data.len() || data.x_row(i) != data.x_row(start) {
            runs.push((start, i));
            start = i;
        }
    }
    runs
}

fn assemble(
    cz: &Customizer,
    engine: &dyn GlobalEngine,
    alpha: f64,
    mode: &str,
    fdr: Option<Vec<f64>>,
    p: Vec<f64>,
    groups: Vec<GroupSummary>,
) -> Result<InferenceReport> {
    let data = cz.data();
    let n = data.len();
    let (values, significant, threshold) = match fdr {
        Some(f) => {
            let t = locfdr_threshold(alpha);
            let sig = f.iter().map(|v| *v <= t).collect();
            (f, sig, t)
        }
        None => {
            let q = bh_adjust(&p)?;
            let mut sig = vec![false; n];
            for i in bh_procedure(&p, alpha)? {
                sig[i] = true;
            }
            (q, sig, alpha)
        }
    };
    let mut cases: Vec<CaseResult> = (0..n)
        .map(|k| {
            let index = cz.order()[k];
            CaseResult {
                index,
                id: data.labels().map_or_else(|| (index + 1).to_string(), |l| l[k].clone()),
                x: data.x_row(k).to_vec(),
                z: data.z()[k],
                fdr: values[k],
                p_value: p[k],
                dps: dps(values[k]),
                rank: 0,
                significant: significant[k],
            }
        })
        .collect();
    // Rank by DPS with ties broken by input position.
    let mut by_dps: Vec<usize> = (0..n).collect();
    by_dps.sort_by(|&a, &b| cases[b].dps.total_cmp(&cases[a].dps).then(cases[a].index.cmp(&cases[b].index)));
    for (r, &k) in by_dps.iter().enumerate() {
        cases[k].rank = r + 1;
    }
    let truth: Option<Vec<bool>> = data.truth().map(|t| t.iter().map(|v| *v != 0.0).collect());
    cases.sort_by_key(|c| c.index);
    let rejections = significant.iter().filter(|s| **s).count();
    let (true_signals, true_discoveries, false_discoveries, misses) = match &truth {
        Some(t) => {
            let signals = t.iter().filter(|s| **s).count();
            let hit = t.iter().zip(&significant).filter(|(a, b)| **a && **b).count();
            (Some(signals), Some(hit), Some(rejections - hit), Some(signals - hit))
        }
        None => (None, None, None, None),
    };
    Ok(InferenceReport {
        engine: engine.name().to_string(),
        mode: mode.to_string(),
        alpha,
        threshold,
        seed: cz.config().seed,
        cases,
        groups,
        rejections,
        true_signals,
        true_discoveries,
        false_discoveries,
        misses,
    })
}

fn summary(g: &GroupResult, cases: usize, n: usize) -> GroupSummary {
    GroupSummary {
        x: g.x.clone(),
        cases,
        flat: g.flat,
        cust: g.cust,
        n_rel: crate::relevance::n_rel(g.cust, n),
        null: g.null,
        acceptance_rate: g.acceptance_rate,
    }
}

/// Customized inference for every case: one relevance model, one set of
/// LASERs per distinct covariate profile, the engine run on each, then a
/// locfdr cutoff or a BH step across all cases.
pub fn macro_inference(cz: &Customizer, engine: &dyn GlobalEngine, alpha: f64) -> Result<InferenceReport> {
    check_alpha(alpha)?;
    let data = cz.data();
    let n = data.len();
    if cz.is_global() {
        let g = cz.evaluate_group(data.x_row(0), data.z(), engine)?;
        let mut s = summary(&g, n, n);
        s.x.clear();
        return assemble(cz, engine, alpha, "global", g.fdr, g.p_values, vec![s]);
    }
    let runs = profile_runs(data);
    let results = runs
        .par_iter()
        .map(|&(a, b)| cz.evaluate_group(data.x_row(a), &data.z()[a..b], engine))
        .collect::<Result<Vec<_>>>()?;
    let mut fdr: Option<Vec<f64>> = results[0].fdr.as_ref().map(|_| Vec::with_capacity(n));
    let mut p = Vec::with_capacity(n);
    let mut groups = Vec::with_capacity(runs.len());
    for (g, &(a, b)) in results.iter().zip(&runs) {
        if let (Some(acc), Some(v)) = (fdr.as_mut(), g.fdr.as_ref()) {
            acc.extend_from_slice(v);
        }
        p.extend_from_slice(&g.p_values);
        groups.push(summary(g, b - a, n));
    }
    assemble(cz, engine, alpha, "customized", fdr, p, groups)
}

/// The engine run once on the full sample for all cases.
pub fn global_inference(
    data: &Dataset,
    config: &CustomConfig,
    engine: &dyn GlobalEngine,
    alpha: f64,
) -> Result<InferenceReport> {
    macro_inference(&Customizer::global(data, config)?, engine, alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproducibilityReport {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
    pub intersection: Vec<usize>,
    pub true_in_intersection: Option<usize>,
    pub false_in_intersection: Option<usize>,
}

/// Runs the same inference on two datasets sharing a covariate design and
/// compares discovery sets.
pub fn reproducibility_report(
    first: &Dataset,
    second: &Dataset,
    config: &CustomConfig,
    engine: &dyn GlobalEngine,
    alpha: f64,
    customized: bool,
) -> Result<ReproducibilityReport> {
    if first.len() != second.len() || first.p() != second.p() || first.x_raw() != second.x_raw() {
        return Err(Error::InvalidInput("datasets do not share a covariate design".into()));
    }
    let run = |d: &Dataset| -> Result<InferenceReport> {
        if customized {
            macro_inference(&Customizer::new(d, config)?, engine, alpha)
        } else {
            global_inference(d, config, engine, alpha)
        }
    };
    let a = run(first)?.discoveries();
    let b = run(second)?.discoveries();
    let intersection: Vec<usize> = a.iter().copied().filter(|i| b.binary_search(i).is_ok()).collect();
    let (t, f) = match (first.truth(), second.truth()) {
        (Some(t1), Some(t2)) => {
            let t = intersection.iter().filter(|&&i| t1[i] != 0.0 && t2[i] != 0.0).count();
            (Some(t), Some(intersection.len() - t))
        }
        _ => (None, None),
    };
    Ok(ReproducibilityReport { first: a, second: b, intersection, true_in_intersection: t, false_in_intersection: f })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert_eq!(locfdr_threshold(0.05), 0.1);
        assert_eq!(locfdr_threshold(0.2), 0.2);
    }

    #[test]
    fn runs_split_profiles() {
        let d = Dataset::from_columns(vec![1.0, 1.0, 2.0, 3.0, 3.0], vec![0.0; 5]).unwrap();
        assert_eq!(profile_runs(&d), vec![(0, 2), (2, 3), (3, 5)]);
    }
}
