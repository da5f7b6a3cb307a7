//! Epoch-by-epoch PLMM driver.
//!
//! The first epoch is a static mixture fit from a small-EM start. Every later
//! epoch builds a predictive model from the previous one, fits each candidate
//! sub-model of the link and keeps the one with the lowest BIC. In auto-K mode
//! the number of clusters is re-selected per epoch with the L-method and new
//! clusters are matched to old ones by minimum sKLD.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PlmmError, Result};
use crate::link::{bic, estimate_link_em, init_link_params, LinkFit, LinkParameters, SubModel};
use crate::mm::{
    fit_mm_em, map_assign, run_em, skld, CountVector, EmConfig, EmFit, MixtureModel,
    ResponsibilityMatrix, TemporalDataset,
};
use crate::optim::OptimizerConfig;
use crate::scalar::Real;

/// How the number of clusters is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum KMode {
    Fixed {
        k: usize,
    },
    /// L-method over the static BIC curve for `k_min..=k_max`, re-run every epoch.
    Auto {
        k_min: usize,
        k_max: usize,
    },
}

impl Default for KMode {
    fn default() -> Self {
        KMode::Auto { k_min: 3, k_max: 9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlmmConfig {
    pub k_mode: KMode,
    pub submodels: Vec<SubModel>,
    pub em: EmConfig,
    pub optimizer: OptimizerConfig,
    pub interpret_lo: f64,
    pub interpret_hi: f64,
    /// Dead zone around zero for shift-type links.
    pub gamma_eps: f64,
}

impl Default for PlmmConfig {
    fn default() -> Self {
        Self {
            k_mode: KMode::default(),
            submodels: SubModel::ALL.to_vec(),
            em: EmConfig::default(),
            optimizer: OptimizerConfig::default(),
            interpret_lo: 0.9,
            interpret_hi: 1.1,
            gamma_eps: 0.1,
        }
    }
}

impl PlmmConfig {
    pub fn fixed(k: usize) -> Self {
        Self {
            k_mode: KMode::Fixed { k },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.k_mode {
            KMode::Fixed { k } if k == 0 => {
                return Err(PlmmError::InvalidConfig("K must be >= 1".into()))
            }
            KMode::Auto { k_min, k_max } => {
                if k_min < 2 {
                    return Err(PlmmError::InvalidConfig("k_min must be >= 2".into()));
                }
                if k_max < k_min + 3 {
                    return Err(PlmmError::InvalidConfig(
                        "the L-method needs at least four candidate K values".into(),
                    ));
                }
            }
            _ => {}
        }
        if self.submodels.is_empty() {
            return Err(PlmmError::InvalidConfig(
                "at least one sub-model is required".into(),
            ));
        }
        let mut seen = self.submodels.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.submodels.len() {
            return Err(PlmmError::InvalidConfig(
                "duplicate sub-model in candidate set".into(),
            ));
        }
        if !(self.interpret_lo < 1.0 && 1.0 < self.interpret_hi) {
            return Err(PlmmError::InvalidConfig(
                "require interpret_lo < 1 < interpret_hi".into(),
            ));
        }
        if !(self.gamma_eps >= 0.0) {
            return Err(PlmmError::InvalidConfig("gamma_eps must be >= 0".into()));
        }
        self.em.validate()?;
        self.optimizer.validate()
    }
}

/// For each cluster of the later model, the index of its closest earlier cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMapping<T> {
    pub targets: Vec<usize>,
    pub skld: Vec<T>,
}

/// One row per candidate sub-model of a transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicEntry<T> {
    pub submodel: SubModel,
    pub loglik: T,
    pub nu: usize,
    pub bic: T,
}

/// `K×D` matrix over {-1, 0, +1}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterpretationMatrix {
    pub entries: Vec<Vec<i8>>,
}

impl InterpretationMatrix {
    pub fn zeros(k: usize, d: usize) -> Self {
        Self {
            entries: vec![vec![0; d]; k],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(|&v| v == 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochResult<T> {
    pub k: usize,
    pub model: MixtureModel<T>,
    pub resp: ResponsibilityMatrix<T>,
    pub labels: Vec<usize>,
    pub loglik: T,
    pub selected_submodel: Option<SubModel>,
    pub links: Option<LinkParameters<T>>,
    pub bic_table: Vec<BicEntry<T>>,
    pub mapping: Option<ClusterMapping<T>>,
    /// Previous-epoch rows the link was applied to, aligned with this epoch's clusters.
    pub source_components: Option<Vec<Vec<T>>>,
    /// Static BIC curve used to pick K (auto mode only).
    pub k_scores: Vec<(usize, T)>,
}

/// Static EM on `data_next` started from `model_t` (no small-EM).
pub fn predict_next<T: Real>(
    data_next: &[CountVector],
    model_t: &MixtureModel<T>,
    em: &EmConfig,
) -> Result<MixtureModel<T>> {
    Ok(run_em(data_next, model_t.clone(), em, em.max_iterations)?.model)
}

/// Lowest BIC wins; ties go to fewer free parameters, then `M1 < M3 < M4 < M2`.
pub fn select_submodel<T: Real>(fits: &[LinkFit<T>]) -> Result<SubModel> {
    let entries: Vec<BicEntry<T>> = fits.iter().map(bic_entry).collect();
    select_from_table(&entries)
}

fn bic_entry<T: Real>(fit: &LinkFit<T>) -> BicEntry<T> {
    BicEntry {
        submodel: fit.submodel,
        loglik: fit.loglik,
        nu: fit.submodel.free_params(fit.links.k(), fit.links.dim()),
        bic: fit.bic,
    }
}

pub fn select_from_table<T: Real>(entries: &[BicEntry<T>]) -> Result<SubModel> {
    let key = |e: &BicEntry<T>| {
        let b = if e.bic.is_nan() { T::infinity() } else { e.bic };
        (b, e.nu, e.submodel.tie_rank())
    };
    entries
        .iter()
        .min_by(|a, b| {
            let (ka, kb) = (key(a), key(b));
            ka.0.partial_cmp(&kb.0)
                .expect("NaN mapped to infinity")
                .then(ka.1.cmp(&kb.1))
                .then(ka.2.cmp(&kb.2))
        })
        .map(|e| e.submodel)
        .ok_or(PlmmError::EmptyData("no candidate sub-model fits"))
}

/// Root-mean-square residual of the least-squares line through `pts`.
fn line_rmse(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum();
    (sse / n).sqrt()
}

/// Knee of an evaluation curve by two-segment linear fitting.
///
/// For every split leaving at least two points per side, fits a line to each
/// side and weighs the two RMSEs by segment length. The knee is the last `K`
/// of the left segment of the best split; ties go to the earliest split.
pub fn select_num_clusters_lmethod<T: Real>(scores: &[(usize, T)]) -> Result<usize> {
    if scores.len() < 4 {
        return Err(PlmmError::TooFewSamples {
            needed: 4,
            got: scores.len(),
        });
    }
    let mut pts: Vec<(usize, f64)> = scores.iter().map(|&(k, v)| (k, v.as_f64())).collect();
    pts.sort_by_key(|p| p.0);
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(PlmmError::InvalidValue(
            "duplicate K in L-method curve".into(),
        ));
    }
    if pts.iter().any(|p| !p.1.is_finite()) {
        return Err(PlmmError::NonFiniteObjective);
    }
    let xy: Vec<(f64, f64)> = pts.iter().map(|&(k, v)| (k as f64, v)).collect();
    let b = xy.len() as f64;
    // Rounding noise must not break ties, so improvements are measured against the curve's spread.
    let (lo, hi) = xy
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| {
            (l.min(p.1), h.max(p.1))
        });
    let eps = 1e-12 * (hi - lo);
    let mut best = (f64::INFINITY, 0);
    for c in 2..=xy.len() - 2 {
        let cost =
            (c as f64 / b) * line_rmse(&xy[..c]) + ((b - c as f64) / b) * line_rmse(&xy[c..]);
        if cost < best.0 - eps {
            best = (cost, c);
        }
    }
    Ok(pts[best.1 - 1].0)
}

/// Matches every cluster of `theta_pred` to its minimum-sKLD cluster of `theta_t`.
pub fn map_clusters<T: Real>(
    theta_t: &MixtureModel<T>,
    theta_pred: &MixtureModel<T>,
) -> Result<ClusterMapping<T>> {
    if theta_t.dim() != theta_pred.dim() {
        return Err(PlmmError::DimensionMismatch {
            expected: theta_t.dim(),
            found: theta_pred.dim(),
        });
    }
    let mut targets = Vec::with_capacity(theta_pred.k());
    let mut values = Vec::with_capacity(theta_pred.k());
    for row in theta_pred.components() {
        let mut best = (T::infinity(), 0);
        for (i, old) in theta_t.components().iter().enumerate() {
            let s = skld(row, old)?;
            if s < best.0 {
                best = (s, i);
            }
        }
        targets.push(best.1);
        values.push(best.0.max(T::zero()));
    }
    Ok(ClusterMapping {
        targets,
        skld: values,
    })
}

fn sign_against<T: Real>(value: T, lo: T, hi: T) -> i8 {
    if value < lo {
        -1
    } else if value > hi {
        1
    } else {
        0
    }
}

/// Discretizes a fitted link into {-1, 0, +1} per cluster and feature.
///
/// M3 compares δ with `(interpret_lo, interpret_hi)` and M4 compares γ with
/// `±gamma_eps`. M2 carries no history so the ratio `mu_next / mu_t` is compared
/// with the δ thresholds instead. M1 is all zeros.
pub fn interpret_links<T: Real>(
    links: &LinkParameters<T>,
    submodel: SubModel,
    mu_t: &[Vec<T>],
    mu_next: &[Vec<T>],
    config: &PlmmConfig,
) -> Result<InterpretationMatrix> {
    let (k, d) = (links.k(), links.dim());
    let (lo, hi) = (T::of(config.interpret_lo), T::of(config.interpret_hi));
    let eps = T::of(config.gamma_eps);
    let mut out = InterpretationMatrix::zeros(k, d);
    match submodel {
        SubModel::M1 => {}
        SubModel::M3 => {
            for (row, deltas) in out.entries.iter_mut().zip(links.delta()) {
                for (e, &v) in row.iter_mut().zip(deltas) {
                    *e = sign_against(v, lo, hi);
                }
            }
        }
        SubModel::M4 => {
            for (row, gammas) in out.entries.iter_mut().zip(links.gamma()) {
                for (e, &v) in row.iter_mut().zip(gammas) {
                    *e = sign_against(v, -eps, eps);
                }
            }
        }
        SubModel::M2 => {
            if mu_t.len() != k || mu_next.len() != k {
                return Err(PlmmError::DimensionMismatch {
                    expected: k,
                    found: mu_t.len().min(mu_next.len()),
                });
            }
            for (i, row) in out.entries.iter_mut().enumerate() {
                if mu_t[i].len() != d || mu_next[i].len() != d {
                    return Err(PlmmError::DimensionMismatch {
                        expected: d,
                        found: mu_t[i].len().min(mu_next[i].len()),
                    });
                }
                for (j, e) in row.iter_mut().enumerate() {
                    let floor = T::of(T::PROB_FLOOR);
                    let ratio = mu_next[i][j].max(floor) / mu_t[i][j].max(floor);
                    *e = sign_against(ratio, lo, hi);
                }
            }
        }
    }
    Ok(out)
}

/// Interpretation of a fitted epoch, or `None` for the first one.
pub fn interpret_epoch<T: Real>(
    epoch: &EpochResult<T>,
    config: &PlmmConfig,
) -> Result<Option<InterpretationMatrix>> {
    match (
        &epoch.links,
        epoch.selected_submodel,
        &epoch.source_components,
    ) {
        (Some(links), Some(sm), Some(src)) => {
            interpret_links(links, sm, src, epoch.model.components(), config).map(Some)
        }
        _ => Ok(None),
    }
}

/// Seed for the static sweep at epoch `t`; epoch 0 uses the configured seed itself.
fn epoch_seed(seed: u64, t: usize) -> u64 {
    seed.wrapping_add((t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Static fits over the auto-K range and their BIC curve.
fn static_sweep<T: Real>(
    data: &[CountVector],
    k_min: usize,
    k_max: usize,
    em: &EmConfig,
) -> Result<Vec<(usize, EmFit<T>, T)>> {
    let d = data[0].dim();
    let n = data.len();
    let ks: Vec<usize> = (k_min..=k_max.min(n)).collect();
    if ks.len() < 4 {
        return Err(PlmmError::TooFewSamples {
            needed: k_min + 3,
            got: n,
        });
    }
    ks.into_par_iter()
        .map(|k| {
            let fit = fit_mm_em::<T>(data, k, em)?;
            let nu = (k - 1) + k * (d - 1);
            let score = bic(fit.loglik, nu, n);
            Ok((k, fit, score))
        })
        .collect()
}

fn first_epoch<T: Real>(data: &[CountVector], config: &PlmmConfig) -> Result<EpochResult<T>> {
    let (fit, k_scores) = match config.k_mode {
        KMode::Fixed { k } => (fit_mm_em::<T>(data, k, &config.em)?, Vec::new()),
        KMode::Auto { k_min, k_max } => {
            let sweep = static_sweep::<T>(data, k_min, k_max, &config.em)?;
            let scores: Vec<(usize, T)> = sweep.iter().map(|(k, _, s)| (*k, *s)).collect();
            let k = select_num_clusters_lmethod(&scores)?;
            let fit = sweep
                .into_iter()
                .find(|(kk, _, _)| *kk == k)
                .expect("knee is a swept K")
                .1;
            (fit, scores)
        }
    };
    Ok(EpochResult {
        k: fit.model.k(),
        labels: map_assign(&fit.resp),
        model: fit.model,
        resp: fit.resp,
        loglik: fit.loglik,
        selected_submodel: None,
        links: None,
        bic_table: Vec::new(),
        mapping: None,
        source_components: None,
        k_scores,
    })
}

/// One transition from `prev` to the epoch holding `data`.
fn transition<T: Real>(
    t: usize,
    data: &[CountVector],
    prev: &MixtureModel<T>,
    config: &PlmmConfig,
) -> Result<EpochResult<T>> {
    let (pred, mu_t, mapping, k_scores) = match config.k_mode {
        KMode::Fixed { k } => {
            if data.len() < k {
                return Err(PlmmError::TooFewSamples {
                    needed: k,
                    got: data.len(),
                });
            }
            let pred = predict_next(data, prev, &config.em)?;
            (pred, prev.components().to_vec(), None, Vec::new())
        }
        KMode::Auto { k_min, k_max } => {
            let em = EmConfig {
                rng_seed: epoch_seed(config.em.rng_seed, t),
                ..config.em.clone()
            };
            let sweep = static_sweep::<T>(data, k_min, k_max, &em)?;
            let scores: Vec<(usize, T)> = sweep.iter().map(|(k, _, s)| (*k, *s)).collect();
            let k_next = select_num_clusters_lmethod(&scores)?;
            let (pred, mu_t) = if k_next == prev.k() {
                (
                    predict_next(data, prev, &config.em)?,
                    prev.components().to_vec(),
                )
            } else {
                let pred = sweep
                    .into_iter()
                    .find(|(k, _, _)| *k == k_next)
                    .expect("knee is a swept K")
                    .1
                    .model;
                let map = map_clusters(prev, &pred)?;
                let aligned = map
                    .targets
                    .iter()
                    .map(|&i| prev.component(i).to_vec())
                    .collect();
                (pred, aligned)
            };
            let mapping = map_clusters(prev, &pred)?;
            (pred, mu_t, Some(mapping), scores)
        }
    };

    let fits: Vec<Result<LinkFit<T>>> = config
        .submodels
        .par_iter()
        .map(|&sm| {
            let init = init_link_params(&mu_t, pred.components(), sm)?;
            estimate_link_em(
                data,
                &mu_t,
                pred.weights(),
                &init.links,
                sm,
                &config.em,
                &config.optimizer,
            )
        })
        .collect();
    let fits = fits.into_iter().collect::<Result<Vec<_>>>()?;
    let bic_table: Vec<BicEntry<T>> = fits.iter().map(bic_entry).collect();
    let chosen = select_from_table(&bic_table)?;
    let best = fits
        .into_iter()
        .find(|f| f.submodel == chosen)
        .expect("selected sub-model was fitted");
    Ok(EpochResult {
        k: best.model_next.k(),
        labels: map_assign(&best.resp),
        model: best.model_next,
        resp: best.resp,
        loglik: best.loglik,
        selected_submodel: Some(chosen),
        links: Some(best.links),
        bic_table,
        mapping,
        source_components: Some(mu_t),
        k_scores,
    })
}

/// Fixed-K transition fit of `data` from the previous epoch's model.
pub fn fit_transition<T: Real>(
    data: &[CountVector],
    previous: &MixtureModel<T>,
    config: &PlmmConfig,
) -> Result<EpochResult<T>> {
    let config = PlmmConfig {
        k_mode: KMode::Fixed { k: previous.k() },
        ..config.clone()
    };
    config.validate()?;
    transition(1, data, previous, &config)
}

/// Fits the whole temporal dataset.
pub fn plmm_fit<T: Real>(
    dataset: &TemporalDataset,
    config: &PlmmConfig,
) -> Result<Vec<EpochResult<T>>> {
    config.validate()?;
    let mut results: Vec<EpochResult<T>> = Vec::with_capacity(dataset.num_epochs());
    for (t, data) in dataset.epochs().iter().enumerate() {
        let epoch = match results.last() {
            None => first_epoch(data, config)?,
            Some(prev) => transition(t, data, &prev.model, config)?,
        };
        results.push(epoch);
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mm(rows: Vec<Vec<f64>>) -> MixtureModel<f64> {
        MixtureModel::with_uniform_weights(rows).unwrap()
    }

    #[test]
    fn lmethod_two_line_knee() {
        let curve: Vec<(usize, f64)> = (2..=9)
            .map(|k| {
                let v = if k <= 3 {
                    100.0 - 40.0 * (k as f64 - 2.0)
                } else {
                    60.0 - 2.0 * (k as f64 - 3.0)
                };
                (k, v)
            })
            .collect();
        assert_eq!(select_num_clusters_lmethod(&curve).unwrap(), 3);
        let scaled: Vec<(usize, f64)> = curve.iter().map(|&(k, v)| (k, 7.0 - 0.25 * v)).collect();
        assert_eq!(select_num_clusters_lmethod(&scaled).unwrap(), 3);
    }

    #[test]
    fn lmethod_collinear_and_errors() {
        let line: Vec<(usize, f64)> = (2..=9).map(|k| (k, 3.0 * k as f64)).collect();
        assert_eq!(select_num_clusters_lmethod(&line).unwrap(), 3);
        assert!(select_num_clusters_lmethod(&line[..3]).is_err());
        let dup = vec![(2, 1.0), (3, 2.0), (3, 3.0), (4, 1.0)];
        assert!(select_num_clusters_lmethod(&dup).is_err());
    }

    #[test]
    fn mapping_examples() {
        let t = mm(vec![
            vec![0.8, 0.1, 0.1],
            vec![0.1, 0.8, 0.1],
            vec![0.1, 0.1, 0.8],
        ]);
        let same = map_clusters(&t, &t).unwrap();
        assert_eq!(same.targets, vec![0, 1, 2]);
        assert!(same.skld.iter().all(|&s| s == 0.0));

        let perm = mm(vec![
            vec![0.1, 0.1, 0.8],
            vec![0.8, 0.1, 0.1],
            vec![0.1, 0.8, 0.1],
        ]);
        assert_eq!(map_clusters(&t, &perm).unwrap().targets, vec![2, 0, 1]);

        let pred = mm(vec![vec![0.7, 0.2, 0.1], vec![0.75, 0.1, 0.15]]);
        assert_eq!(map_clusters(&t, &pred).unwrap().targets, vec![0, 0]);
    }

    fn fit_with(sm: SubModel, bic: f64, k: usize, d: usize) -> BicEntry<f64> {
        BicEntry {
            submodel: sm,
            loglik: 0.0,
            nu: sm.free_params(k, d),
            bic,
        }
    }

    #[test]
    fn selection_tie_breaks() {
        let table = vec![
            fit_with(SubModel::M4, 10.0, 2, 3),
            fit_with(SubModel::M1, 10.0, 2, 3),
        ];
        assert_eq!(select_from_table(&table).unwrap(), SubModel::M1);
        let table = vec![
            fit_with(SubModel::M2, 5.0, 2, 3),
            fit_with(SubModel::M4, 5.0, 2, 3),
            fit_with(SubModel::M3, 5.0, 2, 3),
        ];
        assert_eq!(select_from_table(&table).unwrap(), SubModel::M3);
        let table = vec![
            fit_with(SubModel::M2, 4.0, 2, 3),
            fit_with(SubModel::M1, f64::NAN, 2, 3),
        ];
        assert_eq!(select_from_table(&table).unwrap(), SubModel::M2);
        assert!(select_from_table::<f64>(&[]).is_err());
    }

    #[test]
    fn interpretation_rules() {
        let cfg = PlmmConfig::default();
        let mu = vec![vec![0.5, 0.3, 0.2]];
        let id = LinkParameters::<f64>::identity(1, 3);
        assert!(interpret_links(&id, SubModel::M1, &mu, &mu, &cfg)
            .unwrap()
            .is_zero());
        assert!(interpret_links(&id, SubModel::M3, &mu, &mu, &cfg)
            .unwrap()
            .is_zero());

        let m3 = LinkParameters::new(vec![vec![0.5, 1.0, 1.5]], vec![vec![0.0; 3]]).unwrap();
        let out = interpret_links(&m3, SubModel::M3, &mu, &mu, &cfg).unwrap();
        assert_eq!(out.entries, vec![vec![-1, 0, 1]]);

        let m4 = LinkParameters::new(vec![vec![1.0; 3]], vec![vec![-0.5, 0.05, 0.3]]).unwrap();
        let out = interpret_links(&m4, SubModel::M4, &mu, &mu, &cfg).unwrap();
        assert_eq!(out.entries, vec![vec![-1, 0, 1]]);

        let m2 = LinkParameters::new(vec![vec![0.0; 3]], vec![vec![0.0; 3]]).unwrap();
        let next = vec![vec![0.3, 0.31, 0.39]];
        let out = interpret_links(&m2, SubModel::M2, &mu, &next, &cfg).unwrap();
        assert_eq!(out.entries, vec![vec![-1, 0, 1]]);
    }

    #[test]
    fn config_validation() {
        PlmmConfig::default().validate().unwrap();
        PlmmConfig::fixed(3).validate().unwrap();
        assert!(PlmmConfig::fixed(0).validate().is_err());
        let mut c = PlmmConfig::default();
        c.k_mode = KMode::Auto { k_min: 1, k_max: 9 };
        assert!(c.validate().is_err());
        c.k_mode = KMode::Auto { k_min: 3, k_max: 5 };
        assert!(c.validate().is_err());
        let mut c = PlmmConfig::default();
        c.interpret_lo = 1.0;
        assert!(c.validate().is_err());
        let mut c = PlmmConfig::default();
        c.submodels = vec![SubModel::M1, SubModel::M1];
        assert!(c.validate().is_err());
    }
}
