//! Synthetic temporal count data with known clusters and links.
//!
//! Initial components are Dirichlet(1) rows redrawn until every pair is at least
//! `separation_min` apart in sKLD. Later epochs evolve the rows through a randomly
//! drawn link. Observations pick a cluster uniformly, draw an order
//! `τ ~ Poisson(V)` conditioned on `τ ≥ 1`, then draw counts from a Multinomial.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{PlmmError, Result};
use crate::link::{apply_link, LinkParameters, SubModel};
use crate::mm::{dirichlet_ones, skld, CountVector, MixtureModel, TemporalDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// High order, `V ≈ 1.5·D`, M4 links, noisy counts.
    Hos,
    /// Low order, `V ≈ 0.7·D`, links drawn from M1/M3/M4.
    Los,
    /// Order, noise and link family taken from the config as given.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub regime: Regime,
    pub dim: usize,
    pub k: usize,
    pub epoch_sizes: Vec<usize>,
    pub order_scale: f64,
    pub separation_min: f64,
    pub max_attempts: usize,
    pub link_delta_range: (f64, f64),
    pub link_gamma_range: (f64, f64),
    pub noise_rate: f64,
    /// Link families drawn from in the custom regime.
    pub submodels: Vec<SubModel>,
    /// Leave one cluster out of one epoch of a randomly chosen consecutive pair.
    pub remove_cluster: bool,
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self::hos(10)
    }
}

impl SynthConfig {
    pub fn hos(dim: usize) -> Self {
        Self {
            regime: Regime::Hos,
            dim,
            k: 3,
            epoch_sizes: vec![500, 100, 200],
            order_scale: 1.5,
            separation_min: 1.0,
            max_attempts: 1000,
            link_delta_range: (0.5, 2.0),
            link_gamma_range: (-0.8, 0.8),
            noise_rate: 0.1,
            submodels: vec![SubModel::M4],
            remove_cluster: false,
            rng_seed: 0,
        }
    }

    pub fn los(dim: usize) -> Self {
        Self {
            regime: Regime::Los,
            epoch_sizes: vec![50, 40, 40, 30, 20],
            order_scale: 0.7,
            noise_rate: 0.0,
            submodels: vec![SubModel::M1, SubModel::M3, SubModel::M4],
            ..Self::hos(dim)
        }
    }

    /// Two epochs of size `n`, one of them missing a cluster.
    pub fn varying_k(dim: usize, n: usize) -> Self {
        Self {
            epoch_sizes: vec![n, n],
            remove_cluster: true,
            ..Self::hos(dim)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PlmmError::InvalidConfig(m.into()));
        if self.dim < 2 {
            return bad("dim must be >= 2");
        }
        if self.k == 0 {
            return bad("k must be >= 1");
        }
        if self.epoch_sizes.is_empty() || self.epoch_sizes.contains(&0) {
            return bad("epoch_sizes must be non-empty and positive");
        }
        if self.regime == Regime::Hos && self.epoch_sizes.iter().any(|&n| n < self.k) {
            return bad("every hos epoch needs at least k samples");
        }
        if !(self.order_scale > 0.0) {
            return bad("order_scale must be > 0");
        }
        if !(self.separation_min >= 0.0) || self.max_attempts == 0 {
            return bad("separation_min must be >= 0 and max_attempts >= 1");
        }
        let (dl, dh) = self.link_delta_range;
        if !(0.0 < dl && dl <= dh) {
            return bad("link_delta_range must satisfy 0 < lo <= hi");
        }
        let (gl, gh) = self.link_gamma_range;
        if !(gl <= gh && gl >= -2.5 && gh <= 2.5) {
            return bad("link_gamma_range must be ordered and inside [-2.5, 2.5]");
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return bad("noise_rate must lie in [0, 1]");
        }
        if self.regime == Regime::Custom && self.submodels.is_empty() {
            return bad("custom regime needs at least one sub-model");
        }
        if self.remove_cluster && (self.k < 2 || self.epoch_sizes.len() < 2) {
            return bad("cluster removal needs k >= 2 and at least two epochs");
        }
        Ok(())
    }

    /// Poisson mean of the observation order.
    pub fn order_mean(&self) -> f64 {
        self.order_scale * self.dim as f64
    }

    fn link_families(&self) -> Vec<SubModel> {
        match self.regime {
            Regime::Hos => vec![SubModel::M4],
            Regime::Los => vec![SubModel::M1, SubModel::M3, SubModel::M4],
            Regime::Custom => self.submodels.clone(),
        }
    }
}

/// The cluster left out of one epoch of the varying-K benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovedCluster {
    /// The only epoch sampled without the cluster.
    pub epoch: usize,
    /// Row index of the cluster in the full model.
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthGroundTruth {
    pub dataset: TemporalDataset,
    pub labels: Vec<Vec<usize>>,
    pub true_models: Vec<MixtureModel<f64>>,
    pub true_submodels: Vec<SubModel>,
    /// Links of transition `t → t+1`, defined on the full `K`-row models. They act
    /// on `true_models[t]` directly except around the epoch named in `removed`.
    pub true_links: Vec<LinkParameters<f64>>,
    pub removed: Option<RemovedCluster>,
}

/// Dirichlet(1) rows with uniform weights, redrawn until well separated.
pub fn sample_initial_mm<R: Rng>(config: &SynthConfig, rng: &mut R) -> Result<MixtureModel<f64>> {
    config.validate()?;
    for _ in 0..config.max_attempts {
        let rows: Vec<Vec<f64>> = (0..config.k)
            .map(|_| dirichlet_ones(config.dim, rng))
            .collect();
        if min_pairwise_skld(&rows)? >= config.separation_min {
            return MixtureModel::with_uniform_weights(rows);
        }
    }
    Err(PlmmError::SeparationUnreachable {
        attempts: config.max_attempts,
        separation: config.separation_min,
    })
}

/// Smallest sKLD over all pairs of rows; infinite for a single row.
pub fn min_pairwise_skld(rows: &[Vec<f64>]) -> Result<f64> {
    let mut min = f64::INFINITY;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            min = min.min(skld(&rows[i], &rows[j])?);
        }
    }
    Ok(min)
}

/// Draws a link family and its parameters, then evolves `mu_t`.
pub fn evolve_params<R: Rng>(
    mu_t: &[Vec<f64>],
    config: &SynthConfig,
    rng: &mut R,
) -> Result<(Vec<Vec<f64>>, SubModel, LinkParameters<f64>)> {
    let k = mu_t.len();
    let d = mu_t.first().map_or(0, Vec::len);
    let families = config.link_families();
    let submodel = *families
        .choose(rng)
        .ok_or(PlmmError::InvalidConfig("no link family".into()))?;
    let (dl, dh) = config.link_delta_range;
    let (gl, gh) = config.link_gamma_range;
    let mut draw = |lo: f64, hi: f64| {
        if lo < hi {
            rng.random_range(lo..hi)
        } else {
            lo
        }
    };
    let mut delta = vec![vec![1.0; d]; k];
    let mut gamma = vec![vec![0.0; d]; k];
    for i in 0..k {
        for j in 0..d {
            match submodel {
                SubModel::M1 => {}
                SubModel::M2 => {
                    delta[i][j] = 0.0;
                    gamma[i][j] = draw(gl, gh);
                }
                SubModel::M3 => delta[i][j] = draw(dl, dh),
                SubModel::M4 => gamma[i][j] = draw(gl, gh),
            }
        }
    }
    let links = LinkParameters::new(delta, gamma)?;
    let mu_next = if submodel == SubModel::M1 {
        mu_t.to_vec()
    } else {
        apply_link(mu_t, &links)?
    };
    Ok((mu_next, submodel, links))
}

/// Counts of `tau` trials over `probs`, by sequential conditional binomials.
fn multinomial<R: Rng>(tau: u64, probs: &[f64], rng: &mut R) -> Vec<u32> {
    let mut out = vec![0u32; probs.len()];
    let mut left = tau;
    let mut mass = 1.0;
    for (j, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if j + 1 == probs.len() {
            out[j] = left as u32;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let x = Binomial::new(left, q).expect("q in [0, 1]").sample(rng);
        out[j] = x as u32;
        left -= x;
        mass -= p;
    }
    out
}

/// Draws `n` observations; cluster choice is uniform over the model's clusters.
pub fn sample_epoch<R: Rng>(
    model: &MixtureModel<f64>,
    n: usize,
    orders: &[f64],
    rng: &mut R,
) -> Result<(Vec<CountVector>, Vec<usize>)> {
    if n == 0 {
        return Err(PlmmError::InvalidValue("epoch size must be >= 1".into()));
    }
    if orders.len() != model.k() {
        return Err(PlmmError::DimensionMismatch {
            expected: model.k(),
            found: orders.len(),
        });
    }
    let poissons = orders
        .iter()
        .map(|&v| {
            if v >= 1.0 {
                Poisson::new(v).map_err(|e| PlmmError::InvalidValue(e.to_string()))
            } else {
                Err(PlmmError::InvalidValue(format!(
                    "cluster order {v} must be >= 1"
                )))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut data = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let z = rng.random_range(0..model.k());
        let tau = loop {
            let t = poissons[z].sample(rng) as u64;
            if t >= 1 {
                break t;
            }
        };
        data.push(CountVector::new(multinomial(tau, model.component(z), rng))?);
        labels.push(z);
    }
    Ok((data, labels))
}

/// Adds one count in a uniformly chosen dimension to each sample with probability `rate`.
fn add_noise<R: Rng>(data: Vec<CountVector>, rate: f64, rng: &mut R) -> Result<Vec<CountVector>> {
    data.into_iter()
        .map(|x| {
            if rate > 0.0 && rng.random_bool(rate) {
                let mut c = x.counts().to_vec();
                let j = rng.random_range(0..c.len());
                c[j] += 1;
                CountVector::new(c)
            } else {
                Ok(x)
            }
        })
        .collect()
}

/// Full benchmark: initial model, evolution per transition, observations and truth.
pub fn generate_benchmark<R: Rng>(config: &SynthConfig, rng: &mut R) -> Result<SynthGroundTruth> {
    config.validate()?;
    let epochs = config.epoch_sizes.len();
    let removed = if config.remove_cluster {
        let first = rng.random_range(0..epochs - 1);
        Some(RemovedCluster {
            epoch: first + usize::from(rng.random_bool(0.5)),
            cluster: rng.random_range(0..config.k),
        })
    } else {
        None
    };
    let noise = match config.regime {
        Regime::Los => 0.0,
        _ => config.noise_rate,
    };

    let mut full = sample_initial_mm(config, rng)?;
    let mut true_models = Vec::with_capacity(epochs);
    let mut true_submodels = Vec::new();
    let mut true_links = Vec::new();
    let mut data_epochs = Vec::with_capacity(epochs);
    let mut labels = Vec::with_capacity(epochs);
    for (t, &n) in config.epoch_sizes.iter().enumerate() {
        if t > 0 {
            let (rows, sm, links) = evolve_params(full.components(), config, rng)?;
            true_submodels.push(sm);
            true_links.push(links);
            full = MixtureModel::with_uniform_weights(rows)?;
        }
        let model = match removed.filter(|r| r.epoch == t) {
            Some(r) => {
                let mut rows = full.components().to_vec();
                rows.remove(r.cluster);
                MixtureModel::with_uniform_weights(rows)?
            }
            None => full.clone(),
        };
        let orders = vec![config.order_mean(); model.k()];
        let (data, z) = sample_epoch(&model, n, &orders, rng)?;
        data_epochs.push(add_noise(data, noise, rng)?);
        labels.push(z);
        true_models.push(model);
    }
    Ok(SynthGroundTruth {
        dataset: TemporalDataset::new(data_epochs)?,
        labels,
        true_models,
        true_submodels,
        true_links,
        removed,
    })
}

/// [`generate_benchmark`] driven by a generator seeded from `config.rng_seed`.
pub fn generate_seeded(config: &SynthConfig) -> Result<SynthGroundTruth> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    generate_benchmark(config, &mut rng)
}
