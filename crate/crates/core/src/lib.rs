//! Evolutionary clustering of temporal count data with multinomial mixtures
//! tied across epochs by a probit-space parametric link.
//!
//! Numeric routines are generic over [`Real`] (`f64` or `f32`); the aliases at
//! the bottom of this file fix the common `f64` instantiations.

pub mod error;
pub mod eval;
pub mod evolve;
pub mod io;
pub mod link;
pub mod mm;
pub mod optim;
pub mod probit;
pub mod scalar;
pub mod synth;

pub use error::{PlmmError, Result};
pub use eval::{
    adjusted_rand_index, kfold_perplexity, model_selection_rates, perplexity, EvalReport, Trainer,
};
pub use evolve::{
    interpret_links, map_clusters, plmm_fit, predict_next, select_num_clusters_lmethod,
    select_submodel, ClusterMapping, EpochResult, InterpretationMatrix, KMode, PlmmConfig,
};
pub use link::{
    apply_link, bic, estimate_link_em, init_link_params, LinkFit, LinkParameters, SubModel,
};
pub use mm::{
    e_step, fit_mm_em, m_step_static, map_assign, mixture_log_likelihood, multinomial_log_pmf,
    skld, small_em_init, CountVector, EmConfig, EmFit, MixtureModel, ResponsibilityMatrix,
    TemporalDataset,
};
pub use optim::{
    componentwise_alternate, nelder_mead_minimize, BlockMode, Bounds, Minimum, OptimizerConfig,
};
pub use probit::{log_std_normal_cdf, std_normal_cdf, std_normal_quantile};
pub use scalar::Real;
pub use synth::{generate_benchmark, Regime, SynthConfig, SynthGroundTruth};

pub type MixtureModelF64 = MixtureModel<f64>;
pub type MixtureModelF32 = MixtureModel<f32>;
pub type LinkParametersF64 = LinkParameters<f64>;
pub type LinkFitF64 = LinkFit<f64>;
pub type EpochResultF64 = EpochResult<f64>;
pub type ResponsibilityMatrixF64 = ResponsibilityMatrix<f64>;
