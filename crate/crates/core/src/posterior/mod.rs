//! Posterior over `(α, γ, G_EXC, Y_EXC)` given an observation.
//!
//! The posterior is a mixture over graph completions: completions and the
//! graph parameter are weighted by `p(G | α) p(α) p(I | G)`, and given a
//! completion the response parameters and missing responses follow
//! `p(Y | G, γ) p(γ)`. The chain realizes the mixture by imputing the
//! completion and then updating `(Y_EXC, γ)` on it.

mod chain;
mod completion;
mod exact;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::graph::{Graph, GraphPrior};
use crate::mrf::{GammaPrior, MrfParams, ResponseSampler, ResponseVector};

pub use chain::{posterior_sample, ChainState, Sampler};
pub use completion::{CompletionSpace, MAX_ENUM_FREE_PAIRS};
pub(crate) use exact::{exact_posterior_without_estimand, gamma_cells};
pub use exact::{exact_posterior, nearest, tv_distance, ExactPosterior, GRID_POINTS, MAX_EXACT_NODES};

/// How posterior draws are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InferenceMode {
    #[default]
    Mcmc,
    /// Independent draws from the exact posterior table (tiny `N` only).
    ExactOracle,
}

/// Chain controls and priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceConfig {
    pub n_total: usize,
    pub burn_in: usize,
    pub n_draws: usize,
    pub thinning: usize,
    pub graph_prior: GraphPrior,
    pub gamma_prior: GammaPrior,
    pub mode: InferenceMode,
    /// Alternating-walk moves per iteration; 0 means `N`.
    pub graph_moves: usize,
    /// Longest alternating walk proposed.
    pub max_walk: usize,
    /// `(Y_EXC, γ)` updates per graph update.
    pub inner_steps: usize,
    /// Random-walk standard deviation of the `γ` proposal.
    pub gamma_step: f64,
    /// Sampler for the auxiliary draw of the exchange update and for `Y_AUG`.
    pub aux_sampler: ResponseSampler,
    /// Keep the completed graph in every draw.
    pub keep_graphs: bool,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            n_total: 0,
            burn_in: 500,
            n_draws: 1000,
            thinning: 1,
            graph_prior: GraphPrior::BetaEr { tau1: 1.0, tau2: 1.0 },
            gamma_prior: GammaPrior::default(),
            mode: InferenceMode::Mcmc,
            graph_moves: 0,
            max_walk: 16,
            inner_steps: 3,
            gamma_step: 0.3,
            aux_sampler: ResponseSampler::default(),
            keep_graphs: false,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_total == 0 {
            return param("n_total must be positive");
        }
        if self.n_draws == 0 {
            return param("n_draws must be at least 1");
        }
        if self.thinning == 0 {
            return param("thinning must be at least 1");
        }
        if self.inner_steps == 0 {
            return param("inner_steps must be at least 1");
        }
        if self.max_walk == 0 {
            return param("max_walk must be at least 1");
        }
        if !(self.gamma_step > 0.0 && self.gamma_step.is_finite()) {
            return param("gamma_step must be positive");
        }
        if self.mode == InferenceMode::ExactOracle && self.n_total > MAX_EXACT_NODES {
            return param(format!("exact oracle mode needs n_total <= {MAX_EXACT_NODES}"));
        }
        self.graph_prior.validate()?;
        self.graph_prior.require_er()?;
        self.gamma_prior.validate()
    }
}

/// Which quantity of interest a loss is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Mean of a fresh response vector simulated at the drawn parameters.
    Estimation,
    /// Mean of the completed response vector `(Y_INC, Y_EXC)`.
    #[default]
    Prediction,
}

/// One posterior draw.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraw {
    pub alpha: f64,
    pub gamma: MrfParams,
    /// Completed graph, when requested.
    pub graph: Option<Graph>,
    /// Completed response vector.
    pub y: ResponseVector,
    pub q_est: f64,
    pub q_pred: f64,
}

impl PosteriorDraw {
    pub fn q(&self, target: Target) -> f64 {
        match target {
            Target::Estimation => self.q_est,
            Target::Prediction => self.q_pred,
        }
    }
}
