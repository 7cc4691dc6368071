//! Scoring designs: losses, Lindley design loss, frequentist risk,
//! compression scores, entropies and the Goel–DeGroot information.

mod compression;
mod entropy;
mod goel;
mod lindley;
mod loss;

pub use compression::{
    completion_hellinger_exact, completion_hellinger_mc, psi, psi_exact, psi_star, psi_star_exact, AlphaMixture,
    CompressionConfig, Spread,
};
pub use entropy::{compression_bound, entropy_er, entropy_sbm};
pub use goel::{goel_degroot_j, goel_degroot_j_mc, GdScope};
pub use lindley::{
    exact_design_loss, exact_frequentist_risk, frequentist_risk, hellinger_intrinsic_loss, lindley_design_loss,
    optimal_design, predictive_q_table, prior_predictive_q, DesignScore, Estimate, EvalConfig, ReplicateFailure,
    ReplicateRecord,
    WorldPrior,
};
pub use loss::{
    bayes_rule, bayes_rule_pmf, expected_posterior_loss, expected_posterior_loss_pmf, hellinger, kl_divergence,
    kl_predictive_loss, loss_value, lower_quantile, mean_se, q_histogram, LossSpec,
};
pub(crate) use lindley::{enumerate_outcomes, exact_q_law, q_support, score_world, world_from_prior};
