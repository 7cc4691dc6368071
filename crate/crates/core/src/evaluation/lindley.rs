//! Monte Carlo design losses and risks, with exhaustive counterparts for
//! tiny populations.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{
    bayes_rule, bayes_rule_pmf, expected_posterior_loss, expected_posterior_loss_pmf, hellinger, kl_predictive_loss,
    loss_value, mean_se, q_histogram, LossSpec,
};
use crate::design::{enumerate_traces, observed_data, run_design, run_design_from_seeds, DesignSpec, ObservedData};
use crate::error::{param, Error, Result};
use crate::graph::{enumerate_graphs, gen_er, gen_graph, pair_count, Graph, GraphModel, GraphPrior};
use crate::mrf::{stat_energy, suff_stats, GammaPrior, MrfParams, ResponseSampler, ResponseVector, StatCounts};
use crate::posterior::{
    exact_posterior, exact_posterior_without_estimand, gamma_cells, posterior_sample, InferenceConfig, InferenceMode,
    PosteriorDraw, Target, MAX_EXACT_NODES,
};
use crate::rng::stream;

/// Mean with Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let (mean, se) = mean_se(xs);
        Self { mean, se }
    }

    /// Whether the `±z·SE` intervals of two estimates overlap.
    pub fn overlaps(&self, other: &Estimate, z: f64) -> bool {
        (self.mean - other.mean).abs() <= z * (self.se + other.se)
    }
}

/// Law from which simulated populations are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldPrior {
    pub graph: GraphPrior,
    pub gamma: GammaPrior,
    pub sampler: ResponseSampler,
}

impl Default for WorldPrior {
    fn default() -> Self {
        Self {
            graph: GraphPrior::BetaEr { tau1: 1.0, tau2: 1.0 },
            gamma: GammaPrior::default(),
            sampler: ResponseSampler::default(),
        }
    }
}

/// Everything needed to score a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub inference: InferenceConfig,
    pub world: WorldPrior,
    pub loss: LossSpec,
    pub target: Target,
    /// Posterior draws behind each fixed-parameter predictive table when it
    /// is simulated.
    pub table_draws: usize,
    /// Prior simulations behind the simulated prior predictive of `Q`.
    pub prior_draws: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            inference: InferenceConfig::default(),
            world: WorldPrior::default(),
            loss: LossSpec::Quadratic,
            target: Target::Prediction,
            table_draws: 400,
            prior_draws: 20_000,
        }
    }
}

impl EvalConfig {
    pub fn n_total(&self) -> usize {
        self.inference.n_total
    }

    pub fn validate(&self) -> Result<()> {
        self.inference.validate()?;
        self.world.graph.validate()?;
        self.world.gamma.validate()?;
        self.loss.validate()?;
        if self.loss == LossSpec::HellingerIntrinsic {
            self.world.graph.require_er()?;
            if self.table_draws == 0 {
                return param("table_draws must be positive");
            }
        }
        if self.loss == LossSpec::KlPredictive && self.prior_draws == 0 {
            return param("prior_draws must be positive");
        }
        Ok(())
    }
}

/// Outcome of one simulated replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub sample_size: usize,
    /// Bayes action, or the posterior mean of `Q` for table losses.
    pub estimate: f64,
    /// Realized population mean of the responses.
    pub truth: f64,
    pub loss: f64,
    pub sq_error: f64,
}

/// Aggregated score of one design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignScore {
    pub design: DesignSpec,
    pub loss: Estimate,
    pub mse: Estimate,
    pub replicates: Vec<ReplicateRecord>,
    /// Replicates whose simulation or inference failed; they are left out
    /// of the estimates.
    #[serde(default)]
    pub failures: Vec<ReplicateFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub error: String,
}

impl DesignScore {
    fn from_records(design: &DesignSpec, (replicates, failures): (Vec<ReplicateRecord>, Vec<ReplicateFailure>)) -> Self {
        let l: Vec<f64> = replicates.iter().map(|r| r.loss).collect();
        let m: Vec<f64> = replicates.iter().map(|r| r.sq_error).collect();
        Self {
            design: design.clone(),
            loss: Estimate::from_samples(&l),
            mse: Estimate::from_samples(&m),
            replicates,
            failures,
        }
    }
}

/// True parameters of one simulated population.
pub(crate) struct World {
    pub(crate) g: Graph,
    pub(crate) y: ResponseVector,
    alpha: Option<f64>,
    gamma: MrfParams,
}

pub(crate) fn q_support(n: usize) -> Vec<f64> {
    (0..=n).map(|k| k as f64 / n as f64).collect()
}

fn point_config(cfg: &EvalConfig, alpha: f64, gamma: MrfParams) -> InferenceConfig {
    InferenceConfig {
        graph_prior: GraphPrior::PointMass { model: GraphModel::ErdosRenyi { alpha } },
        gamma_prior: GammaPrior::point(gamma),
        n_draws: cfg.table_draws,
        mode: InferenceMode::Mcmc,
        ..cfg.inference.clone()
    }
}

/// Law of `Q = mean(Y_INC, Y_EXC)` given the observation and fixed
/// parameters; exact for `N ≤ 6`, otherwise a histogram of chain draws.
pub fn predictive_q_table<R: Rng + ?Sized>(
    obs: &ObservedData,
    alpha: f64,
    gamma: MrfParams,
    cfg: &EvalConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let icfg = point_config(cfg, alpha, gamma);
    let n = cfg.n_total();
    if n <= MAX_EXACT_NODES {
        return Ok(exact_posterior_without_estimand(obs, &icfg)?.q_pred);
    }
    let qs: Vec<f64> = posterior_sample(obs, &icfg, rng)?.iter().map(|d| d.q_pred).collect();
    Ok(q_histogram(&qs, n))
}

/// Hellinger distance between the predictive laws of `Q` at the true and
/// at the fitted parameters.
pub fn hellinger_intrinsic_loss<R: Rng + ?Sized>(
    obs: &ObservedData,
    theta: (f64, MrfParams),
    estimate: (f64, MrfParams),
    cfg: &EvalConfig,
    rng: &mut R,
) -> Result<f64> {
    let p = predictive_q_table(obs, theta.0, theta.1, cfg, rng)?;
    let q = predictive_q_table(obs, estimate.0, estimate.1, cfg, rng)?;
    hellinger(&p, &q)
}

/// Prior predictive law of `Q` under the inference priors.
pub fn prior_predictive_q(cfg: &EvalConfig, master: u64) -> Result<Vec<f64>> {
    let n = cfg.n_total();
    let icfg = &cfg.inference;
    if n <= MAX_EXACT_NODES {
        let empty = ObservedData::empty(n, DesignSpec::ego(1));
        return Ok(exact_posterior_without_estimand(&empty, icfg)?.q_pred);
    }
    let mut rng = stream(master, &[u64::MAX, 0]);
    let mut counts = vec![0.5; n + 1];
    for _ in 0..cfg.prior_draws {
        let model = icfg.graph_prior.sample(&mut rng)?;
        let (g, _) = gen_graph(n, &model, &mut rng)?;
        let gamma = icfg.gamma_prior.sample(&mut rng);
        let y = icfg.aux_sampler.sample(&g, &gamma, &mut rng);
        counts[y.count_ones()] += 1.0;
    }
    let t: f64 = counts.iter().sum();
    Ok(counts.iter().map(|c| c / t).collect())
}

fn posterior_means(draws: &[PosteriorDraw]) -> (f64, MrfParams) {
    let k = draws.len() as f64;
    let a = draws.iter().map(|d| d.alpha).sum::<f64>() / k;
    let g0 = draws.iter().map(|d| d.gamma.gamma0).sum::<f64>() / k;
    let g1 = draws.iter().map(|d| d.gamma.gamma1).sum::<f64>() / k;
    (a, MrfParams::new(g0, g1))
}

/// Runs the design and scores the inference on one world. `truth` is the
/// value of `Q` the squared error and pointwise risk are measured against.
pub(crate) fn score_world(
    design: &DesignSpec,
    cfg: &EvalConfig,
    world: &World,
    seeds: Option<&[usize]>,
    truth: Option<f64>,
    prior_pred: Option<&[f64]>,
    replicate: usize,
    rng: &mut impl Rng,
) -> Result<ReplicateRecord> {
    let n = cfg.n_total();
    let trace = match seeds {
        Some(s) => run_design_from_seeds(design, &world.g, &world.y, s, rng)?,
        None => run_design(design, &world.g, &world.y, rng)?,
    };
    let obs = ObservedData::from_trace(&trace, Some(&world.g))?;
    let draws = posterior_sample(&obs, &cfg.inference, rng)?;
    let qs: Vec<f64> = draws.iter().map(|d| d.q(cfg.target)).collect();
    let realized = world.y.mean();
    let (estimate, loss) = match cfg.loss {
        LossSpec::Quadratic | LossSpec::Multilinear { .. } => {
            let a = bayes_rule(&cfg.loss, &qs)?;
            let l = match truth {
                Some(t) => loss_value(&cfg.loss, a, t)?,
                None => expected_posterior_loss(&cfg.loss, &qs)?,
            };
            (a, l)
        }
        LossSpec::KlPredictive => {
            let prior = prior_pred.expect("prior predictive computed for this loss");
            let a = qs.iter().sum::<f64>() / qs.len() as f64;
            (a, kl_predictive_loss(prior, &q_histogram(&qs, n))?)
        }
        LossSpec::HellingerIntrinsic => {
            let alpha = world.alpha.ok_or_else(|| {
                Error::Parameter("the intrinsic loss needs an Erdős–Rényi world".into())
            })?;
            let a = qs.iter().sum::<f64>() / qs.len() as f64;
            let fitted = posterior_means(&draws);
            (a, hellinger_intrinsic_loss(&obs, (alpha, world.gamma), fitted, cfg, rng)?)
        }
    };
    let reference = truth.unwrap_or(realized);
    Ok(ReplicateRecord {
        replicate,
        sample_size: trace.len(),
        estimate,
        truth: reference,
        loss,
        sq_error: (estimate - reference).powi(2),
    })
}

pub(crate) fn world_from_prior(cfg: &EvalConfig, rng: &mut impl Rng) -> Result<World> {
    let model = cfg.world.graph.sample(rng)?;
    let (g, _) = gen_graph(cfg.n_total(), &model, rng)?;
    let gamma = cfg.world.gamma.sample(rng);
    let y = cfg.world.sampler.sample(&g, &gamma, rng);
    let alpha = match model {
        GraphModel::ErdosRenyi { alpha } => Some(alpha),
        GraphModel::Sbm { .. } => None,
    };
    Ok(World { g, y, alpha, gamma })
}

fn check_common(design: &DesignSpec, cfg: &EvalConfig, k: usize) -> Result<()> {
    if k < 2 {
        return param("at least two replicates are needed for a standard error");
    }
    cfg.validate()?;
    design.validate(cfg.n_total())
}

/// Splits replicate outcomes into records and failures, keeping order.
fn collect_ordered(records: Vec<Result<ReplicateRecord>>) -> Result<(Vec<ReplicateRecord>, Vec<ReplicateFailure>)> {
    let mut ok = Vec::with_capacity(records.len());
    let mut failed = Vec::new();
    for (i, r) in records.into_iter().enumerate() {
        match r {
            Ok(rec) => ok.push(rec),
            Err(e @ (Error::Parameter(_) | Error::Size(_) | Error::Io(_))) => return Err(e),
            Err(e) => failed.push(ReplicateFailure { replicate: i, error: e.to_string() }),
        }
    }
    if ok.len() < 2 {
        return Err(Error::Data(format!("only {} of {} replicates succeeded", ok.len(), ok.len() + failed.len())));
    }
    Ok((ok, failed))
}

/// Lindley design loss: the prior-predictive average of the posterior
/// expected loss of the Bayes action, over `k` replicates.
///
/// Replicate `i` draws its world from stream `[i, 0]` and runs the design
/// and inference on stream `[i, 1]`, so every design sees the same worlds.
pub fn lindley_design_loss(design: &DesignSpec, cfg: &EvalConfig, k: usize, master: u64) -> Result<DesignScore> {
    check_common(design, cfg, k)?;
    let prior = match cfg.loss {
        LossSpec::KlPredictive => Some(prior_predictive_q(cfg, master)?),
        _ => None,
    };
    let recs = (0..k)
        .into_par_iter()
        .map(|i| {
            let world = world_from_prior(cfg, &mut stream(master, &[i as u64, 0]))?;
            score_world(design, cfg, &world, None, None, prior.as_deref(), i, &mut stream(master, &[i as u64, 1]))
        })
        .collect();
    Ok(DesignScore::from_records(design, collect_ordered(recs)?))
}

/// Index of the candidate with the smallest estimated loss (earliest on
/// ties) and every score.
pub fn optimal_design(
    candidates: &[DesignSpec],
    cfg: &EvalConfig,
    k: usize,
    master: u64,
) -> Result<(usize, Vec<DesignScore>)> {
    if candidates.is_empty() {
        return param("no candidate designs");
    }
    let scores = candidates
        .iter()
        .map(|d| lindley_design_loss(d, cfg, k, master))
        .collect::<Result<Vec<_>>>()?;
    Ok((argmin(&scores), scores))
}

fn argmin(scores: &[DesignScore]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.loss.mean < scores[best].loss.mean {
            best = i;
        }
    }
    best
}

/// Estimand value `E[mean(Y) | θ]` for an ER world.
fn estimand_at(cfg: &EvalConfig, alpha: f64, gamma: MrfParams, master: u64) -> Result<f64> {
    let n = cfg.n_total();
    if n <= MAX_EXACT_NODES {
        let empty = ObservedData::empty(n, DesignSpec::ego(1));
        let e = exact_posterior(&empty, &point_config(cfg, alpha, gamma))?;
        return Ok(e.q_est.iter().enumerate().map(|(k, p)| k as f64 / n as f64 * p).sum());
    }
    let mut rng = stream(master, &[u64::MAX, 1]);
    let mut s = 0.0;
    for _ in 0..cfg.prior_draws {
        let g = gen_er(n, alpha, &mut rng)?;
        s += cfg.world.sampler.sample(&g, &gamma, &mut rng).mean();
    }
    Ok(s / cfg.prior_draws as f64)
}

/// Frequentist risk at fixed `θ* = (α, γ)`: the loss of the Bayes action
/// against the true `Q`, averaged over data simulated from `θ*`.
pub fn frequentist_risk(
    design: &DesignSpec,
    alpha: f64,
    gamma: MrfParams,
    cfg: &EvalConfig,
    k: usize,
    master: u64,
) -> Result<DesignScore> {
    check_common(design, cfg, k)?;
    let fixed = match cfg.target {
        Target::Estimation => Some(estimand_at(cfg, alpha, gamma, master)?),
        Target::Prediction => None,
    };
    let prior = match cfg.loss {
        LossSpec::KlPredictive => Some(prior_predictive_q(cfg, master)?),
        _ => None,
    };
    let recs = (0..k)
        .into_par_iter()
        .map(|i| {
            let mut wr = stream(master, &[i as u64, 0]);
            let g = gen_er(cfg.n_total(), alpha, &mut wr)?;
            let y = cfg.world.sampler.sample(&g, &gamma, &mut wr);
            let truth = fixed.unwrap_or(y.mean());
            let world = World { g, y, alpha: Some(alpha), gamma };
            score_world(design, cfg, &world, None, Some(truth), prior.as_deref(), i, &mut stream(master, &[i as u64, 1]))
        })
        .collect();
    Ok(DesignScore::from_records(design, collect_ordered(recs)?))
}

/// Distinct observations of the design with their probabilities and the
/// realized `Q` behind each, enumerating graphs, responses and traces.
pub(crate) type Outcomes = Vec<(ObservedData, Vec<(f64, f64)>)>;

pub(crate) fn enumerate_outcomes(
    design: &DesignSpec,
    n: usize,
    graph_log_prob: &dyn Fn(&Graph) -> f64,
    cells: &[(MrfParams, f64)],
) -> Result<Outcomes> {
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut out: Outcomes = Vec::new();
    for g in enumerate_graphs(n)? {
        let pg = graph_log_prob(&g).exp();
        if pg == 0.0 {
            continue;
        }
        let counts = StatCounts::new(&g)?;
        let log_z: Vec<f64> = cells.iter().map(|(p, _)| counts.log_partition(p)).collect();
        for idx in 0..1u64 << n {
            let y = ResponseVector::from_index(n, idx);
            let (v0, v1) = suff_stats(&y, &g)?;
            let py: f64 = cells
                .iter()
                .zip(&log_z)
                .map(|((p, w), lz)| w * (stat_energy(v0, v1, p) - lz).exp())
                .sum();
            if py == 0.0 {
                continue;
            }
            for (t, pt) in enumerate_traces(design, &g, &y)? {
                let obs = observed_data(&t, &g, &y)?;
                let key = obs.key();
                let i = *index.entry(key).or_insert_with(|| {
                    out.push((obs, Vec::new()));
                    out.len() - 1
                });
                out[i].1.push((pg * py * pt, y.mean()));
            }
        }
    }
    Ok(out)
}

pub(crate) fn exact_q_law(obs: &ObservedData, cfg: &EvalConfig) -> Result<Vec<f64>> {
    Ok(match cfg.target {
        Target::Prediction => exact_posterior_without_estimand(obs, &cfg.inference)?.q_pred,
        Target::Estimation => exact_posterior(obs, &cfg.inference)?.q_est,
    })
}

fn check_exact(design: &DesignSpec, cfg: &EvalConfig) -> Result<()> {
    cfg.validate()?;
    design.validate(cfg.n_total())?;
    if cfg.n_total() > MAX_EXACT_NODES {
        return Err(Error::Size(format!("exact evaluation needs N <= {MAX_EXACT_NODES}")));
    }
    if cfg.loss == LossSpec::HellingerIntrinsic {
        return param("the intrinsic loss has no exhaustive evaluation");
    }
    Ok(())
}

/// Exact Lindley design loss by enumerating every population, response
/// vector and trace; `γ` is integrated on the oracle grid.
pub fn exact_design_loss(design: &DesignSpec, cfg: &EvalConfig) -> Result<f64> {
    check_exact(design, cfg)?;
    cfg.world.graph.require_er()?;
    let n = cfg.n_total();
    let pairs = pair_count(n);
    let wp = &cfg.world.graph;
    let outcomes = enumerate_outcomes(design, n, &|g| wp.log_marginal_er(g.n_edges(), pairs), &gamma_cells(&cfg.world.gamma))?;
    let support = q_support(n);
    let prior = match cfg.loss {
        LossSpec::KlPredictive => Some(prior_predictive_q(cfg, 0)?),
        _ => None,
    };
    let mut total = 0.0;
    for (obs, worlds) in &outcomes {
        let w: f64 = worlds.iter().map(|x| x.0).sum();
        let law = exact_q_law(obs, cfg)?;
        let v = match &prior {
            Some(p) => kl_predictive_loss(p, &law)?,
            None => expected_posterior_loss_pmf(&cfg.loss, &support, &law)?,
        };
        total += w * v;
    }
    Ok(total)
}

/// Exact frequentist risk at `θ*` for pointwise losses.
pub fn exact_frequentist_risk(design: &DesignSpec, alpha: f64, gamma: MrfParams, cfg: &EvalConfig) -> Result<f64> {
    check_exact(design, cfg)?;
    if !cfg.loss.is_pointwise() {
        return param("exact risk is defined for pointwise losses");
    }
    let n = cfg.n_total();
    let pairs = pair_count(n);
    let lp = |g: &Graph| crate::graph::er_log_prob(g.n_edges(), pairs, alpha);
    let outcomes = enumerate_outcomes(design, n, &lp, &[(gamma, 1.0)])?;
    let fixed = match cfg.target {
        Target::Estimation => Some(estimand_at(cfg, alpha, gamma, 0)?),
        Target::Prediction => None,
    };
    let support = q_support(n);
    let mut total = 0.0;
    for (obs, worlds) in &outcomes {
        let a = bayes_rule_pmf(&cfg.loss, &support, &exact_q_law(obs, cfg)?)?;
        for &(p, q) in worlds {
            total += p * loss_value(&cfg.loss, a, fixed.unwrap_or(q))?;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize) -> EvalConfig {
        let gamma = GammaPrior::point(MrfParams::new(0.2, 0.4));
        let graph = GraphPrior::PointMass { model: GraphModel::ErdosRenyi { alpha: 0.4 } };
        EvalConfig {
            inference: InferenceConfig {
                n_total: n,
                burn_in: 200,
                n_draws: 600,
                graph_prior: graph.clone(),
                gamma_prior: gamma,
                ..Default::default()
            },
            world: WorldPrior { graph, gamma, sampler: ResponseSampler::default() },
            ..Default::default()
        }
    }

    #[test]
    fn mc_lindley_matches_exhaustive() {
        let cfg = small(4);
        let d = DesignSpec::rds(1, 1, 3);
        let exact = exact_design_loss(&d, &cfg).unwrap();
        let mc = lindley_design_loss(&d, &cfg, 600, 11).unwrap();
        assert!((mc.loss.mean - exact).abs() < 3.0 * mc.loss.se, "{exact} vs {:?}", mc.loss);
    }

    #[test]
    fn mc_risk_matches_exhaustive() {
        let cfg = small(4);
        let d = DesignSpec::ego(2);
        let theta = MrfParams::new(0.2, 0.4);
        let exact = exact_frequentist_risk(&d, 0.4, theta, &cfg).unwrap();
        let mc = frequentist_risk(&d, 0.4, theta, &cfg, 600, 12).unwrap();
        assert!((mc.loss.mean - exact).abs() < 3.0 * mc.loss.se, "{exact} vs {:?}", mc.loss);
    }

    #[test]
    fn census_risk_is_zero_and_more_data_helps() {
        let cfg = small(4);
        let theta = MrfParams::new(0.2, 0.4);
        assert!(exact_frequentist_risk(&DesignSpec::ego(4), 0.4, theta, &cfg).unwrap() < 1e-15);
        let r1 = exact_frequentist_risk(&DesignSpec::ego(1), 0.4, theta, &cfg).unwrap();
        let r3 = exact_frequentist_risk(&DesignSpec::ego(3), 0.4, theta, &cfg).unwrap();
        assert!(r3 <= r1);
    }

    #[test]
    fn singleton_and_determinism() {
        let cfg = small(5);
        let d = vec![DesignSpec::rds(1, 1, 3)];
        let (i, s) = optimal_design(&d, &cfg, 4, 3).unwrap();
        assert_eq!(i, 0);
        let again = lindley_design_loss(&d[0], &cfg, 4, 3).unwrap();
        assert_eq!(s[0], again);
        assert!(lindley_design_loss(&d[0], &cfg, 1, 3).is_err());
    }

    #[test]
    fn kl_loss_is_nonpositive_and_exact_matches_mc() {
        let mut cfg = small(4);
        cfg.loss = LossSpec::KlPredictive;
        let d = DesignSpec::ego(2);
        let exact = exact_design_loss(&d, &cfg).unwrap();
        assert!(exact < 0.0);
        let mut ex = cfg.clone();
        ex.inference.mode = InferenceMode::ExactOracle;
        ex.inference.n_draws = 4000;
        let mc = lindley_design_loss(&d, &ex, 200, 5).unwrap();
        // histogram noise biases the plug-in KL, so compare loosely
        assert!((mc.loss.mean - exact).abs() < 0.05 + 3.0 * mc.loss.se, "{exact} vs {:?}", mc.loss);
    }

    #[test]
    fn intrinsic_loss_matches_direct_tables() {
        let cfg = small(4);
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let y = ResponseVector::from_values(&[1, 0, 1, 1]).unwrap();
        let t = crate::design::run_design_from_seeds(&DesignSpec::ego(2), &g, &y, &[0, 1], &mut stream(1, &[]))
            .unwrap();
        let obs = observed_data(&t, &g, &y).unwrap();
        let th = (0.4, MrfParams::new(0.2, 0.4));
        let est = (0.3, MrfParams::new(-0.1, 0.2));
        let mut rng = stream(2, &[]);
        assert_eq!(hellinger_intrinsic_loss(&obs, th, th, &cfg, &mut rng).unwrap(), 0.0);
        let v = hellinger_intrinsic_loss(&obs, th, est, &cfg, &mut rng).unwrap();
        assert!((v - hellinger_intrinsic_loss(&obs, est, th, &cfg, &mut rng).unwrap()).abs() < 1e-15);
        // Direct: unsampled nodes 2 and 3 with the observed rows of 0 and 1
        // fixed; pairs (2, 3) free, so Q averages over two completions.
        let direct = |a: f64, p: MrfParams| {
            let mut law = vec![0.0; 5];
            for (edge, pe) in [(false, 1.0 - a), (true, a)] {
                let mut h = Graph::from_edges(4, &[(0, 1), (1, 2)]).unwrap();
                h.set_edge(2, 3, edge);
                let mut w = [0.0; 4];
                for (idx, wi) in w.iter_mut().enumerate() {
                    let mut yy = y.clone();
                    yy.set(2, idx & 1 == 1);
                    yy.set(3, idx & 2 == 2);
                    let (v0, v1) = suff_stats(&yy, &h).unwrap();
                    *wi = stat_energy(v0, v1, &p).exp();
                }
                let z: f64 = w.iter().sum();
                for (idx, wi) in w.iter().enumerate() {
                    let ones = 1 + (idx & 1) + (idx >> 1 & 1);
                    law[ones] += pe * wi / z;
                }
            }
            law
        };
        let h = hellinger(&direct(th.0, th.1), &direct(est.0, est.1)).unwrap();
        assert!((v - h).abs() < 1e-9, "{v} vs {h}");
    }
}
