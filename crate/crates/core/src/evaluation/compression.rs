//! Data-compression scores: the Hellinger distance between the law of the
//! full graph and its posterior predictive given the sampled part, averaged
//! over graphs and traces.
//!
//! Both laws live on the completions of the observation. The first is the
//! graph law at the true `α` conditioned on the observation, the second the
//! posterior predictive under the inference prior. Their likelihood factors
//! coincide, so only the prior ratio `ρ(G) = m(G) / π_α(G)` enters:
//! `1 − H = E[√ρ] / √E[ρ]` under the first law.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta as BetaDist, Continuous};

use super::lindley::Estimate;
use crate::design::{enumerate_traces, run_design, DesignSpec, ObservedData};
use crate::error::{param, Error, Result};
use crate::graph::{enumerate_graphs, er_log_prob, gen_er, log_sum_exp, pair_count, GraphPrior};
use crate::mrf::ResponseVector;
use crate::posterior::CompletionSpace;
use crate::rng::stream;

/// Spread of the true `α` around its centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Spread {
    PointMass,
    /// `Beta(c α*, c (1 − α*))`.
    BetaWithMean { concentration: f64 },
    DiscreteGrid { alphas: Vec<f64>, weights: Vec<f64> },
}

/// Law `f(· | α*)` of the true edge probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaMixture {
    pub center: f64,
    pub spread: Spread,
}

/// Midpoint cells used to integrate a Beta spread.
const BETA_NODES: usize = 200;

impl AlphaMixture {
    pub fn point(center: f64) -> Self {
        Self { center, spread: Spread::PointMass }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.center) {
            return param(format!("mixture centre {} outside [0, 1]", self.center));
        }
        match &self.spread {
            Spread::PointMass => {}
            Spread::BetaWithMean { concentration } => {
                if !(*concentration > 0.0) || self.center <= 0.0 || self.center >= 1.0 {
                    return param("a Beta spread needs a positive concentration and a centre inside (0, 1)");
                }
            }
            Spread::DiscreteGrid { alphas, weights } => {
                if alphas.is_empty() || alphas.len() != weights.len() {
                    return param("grid spread needs matching nonempty alphas and weights");
                }
                if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) || weights.iter().any(|w| !(*w >= 0.0)) {
                    return param("grid spread has an invalid atom");
                }
                if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return param("grid spread weights must sum to 1");
                }
            }
        }
        let m = self.quadrature_mean();
        if (m - self.center).abs() > 1e-6 {
            return param(format!("mixture mean {m} differs from its centre {}", self.center));
        }
        Ok(())
    }

    fn beta(&self, c: f64) -> (f64, f64) {
        (c * self.center, c * (1.0 - self.center))
    }

    /// Quadrature nodes and weights.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        match &self.spread {
            Spread::PointMass => vec![(self.center, 1.0)],
            Spread::DiscreteGrid { alphas, weights } => alphas.iter().copied().zip(weights.iter().copied()).collect(),
            Spread::BetaWithMean { concentration } => {
                let (a, b) = self.beta(*concentration);
                let d = BetaDist::new(a, b).expect("validated");
                let h = 1.0 / BETA_NODES as f64;
                let mut v: Vec<(f64, f64)> =
                    (0..BETA_NODES).map(|k| ((k as f64 + 0.5) * h, d.pdf((k as f64 + 0.5) * h) * h)).collect();
                let t: f64 = v.iter().map(|x| x.1).sum();
                v.iter_mut().for_each(|x| x.1 /= t);
                v
            }
        }
    }

    fn quadrature_mean(&self) -> f64 {
        match &self.spread {
            Spread::BetaWithMean { concentration } => {
                let (a, b) = self.beta(*concentration);
                a / (a + b)
            }
            _ => self.nodes().iter().map(|(x, w)| x * w).sum(),
        }
    }

    /// Draws a true `α`; the point mass consumes no randomness.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.spread {
            Spread::PointMass => self.center,
            Spread::BetaWithMean { concentration } => {
                let (a, b) = self.beta(*concentration);
                Beta::new(a, b).expect("validated").sample(rng)
            }
            Spread::DiscreteGrid { alphas, weights } => alphas[crate::graph::sample_index(weights, rng)],
        }
    }
}

/// Controls for the compression score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompressionConfig {
    pub n_total: usize,
    /// Prior behind the posterior predictive.
    pub inference_prior: GraphPrior,
    /// Completion draws per simulated observation.
    pub completion_draws: usize,
    pub burn_in: usize,
    /// Walk moves between kept completions; 0 means `N`.
    pub moves_per_draw: usize,
    pub max_walk: usize,
}

impl Default for CompressionConfig {
    fn default() -> Self {
        Self {
            n_total: 0,
            inference_prior: GraphPrior::BetaEr { tau1: 1.0, tau2: 1.0 },
            completion_draws: 100,
            burn_in: 200,
            moves_per_draw: 0,
            max_walk: 16,
        }
    }
}

impl CompressionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_total == 0 {
            return param("n_total must be positive");
        }
        if self.completion_draws == 0 || self.max_walk == 0 {
            return param("completion_draws and max_walk must be positive");
        }
        self.inference_prior.validate()?;
        self.inference_prior.require_er()
    }
}

fn log_ratio(prior: &GraphPrior, edges: usize, pairs: usize, alpha: f64) -> f64 {
    prior.log_marginal_er(edges, pairs) - er_log_prob(edges, pairs, alpha)
}

fn bhattacharyya_from_log_ratios(lr: &[f64]) -> f64 {
    let ln_m = (lr.len() as f64).ln();
    let a = log_sum_exp(lr.iter().map(|x| 0.5 * x)) - ln_m;
    let b = log_sum_exp(lr.iter().copied()) - ln_m;
    (a - 0.5 * b).exp()
}

/// Exact Hellinger distance for one observation at true `alpha`.
pub fn completion_hellinger_exact(obs: &ObservedData, alpha: f64, cfg: &CompressionConfig) -> Result<f64> {
    let pairs = pair_count(obs.n_total);
    let space = CompletionSpace::new(obs)?;
    let comps = space.enumerate()?;
    let lt: Vec<f64> = comps.iter().map(|(g, l)| er_log_prob(g.n_edges(), pairs, alpha) + l).collect();
    let lm: Vec<f64> = comps.iter().map(|(g, l)| cfg.inference_prior.log_marginal_er(g.n_edges(), pairs) + l).collect();
    let (zt, zm) = (log_sum_exp(lt.iter().copied()), log_sum_exp(lm.iter().copied()));
    if !zt.is_finite() {
        return Err(Error::Infeasible("the observation has probability zero at this alpha".into()));
    }
    let bc: f64 = lt.iter().zip(&lm).map(|(a, b)| (0.5 * (a - zt + b - zm)).exp()).sum();
    Ok((1.0 - bc).clamp(0.0, 1.0))
}

/// Hellinger distance for one observation estimated from completion draws
/// at true `alpha`.
pub fn completion_hellinger_mc<R: Rng + ?Sized>(
    obs: &ObservedData,
    alpha: f64,
    cfg: &CompressionConfig,
    rng: &mut R,
) -> Result<f64> {
    let n = obs.n_total;
    let pairs = pair_count(n);
    let space = CompletionSpace::new(obs)?;
    let mut g = space.initial(alpha, rng)?;
    let mut ll = space.design_log_lik(&g);
    let moves = if cfg.moves_per_draw == 0 { n } else { cfg.moves_per_draw };
    let open = !space.free_pairs().is_empty();
    let step = |g: &mut crate::graph::Graph, ll: &mut f64, count: usize, rng: &mut R| {
        if open {
            for _ in 0..count {
                space.walk_move(g, ll, alpha, cfg.max_walk, rng);
            }
        }
    };
    step(&mut g, &mut ll, cfg.burn_in * moves, rng);
    let mut lr = Vec::with_capacity(cfg.completion_draws);
    for _ in 0..cfg.completion_draws {
        step(&mut g, &mut ll, moves, rng);
        lr.push(log_ratio(&cfg.inference_prior, g.n_edges(), pairs, alpha));
    }
    Ok((1.0 - bhattacharyya_from_log_ratios(&lr)).clamp(0.0, 1.0))
}

/// Monte Carlo `ψ(I, f(· | α*))` over `k` replicates: replicate `i` draws
/// `α`, the graph and the trace from stream `[i, 0]`.
pub fn psi(design: &DesignSpec, mixture: &AlphaMixture, cfg: &CompressionConfig, k: usize, master: u64) -> Result<Estimate> {
    cfg.validate()?;
    mixture.validate()?;
    design.validate(cfg.n_total)?;
    if k < 2 {
        return param("at least two replicates are needed for a standard error");
    }
    let n = cfg.n_total;
    let hs = (0..k)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(master, &[i as u64, 0]);
            let alpha = mixture.sample(&mut rng);
            let g = gen_er(n, alpha, &mut rng)?;
            let y = ResponseVector::zeros(n);
            let trace = run_design(design, &g, &y, &mut rng)?;
            let obs = ObservedData::from_trace(&trace, Some(&g))?;
            completion_hellinger_mc(&obs, alpha, cfg, &mut rng)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Estimate::from_samples(&hs))
}

/// Monte Carlo `ψ★(I, α*)`.
pub fn psi_star(design: &DesignSpec, alpha_star: f64, cfg: &CompressionConfig, k: usize, master: u64) -> Result<Estimate> {
    psi(design, &AlphaMixture::point(alpha_star), cfg, k, master)
}

/// Exact `ψ★(I, α*)` by enumerating graphs and traces.
pub fn psi_star_exact(design: &DesignSpec, alpha_star: f64, cfg: &CompressionConfig) -> Result<f64> {
    cfg.validate()?;
    design.validate(cfg.n_total)?;
    let n = cfg.n_total;
    let pairs = pair_count(n);
    let y = ResponseVector::zeros(n);
    let mut total = 0.0;
    for g in enumerate_graphs(n)? {
        let pg = er_log_prob(g.n_edges(), pairs, alpha_star).exp();
        if pg == 0.0 {
            continue;
        }
        for (t, pt) in enumerate_traces(design, &g, &y)? {
            let obs = ObservedData::from_trace(&t, Some(&g))?;
            total += pg * pt * completion_hellinger_exact(&obs, alpha_star, cfg)?;
        }
    }
    Ok(total)
}

/// Exact `ψ` by quadrature of [`psi_star_exact`] over the mixture.
pub fn psi_exact(design: &DesignSpec, mixture: &AlphaMixture, cfg: &CompressionConfig) -> Result<f64> {
    mixture.validate()?;
    let mut s = 0.0;
    for (a, w) in mixture.nodes() {
        if w > 0.0 {
            s += w * psi_star_exact(design, a, cfg)?;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphModel;

    fn cfg(n: usize) -> CompressionConfig {
        CompressionConfig { n_total: n, ..Default::default() }
    }

    #[test]
    fn full_graph_with_point_prior_scores_zero() {
        let mut c = cfg(4);
        c.inference_prior = GraphPrior::PointMass { model: GraphModel::ErdosRenyi { alpha: 0.5 } };
        assert!(psi_star_exact(&DesignSpec::ego(4), 0.5, &c).unwrap() < 1e-12);
        assert!(psi_star_exact(&DesignSpec::ego(1), 0.5, &c).unwrap() < 1e-12);
        assert!(psi_star_exact(&DesignSpec::ego(4), 0.5, &cfg(4)).unwrap() < 1e-12);
    }

    #[test]
    fn more_data_scores_lower() {
        let c = cfg(4);
        let one = psi_star_exact(&DesignSpec::ego(1), 0.5, &c).unwrap();
        let all = psi_star_exact(&DesignSpec::ego(4), 0.5, &c).unwrap();
        assert!(one >= all && one > 0.0);
    }

    #[test]
    fn mc_agrees_with_exact_on_three_nodes() {
        let c = cfg(3);
        for d in [DesignSpec::ego(1), DesignSpec::rds(1, 1, 2)] {
            let exact = psi_star_exact(&d, 0.4, &c).unwrap();
            let mc = psi_star(&d, 0.4, &c, 400, 9).unwrap();
            // completion-draw noise adds a small positive bias
            assert!((mc.mean - exact).abs() < 3.0 * mc.se + 0.01, "{exact} vs {mc:?}");
        }
    }

    #[test]
    fn point_mixture_equals_psi_star_bitwise() {
        let c = cfg(5);
        let d = DesignSpec::rds(1, 1, 3);
        let a = psi_star(&d, 0.3, &c, 8, 4).unwrap();
        let b = psi(&d, &AlphaMixture::point(0.3), &c, 8, 4).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    }

    #[test]
    fn mixture_quadrature_and_mc_agree() {
        let c = cfg(3);
        let m = AlphaMixture {
            center: 0.5,
            spread: Spread::DiscreteGrid { alphas: vec![0.3, 0.7], weights: vec![0.5, 0.5] },
        };
        let d = DesignSpec::ego(1);
        let exact = psi_exact(&d, &m, &c).unwrap();
        let mc = psi(&d, &m, &c, 400, 10).unwrap();
        assert!((mc.mean - exact).abs() < 3.0 * mc.se + 0.01, "{exact} vs {mc:?}");
    }

    #[test]
    fn mixture_means() {
        assert!(AlphaMixture { center: 0.3, spread: Spread::BetaWithMean { concentration: 20.0 } }.validate().is_ok());
        let bad = AlphaMixture {
            center: 0.5,
            spread: Spread::DiscreteGrid { alphas: vec![0.3, 0.6], weights: vec![0.5, 0.5] },
        };
        assert!(bad.validate().is_err());
        let beta = AlphaMixture { center: 0.3, spread: Spread::BetaWithMean { concentration: 20.0 } };
        let m: f64 = beta.nodes().iter().map(|(x, w)| x * w).sum();
        assert!((m - 0.3).abs() < 1e-3);
    }
}
