use rand::Rng;
use rand_distr::{Beta, Distribution, Normal};

use super::{CompletionSpace, InferenceConfig, InferenceMode, PosteriorDraw};
use crate::design::ObservedData;
use crate::error::{param, Error, Result};
use crate::graph::{gen_er, pair_count, sample_index, xlogy, Graph, GraphModel, GraphPrior};
use crate::mrf::{gibbs_sweep_nodes, suff_stats, MrfParams, ResponseVector};

/// Current values of every unknown.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub alpha: f64,
    pub gamma: MrfParams,
    pub g: Graph,
    pub y: ResponseVector,
    design_log_lik: f64,
}

/// Metropolis-within-Gibbs sampler for one observation.
pub struct Sampler<'a> {
    obs: &'a ObservedData,
    cfg: &'a InferenceConfig,
    space: CompletionSpace,
    unsampled: Vec<usize>,
    state: ChainState,
    pairs: usize,
}

fn er_alpha(m: &GraphModel) -> f64 {
    match m {
        GraphModel::ErdosRenyi { alpha } => *alpha,
        GraphModel::Sbm { .. } => unreachable!("validated as Erdős–Rényi"),
    }
}

/// Draws the edge probability given the total edge count.
pub(crate) fn sample_alpha<R: Rng + ?Sized>(
    prior: &GraphPrior,
    edges: usize,
    pairs: usize,
    rng: &mut R,
) -> Result<f64> {
    match prior {
        GraphPrior::PointMass { model } => Ok(er_alpha(model)),
        GraphPrior::BetaEr { tau1, tau2 } => {
            let b = Beta::new(tau1 + edges as f64, tau2 + (pairs - edges) as f64)
                .map_err(|e| Error::Parameter(e.to_string()))?;
            Ok(b.sample(rng))
        }
        GraphPrior::DiscreteGrid { models, weights } => {
            let logw: Vec<f64> = models
                .iter()
                .zip(weights)
                .map(|(m, &w)| {
                    let a = er_alpha(m);
                    if w == 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        w.ln() + xlogy(edges as f64, a) + xlogy((pairs - edges) as f64, 1.0 - a)
                    }
                })
                .collect();
            let mx = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = logw.iter().map(|l| (l - mx).exp()).collect();
            Ok(er_alpha(&models[sample_index(&w, rng)]))
        }
    }
}

impl<'a> Sampler<'a> {
    pub fn new<R: Rng + ?Sized>(obs: &'a ObservedData, cfg: &'a InferenceConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        if obs.n_total != cfg.n_total {
            return param(format!(
                "observation has {} nodes but the configuration assumes {}",
                obs.n_total, cfg.n_total
            ));
        }
        let n = cfg.n_total;
        let space = CompletionSpace::new(obs)?;
        let alpha = cfg.graph_prior.mean_alpha();
        let g = space.initial(alpha, rng)?;
        let design_log_lik = space.design_log_lik(&g);
        let mut y = obs.partial_responses();
        let mut is_sampled = vec![false; n];
        for &i in &obs.sampled {
            is_sampled[i] = true;
        }
        let unsampled: Vec<usize> = (0..n).filter(|&i| !is_sampled[i]).collect();
        for &i in &unsampled {
            y.set(i, rng.random::<bool>());
        }
        let gamma = cfg.gamma_prior.sample(rng);
        let state = ChainState { alpha, gamma, g, y, design_log_lik };
        Ok(Self { obs, cfg, space, unsampled, state, pairs: pair_count(n) })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn space(&self) -> &CompletionSpace {
        &self.space
    }

    /// Alternating-walk moves on the completion followed by a conjugate
    /// update of the edge probability.
    pub fn impute_graph_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let moves = if self.cfg.graph_moves == 0 { self.cfg.n_total } else { self.cfg.graph_moves };
        if !self.space.free_pairs_empty() {
            for _ in 0..moves {
                let s = &mut self.state;
                self.space.walk_move(&mut s.g, &mut s.design_log_lik, s.alpha, self.cfg.max_walk, rng);
            }
        }
        self.state.alpha = sample_alpha(&self.cfg.graph_prior, self.state.g.n_edges(), self.pairs, rng)?;
        Ok(())
    }

    /// One heat-bath sweep over the unsampled responses.
    pub fn update_y_step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let s = &mut self.state;
        gibbs_sweep_nodes(&s.g, &s.gamma, &mut s.y, &self.unsampled, rng);
    }

    /// Exchange update of `γ` on the current completed data.
    pub fn update_gamma_step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let prior = &self.cfg.gamma_prior;
        if prior.is_point_mass() {
            return;
        }
        let step = Normal::new(0.0, self.cfg.gamma_step).expect("positive step");
        let s = &mut self.state;
        let mut prop = s.gamma;
        if prior.g0_max > prior.g0_min {
            prop.gamma0 += step.sample(rng);
        }
        if prior.g1_max > prior.g1_min {
            prop.gamma1 += step.sample(rng);
        }
        if !prior.contains(&prop) {
            return;
        }
        let aux = self.cfg.aux_sampler.sample(&s.g, &prop, rng);
        let (v0, v1) = suff_stats(&s.y, &s.g).expect("dimensions fixed");
        let (a0, a1) = suff_stats(&aux, &s.g).expect("dimensions fixed");
        let log_r = (prop.gamma0 - s.gamma.gamma0) * (v0 as f64 - a0 as f64)
            + (prop.gamma1 - s.gamma.gamma1) * (v1 as f64 - a1 as f64);
        if log_r >= 0.0 || rng.random::<f64>().ln() < log_r {
            s.gamma = prop;
        }
    }

    pub fn iterate<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.impute_graph_step(rng)?;
        for _ in 0..self.cfg.inner_steps {
            self.update_y_step(rng);
            self.update_gamma_step(rng);
        }
        Ok(())
    }

    /// Records the current state, simulating the estimation target.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PosteriorDraw> {
        let s = &self.state;
        let fresh = gen_er(self.cfg.n_total, s.alpha, rng)?;
        let y_aug = self.cfg.aux_sampler.sample(&fresh, &s.gamma, rng);
        Ok(PosteriorDraw {
            alpha: s.alpha,
            gamma: s.gamma,
            graph: self.cfg.keep_graphs.then(|| s.g.clone()),
            y: s.y.clone(),
            q_est: y_aug.mean(),
            q_pred: s.y.mean(),
        })
    }

    pub fn observation(&self) -> &ObservedData {
        self.obs
    }
}

impl CompletionSpace {
    fn free_pairs_empty(&self) -> bool {
        (0..self.n_nodes()).all(|i| self.free_row(i).iter().all(|&w| w == 0))
    }
}

/// Thinned posterior draws after burn-in.
pub fn posterior_sample<R: Rng + ?Sized>(
    obs: &ObservedData,
    cfg: &InferenceConfig,
    rng: &mut R,
) -> Result<Vec<PosteriorDraw>> {
    cfg.validate()?;
    if cfg.mode == InferenceMode::ExactOracle {
        let exact = super::exact_posterior(obs, cfg)?;
        return exact.sample_draws(cfg, cfg.n_draws, rng);
    }
    let mut s = Sampler::new(obs, cfg, rng)?;
    for _ in 0..cfg.burn_in {
        s.iterate(rng)?;
    }
    let mut out = Vec::with_capacity(cfg.n_draws);
    while out.len() < cfg.n_draws {
        for _ in 0..cfg.thinning {
            s.iterate(rng)?;
        }
        out.push(s.draw(rng)?);
    }
    Ok(out)
}
