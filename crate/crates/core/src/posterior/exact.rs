//! Exhaustive posterior for tiny populations: every completion is
//! enumerated, `α` and `γ` are tabulated on grids and MRF normalizers are
//! computed by summing over all `2^N` response vectors.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use statrs::distribution::{Beta as BetaDist, ContinuousCDF};

use super::{CompletionSpace, InferenceConfig, PosteriorDraw};
use crate::design::ObservedData;
use crate::error::{param, Error, Result};
use crate::graph::{
    enumerate_graphs, gen_er, ln_beta, log_sum_exp, pair_count, sample_index, xlogy, Graph, GraphModel,
    GraphPrior,
};
use crate::mrf::{exact_mrf_dist, GammaPrior, stat_energy, suff_stats, MrfParams, ResponseVector, StatCounts};

/// Grid points per parameter axis.
pub const GRID_POINTS: usize = 41;
/// Largest population handled by the exhaustive posterior.
pub const MAX_EXACT_NODES: usize = 6;

type Counts = Vec<((u64, u64), f64)>;

/// Completions sharing every quantity the posterior depends on.
#[derive(Debug, Clone)]
struct Group {
    edges: usize,
    /// Posterior probability of the group.
    weight: f64,
    /// Counts of all response vectors by `(V0, V1)`.
    full: Counts,
    /// Counts of response vectors agreeing with `Y_INC`.
    consistent: Counts,
    /// `p(γ cell | G)` over the joint grid, `gamma0` major.
    gamma_post: Vec<f64>,
}

/// Exact posterior tables.
#[derive(Debug, Clone)]
pub struct ExactPosterior {
    n_total: usize,
    graph_prior: GraphPrior,
    /// Feasible completions with their posterior probabilities.
    pub completions: Vec<(Graph, f64)>,
    completion_group: Vec<usize>,
    groups: Vec<Group>,
    unsampled: Vec<usize>,
    base: ResponseVector,
    pub alpha_grid: Vec<f64>,
    /// Probability of each `α` cell (nearest grid point).
    pub alpha: Vec<f64>,
    pub gamma0_grid: Vec<f64>,
    pub gamma0: Vec<f64>,
    pub gamma1_grid: Vec<f64>,
    pub gamma1: Vec<f64>,
    /// Joint `γ` cells, `gamma0` major.
    pub gamma_joint: Vec<f64>,
    /// Law of `q_pred` on `{0, 1/N, ..., 1}`.
    pub q_pred: Vec<f64>,
    /// Law of `q_est` on `{0, 1/N, ..., 1}`.
    pub q_est: Vec<f64>,
}

/// Grid on `[lo, hi]` with trapezoid weights; one point when degenerate.
fn axis(lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    if hi <= lo {
        return (vec![lo], vec![1.0]);
    }
    let h = (hi - lo) / (GRID_POINTS - 1) as f64;
    let pts = (0..GRID_POINTS).map(|k| lo + k as f64 * h).collect();
    let w = (0..GRID_POINTS)
        .map(|k| if k == 0 || k == GRID_POINTS - 1 { 0.5 * h } else { h })
        .collect();
    (pts, w)
}

/// Joint `γ` grid cells with normalized quadrature weights, `gamma0` major.
pub(crate) fn gamma_cells(prior: &GammaPrior) -> Vec<(MrfParams, f64)> {
    let (g0, w0) = axis(prior.g0_min, prior.g0_max);
    let (g1, w1) = axis(prior.g1_min, prior.g1_max);
    let total: f64 = w0.iter().sum::<f64>() * w1.iter().sum::<f64>();
    g0.iter()
        .zip(&w0)
        .flat_map(|(&a, &wa)| g1.iter().zip(&w1).map(move |(&b, &wb)| (MrfParams::new(a, b), wa * wb / total)))
        .collect()
}

/// Index of the grid point nearest to `x`.
pub fn nearest(grid: &[f64], x: f64) -> usize {
    if grid.len() == 1 {
        return 0;
    }
    let h = grid[1] - grid[0];
    ((x - grid[0]) / h).round().clamp(0.0, (grid.len() - 1) as f64) as usize
}

/// Total-variation distance between two probability vectors.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions on different supports");
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn normalize(v: &mut [f64]) {
    let z: f64 = v.iter().sum();
    if z > 0.0 {
        v.iter_mut().for_each(|x| *x /= z);
    }
}

fn er_alpha(m: &GraphModel) -> f64 {
    m.pair_prob(0, 0)
}

/// Posterior weights of the atoms of a discrete prior given `edges`.
fn grid_posterior(models: &[GraphModel], weights: &[f64], edges: usize, pairs: usize) -> Vec<f64> {
    let lw: Vec<f64> = models
        .iter()
        .zip(weights)
        .map(|(m, &w)| {
            let a = er_alpha(m);
            if w > 0.0 {
                w.ln() + xlogy(edges as f64, a) + xlogy((pairs - edges) as f64, 1.0 - a)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let z = log_sum_exp(lw.iter().copied());
    lw.iter().map(|l| (l - z).exp()).collect()
}

/// Probability of each `α` cell given a completion with `edges` edges.
fn alpha_cells(prior: &GraphPrior, grid: &[f64], edges: usize, pairs: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; grid.len()];
    match prior {
        GraphPrior::PointMass { model } => out[nearest(grid, er_alpha(model))] = 1.0,
        GraphPrior::BetaEr { tau1, tau2 } => {
            let d = BetaDist::new(tau1 + edges as f64, tau2 + (pairs - edges) as f64)
                .map_err(|e| Error::Parameter(e.to_string()))?;
            let h = grid[1] - grid[0];
            for (k, &x) in grid.iter().enumerate() {
                let lo = (x - 0.5 * h).max(0.0);
                let hi = (x + 0.5 * h).min(1.0);
                out[k] = d.cdf(hi) - d.cdf(lo);
            }
        }
        GraphPrior::DiscreteGrid { models, weights } => {
            for (m, p) in models.iter().zip(grid_posterior(models, weights, edges, pairs)) {
                out[nearest(grid, er_alpha(m))] += p;
            }
        }
    }
    Ok(out)
}

/// `log p(G' | G)` for a specific graph `G'` with `e2` edges, where `α` is
/// drawn from its posterior given a completion with `e1` edges.
fn log_fresh_graph(prior: &GraphPrior, e1: usize, e2: usize, pairs: usize) -> f64 {
    let lp = |a: f64| xlogy(e2 as f64, a) + xlogy((pairs - e2) as f64, 1.0 - a);
    match prior {
        GraphPrior::PointMass { model } => lp(er_alpha(model)),
        GraphPrior::BetaEr { tau1, tau2 } => {
            let (a, b) = (tau1 + e1 as f64, tau2 + (pairs - e1) as f64);
            ln_beta(a + e2 as f64, b + (pairs - e2) as f64) - ln_beta(a, b)
        }
        GraphPrior::DiscreteGrid { models, weights } => log_sum_exp(
            models
                .iter()
                .zip(grid_posterior(models, weights, e1, pairs))
                .filter(|(_, p)| *p > 0.0)
                .map(|(m, p)| p.ln() + lp(er_alpha(m))),
        ),
    }
}

fn energy(v: (u64, u64), p: &MrfParams) -> f64 {
    stat_energy(v.0, v.1, p)
}

/// Builds the exact posterior of `obs` under the priors of `cfg`.
pub fn exact_posterior(obs: &ObservedData, cfg: &InferenceConfig) -> Result<ExactPosterior> {
    build(obs, cfg, true)
}

/// As [`exact_posterior`] but leaves `q_est` empty, skipping the sum over
/// fresh graphs.
pub(crate) fn exact_posterior_without_estimand(obs: &ObservedData, cfg: &InferenceConfig) -> Result<ExactPosterior> {
    build(obs, cfg, false)
}

fn build(obs: &ObservedData, cfg: &InferenceConfig, with_q_est: bool) -> Result<ExactPosterior> {
    let n = cfg.n_total;
    if n == 0 || n > MAX_EXACT_NODES {
        return Err(Error::Size(format!("exact posterior needs 1 <= N <= {MAX_EXACT_NODES}, got {n}")));
    }
    if obs.n_total != n {
        return param(format!("observation has {} nodes but the configuration assumes {n}", obs.n_total));
    }
    cfg.graph_prior.validate()?;
    cfg.graph_prior.require_er()?;
    cfg.gamma_prior.validate()?;
    let pairs = pair_count(n);
    let prior = &cfg.graph_prior;

    let space = CompletionSpace::new(obs)?;
    let raw = space.enumerate()?;
    if raw.is_empty() {
        return Err(Error::Infeasible("no completion has positive probability".into()));
    }
    let logw: Vec<f64> =
        raw.iter().map(|(g, l)| prior.log_marginal_er(g.n_edges(), pairs) + l).collect();
    let lz = log_sum_exp(logw.iter().copied());
    let completions: Vec<(Graph, f64)> =
        raw.into_iter().zip(&logw).map(|((g, _), l)| (g, (l - lz).exp())).collect();

    let base = obs.partial_responses();
    let mut is_sampled = vec![false; n];
    obs.sampled.iter().for_each(|&i| is_sampled[i] = true);
    let unsampled: Vec<usize> = (0..n).filter(|&i| !is_sampled[i]).collect();
    let fill = |idx: u64| {
        let mut y = base.clone();
        for (b, &i) in unsampled.iter().enumerate() {
            y.set(i, idx >> b & 1 == 1);
        }
        y
    };

    // Group completions by edge count and statistic tables.
    let mut index: BTreeMap<(usize, Vec<(u64, u64, u64)>, Vec<(u64, u64, u64)>), usize> = BTreeMap::new();
    let mut groups: Vec<Group> = Vec::new();
    let mut completion_group = Vec::with_capacity(completions.len());
    let key = |c: &Counts| c.iter().map(|&((a, b), k)| (a, b, k as u64)).collect::<Vec<_>>();
    for (g, w) in &completions {
        let full = StatCounts::new(g)?.entries;
        let mut cons: BTreeMap<(u64, u64), f64> = BTreeMap::new();
        for idx in 0..1u64 << unsampled.len() {
            *cons.entry(suff_stats(&fill(idx), g)?).or_insert(0.0) += 1.0;
        }
        let consistent: Counts = cons.into_iter().collect();
        let k = (g.n_edges(), key(&full), key(&consistent));
        let gi = *index.entry(k).or_insert_with(|| {
            groups.push(Group { edges: g.n_edges(), weight: 0.0, full, consistent, gamma_post: Vec::new() });
            groups.len() - 1
        });
        groups[gi].weight += w;
        completion_group.push(gi);
    }

    let gp = &cfg.gamma_prior;
    let (g0_grid, _) = axis(gp.g0_min, gp.g0_max);
    let (g1_grid, _) = axis(gp.g1_min, gp.g1_max);
    let cells = gamma_cells(gp);
    let alpha_grid: Vec<f64> = (0..GRID_POINTS).map(|k| k as f64 / (GRID_POINTS - 1) as f64).collect();

    let mut alpha = vec![0.0; GRID_POINTS];
    let mut gamma_joint = vec![0.0; cells.len()];
    let mut q_pred = vec![0.0; n + 1];
    for grp in &mut groups {
        let mut lp: Vec<f64> = Vec::with_capacity(cells.len());
        let mut log_z = Vec::with_capacity(cells.len());
        for (p, w) in &cells {
            let lz = log_sum_exp(grp.full.iter().map(|&(v, c)| c.ln() + energy(v, p)));
            let ls = log_sum_exp(grp.consistent.iter().map(|&(v, c)| c.ln() + energy(v, p)));
            lp.push(w.ln() + ls - lz);
            log_z.push(ls);
        }
        let z = log_sum_exp(lp.iter().copied());
        grp.gamma_post = lp.iter().map(|l| (l - z).exp()).collect();
        for (k, pg) in grp.gamma_post.iter().enumerate() {
            gamma_joint[k] += grp.weight * pg;
            for &(v, c) in &grp.consistent {
                let py = (c.ln() + energy(v, &cells[k].0) - log_z[k]).exp();
                q_pred[v.0 as usize] += grp.weight * pg * py;
            }
        }
        for (a, p) in alpha.iter_mut().zip(alpha_cells(prior, &alpha_grid, grp.edges, pairs)?) {
            *a += grp.weight * p;
        }
    }
    let n1 = g1_grid.len();
    let mut gamma0 = vec![0.0; g0_grid.len()];
    let mut gamma1 = vec![0.0; n1];
    for (k, p) in gamma_joint.iter().enumerate() {
        gamma0[k / n1] += p;
        gamma1[k % n1] += p;
    }

    let q_est = if with_q_est { estimand_law(n, prior, &cells, &groups)? } else { Vec::new() };

    Ok(ExactPosterior {
        n_total: n,
        graph_prior: prior.clone(),
        completions,
        completion_group,
        groups,
        unsampled,
        base,
        alpha_grid,
        alpha,
        gamma0_grid: g0_grid,
        gamma0,
        gamma1_grid: g1_grid,
        gamma1,
        gamma_joint,
        q_pred,
        q_est,
    })
}

/// Law of the mean of a fresh response vector on a fresh graph, mixed over
/// the posterior of `(α, γ)`.
fn estimand_law(n: usize, prior: &GraphPrior, cells: &[(MrfParams, f64)], groups: &[Group]) -> Result<Vec<f64>> {
    let pairs = pair_count(n);
    let key = |c: &Counts| c.iter().map(|&((a, b), k)| (a, b, k as u64)).collect::<Vec<_>>();
    // Law of V0 on a fresh graph, summed over graphs of each edge count.
    let mut classes: BTreeMap<(usize, Vec<(u64, u64, u64)>), f64> = BTreeMap::new();
    for g in enumerate_graphs(n)? {
        *classes.entry((g.n_edges(), key(&StatCounts::new(&g)?.entries))).or_insert(0.0) += 1.0;
    }
    let mut r = vec![vec![vec![0.0; n + 1]; cells.len()]; pairs + 1];
    for ((e, entries), mult) in &classes {
        for (k, (p, _)) in cells.iter().enumerate() {
            let lz = log_sum_exp(entries.iter().map(|&(a, b, c)| (c as f64).ln() + stat_energy(a, b, p)));
            for &(a, b, c) in entries {
                r[*e][k][a as usize] += mult * ((c as f64).ln() + stat_energy(a, b, p) - lz).exp();
            }
        }
    }
    let mut q_est = vec![0.0; n + 1];
    let mut fresh_cache: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for grp in groups {
        let fresh = fresh_cache
            .entry(grp.edges)
            .or_insert_with(|| (0..=pairs).map(|e2| log_fresh_graph(prior, grp.edges, e2, pairs).exp()).collect());
        for (k, pg) in grp.gamma_post.iter().enumerate() {
            if *pg == 0.0 {
                continue;
            }
            for (e2, pe) in fresh.iter().enumerate() {
                for (q, rv) in q_est.iter_mut().zip(&r[e2][k]) {
                    *q += grp.weight * pg * pe * rv;
                }
            }
        }
    }
    normalize(&mut q_est);
    Ok(q_est)
}

impl ExactPosterior {
    pub fn n_total(&self) -> usize {
        self.n_total
    }

    /// Unsampled nodes, in the bit order of [`Self::y_exc_dist`].
    pub fn unsampled(&self) -> &[usize] {
        &self.unsampled
    }

    fn gamma_cell(&self, k: usize) -> MrfParams {
        let n1 = self.gamma1_grid.len();
        MrfParams::new(self.gamma0_grid[k / n1], self.gamma1_grid[k % n1])
    }

    fn fill(&self, idx: u64) -> ResponseVector {
        let mut y = self.base.clone();
        for (b, &i) in self.unsampled.iter().enumerate() {
            y.set(i, idx >> b & 1 == 1);
        }
        y
    }

    /// Conditional law of `Y_EXC` given a completion and a `γ` cell.
    fn y_given(&self, g: &Graph, p: &MrfParams) -> Vec<f64> {
        let lw: Vec<f64> = (0..1u64 << self.unsampled.len())
            .map(|idx| {
                let (v0, v1) = suff_stats(&self.fill(idx), g).expect("sizes agree");
                stat_energy(v0, v1, p)
            })
            .collect();
        let z = log_sum_exp(lw.iter().copied());
        lw.iter().map(|l| (l - z).exp()).collect()
    }

    /// Posterior law of `Y_EXC` given completion `c`; entry `idx` has bit
    /// `b` equal to the response of `unsampled()[b]`.
    pub fn y_exc_dist(&self, c: usize) -> Vec<f64> {
        let g = &self.completions[c].0;
        let grp = &self.groups[self.completion_group[c]];
        let mut out = vec![0.0; 1 << self.unsampled.len()];
        for (k, pg) in grp.gamma_post.iter().enumerate() {
            if *pg > 0.0 {
                for (o, p) in out.iter_mut().zip(self.y_given(g, &self.gamma_cell(k))) {
                    *o += pg * p;
                }
            }
        }
        out
    }

    /// Joint law of `(completion, Y_EXC)`, completion major.
    pub fn joint(&self) -> Vec<f64> {
        (0..self.completions.len())
            .flat_map(|c| {
                let w = self.completions[c].1;
                self.y_exc_dist(c).into_iter().map(move |p| w * p)
            })
            .collect()
    }

    /// Cell index of a completed `(G, Y)` pair in [`Self::joint`].
    pub fn joint_index(&self, g: &Graph, y: &ResponseVector) -> Option<usize> {
        let c = self.completions.iter().position(|(h, _)| h == g)?;
        let idx = self.unsampled.iter().enumerate().fold(0u64, |a, (b, &i)| a | (y.get(i) as u64) << b);
        Some(c * (1 << self.unsampled.len()) + idx as usize)
    }

    pub fn alpha_bin(&self, x: f64) -> usize {
        nearest(&self.alpha_grid, x)
    }

    pub fn gamma0_bin(&self, x: f64) -> usize {
        nearest(&self.gamma0_grid, x)
    }

    pub fn gamma1_bin(&self, x: f64) -> usize {
        nearest(&self.gamma1_grid, x)
    }

    pub fn q_bin(&self, q: f64) -> usize {
        (q * self.n_total as f64).round() as usize
    }

    /// Independent draws from the tables. `α` is drawn from its continuous
    /// conditional, `γ` from the grid.
    pub fn sample_draws<R: Rng + ?Sized>(
        &self,
        cfg: &InferenceConfig,
        count: usize,
        rng: &mut R,
    ) -> Result<Vec<PosteriorDraw>> {
        let pairs = pair_count(self.n_total);
        let gw: Vec<f64> = self.completions.iter().map(|c| c.1).collect();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let c = sample_index(&gw, rng);
            let g = &self.completions[c].0;
            let grp = &self.groups[self.completion_group[c]];
            let alpha = match &self.graph_prior {
                GraphPrior::PointMass { model } => er_alpha(model),
                GraphPrior::BetaEr { tau1, tau2 } => {
                    Beta::new(tau1 + grp.edges as f64, tau2 + (pairs - grp.edges) as f64)
                        .map_err(|e| Error::Parameter(e.to_string()))?
                        .sample(rng)
                }
                GraphPrior::DiscreteGrid { models, weights } => {
                    let p = grid_posterior(models, weights, grp.edges, pairs);
                    er_alpha(&models[sample_index(&p, rng)])
                }
            };
            let gamma = self.gamma_cell(sample_index(&grp.gamma_post, rng));
            let y = self.fill(sample_index(&self.y_given(g, &gamma), rng) as u64);
            let fresh = gen_er(self.n_total, alpha, rng)?;
            let dist = exact_mrf_dist(&fresh, &gamma)?;
            let y_aug = ResponseVector::from_index(self.n_total, sample_index(&dist, rng) as u64);
            out.push(PosteriorDraw {
                alpha,
                gamma,
                graph: cfg.keep_graphs.then(|| g.clone()),
                q_est: y_aug.mean(),
                q_pred: y.mean(),
                y,
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{observed_data, run_design, run_design_from_seeds, DesignSpec};
    use crate::mrf::GammaPrior;
    use crate::rng::stream;

    fn cfg(n: usize) -> InferenceConfig {
        InferenceConfig { n_total: n, ..Default::default() }
    }

    fn rds_obs() -> ObservedData {
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (1, 3), (2, 3), (3, 4)]).unwrap();
        let y = ResponseVector::from_values(&[1, 0, 1, 1, 0]).unwrap();
        let d = DesignSpec::rds(1, 1, 3);
        let t = run_design_from_seeds(&d, &g, &y, &[0], &mut stream(1, &[])).unwrap();
        observed_data(&t, &g, &y).unwrap()
    }

    #[test]
    fn tables_are_normalized() {
        let e = exact_posterior(&rds_obs(), &cfg(5)).unwrap();
        for v in [&e.alpha, &e.gamma0, &e.gamma1, &e.gamma_joint, &e.q_pred, &e.q_est] {
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!((e.completions.iter().map(|c| c.1).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((e.joint().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    /// Brute-force joint over every completion, `α` cell, `γ` cell and
    /// `Y_EXC`, with normalizers computed from scratch.
    #[test]
    fn matches_brute_force_joint() {
        let obs = rds_obs();
        let mut c = cfg(5);
        c.graph_prior = GraphPrior::DiscreteGrid {
            models: vec![GraphModel::ErdosRenyi { alpha: 0.25 }, GraphModel::ErdosRenyi { alpha: 0.6 }],
            weights: vec![0.3, 0.7],
        };
        c.gamma_prior = GammaPrior::new(-1.0, 1.0, 0.0, 0.5);
        let e = exact_posterior(&obs, &c).unwrap();
        let space = CompletionSpace::new(&obs).unwrap();
        let (g0, w0) = axis(-1.0, 1.0);
        let (g1, w1) = axis(0.0, 0.5);
        let mut alpha = vec![0.0; GRID_POINTS];
        let mut q = vec![0.0; 6];
        let mut total = 0.0;
        for mask in 0u64..1 << 10 {
            let g = Graph::from_mask(5, mask).unwrap();
            if !space.is_consistent(&g) {
                continue;
            }
            let dl = space.design_log_lik(&g).exp();
            for (a, pa) in [(0.25f64, 0.3), (0.6, 0.7)] {
                let pg = a.powi(g.n_edges() as i32) * (1.0f64 - a).powi(10 - g.n_edges() as i32);
                // the α and γ factors separate under the mixture structure
                let graph_w = pa * pg * dl;
                let mut inner = vec![0.0; 6];
                let mut inner_total = 0.0;
                for (&x0, &v0w) in g0.iter().zip(&w0) {
                    for (&x1, &v1w) in g1.iter().zip(&w1) {
                        let p = MrfParams::new(x0, x1);
                        let dist = exact_mrf_dist(&g, &p).unwrap();
                        for (idx, pr) in dist.iter().enumerate() {
                            let y = ResponseVector::from_index(5, idx as u64);
                            if obs.sampled.iter().zip(&obs.y_inc).all(|(&i, &v)| y.get(i) as u8 == v) {
                                inner[y.count_ones()] += v0w * v1w * pr;
                                inner_total += v0w * v1w * pr;
                            }
                        }
                    }
                }
                for k in 0..6 {
                    q[k] += graph_w * inner[k] / inner_total;
                }
                alpha[nearest(&e.alpha_grid, a)] += graph_w;
                total += graph_w;
            }
        }
        for k in 0..6 {
            assert!((q[k] / total - e.q_pred[k]).abs() < 1e-10, "q {k}");
        }
        for k in 0..GRID_POINTS {
            assert!((alpha[k] / total - e.alpha[k]).abs() < 1e-10, "alpha {k}");
        }
    }

    #[test]
    fn census_alpha_is_conjugate() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let y = ResponseVector::zeros(4);
        let t = run_design(&DesignSpec::ego(4), &g, &y, &mut stream(2, &[])).unwrap();
        let e = exact_posterior(&observed_data(&t, &g, &y).unwrap(), &cfg(4)).unwrap();
        let mean: f64 = e.alpha_grid.iter().zip(&e.alpha).map(|(a, p)| a * p).sum();
        assert!((mean - 3.0 / 8.0).abs() < 2e-3, "{mean}");
        assert!((e.q_pred[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_ones_pushes_gamma0_up() {
        let g = Graph::complete(4).unwrap();
        let mean_g0 = |ones: bool| {
            let y = if ones { ResponseVector::ones(4) } else { ResponseVector::zeros(4) };
            let t = run_design(&DesignSpec::ego(4), &g, &y, &mut stream(3, &[])).unwrap();
            let e = exact_posterior(&observed_data(&t, &g, &y).unwrap(), &cfg(4)).unwrap();
            e.gamma0_grid.iter().zip(&e.gamma0).map(|(a, p)| a * p).sum::<f64>()
        };
        assert!(mean_g0(true) > mean_g0(false));
    }

    #[test]
    fn design_factor_changes_gamma() {
        // whether the two seeds are adjacent changes the first adjusted degree
        let g = Graph::from_edges(6, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 4), (2, 5), (3, 4), (4, 5)]).unwrap();
        let y = ResponseVector::from_values(&[1, 1, 0, 1, 0, 1]).unwrap();
        let t = run_design_from_seeds(&DesignSpec::rds(1, 2, 4), &g, &y, &[0, 1], &mut stream(6, &[])).unwrap();
        let obs = observed_data(&t, &g, &y).unwrap();
        let c = cfg(6);
        let with = exact_posterior(&obs, &c).unwrap();
        let without = exact_posterior(&ObservedData { likelihood: None, ..obs.clone() }, &c).unwrap();
        assert!(tv_distance(&with.gamma_joint, &without.gamma_joint) > 1e-6);
    }

    #[test]
    fn point_alpha_ignorable_design_is_design_free() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2)]).unwrap();
        let y = ResponseVector::from_values(&[1, 0, 1, 0]).unwrap();
        let mut c = cfg(4);
        c.graph_prior = GraphPrior::PointMass { model: GraphModel::ErdosRenyi { alpha: 0.4 } };
        let t = run_design_from_seeds(&DesignSpec::ego(2), &g, &y, &[0, 1], &mut stream(4, &[])).unwrap();
        let obs = observed_data(&t, &g, &y).unwrap();
        let mut other = obs.clone();
        other.trace.design = DesignSpec::snowball(2, 0, 2);
        let a = exact_posterior(&obs, &c).unwrap();
        let b = exact_posterior(&other, &c).unwrap();
        assert!(tv_distance(&a.joint(), &b.joint()) < 1e-14);
    }

    #[test]
    fn oracle_draws_match_tables() {
        let obs = rds_obs();
        let mut c = cfg(5);
        c.keep_graphs = true;
        let e = exact_posterior(&obs, &c).unwrap();
        let draws = e.sample_draws(&c, 40_000, &mut stream(5, &[])).unwrap();
        let mut joint = vec![0.0; e.joint().len()];
        let mut qe = vec![0.0; 6];
        for d in &draws {
            joint[e.joint_index(d.graph.as_ref().unwrap(), &d.y).unwrap()] += 1.0 / draws.len() as f64;
            qe[e.q_bin(d.q_est)] += 1.0 / draws.len() as f64;
        }
        assert!(tv_distance(&joint, &e.joint()) < 0.03);
        assert!(tv_distance(&qe, &e.q_est) < 0.03);
    }

    #[test]
    fn too_large_is_rejected() {
        let o = ObservedData::empty(7, DesignSpec::ego(1));
        assert!(matches!(exact_posterior(&o, &cfg(7)), Err(Error::Size(_))));
    }
}
