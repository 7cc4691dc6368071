//! Labeled undirected graphs, the Erdős–Rényi and stochastic block models,
//! and exhaustive enumeration for tiny node counts.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Largest node count supported by the dense representation.
pub const MAX_NODES: usize = 4096;
/// Largest node count accepted by [`enumerate_graphs`].
pub const MAX_ENUM_NODES: usize = 8;

/// Number of unordered node pairs, C(n, 2).
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Position of the pair `{i, j}` in lexicographic order of `(min, max)`.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

/// Inverse of [`pair_index`].
pub fn pair_at(n: usize, mut k: usize) -> (usize, usize) {
    let mut a = 0;
    loop {
        let row = n - a - 1;
        if k < row {
            return (a, a + 1 + k);
        }
        k -= row;
        a += 1;
    }
}

pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

/// Index of the `k`-th set bit (0-based) in a word slice.
pub(crate) fn nth_set_bit(words: &[u64], mut k: usize) -> Option<usize> {
    for (w, &word) in words.iter().enumerate() {
        let c = word.count_ones() as usize;
        if k < c {
            let mut x = word;
            for _ in 0..k {
                x &= x - 1;
            }
            return Some(w * 64 + x.trailing_zeros() as usize);
        }
        k -= c;
    }
    None
}

pub(crate) fn iter_bits(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(w, &word)| {
        let mut x = word;
        std::iter::from_fn(move || {
            if x == 0 {
                None
            } else {
                let b = x.trailing_zeros() as usize;
                x &= x - 1;
                Some(w * 64 + b)
            }
        })
    })
}

/// Undirected simple graph on nodes `0..n` stored as dense bit rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
    degree: Vec<u32>,
    n_edges: usize,
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("edges", &self.edges().collect::<Vec<_>>())
            .finish()
    }
}

impl Graph {
    /// Empty graph on `n` nodes.
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_NODES {
            return param(format!("node count {n} outside 1..={MAX_NODES}"));
        }
        let words = words_for(n);
        Ok(Self {
            n,
            words,
            rows: vec![0; n * words],
            degree: vec![0; n],
            n_edges: 0,
        })
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for i in 0..n {
            for j in i + 1..n {
                g.set_edge(i, j, true);
            }
        }
        Ok(g)
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for &(i, j) in edges {
            if i >= n || j >= n || i == j {
                return param(format!("edge ({i}, {j}) invalid for {n} nodes"));
            }
            g.set_edge(i, j, true);
        }
        Ok(g)
    }

    /// Graph whose edge set is given by the bits of `mask` in [`pair_index`] order.
    pub fn from_mask(n: usize, mask: u64) -> Result<Self> {
        let pairs = pair_count(n);
        if pairs > 63 {
            return Err(Error::Size(format!("{pairs} pairs do not fit a 64-bit mask")));
        }
        let mut g = Self::empty(n)?;
        for k in 0..pairs {
            if mask >> k & 1 == 1 {
                let (i, j) = pair_at(n, k);
                g.set_edge(i, j, true);
            }
        }
        Ok(g)
    }

    /// Edge bitmask in [`pair_index`] order; `None` when it does not fit 64 bits.
    pub fn mask(&self) -> Option<u64> {
        if pair_count(self.n) > 63 {
            return None;
        }
        Some(
            self.edges()
                .map(|(i, j)| 1u64 << pair_index(self.n, i, j))
                .fold(0, |a, b| a | b),
        )
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degree[i] as usize
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degree
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.rows[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    /// Adds or removes the edge `{i, j}`. Self-loops are ignored.
    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        if i == j || self.has_edge(i, j) == present {
            return;
        }
        let w = self.words;
        self.rows[i * w + j / 64] ^= 1 << (j % 64);
        self.rows[j * w + i / 64] ^= 1 << (i % 64);
        if present {
            self.degree[i] += 1;
            self.degree[j] += 1;
            self.n_edges += 1;
        } else {
            self.degree[i] -= 1;
            self.degree[j] -= 1;
            self.n_edges -= 1;
        }
    }

    /// Adjacency row of node `i` as packed bits.
    pub fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    pub(crate) fn words(&self) -> usize {
        self.words
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        iter_bits(self.row(i))
    }

    /// Edges `(i, j)` with `i < j` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| self.neighbors(i).filter(move |&j| j > i).map(move |j| (i, j)))
    }

    /// Edge-list text: node count on the first line, then `i j` per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for (i, j) in self.edges() {
            let _ = writeln!(s, "{i} {j}");
        }
        s
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::Parse("empty edge list".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("node count: {e}")))?;
        let mut edges = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace();
            let mut next = || -> Result<usize> {
                it.next()
                    .ok_or_else(|| Error::Parse(format!("malformed edge line `{line}`")))?
                    .parse()
                    .map_err(|e| Error::Parse(format!("edge line `{line}`: {e}")))
            };
            let (i, j) = (next()?, next()?);
            if i >= j {
                return Err(Error::Parse(format!("edge `{line}` must satisfy i < j")));
            }
            edges.push((i, j));
        }
        Self::from_edges(n, &edges)
    }
}

/// A random-graph model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphModel {
    ErdosRenyi {
        alpha: f64,
    },
    Sbm {
        /// Block-allocation probabilities.
        beta: Vec<f64>,
        /// Symmetric block-pair inclusion probabilities.
        alpha: Vec<Vec<f64>>,
    },
}

fn check_prob(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return param(format!("{what} = {p} is not a probability"));
    }
    Ok(())
}

impl GraphModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            GraphModel::ErdosRenyi { alpha } => check_prob(*alpha, "alpha"),
            GraphModel::Sbm { beta, alpha } => {
                let k = beta.len();
                if k == 0 {
                    return param("SBM needs at least one block");
                }
                for &b in beta {
                    check_prob(b, "beta")?;
                }
                let s: f64 = beta.iter().sum();
                if (s - 1.0).abs() > 1e-12 {
                    return param(format!("block probabilities sum to {s}, not 1"));
                }
                if alpha.len() != k || alpha.iter().any(|r| r.len() != k) {
                    return param("SBM inclusion matrix must be K x K");
                }
                for a in 0..k {
                    for b in 0..k {
                        check_prob(alpha[a][b], "alpha")?;
                        if alpha[a][b] != alpha[b][a] {
                            return param("SBM inclusion matrix must be symmetric");
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Edge probability for the pair, given block labels (ignored for ER).
    pub(crate) fn pair_prob(&self, bi: usize, bj: usize) -> f64 {
        match self {
            GraphModel::ErdosRenyi { alpha } => *alpha,
            GraphModel::Sbm { alpha, .. } => alpha[bi][bj],
        }
    }
}

/// Prior over graph-model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphPrior {
    PointMass { model: GraphModel },
    /// Beta(tau1, tau2) prior on the ER edge probability.
    BetaEr { tau1: f64, tau2: f64 },
    DiscreteGrid { models: Vec<GraphModel>, weights: Vec<f64> },
}

impl GraphPrior {
    pub fn validate(&self) -> Result<()> {
        match self {
            GraphPrior::PointMass { model } => model.validate(),
            GraphPrior::BetaEr { tau1, tau2 } => {
                if !(*tau1 > 0.0 && *tau2 > 0.0 && tau1.is_finite() && tau2.is_finite()) {
                    return param(format!("beta shapes ({tau1}, {tau2}) must be positive"));
                }
                Ok(())
            }
            GraphPrior::DiscreteGrid { models, weights } => {
                if models.is_empty() || models.len() != weights.len() {
                    return param("grid prior needs one weight per model");
                }
                for m in models {
                    m.validate()?;
                }
                if weights.iter().any(|&w| !(w >= 0.0)) {
                    return param("grid prior weights must be nonnegative");
                }
                let s: f64 = weights.iter().sum();
                if (s - 1.0).abs() > 1e-12 {
                    return param(format!("grid prior weights sum to {s}, not 1"));
                }
                Ok(())
            }
        }
    }

    /// Draws a model from the prior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GraphModel> {
        use rand_distr::{Beta, Distribution};
        match self {
            GraphPrior::PointMass { model } => Ok(model.clone()),
            GraphPrior::BetaEr { tau1, tau2 } => {
                let b = Beta::new(*tau1, *tau2).map_err(|e| Error::Parameter(e.to_string()))?;
                Ok(GraphModel::ErdosRenyi { alpha: b.sample(rng) })
            }
            GraphPrior::DiscreteGrid { models, weights } => {
                let i = sample_index(weights, rng);
                Ok(models[i].clone())
            }
        }
    }

    /// Returns the ER parameters of the prior, failing on SBM components.
    pub(crate) fn require_er(&self) -> Result<()> {
        let sbm = |m: &GraphModel| matches!(m, GraphModel::Sbm { .. });
        match self {
            GraphPrior::PointMass { model } if sbm(model) => {
                param("posterior inference supports Erdős–Rényi priors only")
            }
            GraphPrior::DiscreteGrid { models, .. } if models.iter().any(sbm) => {
                param("posterior inference supports Erdős–Rényi priors only")
            }
            _ => Ok(()),
        }
    }

    /// log of the prior-marginal probability of a graph with `edges` edges
    /// among `pairs` pairs: log ∫ α^E (1-α)^(P-E) dp(α). ER priors only.
    pub fn log_marginal_er(&self, edges: usize, pairs: usize) -> f64 {
        let (e, p) = (edges as f64, pairs as f64);
        match self {
            GraphPrior::PointMass { model } => er_log_prob(edges, pairs, model.pair_prob(0, 0)),
            GraphPrior::BetaEr { tau1, tau2 } => {
                ln_beta(tau1 + e, tau2 + p - e) - ln_beta(*tau1, *tau2)
            }
            GraphPrior::DiscreteGrid { models, weights } => log_sum_exp(
                models
                    .iter()
                    .zip(weights)
                    .filter(|(_, &w)| w > 0.0)
                    .map(|(m, &w)| w.ln() + er_log_prob(edges, pairs, m.pair_prob(0, 0))),
            ),
        }
    }

    /// Prior mean of the ER edge probability.
    pub fn mean_alpha(&self) -> f64 {
        match self {
            GraphPrior::PointMass { model } => model.pair_prob(0, 0),
            GraphPrior::BetaEr { tau1, tau2 } => tau1 / (tau1 + tau2),
            GraphPrior::DiscreteGrid { models, weights } => {
                models.iter().zip(weights).map(|(m, w)| w * m.pair_prob(0, 0)).sum()
            }
        }
    }
}

pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

pub(crate) fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `x log p` with the convention `0 log 0 = 0`.
pub(crate) fn xlogy(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * p.ln()
    }
}

pub(crate) fn er_log_prob(edges: usize, pairs: usize, alpha: f64) -> f64 {
    xlogy(edges as f64, alpha) + xlogy((pairs - edges) as f64, 1.0 - alpha)
}

/// Samples G(n, alpha).
pub fn gen_er<R: Rng + ?Sized>(n: usize, alpha: f64, rng: &mut R) -> Result<Graph> {
    check_prob(alpha, "alpha")?;
    let mut g = Graph::empty(n)?;
    let pairs = pair_count(n);
    if alpha <= 0.0 {
        return Ok(g);
    }
    if alpha < 0.1 {
        // geometric skipping over the pair sequence
        let log_q = (1.0 - alpha).ln();
        let mut k: usize = 0;
        loop {
            let u: f64 = 1.0 - rng.random::<f64>();
            let skip = (u.ln() / log_q).floor();
            if !skip.is_finite() || skip >= (pairs - k) as f64 {
                break;
            }
            k += skip as usize;
            let (i, j) = pair_at(n, k);
            g.set_edge(i, j, true);
            k += 1;
            if k >= pairs {
                break;
            }
        }
    } else {
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < alpha {
                    g.set_edge(i, j, true);
                }
            }
        }
    }
    Ok(g)
}

/// Samples an SBM graph and returns it with the block label of every node.
pub fn gen_sbm<R: Rng + ?Sized>(
    n: usize,
    model: &GraphModel,
    rng: &mut R,
) -> Result<(Graph, Vec<usize>)> {
    model.validate()?;
    let GraphModel::Sbm { beta, alpha } = model else {
        return param("gen_sbm needs an SBM model");
    };
    let blocks: Vec<usize> = (0..n).map(|_| sample_index(beta, rng)).collect();
    let mut g = Graph::empty(n)?;
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < alpha[blocks[i]][blocks[j]] {
                g.set_edge(i, j, true);
            }
        }
    }
    Ok((g, blocks))
}

/// Samples a graph from either model; ER graphs get a single block.
pub fn gen_graph<R: Rng + ?Sized>(
    n: usize,
    model: &GraphModel,
    rng: &mut R,
) -> Result<(Graph, Vec<usize>)> {
    match model {
        GraphModel::ErdosRenyi { alpha } => Ok((gen_er(n, *alpha, rng)?, vec![0; n])),
        GraphModel::Sbm { .. } => gen_sbm(n, model, rng),
    }
}

/// Exact `log p(G | model)`. For the SBM, `blocks` is required and the block
/// allocation log-probability is included. Returns `-inf` for impossible graphs.
pub fn graph_log_prob(g: &Graph, model: &GraphModel, blocks: Option<&[usize]>) -> Result<f64> {
    model.validate()?;
    let n = g.n_nodes();
    match model {
        GraphModel::ErdosRenyi { alpha } => Ok(er_log_prob(g.n_edges(), pair_count(n), *alpha)),
        GraphModel::Sbm { beta, alpha } => {
            let blocks = blocks.ok_or_else(|| {
                Error::Parameter("SBM log-probability needs block assignments".into())
            })?;
            if blocks.len() != n || blocks.iter().any(|&b| b >= beta.len()) {
                return param("block assignment does not match graph or model");
            }
            let mut lp: f64 = blocks.iter().map(|&b| beta[b].ln()).sum();
            for i in 0..n {
                for j in i + 1..n {
                    let p = alpha[blocks[i]][blocks[j]];
                    lp += if g.has_edge(i, j) { xlogy(1.0, p) } else { xlogy(1.0, 1.0 - p) };
                }
            }
            Ok(lp)
        }
    }
}

/// Iterator over every labeled graph on `n` nodes in ascending edge-mask order.
pub struct GraphEnumeration {
    n: usize,
    next: u64,
    end: u64,
}

impl Iterator for GraphEnumeration {
    type Item = Graph;

    fn next(&mut self) -> Option<Graph> {
        if self.next >= self.end {
            return None;
        }
        let g = Graph::from_mask(self.n, self.next).ok();
        self.next += 1;
        g
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = (self.end - self.next) as usize;
        (r, Some(r))
    }
}

impl ExactSizeIterator for GraphEnumeration {}

/// All `2^C(n,2)` labeled graphs on `n <= 8` nodes.
pub fn enumerate_graphs(n: usize) -> Result<GraphEnumeration> {
    if n == 0 {
        return param("node count must be positive");
    }
    if n > MAX_ENUM_NODES {
        return Err(Error::Size(format!("cannot enumerate graphs on {n} > {MAX_ENUM_NODES} nodes")));
    }
    Ok(GraphEnumeration { n, next: 0, end: 1u64 << pair_count(n) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    #[test]
    fn pair_index_roundtrip() {
        for n in 2..9 {
            for k in 0..pair_count(n) {
                let (i, j) = pair_at(n, k);
                assert!(i < j && j < n);
                assert_eq!(pair_index(n, i, j), k);
                assert_eq!(pair_index(n, j, i), k);
            }
        }
    }

    #[test]
    fn er_extremes() {
        let mut rng = stream(1, &[]);
        assert_eq!(gen_er(4, 0.0, &mut rng).unwrap().n_edges(), 0);
        assert_eq!(gen_er(4, 1.0, &mut rng).unwrap().n_edges(), 6);
        assert!(gen_er(4, 1.5, &mut rng).is_err());
    }

    #[test]
    fn er_mean_edge_count() {
        let mut rng = stream(2, &[]);
        let reps = 100_000;
        let total: usize = (0..reps).map(|_| gen_er(4, 0.3, &mut rng).unwrap().n_edges()).sum();
        let mean = total as f64 / reps as f64;
        let sd = (6.0 * 0.3 * 0.7 / reps as f64).sqrt();
        assert!((mean - 1.8).abs() < 3.0 * sd, "mean {mean}");
    }

    #[test]
    fn er_sparse_path_matches_binomial_mean() {
        // exercises the geometric-skipping branch
        let mut rng = stream(3, &[]);
        let reps = 20_000;
        let total: usize = (0..reps).map(|_| gen_er(20, 0.05, &mut rng).unwrap().n_edges()).sum();
        let mean = total as f64 / reps as f64;
        let p = pair_count(20) as f64;
        let sd = (p * 0.05 * 0.95 / reps as f64).sqrt();
        assert!((mean - p * 0.05).abs() < 4.0 * sd, "mean {mean}");
    }

    #[test]
    fn sbm_zero_one_blocks() {
        let model = GraphModel::Sbm {
            beta: vec![0.5, 0.5],
            alpha: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        };
        let mut rng = stream(4, &[]);
        for _ in 0..50 {
            let (g, b) = gen_sbm(8, &model, &mut rng).unwrap();
            for i in 0..8 {
                for j in i + 1..8 {
                    assert_eq!(g.has_edge(i, j), b[i] == b[j]);
                }
            }
        }
    }

    #[test]
    fn sbm_within_block_frequency() {
        let model = GraphModel::Sbm {
            beta: vec![0.5, 0.5],
            alpha: vec![vec![0.9, 0.1], vec![0.1, 0.9]],
        };
        let mut rng = stream(5, &[]);
        let (mut within, mut within_edges) = (0usize, 0usize);
        for _ in 0..100_000 {
            let (g, b) = gen_sbm(4, &model, &mut rng).unwrap();
            for i in 0..4 {
                for j in i + 1..4 {
                    if b[i] == b[j] {
                        within += 1;
                        within_edges += g.has_edge(i, j) as usize;
                    }
                }
            }
        }
        let f = within_edges as f64 / within as f64;
        let sd = (0.09 / within as f64).sqrt();
        assert!((f - 0.9).abs() < 3.0 * sd, "freq {f}");
    }

    #[test]
    fn single_block_sbm_is_er() {
        let sbm = GraphModel::Sbm { beta: vec![1.0], alpha: vec![vec![0.3]] };
        let er = GraphModel::ErdosRenyi { alpha: 0.3 };
        for g in enumerate_graphs(4).unwrap() {
            let a = graph_log_prob(&g, &sbm, Some(&[0, 0, 0, 0])).unwrap();
            let b = graph_log_prob(&g, &er, None).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn log_prob_examples() {
        let er = |a| GraphModel::ErdosRenyi { alpha: a };
        let e3 = Graph::empty(3).unwrap();
        assert!((graph_log_prob(&e3, &er(0.5), None).unwrap() - 3.0 * 0.5f64.ln()).abs() < 1e-15);
        let k3 = Graph::complete(3).unwrap();
        assert_eq!(graph_log_prob(&k3, &er(1.0), None).unwrap(), 0.0);
        assert_eq!(graph_log_prob(&e3, &er(1.0), None).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn enumeration_counts_and_normalization() {
        assert_eq!(enumerate_graphs(2).unwrap().count(), 2);
        assert_eq!(enumerate_graphs(3).unwrap().count(), 8);
        assert!(enumerate_graphs(9).is_err());
        for n in 2..=5 {
            for &a in &[0.1, 0.3, 0.5] {
                let m = GraphModel::ErdosRenyi { alpha: a };
                let s: f64 = enumerate_graphs(n)
                    .unwrap()
                    .map(|g| graph_log_prob(&g, &m, None).unwrap().exp())
                    .sum();
                assert!((s - 1.0).abs() < 1e-10, "n={n} a={a} sum={s}");
            }
        }
        let masks: Vec<u64> = enumerate_graphs(4).unwrap().map(|g| g.mask().unwrap()).collect();
        assert!(masks.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(masks.len(), 64);
    }

    #[test]
    fn edge_list_roundtrip() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 4), (2, 3)]).unwrap();
        let text = g.to_edge_list();
        assert_eq!(text, "5\n0 1\n1 4\n2 3\n");
        assert_eq!(Graph::from_edge_list(&text).unwrap(), g);
        assert!(Graph::from_edge_list("3\n2 1\n").is_err());
    }

    #[test]
    fn prior_validation() {
        assert!(GraphPrior::BetaEr { tau1: 0.0, tau2: 1.0 }.validate().is_err());
        let grid = GraphPrior::DiscreteGrid {
            models: vec![GraphModel::ErdosRenyi { alpha: 0.2 }],
            weights: vec![0.5],
        };
        assert!(grid.validate().is_err());
        let sbm = GraphModel::Sbm { beta: vec![0.5, 0.6], alpha: vec![vec![0.1; 2]; 2] };
        assert!(sbm.validate().is_err());
    }

    #[test]
    fn beta_marginal_matches_quadrature() {
        let prior = GraphPrior::BetaEr { tau1: 2.0, tau2: 3.0 };
        let (e, p) = (2usize, 6usize);
        // midpoint rule on the Beta(2,3) density times the ER likelihood
        let m = 200_000;
        let mut s = 0.0;
        for k in 0..m {
            let a = (k as f64 + 0.5) / m as f64;
            let dens = 12.0 * a * (1.0 - a).powi(2);
            s += dens * a.powi(e as i32) * (1.0 - a).powi((p - e) as i32) / m as f64;
        }
        assert!((prior.log_marginal_er(e, p) - s.ln()).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn generated_graphs_are_simple(seed in 0u64..1000, n in 1usize..40, a in 0.0f64..1.0) {
            let mut rng = stream(seed, &[]);
            let g = gen_er(n, a, &mut rng).unwrap();
            let mut deg_sum = 0;
            for i in 0..n {
                prop_assert!(!g.has_edge(i, i));
                for j in 0..n {
                    prop_assert_eq!(g.has_edge(i, j), g.has_edge(j, i));
                }
                prop_assert_eq!(g.degree(i), g.neighbors(i).count());
                deg_sum += g.degree(i);
            }
            prop_assert_eq!(deg_sum, 2 * g.n_edges());
        }
    }
}
