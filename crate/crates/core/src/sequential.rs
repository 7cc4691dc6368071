//! Multi-stage decision trees solved by backward induction, with the
//! two-stage design problem and staged RDS planning built on top.

use std::collections::BTreeMap;

use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::DesignSpec;
use crate::error::{param, Error, Result};
use crate::evaluation::{
    bayes_rule_pmf, enumerate_outcomes, exact_q_law, loss_value, lower_quantile, prior_predictive_q, q_support,
    score_world, world_from_prior, Estimate, EvalConfig, LossSpec,
};
use crate::graph::{gen_graph, pair_count};
use crate::posterior::{gamma_cells, MAX_EXACT_NODES};
use crate::rng::stream;

const PROB_TOL: f64 = 1e-9;

/// One action available at a decision node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub label: String,
    pub child: TreeNode,
}

/// One outcome of a chance node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub label: String,
    pub prob: f64,
    pub child: TreeNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Decision { actions: Vec<Action> },
    Chance { outcomes: Vec<Outcome> },
    Leaf { loss: f64 },
}

impl TreeNode {
    pub fn leaf(loss: f64) -> Self {
        TreeNode::Leaf { loss }
    }

    pub fn decision(actions: Vec<(String, TreeNode)>) -> Self {
        TreeNode::Decision { actions: actions.into_iter().map(|(label, child)| Action { label, child }).collect() }
    }

    pub fn chance(outcomes: Vec<(String, f64, TreeNode)>) -> Self {
        TreeNode::Chance {
            outcomes: outcomes.into_iter().map(|(label, prob, child)| Outcome { label, prob, child }).collect(),
        }
    }

    fn is_decision(&self) -> bool {
        matches!(self, TreeNode::Decision { .. })
    }

    fn is_chance(&self) -> bool {
        matches!(self, TreeNode::Chance { .. })
    }
}

/// Alternating decision and chance layers ending in leaf losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: TreeNode,
}

/// Key of the root history.
pub const ROOT_KEY: &str = "/";

/// History key of the `i`-th action below `parent`.
pub fn action_key(parent: &str, i: usize) -> String {
    child_key(parent, 'a', i)
}

/// History key of the `j`-th outcome below `parent`.
pub fn outcome_key(parent: &str, j: usize) -> String {
    child_key(parent, 'o', j)
}

fn child_key(parent: &str, tag: char, i: usize) -> String {
    if parent == ROOT_KEY {
        format!("/{tag}{i}")
    } else {
        format!("{parent}/{tag}{i}")
    }
}

fn structure<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Structure(msg.into()))
}

impl DecisionTree {
    pub fn new(root: TreeNode) -> Result<Self> {
        let t = Self { root };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        fn go(node: &TreeNode, key: &str) -> Result<()> {
            match node {
                TreeNode::Leaf { loss } => {
                    if !loss.is_finite() {
                        return structure(format!("leaf {key} has a non-finite loss"));
                    }
                }
                TreeNode::Decision { actions } => {
                    if actions.is_empty() {
                        return structure(format!("decision node {key} has no actions"));
                    }
                    for (i, a) in actions.iter().enumerate() {
                        if a.child.is_decision() {
                            return structure(format!("decision node {key} is followed by another decision"));
                        }
                        go(&a.child, &action_key(key, i))?;
                    }
                }
                TreeNode::Chance { outcomes } => {
                    if outcomes.is_empty() {
                        return structure(format!("chance node {key} has no outcomes"));
                    }
                    let mut total = 0.0;
                    for (j, o) in outcomes.iter().enumerate() {
                        if !(o.prob >= 0.0 && o.prob <= 1.0 + PROB_TOL) {
                            return structure(format!("chance node {key} has probability {}", o.prob));
                        }
                        if o.child.is_chance() {
                            return structure(format!("chance node {key} is followed by another chance node"));
                        }
                        total += o.prob;
                        go(&o.child, &outcome_key(key, j))?;
                    }
                    if (total - 1.0).abs() > PROB_TOL {
                        return structure(format!("probabilities at {key} sum to {total}"));
                    }
                }
            }
            Ok(())
        }
        go(&self.root, ROOT_KEY)
    }

    pub fn leaf_count(&self) -> usize {
        fn go(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 1,
                TreeNode::Decision { actions } => actions.iter().map(|a| go(&a.child)).sum(),
                TreeNode::Chance { outcomes } => outcomes.iter().map(|o| go(&o.child)).sum(),
            }
        }
        go(&self.root)
    }

    /// Node reached by a history key.
    pub fn node(&self, key: &str) -> Option<&TreeNode> {
        let mut node = &self.root;
        for seg in key.split('/').filter(|s| !s.is_empty()) {
            let (tag, idx) = seg.split_at(1);
            let i: usize = idx.parse().ok()?;
            node = match (tag, node) {
                ("a", TreeNode::Decision { actions }) => &actions.get(i)?.child,
                ("o", TreeNode::Chance { outcomes }) => &outcomes.get(i)?.child,
                _ => return None,
            };
        }
        Some(node)
    }
}

/// Action taken at one decision history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    pub index: usize,
    pub label: String,
    /// Expected loss from this node on under the policy.
    pub value: f64,
}

/// Optimal action at every decision history, and the root value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub value: f64,
    pub choices: BTreeMap<String, Choice>,
}

impl Policy {
    pub fn action(&self, key: &str) -> Option<&Choice> {
        self.choices.get(key)
    }

    /// `{history key: action label}`.
    pub fn action_map(&self) -> BTreeMap<String, String> {
        self.choices.iter().map(|(k, c)| (k.clone(), c.label.clone())).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.action_map())?)
    }
}

/// Expectations over chance nodes, minima over decision nodes; ties go
/// to the lowest action index.
pub fn backward_induction(tree: &DecisionTree) -> Result<Policy> {
    tree.validate()?;
    fn go(node: &TreeNode, key: &str, out: &mut BTreeMap<String, Choice>) -> f64 {
        match node {
            TreeNode::Leaf { loss } => *loss,
            TreeNode::Chance { outcomes } => outcomes
                .iter()
                .enumerate()
                .map(|(j, o)| o.prob * go(&o.child, &outcome_key(key, j), out))
                .sum(),
            TreeNode::Decision { actions } => {
                let mut best = (0, f64::INFINITY);
                for (i, a) in actions.iter().enumerate() {
                    let v = go(&a.child, &action_key(key, i), out);
                    if v < best.1 {
                        best = (i, v);
                    }
                }
                out.insert(key.to_string(), Choice { index: best.0, label: actions[best.0].label.clone(), value: best.1 });
                best.1
            }
        }
    }
    let mut choices = BTreeMap::new();
    let value = go(&tree.root, ROOT_KEY, &mut choices);
    Ok(Policy { value, choices })
}

/// Actions offered at the inference stage of [`lindley_as_two_stage`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InferenceActions {
    /// Only the Bayes rule of each posterior.
    BayesRule,
    /// The Bayes rule plus the grid `{0, 1/points, …, 1}`.
    BayesRuleAndGrid { points: usize },
}

/// Design choice, then the observation, then the estimate of `Q`, then
/// `Q` itself; all probabilities are exact.
pub fn lindley_as_two_stage(
    candidates: &[DesignSpec],
    cfg: &EvalConfig,
    actions: InferenceActions,
) -> Result<DecisionTree> {
    if candidates.is_empty() {
        return param("no candidate designs");
    }
    cfg.validate()?;
    let n = cfg.n_total();
    if n > MAX_EXACT_NODES {
        return Err(Error::Size(format!("the exact two-stage tree needs N <= {MAX_EXACT_NODES}")));
    }
    if !cfg.loss.is_pointwise() {
        return param("the two-stage tree needs a pointwise loss");
    }
    cfg.world.graph.require_er()?;
    let grid: Vec<f64> = match actions {
        InferenceActions::BayesRule => Vec::new(),
        InferenceActions::BayesRuleAndGrid { points: 0 } => return param("the action grid needs at least one step"),
        InferenceActions::BayesRuleAndGrid { points } => (0..=points).map(|k| k as f64 / points as f64).collect(),
    };
    let pairs = pair_count(n);
    let wp = &cfg.world.graph;
    let cells = gamma_cells(&cfg.world.gamma);
    let support = q_support(n);
    let mut design_branches = Vec::with_capacity(candidates.len());
    for d in candidates {
        d.validate(n)?;
        let outcomes = enumerate_outcomes(d, n, &|g| wp.log_marginal_er(g.n_edges(), pairs), &cells)?;
        let weights: Vec<f64> = outcomes.iter().map(|(_, w)| w.iter().map(|x| x.0).sum()).collect();
        let total: f64 = weights.iter().sum();
        let mut data_branches = Vec::with_capacity(outcomes.len());
        for ((obs, _), w) in outcomes.iter().zip(&weights) {
            let law = exact_q_law(obs, cfg)?;
            let mass: f64 = law.iter().sum();
            let bayes = bayes_rule_pmf(&cfg.loss, &support, &law)?;
            let q_node = |a: f64| -> Result<TreeNode> {
                let outs = support
                    .iter()
                    .zip(&law)
                    .map(|(&q, &p)| Ok((format!("Q={q}"), p / mass, TreeNode::leaf(loss_value(&cfg.loss, a, q)?))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(TreeNode::chance(outs))
            };
            let mut acts = vec![(format!("bayes={bayes}"), q_node(bayes)?)];
            for &a in &grid {
                acts.push((format!("a={a}"), q_node(a)?));
            }
            data_branches.push((obs.key(), w / total, TreeNode::decision(acts)));
        }
        design_branches.push((d.label(), TreeNode::chance(data_branches)));
    }
    DecisionTree::new(TreeNode::decision(design_branches))
}

/// Statistic of the seeds' reported degrees that stage two conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WaveSummary {
    /// Counts of seeds per quartile bin of the prior degree distribution.
    #[default]
    QuartileMultiset,
    /// Quartile bin of the mean seed degree.
    MeanDegreeQuartile,
    /// The sorted seed degrees themselves.
    FullMultiset,
    /// Nothing; stage two cannot adapt.
    Pooled,
}

/// Settings of [`sequential_rds_optimize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialConfig {
    pub w0_grid: Vec<usize>,
    pub m_grid: Vec<usize>,
    pub target_n: usize,
    #[serde(default)]
    pub summary: WaveSummary,
    /// Simulated graphs behind the degree quartiles.
    #[serde(default = "default_degree_draws")]
    pub degree_draws: usize,
}

fn default_degree_draws() -> usize {
    20_000
}

impl SequentialConfig {
    pub fn new(w0_grid: Vec<usize>, m_grid: Vec<usize>, target_n: usize) -> Self {
        Self { w0_grid, m_grid, target_n, summary: WaveSummary::default(), degree_draws: default_degree_draws() }
    }

    pub fn validate(&self, n_total: usize) -> Result<()> {
        if self.w0_grid.is_empty() || self.m_grid.is_empty() {
            return param("both grids must be nonempty");
        }
        if self.degree_draws == 0 {
            return param("degree_draws must be positive");
        }
        for &w0 in &self.w0_grid {
            for &m in &self.m_grid {
                DesignSpec::rds(m, w0, self.target_n).validate(n_total)?;
            }
        }
        Ok(())
    }
}

/// Estimated loss of one fixed `(w0, m)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticScore {
    pub w0: usize,
    pub m: usize,
    pub loss: Estimate,
}

/// Solution of the staged problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialResult {
    pub tree: DecisionTree,
    pub policy: Policy,
    /// Lower quartile, median and upper quartile of the prior degree law.
    pub cutpoints: Vec<f64>,
    pub w0: usize,
    /// Referral budget chosen for each observed summary after the chosen `w0`.
    pub stage_two: BTreeMap<String, usize>,
    /// Loss of the staged policy, with the standard error of its replicate
    /// average.
    pub staged: Estimate,
    pub static_scores: Vec<StaticScore>,
    /// Index into `static_scores` of the best fixed pair, earliest on ties.
    pub best_static: usize,
}

/// Quartiles of the degree of a uniformly chosen node under the world's
/// graph prior.
pub fn degree_quartiles(cfg: &EvalConfig, draws: usize, master: u64) -> Result<Vec<f64>> {
    let n = cfg.n_total();
    let mut rng = stream(master, &[u64::MAX, 3]);
    let graphs = draws.div_ceil(n).max(1);
    let mut degs = Vec::with_capacity(graphs * n);
    for _ in 0..graphs {
        let model = cfg.world.graph.sample(&mut rng)?;
        let (g, _) = gen_graph(n, &model, &mut rng)?;
        degs.extend(g.degrees().iter().map(|&d| d as f64));
    }
    [0.25, 0.5, 0.75].iter().map(|&p| lower_quantile(&degs, p)).collect()
}

fn degree_bin(cut: &[f64], d: f64) -> usize {
    cut.iter().filter(|&&c| d > c).count()
}

fn summarize(summary: WaveSummary, cut: &[f64], degrees: &[usize]) -> String {
    match summary {
        WaveSummary::QuartileMultiset => {
            let mut counts = [0usize; 4];
            for &d in degrees {
                counts[degree_bin(cut, d as f64)] += 1;
            }
            format!("bins={counts:?}")
        }
        WaveSummary::MeanDegreeQuartile => {
            let mean = degrees.iter().sum::<usize>() as f64 / degrees.len() as f64;
            format!("mean_bin={}", degree_bin(cut, mean))
        }
        WaveSummary::FullMultiset => {
            let mut d = degrees.to_vec();
            d.sort_unstable();
            format!("degrees={d:?}")
        }
        WaveSummary::Pooled => "all".to_string(),
    }
}

/// Replicate `i` shares its world (stream `[i, 0]`) across every pair;
/// seeds for the `a`-th seed count come from stream `[i, 1, a]` and are
/// reused for every referral budget, whose run uses stream `[i, 1, a, b]`.
pub fn sequential_rds_optimize(
    scfg: &SequentialConfig,
    cfg: &EvalConfig,
    k: usize,
    master: u64,
) -> Result<SequentialResult> {
    if k < 2 {
        return param("at least two replicates are needed for a standard error");
    }
    cfg.validate()?;
    let n = cfg.n_total();
    scfg.validate(n)?;
    let cut = degree_quartiles(cfg, scfg.degree_draws, master)?;
    let prior = match cfg.loss {
        LossSpec::KlPredictive => Some(prior_predictive_q(cfg, master)?),
        _ => None,
    };
    let (na, nb) = (scfg.w0_grid.len(), scfg.m_grid.len());
    // rows[i][a] = (summary, losses per m)
    type Row = Vec<(String, Vec<f64>)>;
    let rows: Vec<Result<Row>> = (0..k)
        .into_par_iter()
        .map(|i| {
            let world = world_from_prior(cfg, &mut stream(master, &[i as u64, 0]))?;
            let mut row = Vec::with_capacity(na);
            for (a, &w0) in scfg.w0_grid.iter().enumerate() {
                let mut srng = stream(master, &[i as u64, 1, a as u64]);
                let mut seeds = sample_indices(&mut srng, n, w0).into_vec();
                seeds.sort_unstable();
                let degs: Vec<usize> = seeds.iter().map(|&s| world.g.degree(s)).collect();
                let key = summarize(scfg.summary, &cut, &degs);
                let mut losses = Vec::with_capacity(nb);
                for (b, &m) in scfg.m_grid.iter().enumerate() {
                    let d = DesignSpec::rds(m, w0, scfg.target_n);
                    let mut rng = stream(master, &[i as u64, 1, a as u64, b as u64]);
                    let rec = score_world(&d, cfg, &world, Some(&seeds), None, prior.as_deref(), i, &mut rng)?;
                    losses.push(rec.loss);
                }
                row.push((key, losses));
            }
            Ok(row)
        })
        .collect();
    let rows: Vec<Row> = rows.into_iter().collect::<Result<_>>()?;

    let mut static_scores = Vec::with_capacity(na * nb);
    for (a, &w0) in scfg.w0_grid.iter().enumerate() {
        for (b, &m) in scfg.m_grid.iter().enumerate() {
            let xs: Vec<f64> = rows.iter().map(|r| r[a].1[b]).collect();
            static_scores.push(StaticScore { w0, m, loss: Estimate::from_samples(&xs) });
        }
    }
    let mut best_static = 0;
    for (j, s) in static_scores.iter().enumerate() {
        if s.loss.mean < static_scores[best_static].loss.mean {
            best_static = j;
        }
    }

    let kf = k as f64;
    let mut w0_branches = Vec::with_capacity(na);
    let mut bin_labels: Vec<Vec<String>> = Vec::with_capacity(na);
    for (a, &w0) in scfg.w0_grid.iter().enumerate() {
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, r) in rows.iter().enumerate() {
            groups.entry(r[a].0.as_str()).or_default().push(i);
        }
        let mut outs = Vec::with_capacity(groups.len());
        for (key, members) in &groups {
            let acts = scfg
                .m_grid
                .iter()
                .enumerate()
                .map(|(b, &m)| {
                    let mean = members.iter().map(|&i| rows[i][a].1[b]).sum::<f64>() / members.len() as f64;
                    (format!("m={m}"), TreeNode::leaf(mean))
                })
                .collect();
            outs.push((key.to_string(), members.len() as f64 / kf, TreeNode::decision(acts)));
        }
        bin_labels.push(groups.keys().map(|s| s.to_string()).collect());
        w0_branches.push((format!("w0={w0}"), TreeNode::chance(outs)));
    }
    let tree = DecisionTree::new(TreeNode::decision(w0_branches))?;
    let policy = backward_induction(&tree)?;

    let a_star = policy.action(ROOT_KEY).expect("root is a decision node").index;
    let a_key = action_key(ROOT_KEY, a_star);
    let mut stage_two = BTreeMap::new();
    let mut chosen_b: BTreeMap<String, usize> = BTreeMap::new();
    for (j, label) in bin_labels[a_star].iter().enumerate() {
        let b = policy.action(&outcome_key(&a_key, j)).expect("every bin has a decision").index;
        stage_two.insert(label.clone(), scfg.m_grid[b]);
        chosen_b.insert(label.clone(), b);
    }
    let staged_losses: Vec<f64> = rows.iter().map(|r| r[a_star].1[chosen_b[&r[a_star].0]]).collect();

    Ok(SequentialResult {
        tree,
        cutpoints: cut,
        w0: scfg.w0_grid[a_star],
        stage_two,
        staged: Estimate::from_samples(&staged_losses),
        static_scores,
        best_static,
        policy,
    })
}
