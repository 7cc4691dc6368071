//! The set of graphs compatible with an observation, and Metropolis moves
//! over it that preserve every reported degree.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::design::{DesignLikelihood, ObservedData};
use crate::error::{Error, Result};
use crate::graph::{iter_bits, nth_set_bit, pair_count, words_for, xlogy, Graph};

/// Largest number of free pairs for the exhaustive feasibility fallback and
/// for [`CompletionSpace::enumerate`].
pub const MAX_ENUM_FREE_PAIRS: usize = 24;

/// Unknown pairs, degree constraints and the design factor of one observation.
#[derive(Debug, Clone)]
pub struct CompletionSpace {
    n: usize,
    words: usize,
    /// Bit rows of pairs whose status is not determined by the observation.
    free: Vec<u64>,
    /// Graph with every known edge and no other edge.
    known: Graph,
    /// Required degree per node, when reported.
    target_degree: Vec<Option<usize>>,
    likelihood: Option<DesignLikelihood>,
}

impl CompletionSpace {
    pub fn new(obs: &ObservedData) -> Result<Self> {
        let n = obs.n_total;
        let words = words_for(n);
        let known = obs.g_inc();
        let mut free = vec![0u64; n * words];
        let mut set_free = |i: usize, j: usize, v: bool| {
            let (a, b) = (i * words + j / 64, j * words + i / 64);
            if v {
                free[a] |= 1 << (j % 64);
                free[b] |= 1 << (i % 64);
            } else {
                free[a] &= !(1 << (j % 64));
                free[b] &= !(1 << (i % 64));
            }
        };
        for i in 0..n {
            for j in i + 1..n {
                if !obs.pair_known(i, j) {
                    set_free(i, j, true);
                }
            }
        }
        if let Some(lik) = &obs.likelihood {
            for (i, j) in lik.forced_non_edges() {
                if known.has_edge(i, j) {
                    return Err(Error::Infeasible(format!("observed edge ({i}, {j}) is excluded by the trace")));
                }
                set_free(i, j, false);
            }
        }
        let mut target_degree = vec![None; n];
        if let Some(d) = &obs.d_inc {
            if obs.observed_rows.is_empty() {
                for (&i, &deg) in obs.sampled.iter().zip(d) {
                    target_degree[i] = Some(deg);
                }
            }
        }
        let space = Self { n, words, free, known, target_degree, likelihood: obs.likelihood.clone() };
        for i in 0..n {
            if let Some(d) = space.target_degree[i] {
                let have = space.known.degree(i);
                let room = space.free_count(i);
                if d < have || d > have + room {
                    return Err(Error::Infeasible(format!(
                        "node {i} reports degree {d} but {have} edges are known and {room} pairs are open"
                    )));
                }
            }
        }
        Ok(space)
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn free_row(&self, i: usize) -> &[u64] {
        &self.free[i * self.words..(i + 1) * self.words]
    }

    fn free_count(&self, i: usize) -> usize {
        self.free_row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_free(&self, i: usize, j: usize) -> bool {
        i != j && self.free[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    /// Free pairs `(i, j)`, `i < j`, in lexicographic order.
    pub fn free_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| iter_bits(self.free_row(i)).filter(move |&j| j > i).map(move |j| (i, j)))
            .collect()
    }

    pub fn is_constrained(&self, i: usize) -> bool {
        self.target_degree[i].is_some()
    }

    pub fn known(&self) -> &Graph {
        &self.known
    }

    pub fn likelihood(&self) -> Option<&DesignLikelihood> {
        self.likelihood.as_ref()
    }

    /// `log p(I | G)`, zero for ignorable designs.
    pub fn design_log_lik(&self, g: &Graph) -> f64 {
        self.likelihood.as_ref().map_or(0.0, |l| l.log_lik(g))
    }

    /// Whether `g` agrees with every known pair and reported degree.
    pub fn is_consistent(&self, g: &Graph) -> bool {
        for i in 0..self.n {
            if let Some(d) = self.target_degree[i] {
                if g.degree(i) != d {
                    return false;
                }
            }
            for j in i + 1..self.n {
                if !self.is_free(i, j) && g.has_edge(i, j) != self.known.has_edge(i, j) {
                    return false;
                }
            }
        }
        true
    }

    /// A random completion satisfying all constraints with positive design
    /// probability. Pairs between unconstrained nodes start as independent
    /// Bernoulli(`alpha0`) draws.
    pub fn initial<R: Rng + ?Sized>(&self, alpha0: f64, rng: &mut R) -> Result<Graph> {
        for _ in 0..64 {
            let mut g = self.known.clone();
            for (i, j) in self.free_pairs() {
                if !self.is_constrained(i) && !self.is_constrained(j) && rng.random::<f64>() < alpha0 {
                    g.set_edge(i, j, true);
                }
            }
            if self.fill_degrees(&mut g, rng) && self.design_log_lik(&g).is_finite() {
                return Ok(g);
            }
        }
        let pairs = self.free_pairs();
        if pairs.len() <= MAX_ENUM_FREE_PAIRS {
            if let Some(g) = self.enumerate_iter().find(|g| self.design_log_lik(g).is_finite()) {
                return Ok(g);
            }
            return Err(Error::Infeasible("no completion satisfies the reported degrees".into()));
        }
        Err(Error::Infeasible(format!(
            "greedy completion failed and {} open pairs are too many to search",
            pairs.len()
        )))
    }

    fn deficit(&self, g: &Graph, i: usize) -> usize {
        self.target_degree[i].map_or(0, |d| d.saturating_sub(g.degree(i)))
    }

    /// Randomized greedy: adds free edges at constrained nodes until every
    /// reported degree is met.
    fn fill_degrees<R: Rng + ?Sized>(&self, g: &mut Graph, rng: &mut R) -> bool {
        let mut order: Vec<usize> = (0..self.n).filter(|&i| self.is_constrained(i)).collect();
        order.shuffle(rng);
        for &i in &order {
            while self.deficit(g, i) > 0 {
                let cands: Vec<usize> = iter_bits(self.free_row(i))
                    .filter(|&u| !g.has_edge(i, u) && (!self.is_constrained(u) || self.deficit(g, u) > 0))
                    .collect();
                if cands.is_empty() {
                    return false;
                }
                let u = cands[rng.random_range(0..cands.len())];
                g.set_edge(i, u, true);
            }
        }
        order.iter().all(|&i| Some(g.degree(i)) == self.target_degree[i])
    }

    fn enumerate_iter(&self) -> impl Iterator<Item = Graph> + '_ {
        let pairs = self.free_pairs();
        let k = pairs.len();
        (0..1u64 << k).filter_map(move |mask| {
            let mut g = self.known.clone();
            for (b, &(i, j)) in pairs.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    g.set_edge(i, j, true);
                }
            }
            (0..self.n)
                .all(|i| self.target_degree[i].is_none_or(|d| g.degree(i) == d))
                .then_some(g)
        })
    }

    /// Every completion with positive design probability, with its design
    /// log-likelihood.
    pub fn enumerate(&self) -> Result<Vec<(Graph, f64)>> {
        let k = self.free_pairs().len();
        if k > MAX_ENUM_FREE_PAIRS {
            return Err(Error::Size(format!("{k} open pairs are too many to enumerate")));
        }
        Ok(self
            .enumerate_iter()
            .map(|g| {
                let l = self.design_log_lik(&g);
                (g, l)
            })
            .filter(|(_, l)| l.is_finite())
            .collect())
    }

    /// Pairs at `v` that are free, unused in the current walk, and currently
    /// an edge (`want_edge`) or a non-edge.
    fn eligible(&self, g: &Graph, v: usize, want_edge: bool, used: &[(usize, usize)]) -> Vec<u64> {
        let mut out: Vec<u64> = self
            .free_row(v)
            .iter()
            .zip(g.row(v))
            .map(|(f, r)| if want_edge { f & r } else { f & !r })
            .collect();
        for &(a, b) in used {
            let other = if a == v {
                b
            } else if b == v {
                a
            } else {
                continue;
            };
            out[other / 64] &= !(1 << (other % 64));
        }
        out
    }

    /// One alternating-walk Metropolis–Hastings move on `g` targeting
    /// `p(G | α) · p(I | G)`. `log_lik` caches the design term of `g`.
    /// Returns whether the move was accepted.
    pub fn walk_move<R: Rng + ?Sized>(
        &self,
        g: &mut Graph,
        log_lik: &mut f64,
        alpha: f64,
        max_len: usize,
        rng: &mut R,
    ) -> bool {
        let v0 = rng.random_range(0..self.n);
        let first_add = rng.random::<bool>();
        let mut used: Vec<(usize, usize)> = Vec::new();
        let mut path = vec![v0];
        let mut log_fwd = 0.0;
        let mut add = first_add;
        let mut cur = v0;
        let mut stopped = false;
        for k in 1..=max_len {
            let elig = self.eligible(g, cur, !add, &used);
            let c: usize = elig.iter().map(|w| w.count_ones() as usize).sum();
            if c == 0 {
                return false;
            }
            let u = nth_set_bit(&elig, rng.random_range(0..c)).expect("index below count");
            log_fwd -= (c as f64).ln();
            used.push((cur.min(u), cur.max(u)));
            cur = u;
            path.push(u);
            let can_stop = if cur == v0 {
                k % 2 == 0 || !self.is_constrained(v0)
            } else {
                !self.is_constrained(v0) && !self.is_constrained(cur)
            };
            if can_stop && rng.random::<bool>() {
                stopped = true;
                break;
            }
            add = !add;
        }
        if !stopped {
            return false;
        }
        let mut delta_edges: i64 = 0;
        let mut t = first_add;
        for &(a, b) in &used {
            g.set_edge(a, b, t);
            delta_edges += if t { 1 } else { -1 };
            t = !t;
        }
        let mut log_rev = 0.0;
        let mut t = first_add;
        for (i, &v) in path[..used.len()].iter().enumerate() {
            // reverse step i removes what the forward step added, and vice versa
            let elig = self.eligible(g, v, t, &used[..i]);
            let c: usize = elig.iter().map(|w| w.count_ones() as usize).sum();
            log_rev -= (c as f64).ln();
            t = !t;
        }
        let new_lik = self.design_log_lik(g);
        let e_old = g.n_edges() as i64 - delta_edges;
        let p = pair_count(self.n) as i64;
        let lp = |e: i64| xlogy(e as f64, alpha) + xlogy((p - e) as f64, 1.0 - alpha);
        let log_ratio = lp(g.n_edges() as i64) - lp(e_old) + new_lik - *log_lik + log_rev - log_fwd;
        if log_ratio.is_finite() && (log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio) {
            *log_lik = new_lik;
            true
        } else {
            let mut t = first_add;
            for &(a, b) in &used {
                g.set_edge(a, b, !t);
                t = !t;
            }
            false
        }
    }
}
