//! Boltzmann (autologistic) response model on a graph:
//! `P(y) ∝ exp(γ0·V0 + γ1·V1)` with `V0 = Σ y(i)` and `V1` the number of
//! edges whose endpoints both respond 1.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::graph::{iter_bits, words_for, Graph};
use crate::rng::StreamRng;

/// Largest node count for exhaustive response tables.
pub const MAX_EXACT_NODES: usize = 15;

/// Binary response per node, packed into 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResponseVector {
    n: usize,
    bits: Vec<u64>,
}

impl std::fmt::Debug for ResponseVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ResponseVector(")?;
        for i in 0..self.n {
            write!(f, "{}", self.get(i) as u8)?;
        }
        write!(f, ")")
    }
}

impl ResponseVector {
    pub fn zeros(n: usize) -> Self {
        Self { n, bits: vec![0; words_for(n)] }
    }

    pub fn ones(n: usize) -> Self {
        let mut y = Self::zeros(n);
        for i in 0..n {
            y.set(i, true);
        }
        y
    }

    pub fn from_values(values: &[u8]) -> Result<Self> {
        let mut y = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            match v {
                0 => {}
                1 => y.set(i, true),
                _ => return param(format!("response {v} at node {i} is not binary")),
            }
        }
        Ok(y)
    }

    /// Response vector whose bit `i` is bit `i` of `index`.
    pub fn from_index(n: usize, index: u64) -> Self {
        let mut y = Self::zeros(n);
        if n > 0 {
            y.bits[0] = index;
        }
        y
    }

    /// Inverse of [`ResponseVector::from_index`]; only for `n <= 64`.
    pub fn index(&self) -> u64 {
        self.bits.first().copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        if v {
            self.bits[i / 64] |= 1 << (i % 64);
        } else {
            self.bits[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn mean(&self) -> f64 {
        self.count_ones() as f64 / self.n as f64
    }

    pub fn values(&self) -> Vec<u8> {
        (0..self.n).map(|i| self.get(i) as u8).collect()
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.bits
    }
}

/// Field and interaction strengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrfParams {
    pub gamma0: f64,
    pub gamma1: f64,
}

impl MrfParams {
    pub fn new(gamma0: f64, gamma1: f64) -> Self {
        Self { gamma0, gamma1 }
    }
}

/// Uniform prior on the box `[g0_min, g0_max] × [g1_min, g1_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub g0_min: f64,
    pub g0_max: f64,
    #[serde(default)]
    pub g1_min: f64,
    pub g1_max: f64,
}

impl Default for GammaPrior {
    fn default() -> Self {
        Self { g0_min: -1.0, g0_max: 1.0, g1_min: 0.0, g1_max: 1.0 }
    }
}

impl GammaPrior {
    pub fn new(g0_min: f64, g0_max: f64, g1_min: f64, g1_max: f64) -> Self {
        Self { g0_min, g0_max, g1_min, g1_max }
    }

    /// All mass on `p`.
    pub fn point(p: MrfParams) -> Self {
        Self { g0_min: p.gamma0, g0_max: p.gamma0, g1_min: p.gamma1, g1_max: p.gamma1 }
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.g0_min, self.g0_max, self.g1_min, self.g1_max].iter().all(|x| x.is_finite()) {
            return param("gamma box bounds must be finite");
        }
        if self.g0_min > self.g0_max {
            return param(format!("gamma0 range [{}, {}] is empty", self.g0_min, self.g0_max));
        }
        if self.g1_min < 0.0 || self.g1_min > self.g1_max {
            return param(format!("gamma1 range [{}, {}] must be nonempty and nonnegative", self.g1_min, self.g1_max));
        }
        Ok(())
    }

    pub fn contains(&self, p: &MrfParams) -> bool {
        (self.g0_min..=self.g0_max).contains(&p.gamma0) && (self.g1_min..=self.g1_max).contains(&p.gamma1)
    }

    pub fn is_point_mass(&self) -> bool {
        self.g0_min == self.g0_max && self.g1_min == self.g1_max
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> MrfParams {
        let u0: f64 = rng.random();
        let u1: f64 = rng.random();
        MrfParams {
            gamma0: self.g0_min + u0 * (self.g0_max - self.g0_min),
            gamma1: self.g1_min + u1 * (self.g1_max - self.g1_min),
        }
    }
}

fn check_dims(y: &ResponseVector, g: &Graph) -> Result<()> {
    if y.len() != g.n_nodes() {
        return param(format!(
            "response length {} does not match graph size {}",
            y.len(),
            g.n_nodes()
        ));
    }
    Ok(())
}

/// Number of neighbours of `i` responding 1.
#[inline]
pub fn neighbor_ones(g: &Graph, y: &ResponseVector, i: usize) -> u32 {
    g.row(i).iter().zip(y.words()).map(|(a, b)| (a & b).count_ones()).sum()
}

/// `(V0, V1)`; each edge counted once.
pub fn suff_stats(y: &ResponseVector, g: &Graph) -> Result<(u64, u64)> {
    check_dims(y, g)?;
    let v0 = y.count_ones() as u64;
    let twice_v1: u64 = iter_bits(y.words())
        .map(|i| neighbor_ones(g, y, i) as u64)
        .sum();
    Ok((v0, twice_v1 / 2))
}

pub fn mrf_log_unnorm(y: &ResponseVector, g: &Graph, p: &MrfParams) -> Result<f64> {
    let (v0, v1) = suff_stats(y, g)?;
    Ok(stat_energy(v0, v1, p))
}

pub(crate) fn stat_energy(v0: u64, v1: u64, p: &MrfParams) -> f64 {
    let mut e = 0.0;
    if v0 > 0 {
        e += p.gamma0 * v0 as f64;
    }
    if v1 > 0 {
        e += p.gamma1 * v1 as f64;
    }
    e
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn prob_one_given(s: u32, p: &MrfParams) -> f64 {
    logistic(p.gamma0 + p.gamma1 * s as f64)
}

/// `P(Y(i) = 1 | Y(-i), G, γ)`.
pub fn conditional_prob_one(i: usize, y: &ResponseVector, g: &Graph, p: &MrfParams) -> Result<f64> {
    check_dims(y, g)?;
    if i >= g.n_nodes() {
        return param(format!("node {i} out of range"));
    }
    Ok(prob_one_given(neighbor_ones(g, y, i), p))
}

/// One systematic heat-bath sweep over `nodes`.
pub fn gibbs_sweep_nodes<R: Rng + ?Sized>(
    g: &Graph,
    p: &MrfParams,
    y: &mut ResponseVector,
    nodes: &[usize],
    rng: &mut R,
) {
    for &i in nodes {
        let pr = prob_one_given(neighbor_ones(g, y, i), p);
        let u: f64 = rng.random();
        y.set(i, u < pr);
    }
}

/// One systematic heat-bath sweep over all nodes in order `0..N`.
pub fn gibbs_sweep<R: Rng + ?Sized>(g: &Graph, p: &MrfParams, y: &mut ResponseVector, rng: &mut R) {
    for i in 0..g.n_nodes() {
        let pr = prob_one_given(neighbor_ones(g, y, i), p);
        let u: f64 = rng.random();
        y.set(i, u < pr);
    }
}

/// Runs `sweeps` systematic-scan sweeps from an i.i.d. fair-coin start.
pub fn gibbs_sample<R: Rng + ?Sized>(
    g: &Graph,
    p: &MrfParams,
    sweeps: usize,
    rng: &mut R,
) -> Result<ResponseVector> {
    if sweeps == 0 {
        return param("at least one Gibbs sweep is required");
    }
    let n = g.n_nodes();
    let mut y = ResponseVector::zeros(n);
    for i in 0..n {
        y.set(i, rng.random::<bool>());
    }
    for _ in 0..sweeps {
        gibbs_sweep(g, p, &mut y, rng);
    }
    Ok(y)
}

/// How exact-in-law response draws are produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResponseSampler {
    /// Monotone coupling from the past, falling back to Gibbs with
    /// `fallback_sweeps` (0 means `100·N`) when it does not coalesce within
    /// `max_sweeps` or when `γ1 < 0`.
    Perfect { max_sweeps: usize, fallback_sweeps: usize },
    /// Plain systematic Gibbs with a fixed number of sweeps (0 means `100·N`).
    Gibbs { sweeps: usize },
}

impl Default for ResponseSampler {
    fn default() -> Self {
        ResponseSampler::Perfect { max_sweeps: 1 << 14, fallback_sweeps: 0 }
    }
}

impl ResponseSampler {
    pub fn sample<R: Rng + ?Sized>(&self, g: &Graph, p: &MrfParams, rng: &mut R) -> ResponseVector {
        let default_sweeps = |s: usize| if s == 0 { 100 * g.n_nodes() } else { s };
        match *self {
            ResponseSampler::Perfect { max_sweeps, fallback_sweeps } => {
                match perfect_sample(g, p, max_sweeps, rng) {
                    Some(y) => y,
                    None => gibbs_sample(g, p, default_sweeps(fallback_sweeps), rng)
                        .expect("positive sweep count"),
                }
            }
            ResponseSampler::Gibbs { sweeps } => {
                gibbs_sample(g, p, default_sweeps(sweeps), rng).expect("positive sweep count")
            }
        }
    }
}

/// Monotone coupling from the past. Returns `None` when `γ1 < 0` (the
/// heat-bath update is then not monotone) or when the chains from the
/// all-zero and all-one states have not met after `max_sweeps` sweeps.
pub fn perfect_sample<R: Rng + ?Sized>(
    g: &Graph,
    p: &MrfParams,
    max_sweeps: usize,
    rng: &mut R,
) -> Option<ResponseVector> {
    if p.gamma1 < 0.0 {
        return None;
    }
    let n = g.n_nodes();
    // seeds[k] drives the sweep at time -(k+1)
    let mut seeds: Vec<u64> = Vec::new();
    let mut horizon = 1usize;
    loop {
        while seeds.len() < horizon {
            seeds.push(rng.next_u64());
        }
        let mut lo = ResponseVector::zeros(n);
        let mut hi = ResponseVector::ones(n);
        for k in (0..horizon).rev() {
            let mut sweep_rng = StreamRng::seed_from_u64(seeds[k]);
            for i in 0..n {
                let u: f64 = sweep_rng.random();
                let plo = prob_one_given(neighbor_ones(g, &lo, i), p);
                let phi = prob_one_given(neighbor_ones(g, &hi, i), p);
                lo.set(i, u < plo);
                hi.set(i, u < phi);
            }
        }
        if lo == hi {
            return Some(lo);
        }
        if horizon >= max_sweeps {
            return None;
        }
        horizon = (horizon * 2).min(max_sweeps.max(1));
    }
}

fn check_exact_size(g: &Graph) -> Result<()> {
    if g.n_nodes() > MAX_EXACT_NODES {
        return Err(Error::Size(format!(
            "exact response tables need N <= {MAX_EXACT_NODES}, got {}",
            g.n_nodes()
        )));
    }
    Ok(())
}

/// Probability of every response vector, indexed so that bit `i` of the
/// index is `y(i)`.
pub fn exact_mrf_dist(g: &Graph, p: &MrfParams) -> Result<Vec<f64>> {
    check_exact_size(g)?;
    let n = g.n_nodes();
    let mut logw = Vec::with_capacity(1 << n);
    for idx in 0..1u64 << n {
        let y = ResponseVector::from_index(n, idx);
        logw.push(mrf_log_unnorm(&y, g, p)?);
    }
    let m = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}

/// Number of response vectors for each `(V0, V1)` pair on `g`.
#[derive(Debug, Clone)]
pub struct StatCounts {
    pub entries: Vec<((u64, u64), f64)>,
}

impl StatCounts {
    pub fn new(g: &Graph) -> Result<Self> {
        check_exact_size(g)?;
        let n = g.n_nodes();
        let mut map = std::collections::BTreeMap::new();
        for idx in 0..1u64 << n {
            let y = ResponseVector::from_index(n, idx);
            *map.entry(suff_stats(&y, g)?).or_insert(0.0) += 1.0;
        }
        Ok(Self { entries: map.into_iter().collect() })
    }

    /// `log Z(γ)`.
    pub fn log_partition(&self, p: &MrfParams) -> f64 {
        crate::graph::log_sum_exp(
            self.entries
                .iter()
                .map(|&((v0, v1), c)| c.ln() + stat_energy(v0, v1, p)),
        )
    }
}

/// `log Z(γ)` by enumeration.
pub fn log_partition(g: &Graph, p: &MrfParams) -> Result<f64> {
    Ok(StatCounts::new(g)?.log_partition(p))
}
