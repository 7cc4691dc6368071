//! Stochastic maps between link-tracing and RDS traces, and Monte Carlo
//! checks that a larger design mapped down has the law of the smaller one.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{run_design, DesignKind, DesignSpec, Recruit, SampleTrace, MAX_ENUM_NODES};
use crate::error::{param, Error, Result};
use crate::evaluation::Estimate;
use crate::graph::Graph;
use crate::mrf::ResponseVector;
use crate::rng::stream;

/// Default TV threshold of [`distribution_equivalence_test`].
pub const DEFAULT_TV_THRESHOLD: f64 = 0.02;

const SHARDS: usize = 64;

/// A trace with its nodes listed in canonical order: by wave, then by the
/// position of the recruiter, with seeds in a random order and each
/// seed's component ahead of later seeds' components within a wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalTrace {
    pub n_total: usize,
    /// Design whose law the trace now follows.
    pub design: DesignSpec,
    /// Position `i` holds the node with canonical index `i`.
    pub recruits: Vec<Recruit>,
    pub responses: Vec<u8>,
    pub degrees: Option<Vec<usize>>,
    /// Rank of the seed (or re-seed) whose component holds each node.
    pub component: Vec<usize>,
    pub exhausted: bool,
}

/// Order-free summary used to compare trace laws: the sorted
/// `(node, wave, recruiter)` triples, `usize::MAX` marking a seed.
pub type TraceKey = Vec<(usize, usize, usize)>;

/// Canonical indexing with a uniformly random order of the seeds.
pub fn canonical_indexing<R: Rng + ?Sized>(trace: &SampleTrace, rng: &mut R) -> Result<CanonicalTrace> {
    let mut seeds = trace.seed_ids();
    seeds.shuffle(rng);
    canonical_indexing_with(trace, &seeds)
}

/// Canonical indexing with the seeds in the given order.
pub fn canonical_indexing_with(trace: &SampleTrace, seed_order: &[usize]) -> Result<CanonicalTrace> {
    let mut seeds = trace.seed_ids();
    let mut given = seed_order.to_vec();
    seeds.sort_unstable();
    given.sort_unstable();
    if seeds != given {
        return param("seed order is not a permutation of the trace's seeds");
    }
    let idx: HashMap<usize, usize> = trace.recruits.iter().enumerate().map(|(i, r)| (r.node, i)).collect();
    let mut pos = vec![usize::MAX; trace.n_total];
    let mut comp_of = vec![usize::MAX; trace.n_total];
    let mut order: Vec<usize> = Vec::with_capacity(trace.len());
    let mut comps = 0;
    for &s in seed_order {
        pos[s] = order.len();
        comp_of[s] = comps;
        comps += 1;
        order.push(idx[&s]);
    }
    let waves = trace.n_waves();
    for w in 1..waves {
        let mut layer: Vec<(usize, usize, usize)> = Vec::new();
        let mut reseeds: Vec<usize> = Vec::new();
        for (i, r) in trace.recruits.iter().enumerate() {
            if r.wave != w {
                continue;
            }
            match r.recruiter {
                Some(by) => layer.push((pos[by], r.node, i)),
                None => reseeds.push(i),
            }
        }
        layer.sort_unstable();
        for (_, node, i) in layer {
            let by = trace.recruits[i].recruiter.expect("recruited node");
            pos[node] = order.len();
            comp_of[node] = comp_of[by];
            order.push(i);
        }
        reseeds.sort_unstable_by_key(|&i| trace.recruits[i].node);
        for i in reseeds {
            let node = trace.recruits[i].node;
            pos[node] = order.len();
            comp_of[node] = comps;
            comps += 1;
            order.push(i);
        }
    }
    Ok(CanonicalTrace {
        n_total: trace.n_total,
        design: trace.design.clone(),
        recruits: order.iter().map(|&i| trace.recruits[i]).collect(),
        responses: order.iter().map(|&i| trace.responses[i]).collect(),
        degrees: trace.degrees.as_ref().map(|d| order.iter().map(|&i| d[i]).collect()),
        component: order.iter().map(|&i| comp_of[trace.recruits[i].node]).collect(),
        exhausted: trace.exhausted,
    })
}

impl CanonicalTrace {
    pub fn len(&self) -> usize {
        self.recruits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recruits.is_empty()
    }

    /// Seeds in canonical order.
    pub fn seed_order(&self) -> Vec<usize> {
        self.recruits.iter().filter(|r| r.wave == 0).map(|r| r.node).collect()
    }

    pub fn to_trace(&self) -> SampleTrace {
        SampleTrace {
            n_total: self.n_total,
            design: self.design.clone(),
            recruits: self.recruits.clone(),
            responses: self.responses.clone(),
            degrees: self.degrees.clone(),
            exhausted: self.exhausted,
        }
    }

    pub fn key(&self) -> TraceKey {
        let mut k: TraceKey =
            self.recruits.iter().map(|r| (r.node, r.wave, r.recruiter.unwrap_or(usize::MAX))).collect();
        k.sort_unstable();
        k
    }

    /// Keeps the marked positions; unmarked nodes take their descendants
    /// with them.
    fn retain(&mut self, keep: &mut [bool]) {
        let mut at = vec![usize::MAX; self.n_total];
        for (i, r) in self.recruits.iter().enumerate() {
            at[r.node] = i;
        }
        for i in 0..keep.len() {
            if let Some(by) = self.recruits[i].recruiter {
                if !keep[at[by]] {
                    keep[i] = false;
                }
            }
        }
        let mut it = keep.iter();
        self.recruits.retain(|_| *it.next().unwrap());
        let mut it = keep.iter();
        self.responses.retain(|_| *it.next().unwrap());
        let mut it = keep.iter();
        self.component.retain(|_| *it.next().unwrap());
        if let Some(d) = &mut self.degrees {
            let mut it = keep.iter();
            d.retain(|_| *it.next().unwrap());
        }
    }

    fn n_components(&self) -> usize {
        let mut c = self.component.clone();
        c.sort_unstable();
        c.dedup();
        c.len()
    }
}

fn design_waves(d: &DesignSpec) -> Result<usize> {
    match d.kind {
        DesignKind::LinkTracing { w, .. } | DesignKind::Rds { max_waves: Some(w), .. } => Ok(w),
        _ => param(format!("{} is not a wave-capped link-tracing or RDS design", d.label())),
    }
}

/// Removes the design's final wave; the result follows the design with
/// one wave fewer.
pub fn project_drop_wave(ct: &CanonicalTrace) -> Result<CanonicalTrace> {
    let w = design_waves(&ct.design)?;
    let mut out = ct.clone();
    if w == 0 || ct.is_empty() {
        return Ok(out);
    }
    let mut keep: Vec<bool> = ct.recruits.iter().map(|r| r.wave < w).collect();
    out.retain(&mut keep);
    out.design.kind = match out.design.kind {
        DesignKind::LinkTracing { s, r, .. } => DesignKind::LinkTracing { s, r, w: w - 1 },
        DesignKind::Rds { m, w0, .. } => DesignKind::Rds { m, w0, max_waves: Some(w - 1) },
        _ => unreachable!("checked by design_waves"),
    };
    Ok(out)
}

/// Removes the component of the last seed in canonical order.
pub fn project_drop_seed(ct: &CanonicalTrace) -> Result<CanonicalTrace> {
    design_waves(&ct.design)?;
    let seeds = ct.seed_order();
    if seeds.len() < 2 {
        return param("dropping a seed needs at least two seeds");
    }
    let last = seeds.len() - 1;
    let mut out = ct.clone();
    let mut keep: Vec<bool> = ct.component.iter().map(|&c| c != last).collect();
    out.retain(&mut keep);
    out.design.kind = match out.design.kind {
        DesignKind::LinkTracing { s, r, w } => DesignKind::LinkTracing { s: s - 1, r, w },
        DesignKind::Rds { m, w0, max_waves } => DesignKind::Rds { m, w0: w0 - 1, max_waves },
        _ => unreachable!("checked by design_waves"),
    };
    Ok(out)
}

/// Lowers the referral budget by one: for each wave from the last down to
/// the first, every recruiter over budget loses uniformly chosen recruits
/// together with their descendants.
pub fn thin_referrals<R: Rng + ?Sized>(ct: &CanonicalTrace, rng: &mut R) -> Result<CanonicalTrace> {
    let waves = design_waves(&ct.design)?;
    let budget = match ct.design.kind {
        DesignKind::LinkTracing { r, .. } => r,
        DesignKind::Rds { m, .. } => m,
        _ => unreachable!("checked by design_waves"),
    };
    if budget < 2 {
        return param("thinning needs a referral budget of at least two");
    }
    let r = budget - 1;
    let mut out = ct.clone();
    for w in (1..=waves).rev() {
        let mut by_recruiter: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut at = vec![usize::MAX; out.n_total];
        for (i, rec) in out.recruits.iter().enumerate() {
            at[rec.node] = i;
        }
        for (i, rec) in out.recruits.iter().enumerate() {
            if rec.wave == w {
                if let Some(by) = rec.recruiter {
                    by_recruiter.entry(at[by]).or_default().push(i);
                }
            }
        }
        let mut keep = vec![true; out.len()];
        for kids in by_recruiter.values() {
            if kids.len() > r {
                for &j in rand::seq::index::sample(rng, kids.len(), kids.len() - r).iter().map(|j| &kids[j]) {
                    keep[j] = false;
                }
            }
        }
        out.retain(&mut keep);
    }
    out.design.kind = match out.design.kind {
        DesignKind::LinkTracing { s, w, .. } => DesignKind::LinkTracing { s, r, w },
        DesignKind::Rds { w0, max_waves, .. } => DesignKind::Rds { m: r, w0, max_waves },
        _ => unreachable!("checked by design_waves"),
    };
    Ok(out)
}

/// One of the three maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    DropWave,
    DropSeed,
    Thin,
}

/// Applies a map, with the RDS degree vector following the surviving
/// nodes.
pub fn rds_project<R: Rng + ?Sized>(ct: &CanonicalTrace, which: Transform, rng: &mut R) -> Result<CanonicalTrace> {
    if ct.degrees.is_none() || !matches!(ct.design.kind, DesignKind::Rds { .. }) {
        return param("RDS projections need an RDS trace with reported degrees");
    }
    apply(ct, which, rng)
}

/// Applies a map to a link-tracing or RDS trace.
pub fn apply<R: Rng + ?Sized>(ct: &CanonicalTrace, which: Transform, rng: &mut R) -> Result<CanonicalTrace> {
    match which {
        Transform::DropWave => project_drop_wave(ct),
        Transform::DropSeed => project_drop_seed(ct),
        Transform::Thin => thin_referrals(ct, rng),
    }
}

/// A claimed equality in law: `source` followed by `chain` against `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub name: String,
    pub source: DesignSpec,
    pub chain: Vec<Transform>,
    pub target: DesignSpec,
}

/// Wave-capped RDS with `s` seeds, `r` referrals and `w` waves.
pub fn rds_capped(s: usize, r: usize, w: usize, target_n: usize) -> DesignSpec {
    DesignSpec::new(DesignKind::Rds { m: r, w0: s, max_waves: Some(w) }, target_n)
}

/// The six one-step relations at `(s, r, w)` on a population of `n`
/// nodes, with no sample-size cap.
pub fn standard_relations(s: usize, r: usize, w: usize, n: usize) -> Vec<Relation> {
    let lt = |s, r, w| DesignSpec::link_tracing(s, r, w, n);
    let rds = |s, r, w| rds_capped(s, r, w, n);
    let rel = |name: &str, source, t, target| Relation { name: name.into(), source, chain: vec![t], target };
    vec![
        rel("lt_wave", lt(s, r, w + 1), Transform::DropWave, lt(s, r, w)),
        rel("lt_seed", lt(s + 1, r, w), Transform::DropSeed, lt(s, r, w)),
        rel("lt_referral", lt(s, r + 1, w), Transform::Thin, lt(s, r, w)),
        rel("rds_wave", rds(s, r, w + 1), Transform::DropWave, rds(s, r, w)),
        rel("rds_seed", rds(s + 1, r, w), Transform::DropSeed, rds(s, r, w)),
        rel("rds_referral", rds(s, r + 1, w), Transform::Thin, rds(s, r, w)),
    ]
}

/// Two different designs compared with no map in between.
pub fn negative_control(n: usize) -> Relation {
    Relation {
        name: "negative_control".into(),
        source: DesignSpec::link_tracing(1, 2, 1, n),
        chain: Vec::new(),
        target: DesignSpec::link_tracing(1, 1, 1, n),
    }
}

/// Outcome of one equivalence check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub relation: String,
    pub fixture: String,
    pub tv_estimate: f64,
    pub threshold: f64,
    pub pass: bool,
}

fn sample_key<R: Rng + ?Sized>(
    design: &DesignSpec,
    chain: &[Transform],
    g: &Graph,
    y: &ResponseVector,
    rng: &mut R,
) -> Result<TraceKey> {
    let t = run_design(design, g, y, rng)?;
    let mut ct = canonical_indexing(&t, rng)?;
    for &tr in chain {
        ct = apply(&ct, tr, rng)?;
    }
    Ok(ct.key())
}

/// Estimates the TV distance between the law of `source` mapped by the
/// chain and the law of `target`, each from `n_samples` runs on `g`.
///
/// Shard `j` of 64 simulates the source on stream `[j, 0]` and the target
/// on stream `[j, 1]`. Traces are compared through [`TraceKey`], which
/// forgets the random seed order.
pub fn distribution_equivalence_test(
    relation: &Relation,
    fixture: &str,
    g: &Graph,
    n_samples: usize,
    threshold: f64,
    master: u64,
) -> Result<EquivalenceReport> {
    if g.n_nodes() > MAX_ENUM_NODES {
        return Err(Error::Size(format!("equivalence checks need N <= {MAX_ENUM_NODES}")));
    }
    if n_samples == 0 {
        return param("n_samples must be positive");
    }
    let y = ResponseVector::zeros(g.n_nodes());
    type Counts = BTreeMap<TraceKey, (u64, u64)>;
    let shards: Vec<Result<Counts>> = (0..SHARDS)
        .into_par_iter()
        .map(|j| {
            let count = n_samples / SHARDS + usize::from(j < n_samples % SHARDS);
            let mut c: Counts = BTreeMap::new();
            let mut rs = stream(master, &[j as u64, 0]);
            let mut rt = stream(master, &[j as u64, 1]);
            for _ in 0..count {
                c.entry(sample_key(&relation.source, &relation.chain, g, &y, &mut rs)?).or_default().0 += 1;
                c.entry(sample_key(&relation.target, &[], g, &y, &mut rt)?).or_default().1 += 1;
            }
            Ok(c)
        })
        .collect();
    let mut total: Counts = BTreeMap::new();
    for s in shards {
        for (k, (a, b)) in s? {
            let e = total.entry(k).or_default();
            e.0 += a;
            e.1 += b;
        }
    }
    let n = n_samples as f64;
    let tv = 0.5 * total.values().map(|&(a, b)| (a as f64 / n - b as f64 / n).abs()).sum::<f64>();
    Ok(EquivalenceReport {
        relation: relation.name.clone(),
        fixture: fixture.into(),
        tv_estimate: tv,
        threshold,
        pass: tv < threshold,
    })
}

/// Mean degree of the observed recruitment forest and its number of
/// connected components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleStats {
    pub mean_degree: f64,
    pub components: usize,
}

pub fn counterexample_stats(ct: &CanonicalTrace) -> CounterexampleStats {
    if ct.is_empty() {
        return CounterexampleStats { mean_degree: 0.0, components: 0 };
    }
    let edges = ct.recruits.iter().filter(|r| r.recruiter.is_some()).count();
    CounterexampleStats { mean_degree: 2.0 * edges as f64 / ct.len() as f64, components: ct.n_components() }
}

/// Expected counterexample statistics of a design on a fixed graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignStats {
    pub design: String,
    pub mean_degree: Estimate,
    pub components: Estimate,
}

pub fn expected_stats(design: &DesignSpec, g: &Graph, n_samples: usize, master: u64) -> Result<DesignStats> {
    if n_samples < 2 {
        return param("at least two samples are needed for a standard error");
    }
    let y = ResponseVector::zeros(g.n_nodes());
    let mut rng = stream(master, &[0]);
    let mut deg = Vec::with_capacity(n_samples);
    let mut comp = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let t = run_design(design, g, &y, &mut rng)?;
        let s = counterexample_stats(&canonical_indexing(&t, &mut rng)?);
        deg.push(s.mean_degree);
        comp.push(s.components as f64);
    }
    Ok(DesignStats {
        design: design.label(),
        mean_degree: Estimate::from_samples(&deg),
        components: Estimate::from_samples(&comp),
    })
}

/// `K_{3,3}`.
pub fn k33() -> Graph {
    let mut e = Vec::new();
    for i in 0..3 {
        for j in 3..6 {
            e.push((i, j));
        }
    }
    Graph::from_edges(6, &e).expect("valid fixture")
}

/// Triangular prism: two triangles joined by a perfect matching.
pub fn prism() -> Graph {
    Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4), (2, 5)])
        .expect("valid fixture")
}
