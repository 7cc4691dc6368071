use rand::Rng;

use super::{DesignKind, DesignSpec, ObservationRegime, Recruit, SampleTrace};
use crate::error::{param, Error, Result};
use crate::graph::{nth_set_bit, Graph};
use crate::mrf::ResponseVector;

/// Largest node count accepted by [`enumerate_traces`].
pub const MAX_ENUM_NODES: usize = 8;

/// Source of the uniform subset choices made by the sampling process.
pub(crate) trait Chooser {
    /// Uniform `k`-subset of `0..n`, ascending.
    fn subset(&mut self, n: usize, k: usize) -> Vec<usize>;
}

struct RngChooser<'a, R: Rng + ?Sized>(&'a mut R);

impl<R: Rng + ?Sized> Chooser for RngChooser<'_, R> {
    fn subset(&mut self, n: usize, k: usize) -> Vec<usize> {
        if k == 0 {
            return Vec::new();
        }
        if k >= n {
            return (0..n).collect();
        }
        let mut v = rand::seq::index::sample(self.0, n, k).into_vec();
        v.sort_unstable();
        v
    }
}

pub(crate) fn binom(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u64 = 1;
    for i in 0..k {
        r = r * (n - i) as u64 / (i + 1) as u64;
    }
    r
}

/// `rank`-th `k`-subset of `0..n` in lexicographic order.
fn unrank_subset(n: usize, k: usize, mut rank: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        let mut x = next;
        loop {
            let c = binom(n - x - 1, k - slot - 1);
            if rank < c {
                break;
            }
            rank -= c;
            x += 1;
        }
        out.push(x);
        next = x + 1;
    }
    out
}

/// Replays a prefix of choice ranks and takes rank 0 beyond it, recording
/// every choice made and its number of alternatives.
struct ScriptChooser {
    script: Vec<u64>,
    taken: Vec<u64>,
    arities: Vec<u64>,
}

impl Chooser for ScriptChooser {
    fn subset(&mut self, n: usize, k: usize) -> Vec<usize> {
        let k = k.min(n);
        let arity = binom(n, k);
        let pos = self.taken.len();
        let rank = self.script.get(pos).copied().unwrap_or(0);
        self.taken.push(rank);
        self.arities.push(arity);
        unrank_subset(n, k, rank)
    }
}

fn complement(words: &[u64], n: usize) -> Vec<u64> {
    let mut out: Vec<u64> = words.iter().map(|w| !w).collect();
    let tail = n % 64;
    if tail != 0 {
        *out.last_mut().unwrap() &= (1u64 << tail) - 1;
    }
    out
}

fn mark(words: &mut [u64], i: usize) {
    words[i / 64] |= 1 << (i % 64);
}

pub(crate) fn simulate<C: Chooser>(
    design: &DesignSpec,
    g: &Graph,
    seeds: Option<&[usize]>,
    ch: &mut C,
) -> Result<(Vec<Recruit>, bool)> {
    let n = g.n_nodes();
    design.validate(n)?;
    let target = design.target_n;
    let words = g.words();
    let mut sampled = vec![0u64; words];
    let mut recruits: Vec<Recruit> = Vec::with_capacity(target);

    if matches!(design.kind, DesignKind::SequentialRds { .. }) {
        return param("sequential designs need a stage-two policy; see the sequential module");
    }

    let seeds: Vec<usize> = match seeds {
        Some(s) => {
            let mut s = s.to_vec();
            s.sort_unstable();
            s.dedup();
            if s.len() != design.seed_count().unwrap_or(0) || s.iter().any(|&i| i >= n) {
                return param("supplied seeds do not match the design's seed count");
            }
            s
        }
        None => ch.subset(n, design.seed_count().expect("non-sequential design")),
    };
    for &s in &seeds {
        mark(&mut sampled, s);
        recruits.push(Recruit { node: s, wave: 0, recruiter: None });
    }
    if matches!(design.kind, DesignKind::Ego) {
        return Ok((recruits, false));
    }

    let mut frontier = seeds;
    let mut exhausted = false;
    let mut wave = 0;
    let snowball = matches!(design.kind, DesignKind::Snowball { .. });
    while recruits.len() < target {
        let next = wave + 1;
        if design.max_waves().is_some_and(|cap| next > cap) {
            break;
        }
        let mut new = Vec::new();
        if snowball {
            let mut cand = vec![0u64; words];
            for &r in &frontier {
                for (c, (a, s)) in cand.iter_mut().zip(g.row(r).iter().zip(&sampled)) {
                    *c |= a & !s;
                }
            }
            let c: usize = cand.iter().map(|w| w.count_ones() as usize).sum();
            let take = c.min(target - recruits.len());
            for p in ch.subset(c, take) {
                let node = nth_set_bit(&cand, p).expect("index within candidate count");
                let by = *frontier.iter().find(|&&r| g.has_edge(r, node)).expect("adjacent recruiter");
                new.push((node, by));
            }
            for &(node, by) in &new {
                mark(&mut sampled, node);
                recruits.push(Recruit { node, wave: next, recruiter: Some(by) });
            }
        } else {
            let m = design.referral_schedule(next)?;
            for &r in &frontier {
                let remaining = target - recruits.len();
                if remaining == 0 {
                    break;
                }
                let avail: Vec<u64> = g.row(r).iter().zip(&sampled).map(|(a, s)| a & !s).collect();
                let d: usize = avail.iter().map(|w| w.count_ones() as usize).sum();
                let w = m.min(d).min(remaining);
                for p in ch.subset(d, w) {
                    let node = nth_set_bit(&avail, p).expect("index within adjusted degree");
                    mark(&mut sampled, node);
                    recruits.push(Recruit { node, wave: next, recruiter: Some(r) });
                    new.push((node, r));
                }
            }
        }
        if new.is_empty() {
            exhausted = true;
            if snowball || !design.reseeds_on_stall() {
                break;
            }
            let free = complement(&sampled, n);
            let p = ch.subset(n - recruits.len(), 1)[0];
            let node = nth_set_bit(&free, p).expect("an unsampled node remains");
            mark(&mut sampled, node);
            recruits.push(Recruit { node, wave: next, recruiter: None });
            new.push((node, node));
        }
        frontier = new.into_iter().map(|(node, _)| node).collect();
        wave = next;
    }
    Ok((recruits, exhausted))
}

fn make_trace(
    design: &DesignSpec,
    g: &Graph,
    y: &ResponseVector,
    recruits: Vec<Recruit>,
    exhausted: bool,
) -> SampleTrace {
    let responses = recruits.iter().map(|r| y.get(r.node) as u8).collect();
    let degrees = match design.regime() {
        ObservationRegime::RecruitmentTree { degrees: false } => None,
        _ => Some(recruits.iter().map(|r| g.degree(r.node)).collect()),
    };
    SampleTrace { n_total: g.n_nodes(), design: design.clone(), recruits, responses, degrees, exhausted }
}

fn check_y(g: &Graph, y: &ResponseVector) -> Result<()> {
    if y.len() != g.n_nodes() {
        return param("response vector length does not match the graph");
    }
    Ok(())
}

/// Runs the design on `(g, y)`.
pub fn run_design<R: Rng + ?Sized>(
    design: &DesignSpec,
    g: &Graph,
    y: &ResponseVector,
    rng: &mut R,
) -> Result<SampleTrace> {
    check_y(g, y)?;
    let (recs, exh) = simulate(design, g, None, &mut RngChooser(rng))?;
    Ok(make_trace(design, g, y, recs, exh))
}

/// Runs the design with the given wave-0 nodes instead of drawing them.
pub fn run_design_from_seeds<R: Rng + ?Sized>(
    design: &DesignSpec,
    g: &Graph,
    y: &ResponseVector,
    seeds: &[usize],
    rng: &mut R,
) -> Result<SampleTrace> {
    check_y(g, y)?;
    let (recs, exh) = simulate(design, g, Some(seeds), &mut RngChooser(rng))?;
    Ok(make_trace(design, g, y, recs, exh))
}

/// Every realizable trace of the design on `g` with its exact probability,
/// in depth-first order of the underlying choices.
pub fn enumerate_traces(
    design: &DesignSpec,
    g: &Graph,
    y: &ResponseVector,
) -> Result<Vec<(SampleTrace, f64)>> {
    if g.n_nodes() > MAX_ENUM_NODES {
        return Err(Error::Size(format!(
            "trace enumeration needs N <= {MAX_ENUM_NODES}, got {}",
            g.n_nodes()
        )));
    }
    check_y(g, y)?;
    let mut out = Vec::new();
    let mut script: Vec<u64> = Vec::new();
    loop {
        let mut ch = ScriptChooser { script: script.clone(), taken: Vec::new(), arities: Vec::new() };
        let (recs, exh) = simulate(design, g, None, &mut ch)?;
        let p: f64 = ch.arities.iter().map(|&a| 1.0 / a as f64).product();
        out.push((make_trace(design, g, y, recs, exh), p));
        let mut i = ch.taken.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if ch.taken[i] + 1 < ch.arities[i] {
                script = ch.taken[..i].to_vec();
                script.push(ch.taken[i] + 1);
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn path4() -> Graph {
        Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap()
    }

    #[test]
    fn unrank_covers_all_subsets() {
        for n in 0..7 {
            for k in 0..=n {
                let all: Vec<Vec<usize>> = (0..binom(n, k)).map(|r| unrank_subset(n, k, r)).collect();
                let mut sorted = all.clone();
                sorted.sort();
                sorted.dedup();
                assert_eq!(sorted.len(), all.len());
                assert_eq!(sorted, all);
            }
        }
    }

    #[test]
    fn path_chain_from_end_seed() {
        let g = path4();
        let y = ResponseVector::zeros(4);
        let d = DesignSpec::rds(1, 1, 4);
        let mut rng = stream(5, &[]);
        let t = run_design_from_seeds(&d, &g, &y, &[0], &mut rng).unwrap();
        let nodes: Vec<usize> = t.nodes().collect();
        assert_eq!(nodes, vec![0, 1, 2, 3]);
        assert!(!t.exhausted);
        t.validate(Some(&g)).unwrap();
    }

    #[test]
    fn ego_census_and_snowball_all_seeds() {
        let g = path4();
        let y = ResponseVector::ones(4);
        let mut rng = stream(6, &[]);
        let t = run_design(&DesignSpec::ego(4), &g, &y, &mut rng).unwrap();
        assert_eq!(t.len(), 4);
        let t = run_design(&DesignSpec::snowball(4, 2, 4), &g, &y, &mut rng).unwrap();
        assert!(t.recruits.iter().all(|r| r.wave == 0));
    }

    #[test]
    fn target_exceeding_population_is_rejected() {
        let g = path4();
        let y = ResponseVector::zeros(4);
        assert!(run_design(&DesignSpec::rds(1, 1, 5), &g, &y, &mut stream(1, &[])).is_err());
    }

    #[test]
    fn stall_reseeds_or_stops() {
        // two disjoint edges: a single referral chain stalls after one step
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let y = ResponseVector::zeros(4);
        let mut rng = stream(7, &[]);
        let t = run_design_from_seeds(&DesignSpec::rds(1, 1, 4), &g, &y, &[0], &mut rng).unwrap();
        assert_eq!(t.len(), 4);
        assert!(t.exhausted);
        assert_eq!(t.recruits[2].recruiter, None);
        assert_eq!(t.recruits[2].wave, 2);
        let lt = DesignSpec::link_tracing(1, 1, 3, 4);
        let t = run_design_from_seeds(&lt, &g, &y, &[0], &mut rng).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.exhausted);
        assert!(t.degrees.is_none());
    }

    #[test]
    fn enumeration_sums_to_one() {
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (1, 4)]).unwrap();
        let y = ResponseVector::zeros(5);
        for d in [
            DesignSpec::rds(2, 1, 4),
            DesignSpec::rds(1, 2, 5),
            DesignSpec::link_tracing(1, 2, 2, 5),
            DesignSpec::snowball(1, 1, 3),
            DesignSpec::ego(3),
        ] {
            let all = enumerate_traces(&d, &g, &y).unwrap();
            let s: f64 = all.iter().map(|(_, p)| p).sum();
            assert!((s - 1.0).abs() < 1e-12, "{} sums to {s}", d.label());
            let mut keys: Vec<String> = all.iter().map(|(t, _)| t.to_json()).collect();
            keys.sort();
            keys.dedup();
            assert_eq!(keys.len(), all.len(), "duplicate traces for {}", d.label());
        }
    }

    #[test]
    fn snowball_truncation_is_uniform_over_wave() {
        let star = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let y = ResponseVector::zeros(4);
        let all = enumerate_traces(&DesignSpec::snowball(1, 1, 2), &star, &y).unwrap();
        // seeding the centre (1/4) then one of three leaves (1/3)
        let centre: Vec<f64> = all
            .iter()
            .filter(|(t, _)| t.recruits[0].node == 0)
            .map(|(_, p)| *p)
            .collect();
        assert_eq!(centre.len(), 3);
        assert!(centre.iter().all(|p| (p - 1.0 / 12.0).abs() < 1e-15));
    }
}
