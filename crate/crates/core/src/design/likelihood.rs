use statrs::function::factorial::ln_binomial;

use super::{DesignKind, DesignSpec, SampleTrace};
use crate::error::{param, Error, Result};
use crate::graph::{words_for, Graph};

/// One referral step: `recruiter` drew `recruits` among its neighbours in
/// `mask` (the nodes unsampled at that moment) with budget `budget`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecruitEvent {
    pub recruiter: usize,
    pub mask: Vec<u64>,
    pub recruits: Vec<usize>,
    pub budget: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Event {
    Referral(RecruitEvent),
    /// A whole snowball wave drawn from the unsampled neighbours of `frontier`.
    Wave { frontier: Vec<usize>, mask: Vec<u64>, chosen: Vec<usize>, remaining: usize },
}

/// The design factor `p(I | G, η)` of a fixed trace as a function of `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignLikelihood {
    n_total: usize,
    /// `log 1/C(N, w0)` for the uniform seed draw.
    pub seed_term: f64,
    /// Terms that do not depend on `G` (re-seeds).
    pub constant: f64,
    events: Vec<Event>,
}

fn in_mask(mask: &[u64], i: usize) -> bool {
    mask[i / 64] >> (i % 64) & 1 == 1
}

fn popcount_and(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
}

impl DesignLikelihood {
    /// Replays the trace's recruitment structure. Fails when the trace could
    /// not have been produced by its design on any graph.
    pub fn from_trace(trace: &SampleTrace) -> Result<Self> {
        let design = &trace.design;
        let n = trace.n_total;
        design.validate(n)?;
        trace.validate(None)?;
        let bad = |m: &str| Err(Error::Consistency(m.to_string()));
        let target = design.target_n;
        let recs = &trace.recruits;
        let w0 = recs.iter().take_while(|r| r.wave == 0).count();
        if Some(w0) != design.seed_count() {
            return bad("seed count differs from the design");
        }
        let mut out = Self {
            n_total: n,
            seed_term: -ln_binomial(n as u64, w0 as u64),
            constant: 0.0,
            events: Vec::new(),
        };
        if matches!(design.kind, DesignKind::Ego) {
            return Ok(out);
        }
        let snowball = matches!(design.kind, DesignKind::Snowball { .. });
        let mut unsampled = vec![!0u64; words_for(n)];
        if n % 64 != 0 {
            *unsampled.last_mut().unwrap() &= (1u64 << (n % 64)) - 1;
        }
        let take = |mask: &mut Vec<u64>, i: usize| mask[i / 64] &= !(1 << (i % 64));
        for r in &recs[..w0] {
            take(&mut unsampled, r.node);
        }
        let mut frontier: Vec<usize> = recs[..w0].iter().map(|r| r.node).collect();
        let mut pos = w0;
        let mut wave = 0;
        loop {
            let count = pos;
            if count >= target {
                break;
            }
            let next = wave + 1;
            if design.max_waves().is_some_and(|cap| next > cap) {
                break;
            }
            let end = pos + recs[pos..].iter().take_while(|r| r.wave == next).count();
            let wave_recs = &recs[pos..end];
            let mut new = Vec::new();
            if snowball {
                let chosen: Vec<usize> = wave_recs.iter().map(|r| r.node).collect();
                out.events.push(Event::Wave {
                    frontier: frontier.clone(),
                    mask: unsampled.clone(),
                    chosen: chosen.clone(),
                    remaining: target - count,
                });
                for &c in &chosen {
                    take(&mut unsampled, c);
                }
                new = chosen;
            } else {
                let m = design.referral_schedule(next)?;
                let mut k = 0;
                let mut added = count;
                for &r in &frontier {
                    if added >= target {
                        break;
                    }
                    let mut group = Vec::new();
                    while k < wave_recs.len() && wave_recs[k].recruiter == Some(r) {
                        group.push(wave_recs[k].node);
                        k += 1;
                    }
                    out.events.push(Event::Referral(RecruitEvent {
                        recruiter: r,
                        mask: unsampled.clone(),
                        recruits: group.clone(),
                        budget: m.min(target - added),
                    }));
                    for &c in &group {
                        take(&mut unsampled, c);
                    }
                    added += group.len();
                    new.extend(group);
                }
                if new.is_empty() && k < wave_recs.len() {
                    let rec = wave_recs[k];
                    if rec.recruiter.is_some() || wave_recs.len() != 1 {
                        return bad("recruits not grouped by recruiter in frontier order");
                    }
                    if !design.reseeds_on_stall() {
                        return bad("design does not re-seed after a stall");
                    }
                    let free = n - count;
                    out.constant -= (free as f64).ln();
                    take(&mut unsampled, rec.node);
                    new.push(rec.node);
                    k += 1;
                }
                if k != wave_recs.len() {
                    return bad("recruits not grouped by recruiter in frontier order");
                }
            }
            pos = end;
            if new.is_empty() {
                if end != recs.len() {
                    return bad("recruits continue after an empty wave");
                }
                if design.reseeds_on_stall() && !snowball {
                    return bad("stalled chain ended without the re-seed the design requires");
                }
                break;
            }
            frontier = new;
            wave = next;
        }
        if pos != recs.len() {
            return bad("recruits beyond the design's stopping point");
        }
        Ok(out)
    }

    /// `log p(I | G, η)` including the seed term; `-inf` when impossible.
    pub fn log_lik(&self, g: &Graph) -> f64 {
        self.seed_term + self.referral_log_lik(g)
    }

    /// `log p(I | G, η)` without the seed term.
    pub fn referral_log_lik(&self, g: &Graph) -> f64 {
        let mut s = self.constant;
        for e in &self.events {
            match e {
                Event::Referral(ev) => {
                    let row = g.row(ev.recruiter);
                    if ev.recruits.iter().any(|&c| !g.has_edge(ev.recruiter, c)) {
                        return f64::NEG_INFINITY;
                    }
                    let d = popcount_and(row, &ev.mask);
                    let w = ev.recruits.len();
                    if w > d || (w < ev.budget && d != w) {
                        return f64::NEG_INFINITY;
                    }
                    s -= ln_binomial(d as u64, w as u64);
                }
                Event::Wave { frontier, mask, chosen, remaining } => {
                    let mut cand = vec![0u64; mask.len()];
                    for &f in frontier {
                        for (c, (a, m)) in cand.iter_mut().zip(g.row(f).iter().zip(mask)) {
                            *c |= a & m;
                        }
                    }
                    if chosen.iter().any(|&c| !in_mask(&cand, c)) {
                        return f64::NEG_INFINITY;
                    }
                    let c: usize = cand.iter().map(|w| w.count_ones() as usize).sum();
                    let take = c.min(*remaining);
                    if chosen.len() != take {
                        return f64::NEG_INFINITY;
                    }
                    s -= ln_binomial(c as u64, take as u64);
                }
            }
        }
        s
    }

    /// Referral events in replay order.
    pub fn referral_events(&self) -> impl Iterator<Item = &RecruitEvent> {
        self.events.iter().filter_map(|e| match e {
            Event::Referral(ev) => Some(ev),
            Event::Wave { .. } => None,
        })
    }

    /// Pairs that must be non-edges for the trace to have positive
    /// probability: a recruiter that used less than its budget had no other
    /// unsampled neighbour.
    pub fn forced_non_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for ev in self.referral_events() {
            if ev.recruits.len() < ev.budget {
                for u in crate::graph::iter_bits(&ev.mask) {
                    if u != ev.recruiter && !ev.recruits.contains(&u) {
                        out.push((ev.recruiter.min(u), ev.recruiter.max(u)));
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }
}

fn check_design(trace: &SampleTrace, g: &Graph, design: &DesignSpec) -> Result<()> {
    if &trace.design != design {
        return param(format!(
            "trace was produced by {}, not {}",
            trace.design.label(),
            design.label()
        ));
    }
    if trace.n_total != g.n_nodes() {
        return param("trace and graph sizes differ");
    }
    trace.validate(Some(g))
}

/// Exact `log p(I | G, η)` of a trace, seed term included.
pub fn rds_log_likelihood(trace: &SampleTrace, g: &Graph, design: &DesignSpec) -> Result<f64> {
    check_design(trace, g, design)?;
    Ok(DesignLikelihood::from_trace(trace)?.log_lik(g))
}

/// Exact `log p(I | G, η)` without the seed term.
pub fn referral_log_likelihood(trace: &SampleTrace, g: &Graph, design: &DesignSpec) -> Result<f64> {
    check_design(trace, g, design)?;
    Ok(DesignLikelihood::from_trace(trace)?.referral_log_lik(g))
}

/// Exact log-probability of the trace under its own design.
pub fn trace_log_prob(trace: &SampleTrace, g: &Graph) -> Result<f64> {
    rds_log_likelihood(trace, g, &trace.design)
}
