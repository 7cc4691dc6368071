use serde::{Deserialize, Serialize};

use super::{DesignSpec, ObservationRegime};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// One sampled node. Seeds and re-seeds carry no recruiter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Recruit {
    pub node: usize,
    pub wave: usize,
    pub recruiter: Option<usize>,
}

/// Full record of one sampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleTrace {
    pub n_total: usize,
    pub design: DesignSpec,
    pub recruits: Vec<Recruit>,
    /// Response of each recruit, aligned with `recruits`.
    pub responses: Vec<u8>,
    /// Reported degree of each recruit when the design records degrees.
    pub degrees: Option<Vec<usize>>,
    /// The process stalled and either re-seeded or stopped short.
    pub exhausted: bool,
}

#[derive(Serialize, Deserialize)]
struct TraceJson {
    seed_ids: Vec<usize>,
    recruits: Vec<Recruit>,
    responses: Vec<u8>,
    degrees: Option<Vec<usize>>,
    exhausted: bool,
    n_total: usize,
    design: DesignSpec,
}

impl SampleTrace {
    pub fn len(&self) -> usize {
        self.recruits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recruits.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.recruits.iter().map(|r| r.node)
    }

    /// Wave-0 nodes in recruit order.
    pub fn seed_ids(&self) -> Vec<usize> {
        self.recruits.iter().filter(|r| r.wave == 0).map(|r| r.node).collect()
    }

    pub fn n_waves(&self) -> usize {
        self.recruits.last().map_or(0, |r| r.wave + 1)
    }

    pub fn regime(&self) -> ObservationRegime {
        self.design.regime()
    }

    /// `(recruiter, recruit)` pairs in recruit order.
    pub fn recruitment_edges(&self) -> Vec<(usize, usize)> {
        self.recruits
            .iter()
            .filter_map(|r| r.recruiter.map(|s| (s, r.node)))
            .collect()
    }

    /// Checks the structural invariants and, when `g` is given, that every
    /// recruitment edge and reported degree agrees with it.
    pub fn validate(&self, g: Option<&Graph>) -> Result<()> {
        let bad = |m: String| Err(Error::Consistency(m));
        if self.recruits.len() > self.design.target_n {
            return bad(format!("{} recruits exceed target {}", self.len(), self.design.target_n));
        }
        if self.responses.len() != self.len() {
            return bad("responses not aligned with recruits".into());
        }
        if let Some(d) = &self.degrees {
            if d.len() != self.len() {
                return bad("degrees not aligned with recruits".into());
            }
        }
        let mut wave_of = vec![usize::MAX; self.n_total];
        let mut last_wave = 0;
        for r in &self.recruits {
            if r.node >= self.n_total {
                return bad(format!("node {} out of range", r.node));
            }
            if wave_of[r.node] != usize::MAX {
                return bad(format!("node {} recruited twice", r.node));
            }
            if r.wave < last_wave {
                return bad("wave indices decrease".into());
            }
            last_wave = r.wave;
            if let Some(s) = r.recruiter {
                if s >= self.n_total || wave_of[s] == usize::MAX || wave_of[s] >= r.wave {
                    return bad(format!("recruiter {s} of node {} is not from an earlier wave", r.node));
                }
                if let Some(g) = g {
                    if !g.has_edge(s, r.node) {
                        return bad(format!("recruitment edge ({s}, {}) absent from graph", r.node));
                    }
                }
            }
            wave_of[r.node] = r.wave;
        }
        if let (Some(g), Some(d)) = (g, &self.degrees) {
            for (r, &deg) in self.recruits.iter().zip(d) {
                if g.degree(r.node) != deg {
                    return bad(format!("reported degree of node {} differs from graph", r.node));
                }
            }
        }
        if self.responses.iter().any(|&v| v > 1) {
            return bad("responses must be binary".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let j = TraceJson {
            seed_ids: self.seed_ids(),
            recruits: self.recruits.clone(),
            responses: self.responses.clone(),
            degrees: self.degrees.clone(),
            exhausted: self.exhausted,
            n_total: self.n_total,
            design: self.design.clone(),
        };
        serde_json::to_string(&j).expect("trace serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: TraceJson = serde_json::from_str(s)?;
        let t = Self {
            n_total: j.n_total,
            design: j.design,
            recruits: j.recruits,
            responses: j.responses,
            degrees: j.degrees,
            exhausted: j.exhausted,
        };
        if t.seed_ids() != j.seed_ids {
            return Err(Error::Parse("seed_ids disagree with wave-0 recruits".into()));
        }
        t.validate(None)?;
        Ok(t)
    }
}
