use super::{DesignLikelihood, ObservationRegime, SampleTrace};
use crate::error::{param, Result};
use crate::graph::Graph;
use crate::mrf::ResponseVector;

/// The observed part of the data: sampled nodes, their responses and
/// reported degrees, and the known adjacency entries.
#[derive(Debug, Clone)]
pub struct ObservedData {
    pub n_total: usize,
    pub trace: SampleTrace,
    /// Sampled nodes in recruit order.
    pub sampled: Vec<usize>,
    pub y_inc: Vec<u8>,
    pub d_inc: Option<Vec<usize>>,
    /// Known edges, `(i, j)` with `i < j`, sorted.
    pub edges: Vec<(usize, usize)>,
    /// Nodes whose full adjacency row is known, sorted.
    pub observed_rows: Vec<usize>,
    /// Design factor, present when the design is not ignorable.
    pub likelihood: Option<DesignLikelihood>,
}

impl ObservedData {
    /// Builds the observed data from a trace alone; `g_rows` supplies the
    /// adjacency rows of the sampled nodes for full-row designs.
    pub fn from_trace(trace: &SampleTrace, g_rows: Option<&Graph>) -> Result<Self> {
        let n = trace.n_total;
        let sampled: Vec<usize> = trace.nodes().collect();
        let mut edges: Vec<(usize, usize)> =
            trace.recruitment_edges().into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        let mut observed_rows = Vec::new();
        let likelihood = match trace.regime() {
            ObservationRegime::FullRows => {
                let g = match g_rows {
                    Some(g) => g,
                    None => return param("full-row designs need the graph to extract rows"),
                };
                for &i in &sampled {
                    for j in g.neighbors(i) {
                        edges.push((i.min(j), i.max(j)));
                    }
                }
                observed_rows = sampled.clone();
                observed_rows.sort_unstable();
                None
            }
            ObservationRegime::RecruitmentTree { .. } => Some(DesignLikelihood::from_trace(trace)?),
        };
        edges.sort_unstable();
        edges.dedup();
        Ok(Self {
            n_total: n,
            trace: trace.clone(),
            sampled,
            y_inc: trace.responses.clone(),
            d_inc: trace.degrees.clone(),
            edges,
            observed_rows,
            likelihood,
        })
    }

    /// Observation with nothing sampled.
    pub fn empty(n_total: usize, design: super::DesignSpec) -> Self {
        Self {
            n_total,
            trace: SampleTrace {
                n_total,
                design,
                recruits: Vec::new(),
                responses: Vec::new(),
                degrees: None,
                exhausted: false,
            },
            sampled: Vec::new(),
            y_inc: Vec::new(),
            d_inc: None,
            edges: Vec::new(),
            observed_rows: Vec::new(),
            likelihood: None,
        }
    }

    /// Graph on all `N` nodes containing exactly the known edges.
    pub fn g_inc(&self) -> Graph {
        Graph::from_edges(self.n_total, &self.edges).expect("edges validated at construction")
    }

    /// Whether the status of pair `{i, j}` is observed.
    pub fn pair_known(&self, i: usize, j: usize) -> bool {
        self.observed_rows.binary_search(&i).is_ok()
            || self.observed_rows.binary_search(&j).is_ok()
            || self.edges.binary_search(&(i.min(j), i.max(j))).is_ok()
    }

    /// Canonical text key identifying the observation.
    pub fn key(&self) -> String {
        let mut rows = String::new();
        for (i, j) in &self.edges {
            rows.push_str(&format!("{i}-{j},"));
        }
        format!(
            "{}|{:?}|{:?}|{:?}|{}",
            self.trace.to_json(),
            self.y_inc,
            self.d_inc,
            self.observed_rows,
            rows
        )
    }

    /// Response vector with observed entries filled and the rest zero.
    pub fn partial_responses(&self) -> ResponseVector {
        let mut y = ResponseVector::zeros(self.n_total);
        for (&i, &v) in self.sampled.iter().zip(&self.y_inc) {
            y.set(i, v == 1);
        }
        y
    }
}

/// Extracts the observed data of `trace` run on `(g, y)`.
pub fn observed_data(trace: &SampleTrace, g: &Graph, y: &ResponseVector) -> Result<ObservedData> {
    trace.validate(Some(g))?;
    for (r, &v) in trace.recruits.iter().zip(&trace.responses) {
        if y.get(r.node) as u8 != v {
            return param(format!("recorded response of node {} differs from y", r.node));
        }
    }
    ObservedData::from_trace(trace, Some(g))
}
