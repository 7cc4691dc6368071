//! Experiment configuration, orchestration, artifacts and rankings.

mod config;
mod run;
mod store;

pub use config::{
    parse_config, parse_config_str, CompressionSection, EntropySection, ExperimentConfig, ExperimentKind, GoelSection,
    RiskSection, SuffcheckSection,
};
pub use run::{
    criterion_label, model_label, run_experiment, EntropyRow, EvaluationReport, Metric, ReportRow, SequentialSummary,
    SuffcheckRow,
};
pub use store::{summarize, RankCell, RankRow, Ranking, ResultStore};

use crate::graph::Graph;

/// Named six-node fixtures used by the sufficiency checks.
pub fn fixture_graph(name: &str) -> Option<Graph> {
    match name {
        "k33" => Some(crate::order::k33()),
        "prism" => Some(crate::order::prism()),
        _ => None,
    }
}
