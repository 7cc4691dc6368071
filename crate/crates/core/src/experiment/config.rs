use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::design::DesignSpec;
use crate::error::{Error, Result};
use crate::evaluation::{AlphaMixture, CompressionConfig, EvalConfig, GdScope, LossSpec, WorldPrior};
use crate::graph::{GraphModel, GraphPrior};
use crate::mrf::MrfParams;
use crate::posterior::{InferenceConfig, InferenceMode, Target, MAX_EXACT_NODES};
use crate::sequential::SequentialConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Compare,
    Risk,
    CompressScore,
    Entropy,
    Sequential,
    Suffcheck,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Compare => "compare",
            ExperimentKind::Risk => "risk",
            ExperimentKind::CompressScore => "compress_score",
            ExperimentKind::Entropy => "entropy",
            ExperimentKind::Sequential => "sequential",
            ExperimentKind::Suffcheck => "suffcheck",
        }
    }

    fn needs_designs(&self) -> bool {
        matches!(self, ExperimentKind::Compare | ExperimentKind::Risk | ExperimentKind::CompressScore)
    }
}

/// True parameters for frequentist risk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskSection {
    pub alpha: f64,
    pub gamma0: f64,
    pub gamma1: f64,
}

impl RiskSection {
    pub fn gamma(&self) -> MrfParams {
        MrfParams::new(self.gamma0, self.gamma1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompressionSection {
    pub mixture: AlphaMixture,
    #[serde(default = "default_completion_draws")]
    pub completion_draws: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub moves_per_draw: usize,
    #[serde(default = "default_max_walk")]
    pub max_walk: usize,
}

fn default_completion_draws() -> usize {
    100
}
fn default_burn_in() -> usize {
    200
}
fn default_max_walk() -> usize {
    16
}

/// Two graph priors whose prior predictive laws are compared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoelSection {
    pub prior1: GraphPrior,
    pub prior2: GraphPrior,
    #[serde(default)]
    pub scope: GdScope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropySection {
    pub models: Vec<GraphModel>,
    #[serde(default = "yes")]
    pub bits: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuffcheckSection {
    /// Any of `k33`, `prism`.
    #[serde(default = "default_fixtures")]
    pub fixtures: Vec<String>,
    /// `(s, r, w)` triples at which the six relations are instantiated.
    #[serde(default = "default_params")]
    pub params: Vec<[usize; 3]>,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "yes")]
    pub negative_control: bool,
    /// `(s, r, w)` for the counterexample statistics on a 4-regular graph.
    #[serde(default = "default_counter")]
    pub counterexample: [usize; 3],
}

fn default_fixtures() -> Vec<String> {
    vec!["k33".into(), "prism".into()]
}
fn default_params() -> Vec<[usize; 3]> {
    vec![[1, 1, 1]]
}
fn default_samples() -> usize {
    1_000_000
}
fn default_threshold() -> f64 {
    crate::order::DEFAULT_TV_THRESHOLD
}
fn default_counter() -> [usize; 3] {
    [1, 2, 2]
}

/// One experiment, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub replicates: usize,
    pub n_total: usize,
    pub out: Option<String>,
    pub world: WorldPrior,
    pub inference: InferenceConfig,
    pub loss: LossSpec,
    pub target: Target,
    pub table_draws: usize,
    pub prior_draws: usize,
    pub designs: Vec<DesignSpec>,
    pub risk: Option<RiskSection>,
    pub compression: Option<CompressionSection>,
    pub goel: Option<GoelSection>,
    pub entropy: Option<EntropySection>,
    pub sequential: Option<SequentialConfig>,
    pub suffcheck: Option<SuffcheckSection>,
    /// Replicates whose traces are written to `traces/`.
    pub save_traces: usize,
    /// Replicates whose posterior draws are written to `draws/`.
    pub dump_draws: usize,
    /// Half-width multiplier of the intervals used for tie flags.
    pub tie_z: f64,
    /// Add exhaustive values where the population is small enough.
    pub exact: bool,
}

const KEYS: &[&str] = &[
    "kind",
    "seed",
    "replicates",
    "n_total",
    "out",
    "world",
    "inference",
    "loss",
    "target",
    "table_draws",
    "prior_draws",
    "designs",
    "risk",
    "compression",
    "goel",
    "entropy",
    "sequential",
    "suffcheck",
    "save_traces",
    "dump_draws",
    "tie_z",
    "exact",
];

fn take<T: DeserializeOwned>(table: &toml::Table, key: &str, errs: &mut Vec<String>) -> Option<T> {
    let v = table.get(key)?;
    match T::deserialize(v.clone()) {
        Ok(x) => Some(x),
        Err(e) => {
            errs.push(format!("{key}: {}", e.to_string().trim()));
            None
        }
    }
}

/// Parses and validates a configuration, reporting every problem found.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(vec![e.to_string()]))?;
    let mut errs = Vec::new();
    for k in table.keys() {
        if !KEYS.contains(&k.as_str()) {
            errs.push(format!("{k}: unknown field"));
        }
    }
    let kind: Option<ExperimentKind> = take(&table, "kind", &mut errs);
    if !table.contains_key("kind") {
        errs.push("kind: missing field".into());
    }
    let seed: Option<u64> = take(&table, "seed", &mut errs);
    if !table.contains_key("seed") {
        errs.push("seed: missing field".into());
    }
    let d = InferenceConfig::default();
    let cfg = ExperimentConfig {
        kind: kind.unwrap_or(ExperimentKind::Compare),
        seed: seed.unwrap_or(0),
        replicates: take(&table, "replicates", &mut errs).unwrap_or(100),
        n_total: take(&table, "n_total", &mut errs).unwrap_or(0),
        out: take(&table, "out", &mut errs),
        world: take(&table, "world", &mut errs).unwrap_or_default(),
        inference: take(&table, "inference", &mut errs).unwrap_or(d),
        loss: take(&table, "loss", &mut errs).unwrap_or_default(),
        target: take(&table, "target", &mut errs).unwrap_or_default(),
        table_draws: take(&table, "table_draws", &mut errs).unwrap_or(400),
        prior_draws: take(&table, "prior_draws", &mut errs).unwrap_or(20_000),
        designs: take(&table, "designs", &mut errs).unwrap_or_default(),
        risk: take(&table, "risk", &mut errs),
        compression: take(&table, "compression", &mut errs),
        goel: take(&table, "goel", &mut errs),
        entropy: take(&table, "entropy", &mut errs),
        sequential: take(&table, "sequential", &mut errs),
        suffcheck: take(&table, "suffcheck", &mut errs),
        save_traces: take(&table, "save_traces", &mut errs).unwrap_or(2),
        dump_draws: take(&table, "dump_draws", &mut errs).unwrap_or(0),
        tie_z: take(&table, "tie_z", &mut errs).unwrap_or(2.0),
        exact: take(&table, "exact", &mut errs).unwrap_or(false),
    };
    let failed: Vec<String> = errs.iter().map(|e| e.split(':').next().unwrap_or_default().to_string()).collect();
    for p in cfg.problems() {
        let field = p.split([':', '.', '[']).next().unwrap_or_default();
        if !failed.iter().any(|f| f == field) {
            errs.push(p);
        }
    }
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errs))
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config_str(&std::fs::read_to_string(path)?)
}

impl ExperimentConfig {
    /// Inference settings with the population size filled in.
    pub fn inference_config(&self) -> InferenceConfig {
        let mut c = self.inference.clone();
        c.n_total = self.n_total;
        if self.exact {
            c.mode = InferenceMode::ExactOracle;
        }
        c
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            inference: self.inference_config(),
            world: self.world.clone(),
            loss: self.loss.clone(),
            target: self.target,
            table_draws: self.table_draws,
            prior_draws: self.prior_draws,
        }
    }

    pub fn compression_config(&self) -> Option<CompressionConfig> {
        self.compression.as_ref().map(|c| CompressionConfig {
            n_total: self.n_total,
            inference_prior: self.inference.graph_prior.clone(),
            completion_draws: c.completion_draws,
            burn_in: c.burn_in,
            moves_per_draw: c.moves_per_draw,
            max_walk: c.max_walk,
        })
    }

    /// Semantic problems, each naming the field at fault.
    pub fn problems(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut check = |field: &str, r: Result<()>| {
            if let Err(e) = r {
                errs.push(format!("{field}: {e}"));
            }
        };
        let kind = self.kind;
        if kind != ExperimentKind::Suffcheck {
            if self.n_total == 0 {
                check("n_total", Err(Error::Parameter("must be positive".into())));
            }
            if self.replicates < 2 {
                check("replicates", Err(Error::Parameter("at least two replicates are needed".into())));
            }
        }
        if !(self.tie_z >= 0.0) {
            check("tie_z", Err(Error::Parameter("must be nonnegative".into())));
        }
        if self.exact && self.n_total > MAX_EXACT_NODES {
            check("exact", Err(Error::Size(format!("exact mode needs n_total <= {MAX_EXACT_NODES}"))));
        }
        if kind.needs_designs() || kind == ExperimentKind::Sequential {
            if self.n_total > 0 {
                check("inference", self.inference_config().validate());
                check("world.graph", self.world.graph.validate());
                check("world.gamma", self.world.gamma.validate());
                check("loss", self.loss.validate());
                if errs_empty_for_eval(self) && self.loss.validate().is_ok() {
                    check("loss", self.eval_config().validate());
                }
            }
        }
        if kind.needs_designs() {
            if self.designs.is_empty() {
                check("designs", Err(Error::Parameter("at least one design is required".into())));
            }
            for (i, d) in self.designs.iter().enumerate() {
                if self.n_total > 0 {
                    check(&format!("designs[{i}]"), d.validate(self.n_total));
                }
                if matches!(d.kind, crate::design::DesignKind::SequentialRds { .. }) {
                    check(&format!("designs[{i}]"), Err(Error::Parameter("use kind = \"sequential\"".into())));
                }
            }
        }
        match kind {
            ExperimentKind::Risk => match &self.risk {
                None => check("risk", Err(Error::Parameter("section required".into()))),
                Some(r) => {
                    if !(0.0..=1.0).contains(&r.alpha) {
                        check("risk.alpha", Err(Error::Parameter("not a probability".into())));
                    }
                    if !self.loss.is_pointwise() {
                        check("loss", Err(Error::Parameter("risk needs a pointwise loss".into())));
                    }
                }
            },
            ExperimentKind::CompressScore if self.compression.is_none() => {
                check("compression", Err(Error::Parameter("section required".into())))
            }
            ExperimentKind::Entropy => match &self.entropy {
                None => check("entropy", Err(Error::Parameter("section required".into()))),
                Some(e) => {
                    if e.models.is_empty() {
                        check("entropy.models", Err(Error::Parameter("at least one model is required".into())));
                    }
                    for (i, m) in e.models.iter().enumerate() {
                        check(&format!("entropy.models[{i}]"), m.validate());
                    }
                }
            },
            ExperimentKind::Sequential => match &self.sequential {
                None => check("sequential", Err(Error::Parameter("section required".into()))),
                Some(s) if self.n_total > 0 => check("sequential", s.validate(self.n_total)),
                Some(_) => {}
            },
            ExperimentKind::Suffcheck => match &self.suffcheck {
                None => check("suffcheck", Err(Error::Parameter("section required".into()))),
                Some(s) => {
                    for f in &s.fixtures {
                        if crate::experiment::fixture_graph(f).is_none() {
                            check("suffcheck.fixtures", Err(Error::Parameter(format!("unknown fixture {f}"))));
                        }
                    }
                    if s.params.iter().any(|p| p.contains(&0)) {
                        check("suffcheck.params", Err(Error::Parameter("entries must be at least 1".into())));
                    }
                    if s.n_samples == 0 {
                        check("suffcheck.n_samples", Err(Error::Parameter("must be positive".into())));
                    }
                    let [cs, cr, cw] = s.counterexample;
                    if cs == 0 || cr < 2 || cw == 0 {
                        check("suffcheck.counterexample", Err(Error::Parameter("needs s >= 1, r >= 2, w >= 1".into())));
                    }
                }
            },
            _ => {}
        }
        if let Some(c) = &self.compression {
            check("compression.mixture", c.mixture.validate());
            if c.completion_draws < 2 {
                check("compression.completion_draws", Err(Error::Parameter("must be at least 2".into())));
            }
        }
        if self.exact && self.loss == LossSpec::HellingerIntrinsic && kind != ExperimentKind::CompressScore {
            check("exact", Err(Error::Parameter("the intrinsic loss has no exhaustive evaluation".into())));
        }
        if let Some(g) = &self.goel {
            if g.scope == GdScope::Observed && self.n_total > MAX_EXACT_NODES {
                check("goel.scope", Err(Error::Size(format!("the observed scope needs n_total <= {MAX_EXACT_NODES}"))));
            }
            check("goel.prior1", g.prior1.validate().and_then(|_| g.prior1.require_er()));
            check("goel.prior2", g.prior2.validate().and_then(|_| g.prior2.require_er()));
        }
        errs
    }

    /// SHA-256 of the canonical JSON form: formatting and key order in
    /// the file do not matter, any change of value does.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialization cannot fail");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `kind-` followed by the first twelve hex digits of the hash.
    pub fn run_id(&self) -> String {
        format!("{}-{}", self.kind.as_str(), &self.hash()[..12])
    }
}

fn errs_empty_for_eval(c: &ExperimentConfig) -> bool {
    c.inference_config().validate().is_ok() && c.world.graph.validate().is_ok() && c.world.gamma.validate().is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
kind = "compare"
seed = 7
n_total = 20
replicates = 4

[[designs]]
family = "rds"
m = 2
w0 = 2
target_n = 8
"#;

    #[test]
    fn minimal_config_parses() {
        let c = parse_config_str(MINIMAL).unwrap();
        assert_eq!(c.kind, ExperimentKind::Compare);
        assert_eq!(c.designs, vec![DesignSpec::rds(2, 2, 8)]);
        assert_eq!(c.inference_config().n_total, 20);
    }

    #[test]
    fn errors_are_collected_and_named() {
        let text = MINIMAL.replace("replicates = 4", "replicates = -3").replace("seed = 7", "bogus = 1");
        let Err(Error::Config(errs)) = parse_config_str(&text) else { panic!("expected config errors") };
        assert!(errs.iter().any(|e| e.starts_with("replicates:")), "{errs:?}");
        assert!(errs.iter().any(|e| e.starts_with("seed:")), "{errs:?}");
        assert!(errs.iter().any(|e| e.starts_with("bogus:")), "{errs:?}");

        let text = MINIMAL.replace("target_n = 8", "target_n = 80");
        let Err(Error::Config(errs)) = parse_config_str(&text) else { panic!() };
        assert!(errs[0].starts_with("designs[0]"), "{errs:?}");
    }

    #[test]
    fn hash_ignores_formatting_only() {
        let a = parse_config_str(MINIMAL).unwrap();
        let spaced = MINIMAL.replace("seed = 7", "seed    =    7   # comment").replace("kind = \"compare\"\n", "") + "";
        let b = parse_config_str(&format!("kind = \"compare\"\n{spaced}")).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse_config_str(&MINIMAL.replace("seed = 7", "seed = 8")).unwrap();
        assert_ne!(a.hash(), c.hash());
        let d = parse_config_str(&MINIMAL.replace("m = 2", "m = 3")).unwrap();
        assert_ne!(a.hash(), d.hash());
        assert!(a.run_id().starts_with("compare-"));
    }

    #[test]
    fn kind_sections_are_required() {
        let text = MINIMAL.replace("\"compare\"", "\"risk\"");
        let Err(Error::Config(errs)) = parse_config_str(&text) else { panic!() };
        assert!(errs.iter().any(|e| e.starts_with("risk:")));
    }
}
