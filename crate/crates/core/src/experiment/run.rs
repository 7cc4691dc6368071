use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::fixture_graph;
use super::store::csv_err;
use crate::design::{run_design, DesignSpec, ObservedData, SampleTrace};
use crate::error::{Error, Result};
use crate::evaluation::{
    compression_bound, entropy_er, entropy_sbm, exact_design_loss, exact_frequentist_risk, frequentist_risk,
    goel_degroot_j, goel_degroot_j_mc, lindley_design_loss, psi, psi_exact, world_from_prior, DesignScore, Estimate,
    LossSpec,
};
use crate::graph::{gen_er, GraphModel};
use crate::mrf::ResponseVector;
use crate::order::{distribution_equivalence_test, expected_stats, negative_control, rds_capped, standard_relations};
use crate::posterior::{posterior_sample, PosteriorDraw, Target, MAX_EXACT_NODES};
use crate::rng::stream;
use crate::sequential::sequential_rds_optimize;

/// One scored criterion of a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    /// Column family: `loss`, `mse`, `risk` or `psi`.
    pub key: String,
    /// Label used in rankings, such as `SL(P)` or `DC`.
    pub criterion: String,
    pub value: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub design_id: String,
    pub design: String,
    /// JSON form of the design.
    pub params: String,
    pub metrics: Vec<Metric>,
    pub j_info: Option<f64>,
    pub exact: Option<f64>,
    pub n_replicates: usize,
    pub n_failed: usize,
    /// The main criterion's interval overlaps that of the best design.
    pub tie: bool,
    /// Per-replicate losses of the main criterion.
    pub losses: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub model: String,
    pub n_total: usize,
    pub entropy: f64,
    pub lower: f64,
    pub upper: f64,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuffcheckRow {
    pub relation: String,
    pub fixture: String,
    pub params: [usize; 3],
    pub tv_estimate: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialSummary {
    pub w0: usize,
    pub stage_two: BTreeMap<String, usize>,
    pub staged: Estimate,
    pub best_static: String,
}

/// Everything a run produced, as stored in the result log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub run_id: String,
    pub config_hash: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
    #[serde(default)]
    pub entropy: Vec<EntropyRow>,
    #[serde(default)]
    pub suffcheck: Vec<SuffcheckRow>,
    #[serde(default)]
    pub sequential: Option<SequentialSummary>,
}

/// Short name of a loss on the given target.
pub fn criterion_label(loss: &LossSpec, target: Target) -> String {
    let base = match loss {
        LossSpec::Quadratic => "SL".to_string(),
        LossSpec::Multilinear { k1, k2 } if k1 == k2 => "AL".to_string(),
        LossSpec::Multilinear { k1, k2 } => format!("ML({k1},{k2})"),
        LossSpec::KlPredictive => "KL".to_string(),
        LossSpec::HellingerIntrinsic => "HI".to_string(),
    };
    match target {
        Target::Prediction => format!("{base}(P)"),
        Target::Estimation => base,
    }
}

fn fmt(x: f64) -> String {
    x.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Errors that stop the whole run instead of one design's row.
fn is_fatal(e: &Error) -> bool {
    matches!(e, Error::Parameter(_) | Error::Size(_) | Error::Io(_) | Error::Config(_))
}

fn soft<T>(r: Result<T>) -> Result<std::result::Result<T, String>> {
    match r {
        Ok(x) => Ok(Ok(x)),
        Err(e) if is_fatal(&e) => Err(e),
        Err(e) => Ok(Err(e.to_string())),
    }
}

fn empty_row(i: usize, d: &DesignSpec) -> Result<ReportRow> {
    Ok(ReportRow {
        design_id: format!("d{i:02}"),
        design: d.label(),
        params: serde_json::to_string(d)?,
        metrics: Vec::new(),
        j_info: None,
        exact: None,
        n_replicates: 0,
        n_failed: 0,
        tie: false,
        losses: Vec::new(),
        error: None,
    })
}

/// Marks every row whose main interval overlaps that of the smallest one.
fn flag_ties(rows: &mut [ReportRow], key: &str, z: f64) {
    let main = |r: &ReportRow| r.metrics.iter().find(|m| m.key == key).map(|m| m.value);
    let Some(best) = (0..rows.len())
        .filter(|&i| main(&rows[i]).is_some())
        .min_by(|&a, &b| main(&rows[a]).unwrap().mean.total_cmp(&main(&rows[b]).unwrap().mean))
    else {
        return;
    };
    let b = main(&rows[best]).unwrap();
    let mut any = false;
    for (i, r) in rows.iter_mut().enumerate() {
        if i != best {
            if let Some(v) = main(r) {
                r.tie = v.overlaps(&b, z);
                any |= r.tie;
            }
        }
    }
    rows[best].tie = any;
}

/// Trace and posterior draws of replicate `i`, replayed from its streams.
fn replay(
    cfg: &ExperimentConfig,
    design: &DesignSpec,
    i: usize,
    with_draws: bool,
) -> Result<(SampleTrace, Option<Vec<PosteriorDraw>>)> {
    let ev = cfg.eval_config();
    let n = cfg.n_total;
    let master = cfg.seed;
    let mut wr = stream(master, &[i as u64, 0]);
    let (g, y) = match (cfg.kind, &cfg.risk, &cfg.compression) {
        (ExperimentKind::Risk, Some(r), _) => {
            let g = gen_er(n, r.alpha, &mut wr)?;
            let y = ev.world.sampler.sample(&g, &r.gamma(), &mut wr);
            (g, y)
        }
        (ExperimentKind::CompressScore, _, Some(c)) => {
            let alpha = c.mixture.sample(&mut wr);
            let g = gen_er(n, alpha, &mut wr)?;
            let trace = run_design(design, &g, &ResponseVector::zeros(n), &mut wr)?;
            return Ok((trace, None));
        }
        _ => {
            let w = world_from_prior(&ev, &mut wr)?;
            (w.g, w.y)
        }
    };
    let mut rng = stream(master, &[i as u64, 1]);
    let trace = run_design(design, &g, &y, &mut rng)?;
    let draws = if with_draws {
        let obs = ObservedData::from_trace(&trace, Some(&g))?;
        Some(posterior_sample(&obs, &ev.inference, &mut rng)?)
    } else {
        None
    };
    Ok((trace, draws))
}

fn score_rows(cfg: &ExperimentConfig) -> Result<(Vec<ReportRow>, Vec<Vec<String>>)> {
    let ev = cfg.eval_config();
    let k = cfg.replicates;
    let label = criterion_label(&cfg.loss, cfg.target);
    let key = match cfg.kind {
        ExperimentKind::Risk => "risk",
        ExperimentKind::CompressScore => "psi",
        _ => "loss",
    };
    let mut rows = Vec::with_capacity(cfg.designs.len());
    let mut reps = Vec::new();
    for (i, d) in cfg.designs.iter().enumerate() {
        let mut row = empty_row(i, d)?;
        match cfg.kind {
            ExperimentKind::Compare | ExperimentKind::Risk => {
                let scored: Result<DesignScore> = match &cfg.risk {
                    Some(r) if cfg.kind == ExperimentKind::Risk => frequentist_risk(d, r.alpha, r.gamma(), &ev, k, cfg.seed),
                    _ => lindley_design_loss(d, &ev, k, cfg.seed),
                };
                match soft(scored)? {
                    Ok(s) => {
                        let crit = if key == "risk" { format!("RISK:{label}") } else { label.clone() };
                        row.metrics.push(Metric { key: key.into(), criterion: crit, value: s.loss });
                        row.metrics.push(Metric { key: "mse".into(), criterion: "MSE".into(), value: s.mse });
                        row.n_replicates = s.replicates.len();
                        row.n_failed = s.failures.len();
                        row.losses = s.replicates.iter().map(|r| r.loss).collect();
                        reps.extend(replicate_lines(&row, &s));
                    }
                    Err(e) => row.error = Some(e),
                }
            }
            _ => {}
        }
        if let Some(c) = &cfg.compression {
            let cc = cfg.compression_config().expect("section present");
            match soft(psi(d, &c.mixture, &cc, k, cfg.seed))? {
                Ok(p) => {
                    row.metrics.push(Metric { key: "psi".into(), criterion: "DC".into(), value: p });
                    if cfg.kind == ExperimentKind::CompressScore {
                        row.n_replicates = k;
                    }
                }
                Err(e) => row.error = Some(e),
            }
        }
        if let Some(gs) = &cfg.goel {
            row.j_info = Some(if cfg.n_total <= MAX_EXACT_NODES {
                goel_degroot_j(d, &gs.prior1, &gs.prior2, cfg.n_total, gs.scope)?
            } else {
                goel_degroot_j_mc(&gs.prior1, &gs.prior2, cfg.n_total, k, cfg.seed)?.mean
            });
        }
        if cfg.exact {
            row.exact = Some(match cfg.kind {
                ExperimentKind::Risk => {
                    let r = cfg.risk.as_ref().expect("validated");
                    exact_frequentist_risk(d, r.alpha, r.gamma(), &ev)?
                }
                ExperimentKind::CompressScore => {
                    let c = cfg.compression.as_ref().expect("validated");
                    psi_exact(d, &c.mixture, &cfg.compression_config().expect("section present"))?
                }
                _ => exact_design_loss(d, &ev)?,
            });
        }
        rows.push(row);
    }
    flag_ties(&mut rows, key, cfg.tie_z);
    Ok((rows, reps))
}

/// Rows of `replicates.csv` for one design, failures included, in
/// replicate order.
fn replicate_lines(row: &ReportRow, s: &DesignScore) -> Vec<Vec<String>> {
        let mut all: Vec<(usize, Vec<String>)> = s
            .replicates
            .iter()
            .map(|r| {
                (
                    r.replicate,
                    vec![
                        row.design_id.clone(),
                        r.replicate.to_string(),
                        "ok".into(),
                        r.sample_size.to_string(),
                        fmt(r.estimate),
                        fmt(r.truth),
                        fmt(r.loss),
                        fmt(r.sq_error),
                        String::new(),
                    ],
                )
            })
            .chain(s.failures.iter().map(|f| {
                (
                    f.replicate,
                    vec![
                        row.design_id.clone(),
                        f.replicate.to_string(),
                        "failed".into(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        f.error.clone(),
                    ],
                )
            }))
            .collect();
        all.sort_by_key(|(i, _)| *i);
        all.into_iter().map(|(_, r)| r).collect()
}

fn write_design_outputs(cfg: &ExperimentConfig, rows: &[ReportRow], reps: &[Vec<String>], out: &Path) -> Result<()> {
    let header = [
        "design_id", "design", "params", "loss_mean", "loss_se", "mse_mean", "mse_se", "risk_mean", "risk_se",
        "psi_mean", "psi_se", "j_info", "exact", "n_replicates", "n_failed", "tie", "error",
    ];
    let get = |r: &ReportRow, key: &str| r.metrics.iter().find(|m| m.key == key).map(|m| m.value);
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![r.design_id.clone(), r.design.clone(), r.params.clone()];
            for key in ["loss", "mse", "risk", "psi"] {
                let e = get(r, key);
                v.push(opt(e.map(|e| e.mean)));
                v.push(opt(e.map(|e| e.se)));
            }
            v.extend([
                opt(r.j_info),
                opt(r.exact),
                r.n_replicates.to_string(),
                r.n_failed.to_string(),
                r.tie.to_string(),
                r.error.clone().unwrap_or_default(),
            ]);
            v
        })
        .collect();
    write_csv(&out.join("report.csv"), &header, &table)?;

    write_csv(
        &out.join("replicates.csv"),
        &["design_id", "replicate", "status", "sample_size", "estimate", "truth", "loss", "sq_error", "error"],
        reps,
    )?;

    let mut plot = Vec::new();
    for r in rows {
        for m in &r.metrics {
            plot.push(vec![r.design.clone(), m.criterion.clone(), fmt(m.value.mean), fmt(m.value.se)]);
        }
        if let Some(j) = r.j_info {
            plot.push(vec![r.design.clone(), "J".into(), fmt(j), String::new()]);
        }
        if let Some(x) = r.exact {
            let c = match cfg.kind {
                ExperimentKind::CompressScore => "EXACT:DC".to_string(),
                ExperimentKind::Risk => format!("EXACT:RISK:{}", criterion_label(&cfg.loss, cfg.target)),
                _ => format!("EXACT:{}", criterion_label(&cfg.loss, cfg.target)),
            };
            plot.push(vec![r.design.clone(), c, fmt(x), String::new()]);
        }
    }
    write_csv(&out.join("plotdata.csv"), &["design", "criterion", "value", "se"], &plot)?;

    let failed = |r: &ReportRow, i: usize| r.error.is_some() || r.metrics.is_empty() || i >= cfg.replicates;
    if cfg.save_traces > 0 {
        fs::create_dir_all(out.join("traces"))?;
    }
    if cfg.dump_draws > 0 && cfg.kind != ExperimentKind::CompressScore {
        fs::create_dir_all(out.join("draws"))?;
    }
    for (d, r) in cfg.designs.iter().zip(rows) {
        for i in 0..cfg.save_traces {
            if failed(r, i) {
                continue;
            }
            if let Ok((t, _)) = replay(cfg, d, i, false) {
                fs::write(out.join("traces").join(format!("{}_{i}.json", r.design_id)), t.to_json())?;
            }
        }
        if cfg.dump_draws == 0 || cfg.kind == ExperimentKind::CompressScore {
            continue;
        }
        let mut lines = Vec::new();
        for i in 0..cfg.dump_draws {
            if failed(r, i) {
                continue;
            }
            if let Ok((_, Some(draws))) = replay(cfg, d, i, true) {
                for (j, dr) in draws.iter().enumerate() {
                    lines.push(vec![
                        i.to_string(),
                        j.to_string(),
                        fmt(dr.alpha),
                        fmt(dr.gamma.gamma0),
                        fmt(dr.gamma.gamma1),
                        fmt(dr.q_est),
                        fmt(dr.q_pred),
                    ]);
                }
            }
        }
        write_csv(
            &out.join("draws").join(format!("{}.csv", r.design_id)),
            &["replicate", "draw", "alpha", "gamma0", "gamma1", "q_est", "q_pred"],
            &lines,
        )?;
    }
    Ok(())
}

pub fn model_label(m: &GraphModel) -> String {
    match m {
        GraphModel::ErdosRenyi { alpha } => format!("ER(alpha={alpha})"),
        GraphModel::Sbm { beta, .. } => format!("SBM(K={})", beta.len()),
    }
}

fn run_entropy(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<EntropyRow>> {
    let sec = cfg.entropy.as_ref().expect("validated");
    let unit = if sec.bits { "bits" } else { "nats" };
    let mut rows = Vec::new();
    for m in &sec.models {
        let h = match m {
            GraphModel::ErdosRenyi { alpha } => entropy_er(cfg.n_total, *alpha)?,
            GraphModel::Sbm { beta, alpha } => entropy_sbm(cfg.n_total, beta, alpha)?,
        };
        let (lower, upper) = compression_bound(h, sec.bits)?;
        rows.push(EntropyRow { model: model_label(m), n_total: cfg.n_total, entropy: lower, lower, upper, unit: unit.into() });
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.model.clone(), r.n_total.to_string(), fmt(r.entropy), fmt(r.lower), fmt(r.upper), r.unit.clone()])
        .collect();
    write_csv(&out.join("report.csv"), &["model", "n_total", "entropy", "bound_lower", "bound_upper", "unit"], &table)?;
    let plot: Vec<Vec<String>> =
        rows.iter().map(|r| vec![r.model.clone(), "H".into(), fmt(r.entropy), String::new()]).collect();
    write_csv(&out.join("plotdata.csv"), &["design", "criterion", "value", "se"], &plot)?;
    Ok(rows)
}

fn run_suffcheck(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<SuffcheckRow>> {
    let sec = cfg.suffcheck.as_ref().expect("validated");
    let mut rows = Vec::new();
    let mut stats = Vec::new();
    for name in &sec.fixtures {
        let g = fixture_graph(name).expect("validated");
        let n = g.n_nodes();
        for &[s, r, w] in &sec.params {
            for rel in standard_relations(s, r, w, n) {
                let rep = distribution_equivalence_test(&rel, name, &g, sec.n_samples, sec.threshold, cfg.seed)?;
                rows.push(SuffcheckRow {
                    relation: rep.relation,
                    fixture: rep.fixture,
                    params: [s, r, w],
                    tv_estimate: rep.tv_estimate,
                    threshold: rep.threshold,
                    pass: rep.pass,
                });
            }
        }
        if sec.negative_control {
            let rep = distribution_equivalence_test(&negative_control(n), name, &g, sec.n_samples, sec.threshold, cfg.seed)?;
            rows.push(SuffcheckRow {
                relation: rep.relation,
                fixture: rep.fixture,
                params: [1, 2, 1],
                tv_estimate: rep.tv_estimate,
                threshold: rep.threshold,
                pass: rep.pass,
            });
        }
        let [cs, cr, cw] = sec.counterexample;
        for d in [DesignSpec::link_tracing(cs, cr, cw, n), rds_capped(cs, cr, cw, n)] {
            let st = expected_stats(&d, &g, sec.n_samples.max(2), cfg.seed)?;
            stats.push(vec![
                name.clone(),
                st.design,
                fmt(st.mean_degree.mean),
                fmt(st.mean_degree.se),
                fmt(st.components.mean),
                fmt(st.components.se),
            ]);
        }
    }
    fs::write(out.join("report.json"), serde_json::to_string_pretty(&rows)?)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.relation.clone(),
                r.fixture.clone(),
                format!("{}/{}/{}", r.params[0], r.params[1], r.params[2]),
                fmt(r.tv_estimate),
                fmt(r.threshold),
                r.pass.to_string(),
            ]
        })
        .collect();
    write_csv(&out.join("report.csv"), &["relation", "fixture", "params", "tv_estimate", "threshold", "pass"], &table)?;
    let plot: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![format!("{}@{}", r.relation, r.fixture), "TV".into(), fmt(r.tv_estimate), String::new()])
        .collect();
    write_csv(&out.join("plotdata.csv"), &["design", "criterion", "value", "se"], &plot)?;
    write_csv(
        &out.join("counterexample.csv"),
        &["fixture", "design", "mean_degree", "mean_degree_se", "components", "components_se"],
        &stats,
    )?;
    Ok(rows)
}

fn run_sequential(cfg: &ExperimentConfig, out: &Path) -> Result<(Vec<ReportRow>, SequentialSummary)> {
    let seq = cfg.sequential.as_ref().expect("validated");
    let res = sequential_rds_optimize(seq, &cfg.eval_config(), cfg.replicates, cfg.seed)?;
    fs::write(out.join("policy.json"), res.policy.to_json()?)?;
    fs::write(out.join("tree.json"), serde_json::to_string_pretty(&res.tree)?)?;
    let label = criterion_label(&cfg.loss, cfg.target);
    let mut rows = Vec::new();
    for (i, s) in res.static_scores.iter().enumerate() {
        let d = DesignSpec::rds(s.m, s.w0, seq.target_n);
        let mut row = empty_row(i, &d)?;
        row.metrics.push(Metric { key: "loss".into(), criterion: label.clone(), value: s.loss });
        row.n_replicates = cfg.replicates;
        rows.push(row);
    }
    let staged = DesignSpec::new(
        crate::design::DesignKind::SequentialRds { w0_grid: seq.w0_grid.clone(), m_grid: seq.m_grid.clone() },
        seq.target_n,
    );
    let mut row = empty_row(rows.len(), &staged)?;
    row.metrics.push(Metric { key: "loss".into(), criterion: label, value: res.staged });
    row.n_replicates = cfg.replicates;
    rows.push(row);
    flag_ties(&mut rows, "loss", cfg.tie_z);
    write_design_outputs_plain(&rows, out)?;
    let summary = SequentialSummary {
        w0: res.w0,
        stage_two: res.stage_two.clone(),
        staged: res.staged,
        best_static: rows[res.best_static].design.clone(),
    };
    Ok((rows, summary))
}

fn write_design_outputs_plain(rows: &[ReportRow], out: &Path) -> Result<()> {
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let v = r.metrics[0].value;
            vec![r.design_id.clone(), r.design.clone(), r.params.clone(), fmt(v.mean), fmt(v.se), r.tie.to_string()]
        })
        .collect();
    write_csv(&out.join("report.csv"), &["design_id", "design", "params", "loss_mean", "loss_se", "tie"], &table)?;
    let plot: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let m = &r.metrics[0];
            vec![r.design.clone(), m.criterion.clone(), fmt(m.value.mean), fmt(m.value.se)]
        })
        .collect();
    write_csv(&out.join("plotdata.csv"), &["design", "criterion", "value", "se"], &plot)
}

/// Runs the experiment and writes its artifacts under `out`.
///
/// Every random quantity comes from streams of `cfg.seed`, so the files are
/// byte-identical across reruns and thread counts.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<EvaluationReport> {
    let problems = cfg.problems();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    fs::create_dir_all(out)?;
    let mut report = EvaluationReport {
        run_id: cfg.run_id(),
        config_hash: cfg.hash(),
        kind: cfg.kind,
        seed: cfg.seed,
        rows: Vec::new(),
        entropy: Vec::new(),
        suffcheck: Vec::new(),
        sequential: None,
    };
    match cfg.kind {
        ExperimentKind::Compare | ExperimentKind::Risk | ExperimentKind::CompressScore => {
            let (rows, reps) = score_rows(cfg)?;
            write_design_outputs(cfg, &rows, &reps, out)?;
            report.rows = rows;
        }
        ExperimentKind::Entropy => report.entropy = run_entropy(cfg, out)?,
        ExperimentKind::Suffcheck => report.suffcheck = run_suffcheck(cfg, out)?,
        ExperimentKind::Sequential => {
            let (rows, s) = run_sequential(cfg, out)?;
            report.rows = rows;
            report.sequential = Some(s);
        }
    }
    fs::write(out.join("config.json"), serde_json::to_string_pretty(cfg)?)?;
    Ok(report)
}
