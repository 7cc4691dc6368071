use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use netdesign::design::DesignKind;
use netdesign::evaluation::Estimate;
use netdesign::experiment::{
    parse_config, parse_config_str, run_experiment, summarize, EvaluationReport, ExperimentKind, Metric, ReportRow,
    ResultStore,
};
use netdesign::Error;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

const SMALL: &str = r#"
kind = "compare"
seed = 99
n_total = 10
replicates = 6
dump_draws = 2
save_traces = 2

[world.graph]
kind = "beta_er"
tau1 = 2.0
tau2 = 5.0

[inference]
burn_in = 50
n_draws = 60

[inference.graph_prior]
kind = "beta_er"
tau1 = 2.0
tau2 = 5.0

[[designs]]
family = "rds"
m = 2
w0 = 1
target_n = 6

[[designs]]
family = "link_tracing"
s = 2
r = 1
w = 2
target_n = 6
"#;

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn minimal_config_parses() {
    let c = parse_config_str("kind = \"compare\"\nseed = 1\nn_total = 5\n[[designs]]\nfamily = \"ego\"\ntarget_n = 2\n").unwrap();
    assert_eq!(c.replicates, 100);
    assert_eq!(c.designs.len(), 1);
}

#[test]
fn negative_replicates_name_the_field() {
    let text = SMALL.replace("replicates = 6", "replicates = -6");
    match parse_config_str(&text) {
        Err(Error::Config(errs)) => assert!(errs.iter().any(|e| e.starts_with("replicates:")), "{errs:?}"),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn missing_seed_and_bad_design_are_both_reported() {
    let text = SMALL.replace("seed = 99\n", "").replace("target_n = 6\n\n[[designs]]", "target_n = 60\n\n[[designs]]");
    let Err(Error::Config(errs)) = parse_config_str(&text) else { panic!("expected config errors") };
    assert!(errs.iter().any(|e| e.starts_with("seed:")), "{errs:?}");
    assert!(errs.iter().any(|e| e.starts_with("designs[0]:")), "{errs:?}");
}

#[test]
fn table_one_fixture_has_five_candidates() {
    let c = parse_config(&configs().join("table1.toml")).unwrap();
    assert_eq!(c.n_total, 200);
    assert_eq!(c.designs.len(), 5);
    let ms: Vec<usize> = c
        .designs
        .iter()
        .map(|d| match d.kind {
            DesignKind::Rds { m, w0: 5, .. } => m,
            _ => panic!("unexpected design {d:?}"),
        })
        .collect();
    assert_eq!(ms, vec![2, 3, 4, 5, 6]);
    assert!(c.designs.iter().all(|d| d.target_n == 50));
}

#[test]
fn shipped_configs_all_parse() {
    for e in fs::read_dir(configs()).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            parse_config(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        }
    }
}

#[test]
fn hash_tracks_semantics_not_formatting() {
    let a = parse_config_str(SMALL).unwrap();
    let b = parse_config_str(&SMALL.replace("n_total = 10", "n_total    =   10  # ten nodes")).unwrap();
    let c = parse_config_str(&SMALL.replace("tau1 = 2.0\ntau2 = 5.0\n\n[inference]", "tau1 = 2.5\ntau2 = 5.0\n\n[inference]")).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let cfg = parse_config_str(SMALL).unwrap();
    let root = tempfile::tempdir().unwrap();
    let mut seen = Vec::new();
    for threads in [1, 4, 8] {
        let out = root.path().join(format!("t{threads}"));
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_experiment(&cfg, &out)).unwrap();
        seen.push(dir_contents(&out));
    }
    let files: Vec<&String> = seen[0].keys().collect();
    for f in ["report.csv", "replicates.csv", "plotdata.csv", "traces/d00_0.json", "draws/d01.csv"] {
        assert!(seen[0].contains_key(f), "missing {f}: {files:?}");
    }
    assert_eq!(seen[0], seen[1]);
    assert_eq!(seen[0], seen[2]);
}

#[test]
fn singleton_candidate_gives_one_row() {
    let text = SMALL.split("[[designs]]").take(2).collect::<Vec<_>>().join("[[designs]]");
    let cfg = parse_config_str(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let rep = run_experiment(&cfg, dir.path()).unwrap();
    assert_eq!(rep.rows.len(), 1);
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let reps = fs::read_to_string(dir.path().join("replicates.csv")).unwrap();
    assert_eq!(reps.lines().count(), 1 + cfg.replicates);
}

fn fake_report(id: &str, rows: &[(&str, &str, f64, f64)]) -> EvaluationReport {
    EvaluationReport {
        run_id: id.into(),
        config_hash: "0".repeat(64),
        kind: ExperimentKind::Compare,
        seed: 0,
        rows: rows
            .iter()
            .enumerate()
            .map(|(i, &(design, crit, mean, se))| ReportRow {
                design_id: format!("d{i:02}"),
                design: design.into(),
                params: String::new(),
                metrics: vec![Metric { key: "loss".into(), criterion: crit.into(), value: Estimate { mean, se } }],
                j_info: None,
                exact: None,
                n_replicates: 10,
                n_failed: 0,
                tie: false,
                losses: Vec::new(),
                error: None,
            })
            .collect(),
        entropy: Vec::new(),
        suffcheck: Vec::new(),
        sequential: None,
    }
}

#[test]
fn summarize_ranks_and_flags_ties() {
    let dir = tempfile::tempdir().unwrap();
    let store = ResultStore::open(dir.path()).unwrap();
    store.append(&fake_report("a", &[("A", "SL", 1.0, 0.1), ("B", "SL", 2.0, 0.1)])).unwrap();
    store.append(&fake_report("b", &[("A", "DC", 0.5, 0.1), ("B", "DC", 0.55, 0.1), ("C", "DC", 0.1, 0.01)])).unwrap();

    let strict = summarize(&store, &["a".into()], None, 2.0).unwrap();
    assert_eq!(strict.rows.iter().map(|r| r.design.as_str()).collect::<Vec<_>>(), ["A", "B"]);
    assert!(strict.rows.iter().all(|r| !r.cells[0].as_ref().unwrap().tie));

    let both = summarize(&store, &["a".into(), "b".into()], Some("DC"), 2.0).unwrap();
    assert_eq!(both.columns, ["SL", "DC"]);
    assert_eq!(both.rows.iter().map(|r| r.design.as_str()).collect::<Vec<_>>(), ["C", "A", "B"]);
    let b_dc = both.rows[2].cells[1].as_ref().unwrap();
    assert_eq!(b_dc.rank, 3);
    assert!(b_dc.tie);
    assert!(both.rows[0].cells[0].is_none());
    assert!(both.to_text().contains("3="));
    assert!(both.to_csv().unwrap().starts_with("design,criterion,mean,se,rank,tie\n"));
}

#[test]
fn summarize_reports_missing_ids() {
    let dir = tempfile::tempdir().unwrap();
    let store = ResultStore::open(dir.path()).unwrap();
    store.append(&fake_report("a", &[("A", "SL", 1.0, 0.1)])).unwrap();
    assert!(matches!(summarize(&store, &["zzz".into()], None, 2.0), Err(Error::Lookup(_))));
    assert!(matches!(summarize(&store, &["a".into()], Some("KL"), 2.0), Err(Error::Lookup(_))));
}

#[test]
fn cli_runs_and_rejects_bad_configs() {
    let bin = env!("CARGO_BIN_EXE_netdesign");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let store = dir.path().join("store");
    let ok = Command::new(bin)
        .args(["compare", "--config", cfg.to_str().unwrap(), "--store", store.to_str().unwrap(), "--threads", "2"])
        .args(["--replicates", "3"])
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let records = ResultStore::open(&store).unwrap().records().unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].rows[0].n_replicates, 3);

    let wrong = Command::new(bin).args(["risk", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(wrong.status.code(), Some(2));
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, SMALL.replace("replicates = 6", "replicates = -1")).unwrap();
    let out = Command::new(bin).args(["compare", "--config", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("replicates:"));
}
