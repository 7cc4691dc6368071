use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::EvaluationReport;
use crate::error::{Error, Result};
use crate::evaluation::Estimate;

/// Append-only log of finished runs, one JSON record per line in
/// `runs.jsonl` under the store directory.
#[derive(Debug, Clone)]
pub struct ResultStore {
    dir: PathBuf,
}

impl ResultStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(Self { dir: dir.as_ref().to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn log(&self) -> PathBuf {
        self.dir.join("runs.jsonl")
    }

    pub fn append(&self, report: &EvaluationReport) -> Result<()> {
        let mut f = OpenOptions::new().create(true).append(true).open(self.log())?;
        writeln!(f, "{}", serde_json::to_string(report)?)?;
        Ok(())
    }

    /// Every record in insertion order.
    pub fn records(&self) -> Result<Vec<EvaluationReport>> {
        let path = self.log();
        if !path.exists() {
            return Ok(Vec::new());
        }
        fs::read_to_string(path)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| Ok(serde_json::from_str(l)?))
            .collect()
    }

    /// Latest record with the given run id.
    pub fn get(&self, run_id: &str) -> Result<EvaluationReport> {
        self.records()?
            .into_iter()
            .rev()
            .find(|r| r.run_id == run_id)
            .ok_or_else(|| Error::Lookup(format!("no run with id {run_id} in {}", self.dir.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankCell {
    pub value: Estimate,
    pub rank: usize,
    /// The `±z·SE` interval overlaps the one ranked just above.
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub design: String,
    pub cells: Vec<Option<RankCell>>,
}

/// Designs ranked under every criterion found in the selected runs, rows
/// sorted by one of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub columns: Vec<String>,
    pub sort_by: String,
    pub rows: Vec<RankRow>,
}

/// Merges the criteria of the given runs by design label and ranks each
/// criterion in increasing order. Rows are sorted by `criterion`, or by the
/// first criterion when it is `None`; designs lacking it go last.
pub fn summarize(store: &ResultStore, ids: &[String], criterion: Option<&str>, z: f64) -> Result<Ranking> {
    if ids.is_empty() {
        return Err(Error::Lookup("no run ids given".into()));
    }
    let mut columns: Vec<String> = Vec::new();
    let mut designs: Vec<String> = Vec::new();
    let mut values: BTreeMap<(String, String), Estimate> = BTreeMap::new();
    for id in ids {
        let rec = store.get(id)?;
        for row in &rec.rows {
            if !designs.contains(&row.design) {
                designs.push(row.design.clone());
            }
            for m in &row.metrics {
                if !columns.contains(&m.criterion) {
                    columns.push(m.criterion.clone());
                }
                values.insert((row.design.clone(), m.criterion.clone()), m.value);
            }
        }
    }
    if columns.is_empty() {
        return Err(Error::Lookup("the selected runs hold no rankable criteria".into()));
    }
    let sort_by = match criterion {
        Some(c) => columns
            .iter()
            .find(|x| x.as_str() == c)
            .cloned()
            .ok_or_else(|| Error::Lookup(format!("criterion {c} not found; available: {}", columns.join(", "))))?,
        None => columns[0].clone(),
    };
    let mut rows: Vec<RankRow> =
        designs.iter().map(|d| RankRow { design: d.clone(), cells: vec![None; columns.len()] }).collect();
    for (ci, col) in columns.iter().enumerate() {
        let mut present: Vec<(usize, Estimate)> = designs
            .iter()
            .enumerate()
            .filter_map(|(di, d)| values.get(&(d.clone(), col.clone())).map(|e| (di, *e)))
            .collect();
        present.sort_by(|a, b| a.1.mean.total_cmp(&b.1.mean).then(a.0.cmp(&b.0)));
        for (rank, &(di, e)) in present.iter().enumerate() {
            let tie = rank > 0 && e.overlaps(&present[rank - 1].1, z);
            rows[di].cells[ci] = Some(RankCell { value: e, rank: rank + 1, tie });
        }
    }
    let si = columns.iter().position(|c| *c == sort_by).expect("sort column exists");
    rows.sort_by_key(|r| r.cells[si].as_ref().map_or(usize::MAX, |c| c.rank));
    Ok(Ranking { columns, sort_by, rows })
}

impl Ranking {
    /// Fixed-width table; `=` marks a tie with the design ranked above.
    pub fn to_text(&self) -> String {
        let cell = |c: &Option<RankCell>| match c {
            Some(c) => format!("{:.4e} ± {:.1e} ({}{})", c.value.mean, c.value.se, c.rank, if c.tie { "=" } else { "" }),
            None => "-".to_string(),
        };
        let dw = self.rows.iter().map(|r| r.design.len()).max().unwrap_or(6).max(6);
        let texts: Vec<Vec<String>> = self.rows.iter().map(|r| r.cells.iter().map(cell).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|i| texts.iter().map(|t| t[i].chars().count()).chain([self.columns[i].len()]).max().unwrap_or(1))
            .collect();
        let mut s = String::new();
        let _ = write!(s, "{:<dw$}", "design");
        for (c, w) in self.columns.iter().zip(&widths) {
            let _ = write!(s, "  {c:<w$}");
        }
        s.truncate(s.trim_end().len());
        s.push('\n');
        for (r, t) in self.rows.iter().zip(&texts) {
            let _ = write!(s, "{:<dw$}", r.design);
            for (x, w) in t.iter().zip(&widths) {
                let pad = w.saturating_sub(x.chars().count());
                let _ = write!(s, "  {x}{}", " ".repeat(pad));
            }
            s.truncate(s.trim_end().len());
            s.push('\n');
        }
        let _ = writeln!(s, "sorted by {}", self.sort_by);
        s
    }

    /// Long format: design, criterion, mean, se, rank, tie.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["design", "criterion", "mean", "se", "rank", "tie"]).map_err(csv_err)?;
        for r in &self.rows {
            for (c, cell) in self.columns.iter().zip(&r.cells) {
                if let Some(x) = cell {
                    w.write_record([
                        r.design.clone(),
                        c.clone(),
                        x.value.mean.to_string(),
                        x.value.se.to_string(),
                        x.rank.to_string(),
                        x.tie.to_string(),
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
            .map_err(|e| Error::Data(e.to_string()))
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Data(format!("{other:?}")),
    }
}
