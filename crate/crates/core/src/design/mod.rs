//! Network sampling designs: descriptions, simulation, exact trace
//! probabilities and the observed-data view used by inference.

mod likelihood;
mod observed;
mod process;
mod trace;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

pub use likelihood::{
    referral_log_likelihood, rds_log_likelihood, trace_log_prob, DesignLikelihood, RecruitEvent,
};
pub use observed::{observed_data, ObservedData};
pub use process::{enumerate_traces, run_design, run_design_from_seeds, MAX_ENUM_NODES};
pub use trace::{Recruit, SampleTrace};

/// Family-specific design parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DesignKind {
    /// Respondent-driven sampling with `m` referrals and `w0` seeds. An
    /// optional wave cap turns it into a fixed-depth design.
    Rds {
        m: usize,
        w0: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_waves: Option<usize>,
    },
    /// `s` seeds, `r` referrals, `w` waves; degrees are not recorded.
    LinkTracing { s: usize, r: usize, w: usize },
    /// `s` seeds, `k` waves; full rows of every sampled node are observed.
    Snowball { s: usize, k: usize },
    /// Full rows of `target_n` uniformly chosen nodes.
    Ego,
    /// Referral budget `ceil(c_max · (x / w_max)^eta)` at wave `x`.
    CurveRds { eta: f64, c_max: usize, w_max: usize, w0: usize },
    /// Budget `lambda_lo` before `switch_wave`, `lambda_hi` from it on.
    SwitchRds { lambda_lo: usize, lambda_hi: usize, switch_wave: usize, w0: usize },
    /// Seed count chosen first, referral budget chosen after the seeds are seen.
    SequentialRds { w0_grid: Vec<usize>, m_grid: Vec<usize> },
}

/// A design together with its target sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    #[serde(flatten)]
    pub kind: DesignKind,
    pub target_n: usize,
}

/// What a finished trace reveals about the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationRegime {
    /// Recruitment edges only; `degrees` says whether degrees are reported.
    RecruitmentTree { degrees: bool },
    /// Every edge and non-edge incident to a sampled node.
    FullRows,
}

impl DesignSpec {
    pub fn new(kind: DesignKind, target_n: usize) -> Self {
        Self { kind, target_n }
    }

    pub fn rds(m: usize, w0: usize, target_n: usize) -> Self {
        Self::new(DesignKind::Rds { m, w0, max_waves: None }, target_n)
    }

    pub fn link_tracing(s: usize, r: usize, w: usize, target_n: usize) -> Self {
        Self::new(DesignKind::LinkTracing { s, r, w }, target_n)
    }

    pub fn snowball(s: usize, k: usize, target_n: usize) -> Self {
        Self::new(DesignKind::Snowball { s, k }, target_n)
    }

    pub fn ego(n: usize) -> Self {
        Self::new(DesignKind::Ego, n)
    }

    /// Short label such as `RDS(m=3,w0=5)`.
    pub fn label(&self) -> String {
        match &self.kind {
            DesignKind::Rds { m, w0, max_waves: None } => format!("RDS(m={m},w0={w0})"),
            DesignKind::Rds { m, w0, max_waves: Some(w) } => format!("RDS(m={m},w0={w0},w={w})"),
            DesignKind::LinkTracing { s, r, w } => format!("LT(s={s},r={r},w={w})"),
            DesignKind::Snowball { s, k } => format!("Snowball(s={s},k={k})"),
            DesignKind::Ego => format!("Ego(n={})", self.target_n),
            DesignKind::CurveRds { eta, c_max, w_max, w0 } => {
                format!("CurveRDS(eta={eta},C={c_max},W={w_max},w0={w0})")
            }
            DesignKind::SwitchRds { lambda_lo, lambda_hi, switch_wave, w0 } => {
                format!("SwitchRDS(lo={lambda_lo},hi={lambda_hi},k={switch_wave},w0={w0})")
            }
            DesignKind::SequentialRds { w0_grid, m_grid } => {
                format!("SequentialRDS(w0={w0_grid:?},m={m_grid:?})")
            }
        }
    }

    pub fn validate(&self, n_total: usize) -> Result<()> {
        if self.target_n == 0 {
            return param("target sample size must be at least 1");
        }
        if self.target_n > n_total {
            return param(format!(
                "target sample size {} exceeds population size {n_total}",
                self.target_n
            ));
        }
        let pos = |v: usize, name: &str| -> Result<()> {
            if v == 0 {
                return param(format!("{name} must be at least 1"));
            }
            Ok(())
        };
        match &self.kind {
            DesignKind::Rds { m, w0, max_waves } => {
                pos(*m, "m")?;
                pos(*w0, "w0")?;
                if let Some(w) = max_waves {
                    pos(*w, "max_waves")?;
                }
            }
            DesignKind::LinkTracing { s, r, w } => {
                pos(*s, "s")?;
                pos(*r, "r")?;
                pos(*w, "w")?;
            }
            DesignKind::Snowball { s, k } => {
                pos(*s, "s")?;
                pos(*k, "k")?;
            }
            DesignKind::Ego => {}
            DesignKind::CurveRds { eta, c_max, w_max, w0 } => {
                if !(*eta > 0.0 && eta.is_finite()) {
                    return param(format!("eta = {eta} must be positive"));
                }
                pos(*c_max, "c_max")?;
                pos(*w_max, "w_max")?;
                pos(*w0, "w0")?;
            }
            DesignKind::SwitchRds { lambda_lo, lambda_hi, switch_wave, w0 } => {
                pos(*lambda_lo, "lambda_lo")?;
                pos(*switch_wave, "switch_wave")?;
                pos(*w0, "w0")?;
                if lambda_lo >= lambda_hi {
                    return param(format!("lambda_lo = {lambda_lo} must be below lambda_hi = {lambda_hi}"));
                }
            }
            DesignKind::SequentialRds { w0_grid, m_grid } => {
                if w0_grid.is_empty() || m_grid.is_empty() {
                    return param("sequential grids must be nonempty");
                }
                for &v in w0_grid.iter().chain(m_grid) {
                    pos(v, "grid value")?;
                }
                if w0_grid.iter().any(|&w| w > self.target_n) {
                    return param("seed count exceeds target sample size");
                }
            }
        }
        if let Some(s) = self.seed_count() {
            if s > self.target_n {
                return param(format!(
                    "seed count {s} exceeds target sample size {}",
                    self.target_n
                ));
            }
        }
        Ok(())
    }

    /// Number of wave-0 nodes (`None` for the sequential family).
    pub fn seed_count(&self) -> Option<usize> {
        match &self.kind {
            DesignKind::Rds { w0, .. }
            | DesignKind::CurveRds { w0, .. }
            | DesignKind::SwitchRds { w0, .. } => Some(*w0),
            DesignKind::LinkTracing { s, .. } | DesignKind::Snowball { s, .. } => Some(*s),
            DesignKind::Ego => Some(self.target_n),
            DesignKind::SequentialRds { .. } => None,
        }
    }

    /// Referral budget for recruits entering wave `wave >= 1`.
    pub fn referral_schedule(&self, wave: usize) -> Result<usize> {
        if wave == 0 {
            return param("referral budgets are defined for waves >= 1");
        }
        match &self.kind {
            DesignKind::Rds { m, .. } => Ok(*m),
            DesignKind::LinkTracing { r, .. } => Ok(*r),
            DesignKind::Snowball { .. } => Ok(usize::MAX),
            DesignKind::CurveRds { eta, c_max, w_max, .. } => {
                if wave > *w_max {
                    return param(format!("wave {wave} outside 1..={w_max}"));
                }
                let z = *c_max as f64 * (wave as f64 / *w_max as f64).powf(*eta);
                // guard against z = k + 1e-15 from rounding in the power
                let k = z.ceil();
                let k = if (k - 1.0 - z).abs() < 1e-9 * z.max(1.0) { k - 1.0 } else { k };
                Ok(k.max(0.0) as usize)
            }
            DesignKind::SwitchRds { lambda_lo, lambda_hi, switch_wave, .. } => {
                Ok(if wave < *switch_wave { *lambda_lo } else { *lambda_hi })
            }
            DesignKind::Ego | DesignKind::SequentialRds { .. } => {
                param(format!("{} has no referral schedule", self.label()))
            }
        }
    }

    /// Last wave that may be recruited, if the family caps it.
    pub fn max_waves(&self) -> Option<usize> {
        match &self.kind {
            DesignKind::Rds { max_waves, .. } => *max_waves,
            DesignKind::LinkTracing { w, .. } => Some(*w),
            DesignKind::Snowball { k, .. } => Some(*k),
            DesignKind::CurveRds { w_max, .. } => Some(*w_max),
            DesignKind::Ego => Some(0),
            DesignKind::SwitchRds { .. } | DesignKind::SequentialRds { .. } => None,
        }
    }

    /// Whether a stalled referral chain draws a fresh uniform seed.
    pub fn reseeds_on_stall(&self) -> bool {
        matches!(
            self.kind,
            DesignKind::Rds { max_waves: None, .. }
                | DesignKind::CurveRds { .. }
                | DesignKind::SwitchRds { .. }
                | DesignKind::SequentialRds { .. }
        )
    }

    pub fn regime(&self) -> ObservationRegime {
        match self.kind {
            DesignKind::LinkTracing { .. } => ObservationRegime::RecruitmentTree { degrees: false },
            DesignKind::Snowball { .. } | DesignKind::Ego => ObservationRegime::FullRows,
            _ => ObservationRegime::RecruitmentTree { degrees: true },
        }
    }
}

/// Whether the design factor can be dropped from the likelihood, with a
/// short reason.
pub fn is_ignorable(design: &DesignSpec) -> (bool, &'static str) {
    match design.kind {
        DesignKind::Ego => (true, "uniform node choice independent of the unobserved graph"),
        DesignKind::Snowball { .. } => (true, "every wave is a function of observed rows"),
        DesignKind::LinkTracing { .. } => {
            (false, "adjusted degrees depend on unobserved edges and degrees are not reported")
        }
        _ => (false, "adjusted degrees depend on unobserved edges among sampled nodes"),
    }
}
