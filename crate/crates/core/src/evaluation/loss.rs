use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Loss used to score an inference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossSpec {
    Quadratic,
    /// `k2` per unit of underestimation, `k1` per unit of overestimation.
    Multilinear { k1: f64, k2: f64 },
    /// Negative KL divergence of the posterior predictive of `Q` from its
    /// prior predictive.
    KlPredictive,
    /// Hellinger distance between the predictive laws of `Q` under the
    /// truth and under the fitted parameters.
    HellingerIntrinsic,
}

impl Default for LossSpec {
    fn default() -> Self {
        LossSpec::Quadratic
    }
}

impl LossSpec {
    pub fn validate(&self) -> Result<()> {
        if let LossSpec::Multilinear { k1, k2 } = self {
            if !(*k1 > 0.0 && *k2 > 0.0 && k1.is_finite() && k2.is_finite()) {
                return Err(Error::Parameter(format!("multilinear weights must be positive, got ({k1}, {k2})")));
            }
        }
        Ok(())
    }

    /// Whether the loss compares a point estimate with a scalar truth.
    pub fn is_pointwise(&self) -> bool {
        matches!(self, LossSpec::Quadratic | LossSpec::Multilinear { .. })
    }

    pub fn label(&self) -> String {
        match self {
            LossSpec::Quadratic => "quadratic".into(),
            LossSpec::Multilinear { k1, k2 } => format!("multilinear({k1},{k2})"),
            LossSpec::KlPredictive => "kl_predictive".into(),
            LossSpec::HellingerIntrinsic => "hellinger_intrinsic".into(),
        }
    }
}

/// Pointwise loss of estimate `a` when the truth is `q`.
pub fn loss_value(spec: &LossSpec, a: f64, q: f64) -> Result<f64> {
    match *spec {
        LossSpec::Quadratic => Ok((a - q).powi(2)),
        LossSpec::Multilinear { k1, k2 } => Ok(if q > a { k2 * (q - a) } else { k1 * (a - q) }),
        _ => Err(Error::Parameter(format!("{} is not a pointwise loss", spec.label()))),
    }
}

/// Lower quantile: the smallest draw whose empirical CDF reaches `p`.
pub fn lower_quantile(draws: &[f64], p: f64) -> Result<f64> {
    if draws.is_empty() {
        return Err(Error::Data("quantile of an empty sample".into()));
    }
    let mut v = draws.to_vec();
    v.sort_by(f64::total_cmp);
    let k = ((p * v.len() as f64).ceil() as usize).clamp(1, v.len());
    Ok(v[k - 1])
}

/// Bayes action for a pointwise loss given posterior draws of `Q`.
pub fn bayes_rule(spec: &LossSpec, draws: &[f64]) -> Result<f64> {
    if draws.is_empty() {
        return Err(Error::Data("no posterior draws".into()));
    }
    match *spec {
        LossSpec::Quadratic => Ok(draws.iter().sum::<f64>() / draws.len() as f64),
        LossSpec::Multilinear { k1, k2 } => lower_quantile(draws, k2 / (k1 + k2)),
        _ => Err(Error::Parameter(format!("{} has no scalar Bayes action", spec.label()))),
    }
}

/// Bayes action for a pointwise loss given a law on `support`.
pub fn bayes_rule_pmf(spec: &LossSpec, support: &[f64], pmf: &[f64]) -> Result<f64> {
    check_table(pmf)?;
    match *spec {
        LossSpec::Quadratic => Ok(support.iter().zip(pmf).map(|(x, p)| x * p).sum()),
        LossSpec::Multilinear { k1, k2 } => {
            let target = k2 / (k1 + k2);
            let mut cdf = 0.0;
            for (x, p) in support.iter().zip(pmf) {
                cdf += p;
                if *p > 0.0 && cdf >= target - 1e-12 {
                    return Ok(*x);
                }
            }
            Ok(*support.last().expect("nonempty support"))
        }
        _ => Err(Error::Parameter(format!("{} has no scalar Bayes action", spec.label()))),
    }
}

/// Posterior expected loss of the Bayes action, averaged over the draws.
pub fn expected_posterior_loss(spec: &LossSpec, draws: &[f64]) -> Result<f64> {
    let a = bayes_rule(spec, draws)?;
    let mut s = 0.0;
    for &q in draws {
        s += loss_value(spec, a, q)?;
    }
    Ok(s / draws.len() as f64)
}

/// Exact posterior expected loss of the Bayes action for a law on `support`.
pub fn expected_posterior_loss_pmf(spec: &LossSpec, support: &[f64], pmf: &[f64]) -> Result<f64> {
    let a = bayes_rule_pmf(spec, support, pmf)?;
    let mut s = 0.0;
    for (&q, &p) in support.iter().zip(pmf) {
        s += p * loss_value(spec, a, q)?;
    }
    Ok(s)
}

fn check_table(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::Data("empty probability table".into()));
    }
    if p.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::Data("probability table has a negative or non-finite entry".into()));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::Data(format!("probability table sums to {s}")));
    }
    Ok(())
}

/// Hellinger distance `½ Σ (√p − √q)²`.
pub fn hellinger(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Data(format!("tables of length {} and {}", p.len(), q.len())));
    }
    check_table(p)?;
    check_table(q)?;
    let h = 0.5 * p.iter().zip(q).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum::<f64>();
    Ok(h.clamp(0.0, 1.0))
}

/// `KL(p ‖ q)` in nats; fails unless `p` is absolutely continuous with
/// respect to `q`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Data(format!("tables of length {} and {}", p.len(), q.len())));
    }
    check_table(p)?;
    check_table(q)?;
    let mut s = 0.0;
    for (i, (&a, &b)) in p.iter().zip(q).enumerate() {
        if a > 0.0 {
            if b == 0.0 {
                return Err(Error::Data(format!("support violation at cell {i}")));
            }
            s += a * (a / b).ln();
        }
    }
    Ok(s)
}

/// `−Σ_q log(post(q) / prior(q)) · post(q)`, i.e. `−KL(post ‖ prior)`.
pub fn kl_predictive_loss(prior_pred: &[f64], post_pred: &[f64]) -> Result<f64> {
    Ok(-kl_divergence(post_pred, prior_pred)?)
}

/// Normalized histogram of values on the grid `{0, 1/n, ..., 1}`.
pub fn q_histogram(values: &[f64], n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n + 1];
    for v in values {
        h[((v * n as f64).round() as usize).min(n)] += 1.0;
    }
    let t = values.len().max(1) as f64;
    h.iter_mut().for_each(|x| *x /= t);
    h
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0);
    (m, (v / k).sqrt())
}
