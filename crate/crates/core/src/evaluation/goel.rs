//! KL information of an experiment for discriminating between the prior
//! predictive laws implied by two graph priors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::lindley::Estimate;
use crate::design::{enumerate_traces, DesignSpec, ObservedData};
use crate::error::{param, Error, Result};
use crate::graph::{enumerate_graphs, gen_er, pair_count, GraphPrior};
use crate::mrf::ResponseVector;
use crate::rng::stream;

/// Which outcome the marginal laws are taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GdScope {
    /// The full graph together with the trace, `p_i(G, I) = p(I | G) m_i(G)`.
    #[default]
    CompleteData,
    /// Only what the design reveals.
    Observed,
}

fn term(p1: f64, p2: f64) -> Result<f64> {
    if p1 == 0.0 {
        return Ok(0.0);
    }
    if p2 == 0.0 {
        return Err(Error::Data("the first marginal is not absolutely continuous w.r.t. the second".into()));
    }
    Ok(p1 * (p1 / p2).ln())
}

/// Exact `J = Σ_x p1(x) log(p1(x) / p2(x))` by enumeration.
pub fn goel_degroot_j(
    design: &DesignSpec,
    prior1: &GraphPrior,
    prior2: &GraphPrior,
    n: usize,
    scope: GdScope,
) -> Result<f64> {
    for p in [prior1, prior2] {
        p.validate()?;
        p.require_er()?;
    }
    design.validate(n)?;
    let pairs = pair_count(n);
    let y = ResponseVector::zeros(n);
    let mut complete = 0.0;
    let mut observed: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for g in enumerate_graphs(n)? {
        let m1 = prior1.log_marginal_er(g.n_edges(), pairs).exp();
        let m2 = prior2.log_marginal_er(g.n_edges(), pairs).exp();
        for (t, pt) in enumerate_traces(design, &g, &y)? {
            match scope {
                GdScope::CompleteData => complete += term(pt * m1, pt * m2)?,
                GdScope::Observed => {
                    let e = observed.entry(ObservedData::from_trace(&t, Some(&g))?.key()).or_insert((0.0, 0.0));
                    e.0 += pt * m1;
                    e.1 += pt * m2;
                }
            }
        }
    }
    match scope {
        GdScope::CompleteData => Ok(complete),
        GdScope::Observed => observed.values().map(|&(a, b)| term(a, b)).sum(),
    }
}

/// Monte Carlo `J` over complete data: graphs drawn from the first prior,
/// the design factor cancelling in every log ratio.
pub fn goel_degroot_j_mc(prior1: &GraphPrior, prior2: &GraphPrior, n: usize, k: usize, master: u64) -> Result<Estimate> {
    if k < 2 {
        return param("at least two replicates are needed for a standard error");
    }
    let pairs = pair_count(n);
    let mut xs = Vec::with_capacity(k);
    for i in 0..k {
        let mut rng = stream(master, &[i as u64, 0]);
        let model = prior1.sample(&mut rng)?;
        let g = gen_er(n, model.pair_prob(0, 0), &mut rng)?;
        let (l1, l2) = (prior1.log_marginal_er(g.n_edges(), pairs), prior2.log_marginal_er(g.n_edges(), pairs));
        if l2 == f64::NEG_INFINITY {
            return Err(Error::Data("the first marginal is not absolutely continuous w.r.t. the second".into()));
        }
        xs.push(l1 - l2);
    }
    Ok(Estimate::from_samples(&xs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn priors() -> (GraphPrior, GraphPrior) {
        (GraphPrior::BetaEr { tau1: 1.0, tau2: 1.0 }, GraphPrior::BetaEr { tau1: 2.0, tau2: 5.0 })
    }

    #[test]
    fn identical_priors_give_zero() {
        let (a, _) = priors();
        for s in [GdScope::CompleteData, GdScope::Observed] {
            assert!(goel_degroot_j(&DesignSpec::rds(1, 1, 3), &a, &a, 4, s).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn complete_data_j_ignores_the_design() {
        let (a, b) = priors();
        let base = goel_degroot_j(&DesignSpec::ego(4), &a, &b, 4, GdScope::CompleteData).unwrap();
        assert!(base > 0.0);
        for d in [DesignSpec::ego(1), DesignSpec::ego(2), DesignSpec::snowball(1, 1, 3), DesignSpec::rds(2, 1, 3)] {
            let j = goel_degroot_j(&d, &a, &b, 4, GdScope::CompleteData).unwrap();
            assert!((j - base).abs() < 1e-12, "{d:?}");
        }
        let mc = goel_degroot_j_mc(&a, &b, 4, 20_000, 1).unwrap();
        assert!((mc.mean - base).abs() < 4.0 * mc.se);
    }

    #[test]
    fn observed_j_grows_with_the_sample() {
        let (a, b) = priors();
        let j1 = goel_degroot_j(&DesignSpec::ego(1), &a, &b, 4, GdScope::Observed).unwrap();
        let j4 = goel_degroot_j(&DesignSpec::ego(4), &a, &b, 4, GdScope::Observed).unwrap();
        assert!(j1 < j4);
    }

    #[test]
    fn support_violation_is_an_error() {
        let a = GraphPrior::BetaEr { tau1: 1.0, tau2: 1.0 };
        let b = GraphPrior::PointMass { model: crate::graph::GraphModel::ErdosRenyi { alpha: 0.0 } };
        assert!(matches!(goel_degroot_j(&DesignSpec::ego(2), &a, &b, 3, GdScope::CompleteData), Err(Error::Data(_))));
    }
}
