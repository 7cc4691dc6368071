use crate::error::{Error, Result};
use crate::graph::{pair_count, xlogy};

fn bernoulli_entropy(a: f64) -> f64 {
    -(xlogy(a, a) + xlogy(1.0 - a, 1.0 - a))
}

/// Entropy in nats of an Erdős–Rényi graph on `n` nodes.
pub fn entropy_er(n: usize, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Parameter(format!("edge probability {alpha} outside [0, 1]")));
    }
    Ok(pair_count(n) as f64 * bernoulli_entropy(alpha))
}

/// `2 N H_Block + C(N, 2) H̃_Inclusion`, the inclusion term summed over
/// ordered block pairs.
pub fn entropy_sbm(n: usize, beta: &[f64], alpha: &[Vec<f64>]) -> Result<f64> {
    let k = beta.len();
    if k == 0 || alpha.len() != k || alpha.iter().any(|r| r.len() != k) {
        return Err(Error::Parameter("block probabilities and the K×K matrix disagree in size".into()));
    }
    if beta.iter().any(|b| !(0.0..=1.0).contains(b)) || (beta.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Parameter("block probabilities must form a distribution".into()));
    }
    if alpha.iter().flatten().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::Parameter("inclusion probabilities must lie in [0, 1]".into()));
    }
    let h_block: f64 = -beta.iter().map(|&b| xlogy(b, b)).sum::<f64>();
    let mut h_incl = 0.0;
    for i in 0..k {
        for j in 0..k {
            h_incl += beta[i] * beta[j] * bernoulli_entropy(alpha[i][j]);
        }
    }
    Ok(2.0 * n as f64 * h_block + pair_count(n) as f64 * h_incl)
}

/// Bounds `(H, H + 1)` on the shortest average code length; `bits`
/// converts an entropy given in nats.
pub fn compression_bound(entropy_nats: f64, bits: bool) -> Result<(f64, f64)> {
    if !(entropy_nats >= 0.0) {
        return Err(Error::Parameter(format!("entropy {entropy_nats} is negative")));
    }
    let h = if bits { entropy_nats / std::f64::consts::LN_2 } else { entropy_nats };
    Ok((h, h + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{enumerate_graphs, graph_log_prob, GraphModel};

    #[test]
    fn er_closed_form() {
        assert_eq!(entropy_er(5, 0.0).unwrap(), 0.0);
        assert!((entropy_er(3, 0.5).unwrap() - 3.0 * 2f64.ln()).abs() < 1e-14);
        for a in [0.1, 0.3, 0.5] {
            let m = GraphModel::ErdosRenyi { alpha: a };
            let h: f64 = enumerate_graphs(4)
                .unwrap()
                .map(|g| {
                    let lp = graph_log_prob(&g, &m, None).unwrap();
                    -lp.exp() * lp
                })
                .sum();
            assert!((h - entropy_er(4, a).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn er_symmetric_and_peaked_at_half() {
        for i in 0..=20 {
            let a = i as f64 / 20.0;
            let h = entropy_er(7, a).unwrap();
            assert!((h - entropy_er(7, 1.0 - a).unwrap()).abs() < 1e-12);
            assert!(h <= entropy_er(7, 0.5).unwrap());
        }
    }

    #[test]
    fn sbm_cases() {
        assert_eq!(entropy_sbm(6, &[1.0], &[vec![0.3]]).unwrap(), entropy_er(6, 0.3).unwrap());
        assert_eq!(entropy_sbm(6, &[1.0, 0.0], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(), 0.0);
        let (b, m) = ([0.5, 0.5], [vec![0.9, 0.1], vec![0.1, 0.9]]);
        let hb = 2f64.ln();
        let hi = -(0.9f64 * 0.9f64.ln() + 0.1 * 0.1f64.ln());
        let expect = 8.0 * hb + 6.0 * hi;
        assert!((entropy_sbm(4, &b, &m).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn bounds() {
        assert_eq!(compression_bound(0.0, false).unwrap(), (0.0, 1.0));
        let (lo, hi) = compression_bound(3.0 * 2f64.ln(), true).unwrap();
        assert!((lo - 3.0).abs() < 1e-12 && (hi - 4.0).abs() < 1e-12);
        assert!(compression_bound(2.0, false).unwrap().0 > compression_bound(1.0, false).unwrap().0);
    }
}
