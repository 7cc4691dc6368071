use netdesign::design::{enumerate_traces, observed_data, rds_log_likelihood, run_design, DesignSpec, SampleTrace};
use netdesign::graph::{pair_count, Graph};
use netdesign::mrf::ResponseVector;
use netdesign::order::{canonical_indexing, project_drop_wave};
use netdesign::rng::stream;
use proptest::prelude::*;

fn graph_and_responses() -> impl Strategy<Value = (Graph, ResponseVector)> {
    (3usize..=6).prop_flat_map(|n| {
        (Just(n), 0u64..(1u64 << pair_count(n)), 0u64..(1u64 << n))
            .prop_map(|(n, mask, y)| (Graph::from_mask(n, mask).unwrap(), ResponseVector::from_index(n, y)))
    })
}

fn design() -> impl Strategy<Value = DesignSpec> {
    prop_oneof![
        (1usize..=2, 1usize..=2, 2usize..=4).prop_map(|(m, w0, n)| DesignSpec::rds(m, w0, n)),
        (1usize..=2, 1usize..=2, 1usize..=2, 2usize..=4).prop_map(|(s, r, w, n)| DesignSpec::link_tracing(s, r, w, n)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_traces_are_valid_and_round_trip((g, y) in graph_and_responses(), d in design(), seed in any::<u64>()) {
        prop_assume!(d.validate(g.n_nodes()).is_ok());
        let t = run_design(&d, &g, &y, &mut stream(seed, &[])).unwrap();
        t.validate(Some(&g)).unwrap();
        prop_assert_eq!(&SampleTrace::from_json(&t.to_json()).unwrap(), &t);
        for (r, &v) in t.recruits.iter().zip(&t.responses) {
            prop_assert_eq!(v, y.get(r.node) as u8);
        }
        let ll = rds_log_likelihood(&t, &g, &d).unwrap();
        prop_assert!(ll.is_finite() && ll <= 1e-12, "{}", ll);

        let obs = observed_data(&t, &g, &y).unwrap();
        for &(i, j) in &obs.edges {
            prop_assert!(g.has_edge(i, j));
        }
    }

    #[test]
    fn enumerated_trace_law_sums_to_one((g, y) in graph_and_responses(), d in design()) {
        prop_assume!(d.validate(g.n_nodes()).is_ok());
        prop_assume!(g.n_nodes() <= 5);
        let law = enumerate_traces(&d, &g, &y).unwrap();
        let total: f64 = law.iter().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "{}", total);
        prop_assert!(law.iter().all(|(_, p)| *p > 0.0));
    }

    #[test]
    fn canonical_form_is_stable_and_drop_wave_shortens(
        (g, y) in graph_and_responses(),
        s in 1usize..=2, r in 1usize..=2, w in 1usize..=2,
        seed in any::<u64>(),
    ) {
        let d = DesignSpec::link_tracing(s, r, w + 1, g.n_nodes());
        prop_assume!(d.validate(g.n_nodes()).is_ok());
        let t = run_design(&d, &g, &y, &mut stream(seed, &[0])).unwrap();
        let ct = canonical_indexing(&t, &mut stream(seed, &[1])).unwrap();
        let again = canonical_indexing(&ct.to_trace(), &mut stream(seed, &[2])).unwrap();
        prop_assert_eq!(ct.key(), again.key());
        let dropped = project_drop_wave(&ct).unwrap();
        prop_assert!(dropped.recruits.iter().all(|x| x.wave <= w));
        prop_assert!(dropped.len() <= ct.len());
    }
}
