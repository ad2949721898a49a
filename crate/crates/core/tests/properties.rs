mod common;

use std::collections::BTreeSet;

use arxivnet::arxiv_id::{scan_text, ArxivId};
use arxivnet::citegraph::{build_graph_with, mean_degree, wcc_fraction};
use arxivnet::par::Exec;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn id_strategy() -> impl Strategy<Value = String> {
    any::<u64>().prop_map(|seed| common::random_id(&mut ChaCha8Rng::seed_from_u64(seed)))
}

proptest! {
    #[test]
    fn canonical_round_trip(s in id_strategy()) {
        let id = ArxivId::parse(&s).unwrap();
        prop_assert_eq!(id.canonical(true), s.clone());
        prop_assert_eq!(ArxivId::parse(&id.canonical(true)).unwrap(), id.clone());
        prop_assert_eq!(id.without_version().version(), None);
    }

    #[test]
    fn planted_ids_are_found(ids in prop::collection::vec(id_strategy(), 0..8), filler in "[ a-z,.;()]{0,20}") {
        let mut text = String::new();
        let mut offsets = Vec::new();
        for (k, id) in ids.iter().enumerate() {
            text.push_str(&filler);
            text.push_str(if k % 2 == 0 { " arXiv:" } else { " " });
            offsets.push(text.len());
            text.push_str(id);
            text.push(' ');
        }
        let found = scan_text(&text);
        let got: Vec<(usize, String)> = found.iter().map(|m| (m.offset, m.id.canonical(true))).collect();
        let want: Vec<(usize, String)> = offsets.into_iter().zip(ids).collect();
        prop_assert_eq!(got, want);
    }

    /// Relabeling the articles relabels the graph and nothing else.
    #[test]
    fn graph_is_order_invariant(
        n in 1usize..40,
        cites in prop::collection::vec((0usize..40, 0usize..40), 0..120),
        seed in any::<u64>(),
    ) {
        let ids: Vec<String> = (1..=n).map(|i| format!("0704.{i:04}")).collect();
        let cites: Vec<(usize, usize)> = cites.into_iter().map(|(a, b)| (a % n, b % n)).collect();
        let text = |ids: &[String], i: usize| -> Option<String> {
            let cited: Vec<String> = cites.iter().filter(|c| ids[i] == format!("0704.{:04}", c.0 + 1))
                .map(|c| format!("arXiv:0704.{:04}v3", c.1 + 1)).collect();
            Some(cited.join(", "))
        };
        let g = build_graph_with(&ids, Exec::Sequential, |i| text(&ids, i)).unwrap();

        let mut perm = ids.clone();
        use rand::seq::SliceRandom;
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let h = build_graph_with(&perm, Exec::Parallel, |i| text(&perm, i)).unwrap();

        let named = |g: &arxivnet::citegraph::CitationGraph| -> BTreeSet<(String, String)> {
            g.edges().map(|(s, t)| (g.node_id(s as usize).to_string(), g.node_id(t as usize).to_string())).collect()
        };
        prop_assert_eq!(named(&g), named(&h));
        let expected: BTreeSet<(usize, usize)> = cites.iter().copied().filter(|(a, b)| a != b).collect();
        prop_assert_eq!(g.n_edges(), expected.len());
        prop_assert_eq!(mean_degree(&g).unwrap(), mean_degree(&h).unwrap());
        prop_assert_eq!(wcc_fraction(&g).unwrap(), wcc_fraction(&h).unwrap());
    }
}
