mod common;

use common::random_connected;
use lrgk::graph::{ball, bfs_hops, hop_shell, read_graph_bin, write_graph_bin};
use lrgk::oracle::exact_diameter;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shells_partition_the_ball(n in 2usize..60, extra in 0usize..40, seed in any::<u64>(), h in 0usize..8) {
        let g = random_connected(n, extra, 1.0, 1.0, seed);
        let v = (seed % n as u64) as usize;
        let b = ball(&g, v, h).unwrap();
        let mut from_shells: Vec<usize> = (0..=h)
            .flat_map(|k| hop_shell(&g, v, k).unwrap().members)
            .collect();
        let total = from_shells.len();
        from_shells.sort_unstable();
        from_shells.dedup();
        prop_assert_eq!(total, from_shells.len());
        let mut in_ball = b.nodes.clone();
        in_ball.sort_unstable();
        prop_assert_eq!(in_ball, from_shells);
        for k in 0..=h {
            let shell = hop_shell(&g, v, k).unwrap();
            prop_assert_eq!(shell.members.len(), b.count_within(k) - if k == 0 { 0 } else { b.count_within(k - 1) });
        }
    }

    #[test]
    fn bfs_hops_are_consistent_with_edges(n in 2usize..60, extra in 0usize..40, seed in any::<u64>()) {
        let g = random_connected(n, extra, 1.0, 1.0, seed);
        let hop = bfs_hops(&g, 0, n).unwrap();
        prop_assert_eq!(hop[0], Some(0));
        for (u, v, _) in g.edges() {
            let (a, b) = (hop[u].unwrap(), hop[v].unwrap());
            prop_assert!(a.abs_diff(b) <= 1);
        }
        let ecc0 = hop.iter().map(|h| h.unwrap()).max().unwrap();
        prop_assert!(ecc0 <= exact_diameter(&g).unwrap());
    }

    #[test]
    fn ball_prefix_is_monotone(n in 2usize..60, extra in 0usize..40, seed in any::<u64>(), h in 1usize..10) {
        let g = random_connected(n, extra, 1.0, 1.0, seed);
        let b = ball(&g, n - 1, h).unwrap();
        prop_assert!(b.hops.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(b.prefix.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(b.nodes[0], n - 1);
    }

    #[test]
    fn relabeling_preserves_degree_multiset(n in 2usize..50, extra in 0usize..30, seed in any::<u64>()) {
        let g = random_connected(n, extra, 0.5, 3.0, seed);
        let perm: Vec<usize> = (0..n).map(|v| (v * 7 + 3) % n).collect();
        prop_assume!({ let mut p = perm.clone(); p.sort_unstable(); p.dedup(); p.len() == n });
        let r = g.relabel(&perm).unwrap();
        prop_assert_eq!(r.n_edges(), g.n_edges());
        for v in 0..n {
            prop_assert_eq!(r.degree(perm[v]), g.degree(v));
        }
        for (u, v, w) in g.edges() {
            prop_assert_eq!(r.edge_weight(perm[u], perm[v]), Some(w));
        }
    }
}

#[test]
fn binary_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = random_connected(40, 25, 0.1, 9.0, 3);
    let p = dir.path().join("g.bin");
    write_graph_bin(&g, &p).unwrap();
    assert_eq!(read_graph_bin(&p).unwrap(), g);
}
