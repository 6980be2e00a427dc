mod common;

use common::random_connected;
use lrgk::graph::{ball, dijkstra_within};
use lrgk::Graph;
use lrgk::labeling::{eccentricities, eccentricity_hat, quantile_labels};
use lrgk::oracle::{exact_diameter, exact_eccentricity};
use lrgk::Exec;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matches_oracle_when_ball_covers_graph(n in 2usize..80, extra in 0usize..60, seed in any::<u64>()) {
        let g = random_connected(n, extra, 0.5, 50.0, seed);
        let hops = exact_diameter(&g).unwrap().max(1);
        let ours = eccentricities(&g, hops, Exec::Sequential).unwrap();
        let exact = exact_eccentricity(&g, true).unwrap();
        for (a, b) in ours.iter().zip(&exact) {
            prop_assert!((a - b).abs() <= 1e-9 * b.max(1.0), "{} vs {}", a, b);
        }
    }

    #[test]
    fn non_decreasing_in_hop_bound_on_unit_weights(n in 2usize..60, extra in 0usize..40, seed in any::<u64>()) {
        let g = random_connected(n, extra, 1.0, 1.0, seed);
        let mut prev = vec![0.0; n];
        for h in 1..8 {
            let cur = eccentricities(&g, h, Exec::Sequential).unwrap();
            prop_assert!(cur.iter().zip(&prev).all(|(c, p)| c >= p));
            prev = cur;
        }
    }

    #[test]
    fn ego_distances_dominate_graph_distances(n in 2usize..60, extra in 0usize..40, seed in any::<u64>(), h in 1usize..5) {
        let g = random_connected(n, extra, 0.5, 50.0, seed);
        let v = (seed % n as u64) as usize;
        let full = dijkstra_within(&g, v, &vec![true; n]).unwrap();
        let b = ball(&g, v, h).unwrap();
        let mut allowed = vec![false; n];
        b.nodes.iter().for_each(|&u| allowed[u] = true);
        let ego = dijkstra_within(&g, v, &allowed).unwrap();
        for &u in &b.nodes {
            prop_assert!(ego[u] >= full[u]);
        }
        let max = b.nodes.iter().map(|&u| ego[u]).fold(0.0, f64::max);
        prop_assert_eq!(max.to_bits(), eccentricity_hat(&g, v, h).unwrap().to_bits());
    }

    #[test]
    fn single_node_matches_batch(n in 2usize..40, extra in 0usize..30, seed in any::<u64>(), h in 1usize..6) {
        let g = random_connected(n, extra, 1.0, 10.0, seed);
        let all = eccentricities(&g, h, Exec::Parallel).unwrap();
        for v in 0..n {
            prop_assert_eq!(eccentricity_hat(&g, v, h).unwrap().to_bits(), all[v].to_bits());
        }
    }

    #[test]
    fn quantiles_are_balanced_and_order_preserving(values in prop::collection::vec(-1e3f64..1e3, 1..300), q in 2usize..12) {
        let y = quantile_labels(&values, q).unwrap();
        let n = values.len();
        let mut counts = vec![0usize; q];
        for &c in &y {
            counts[c] += 1;
        }
        let lo = n / q;
        prop_assert!(counts.iter().all(|&c| c == lo || c == lo + 1));
        for a in 0..n {
            for b in 0..n {
                if values[a] < values[b] {
                    prop_assert!(y[a] <= y[b]);
                }
            }
        }
    }
}

#[test]
fn parallel_matches_sequential_bitwise() {
    let g = random_connected(300, 200, 1.0, 100.0, 11);
    let a = eccentricities(&g, 6, Exec::Sequential).unwrap();
    let b = eccentricities(&g, 6, Exec::Parallel).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn larger_ball_can_shorten_weighted_distances() {
    // v=0, u=1 on a heavy direct road; a=2, b=3 form a light detour through hop 2.
    let g = Graph::from_edges(4, &[(0, 1, 100.0), (0, 2, 1.0), (2, 3, 1.0), (3, 1, 1.0)], None).unwrap();
    assert_eq!(eccentricity_hat(&g, 0, 1).unwrap(), 100.0);
    assert_eq!(eccentricity_hat(&g, 0, 2).unwrap(), 3.0);
}
