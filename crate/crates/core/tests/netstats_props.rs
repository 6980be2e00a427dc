mod common;

use approx::assert_relative_eq;
use common::random_connected;
use lrgk::ingest::gen_small_world;
use lrgk::netstats::{clustering, degree_stats, diameter_estimate, double_sweep, node_homophily, report};
use lrgk::oracle::exact_diameter;
use lrgk::Exec;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn invariant_under_relabeling(n in 3usize..50, extra in 0usize..80, seed in any::<u64>()) {
        let g = random_connected(n, extra, 1.0, 1.0, seed);
        let step = (1..n).find(|s| gcd(*s, n) == 1 && *s > 1).unwrap_or(1);
        let perm: Vec<usize> = (0..n).map(|v| (v * step + 1) % n).collect();
        let r = g.relabel(&perm).unwrap();
        let (a, b) = (degree_stats(&g), degree_stats(&r));
        prop_assert_eq!(a.max, b.max);
        assert_relative_eq!(a.mean, b.mean, max_relative = 1e-12);
        assert_relative_eq!(a.std, b.std, max_relative = 1e-12, epsilon = 1e-12);
        let (ca, cb) = (clustering(&g, Exec::Sequential), clustering(&r, Exec::Parallel));
        assert_relative_eq!(ca.average, cb.average, max_relative = 1e-12, epsilon = 1e-12);
        assert_relative_eq!(ca.transitivity, cb.transitivity, max_relative = 1e-12, epsilon = 1e-12);
        prop_assert!((0.0..=1.0).contains(&ca.average));
        prop_assert!((0.0..=1.0).contains(&ca.transitivity));
    }

    #[test]
    fn diameter_estimate_is_a_lower_bound(n in 2usize..80, extra in 0usize..60, seed in any::<u64>()) {
        let g = random_connected(n, extra, 1.0, 1.0, seed);
        let exact = exact_diameter(&g).unwrap();
        prop_assert!(double_sweep(&g).unwrap() <= exact);
        prop_assert!(diameter_estimate(&g).unwrap() <= exact);
    }

    #[test]
    fn homophily_is_a_fraction(n in 2usize..60, extra in 0usize..40, seed in any::<u64>(), q in 1usize..5) {
        let g = random_connected(n, extra, 1.0, 1.0, seed);
        let labels: Vec<usize> = (0..n).map(|v| (v * 31 + seed as usize) % q).collect();
        let h = node_homophily(&g, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&h));
        if q == 1 {
            prop_assert_eq!(h, 1.0);
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

#[test]
fn small_world_shrinks_diameter() {
    let ring = gen_small_world(400, 4, 0.0, 1).unwrap();
    let sw = gen_small_world(400, 4, 0.1, 1).unwrap();
    assert_eq!(exact_diameter(&ring).unwrap(), 100);
    assert!(exact_diameter(&sw).unwrap() < 20);
    let r = report(&sw, None, Exec::Sequential).unwrap();
    assert_eq!(r.n_edges, 800);
    assert!(r.avg_clustering > 0.2);
}
