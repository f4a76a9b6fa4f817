mod support;

use std::collections::BTreeMap;

use netmine_core::generate::random_graph;
use netmine_core::stats::{
    all_pairs_distances, bfs_distances, chi_squared_overlay, chi_squared_upper_tail,
    geodesic_table_by_attribute, geodesic_table_by_groups, PathScope,
};
use netmine_core::{cluster, Partition};
use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;
use support::*;

#[test]
fn chi_squared_reference_points() {
    assert!((chi_squared_upper_tail(10.0, 1) - 0.0015654).abs() < 1e-4);
    assert!((chi_squared_upper_tail(3.841459, 1) - 0.05).abs() < 1e-6);
    assert_eq!(chi_squared_upper_tail(0.0, 1), 1.0);
    assert_eq!(chi_squared_upper_tail(0.0, 4), 1.0);
}

#[test]
fn chi_squared_matches_closed_forms() {
    for i in 1..200 {
        let x = i as f64 * 0.25;
        let one = erfc((x / 2.0).sqrt());
        let two = (-x / 2.0).exp();
        assert!((chi_squared_upper_tail(x, 1) - one).abs() < 1e-10, "x={x}");
        assert!(
            (chi_squared_upper_tail(x, 2) - two).abs() < 1e-10 * two.max(1e-300),
            "x={x}"
        );
    }
}

#[test]
fn chi_squared_matches_statrs() {
    for df in 1..=12u32 {
        let d = ChiSquared::new(df as f64).unwrap();
        for i in 1..120 {
            let x = i as f64 * 0.4;
            let expected = d.sf(x);
            let got = chi_squared_upper_tail(x, df);
            assert!(
                (got - expected).abs() < 1e-9,
                "df={df} x={x}: {got} vs {expected}"
            );
        }
    }
}

fn random_labeled(seed: u64, n: usize) -> (netmine_core::Network, Partition) {
    let mut rng = netmine_core::seed::rng(seed);
    let cats = ["x", "y", "z", "w"];
    let used = 2 + (seed % 3) as usize;
    let labels: Vec<&str> = (0..n).map(|_| cats[rng.random_range(0..used)]).collect();
    let mut edges = Vec::new();
    for u in 1..n {
        edges.push((u, rng.random_range(0..u)));
    }
    let g = labeled_graph(&labels, &edges);
    let k = 2 + (seed % 5) as usize;
    let clusters = densify(&(0..n).map(|_| rng.random_range(0..k)).collect::<Vec<_>>());
    let p = Partition::new(&g, (0..n).collect(), clusters).unwrap();
    (g, p)
}

#[test]
fn overlay_matches_pearson_oracle_and_residuals_balance() {
    for seed in 0..100u64 {
        let n = 20 + (seed % 80) as usize;
        let (g, p) = random_labeled(seed, n);
        let overlay = match chi_squared_overlay(&g, &p, "label") {
            Ok(o) => o,
            Err(_) => continue,
        };
        let total = overlay.global.total as f64;
        let present: Vec<usize> = (0..overlay.global.categories.len())
            .filter(|&i| overlay.global.counts[i] > 0)
            .collect();
        let proportions: Vec<f64> = present
            .iter()
            .map(|&i| overlay.global.counts[i] as f64 / total)
            .collect();
        for t in &overlay.clusters {
            let mut observed = vec![0u64; present.len()];
            for m in p.members(t.cluster) {
                let v = g
                    .attribute(m, "label")
                    .and_then(|a| a.as_category())
                    .unwrap();
                let i = present
                    .iter()
                    .position(|&c| overlay.global.categories[c] == v)
                    .unwrap();
                observed[i] += 1;
            }
            let (stat, residuals) = pearson(&observed, &proportions);
            assert!((t.statistic - stat).abs() < 1e-9);
            let df = (present.len() - 1) as f64;
            let sf = ChiSquared::new(df).unwrap().sf(stat);
            assert!((t.p_value - sf).abs() < 1e-9);
            let mut balance = 0.0;
            for (j, &c) in present.iter().enumerate() {
                let r = t.residuals[&overlay.global.categories[c]];
                assert!((r - residuals[j]).abs() < 1e-12);
                balance += r * (t.n as f64 * proportions[j]).sqrt();
            }
            assert!(balance.abs() < 1e-9, "seed {seed}: {balance}");
        }
    }
}

#[test]
fn bfs_matches_floyd_warshall() {
    for seed in 0..50u64 {
        let n = 2 + (seed as usize * 7) % 63;
        let g = random_graph(n, (2.5 / n as f64).min(0.9), seed);
        let oracle = floyd_warshall(&g);
        assert_eq!(all_pairs_distances(&g), oracle, "seed {seed}");
        for (s, row) in oracle.iter().enumerate() {
            assert_eq!(&bfs_distances(&g, s, None), row);
        }
    }
}

fn oracle_mean(g: &netmine_core::Network) -> Option<f64> {
    let d = floyd_warshall(g);
    let (mut sum, mut pairs) = (0u64, 0u64);
    for (i, row) in d.iter().enumerate() {
        for &x in row.iter().skip(i + 1).flatten() {
            sum += x as u64;
            pairs += 1;
        }
    }
    (pairs > 0).then(|| sum as f64 / pairs as f64)
}

#[test]
fn single_group_table_equals_global_mean() {
    for seed in 0..30u64 {
        let g = random_graph(40, 0.06, seed);
        if g.edge_count() == 0 {
            continue;
        }
        let p = cluster(&g, seed).unwrap();
        let groups: BTreeMap<_, _> = (0..p.k()).map(|c| (c, "all".to_string())).collect();
        for paths in [PathScope::UnionOfGroups, PathScope::WholeScope] {
            let t = geodesic_table_by_groups(&g, &p, &groups, paths).unwrap();
            assert_eq!(t.labels, vec!["all"]);
            assert_eq!(t.means[0][0], oracle_mean(&g));
            assert_eq!(t.means[0][0], t.global_mean);
        }
    }
}

#[test]
fn path_table_by_attribute() {
    let g = labeled_graph(&["x", "y", "x"], &[(0, 1), (1, 2)]);
    let t = geodesic_table_by_attribute(&g, &[0, 1, 2], "label").unwrap();
    assert_eq!(t.labels, vec!["x", "y"]);
    assert_eq!(t.means[0][0], Some(2.0));
    assert_eq!(t.means[0][1], Some(1.0));
    assert_eq!(t.means[1][0], Some(1.0));
    assert_eq!(t.means[1][1], None);
    assert_eq!(t.global_mean, Some(4.0 / 3.0));
}

#[test]
fn union_paths_cannot_shortcut_through_other_groups() {
    // 0 - 1 - 2 with 1 in its own group: groups of 0 and 2 are disconnected
    // within their union but at distance 2 through the whole scope.
    let g = graph(3, &[(0, 1), (1, 2)]);
    let p = Partition::from_clusters(&g, &[vec![0], vec![1], vec![2]]).unwrap();
    let groups = BTreeMap::from([
        (0, "a".to_string()),
        (1, "b".to_string()),
        (2, "c".to_string()),
    ]);
    let union = geodesic_table_by_groups(&g, &p, &groups, PathScope::UnionOfGroups).unwrap();
    let whole = geodesic_table_by_groups(&g, &p, &groups, PathScope::WholeScope).unwrap();
    assert_eq!(union.means[0][2], None);
    assert_eq!(whole.means[0][2], Some(2.0));
    assert_eq!(union.means[0][1], Some(1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn upper_tail_is_monotone(df in 1u32..30, a in 0.0f64..80.0, b in 0.0f64..80.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (p_lo, p_hi) = (chi_squared_upper_tail(lo, df), chi_squared_upper_tail(hi, df));
        prop_assert!(p_hi <= p_lo + 1e-15);
        prop_assert!((0.0..=1.0).contains(&p_lo) && (0.0..=1.0).contains(&p_hi));
    }

    #[test]
    fn distances_are_symmetric(seed in any::<u64>(), n in 2usize..40) {
        let g = random_graph(n, 0.1, seed);
        let d = all_pairs_distances(&g);
        for (i, row) in d.iter().enumerate() {
            prop_assert_eq!(row[i], Some(0));
            for (j, &x) in row.iter().enumerate() {
                prop_assert_eq!(x, d[j][i]);
            }
        }
    }
}
