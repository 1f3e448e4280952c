use std::collections::HashSet;

use plastiflow::routing::shortest_path;
use plastiflow::topology::{build_scale_free_topology, build_uniform_topology, parse_caida, scale_free_router_core};
use plastiflow::{NetworkGraph, NodeId, NodeRole};
use proptest::prelude::*;

/// Shortest hop count by enumerating every simple path.
fn exhaustive_distance(g: &NetworkGraph, s: NodeId, t: NodeId) -> Option<usize> {
    fn walk(adj: &[Vec<usize>], at: usize, t: usize, seen: &mut Vec<bool>, depth: usize, best: &mut Option<usize>) {
        if at == t {
            *best = Some(best.map_or(depth, |b| b.min(depth)));
            return;
        }
        for &v in &adj[at] {
            if !seen[v] {
                seen[v] = true;
                walk(adj, v, t, seen, depth + 1, best);
                seen[v] = false;
            }
        }
    }
    let mut adj = vec![Vec::new(); g.node_count()];
    for &(u, v) in g.edges() {
        adj[u.index()].push(v.index());
    }
    let mut seen = vec![false; g.node_count()];
    seen[s.index()] = true;
    let mut best = None;
    walk(&adj, s.index(), t.index(), &mut seen, 0, &mut best);
    best
}

fn random_graph() -> impl Strategy<Value = NetworkGraph> {
    (2usize..9, prop::collection::vec((0u32..9, 0u32..9), 0..16), 0u32..9, 0u32..9).prop_filter_map(
        "needs a simple link set",
        |(n, raw, s, t)| {
            let mut seen = HashSet::new();
            let links: Vec<_> = raw
                .into_iter()
                .map(|(a, b)| (a % n as u32, b % n as u32))
                .filter(|&(a, b)| a != b && seen.insert((a.min(b), a.max(b))))
                .collect();
            NetworkGraph::assemble(n, &links, &[s % n as u32], &[t % n as u32]).ok()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bfs_matches_exhaustive_search(g in random_graph(), seed in any::<u64>()) {
        let s = g.nodes_with_role(NodeRole::Source).next().unwrap();
        let t = g.nodes_with_role(NodeRole::Target).next().unwrap();
        let expect = exhaustive_distance(&g, s, t);
        match shortest_path(&g, s, t, seed) {
            Ok(p) => {
                prop_assert_eq!(Some(p.hop_count()), expect);
                for (i, &e) in p.edges().iter().enumerate() {
                    prop_assert_eq!(g.edge(e), (p.nodes()[i], p.nodes()[i + 1]));
                }
            }
            Err(_) => prop_assert_eq!(expect, None),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn uniform_topology_invariants(half_n in 5usize..40, d in 1usize..6, sources in 1usize..10, targets in 1usize..10, seed in any::<u64>()) {
        let n = 2 * half_n;
        prop_assume!(d < n && !(d == 1 && n > 2));
        let g = build_uniform_topology(n, d, sources, targets, seed).unwrap();
        prop_assert!(g.validate().is_ok());
        prop_assert!(g.router_degrees().iter().all(|&k| k == d));
        prop_assert!(g.routers_connected());
        prop_assert_eq!(g.count_role(NodeRole::Source), sources);
        prop_assert_eq!(g.count_role(NodeRole::Target), targets);
        prop_assert_eq!(g.edges().len(), n * d + sources + targets);
    }

    #[test]
    fn scale_free_topology_invariants(n in 10usize..120, m in 1usize..5, seed in any::<u64>()) {
        prop_assume!(m < n);
        let g = build_scale_free_topology(n, m, 3, 3, seed).unwrap();
        prop_assert!(g.validate().is_ok());
        prop_assert!(g.routers_connected());
        prop_assert_eq!(g.edges().len(), 2 * m * (n - m) + 6);
        // The m seed routers start isolated; every later router brings m links.
        for (i, &k) in g.router_degrees().iter().enumerate() {
            let floor = if i < m { 1 } else { m };
            prop_assert!(k >= floor);
        }
    }

    #[test]
    fn caida_counts(pairs in prop::collection::vec((1u64..30, 1u64..30, -1i64..=1), 1..60)) {
        let text: String = pairs.iter().map(|(a, b, r)| format!("{a}|{b}|{r}\n")).collect();
        let distinct: HashSet<(u64, u64)> =
            pairs.iter().map(|&(a, b, _)| (a.min(b), a.max(b))).collect();
        let ases: HashSet<u64> = pairs.iter().flat_map(|&(a, b, _)| [a, b]).collect();
        match parse_caida(&text) {
            Ok(g) => {
                prop_assert!(pairs.iter().all(|&(a, b, _)| a != b));
                prop_assert_eq!(g.count_role(NodeRole::Router), ases.len());
                prop_assert_eq!(g.edges().len(), 2 * distinct.len());
            }
            Err(_) => prop_assert!(pairs.iter().any(|&(a, b, _)| a == b)),
        }
    }
}

/// Log-log fit of the degree CCDF; a power-law tail gives a near-straight line.
#[test]
fn scale_free_degree_tail_is_linear_on_log_log() {
    let g = scale_free_router_core(2000, 3, 3).unwrap();
    let degrees = g.router_degrees();
    let max = *degrees.iter().max().unwrap();
    let mut pts = Vec::new();
    for k in 3..=max {
        let tail = degrees.iter().filter(|&&d| d >= k).count();
        if tail >= 10 {
            pts.push(((k as f64).ln(), (tail as f64 / degrees.len() as f64).ln()));
        }
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = sxy * sxy / (sxx * syy);
    assert!(r2 > 0.95, "r^2 {r2}");
    // Preferential attachment gives a CCDF exponent near 2.
    assert!((-3.0..-1.3).contains(&slope), "slope {slope}");
}
