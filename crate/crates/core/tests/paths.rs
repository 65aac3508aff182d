//! Shortest-path enumeration against exhaustive search on small graphs.

use proptest::prelude::*;

use sfcplace::network::{NodeId, PhysicalNetwork, PhysicalNode};

fn network(n: usize, edges: &[(usize, usize, u8)]) -> Option<PhysicalNetwork> {
    let nodes = (0..n)
        .map(|i| PhysicalNode {
            id: NodeId(i),
            name: format!("n{i}"),
            cores: if i % 3 == 2 { 0.0 } else { 4.0 },
            csw_latency: 0.0,
            csw_processing: 0.0,
            up_latency: 0.0,
            up_processing: 0.0,
        })
        .collect();
    let mut links = Vec::new();
    for &(a, b, w) in edges {
        if a != b && !links.iter().any(|l: &(usize, usize, f64, f64)| l.0 == a && l.1 == b) {
            links.push((a, b, f64::from(w), f64::INFINITY));
        }
    }
    PhysicalNetwork::new(nodes, links).ok()
}

/// Every loopless path `a -> b`, sorted by (latency, node sequence).
fn all_paths(net: &PhysicalNetwork, a: usize, b: usize) -> Vec<(f64, Vec<usize>)> {
    fn walk(net: &PhysicalNetwork, b: usize, stack: &mut Vec<usize>, lat: f64, out: &mut Vec<(f64, Vec<usize>)>) {
        let v = *stack.last().unwrap();
        if v == b {
            out.push((lat, stack.clone()));
            return;
        }
        for l in net.out_links(NodeId(v)) {
            let link = net.link(*l);
            if !stack.contains(&link.to.0) {
                stack.push(link.to.0);
                walk(net, b, stack, lat + link.latency, out);
                stack.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(net, b, &mut vec![a], 0.0, &mut out);
    out.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.cmp(&y.1)));
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn k_shortest_matches_exhaustive_enumeration(
        n in 2usize..7,
        edges in prop::collection::vec((0usize..7, 0usize..7, 1u8..10), 1..25),
        a in 0usize..7,
        b in 0usize..7,
        k in 1usize..12,
    ) {
        let edges: Vec<_> = edges.into_iter().map(|(x, y, w)| (x % n, y % n, w)).collect();
        let Some(net) = network(n, &edges) else { return Ok(()) };
        let (a, b) = (a % n, b % n);
        prop_assume!(a != b);
        let expected = all_paths(&net, a, b);
        let got: Vec<(f64, Vec<usize>)> = net
            .k_shortest_paths(NodeId(a), NodeId(b), k)
            .unwrap()
            .iter()
            .map(|p| (p.latency(), p.nodes().iter().map(|v| v.0).collect()))
            .collect();
        let want: Vec<_> = expected.into_iter().take(k).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn shortest_path_is_first_of_enumeration(
        n in 2usize..7,
        edges in prop::collection::vec((0usize..7, 0usize..7, 1u8..10), 1..25),
        a in 0usize..7,
        b in 0usize..7,
    ) {
        let edges: Vec<_> = edges.into_iter().map(|(x, y, w)| (x % n, y % n, w)).collect();
        let Some(net) = network(n, &edges) else { return Ok(()) };
        let (a, b) = (a % n, b % n);
        prop_assume!(a != b);
        let expected = all_paths(&net, a, b);
        match net.shortest_path(NodeId(a), NodeId(b)) {
            Ok(p) => prop_assert_eq!(p.latency(), expected[0].0),
            Err(_) => prop_assert!(expected.is_empty()),
        }
    }

    #[test]
    fn first_nfv_path_is_first_qualifying_path(
        n in 2usize..7,
        edges in prop::collection::vec((0usize..7, 0usize..7, 1u8..10), 1..25),
        a in 0usize..7,
        b in 0usize..7,
    ) {
        let edges: Vec<_> = edges.into_iter().map(|(x, y, w)| (x % n, y % n, w)).collect();
        let Some(net) = network(n, &edges) else { return Ok(()) };
        let (a, b) = (a % n, b % n);
        prop_assume!(a != b);
        let expected = all_paths(&net, a, b)
            .into_iter()
            .take(64)
            .find(|(_, nodes)| nodes.iter().any(|v| net.node(NodeId(*v)).is_nfv()));
        let got = net.first_nfv_path(NodeId(a), NodeId(b), 64).ok().map(|p| p.nodes().iter().map(|v| v.0).collect::<Vec<_>>());
        prop_assert_eq!(got, expected.map(|e| e.1));
    }
}
