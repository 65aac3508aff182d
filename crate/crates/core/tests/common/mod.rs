//! Seeded generators shared by the integration tests.

#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sfcplace::costs::CostParams;
use sfcplace::network::{NodeId, PhysicalNetwork, PhysicalNode};
use sfcplace::scenario::{Scenario, SfcEntry};
use sfcplace::services::{Catalog, SfcTemplate, VnfId, VnfType};

/// A connected network of 3 to 5 equally sized NFV nodes with unlimited
/// bandwidth, a three-VNF catalog with short chains and up to 8 requests.
pub fn tiny_scenario(seed: u64) -> Scenario {
    tiny(seed, false)
}

/// As [`tiny_scenario`], with node sizes drawn per node.
pub fn tiny_scenario_mixed_sizes(seed: u64) -> Scenario {
    tiny(seed, true)
}

fn tiny(seed: u64, mixed_sizes: bool) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=5);
    let sizes = [1.0, 2.0, 3.0];
    let uniform = *sizes.choose(&mut rng).unwrap();
    let nodes: Vec<PhysicalNode> = (0..n)
        .map(|i| PhysicalNode {
            id: NodeId(i),
            name: format!("n{i}"),
            cores: if mixed_sizes { *sizes.choose(&mut rng).unwrap() } else { uniform },
            csw_latency: 0.0,
            csw_processing: 0.0,
            up_latency: 0.0,
            up_processing: 0.0,
        })
        .collect();
    let mut links = Vec::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        let lat = rng.random_range(1.0..8.0);
        links.push((u, v, lat, f64::INFINITY));
        links.push((v, u, lat, f64::INFINITY));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(0.3) && !links.iter().any(|l| l.0 == u && l.1 == v) {
                let lat = rng.random_range(1.0..8.0);
                links.push((u, v, lat, f64::INFINITY));
                links.push((v, u, lat, f64::INFINITY));
            }
        }
    }
    let omega = *[0.0, 0.4, 0.8].choose(&mut rng).unwrap();
    let kappa = *[0.0, 1.75].choose(&mut rng).unwrap();
    let net = PhysicalNetwork::new(nodes, links).unwrap();
    let net = CostParams::new(omega, kappa, 0.01).apply(&net).unwrap();

    let vnfs: Vec<VnfType> = (0..3)
        .map(|i| VnfType { id: VnfId(i), name: format!("F{i}"), proc_per_user: rng.random_range(0.005..0.02) })
        .collect();
    let templates: Vec<SfcTemplate> = (0..2)
        .map(|t| {
            let len = rng.random_range(1..=3);
            SfcTemplate {
                name: format!("T{t}"),
                chain: (0..len).map(|_| VnfId(rng.random_range(0..3))).collect(),
                max_latency: rng.random_range(10.0..40.0),
                bw_per_user: vec![1.0; len + 1],
            }
        })
        .collect();
    let catalog = Catalog::new(vnfs, templates).unwrap();

    let mut entries = Vec::new();
    let mut requests = 0;
    for _ in 0..rng.random_range(1..=3) {
        let t = &catalog.templates()[rng.random_range(0..2)];
        if requests + t.chain.len() > 8 {
            break;
        }
        requests += t.chain.len();
        entries.push(SfcEntry {
            template: t.name.clone(),
            start: rng.random_range(0..n),
            end: rng.random_range(0..n),
            users: rng.random_range(20..=100),
        });
    }
    Scenario::new(net, catalog, &entries).unwrap()
}
