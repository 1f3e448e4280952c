//! Fixtures shared by the criterion benches.

use plastiflow::routing::FlowId;
use plastiflow::seed::{derive_seed, rng_from_seed, stream};
use plastiflow::topology::build_uniform_topology;
use plastiflow::{CongestionModel, Engine, FlowSpec, NetworkGraph, NodeId, NodeRole, UpdateRule};
use rand::seq::SliceRandom;

/// One flow per source to a random target, each carrying `100 * C` units.
pub fn framework_flows(graph: &NetworkGraph, seed: u64) -> Vec<FlowSpec> {
    let targets: Vec<NodeId> = graph.nodes_with_role(NodeRole::Target).collect();
    let mut rng = rng_from_seed(derive_seed(seed, stream::FLOWS, 0));
    graph
        .nodes_with_role(NodeRole::Source)
        .enumerate()
        .map(|(i, source)| FlowSpec {
            id: FlowId(i as u32),
            source,
            target: *targets.choose(&mut rng).expect("graph has targets"),
            load: 100 * graph.capacity() as u64,
        })
        .collect()
}

pub fn framework_engine(n: usize, capacity: u32, rule: UpdateRule, model: CongestionModel, seed: u64) -> Engine {
    let graph = build_uniform_topology(n, 6, n, n, seed)
        .and_then(|g| g.with_capacity(capacity))
        .expect("framework topology");
    let flows = framework_flows(&graph, seed);
    Engine::new(&graph, &flows, rule, model, seed).expect("routable framework flows")
}
