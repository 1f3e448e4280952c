//! Fixed hop-count shortest paths.
//!
//! Routes are computed once, before a run starts, by breadth-first search.
//! Ties between equal-length paths are broken by expanding each node's
//! neighbours in an order shuffled once per seed, so the same seed always
//! produces the same routes.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;

use crate::seed::{derive_seed, rng_from_seed, stream};
use crate::topology::{EdgeId, NetworkGraph, NodeId, NodeRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlowId(pub u32);

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "flow {}", self.0)
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RoutingError {
    #[error("{node} is not a {expected:?}")]
    WrongRole { node: NodeId, expected: NodeRole },
    #[error("{target} is unreachable from {origin}")]
    Unreachable { origin: NodeId, target: NodeId },
    #[error("{flow}: {cause}")]
    Flow { flow: FlowId, cause: Box<RoutingError> },
}

/// Node sequence from a source to a target, plus the edges between them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    nodes: Vec<NodeId>,
    edges: Vec<EdgeId>,
}

impl Path {
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn hop_count(&self) -> usize {
        self.edges.len()
    }
}

/// Adjacency with a seed-fixed neighbour order, reusable across many queries.
pub struct PathFinder<'g> {
    graph: &'g NetworkGraph,
    adj: Vec<Vec<(NodeId, EdgeId)>>,
    parent: Vec<Option<(NodeId, EdgeId)>>,
    visited: Vec<u32>,
    epoch: u32,
}

impl<'g> PathFinder<'g> {
    pub fn new(graph: &'g NetworkGraph, seed: u64) -> Self {
        let mut rng = rng_from_seed(derive_seed(seed, stream::ROUTING, 0));
        let mut adj = graph.out_adjacency();
        for list in &mut adj {
            list.shuffle(&mut rng);
        }
        let n = graph.node_count();
        Self { graph, adj, parent: vec![None; n], visited: vec![0; n], epoch: 0 }
    }

    pub fn path(&mut self, source: NodeId, target: NodeId) -> Result<Path, RoutingError> {
        if self.graph.role(source) != NodeRole::Source {
            return Err(RoutingError::WrongRole { node: source, expected: NodeRole::Source });
        }
        if self.graph.role(target) != NodeRole::Target {
            return Err(RoutingError::WrongRole { node: target, expected: NodeRole::Target });
        }
        self.epoch += 1;
        let epoch = self.epoch;
        self.visited[source.index()] = epoch;
        self.parent[source.index()] = None;
        let mut queue = VecDeque::from([source]);
        'search: while let Some(u) = queue.pop_front() {
            for &(v, e) in &self.adj[u.index()] {
                if self.visited[v.index()] == epoch {
                    continue;
                }
                self.visited[v.index()] = epoch;
                self.parent[v.index()] = Some((u, e));
                if v == target {
                    break 'search;
                }
                queue.push_back(v);
            }
        }
        if self.visited[target.index()] != epoch {
            return Err(RoutingError::Unreachable { origin: source, target });
        }
        let mut nodes = vec![target];
        let mut edges = Vec::new();
        let mut at = target;
        while let Some((prev, e)) = self.parent[at.index()] {
            nodes.push(prev);
            edges.push(e);
            at = prev;
        }
        nodes.reverse();
        edges.reverse();
        Ok(Path { nodes, edges })
    }
}

/// Minimum-hop path from a source to a target.
pub fn shortest_path(graph: &NetworkGraph, source: NodeId, target: NodeId, seed: u64) -> Result<Path, RoutingError> {
    PathFinder::new(graph, seed).path(source, target)
}

/// Next hop per (node, flow), backed by the flows' paths.
#[derive(Debug, Clone)]
pub struct RoutingTable {
    paths: Vec<Path>,
    next_hop: HashMap<(NodeId, FlowId), NodeId>,
}

impl RoutingTable {
    pub fn next_hop(&self, node: NodeId, flow: FlowId) -> Option<NodeId> {
        self.next_hop.get(&(node, flow)).copied()
    }

    pub fn path(&self, flow: FlowId) -> &Path {
        &self.paths[flow.0 as usize]
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.next_hop.len()
    }

    pub fn is_empty(&self) -> bool {
        self.next_hop.is_empty()
    }

    pub fn mean_hop_count(&self) -> f64 {
        if self.paths.is_empty() {
            return 0.0;
        }
        self.paths.iter().map(|p| p.hop_count() as f64).sum::<f64>() / self.paths.len() as f64
    }
}

/// Routes every `(source, target)` pair; flow ids are the pair indices.
pub fn build_routing_table(
    graph: &NetworkGraph,
    flows: &[(NodeId, NodeId)],
    seed: u64,
) -> Result<RoutingTable, RoutingError> {
    let mut finder = PathFinder::new(graph, seed);
    let mut paths = Vec::with_capacity(flows.len());
    let mut next_hop = HashMap::new();
    for (i, &(s, t)) in flows.iter().enumerate() {
        let flow = FlowId(i as u32);
        let path = finder
            .path(s, t)
            .map_err(|cause| RoutingError::Flow { flow, cause: Box::new(cause) })?;
        for w in path.nodes().windows(2) {
            next_hop.insert((w[0], flow), w[1]);
        }
        paths.push(path);
    }
    Ok(RoutingTable { paths, next_hop })
}
