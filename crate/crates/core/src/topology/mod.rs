//! Three-layer source → router → target networks.
//!
//! Router cores come from a random regular generator, a Barabási–Albert
//! generator or a CAIDA AS-relationship file. Sources and targets are then
//! hung off uniformly chosen routers by [`attach_endpoints`].

mod caida;
mod generators;

use std::collections::HashSet;
use std::collections::VecDeque;
use std::fmt;

use rand::Rng;

use crate::seed::{derive_seed, rng_from_seed, stream};

pub use caida::{load_caida, parse_caida};
pub use generators::{build_scale_free_topology, build_uniform_topology, scale_free_router_core, uniform_router_core};

/// Default per-edge capacity when a graph is built without an explicit one.
pub const DEFAULT_CAPACITY: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub u32);

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRole {
    Source,
    Router,
    Target,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TopologyError {
    #[error("cannot build topology: {0}")]
    Construction(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("i/o error reading {path}: {message}")]
    Io { path: String, message: String },
    #[error("graph invariant violated: {0}")]
    Invariant(String),
}

/// Directed graph with role-partitioned nodes and a uniform edge capacity.
///
/// Nodes carry a numeric label: the AS number for CAIDA routers, the node
/// index otherwise. Edge weights are not stored here; they belong to the
/// engine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkGraph {
    roles: Vec<NodeRole>,
    labels: Vec<u64>,
    edges: Vec<(NodeId, NodeId)>,
    capacity: u32,
}

impl NetworkGraph {
    /// A router-only graph. `links` are undirected and become two directed
    /// edges each. Self-loops and repeated pairs are rejected.
    pub fn router_core(labels: Vec<u64>, links: &[(u32, u32)]) -> Result<Self, TopologyError> {
        let n = labels.len();
        if n == 0 {
            return Err(TopologyError::Construction("router core has no routers".into()));
        }
        let mut seen = HashSet::with_capacity(links.len());
        let mut edges = Vec::with_capacity(links.len() * 2);
        for &(a, b) in links {
            if a as usize >= n || b as usize >= n {
                return Err(TopologyError::Construction(format!("link ({a}, {b}) references a missing router")));
            }
            if a == b {
                return Err(TopologyError::Construction(format!("self-loop on router {a}")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(TopologyError::Construction(format!("duplicate link ({a}, {b})")));
            }
            edges.push((NodeId(a), NodeId(b)));
            edges.push((NodeId(b), NodeId(a)));
        }
        Ok(Self { roles: vec![NodeRole::Router; n], labels, edges, capacity: DEFAULT_CAPACITY })
    }

    /// Hand-built graph: `num_routers` routers joined by undirected `links`,
    /// one source per entry of `source_feeds` (the router it feeds) and one
    /// target per entry of `target_feeds` (the router it exits from).
    pub fn assemble(
        num_routers: usize,
        links: &[(u32, u32)],
        source_feeds: &[u32],
        target_feeds: &[u32],
    ) -> Result<Self, TopologyError> {
        let mut g = Self::router_core((0..num_routers as u64).collect(), links)?;
        for &r in source_feeds.iter().chain(target_feeds) {
            if r as usize >= num_routers {
                return Err(TopologyError::Construction(format!("endpoint attached to missing router {r}")));
            }
        }
        for &r in source_feeds {
            let id = NodeId(g.roles.len() as u32);
            g.roles.push(NodeRole::Source);
            g.labels.push(id.0 as u64);
            g.edges.push((id, NodeId(r)));
        }
        for &r in target_feeds {
            let id = NodeId(g.roles.len() as u32);
            g.roles.push(NodeRole::Target);
            g.labels.push(id.0 as u64);
            g.edges.push((NodeId(r), id));
        }
        Ok(g)
    }

    pub fn with_capacity(mut self, capacity: u32) -> Result<Self, TopologyError> {
        if capacity == 0 {
            return Err(TopologyError::Construction("capacity must be positive".into()));
        }
        self.capacity = capacity;
        Ok(self)
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn node_count(&self) -> usize {
        self.roles.len()
    }

    pub fn role(&self, node: NodeId) -> NodeRole {
        self.roles[node.index()]
    }

    pub fn label(&self, node: NodeId) -> u64 {
        self.labels[node.index()]
    }

    pub fn roles(&self) -> &[NodeRole] {
        &self.roles
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> (NodeId, NodeId) {
        self.edges[id.index()]
    }

    pub fn nodes_with_role(&self, role: NodeRole) -> impl Iterator<Item = NodeId> + '_ {
        self.roles
            .iter()
            .enumerate()
            .filter(move |(_, r)| **r == role)
            .map(|(i, _)| NodeId(i as u32))
    }

    pub fn count_role(&self, role: NodeRole) -> usize {
        self.roles.iter().filter(|r| **r == role).count()
    }

    /// Outgoing `(head, edge)` pairs per node, in edge-insertion order.
    pub fn out_adjacency(&self) -> Vec<Vec<(NodeId, EdgeId)>> {
        let mut adj = vec![Vec::new(); self.roles.len()];
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            adj[u.index()].push((v, EdgeId(i as u32)));
        }
        adj
    }

    /// Number of distinct router neighbours of every router, indexed like the
    /// router subset in node order.
    pub fn router_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.roles.len()];
        for &(u, v) in &self.edges {
            if self.role(u) == NodeRole::Router && self.role(v) == NodeRole::Router {
                deg[u.index()] += 1;
            }
        }
        self.nodes_with_role(NodeRole::Router).map(|r| deg[r.index()]).collect()
    }

    /// Whether the router-router subgraph is connected.
    pub fn routers_connected(&self) -> bool {
        let routers: Vec<NodeId> = self.nodes_with_role(NodeRole::Router).collect();
        let Some(&start) = routers.first() else {
            return false;
        };
        let adj = self.out_adjacency();
        let mut seen = vec![false; self.roles.len()];
        let mut queue = VecDeque::from([start]);
        seen[start.index()] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &adj[u.index()] {
                if self.role(v) == NodeRole::Router && !seen[v.index()] {
                    seen[v.index()] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached == routers.len()
    }

    /// Checks the role partition and edge-shape invariants.
    pub fn validate(&self) -> Result<(), TopologyError> {
        let bad = |msg: String| Err(TopologyError::Invariant(msg));
        let n = self.roles.len();
        if self.labels.len() != n {
            return bad("label count differs from node count".into());
        }
        let mut out_deg = vec![0usize; n];
        let mut in_deg = vec![0usize; n];
        let mut seen = HashSet::with_capacity(self.edges.len());
        for &(u, v) in &self.edges {
            if u.index() >= n || v.index() >= n {
                return bad(format!("edge {u}->{v} references a missing node"));
            }
            if u == v {
                return bad(format!("self-loop at {u}"));
            }
            if !seen.insert((u, v)) {
                return bad(format!("duplicate edge {u}->{v}"));
            }
            out_deg[u.index()] += 1;
            in_deg[v.index()] += 1;
            match (self.role(u), self.role(v)) {
                (NodeRole::Source, NodeRole::Router)
                | (NodeRole::Router, NodeRole::Router)
                | (NodeRole::Router, NodeRole::Target) => {}
                (a, b) => return bad(format!("edge {u}->{v} joins {a:?} to {b:?}")),
            }
        }
        for (i, role) in self.roles.iter().enumerate() {
            match role {
                NodeRole::Source if out_deg[i] != 1 || in_deg[i] != 0 => {
                    return bad(format!("source n{i} has out-degree {} and in-degree {}", out_deg[i], in_deg[i]));
                }
                NodeRole::Target if in_deg[i] != 1 || out_deg[i] != 0 => {
                    return bad(format!("target n{i} has in-degree {} and out-degree {}", in_deg[i], out_deg[i]));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Hangs `num_sources` sources and `num_targets` targets off uniformly chosen
/// routers of a router-only core. Choices are independent and may collide.
pub fn attach_endpoints(
    router_core: NetworkGraph,
    num_sources: usize,
    num_targets: usize,
    seed: u64,
) -> Result<NetworkGraph, TopologyError> {
    let routers = router_core.count_role(NodeRole::Router);
    if routers == 0 {
        return Err(TopologyError::Construction("router core has no routers".into()));
    }
    if routers != router_core.node_count() {
        return Err(TopologyError::Construction("router core already has endpoints attached".into()));
    }
    let NetworkGraph { mut roles, mut labels, mut edges, capacity } = router_core;
    let mut rng = rng_from_seed(derive_seed(seed, stream::ENDPOINTS, 0));
    edges.reserve(num_sources + num_targets);
    for _ in 0..num_sources {
        let id = NodeId(roles.len() as u32);
        roles.push(NodeRole::Source);
        labels.push(id.0 as u64);
        edges.push((id, NodeId(rng.gen_range(0..routers) as u32)));
    }
    for _ in 0..num_targets {
        let id = NodeId(roles.len() as u32);
        roles.push(NodeRole::Target);
        labels.push(id.0 as u64);
        edges.push((NodeId(rng.gen_range(0..routers) as u32), id));
    }
    Ok(NetworkGraph { roles, labels, edges, capacity })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_router() -> NetworkGraph {
        NetworkGraph::router_core(vec![0], &[]).unwrap()
    }

    #[test]
    fn forced_attachment_to_single_router() {
        let g = attach_endpoints(single_router(), 3, 2, 1).unwrap();
        g.validate().unwrap();
        assert_eq!(g.count_role(NodeRole::Source), 3);
        assert_eq!(g.count_role(NodeRole::Target), 2);
        for s in g.nodes_with_role(NodeRole::Source) {
            assert!(g.edges().contains(&(s, NodeId(0))));
        }
        for t in g.nodes_with_role(NodeRole::Target) {
            assert!(g.edges().contains(&(NodeId(0), t)));
        }
    }

    #[test]
    fn attachment_counts_and_determinism() {
        let core = uniform_router_core(100, 6, 5).unwrap();
        let a = attach_endpoints(core.clone(), 100, 100, 5).unwrap();
        let b = attach_endpoints(core.clone(), 100, 100, 5).unwrap();
        assert_eq!(a, b);
        let router_edges = core.edges().len();
        assert_eq!(a.edges().len(), router_edges + 200);
        a.validate().unwrap();
    }

    #[test]
    fn attach_rejects_graph_with_endpoints() {
        let g = attach_endpoints(single_router(), 1, 1, 1).unwrap();
        assert!(matches!(attach_endpoints(g, 1, 1, 1), Err(TopologyError::Construction(_))));
    }

    #[test]
    fn router_core_rejects_bad_links() {
        assert!(NetworkGraph::router_core(vec![0, 1], &[(0, 0)]).is_err());
        assert!(NetworkGraph::router_core(vec![0, 1], &[(0, 1), (1, 0)]).is_err());
        assert!(NetworkGraph::router_core(vec![], &[]).is_err());
    }

    #[test]
    fn validate_flags_bad_shapes() {
        let mut g = attach_endpoints(single_router(), 1, 1, 1).unwrap();
        g.edges.push((NodeId(2), NodeId(0)));
        assert!(matches!(g.validate(), Err(TopologyError::Invariant(_))));
    }
}
