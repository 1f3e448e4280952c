use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{attach_endpoints, NetworkGraph, TopologyError};
use crate::seed::{derive_seed, rng_from_seed, stream};

const MAX_REGULAR_ATTEMPTS: u64 = 10_000;

fn check_counts(routers: usize, sources: usize, targets: usize) -> Result<(), TopologyError> {
    if routers == 0 || sources == 0 || targets == 0 {
        return Err(TopologyError::Construction("router, source and target counts must be at least 1".into()));
    }
    Ok(())
}

/// Random `degree`-regular router core, retried until simple and connected.
pub fn uniform_router_core(num_routers: usize, degree: usize, seed: u64) -> Result<NetworkGraph, TopologyError> {
    if num_routers == 0 {
        return Err(TopologyError::Construction("need at least one router".into()));
    }
    if degree == 0 {
        return Err(TopologyError::Construction("router degree 0 leaves routers disconnected".into()));
    }
    if degree >= num_routers {
        return Err(TopologyError::Construction(format!(
            "degree {degree} is infeasible with {num_routers} routers"
        )));
    }
    if !(degree * num_routers).is_multiple_of(2) {
        return Err(TopologyError::Construction(format!(
            "degree {degree} times {num_routers} routers is odd"
        )));
    }
    let labels: Vec<u64> = (0..num_routers as u64).collect();
    for attempt in 0..MAX_REGULAR_ATTEMPTS {
        let mut rng = rng_from_seed(derive_seed(seed, stream::ATTEMPT, attempt));
        let Some(links) = regular_pairing(num_routers, degree, &mut rng) else {
            continue;
        };
        let core = NetworkGraph::router_core(labels.clone(), &links)?;
        if core.routers_connected() {
            return Ok(core);
        }
    }
    Err(TopologyError::Construction(format!(
        "no connected {degree}-regular graph on {num_routers} routers after {MAX_REGULAR_ATTEMPTS} attempts"
    )))
}

/// Stub matching that rejects self-loops and repeated pairs as it goes.
/// Returns `None` when the leftover stubs cannot be paired.
fn regular_pairing(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Option<Vec<(u32, u32)>> {
    let mut links = Vec::with_capacity(n * d / 2);
    let mut present: HashSet<(u32, u32)> = HashSet::with_capacity(n * d / 2);
    let mut stubs: Vec<u32> = (0..n as u32).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    while !stubs.is_empty() {
        stubs.shuffle(rng);
        let mut leftover = Vec::new();
        let mut progressed = false;
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a != b && present.insert((a, b)) {
                links.push((a, b));
                progressed = true;
            } else {
                leftover.extend_from_slice(pair);
            }
        }
        if !progressed && !can_pair(&leftover, &present) {
            return None;
        }
        stubs = leftover;
    }
    Some(links)
}

fn can_pair(stubs: &[u32], present: &HashSet<(u32, u32)>) -> bool {
    let distinct: BTreeSet<u32> = stubs.iter().copied().collect();
    distinct.iter().any(|&a| distinct.range(a + 1..).any(|&b| !present.contains(&(a, b))))
}

/// Barabási–Albert router core.
///
/// Starts from `attach_m` isolated routers; the first newcomer links to all of
/// them and every later newcomer links to `attach_m` distinct existing routers
/// chosen with probability proportional to degree. The core therefore has
/// exactly `attach_m * (num_routers - attach_m)` undirected links.
pub fn scale_free_router_core(num_routers: usize, attach_m: usize, seed: u64) -> Result<NetworkGraph, TopologyError> {
    if attach_m == 0 || attach_m >= num_routers {
        return Err(TopologyError::Construction(format!(
            "attach_m must satisfy 1 <= m < {num_routers}, got {attach_m}"
        )));
    }
    let mut rng = rng_from_seed(derive_seed(seed, stream::ROUTER_CORE, 0));
    let mut links = Vec::with_capacity(attach_m * (num_routers - attach_m));
    // Each router appears once per unit of degree.
    let mut repeated: Vec<u32> = Vec::with_capacity(2 * attach_m * num_routers);
    let mut chosen: Vec<u32> = (0..attach_m as u32).collect();
    for newcomer in attach_m as u32..num_routers as u32 {
        for &old in &chosen {
            links.push((old, newcomer));
        }
        repeated.extend_from_slice(&chosen);
        repeated.extend(std::iter::repeat_n(newcomer, attach_m));
        chosen = distinct_sample(&repeated, attach_m, &mut rng);
    }
    NetworkGraph::router_core((0..num_routers as u64).collect(), &links)
}

fn distinct_sample(pool: &[u32], m: usize, rng: &mut impl Rng) -> Vec<u32> {
    let mut picked = Vec::with_capacity(m);
    while picked.len() < m {
        let x = pool[rng.gen_range(0..pool.len())];
        if !picked.contains(&x) {
            picked.push(x);
        }
    }
    picked
}

pub fn build_uniform_topology(
    num_routers: usize,
    router_degree: usize,
    num_sources: usize,
    num_targets: usize,
    seed: u64,
) -> Result<NetworkGraph, TopologyError> {
    check_counts(num_routers, num_sources, num_targets)?;
    let core = uniform_router_core(num_routers, router_degree, seed)?;
    attach_endpoints(core, num_sources, num_targets, seed)
}

pub fn build_scale_free_topology(
    num_routers: usize,
    attach_m: usize,
    num_sources: usize,
    num_targets: usize,
    seed: u64,
) -> Result<NetworkGraph, TopologyError> {
    check_counts(num_routers, num_sources, num_targets)?;
    let core = scale_free_router_core(num_routers, attach_m, seed)?;
    attach_endpoints(core, num_sources, num_targets, seed)
}
