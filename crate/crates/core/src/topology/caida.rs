//! CAIDA AS-relationship files: `<as1>|<as2>|<rel>[|...]` per line, `#` for
//! comments. Every AS becomes one router; the relationship type is ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{attach_endpoints, NetworkGraph, TopologyError};

/// Parses relationship text into a router-only core. Repeated pairs, in
/// either orientation, collapse to one link.
pub fn parse_caida(text: &str) -> Result<NetworkGraph, TopologyError> {
    let mut pairs: BTreeSet<(u64, u64)> = BTreeSet::new();
    let mut ordered: Vec<(u64, u64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: String| TopologyError::Parse { line: line_no, reason };
        let mut fields = line.split('|');
        let (Some(a), Some(b), Some(rel)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(err(format!("expected `as1|as2|rel`, got {line:?}")));
        };
        let a: u64 = a.trim().parse().map_err(|_| err(format!("bad AS number {a:?}")))?;
        let b: u64 = b.trim().parse().map_err(|_| err(format!("bad AS number {b:?}")))?;
        rel.trim().parse::<i64>().map_err(|_| err(format!("bad relationship field {rel:?}")))?;
        if a == b {
            return Err(err(format!("AS {a} related to itself")));
        }
        let key = (a.min(b), a.max(b));
        if pairs.insert(key) {
            ordered.push((a, b));
        }
    }
    if ordered.is_empty() {
        return Err(TopologyError::Construction("relationship file has no links".into()));
    }
    let index: BTreeMap<u64, u32> = pairs
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .collect::<BTreeSet<u64>>()
        .into_iter()
        .enumerate()
        .map(|(i, asn)| (asn, i as u32))
        .collect();
    let labels: Vec<u64> = index.keys().copied().collect();
    let links: Vec<(u32, u32)> = ordered.iter().map(|(a, b)| (index[a], index[b])).collect();
    NetworkGraph::router_core(labels, &links)
}

pub fn load_caida(path: &Path, num_sources: usize, num_targets: usize, seed: u64) -> Result<NetworkGraph, TopologyError> {
    let text = std::fs::read_to_string(path).map_err(|e| TopologyError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let core = parse_caida(&text)?;
    attach_endpoints(core, num_sources, num_targets, seed)
}
