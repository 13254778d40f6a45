//! Connectivity queries over the feeder graph.

use super::{Feeder, FeederError};
use std::collections::{BTreeSet, VecDeque};

/// Union-find over bus indices.
struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// The graph restricted to non-switch lines must be acyclic.
pub(super) fn check_radial_core(feeder: &Feeder) -> Result<(), FeederError> {
    let mut ds = DisjointSet::new(feeder.buses.len());
    for line in &feeder.lines {
        if line.is_switch {
            continue;
        }
        let a = feeder.bus_idx(&line.from)?;
        let b = feeder.bus_idx(&line.to)?;
        if !ds.union(a, b) {
            return Err(FeederError::NonRadialCore { line: line.id.clone() });
        }
    }
    Ok(())
}

/// Connected components over non-switch lines, each a sorted list of bus
/// indices. Components are ordered by their smallest bus index.
pub fn non_switch_blocks(feeder: &Feeder) -> Vec<Vec<usize>> {
    let mut ds = DisjointSet::new(feeder.buses.len());
    for line in &feeder.lines {
        if !line.is_switch {
            let a = feeder.bus_idx(&line.from).expect("validated");
            let b = feeder.bus_idx(&line.to).expect("validated");
            ds.union(a, b);
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..feeder.buses.len() {
        let root = ds.find(i);
        groups.entry(root).or_default().push(i);
    }
    let mut blocks: Vec<Vec<usize>> = groups.into_values().collect();
    for b in &mut blocks {
        b.sort_unstable();
    }
    blocks.sort_by_key(|b| b[0]);
    blocks
}

/// Bus ids reachable from the energized sources through non-switch lines
/// plus the named closed switches.
pub fn energized_subgraph(
    feeder: &Feeder,
    closed_switches: &BTreeSet<String>,
    energized_sources: &BTreeSet<String>,
) -> Result<BTreeSet<String>, FeederError> {
    for id in closed_switches {
        match feeder.lines.iter().find(|l| &l.id == id) {
            Some(line) if line.is_switch => {}
            _ => return Err(FeederError::UnknownSwitch(id.clone())),
        }
    }
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); feeder.buses.len()];
    for line in &feeder.lines {
        if !line.is_switch || closed_switches.contains(&line.id) {
            let a = feeder.bus_idx(&line.from)?;
            let b = feeder.bus_idx(&line.to)?;
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
    }
    let mut seen = vec![false; feeder.buses.len()];
    let mut queue = VecDeque::new();
    for source in energized_sources {
        let idx = feeder.bus_idx(source)?;
        if !seen[idx] {
            seen[idx] = true;
            queue.push_back(idx);
        }
    }
    while let Some(i) = queue.pop_front() {
        for &j in &adjacency[i] {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    Ok(feeder
        .buses
        .iter()
        .enumerate()
        .filter(|(i, _)| seen[*i])
        .map(|(_, b)| b.id.clone())
        .collect())
}
