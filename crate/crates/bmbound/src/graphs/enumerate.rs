//! Exhaustive enumeration of partition multigraphs: all isomorphism classes
//! with a given total edge multiplicity, no self-loops and minimum degree two.
//!
//! Graphs are grown one multiplicity unit at a time with canonical
//! deduplication at every level. A unit either raises an existing edge,
//! connects two existing nodes, attaches a fresh node, or opens a fresh
//! component; every target graph is reachable this way. Intermediate graphs
//! are pruned when the remaining units cannot lift all degrees to two.

use super::canonical::{canonicalize, MultiGraph};
use std::collections::BTreeMap;

fn successors(g: &MultiGraph, order: usize) -> Vec<MultiGraph> {
    let mut out = Vec::new();
    let n = g.n;
    // Raise an existing edge.
    for a in 0..n {
        for b in (a + 1)..n {
            if g.adj[a][b] > 0 {
                let mut c = g.clone();
                c.add_unit(a, b);
                out.push(c);
            }
        }
    }
    // Connect two existing non-adjacent nodes.
    for a in 0..n {
        for b in (a + 1)..n {
            if g.adj[a][b] == 0 {
                let mut c = g.clone();
                c.add_unit(a, b);
                out.push(c);
            }
        }
    }
    // Attach a fresh node.
    if n < order {
        for a in 0..n {
            let mut c = g.clone();
            c.n = n + 1;
            c.add_unit(a, n);
            out.push(c);
        }
    }
    // Open a fresh two-node component.
    if n + 2 <= order {
        let mut c = g.clone();
        c.n = n + 2;
        c.add_unit(n, n + 1);
        out.push(c);
    }
    out
}

/// All isomorphism classes of degree->=2 multigraphs with total multiplicity
/// `order`, canonically labelled and sorted by canonical key.
pub(crate) fn enumerate_multigraphs(order: usize) -> Vec<(MultiGraph, Vec<u8>, u64)> {
    assert!(order >= 2);
    let mut level: BTreeMap<Vec<u8>, MultiGraph> = BTreeMap::new();
    let seed = MultiGraph::from_edges(2, &[(0, 1, 1)]);
    let (canon, key, _) = canonicalize(&seed);
    level.insert(key, canon);

    for units in 2..=order {
        let remaining = order - units;
        let mut next: BTreeMap<Vec<u8>, MultiGraph> = BTreeMap::new();
        for g in level.values() {
            for candidate in successors(g, order) {
                if candidate.deficiency() <= 2 * remaining {
                    let (canon, key, _) = canonicalize(&candidate);
                    next.entry(key).or_insert(canon);
                }
            }
        }
        level = next;
    }

    level
        .into_iter()
        .map(|(key, g)| {
            assert_eq!(g.units(), order);
            let (canon, key2, aut) = canonicalize(&g);
            debug_assert_eq!(key, key2);
            (canon, key, aut)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_two_is_the_double_edge() {
        let graphs = enumerate_multigraphs(2);
        assert_eq!(graphs.len(), 1);
        let (g, _, aut) = &graphs[0];
        assert_eq!(g.n, 2);
        assert_eq!(g.adj[0][1], 2);
        assert_eq!(*aut, 2);
    }

    #[test]
    fn order_three_has_two_classes() {
        let graphs = enumerate_multigraphs(3);
        assert_eq!(graphs.len(), 2);
    }

    #[test]
    fn order_four_has_five_classes() {
        let graphs = enumerate_multigraphs(4);
        assert_eq!(graphs.len(), 5);
        for (g, _, _) in &graphs {
            assert_eq!(g.units(), 4);
            for v in 0..g.n {
                assert!(g.degree(v) >= 2);
            }
        }
    }

    #[test]
    fn order_five_has_eleven_classes() {
        assert_eq!(enumerate_multigraphs(5).len(), 11);
    }
}
