//! Canonical labelling of small multigraphs by colour refinement plus an
//! exhaustive search over the residual permutation candidates. Node counts in
//! the partition catalogs never exceed ten, so the exhaustive stage is cheap.

pub const MAX_NODES: usize = 10;

/// Working multigraph: a multiplicity matrix over at most [`MAX_NODES`] nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct MultiGraph {
    pub n: usize,
    pub adj: [[u8; MAX_NODES]; MAX_NODES],
}

impl MultiGraph {
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_NODES);
        Self {
            n,
            adj: [[0; MAX_NODES]; MAX_NODES],
        }
    }

    pub fn from_edges(nodes: usize, edges: &[(usize, usize, usize)]) -> Self {
        let mut g = Self::empty(nodes);
        for &(a, b, mult) in edges {
            assert!(a < b && b < nodes && mult > 0);
            g.adj[a][b] = mult as u8;
            g.adj[b][a] = mult as u8;
        }
        g
    }

    pub fn add_unit(&mut self, a: usize, b: usize) {
        self.adj[a][b] += 1;
        self.adj[b][a] += 1;
    }

    /// Total edge multiplicity.
    pub fn units(&self) -> usize {
        let mut total = 0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                total += self.adj[i][j] as usize;
            }
        }
        total
    }

    /// Degree counting multiplicity.
    pub fn degree(&self, v: usize) -> usize {
        (0..self.n).map(|u| self.adj[v][u] as usize).sum()
    }

    /// Units still needed to lift every node to degree two.
    pub fn deficiency(&self) -> usize {
        (0..self.n)
            .map(|v| 2usize.saturating_sub(self.degree(v)))
            .sum()
    }

    /// Sorted `(a, b, multiplicity)` triples with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.adj[i][j] > 0 {
                    out.push((i, j, self.adj[i][j] as usize));
                }
            }
        }
        out
    }

    fn encode_with(&self, perm: &[usize], buf: &mut Vec<u8>) {
        buf.clear();
        buf.push(self.n as u8);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                buf.push(self.adj[perm[i]][perm[j]]);
            }
        }
    }
}

/// Iterated colour refinement. Signatures are built from multiplicities and
/// previous colours only, so the resulting classes are label-invariant.
fn refine_colors(g: &MultiGraph) -> Vec<usize> {
    let n = g.n;
    let mut colors = vec![0usize; n];
    let mut distinct = 1;
    loop {
        let mut sigs: Vec<(usize, Vec<(u8, usize)>)> = Vec::with_capacity(n);
        for v in 0..n {
            let mut nb: Vec<(u8, usize)> = (0..n)
                .filter(|&u| g.adj[v][u] > 0)
                .map(|u| (g.adj[v][u], colors[u]))
                .collect();
            nb.sort_unstable();
            sigs.push((colors[v], nb));
        }
        let mut uniq = sigs.clone();
        uniq.sort_unstable();
        uniq.dedup();
        let next: Vec<usize> = sigs
            .iter()
            .map(|s| uniq.binary_search(s).unwrap())
            .collect();
        let next_distinct = uniq.len();
        colors = next;
        if next_distinct == distinct {
            return colors;
        }
        distinct = next_distinct;
    }
}

/// Canonical form of a multigraph: the relabelled graph, its byte key
/// (identical for isomorphic graphs, distinct otherwise) and the order of its
/// automorphism group.
pub(crate) fn canonicalize(g: &MultiGraph) -> (MultiGraph, Vec<u8>, u64) {
    let n = g.n;
    if n == 0 {
        return (g.clone(), vec![0], 1);
    }
    let colors = refine_colors(g);
    // Node positions are ordered by colour class; all within-class
    // permutations are candidates, and automorphisms respect the classes.
    let mut class_of_position = Vec::with_capacity(n);
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let max_color = *colors.iter().max().unwrap();
    for color in 0..=max_color {
        let members: Vec<usize> = (0..n).filter(|&v| colors[v] == color).collect();
        for _ in 0..members.len() {
            class_of_position.push(classes.len());
        }
        classes.push(members);
    }

    let mut used = vec![false; n];
    let mut perm = vec![0usize; n];
    let mut scratch = Vec::new();
    let mut best_key: Option<Vec<u8>> = None;
    let mut best_perm = vec![0usize; n];
    let mut aut = 0u64;

    fn search(
        pos: usize,
        g: &MultiGraph,
        classes: &[Vec<usize>],
        class_of_position: &[usize],
        used: &mut [bool],
        perm: &mut [usize],
        scratch: &mut Vec<u8>,
        best_key: &mut Option<Vec<u8>>,
        best_perm: &mut [usize],
        aut: &mut u64,
    ) {
        if pos == g.n {
            g.encode_with(perm, scratch);
            match best_key {
                Some(best) => match scratch.as_slice().cmp(best.as_slice()) {
                    std::cmp::Ordering::Less => {
                        *best = scratch.clone();
                        best_perm.copy_from_slice(perm);
                        *aut = 1;
                    }
                    std::cmp::Ordering::Equal => *aut += 1,
                    std::cmp::Ordering::Greater => {}
                },
                None => {
                    *best_key = Some(scratch.clone());
                    best_perm.copy_from_slice(perm);
                    *aut = 1;
                }
            }
            return;
        }
        for &candidate in &classes[class_of_position[pos]] {
            if !used[candidate] {
                used[candidate] = true;
                perm[pos] = candidate;
                search(
                    pos + 1,
                    g,
                    classes,
                    class_of_position,
                    used,
                    perm,
                    scratch,
                    best_key,
                    best_perm,
                    aut,
                );
                used[candidate] = false;
            }
        }
    }

    search(
        0,
        g,
        &classes,
        &class_of_position,
        &mut used,
        &mut perm,
        &mut scratch,
        &mut best_key,
        &mut best_perm,
        &mut aut,
    );

    let key = best_key.expect("nonempty graph");
    let mut relabelled = MultiGraph::empty(n);
    for i in 0..n {
        for j in 0..n {
            relabelled.adj[i][j] = g.adj[best_perm[i]][best_perm[j]];
        }
    }
    (relabelled, key, aut)
}

/// Canonical key and automorphism count for a multigraph given as an edge
/// list; the key is invariant under node relabelling.
pub fn canonical_form(nodes: usize, edges: &[(usize, usize, usize)]) -> (Vec<u8>, u64) {
    let g = MultiGraph::from_edges(nodes, edges);
    let (_, key, aut) = canonicalize(&g);
    (key, aut)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn double_edge_is_label_invariant() {
        let (key_a, aut_a) = canonical_form(2, &[(0, 1, 2)]);
        // The only relabelling of two nodes.
        let g = MultiGraph::from_edges(2, &[(0, 1, 2)]);
        let (relabelled, key_b, aut_b) = canonicalize(&g);
        assert_eq!(key_a, key_b);
        assert_eq!(aut_a, 2);
        assert_eq!(aut_b, 2);
        assert_eq!(relabelled.adj[0][1], 2);
    }

    #[test]
    fn triangle_differs_from_doubled_path() {
        let (triangle, _) = canonical_form(3, &[(0, 1, 1), (0, 2, 1), (1, 2, 1)]);
        let (path, _) = canonical_form(3, &[(0, 1, 2), (1, 2, 1)]);
        assert_ne!(triangle, path);
    }

    #[test]
    fn known_automorphism_counts() {
        assert_eq!(canonical_form(3, &[(0, 1, 1), (0, 2, 1), (1, 2, 1)]).1, 6); // triangle
        assert_eq!(
            canonical_form(4, &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 3, 1)]).1,
            8
        ); // four-cycle
        assert_eq!(
            canonical_form(5, &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 4, 1), (0, 4, 1)]).1,
            10
        ); // five-cycle
        assert_eq!(canonical_form(3, &[(0, 1, 2), (1, 2, 2)]).1, 2); // doubled path
        assert_eq!(canonical_form(4, &[(0, 1, 2), (2, 3, 2)]).1, 8); // disjoint doubles
    }

    #[test]
    fn random_relabelling_preserves_key() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for _ in 0..200 {
            let n = rng.random_range(2..=7);
            let mut g = MultiGraph::empty(n);
            for _ in 0..rng.random_range(1..=8) {
                let a = rng.random_range(0..n);
                let b = rng.random_range(0..n);
                if a != b {
                    g.add_unit(a.min(b), a.max(b));
                }
            }
            if g.units() == 0 {
                continue;
            }
            let (_, key, aut) = canonicalize(&g);
            // Random permutation of node labels.
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let mut shuffled = MultiGraph::empty(n);
            for i in 0..n {
                for j in 0..n {
                    shuffled.adj[perm[i]][perm[j]] = g.adj[i][j];
                }
            }
            let (_, key2, aut2) = canonicalize(&shuffled);
            assert_eq!(key, key2);
            assert_eq!(aut, aut2);
        }
    }
}
