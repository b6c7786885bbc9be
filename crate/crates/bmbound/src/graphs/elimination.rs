//! Elimination orders over the simple support of a partition graph: a greedy
//! min-fill heuristic for everyday use and an exact subset-DP treewidth
//! computation that pins the cost exponent stored in the catalogs.

/// Bitmask adjacency of the simple support (multiplicities collapsed).
pub(crate) fn simple_adjacency(nodes: usize, edges: &[(usize, usize, usize)]) -> Vec<u16> {
    let mut adj = vec![0u16; nodes];
    for &(a, b, _) in edges {
        adj[a] |= 1 << b;
        adj[b] |= 1 << a;
    }
    adj
}

fn bits(mut mask: u16) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let v = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(v)
        }
    })
}

/// Greedy min-fill elimination order (ties broken by active degree, then by
/// node index) and the induced width of that order.
pub fn elimination_order(nodes: usize, edges: &[(usize, usize, usize)]) -> (Vec<usize>, usize) {
    let mut adj = simple_adjacency(nodes, edges);
    let mut active: u16 = if nodes == 16 {
        u16::MAX
    } else {
        (1 << nodes) - 1
    };
    let mut order = Vec::with_capacity(nodes);
    let mut width = 0usize;
    for _ in 0..nodes {
        let mut best: Option<(usize, usize, usize)> = None; // (fill, degree, node)
        for v in bits(active) {
            let nb = adj[v] & active & !(1 << v);
            let degree = nb.count_ones() as usize;
            let mut fill = 0usize;
            for a in bits(nb) {
                for b in bits(nb) {
                    if b > a && adj[a] & (1 << b) == 0 {
                        fill += 1;
                    }
                }
            }
            let key = (fill, degree, v);
            if best.map_or(true, |b| key < b) {
                best = Some(key);
            }
        }
        let (_, degree, v) = best.expect("active node remains");
        width = width.max(degree);
        let nb = adj[v] & active & !(1 << v);
        for a in bits(nb) {
            for b in bits(nb) {
                if b > a {
                    adj[a] |= 1 << b;
                    adj[b] |= 1 << a;
                }
            }
        }
        active &= !(1 << v);
        order.push(v);
    }
    (order, width)
}

/// Vertices outside `inside ∪ {v}` adjacent to `v` or connected to it through
/// `inside` — the elimination degree of `v` after `inside` has been removed.
fn reach_count(v: usize, inside: u16, adj: &[u16]) -> usize {
    let vbit = 1u16 << v;
    let mut out = adj[v] & !inside & !vbit;
    let mut seen = vbit;
    let mut queue = adj[v] & inside;
    while queue != 0 {
        let u = queue.trailing_zeros() as usize;
        queue &= queue - 1;
        if seen & (1 << u) != 0 {
            continue;
        }
        seen |= 1 << u;
        out |= adj[u] & !inside & !vbit;
        queue |= adj[u] & inside & !seen;
    }
    out.count_ones() as usize
}

/// Exact treewidth of the simple support, with an elimination order achieving
/// it, by dynamic programming over eliminated subsets.
pub(crate) fn exact_treewidth(nodes: usize, adj: &[u16]) -> (usize, Vec<usize>) {
    assert!((1..=16).contains(&nodes));
    let full: u32 = (1u32 << nodes) - 1;
    let mut best = vec![u8::MAX; (full + 1) as usize];
    let mut pick = vec![0u8; (full + 1) as usize];
    best[0] = 0;
    for s in 1..=full {
        let mut s_best = u8::MAX;
        let mut s_pick = 0u8;
        for v in bits(s as u16) {
            let prev = s & !(1 << v);
            let degree = reach_count(v, prev as u16, adj) as u8;
            let cand = best[prev as usize].max(degree);
            if cand < s_best {
                s_best = cand;
                s_pick = v as u8;
            }
        }
        best[s as usize] = s_best;
        pick[s as usize] = s_pick;
    }
    let mut order_rev = Vec::with_capacity(nodes);
    let mut s = full;
    while s != 0 {
        let v = pick[s as usize] as usize;
        order_rev.push(v);
        s &= !(1 << v);
    }
    order_rev.reverse();
    (best[full as usize] as usize, order_rev)
}

/// Induced width of a given elimination order on the simple support.
pub(crate) fn induced_width(
    nodes: usize,
    edges: &[(usize, usize, usize)],
    order: &[usize],
) -> usize {
    let mut adj = simple_adjacency(nodes, edges);
    let mut active: u16 = if nodes == 16 {
        u16::MAX
    } else {
        (1 << nodes) - 1
    };
    let mut width = 0;
    for &v in order {
        let nb = adj[v] & active & !(1 << v);
        width = width.max(nb.count_ones() as usize);
        for a in bits(nb) {
            for b in bits(nb) {
                if b > a {
                    adj[a] |= 1 << b;
                    adj[b] |= 1 << a;
                }
            }
        }
        active &= !(1 << v);
    }
    width
}
