//! Polynomial-time evaluation of `<dH^n>` by variable elimination over the
//! partition catalogs.
//!
//! Each graph is contracted index by index along its stored elimination
//! order: eliminating a node sums one free index over all units, multiplying
//! the incident weight powers and the node's corrected moment. Intermediate
//! factors are dense arrays over at most `width + 1` free indices, so an
//! order-`n` catalog evaluates in `O(N^pi(n))` where the brute-force oracle
//! needs `O(2^N)`.

use crate::error::{Error, Result};
use crate::graphs::{CatalogSet, PartitionGraph};
use crate::model::{BoltzmannMachine, MeanFieldState, MomentVector};
use crate::numeric::CompensatedSum;
use std::borrow::Cow;

/// Most factors one elimination can touch: a node's moment vector, its
/// incident edges and the surviving intermediates.
const MAX_FACTORS: usize = 24;

/// Dense tables `w_ij^m` for `m = 1..=max_mult`, built once per machine and
/// shared by every graph contraction.
pub struct WeightPowers {
    units: usize,
    tables: Vec<Vec<f64>>,
}

impl WeightPowers {
    pub fn build(bm: &BoltzmannMachine, max_mult: usize) -> Self {
        let n = bm.n();
        let mut base = vec![0.0; n * n];
        for i in 0..n {
            base[i * n..(i + 1) * n].copy_from_slice(bm.weights_row(i));
        }
        let mut tables = vec![base];
        for _ in 1..max_mult.max(1) {
            let previous = tables.last().unwrap();
            let next: Vec<f64> = previous
                .iter()
                .zip(&tables[0])
                .map(|(p, w)| p * w)
                .collect();
            tables.push(next);
        }
        Self { units: n, tables }
    }

    fn table(&self, mult: usize) -> &[f64] {
        &self.tables[mult - 1]
    }
}

/// Recycled intermediate buffers, shared across graph contractions to keep
/// the per-elimination work allocation-free.
#[derive(Default)]
pub struct Workspace {
    pool: Vec<Vec<f64>>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn take(&mut self, len: usize) -> Vec<f64> {
        let mut buffer = self.pool.pop().unwrap_or_default();
        buffer.clear();
        buffer.resize(len, 0.0);
        buffer
    }

    fn give(&mut self, buffer: Vec<f64>) {
        if self.pool.len() < 8 {
            self.pool.push(buffer);
        }
    }
}

/// A dense factor over the variable set `vars` (a node bitmask; ascending bit
/// order is ascending variable order); `data` is row-major in the unit index
/// of every variable. Weight tables are symmetric in their two variables, so
/// either one can serve as the row index.
struct Factor<'a> {
    vars: u16,
    data: Cow<'a, [f64]>,
    symmetric: bool,
}

/// Elementwise product into `dst`.
#[inline]
fn mul_row(dst: &mut [f64], row: &[f64]) {
    for (d, r) in dst.iter_mut().zip(row) {
        *d *= r;
    }
}

/// Fixed-order four-lane sum; deterministic and wide enough to pipeline.
#[inline]
fn sum_row(row: &[f64]) -> f64 {
    let mut lanes = [0.0f64; 4];
    let chunks = row.chunks_exact(4);
    let tail = chunks.remainder();
    for c in chunks {
        lanes[0] += c[0];
        lanes[1] += c[1];
        lanes[2] += c[2];
        lanes[3] += c[3];
    }
    for (i, v) in tail.iter().enumerate() {
        lanes[i] += v;
    }
    (lanes[0] + lanes[1]) + (lanes[2] + lanes[3])
}

/// Fused `sum(a * b)` with the same fixed four-lane order.
#[inline]
fn dot_rows(a: &[f64], b: &[f64]) -> f64 {
    let mut lanes = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let tail_a = chunks_a.remainder();
    let mut chunks_b = b.chunks_exact(4);
    for (ca, cb) in chunks_a.zip(&mut chunks_b) {
        lanes[0] += ca[0] * cb[0];
        lanes[1] += ca[1] * cb[1];
        lanes[2] += ca[2] * cb[2];
        lanes[3] += ca[3] * cb[3];
    }
    for (i, (va, vb)) in tail_a.iter().zip(chunks_b.remainder()).enumerate() {
        lanes[i] += va * vb;
    }
    (lanes[0] + lanes[1]) + (lanes[2] + lanes[3])
}

/// Fused `sum(a * b * c)`.
#[inline]
fn dot3_rows(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let mut lanes = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let tail_a = chunks_a.remainder();
    let mut chunks_b = b.chunks_exact(4);
    let mut chunks_c = c.chunks_exact(4);
    for ((ca, cb), cc) in chunks_a.zip(&mut chunks_b).zip(&mut chunks_c) {
        lanes[0] += ca[0] * cb[0] * cc[0];
        lanes[1] += ca[1] * cb[1] * cc[1];
        lanes[2] += ca[2] * cb[2] * cc[2];
        lanes[3] += ca[3] * cb[3] * cc[3];
    }
    for (i, ((va, vb), vc)) in tail_a
        .iter()
        .zip(chunks_b.remainder())
        .zip(chunks_c.remainder())
        .enumerate()
    {
        lanes[i] += va * vb * vc;
    }
    (lanes[0] + lanes[1]) + (lanes[2] + lanes[3])
}

/// One involved factor, rearranged so the eliminated variable is the
/// contiguous last axis: `data[base .. base + n]` is its slice at the current
/// assignment of the kept axes, with `base = sum_d index_d * strides[d]`.
#[derive(Clone, Copy)]
struct RowView<'t> {
    data: &'t [f64],
    strides: [usize; 3],
    /// Innermost kept axis this view depends on; it is multiplied in at that
    /// loop level and hoisted out of all deeper ones.
    level: usize,
}

/// One graph contraction: per-node corrected-moment vectors, per-edge weight
/// powers and the stored elimination order, consumed node by node.
pub struct EliminationTask<'a> {
    units: usize,
    graph: &'a PartitionGraph,
    factors: Vec<Factor<'a>>,
    max_arity_seen: usize,
}

impl<'a> EliminationTask<'a> {
    pub fn new(
        powers: &'a WeightPowers,
        state: &'a MeanFieldState,
        graph: &'a PartitionGraph,
    ) -> Result<Self> {
        let max_degree = graph.degrees().iter().max().copied().unwrap_or(0);
        let table = state.moments_table().ok_or(Error::MissingMomentDegree {
            need: max_degree,
            have: 0,
        })?;
        let mut factors = Vec::with_capacity(graph.nodes + graph.edges.len());
        for (node, degree) in graph.degrees().into_iter().enumerate() {
            let values = table.degree(degree).ok_or(Error::MissingMomentDegree {
                need: degree,
                have: table.max_degree(),
            })?;
            factors.push(Factor {
                vars: 1 << node,
                data: Cow::Borrowed(values),
                symmetric: false,
            });
        }
        for &(a, b, mult) in &graph.edges {
            if mult > powers.tables.len() {
                return Err(Error::MissingMomentDegree {
                    need: mult,
                    have: powers.tables.len(),
                });
            }
            factors.push(Factor {
                vars: (1 << a) | (1 << b),
                data: Cow::Borrowed(powers.table(mult)),
                symmetric: true,
            });
        }
        Ok(Self {
            units: powers.units,
            graph,
            factors,
            max_arity_seen: 0,
        })
    }

    /// Eliminates one node: multiplies every factor mentioning it and sums
    /// the node's index out, producing a factor over the remaining union.
    ///
    /// Every involved factor is viewed (transposing when necessary) with the
    /// eliminated variable as its contiguous last axis; the contraction is
    /// then nothing but hoisted row products and one row sum per output cell.
    fn eliminate(&mut self, node: usize, ws: &mut Workspace) {
        let n = self.units;
        let node_bit = 1u16 << node;

        let mut involved = [0usize; MAX_FACTORS];
        let mut k = 0;
        let mut union: u16 = 0;
        for (idx, f) in self.factors.iter().enumerate() {
            if f.vars & node_bit != 0 {
                assert!(k < MAX_FACTORS);
                involved[k] = idx;
                k += 1;
                union |= f.vars;
            }
        }
        debug_assert!(k > 0, "catalog nodes always carry a moment");
        let arity = union.count_ones() as usize;
        self.max_arity_seen = self.max_arity_seen.max(arity);
        assert!(
            arity <= 4,
            "catalogued graphs never exceed four live indices"
        );
        let kept_mask = union & !node_bit;
        let kept_count = arity - 1;
        let mut kept = [usize::MAX; 3];
        {
            let mut rest = kept_mask;
            let mut axis = 0;
            while rest != 0 {
                kept[axis] = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                axis += 1;
            }
        }
        let axis_of = |var: usize| kept[..kept_count].iter().position(|&x| x == var).unwrap();

        // Shared vector of the eliminated index: the product of every
        // involved single-variable factor.
        let mut t0 = ws.take(n);
        t0.fill(1.0);

        // First pass: fold pure-node vectors into t0 and rearrange any factor
        // whose node axis is not already the contiguous last one. Symmetric
        // weight tables never need this; intermediates occasionally do.
        let mut scratch: [Option<Vec<f64>>; MAX_FACTORS] = [const { None }; MAX_FACTORS];
        for t in 0..k {
            let f = &self.factors[involved[t]];
            let data = f.data.as_ref();
            let others = f.vars & !node_bit;
            match others.count_ones() {
                0 => mul_row(&mut t0, data),
                1 => {
                    let other = others.trailing_zeros() as usize;
                    if !f.symmetric && other > node {
                        // Stored as (node, other); flip to (other, node).
                        let mut buffer = ws.take(n * n);
                        for x in 0..n {
                            for v in 0..n {
                                buffer[x * n + v] = data[v * n + x];
                            }
                        }
                        scratch[t] = Some(buffer);
                    }
                }
                2 => {
                    let x = others.trailing_zeros() as usize;
                    let y = (others & (others - 1)).trailing_zeros() as usize;
                    if node < y {
                        // Stored with the node axis inside; bring it last.
                        let (sx, sy, sv) = if node < x {
                            (n, 1, n * n)
                        } else {
                            (n * n, 1, n)
                        };
                        let mut buffer = ws.take(n * n * n);
                        for ix in 0..n {
                            for iy in 0..n {
                                let base = ix * n * n + iy * n;
                                let src = ix * sx + iy * sy;
                                for iv in 0..n {
                                    buffer[base + iv] = data[src + iv * sv];
                                }
                            }
                        }
                        scratch[t] = Some(buffer);
                    }
                }
                _ => unreachable!("intermediate factors never exceed the induced width"),
            }
        }

        // Second pass: immutable row views over either the factor data or the
        // rearranged copies.
        let mut views: [RowView; MAX_FACTORS] = [RowView {
            data: &[],
            strides: [0; 3],
            level: 0,
        }; MAX_FACTORS];
        let mut view_count = 0;
        for t in 0..k {
            let f = &self.factors[involved[t]];
            let others = f.vars & !node_bit;
            if others == 0 {
                continue;
            }
            let data: &[f64] = match &scratch[t] {
                Some(buffer) => buffer,
                None => f.data.as_ref(),
            };
            let mut strides = [0usize; 3];
            let level;
            if others.count_ones() == 1 {
                let axis = axis_of(others.trailing_zeros() as usize);
                strides[axis] = n;
                level = axis;
            } else {
                let x = others.trailing_zeros() as usize;
                let y = (others & (others - 1)).trailing_zeros() as usize;
                let (ax, ay) = (axis_of(x), axis_of(y));
                strides[ax] = n * n;
                strides[ay] = n;
                level = ax.max(ay);
            }
            views[view_count] = RowView {
                data,
                strides,
                level,
            };
            view_count += 1;
        }
        // Group views by loop level (outer levels are hoisted row products,
        // the innermost level fuses into a dot).
        views[..view_count].sort_unstable_by_key(|v| v.level);
        let views = &views[..view_count];
        let level_start = |d: usize| views.partition_point(|v| v.level < d);
        let inner_level = kept_count.saturating_sub(1);
        let inner = &views[level_start(inner_level)..];

        // Innermost cells: sum over the eliminated index of the running
        // vector times the level's rows, fused per row count.
        // Outer-axis offset of a view; entries of `base` at the inner level
        // and beyond are zero.
        let view_base = |v: &RowView, base: [usize; 3]| -> usize {
            base[0] * v.strides[0] + base[1] * v.strides[1] + base[2] * v.strides[2]
        };
        let inner_cells =
            |s: &[f64], base: [usize; 3], out: &mut [f64], tmp: &mut [f64]| match inner.len() {
                0 => out.fill(sum_row(s)),
                1 => {
                    let v = &inner[0];
                    let step = v.strides[inner_level];
                    let mut at = view_base(v, base);
                    for slot in out.iter_mut() {
                        *slot = dot_rows(s, &v.data[at..at + n]);
                        at += step;
                    }
                }
                2 => {
                    let (v1, v2) = (&inner[0], &inner[1]);
                    let (step1, step2) = (v1.strides[inner_level], v2.strides[inner_level]);
                    let mut at1 = view_base(v1, base);
                    let mut at2 = view_base(v2, base);
                    for slot in out.iter_mut() {
                        *slot = dot3_rows(s, &v1.data[at1..at1 + n], &v2.data[at2..at2 + n]);
                        at1 += step1;
                        at2 += step2;
                    }
                }
                _ => {
                    for (inner_idx, slot) in out.iter_mut().enumerate() {
                        tmp.copy_from_slice(s);
                        for v in inner {
                            let offset = view_base(v, base) + inner_idx * v.strides[inner_level];
                            mul_row(tmp, &v.data[offset..offset + n]);
                        }
                        *slot = sum_row(tmp);
                    }
                }
            };

        let mut out = ws.take(n.pow(kept_count as u32));
        let mut tmp = ws.take(n);
        match kept_count {
            0 => out[0] = sum_row(&t0),
            1 => {
                inner_cells(&t0, [0, 0, 0], &mut out, &mut tmp);
            }
            2 => {
                let outer = &views[..level_start(1)];
                let mut s1 = ws.take(n);
                for a in 0..n {
                    let parent: &[f64] = if outer.is_empty() {
                        &t0
                    } else {
                        s1.copy_from_slice(&t0);
                        for v in outer {
                            let offset = a * v.strides[0];
                            mul_row(&mut s1, &v.data[offset..offset + n]);
                        }
                        &s1
                    };
                    inner_cells(parent, [a, 0, 0], &mut out[a * n..(a + 1) * n], &mut tmp);
                }
                ws.give(s1);
            }
            3 => {
                let outer = &views[..level_start(1)];
                let middle = &views[level_start(1)..level_start(2)];
                let mut s1 = ws.take(n);
                let mut s2 = ws.take(n);
                for a in 0..n {
                    let parent1: &[f64] = if outer.is_empty() {
                        &t0
                    } else {
                        s1.copy_from_slice(&t0);
                        for v in outer {
                            let offset = a * v.strides[0];
                            mul_row(&mut s1, &v.data[offset..offset + n]);
                        }
                        &s1
                    };
                    for b in 0..n {
                        let parent2: &[f64] = if middle.is_empty() {
                            parent1
                        } else {
                            s2.copy_from_slice(parent1);
                            for v in middle {
                                let offset = a * v.strides[0] + b * v.strides[1];
                                mul_row(&mut s2, &v.data[offset..offset + n]);
                            }
                            &s2
                        };
                        let cell = (a * n + b) * n;
                        inner_cells(parent2, [a, b, 0], &mut out[cell..cell + n], &mut tmp);
                    }
                }
                ws.give(s1);
                ws.give(s2);
            }
            _ => unreachable!(),
        }
        ws.give(tmp);
        ws.give(t0);
        for slot in scratch.iter_mut().take(k) {
            if let Some(buffer) = slot.take() {
                ws.give(buffer);
            }
        }

        // Release the consumed factors (highest index first so swap_remove
        // stays valid) and recycle their buffers.
        for idx in involved[..k].iter().rev() {
            let f = self.factors.swap_remove(*idx);
            if let Cow::Owned(buffer) = f.data {
                ws.give(buffer);
            }
        }
        self.factors.push(Factor {
            vars: kept_mask,
            data: Cow::Owned(out),
            symmetric: false,
        });
    }

    /// Runs the contraction to a scalar with a private workspace.
    pub fn run(self) -> (f64, usize) {
        self.run_with(&mut Workspace::new())
    }

    /// Runs the contraction to a scalar; returns the automorphism-normalised
    /// value `S(g)` and the largest factor arity touched.
    pub fn run_with(mut self, ws: &mut Workspace) -> (f64, usize) {
        for node in self.graph.elim_order.clone() {
            self.eliminate(node, ws);
        }
        let mut value = 1.0;
        for f in self.factors.drain(..) {
            debug_assert_eq!(f.vars, 0);
            value *= f.data[0];
            if let Cow::Owned(buffer) = f.data {
                ws.give(buffer);
            }
        }
        (value / self.graph.aut as f64, self.max_arity_seen)
    }
}

/// `S(g)` for one partition graph: the free sum over all index assignments of
/// the edge weight powers times the per-node corrected moments, divided by
/// the automorphism count, evaluated in `O(N^(width + 1))` by elimination.
pub fn graph_contribution(
    bm: &BoltzmannMachine,
    state: &MeanFieldState,
    graph: &PartitionGraph,
) -> Result<f64> {
    let max_mult = graph.edges.iter().map(|&(_, _, m)| m).max().unwrap_or(1);
    let powers = WeightPowers::build(bm, max_mult);
    let (value, arity) = EliminationTask::new(&powers, state, graph)?.run();
    debug_assert!(
        arity <= graph.width + 1,
        "elimination touched {arity} indices on a width-{} graph",
        graph.width
    );
    Ok(value)
}

/// `<dH^n>` for `n = 0..=n_max` through the partition catalogs: `values[0] = 1`,
/// `values[1] = 0`, and each higher moment is the coefficient-weighted sum of
/// graph contributions, accumulated in catalog order with compensation.
///
/// Requires a state whose fields solve the mean-field equations (states that
/// do not are routed to the brute-force path by the engine) and a moment
/// table covering every node degree in the catalogs.
pub fn delta_h_moments_graph(
    bm: &BoltzmannMachine,
    state: &MeanFieldState,
    catalogs: &CatalogSet,
    n_max: usize,
) -> Result<MomentVector> {
    let mut values = vec![0.0; n_max + 1];
    values[0] = 1.0;
    if n_max >= 2 {
        let powers = WeightPowers::build(bm, n_max);
        let mut ws = Workspace::new();
        for (n, slot) in values.iter_mut().enumerate().skip(2) {
            let catalog = catalogs.get(n)?;
            let mut acc = CompensatedSum::new();
            for g in &catalog.graphs {
                let (value, arity) = EliminationTask::new(&powers, state, g)?.run_with(&mut ws);
                debug_assert!(arity <= g.width + 1);
                acc.add(g.coefficient as f64 * value);
            }
            *slot = acc.value();
        }
    }
    MomentVector::new(values)
}
