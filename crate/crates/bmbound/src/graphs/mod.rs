//! Partition multigraphs: enumeration with multiplicity coefficients,
//! canonical forms, elimination orders and persisted catalogs.
//!
//! A partition graph records how weight factors share indices in one term of
//! the `<dH^n>` expansion: nodes are free indices, an edge of multiplicity
//! `m` is a weight factor raised to the `m`-th power, and a node of degree
//! `c` carries the corrected moment `M'_c`. Every index then ranges freely
//! over all units (index coincidences are corrected by the `M'` construction
//! and killed on adjacent nodes by the zero weight diagonal), the free sum is
//! divided by the automorphism count of the graph, and the whole expansion of
//! `<dH^n>` is the coefficient-weighted sum over the order-`n` catalog.

mod canonical;
mod catalog;
mod elimination;
mod enumerate;

pub use canonical::canonical_form;
pub use catalog::{load_catalog, save_catalog};
pub use elimination::elimination_order;

use crate::error::{Error, Result};
use crate::numeric::factorial;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Largest catalogued expansion order. Higher moment orders remain reachable
/// through the brute-force evaluator.
pub const MAX_CATALOG_ORDER: usize = 9;

/// Identifier of the sum convention the coefficients are calibrated against:
/// free index sums over corrected moments, normalised by the automorphism
/// count of each graph.
pub const CONVENTION_TAG: &str = "free-index-sum/aut-normalized/v1";

/// One isomorphism class of index couplings at a given expansion order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionGraph {
    /// Number of free indices.
    pub nodes: usize,
    /// `(a, b, multiplicity)` with `a < b`, sorted.
    pub edges: Vec<(usize, usize, usize)>,
    /// How many expansion terms map onto this class per index assignment:
    /// `order! / prod(multiplicity!)`.
    pub coefficient: u64,
    /// Order of the automorphism group; the free sum is divided by it.
    pub aut: u64,
    /// Contribution to the cost exponent: evaluating this graph costs
    /// `O(N^max_clique)` (the clique number of an optimal triangulation of
    /// the simple support).
    pub max_clique: usize,
    /// Node elimination order used by the evaluator.
    pub elim_order: Vec<usize>,
    /// Induced width of `elim_order`; intermediate factors never exceed
    /// `width + 1` indices.
    pub width: usize,
    /// Canonical byte key; recomputed on load, identical across isomorphic
    /// graphs.
    #[serde(skip)]
    pub canonical_key: Vec<u8>,
}

impl PartitionGraph {
    /// Total edge multiplicity.
    pub fn order(&self) -> usize {
        self.edges.iter().map(|&(_, _, m)| m).sum()
    }

    /// Degree (with multiplicity) of every node.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.nodes];
        for &(a, b, m) in &self.edges {
            deg[a] += m;
            deg[b] += m;
        }
        deg
    }
}

/// All partition graphs of one expansion order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphCatalog {
    pub order: usize,
    pub convention_tag: String,
    pub graphs: Vec<PartitionGraph>,
}

impl GraphCatalog {
    /// Histogram of cost exponents: entry `k` counts graphs with
    /// `max_clique == k + 2`.
    pub fn clique_histogram(&self) -> Vec<usize> {
        let top = self.graphs.iter().map(|g| g.max_clique).max().unwrap_or(2);
        let mut hist = vec![0usize; top - 1];
        for g in &self.graphs {
            hist[g.max_clique - 2] += 1;
        }
        hist
    }

    /// `pi(order)`: the largest cost exponent in the catalog.
    pub fn pi(&self) -> usize {
        self.graphs.iter().map(|g| g.max_clique).max().unwrap_or(0)
    }

    /// Largest node degree occurring in the catalog (the deepest corrected
    /// moment the evaluator will request).
    pub fn max_degree(&self) -> usize {
        self.graphs
            .iter()
            .flat_map(|g| g.degrees())
            .max()
            .unwrap_or(0)
    }
}

/// Enumerates every partition graph of the given order with its multiplicity
/// coefficient, elimination order and cost exponent, sorted by canonical key.
pub fn enumerate_partitions(order: usize) -> Result<GraphCatalog> {
    if !(2..=MAX_CATALOG_ORDER).contains(&order) {
        return Err(Error::UnsupportedOrder {
            order,
            max: MAX_CATALOG_ORDER,
        });
    }
    let graphs = enumerate::enumerate_multigraphs(order)
        .into_iter()
        .map(|(g, key, aut)| {
            let edges = g.edges();
            let mut coefficient = factorial(order);
            for &(_, _, m) in &edges {
                coefficient /= factorial(m);
            }
            let (mut elim, mut width) = elimination::elimination_order(g.n, &edges);
            let adj = elimination::simple_adjacency(g.n, &edges);
            let (tw, optimal) = elimination::exact_treewidth(g.n, &adj);
            if width > tw {
                // Greedy fill missed the optimum; keep the exact order so the
                // stored width always matches the cost exponent.
                elim = optimal;
                width = tw;
            }
            PartitionGraph {
                nodes: g.n,
                edges,
                coefficient: coefficient.round() as u64,
                aut,
                max_clique: tw + 1,
                elim_order: elim,
                width,
                canonical_key: key,
            }
        })
        .collect();
    Ok(GraphCatalog {
        order,
        convention_tag: CONVENTION_TAG.to_string(),
        graphs,
    })
}

/// Catalogs for a contiguous range of orders, indexed by order.
#[derive(Debug, Clone)]
pub struct CatalogSet {
    by_order: BTreeMap<usize, GraphCatalog>,
}

impl CatalogSet {
    /// Enumerates catalogs for orders `2..=max_order` in-process.
    pub fn generate(max_order: usize) -> Result<Self> {
        let mut by_order = BTreeMap::new();
        for order in 2..=max_order.max(2) {
            by_order.insert(order, enumerate_partitions(order)?);
        }
        Ok(Self { by_order })
    }

    /// Loads `order_{n}.json` files for orders `2..=max_order` from a
    /// directory.
    pub fn load_dir(dir: &Path, max_order: usize) -> Result<Self> {
        let mut by_order = BTreeMap::new();
        for order in 2..=max_order.max(2) {
            let path = dir.join(format!("order_{order}.json"));
            if !path.exists() {
                return Err(Error::MissingCatalog { order });
            }
            by_order.insert(order, load_catalog(&path)?);
        }
        Ok(Self { by_order })
    }

    pub fn from_catalogs(catalogs: impl IntoIterator<Item = GraphCatalog>) -> Self {
        Self {
            by_order: catalogs.into_iter().map(|c| (c.order, c)).collect(),
        }
    }

    pub fn get(&self, order: usize) -> Result<&GraphCatalog> {
        self.by_order
            .get(&order)
            .ok_or(Error::MissingCatalog { order })
    }

    pub fn max_order(&self) -> usize {
        self.by_order.keys().max().copied().unwrap_or(0)
    }
}
