//! Catalog persistence: JSON files with a pinned convention tag, validated
//! and re-keyed on load.

use super::canonical::canonical_form;
use super::elimination::induced_width;
use super::{GraphCatalog, CONVENTION_TAG, MAX_CATALOG_ORDER};
use crate::error::{Error, Result};
use std::path::Path;

/// Serialises a catalog; the result is deterministic, so regeneration is
/// byte-identical.
pub fn save_catalog(catalog: &GraphCatalog, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(catalog).expect("catalog serialization");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Loads and fully validates a catalog file, recomputing every canonical key.
/// Malformed JSON reports the offending line and column; nothing partial is
/// ever returned.
pub fn load_catalog(path: &Path) -> Result<GraphCatalog> {
    let text = std::fs::read_to_string(path)?;
    let mut catalog: GraphCatalog =
        serde_json::from_str(&text).map_err(|e| Error::CatalogParse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    if catalog.convention_tag != CONVENTION_TAG {
        return Err(Error::CatalogVersion {
            found: catalog.convention_tag,
            expected: CONVENTION_TAG.to_string(),
        });
    }
    let order = catalog.order;
    let invalid = |message: String| Error::CatalogInvalid { order, message };
    if !(2..=MAX_CATALOG_ORDER).contains(&order) {
        return Err(invalid(format!("order {order} out of supported range")));
    }
    let mut previous_key: Option<Vec<u8>> = None;
    for (idx, g) in catalog.graphs.iter_mut().enumerate() {
        if g.nodes < 2 || g.nodes > super::canonical::MAX_NODES {
            return Err(invalid(format!("graph {idx}: bad node count {}", g.nodes)));
        }
        let mut total = 0usize;
        for &(a, b, m) in &g.edges {
            if a >= b || b >= g.nodes || m == 0 {
                return Err(invalid(format!("graph {idx}: bad edge ({a}, {b}, {m})")));
            }
            total += m;
        }
        if total != order {
            return Err(invalid(format!(
                "graph {idx}: edge multiplicities sum to {total}, catalog order is {order}"
            )));
        }
        if g.degrees().iter().any(|&d| d < 2) {
            return Err(invalid(format!("graph {idx}: node of degree below two")));
        }
        if g.coefficient == 0 || g.aut == 0 {
            return Err(invalid(format!("graph {idx}: zero coefficient or aut")));
        }
        let mut sorted = g.elim_order.clone();
        sorted.sort_unstable();
        if sorted != (0..g.nodes).collect::<Vec<_>>() {
            return Err(invalid(format!(
                "graph {idx}: elimination order is not a permutation of the nodes"
            )));
        }
        if induced_width(g.nodes, &g.edges, &g.elim_order) != g.width {
            return Err(invalid(format!("graph {idx}: stored width is wrong")));
        }
        if g.width + 1 > g.max_clique || g.max_clique > g.nodes {
            return Err(invalid(format!("graph {idx}: inconsistent cost exponent")));
        }
        let (key, aut) = canonical_form(g.nodes, &g.edges);
        if aut != g.aut {
            return Err(invalid(format!(
                "graph {idx}: stored aut {} but graph has {aut}",
                g.aut
            )));
        }
        if let Some(prev) = &previous_key {
            if key <= *prev {
                return Err(invalid(format!(
                    "graph {idx}: catalog not sorted by canonical key (or duplicate class)"
                )));
            }
        }
        previous_key = Some(key.clone());
        g.canonical_key = key;
    }
    Ok(catalog)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::enumerate_partitions;
    use std::fs;

    #[test]
    fn round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("order_6.json");
        let catalog = enumerate_partitions(6).unwrap();
        save_catalog(&catalog, &path).unwrap();
        let first = fs::read(&path).unwrap();
        let loaded = load_catalog(&path).unwrap();
        assert_eq!(loaded, catalog);
        let again = dir.path().join("again.json");
        save_catalog(&loaded, &again).unwrap();
        assert_eq!(first, fs::read(&again).unwrap());
    }

    #[test]
    fn hand_written_order_two_catalog_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("order_2.json");
        fs::write(
            &path,
            format!(
                r#"{{
  "order": 2,
  "convention_tag": "{CONVENTION_TAG}",
  "graphs": [
    {{
      "nodes": 2,
      "edges": [[0, 1, 2]],
      "coefficient": 1,
      "aut": 2,
      "max_clique": 2,
      "elim_order": [0, 1],
      "width": 1
    }}
  ]
}}
"#
            ),
        )
        .unwrap();
        let catalog = load_catalog(&path).unwrap();
        assert_eq!(catalog.graphs.len(), 1);
        assert_eq!(catalog.graphs[0].coefficient, 1);
        assert_eq!(catalog, enumerate_partitions(2).unwrap());
    }

    #[test]
    fn truncated_file_reports_parse_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("order_3.json");
        let catalog = enumerate_partitions(3).unwrap();
        save_catalog(&catalog, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, &text[..text.len() / 2]).unwrap();
        match load_catalog(&path) {
            Err(Error::CatalogParse { line, .. }) => assert!(line > 0),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_convention_tag_is_a_version_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("order_2.json");
        let mut catalog = enumerate_partitions(2).unwrap();
        catalog.convention_tag = "something-else/v0".into();
        save_catalog(&catalog, &path).unwrap();
        assert!(matches!(
            load_catalog(&path),
            Err(Error::CatalogVersion { .. })
        ));
    }

    #[test]
    fn corrupted_multiplicity_fails_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("order_4.json");
        let mut catalog = enumerate_partitions(4).unwrap();
        catalog.graphs[0].edges[0].2 += 1;
        save_catalog(&catalog, &path).unwrap();
        assert!(matches!(
            load_catalog(&path),
            Err(Error::CatalogInvalid { order: 4, .. })
        ));
    }
}
