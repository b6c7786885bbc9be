//! Command implementations behind the `bmbound` binary: catalog generation,
//! single-instance bound reports and ensemble sweeps emitting CSV.

use crate::engine::{approx_correlation, relative_error, EvaluatorPath, MfStart, PreparedInstance};
use crate::error::{Error, Result};
use crate::graphs::{enumerate_partitions, save_catalog, CatalogSet, MAX_CATALOG_ORDER};
use crate::model::{
    exact_correlation, exact_log_partition, mean_field_jacobian_radius, sk_random,
    solve_mean_field, BoltzmannMachine, MfInit, MfOptions, MAX_EXACT_UNITS,
};
use crate::numeric::derive_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

/// Generates catalog files `order_2.json ..= order_{max_order}.json` and
/// prints a per-order summary (partition count, cost-exponent histogram,
/// pi and the leading complexity). Regeneration is byte-identical.
pub fn run_catalog(max_order: usize, out_dir: &Path, out: &mut impl std::io::Write) -> Result<()> {
    if !(2..=MAX_CATALOG_ORDER).contains(&max_order) {
        return Err(Error::UnsupportedOrder {
            order: max_order,
            max: MAX_CATALOG_ORDER,
        });
    }
    std::fs::create_dir_all(out_dir)?;
    for order in 2..=max_order {
        let catalog = enumerate_partitions(order)?;
        let path = out_dir.join(format!("order_{order}.json"));
        save_catalog(&catalog, &path)?;
        let histogram = catalog
            .clique_histogram()
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join("+");
        let pi = catalog.pi();
        let leading = catalog.graphs.iter().filter(|g| g.max_clique == pi).count();
        writeln!(
            out,
            "order {order}: {} partitions ({histogram})  pi = {pi}  cost ~ O({leading} N^{pi})  -> {}",
            catalog.graphs.len(),
            path.display()
        )?;
    }
    Ok(())
}

/// Loads the catalogs an order-`order` graph evaluation needs.
fn catalogs_for(order: usize, dir: &Path) -> Result<CatalogSet> {
    CatalogSet::load_dir(dir, (order - 1).max(2))
}

/// Prints the full report for one network file: reference free energy,
/// moments, optimised parameters, the bound, and the exact comparison when
/// enumeration is feasible. Returns an error (exit code 3) when the solver
/// fails to converge or the bound degenerates.
pub fn run_bound(
    network: &Path,
    order: usize,
    path: EvaluatorPath,
    mf_start: MfStart,
    catalog_dir: &Path,
    out: &mut impl std::io::Write,
) -> Result<()> {
    let bm = BoltzmannMachine::load(network)?;
    let catalogs = match path {
        EvaluatorPath::Graph => Some(catalogs_for(order, catalog_dir)?),
        EvaluatorPath::BruteForce => None,
    };
    let prepared = PreparedInstance::new(&bm, order - 1, path, mf_start, catalogs.as_ref())?;
    let bound = prepared.bound(order)?;

    writeln!(out, "network: {} units ({})", bm.n(), network.display())?;
    writeln!(
        out,
        "mean field: start = {mf_start}, converged = {}, iterations = {}, residual = {:.3e}",
        bound.mean_field.converged(),
        bound.mean_field.iterations(),
        bound.mean_field.residual()
    )?;
    writeln!(
        out,
        "mean-field jacobian radius: {:.6}",
        mean_field_jacobian_radius(&bm, bound.mean_field.m())
    )?;
    writeln!(out, "log Z~ = {:.12}", bound.log_z_tilde)?;
    for (n, value) in bound.moments.values().iter().enumerate() {
        writeln!(out, "<dH^{n}> = {value:.12e}")?;
    }
    for (slot, mu) in bound.mus.iter().enumerate() {
        writeln!(out, "mu_{} = {mu:.12e}", 2 * slot)?;
    }
    writeln!(
        out,
        "inner sum = {:.12e} (dominant term ratio {:.3e})",
        bound.diagnostics.inner_sum, bound.diagnostics.dominance_ratio
    )?;
    writeln!(
        out,
        "log bound (order {order}, {} path) = {:.12}",
        bound.path_used, bound.log_bound
    )?;

    if bm.n() <= MAX_EXACT_UNITS {
        let exact = exact_log_partition(&bm)?;
        writeln!(out, "exact log Z = {exact:.12}")?;
        match relative_error(bound.log_bound, exact) {
            Ok(err) => writeln!(out, "relative error E = {err:.6e}")?,
            Err(_) => writeln!(out, "relative error E undefined (log Z = 0)")?,
        }
    } else {
        writeln!(out, "exact log Z not computed (N > {MAX_EXACT_UNITS})")?;
    }

    if !bound.mean_field.converged() {
        return Err(Error::NumericFailure {
            reason: "mean-field iteration did not converge".into(),
        });
    }
    if bound.is_degenerate() {
        return Err(Error::NumericFailure {
            reason: format!(
                "bound degenerated: inner sum {}",
                bound.diagnostics.inner_sum
            ),
        });
    }
    Ok(())
}

fn default_group_count() -> usize {
    10
}

fn default_mf_start() -> MfStart {
    MfStart::Standard
}

fn default_path() -> EvaluatorPath {
    EvaluatorPath::Graph
}

/// Ensemble sweep configuration. Optional fields are echoed back, fully
/// resolved, into the CSV metadata so every output file is self-describing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub sigma_theta: f64,
    pub sigma_w_grid: Vec<f64>,
    /// Bound orders, all even.
    pub orders: Vec<usize>,
    pub networks_per_point: usize,
    pub seed: u64,
    #[serde(default = "default_mf_start")]
    pub mf_start: MfStart,
    #[serde(default = "default_path")]
    pub evaluator_path: EvaluatorPath,
    /// Error bars are standard deviations over this many group means.
    #[serde(default = "default_group_count")]
    pub group_count: usize,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: SweepConfig =
            serde_json::from_str(&text).map_err(|e| Error::InvalidConfig {
                reason: format!("{}: {e}", path.display()),
            })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidConfig {
                reason: reason.to_string(),
            })
        };
        if self.n < 2 {
            return fail("N must be at least 2");
        }
        if self.sigma_w_grid.is_empty() {
            return fail("sigma_w_grid must not be empty");
        }
        if self.sigma_w_grid.iter().any(|s| !(*s >= 0.0)) || !(self.sigma_theta >= 0.0) {
            return fail("standard deviations must be nonnegative");
        }
        if self.orders.is_empty() || self.orders.iter().any(|k| k < &2 || k % 2 != 0) {
            return fail("orders must be even and at least 2");
        }
        if self.networks_per_point == 0 {
            return fail("networks_per_point must be positive");
        }
        if self.group_count == 0 || self.group_count > self.networks_per_point {
            return fail("group_count must be in 1..=networks_per_point");
        }
        Ok(())
    }
}

/// One CSV row of a sweep: a (network, order) pair.
#[derive(Debug, Clone)]
struct SweepRow {
    seed: u64,
    sigma_w: f64,
    order: usize,
    log_z_exact: Option<f64>,
    log_bound: Option<f64>,
    rel_error: Option<f64>,
    corr_exact: Option<f64>,
    corr_approx: Option<f64>,
    mf_start: MfStart,
    converged: bool,
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map_or(String::new(), |v| format!("{v}"))
}

/// Per-network computation shared by every order in the sweep.
fn sweep_network(
    config: &SweepConfig,
    sigma_idx: usize,
    net_idx: usize,
    catalogs: Option<&CatalogSet>,
) -> Vec<SweepRow> {
    let sigma_w = config.sigma_w_grid[sigma_idx];
    let seed = derive_seed(config.seed, sigma_idx as u64, net_idx as u64);
    let bm = sk_random(config.n, sigma_w, config.sigma_theta, seed);
    let n_max = config.orders.iter().max().copied().unwrap_or(2) - 1;
    let exact = (bm.n() <= MAX_EXACT_UNITS)
        .then(|| exact_log_partition(&bm).ok())
        .flatten();
    let corr_exact = (bm.n() <= MAX_EXACT_UNITS)
        .then(|| exact_correlation(&bm, 0, 1).ok())
        .flatten();

    let prepared =
        PreparedInstance::new(&bm, n_max, config.evaluator_path, config.mf_start, catalogs);
    config
        .orders
        .iter()
        .map(|&order| {
            let mut row = SweepRow {
                seed,
                sigma_w,
                order,
                log_z_exact: exact,
                log_bound: None,
                rel_error: None,
                corr_exact,
                corr_approx: None,
                mf_start: config.mf_start,
                converged: false,
            };
            if let Ok(prepared) = &prepared {
                row.converged = prepared.state.converged();
                if let Ok(bound) = prepared.bound(order) {
                    row.log_bound = Some(bound.log_bound);
                    row.rel_error = exact.and_then(|z| relative_error(bound.log_bound, z).ok());
                }
                row.corr_approx = approx_correlation(
                    &bm,
                    0,
                    1,
                    order,
                    config.evaluator_path,
                    config.mf_start,
                    catalogs,
                )
                .ok();
            }
            row
        })
        .collect()
}

/// Aggregate statistics for one `(sigma_w, order)` sweep point.
#[derive(Debug, Clone)]
struct SweepAggregate {
    sigma_w: f64,
    order: usize,
    networks: usize,
    groups: usize,
    mean_rel_error: f64,
    stderr_rel_error: f64,
    mean_sq_corr_error: f64,
    stderr_sq_corr_error: f64,
}

/// Mean over every sample plus the standard deviation of `groups` contiguous
/// group means — the error-bar construction used throughout the sweeps.
fn grouped_stats(samples: &[f64], groups: usize) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let groups = groups.min(n);
    if groups < 2 {
        return (mean, 0.0);
    }
    let mut group_means = Vec::with_capacity(groups);
    for g in 0..groups {
        let lo = g * n / groups;
        let hi = (g + 1) * n / groups;
        let slice = &samples[lo..hi];
        group_means.push(slice.iter().sum::<f64>() / slice.len() as f64);
    }
    let gm = group_means.iter().sum::<f64>() / groups as f64;
    let var = group_means.iter().map(|m| (m - gm).powi(2)).sum::<f64>() / (groups - 1) as f64;
    (mean, var.sqrt())
}

pub struct SweepOutput {
    pub rows_path: std::path::PathBuf,
    pub aggregate_path: std::path::PathBuf,
}

/// Runs a full sweep: one CSV row per (sigma_w, order, network), plus an
/// aggregate file with grouped means. Networks are independent and run
/// concurrently; rows are buffered and written in configuration order, so
/// identical config and seed give byte-identical output.
pub fn run_sweep(config: &SweepConfig, out_prefix: &Path) -> Result<SweepOutput> {
    config.validate()?;
    let max_order = config.orders.iter().max().copied().unwrap_or(2);
    let catalogs = match config.evaluator_path {
        EvaluatorPath::Graph => Some(CatalogSet::generate((max_order - 1).max(2))?),
        EvaluatorPath::BruteForce => None,
    };
    run_sweep_with_catalogs(config, out_prefix, catalogs.as_ref())
}

/// Same as [`run_sweep`] with externally supplied catalogs (for example from
/// files generated by `catalog`).
pub fn run_sweep_with_catalogs(
    config: &SweepConfig,
    out_prefix: &Path,
    catalogs: Option<&CatalogSet>,
) -> Result<SweepOutput> {
    config.validate()?;
    let tasks: Vec<(usize, usize)> = (0..config.sigma_w_grid.len())
        .flat_map(|si| (0..config.networks_per_point).map(move |ni| (si, ni)))
        .collect();
    let per_network: Vec<Vec<SweepRow>> = tasks
        .par_iter()
        .map(|&(si, ni)| sweep_network(config, si, ni, catalogs))
        .collect();

    let mut metadata = String::new();
    writeln!(
        metadata,
        "# config: {}",
        serde_json::to_string(config).expect("config serialization")
    )
    .unwrap();
    writeln!(
        metadata,
        "# rng: ChaCha12, per-network seed = splitmix64(seed, sigma_index, network_index)"
    )
    .unwrap();
    writeln!(
        metadata,
        "# mean field: tol = 1e-12, max_iter = 10000, damping = 0.5"
    )
    .unwrap();

    let rows_path = out_prefix.with_extension("rows.csv");
    let mut rows_file = std::io::BufWriter::new(std::fs::File::create(&rows_path)?);
    write!(rows_file, "{metadata}")?;
    writeln!(
        rows_file,
        "seed,sigma_w,K,log_z_exact,log_bound,rel_error,corr_exact_12,corr_approx_12,mf_start,converged"
    )?;
    for rows in &per_network {
        for row in rows {
            writeln!(
                rows_file,
                "{},{},{},{},{},{},{},{},{},{}",
                row.seed,
                row.sigma_w,
                row.order,
                fmt_opt(row.log_z_exact),
                fmt_opt(row.log_bound),
                fmt_opt(row.rel_error),
                fmt_opt(row.corr_exact),
                fmt_opt(row.corr_approx),
                row.mf_start,
                row.converged
            )?;
        }
    }
    rows_file.flush()?;

    // Aggregates per (sigma_w, order) in configuration order.
    let mut aggregates = Vec::new();
    for (si, &sigma_w) in config.sigma_w_grid.iter().enumerate() {
        for &order in &config.orders {
            let mut rel_errors = Vec::new();
            let mut sq_corr_errors = Vec::new();
            for ni in 0..config.networks_per_point {
                let rows = &per_network[si * config.networks_per_point + ni];
                let row = rows.iter().find(|r| r.order == order).unwrap();
                if let Some(err) = row.rel_error {
                    rel_errors.push(err);
                }
                if let (Some(exact), Some(approx)) = (row.corr_exact, row.corr_approx) {
                    sq_corr_errors.push((approx - exact).powi(2));
                }
            }
            let (mean_rel, stderr_rel) = grouped_stats(&rel_errors, config.group_count);
            let (mean_sq, stderr_sq) = grouped_stats(&sq_corr_errors, config.group_count);
            aggregates.push(SweepAggregate {
                sigma_w,
                order,
                networks: rel_errors.len(),
                groups: config.group_count,
                mean_rel_error: mean_rel,
                stderr_rel_error: stderr_rel,
                mean_sq_corr_error: mean_sq,
                stderr_sq_corr_error: stderr_sq,
            });
        }
    }
    let aggregate_path = out_prefix.with_extension("agg.csv");
    let mut agg_file = std::io::BufWriter::new(std::fs::File::create(&aggregate_path)?);
    write!(agg_file, "{metadata}")?;
    writeln!(
        agg_file,
        "sigma_w,K,networks,groups,mean_rel_error,stderr_rel_error,mean_sq_corr_error,stderr_sq_corr_error"
    )?;
    for agg in &aggregates {
        writeln!(
            agg_file,
            "{},{},{},{},{},{},{},{}",
            agg.sigma_w,
            agg.order,
            agg.networks,
            agg.groups,
            agg.mean_rel_error,
            agg.stderr_rel_error,
            agg.mean_sq_corr_error,
            agg.stderr_sq_corr_error
        )?;
    }
    agg_file.flush()?;

    Ok(SweepOutput {
        rows_path,
        aggregate_path,
    })
}

/// Writes a zero-threshold SK instance to a network file; convenience used by
/// docs and tests.
pub fn write_sk_network(
    n: usize,
    sigma_w: f64,
    sigma_theta: f64,
    seed: u64,
    path: &Path,
) -> Result<()> {
    sk_random(n, sigma_w, sigma_theta, seed).save(path)
}

/// Reports whether the zero fixed point attracts plain iteration for this
/// machine (diagnostic used alongside zero-start sweeps).
pub fn zero_point_is_attractor(bm: &BoltzmannMachine) -> Result<bool> {
    let zero = solve_mean_field(bm, MfInit::Zero, &MfOptions::default())?;
    Ok(mean_field_jacobian_radius(bm, zero.m()) < 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn tiny_config() -> SweepConfig {
        SweepConfig {
            n: 6,
            sigma_theta: 0.2,
            sigma_w_grid: vec![0.3, 1.0],
            orders: vec![2, 4],
            networks_per_point: 3,
            seed: 99,
            mf_start: MfStart::Standard,
            evaluator_path: EvaluatorPath::Graph,
            group_count: 3,
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let dir = tempdir().unwrap();
        let config = tiny_config();
        let out1 = run_sweep(&config, &dir.path().join("a")).unwrap();
        let out2 = run_sweep(&config, &dir.path().join("b")).unwrap();
        assert_eq!(
            std::fs::read(&out1.rows_path).unwrap(),
            std::fs::read(&out2.rows_path).unwrap()
        );
        assert_eq!(
            std::fs::read(&out1.aggregate_path).unwrap(),
            std::fs::read(&out2.aggregate_path).unwrap()
        );
    }

    #[test]
    fn sweep_rows_are_complete_and_valid() {
        let dir = tempdir().unwrap();
        let config = tiny_config();
        let out = run_sweep(&config, &dir.path().join("s")).unwrap();
        let text = std::fs::read_to_string(&out.rows_path).unwrap();
        let data_rows: Vec<&str> = text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("seed"))
            .collect();
        assert_eq!(data_rows.len(), 2 * 2 * 3);
        for row in data_rows {
            let fields: Vec<&str> = row.split(',').collect();
            assert_eq!(fields.len(), 10);
            let rel: f64 = fields[5].parse().unwrap();
            assert!(rel >= -1e-9, "bound violation recorded in sweep: {row}");
            assert_eq!(fields[8], "standard");
        }
    }

    #[test]
    fn empty_sigma_grid_is_rejected() {
        let mut config = tiny_config();
        config.sigma_w_grid.clear();
        let dir = tempdir().unwrap();
        assert!(matches!(
            run_sweep(&config, &dir.path().join("x")),
            Err(Error::InvalidConfig { .. })
        ));
    }

    #[test]
    fn config_round_trips_with_defaults() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(
            &path,
            r#"{"N": 6, "sigma_theta": 0.1, "sigma_w_grid": [0.5], "orders": [2],
               "networks_per_point": 20, "seed": 7}"#,
        )
        .unwrap();
        let config = SweepConfig::load(&path).unwrap();
        assert_eq!(config.mf_start, MfStart::Standard);
        assert_eq!(config.evaluator_path, EvaluatorPath::Graph);
        assert_eq!(config.group_count, 10);
        // group_count larger than the ensemble is caught by validation.
        let mut bad = config;
        bad.networks_per_point = 2;
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig { .. })));
    }

    #[test]
    fn catalog_summary_runs() {
        let dir = tempdir().unwrap();
        let mut buffer = Vec::new();
        run_catalog(4, dir.path(), &mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        assert!(text.contains("order 2: 1 partitions"));
        assert!(text.contains("order 4: 5 partitions (3+2)"));
        assert!(dir.path().join("order_3.json").exists());
    }

    #[test]
    fn bound_report_on_zero_weight_network() {
        let dir = tempdir().unwrap();
        let network = dir.path().join("net.json");
        BoltzmannMachine::with_zero_weights(vec![0.4, -0.8, 0.1])
            .save(&network)
            .unwrap();
        let catalog_dir = dir.path().join("catalogs");
        let mut sink = Vec::new();
        run_catalog(4, &catalog_dir, &mut sink).unwrap();
        let mut buffer = Vec::new();
        run_bound(
            &network,
            4,
            EvaluatorPath::Graph,
            MfStart::Standard,
            &catalog_dir,
            &mut buffer,
        )
        .unwrap();
        let text = String::from_utf8(buffer).unwrap();
        assert!(text.contains("relative error E = 0"), "{text}");
    }

    #[test]
    fn bound_reports_missing_catalog_order() {
        let dir = tempdir().unwrap();
        let network = dir.path().join("net.json");
        write_sk_network(5, 1.0, 0.2, 3, &network).unwrap();
        let catalog_dir = dir.path().join("catalogs");
        let mut sink = Vec::new();
        run_catalog(3, &catalog_dir, &mut sink).unwrap();
        let mut buffer = Vec::new();
        match run_bound(
            &network,
            6,
            EvaluatorPath::Graph,
            MfStart::Standard,
            &catalog_dir,
            &mut buffer,
        ) {
            Err(Error::MissingCatalog { order: 4 }) => {}
            other => panic!("expected missing catalog for order 4, got {other:?}"),
        }
    }
}
