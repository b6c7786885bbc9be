//! Assembly of the optimised lower bound on `log Z`:
//! `log Z >= log Z~ + log sum_n A_{K;n} <dH^n>` with all variational
//! parameters at their analytic optimum, plus the derived relative-error and
//! correlation estimates.

use crate::error::{Error, Result};
use crate::graphs::CatalogSet;
use crate::model::{
    brute_force_delta_h_moments, log_z_tilde, solve_mean_field, BoltzmannMachine, MeanFieldState,
    MfInit, MfOptions, MomentVector,
};
use crate::numeric::CompensatedSum;
use crate::poly_bounds::{build_coefficients, optimal_mus, BoundPolynomial};
use serde::{Deserialize, Serialize};

/// How `<dH^n>` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvaluatorPath {
    /// Variable elimination over the partition catalogs, `O(N^pi(n))`.
    Graph,
    /// Full `2^N` enumeration; required above the catalogued orders and for
    /// states that violate the mean-field equations.
    #[serde(rename = "brute")]
    BruteForce,
}

impl std::fmt::Display for EvaluatorPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvaluatorPath::Graph => write!(f, "graph"),
            EvaluatorPath::BruteForce => write!(f, "brute"),
        }
    }
}

/// Which mean-field solution the bound is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MfStart {
    Standard,
    Zero,
}

impl MfStart {
    fn init(self) -> MfInit {
        match self {
            MfStart::Standard => MfInit::Standard,
            MfStart::Zero => MfInit::Zero,
        }
    }
}

impl std::fmt::Display for MfStart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MfStart::Standard => write!(f, "standard"),
            MfStart::Zero => write!(f, "zero"),
        }
    }
}

/// Diagnostics attached to every bound: the raw inner sum
/// `sum_n A_{K;n} <dH^n>` and the ratio of its largest term to its value, a
/// flatness indicator that grows when the reference distribution starves the
/// expansion.
#[derive(Debug, Clone, Copy)]
pub struct BoundDiagnostics {
    pub inner_sum: f64,
    pub dominance_ratio: f64,
}

/// An optimised lower bound on `log Z` for one instance and order.
#[derive(Debug, Clone)]
pub struct BoundResult {
    pub order: usize,
    /// `log Z~ + ln(inner sum)`; negative infinity when the inner sum is not
    /// positive (see [`BoundResult::is_degenerate`]).
    pub log_bound: f64,
    pub log_z_tilde: f64,
    /// Optimised variational parameters, `mus[k/2] = mu_k`.
    pub mus: Vec<f64>,
    pub moments: MomentVector,
    pub path_used: EvaluatorPath,
    pub mean_field: MeanFieldState,
    pub diagnostics: BoundDiagnostics,
}

impl BoundResult {
    /// True when the inner sum came out non-positive, which only happens far
    /// outside the bound's useful regime; `log_bound` is then the flagged
    /// negative infinity rather than a NaN.
    pub fn is_degenerate(&self) -> bool {
        !self.log_bound.is_finite()
    }
}

/// Inner sum `sum_n A_{K;n} <dH^n>` with compensation, plus the magnitude of
/// its dominant term.
pub fn inner_sum(poly: &BoundPolynomial, moments: &[f64]) -> (f64, f64) {
    let mut acc = CompensatedSum::new();
    let mut largest = 0.0f64;
    for (n, &a) in poly.coeffs().iter().enumerate() {
        let term = a * moments[n];
        largest = largest.max(term.abs());
        acc.add(term);
    }
    (acc.value(), largest)
}

/// A mean-field solution with its moments, ready to produce bounds for any
/// order up to the moment depth. Solving and moment evaluation happen once;
/// per-order optimisation is cheap.
#[derive(Debug, Clone)]
pub struct PreparedInstance {
    pub state: MeanFieldState,
    pub moments: MomentVector,
    pub log_z_tilde: f64,
    pub path_used: EvaluatorPath,
}

impl PreparedInstance {
    /// Solves the mean field and evaluates `<dH^n>` up to `n_max`. A graph
    /// request silently routes to brute force when the state violates the
    /// mean-field equations (the expansion requires them).
    pub fn new(
        bm: &BoltzmannMachine,
        n_max: usize,
        path: EvaluatorPath,
        mf_start: MfStart,
        catalogs: Option<&CatalogSet>,
    ) -> Result<Self> {
        let state = solve_mean_field(bm, mf_start.init(), &MfOptions::default())?;
        Self::with_state(bm, n_max, path, state, catalogs)
    }

    /// Same, from an already-solved state.
    pub fn with_state(
        bm: &BoltzmannMachine,
        n_max: usize,
        path: EvaluatorPath,
        state: MeanFieldState,
        catalogs: Option<&CatalogSet>,
    ) -> Result<Self> {
        let effective = if path == EvaluatorPath::Graph && !state.converged() {
            EvaluatorPath::BruteForce
        } else {
            path
        };
        let (state, moments) = match effective {
            EvaluatorPath::Graph => {
                let catalogs = catalogs.ok_or_else(|| Error::InvalidConfig {
                    reason: "graph path requires partition catalogs".into(),
                })?;
                let state = state.with_moment_table(n_max.max(2))?;
                let moments = crate::evaluator::delta_h_moments_graph(bm, &state, catalogs, n_max)?;
                (state, moments)
            }
            EvaluatorPath::BruteForce => {
                let moments = brute_force_delta_h_moments(bm, &state, n_max)?;
                (state, moments)
            }
        };
        let log_z_tilde = log_z_tilde(&state, bm);
        Ok(Self {
            state,
            moments,
            log_z_tilde,
            path_used: effective,
        })
    }

    /// The optimised order-`order` bound from the prepared moments.
    pub fn bound(&self, order: usize) -> Result<BoundResult> {
        if self.moments.n_max() + 1 < order {
            return Err(Error::MissingMoments {
                needed: order - 1,
                got: self.moments.n_max() + 1,
            });
        }
        let moments = &self.moments.values()[..order];
        let mus = optimal_mus(moments, order)?;
        let poly = build_coefficients(&mus, order)?;
        let (inner, largest) = inner_sum(&poly, moments);
        let (log_bound, dominance_ratio) = if inner > 0.0 {
            (self.log_z_tilde + inner.ln(), largest / inner)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        Ok(BoundResult {
            order,
            log_bound,
            log_z_tilde: self.log_z_tilde,
            mus,
            moments: self.moments.clone(),
            path_used: self.path_used,
            mean_field: self.state.clone(),
            diagnostics: BoundDiagnostics {
                inner_sum: inner,
                dominance_ratio,
            },
        })
    }
}

/// Solves the mean field per `mf_start`, computes `<dH^n>` up to `order - 1`
/// along `path`, optimises every variational parameter analytically and
/// assembles the lower bound on `log Z`.
pub fn lower_bound_log_z(
    bm: &BoltzmannMachine,
    order: usize,
    path: EvaluatorPath,
    mf_start: MfStart,
    catalogs: Option<&CatalogSet>,
) -> Result<BoundResult> {
    if order < 2 || order % 2 != 0 {
        return Err(Error::InvalidOrder {
            got: order,
            max: crate::poly_bounds::MAX_ORDER,
        });
    }
    PreparedInstance::new(bm, order - 1, path, mf_start, catalogs)?.bound(order)
}

/// The bound-quality metric `E = 1 - log_bound / log_z`.
pub fn relative_error(log_bound: f64, log_z: f64) -> Result<f64> {
    if log_z == 0.0 {
        return Err(Error::UndefinedMetric);
    }
    Ok(1.0 - log_bound / log_z)
}

/// Estimates `<s_i s_j>` as the central finite difference of the optimised
/// log-bound with respect to `w_ij`, with the mean field re-solved at each
/// perturbation.
pub fn approx_correlation(
    bm: &BoltzmannMachine,
    i: usize,
    j: usize,
    order: usize,
    path: EvaluatorPath,
    mf_start: MfStart,
    catalogs: Option<&CatalogSet>,
) -> Result<f64> {
    if i == j || i >= bm.n() || j >= bm.n() {
        return Err(Error::InvalidConfig {
            reason: format!("correlation needs two distinct units, got ({i}, {j})"),
        });
    }
    let eps = 1e-5 * bm.weight(i, j).abs().max(1.0);
    let evaluate = |delta: f64| -> Result<f64> {
        let mut perturbed = bm.clone();
        perturbed.set_symmetric_weight(i, j, bm.weight(i, j) + delta);
        let result = lower_bound_log_z(&perturbed, order, path, mf_start, catalogs)?;
        if result.is_degenerate() {
            return Err(Error::NumericFailure {
                reason: format!(
                    "perturbed bound degenerated (inner sum {})",
                    result.diagnostics.inner_sum
                ),
            });
        }
        Ok(result.log_bound)
    };
    let high = evaluate(eps)?;
    let low = evaluate(-eps)?;
    Ok((high - low) / (2.0 * eps))
}
