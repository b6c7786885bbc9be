//! Damped fixed-point solver for the mean-field equations
//! `h_i = theta_i + sum_j w_ij tanh(h_j)` and the per-unit corrected-moment
//! tables built on a solution.

use super::moments::corrected_moments;
use super::BoltzmannMachine;
use crate::error::{Error, Result};

/// Solver settings. The defaults keep the damped iteration stable across the
/// coupling strengths exercised by the experiment sweeps.
#[derive(Debug, Clone)]
pub struct MfOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for MfOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
            damping: 0.5,
        }
    }
}

/// Initial point for the fixed-point iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum MfInit {
    /// Start from `h = theta`. With all-zero thresholds this sits exactly on
    /// the symmetric fixed point `h = 0`; if that point is unstable the
    /// solver escapes it through a deterministic perturbation along the
    /// leading eigenvector of the weight matrix, which recovers the solution
    /// ordinary iteration would find from a generic start.
    Standard,
    /// Start from `h = 0` and accept whatever fixed point the iteration
    /// settles on; with zero thresholds this returns `h = 0` verbatim, a
    /// valid (possibly unstable) solution.
    Zero,
    /// Explicit starting vector.
    Vector(Vec<f64>),
}

/// Per-unit corrected moments `M'_c(m_i)` for degrees `1..=max_degree`.
#[derive(Debug, Clone)]
pub struct MomentTable {
    max_degree: usize,
    /// `per_degree[c - 1][i] = M'_c(m_i)`.
    per_degree: Vec<Vec<f64>>,
}

impl MomentTable {
    pub fn build(m: &[f64], max_degree: usize) -> Result<Self> {
        let mut per_degree = vec![vec![0.0; m.len()]; max_degree];
        for (i, &mi) in m.iter().enumerate() {
            let corrected = corrected_moments(mi, max_degree)?;
            for c in 1..=max_degree {
                per_degree[c - 1][i] = corrected[c - 1];
            }
        }
        Ok(Self {
            max_degree,
            per_degree,
        })
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Values `M'_degree(m_i)` over all units, or `None` if the table was not
    /// built deep enough.
    pub fn degree(&self, degree: usize) -> Option<&[f64]> {
        if degree == 0 || degree > self.max_degree {
            None
        } else {
            Some(&self.per_degree[degree - 1])
        }
    }
}

/// A mean-field solution (or best attempt): fields, magnetizations, the
/// fixed-point defect and optionally the corrected-moment table.
#[derive(Debug, Clone)]
pub struct MeanFieldState {
    h: Vec<f64>,
    m: Vec<f64>,
    residual: f64,
    converged: bool,
    iterations: usize,
    moments_table: Option<MomentTable>,
}

impl MeanFieldState {
    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    /// Max-norm of `h - theta - W tanh(h)`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn moments_table(&self) -> Option<&MomentTable> {
        self.moments_table.as_ref()
    }

    /// Extends the state with corrected moments up to `max_degree`.
    pub fn with_moment_table(mut self, max_degree: usize) -> Result<Self> {
        self.moments_table = Some(MomentTable::build(&self.m, max_degree)?);
        Ok(self)
    }
}

fn residual_of(bm: &BoltzmannMachine, h: &[f64], m: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..bm.n() {
        let mut field = bm.thresholds()[i];
        let row = bm.weights_row(i);
        for j in 0..bm.n() {
            field += row[j] * m[j];
        }
        worst = worst.max((h[i] - field).abs());
    }
    worst
}

fn iterate(bm: &BoltzmannMachine, mut h: Vec<f64>, opts: &MfOptions) -> MeanFieldState {
    let n = bm.n();
    let mut m: Vec<f64> = h.iter().map(|x| x.tanh()).collect();
    let mut iterations = 0;
    loop {
        let residual = residual_of(bm, &h, &m);
        if residual <= opts.tol {
            return MeanFieldState {
                h,
                m,
                residual,
                converged: true,
                iterations,
                moments_table: None,
            };
        }
        if iterations >= opts.max_iter {
            return MeanFieldState {
                h,
                m,
                residual,
                converged: false,
                iterations,
                moments_table: None,
            };
        }
        for i in 0..n {
            let mut field = bm.thresholds()[i];
            let row = bm.weights_row(i);
            for j in 0..n {
                field += row[j] * m[j];
            }
            h[i] = (1.0 - opts.damping) * h[i] + opts.damping * field;
        }
        for i in 0..n {
            m[i] = h[i].tanh();
        }
        iterations += 1;
    }
}

/// Spectral radius of the undamped fixed-point Jacobian `W diag(1 - m^2)` at
/// the given magnetizations; below one means the point attracts plain
/// iteration.
pub fn mean_field_jacobian_radius(bm: &BoltzmannMachine, m: &[f64]) -> f64 {
    let n = bm.n();
    if n == 0 {
        return 0.0;
    }
    // Similar to the symmetric D^1/2 W D^1/2, so power iteration applies.
    let d: Vec<f64> = m.iter().map(|mi| (1.0 - mi * mi).sqrt()).collect();
    let mut x: Vec<f64> = (0..n)
        .map(|i| if i % 2 == 0 { 1.0 } else { -0.7 } / (n as f64).sqrt())
        .collect();
    let mut radius = 0.0;
    for _ in 0..200 {
        let mut y = vec![0.0; n];
        for i in 0..n {
            let row = bm.weights_row(i);
            let mut acc = 0.0;
            for j in 0..n {
                acc += d[i] * row[j] * d[j] * x[j];
            }
            y[i] = acc;
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for v in &mut y {
            *v /= norm;
        }
        radius = norm;
        x = y;
    }
    radius
}

fn leading_direction(bm: &BoltzmannMachine) -> Vec<f64> {
    let n = bm.n();
    let mut x: Vec<f64> = (0..n)
        .map(|i| if i % 2 == 0 { 1.0 } else { -0.7 } / (n as f64).sqrt())
        .collect();
    for _ in 0..200 {
        let mut y = vec![0.0; n];
        for i in 0..n {
            let row = bm.weights_row(i);
            y[i] = row.iter().zip(&x).map(|(w, v)| w * v).sum();
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return x;
        }
        for v in &mut y {
            *v /= norm;
        }
        x = y;
    }
    x
}

/// Damped fixed-point iteration `h <- (1 - damping) h + damping (theta + W tanh h)`.
/// Non-convergence is reported through the returned flag, not an error.
pub fn solve_mean_field(
    bm: &BoltzmannMachine,
    init: MfInit,
    opts: &MfOptions,
) -> Result<MeanFieldState> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidConfig {
            reason: "mean-field tolerance must be positive".into(),
        });
    }
    if !(0.0..1.0).contains(&opts.damping) || opts.damping == 0.0 {
        return Err(Error::InvalidConfig {
            reason: "mean-field damping must lie in (0, 1)".into(),
        });
    }
    let n = bm.n();
    let h0 = match &init {
        MfInit::Standard => bm.thresholds().to_vec(),
        MfInit::Zero => vec![0.0; n],
        MfInit::Vector(v) => {
            if v.len() != n {
                return Err(Error::InvalidConfig {
                    reason: format!("init vector has {} entries for {n} units", v.len()),
                });
            }
            v.clone()
        }
    };
    let state = iterate(bm, h0, opts);

    // The standard start from all-zero thresholds lands exactly on the
    // symmetric point h = 0. When that point repels plain iteration, generic
    // starts would drift to a symmetry-broken solution instead; seek it from
    // a deterministic perturbation.
    if init == MfInit::Standard
        && bm.thresholds().iter().all(|&t| t == 0.0)
        && state.converged
        && state.h.iter().all(|&x| x == 0.0)
        && mean_field_jacobian_radius(bm, &state.m) > 1.0
    {
        let direction = leading_direction(bm);
        let perturbed: Vec<f64> = direction.iter().map(|v| 0.5 * v).collect();
        let escaped = iterate(bm, perturbed, opts);
        if escaped.h.iter().any(|&x| x.abs() > opts.tol.sqrt()) {
            return Ok(escaped);
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sk_random;

    #[test]
    fn zero_weights_solve_immediately() {
        let bm = BoltzmannMachine::with_zero_weights(vec![0.3, -1.2, 0.0]);
        let state = solve_mean_field(&bm, MfInit::Standard, &MfOptions::default()).unwrap();
        assert!(state.converged());
        assert_eq!(state.iterations(), 0);
        assert_eq!(state.h(), bm.thresholds());
        assert_eq!(state.residual(), 0.0);
    }

    #[test]
    fn zero_start_with_zero_thresholds_is_verbatim() {
        let bm = sk_random(8, 2.0, 0.0, 5);
        let bm = BoltzmannMachine::from_upper_triangle(vec![0.0; 8], bm.upper_triangle()).unwrap();
        let state = solve_mean_field(&bm, MfInit::Zero, &MfOptions::default()).unwrap();
        assert!(state.converged());
        assert!(state.h().iter().all(|&x| x == 0.0));
        assert_eq!(state.residual(), 0.0);
    }

    #[test]
    fn symmetric_pair_matches_scalar_root() {
        // N = 2, theta = 0, w12 = 2, start (1, 1): fixed point h* = 2 tanh h*.
        let mut bm = BoltzmannMachine::with_zero_weights(vec![0.0, 0.0]);
        bm.set_symmetric_weight(0, 1, 2.0);
        let state =
            solve_mean_field(&bm, MfInit::Vector(vec![1.0, 1.0]), &MfOptions::default()).unwrap();
        assert!(state.converged());
        // Bisection oracle for h = 2 tanh h on (0.1, 3).
        let f = |h: f64| h - 2.0 * h.tanh();
        let (mut lo, mut hi) = (1.0f64, 3.0f64);
        assert!(f(lo) < 0.0 && f(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        assert!((state.h()[0] - root).abs() < 1e-9);
        assert!((state.h()[1] - root).abs() < 1e-9);
    }

    #[test]
    fn converged_states_satisfy_fixed_point() {
        for seed in 0..5 {
            let bm = sk_random(10, 1.0, 0.2, seed);
            let state = solve_mean_field(&bm, MfInit::Standard, &MfOptions::default()).unwrap();
            assert!(state.converged(), "seed {seed}");
            assert!(state.residual() <= 1e-12);
            for (h, m) in state.h().iter().zip(state.m()) {
                assert_eq!(*m, h.tanh());
                assert!(m.abs() < 1.0);
            }
        }
    }

    #[test]
    fn standard_start_escapes_unstable_symmetric_point() {
        // Strong couplings, zero thresholds: h = 0 repels plain iteration
        // (Jacobian radius > 1), so the standard start must land elsewhere.
        let base = sk_random(10, 2.0, 0.0, 77);
        let bm =
            BoltzmannMachine::from_upper_triangle(vec![0.0; 10], base.upper_triangle()).unwrap();
        assert!(mean_field_jacobian_radius(&bm, &[0.0; 10]) > 1.0);
        let standard = solve_mean_field(&bm, MfInit::Standard, &MfOptions::default()).unwrap();
        assert!(standard.converged());
        assert!(standard.h().iter().any(|&x| x.abs() > 1e-3));
        // The explicit zero start still reports the symmetric solution.
        let zero = solve_mean_field(&bm, MfInit::Zero, &MfOptions::default()).unwrap();
        assert!(zero.h().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn weak_couplings_keep_symmetric_point() {
        let base = sk_random(10, 0.3, 0.0, 78);
        let bm =
            BoltzmannMachine::from_upper_triangle(vec![0.0; 10], base.upper_triangle()).unwrap();
        assert!(mean_field_jacobian_radius(&bm, &[0.0; 10]) < 1.0);
        let standard = solve_mean_field(&bm, MfInit::Standard, &MfOptions::default()).unwrap();
        assert!(standard.h().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn moment_table_matches_direct_moments() {
        let bm = sk_random(6, 0.8, 0.3, 11);
        let state = solve_mean_field(&bm, MfInit::Standard, &MfOptions::default())
            .unwrap()
            .with_moment_table(6)
            .unwrap();
        let table = state.moments_table().unwrap();
        assert_eq!(table.max_degree(), 6);
        for (i, &mi) in state.m().iter().enumerate() {
            let direct = corrected_moments(mi, 6).unwrap();
            for c in 1..=6 {
                assert_eq!(table.degree(c).unwrap()[i], direct[c - 1]);
            }
        }
        assert!(table.degree(7).is_none());
        assert!(table.degree(0).is_none());
    }

    #[test]
    fn rejects_bad_options() {
        let bm = BoltzmannMachine::with_zero_weights(vec![0.0]);
        let bad_tol = MfOptions {
            tol: 0.0,
            ..Default::default()
        };
        assert!(solve_mean_field(&bm, MfInit::Zero, &bad_tol).is_err());
        let bad_damping = MfOptions {
            damping: 1.0,
            ..Default::default()
        };
        assert!(solve_mean_field(&bm, MfInit::Zero, &bad_damping).is_err());
        assert!(
            solve_mean_field(&bm, MfInit::Vector(vec![0.0, 0.0]), &MfOptions::default()).is_err()
        );
    }

    #[test]
    fn unconverged_is_flagged_not_fatal() {
        let bm = sk_random(8, 3.0, 0.1, 3);
        let opts = MfOptions {
            max_iter: 1,
            ..Default::default()
        };
        let state = solve_mean_field(&bm, MfInit::Standard, &opts).unwrap();
        assert!(!state.converged());
        assert!(state.residual() > 1e-12);
    }
}
