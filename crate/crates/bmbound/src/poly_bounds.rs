//! Odd-order polynomial lower bounds on the exponential function.
//!
//! A bound of order `K` (even) is the degree `K-1` polynomial
//! `B_K(x) = sum_n A_{K;n} x^n <= exp(x)` for all real `x`. It is produced by
//! repeatedly integrating the trivial bound `exp(x) >= 0` twice, each double
//! integration pinning the two constants so that `B` touches `exp` at a
//! variational point `mu_k` (k = 0, 2, ..., K-2). Every variational parameter
//! has a closed-form optimum given the moments `<x^n>` of the argument
//! distribution, so no iterative optimisation is ever needed.

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Largest supported bound order. Above this the coefficient recursion mixes
/// factorially scaled terms that start losing double precision.
pub const MAX_ORDER: usize = 18;

/// A variational parameter slot. `NegInfinity` is the algebraic limit
/// `exp(mu) = 0`, used by order embedding; it never participates in float
/// arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuParam {
    Finite(f64),
    NegInfinity,
}

impl MuParam {
    pub fn as_finite(&self) -> Option<f64> {
        match self {
            MuParam::Finite(v) => Some(*v),
            MuParam::NegInfinity => None,
        }
    }
}

/// One odd-order lower bound on `exp`, with its coefficients and the
/// variational parameters that produced them.
#[derive(Debug, Clone)]
pub struct BoundPolynomial {
    order: usize,
    mus: Vec<MuParam>,
    coeffs: Vec<f64>,
}

impl BoundPolynomial {
    /// Bound order `K` (even); the polynomial degree is `K - 1`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficients `A_{K;n}` for `n = 0..K`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn mus(&self) -> &[MuParam] {
        &self.mus
    }

    /// Evaluates the polynomial at `x` in nested (Horner) form.
    pub fn evaluate(&self, x: f64) -> f64 {
        horner(&self.coeffs, x)
    }

    /// `<B_K(dH)> = sum_n A_{K;n} <dH^n>` for raw power moments
    /// `moments[n] = <dH^n>`, accumulated with compensation.
    pub fn expected_value(&self, moments: &[f64]) -> Result<f64> {
        check_moment_len(moments, self.order)?;
        let mut acc = CompensatedSum::new();
        for (n, &a) in self.coeffs.iter().enumerate() {
            acc.add(a * moments[n]);
        }
        Ok(acc.value())
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn check_order(order: usize) -> Result<()> {
    if order < 2 || order % 2 != 0 || order > MAX_ORDER {
        return Err(Error::InvalidOrder {
            got: order,
            max: MAX_ORDER,
        });
    }
    Ok(())
}

fn check_moment_len(moments: &[f64], order: usize) -> Result<()> {
    if moments.len() < order {
        return Err(Error::MissingMoments {
            needed: order - 1,
            got: moments.len(),
        });
    }
    if (moments[0] - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidMoments {
            reason: format!("<dH^0> must be 1, got {}", moments[0]),
        });
    }
    Ok(())
}

/// Advances the coefficient recursion by one level: given the coefficients of
/// `B_k` (degree `k-1`), writes those of `B_{k+2}` touching `exp` at `mu`.
///
/// `coeffs` holds `len` live entries and has room for `len + 2`.
fn advance_level(coeffs: &mut [f64], len: usize, mu: MuParam) -> usize {
    match mu {
        MuParam::Finite(mu) => {
            let exp_mu = mu.exp();
            // Touching-slope and touching-value sums over the old level.
            let mut s1 = 0.0; // sum_n A_n mu^{n+1} / (n+1)
            let mut s2 = 0.0; // sum_n A_n mu^{n+2} / (n+2)
            let mut mu_pow = mu; // mu^{n+1}
            for n in 0..len {
                s1 += coeffs[n] * mu_pow / (n + 1) as f64;
                mu_pow *= mu;
                s2 += coeffs[n] * mu_pow / (n + 2) as f64;
            }
            // Integrate twice: degree shift by 2.
            for n in (0..len).rev() {
                coeffs[n + 2] = coeffs[n] / ((n + 2) * (n + 1)) as f64;
            }
            coeffs[1] = exp_mu - s1;
            coeffs[0] = exp_mu * (1.0 - mu) + s2;
        }
        MuParam::NegInfinity => {
            // exp(mu) = 0 and the previous level is identically zero (the
            // flag only ever occupies a prefix of the parameter list), so the
            // whole new level is zero.
            debug_assert!(coeffs[..len].iter().all(|&c| c == 0.0));
            coeffs[len] = 0.0;
            coeffs[len + 1] = 0.0;
        }
    }
    len + 2
}

/// Coefficients `A_{K;0..K}` for the given parameter list, allowing the
/// embedded `exp(mu) = 0` limit in a leading prefix of slots.
pub fn build_from_params(mus: &[MuParam], order: usize) -> Result<BoundPolynomial> {
    check_order(order)?;
    if mus.len() != order / 2 {
        return Err(Error::InvalidParameter { index: mus.len() });
    }
    let mut seen_finite = false;
    for (slot, mu) in mus.iter().enumerate() {
        match mu {
            MuParam::Finite(v) if v.is_finite() => seen_finite = true,
            MuParam::Finite(_) => return Err(Error::InvalidParameter { index: 2 * slot }),
            MuParam::NegInfinity if seen_finite => {
                return Err(Error::InvalidParameter { index: 2 * slot })
            }
            MuParam::NegInfinity => {}
        }
    }
    let mut coeffs = vec![0.0; order];
    let mut len = 0;
    for mu in mus {
        len = advance_level(&mut coeffs, len, *mu);
    }
    debug_assert_eq!(len, order);
    Ok(BoundPolynomial {
        order,
        mus: mus.to_vec(),
        coeffs,
    })
}

/// Coefficients `A_{K;n}` for finite parameters `mus[k/2] = mu_k`.
pub fn build_coefficients(mus: &[f64], order: usize) -> Result<BoundPolynomial> {
    let params: Vec<MuParam> = mus.iter().map(|&m| MuParam::Finite(m)).collect();
    build_from_params(&params, order)
}

/// One homogeneous recursion step (the exponential source terms absent), used
/// to propagate derivative seed polynomials to the top level.
fn advance_homogeneous(coeffs: &mut [f64], len: usize, mu: f64) -> usize {
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut mu_pow = mu;
    for n in 0..len {
        s1 += coeffs[n] * mu_pow / (n + 1) as f64;
        mu_pow *= mu;
        s2 += coeffs[n] * mu_pow / (n + 2) as f64;
    }
    for n in (0..len).rev() {
        coeffs[n + 2] = coeffs[n] / ((n + 2) * (n + 1)) as f64;
    }
    coeffs[1] = -s1;
    coeffs[0] = s2;
    len + 2
}

/// Propagates a seed polynomial from level `i + 2` up to level `order` using
/// the parameters `mu_{i+2}, ..., mu_{order-2}`.
fn propagate_seed(seed: &[f64], wrt_index: usize, mus: &[f64], order: usize) -> Vec<f64> {
    let mut coeffs = vec![0.0; order];
    coeffs[..seed.len()].copy_from_slice(seed);
    let mut len = wrt_index + 2;
    for k in ((wrt_index + 2)..order).step_by(2) {
        len = advance_homogeneous(&mut coeffs, len, mus[k / 2]);
    }
    debug_assert_eq!(len, order);
    coeffs
}

/// The derivative of `B_K` with respect to one variational parameter,
/// decomposed as `A'_{K;n} = E_i (X_i + mu_i Y_i)` coefficient-wise.
#[derive(Debug, Clone)]
pub struct DerivativeStructure {
    /// Which `mu_i` the derivative is taken with respect to (even).
    pub wrt_index: usize,
    /// Coefficients of `dB_K/dmu_i`.
    pub coeffs_prime: Vec<f64>,
    /// `E_i = exp(mu_i) - B_i(mu_i) >= 0`.
    pub e_value: f64,
    /// Coefficients of `X_i`, the unit-slope seed propagated to the top level.
    pub x_poly: Vec<f64>,
    /// Coefficients of `Y_i`, the unit-value seed; `Y_i(x) < 0` for all `x`.
    pub y_poly: Vec<f64>,
}

/// Builds the derivative structure of `B_order` with respect to `mu_i`,
/// `i = wrt_index`.
pub fn build_derivative(
    mus: &[f64],
    order: usize,
    wrt_index: usize,
) -> Result<DerivativeStructure> {
    check_order(order)?;
    if mus.len() != order / 2 {
        return Err(Error::InvalidParameter { index: mus.len() });
    }
    if let Some(bad) = mus.iter().position(|m| !m.is_finite()) {
        return Err(Error::InvalidParameter { index: 2 * bad });
    }
    if wrt_index % 2 != 0 || wrt_index + 2 > order {
        return Err(Error::InvalidDerivativeIndex {
            index: wrt_index,
            order,
        });
    }
    let mu_i = mus[wrt_index / 2];

    // E_i = exp(mu_i) - B_i(mu_i), with B_0 identically zero.
    let e_value = if wrt_index == 0 {
        mu_i.exp()
    } else {
        let below = build_coefficients(&mus[..wrt_index / 2], wrt_index)?;
        mu_i.exp() - below.evaluate(mu_i)
    };

    let x_poly = propagate_seed(&[0.0, 1.0], wrt_index, mus, order);
    let y_poly = propagate_seed(&[-1.0], wrt_index, mus, order);
    let coeffs_prime = x_poly
        .iter()
        .zip(&y_poly)
        .map(|(x, y)| e_value * (x + mu_i * y))
        .collect();

    Ok(DerivativeStructure {
        wrt_index,
        coeffs_prime,
        e_value,
        x_poly,
        y_poly,
    })
}

/// `X_i` and `Y_i` depend only on parameters above `i`, so a partially filled
/// list (slots below `i` still unset) is enough to build them.
fn stationary_mu(moments: &[f64], mus: &[f64], order: usize, wrt_index: usize) -> Result<f64> {
    let x_poly = propagate_seed(&[0.0, 1.0], wrt_index, mus, order);
    let y_poly = propagate_seed(&[-1.0], wrt_index, mus, order);
    let dot = |poly: &[f64]| -> f64 {
        let mut acc = CompensatedSum::new();
        for (n, &c) in poly.iter().enumerate() {
            acc.add(c * moments[n]);
        }
        acc.value()
    };
    let num = dot(&x_poly);
    let den = dot(&y_poly);
    if den == 0.0 {
        return Err(Error::DegenerateDenominator { index: wrt_index });
    }
    Ok(-num / den)
}

/// Analytically optimal variational parameters for the given raw power
/// moments `moments[n] = <dH^n>` (n = 0..order). A single backward pass:
/// `mu_{K-2}` first, each lower parameter reusing the ones already fixed.
pub fn optimal_mus(moments: &[f64], order: usize) -> Result<Vec<f64>> {
    check_order(order)?;
    check_moment_len(moments, order)?;
    if moments.iter().any(|m| !m.is_finite()) {
        return Err(Error::InvalidMoments {
            reason: "non-finite moment".into(),
        });
    }
    // Zero-variance argument: the bound is already exact with all mu at the
    // Taylor point; the general formulas would hit 0/0.
    if order > 2 && moments[2] == 0.0 {
        return Ok(vec![0.0; order / 2]);
    }
    let mut mus = vec![0.0; order / 2];
    let mut i = order - 2;
    loop {
        mus[i / 2] = stationary_mu(moments, &mus, order, i)?;
        if i == 0 {
            break;
        }
        i -= 2;
    }
    Ok(mus)
}

/// Re-expresses an order-`K` parameter list at order `K + 2` so that the new
/// bound evaluates identically: the leading slot carries the `exp(mu) = 0`
/// limit and every old parameter shifts up one slot.
pub fn embed_next_order(mus: &[MuParam]) -> Vec<MuParam> {
    let mut out = Vec::with_capacity(mus.len() + 1);
    out.push(MuParam::NegInfinity);
    out.extend_from_slice(mus);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    /// Independent closed form for the third-order bound, derived by two
    /// explicit integrations with the touching constants solved directly:
    /// B2 is the tangent at mu0; B3 = int B2 with B3(mu2) = exp(mu2);
    /// B4 = int B3 with B4(mu2) = exp(mu2).
    fn closed_form_order4(mu0: f64, mu2: f64) -> [f64; 4] {
        let a20 = mu0.exp() * (1.0 - mu0);
        let a21 = mu0.exp();
        let c = mu2.exp() - a20 * mu2 - a21 * mu2 * mu2 / 2.0;
        let d = mu2.exp() - c * mu2 - a20 * mu2 * mu2 / 2.0 - a21 * mu2.powi(3) / 6.0;
        [d, c, a20 / 2.0, a21 / 6.0]
    }

    /// Raw power moments of a discrete distribution on `points` with weights
    /// `probs` — a genuine moment sequence for optimiser tests.
    fn discrete_moments(points: &[f64], probs: &[f64], n_max: usize) -> Vec<f64> {
        (0..=n_max)
            .map(|n| {
                points
                    .iter()
                    .zip(probs)
                    .map(|(x, p)| p * x.powi(n as i32))
                    .sum()
            })
            .collect()
    }

    fn expected_for_mus(mus: &[f64], order: usize, moments: &[f64]) -> f64 {
        build_coefficients(mus, order)
            .unwrap()
            .expected_value(moments)
            .unwrap()
    }

    #[test]
    fn tangent_bound_order2() {
        let poly = build_coefficients(&[0.0], 2).unwrap();
        assert_eq!(poly.coeffs(), &[1.0, 1.0]);
        // Touching point: B_2(mu) = exp(mu) exactly.
        for mu in [-3.0, -0.5, 0.0, 1.7] {
            let poly = build_coefficients(&[mu], 2).unwrap();
            assert!((poly.evaluate(mu) - mu.exp()).abs() <= 1e-12 * mu.exp());
        }
    }

    #[test]
    fn taylor_coincidence_at_zero_mus() {
        for order in [2usize, 4, 6, 8, 10] {
            let poly = build_coefficients(&vec![0.0; order / 2], order).unwrap();
            for (n, &c) in poly.coeffs().iter().enumerate() {
                let expect = 1.0 / crate::numeric::factorial(n);
                assert!(
                    (c - expect).abs() <= 1e-15 * expect.max(1.0),
                    "order {order} coeff {n}: {c} vs {expect}"
                );
            }
        }
        let poly = build_coefficients(&[0.0, 0.0], 4).unwrap();
        assert!((poly.evaluate(1.0) - 8.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn order4_matches_independent_closed_form() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..100 {
            let mu0 = rng.random_range(-2.0..2.0);
            let mu2 = rng.random_range(-2.0..2.0);
            let poly = build_coefficients(&[mu0, mu2], 4).unwrap();
            let expect = closed_form_order4(mu0, mu2);
            for (n, (&got, want)) in poly.coeffs().iter().zip(expect).enumerate() {
                assert!(
                    (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                    "mu0={mu0} mu2={mu2} coeff {n}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn bound_property_random_samples() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let order = *[2usize, 4, 6, 8, 10].choose(&mut rng).unwrap();
            let mus: Vec<f64> = (0..order / 2)
                .map(|_| rng.random_range(-2.0..2.0))
                .collect();
            let x: f64 = rng.random_range(-10.0..10.0);
            let poly = build_coefficients(&mus, order).unwrap();
            let value = poly.evaluate(x);
            assert!(
                value <= x.exp() + 1e-12 * x.exp(),
                "order {order} mus {mus:?} x {x}: {value} > {}",
                x.exp()
            );
        }
    }

    #[test]
    fn rejects_bad_orders_and_parameters() {
        assert!(matches!(
            build_coefficients(&[0.0], 3),
            Err(Error::InvalidOrder { .. })
        ));
        assert!(matches!(
            build_coefficients(&[], 0),
            Err(Error::InvalidOrder { .. })
        ));
        assert!(matches!(
            build_coefficients(&[0.0; 10], 20),
            Err(Error::InvalidOrder { .. })
        ));
        assert!(matches!(
            build_coefficients(&[f64::NAN], 2),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            build_coefficients(&[f64::NEG_INFINITY, 0.0], 4),
            Err(Error::InvalidParameter { .. })
        ));
        // Wrong parameter count.
        assert!(build_coefficients(&[0.0], 4).is_err());
    }

    #[test]
    fn derivative_seeds_at_lowest_level() {
        // K = i + 2: the derivative coefficients are exactly the seeds.
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for order in [2usize, 4, 6] {
            let mus: Vec<f64> = (0..order / 2)
                .map(|_| rng.random_range(-1.5..1.5))
                .collect();
            let i = order - 2;
            let d = build_derivative(&mus, order, i).unwrap();
            let mu_i = mus[i / 2];
            assert!((d.coeffs_prime[0] + mu_i * d.e_value).abs() < 1e-12 * d.e_value.max(1.0));
            assert!((d.coeffs_prime[1] - d.e_value).abs() < 1e-12 * d.e_value.max(1.0));
            for &c in &d.coeffs_prime[2..] {
                assert_eq!(c, 0.0);
            }
        }
    }

    #[test]
    fn derivative_vanishes_when_bound_touches() {
        // mus all zero, K = 4, i = 2: E_2 = exp(0) - (1 + 0) = 0.
        let d = build_derivative(&[0.0, 0.0], 4, 2).unwrap();
        assert_eq!(d.e_value, 0.0);
        assert!(d.coeffs_prime.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn derivative_matches_central_difference() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..40 {
            let order = *[4usize, 6, 8].choose(&mut rng).unwrap();
            let mus: Vec<f64> = (0..order / 2)
                .map(|_| rng.random_range(-1.5..1.5))
                .collect();
            let i = 2 * rng.random_range(0..order / 2);
            let d = build_derivative(&mus, order, i).unwrap();
            let eps = 1e-6 * mus[i / 2].abs().max(1.0);
            for _ in 0..4 {
                let x: f64 = rng.random_range(-3.0..3.0);
                let mut hi = mus.clone();
                hi[i / 2] += eps;
                let mut lo = mus.clone();
                lo[i / 2] -= eps;
                let fd = (build_coefficients(&hi, order).unwrap().evaluate(x)
                    - build_coefficients(&lo, order).unwrap().evaluate(x))
                    / (2.0 * eps);
                let analytic = horner(&d.coeffs_prime, x);
                let scale = analytic.abs().max(1.0);
                assert!(
                    (fd - analytic).abs() < 1e-5 * scale,
                    "order {order} i {i} x {x}: fd {fd} vs {analytic}"
                );
            }
        }
    }

    #[test]
    fn derivative_decomposition_holds() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        for _ in 0..50 {
            let order = *[4usize, 6, 8, 10].choose(&mut rng).unwrap();
            let mus: Vec<f64> = (0..order / 2)
                .map(|_| rng.random_range(-2.0..2.0))
                .collect();
            let i = 2 * rng.random_range(0..order / 2);
            let d = build_derivative(&mus, order, i).unwrap();
            assert!(d.e_value >= 0.0, "E_{i} = {} < 0", d.e_value);
            let mu_i = mus[i / 2];
            for n in 0..order {
                let recon = d.e_value * (d.x_poly[n] + mu_i * d.y_poly[n]);
                assert!((d.coeffs_prime[n] - recon).abs() <= 1e-12 * recon.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn y_polynomial_negative_on_dense_grid() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for order in [2usize, 4, 6, 8, 10] {
            for _ in 0..10 {
                let mus: Vec<f64> = (0..order / 2)
                    .map(|_| rng.random_range(-2.0..2.0))
                    .collect();
                for slot in 0..order / 2 {
                    let d = build_derivative(&mus, order, 2 * slot).unwrap();
                    let mut x = -50.0;
                    while x <= 50.0 {
                        let y = horner(&d.y_poly, x);
                        assert!(y < 0.0, "Y_{} at x={x} is {y} (order {order})", 2 * slot);
                        x += 0.25;
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_derivative_index() {
        assert!(matches!(
            build_derivative(&[0.0, 0.0], 4, 1),
            Err(Error::InvalidDerivativeIndex { .. })
        ));
        assert!(matches!(
            build_derivative(&[0.0, 0.0], 4, 4),
            Err(Error::InvalidDerivativeIndex { .. })
        ));
    }

    #[test]
    fn top_parameter_is_the_mean() {
        // mu_{K-2} = <dH> for every order and any distribution.
        let moments = discrete_moments(&[-0.7, 1.3, 2.0], &[0.5, 0.3, 0.2], 12);
        let mean = moments[1];
        for order in [2usize, 4, 6, 8, 10] {
            let mus = optimal_mus(&moments, order).unwrap();
            assert!(
                (mus[order / 2 - 1] - mean).abs() < 1e-12 * mean.abs().max(1.0),
                "order {order}"
            );
        }
    }

    #[test]
    fn order4_with_centered_moments() {
        // <dH> = 0 forces mu_2 = 0 and mu_0 = <dH^3> / (3 <dH^2>).
        let points = [-1.0, 2.0];
        let probs = [2.0 / 3.0, 1.0 / 3.0]; // mean zero
        let moments = discrete_moments(&points, &probs, 4);
        assert!(moments[1].abs() < 1e-15);
        let mus = optimal_mus(&moments, 4).unwrap();
        assert!(mus[1].abs() < 1e-12);
        let expect = moments[3] / (3.0 * moments[2]);
        assert!((mus[0] - expect).abs() < 1e-12 * expect.abs().max(1.0));
    }

    #[test]
    fn zero_distribution_short_circuits() {
        let mut moments = vec![0.0; 12];
        moments[0] = 1.0;
        for order in [2usize, 6, 10] {
            let mus = optimal_mus(&moments, order).unwrap();
            assert!(mus.iter().all(|&m| m == 0.0));
            let poly = build_coefficients(&mus, order).unwrap();
            assert_eq!(poly.coeffs()[0], 1.0);
            assert_eq!(poly.expected_value(&moments).unwrap(), 1.0);
        }
    }

    #[test]
    fn optimal_mus_are_stationary() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        for _ in 0..25 {
            let a = rng.random_range(-2.0..0.0);
            let b = rng.random_range(0.1..2.5);
            let p = rng.random_range(0.15..0.85);
            let moments = discrete_moments(&[a, b], &[p, 1.0 - p], 12);
            for order in [4usize, 6, 8, 10] {
                let mus = optimal_mus(&moments, order).unwrap();
                let base = expected_for_mus(&mus, order, &moments);
                let scale = base.abs().max(1.0);
                for slot in 0..order / 2 {
                    let eps = 1e-6 * mus[slot].abs().max(1.0);
                    let mut hi = mus.clone();
                    hi[slot] += eps;
                    let mut lo = mus.clone();
                    lo[slot] -= eps;
                    let grad = (expected_for_mus(&hi, order, &moments)
                        - expected_for_mus(&lo, order, &moments))
                        / (2.0 * eps);
                    assert!(
                        grad.abs() < 1e-7 * scale,
                        "order {order} slot {slot}: grad {grad} scale {scale}"
                    );
                }
            }
        }
    }

    #[test]
    fn degenerate_denominator_detected() {
        // A fake "moment" vector engineered so <Y_{K-2}> = -m0 = 0 is
        // impossible; instead target a higher slot by zeroing what Y contracts
        // against. Crafted vector with moments[0] = 1 cannot zero <Y_{K-2}>,
        // so aim at order 4, slot 0: <Y_0> = -mu2^2/2 + mu2 m1 - m2/2 with
        // mu2 = m1; choose m1 = 1, m2 = 1 so <Y_0> = -1/2 + 1 - 1/2 = 0.
        let moments = vec![1.0, 1.0, 1.0, 1.0];
        match optimal_mus(&moments, 4) {
            Err(Error::DegenerateDenominator { index: 0 }) => {}
            other => panic!("expected degenerate denominator, got {other:?}"),
        }
    }

    #[test]
    fn embedding_preserves_values() {
        let mus = [MuParam::Finite(0.8)];
        let embedded = embed_next_order(&mus);
        assert_eq!(embedded.len(), 2);
        let b2 = build_from_params(&mus, 2).unwrap();
        let b4 = build_from_params(&embedded, 4).unwrap();
        let mut x = -6.0;
        while x <= 6.0 {
            let expect = 0.8f64.exp() * (1.0 - 0.8) + 0.8f64.exp() * x;
            assert!((b2.evaluate(x) - expect).abs() < 1e-12 * expect.abs().max(1.0));
            assert!(
                (b4.evaluate(x) - b2.evaluate(x)).abs() < 1e-12 * b2.evaluate(x).abs().max(1.0)
            );
            x += 0.5;
        }
    }

    #[test]
    fn double_embedding_fixes_constant_coefficient() {
        let mus = [MuParam::Finite(0.4), MuParam::Finite(-0.3)];
        let base = build_from_params(&mus, 4).unwrap();
        let twice = embed_next_order(&embed_next_order(&mus));
        let b8 = build_from_params(&twice, 8).unwrap();
        assert_eq!(b8.evaluate(0.0), base.coeffs()[0]);
    }

    #[test]
    fn reoptimisation_after_embedding_never_loses() {
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        for _ in 0..25 {
            let a = rng.random_range(-2.0..-0.1);
            let b = rng.random_range(0.2..2.0);
            let p = rng.random_range(0.2..0.8);
            let moments = discrete_moments(&[a, b], &[p, 1.0 - p], 12);
            for order in [2usize, 4, 6, 8] {
                let mus = optimal_mus(&moments, order).unwrap();
                let value = expected_for_mus(&mus, order, &moments);

                // Embedded bound evaluates to the same expectation.
                let params: Vec<MuParam> = mus.iter().map(|&m| MuParam::Finite(m)).collect();
                let embedded = build_from_params(&embed_next_order(&params), order + 2).unwrap();
                let embedded_value = embedded.expected_value(&moments).unwrap();
                assert!((embedded_value - value).abs() <= 1e-12 * value.abs().max(1.0));

                // Fresh optimisation at the next order is at least as tight.
                let next = optimal_mus(&moments, order + 2).unwrap();
                let next_value = expected_for_mus(&next, order + 2, &moments);
                assert!(
                    next_value >= value - 1e-12 * value.abs(),
                    "order {order}: {next_value} < {value}"
                );
            }
        }
    }

    #[test]
    fn e_value_nonnegative_everywhere() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        for _ in 0..200 {
            let order = *[2usize, 4, 6, 8, 10].choose(&mut rng).unwrap();
            let mus: Vec<f64> = (0..order / 2)
                .map(|_| rng.random_range(-3.0..3.0))
                .collect();
            for slot in 0..order / 2 {
                let d = build_derivative(&mus, order, 2 * slot).unwrap();
                assert!(d.e_value >= 0.0);
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn bound_never_exceeds_exp(
                mus in proptest::collection::vec(-2.5f64..2.5, 1..=5),
                x in -12.0f64..12.0,
            ) {
                let order = mus.len() * 2;
                let poly = build_coefficients(&mus, order).unwrap();
                prop_assert!(poly.evaluate(x) <= x.exp() + 1e-12 * x.exp());
            }

            #[test]
            fn embedding_is_pointwise_identity(
                mus in proptest::collection::vec(-2.0f64..2.0, 1..=4),
                x in -8.0f64..8.0,
            ) {
                let order = mus.len() * 2;
                let params: Vec<MuParam> = mus.iter().map(|&m| MuParam::Finite(m)).collect();
                let base = build_from_params(&params, order).unwrap();
                let lifted = build_from_params(&embed_next_order(&params), order + 2).unwrap();
                let b = base.evaluate(x);
                prop_assert!((lifted.evaluate(x) - b).abs() <= 1e-11 * b.abs().max(1.0));
            }
        }
    }
}
