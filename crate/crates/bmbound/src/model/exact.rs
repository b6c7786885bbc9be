//! Exact oracles by enumeration over all `2^N` states: log-partition
//! function, pair correlations, and the raw power moments of `dH` under the
//! factorized reference distribution.
//!
//! States are walked in Gray-code order inside fixed-size blocks; each block
//! re-initialises its running quantities from scratch and keeps compensated
//! accumulators, and blocks are reduced in a fixed order, so results are
//! deterministic and drift-free across the full sweep.

use super::mean_field::MeanFieldState;
use super::moments::MomentVector;
use super::BoltzmannMachine;
use crate::error::{Error, Result};
use crate::numeric::{log_2cosh, CompensatedSum, LogSumExp};

/// Enumeration guard: `2^N` state scans stay practical up to this size.
pub const MAX_EXACT_UNITS: usize = 24;

const BLOCK_BITS: usize = 12;

fn check_size(n: usize) -> Result<()> {
    if n > MAX_EXACT_UNITS {
        return Err(Error::NetworkTooLarge {
            got: n,
            max: MAX_EXACT_UNITS,
        });
    }
    Ok(())
}

fn spins_for_gray(gray: u64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|b| if gray >> b & 1 == 1 { 1.0 } else { -1.0 })
        .collect()
}

/// Drives `visit(flip_bit)` over one block of Gray-code states after the
/// caller has initialised itself at the block's first state.
fn walk_block(start: u64, len: u64, mut visit: impl FnMut(usize)) {
    for offset in 1..len {
        let index = start + offset;
        visit(index.trailing_zeros() as usize);
    }
}

fn block_layout(n: usize) -> (u64, u64) {
    let block_bits = BLOCK_BITS.min(n);
    let block_len = 1u64 << block_bits;
    let blocks = 1u64 << (n - block_bits);
    (blocks, block_len)
}

/// `log Z = log sum_s exp(H(s))`, accumulated in the log domain.
pub fn exact_log_partition(bm: &BoltzmannMachine) -> Result<f64> {
    let n = bm.n();
    check_size(n)?;
    let (blocks, block_len) = block_layout(n);
    let mut total = LogSumExp::new();
    for block in 0..blocks {
        let start = block * block_len;
        let mut spins = spins_for_gray(start ^ (start >> 1), n);
        let mut energy = bm.energy(&spins);
        let mut local = LogSumExp::new();
        local.add(energy);
        walk_block(start, block_len, |bit| {
            let row = bm.weights_row(bit);
            let field: f64 =
                bm.thresholds()[bit] + row.iter().zip(&spins).map(|(w, s)| w * s).sum::<f64>();
            energy -= 2.0 * spins[bit] * field;
            spins[bit] = -spins[bit];
            local.add(energy);
        });
        total.merge(&local);
    }
    Ok(total.value())
}

/// `<s_i s_j>` under the exact Boltzmann distribution.
pub fn exact_correlation(bm: &BoltzmannMachine, i: usize, j: usize) -> Result<f64> {
    let n = bm.n();
    check_size(n)?;
    assert!(i < n && j < n);
    if i == j {
        return Ok(1.0);
    }
    // Shifted sums (max, sum exp, sum s_i s_j exp) merged across blocks.
    let mut max = f64::NEG_INFINITY;
    let mut norm = CompensatedSum::new();
    let mut corr = CompensatedSum::new();
    let (blocks, block_len) = block_layout(n);
    for block in 0..blocks {
        let start = block * block_len;
        let mut spins = spins_for_gray(start ^ (start >> 1), n);
        let mut energy = bm.energy(&spins);
        let mut local_max = energy;
        let mut local_norm = CompensatedSum::new();
        let mut local_corr = CompensatedSum::new();
        let record = |energy: f64,
                      sign: f64,
                      local_max: &mut f64,
                      local_norm: &mut CompensatedSum,
                      local_corr: &mut CompensatedSum| {
            if energy > *local_max {
                let scale = (*local_max - energy).exp();
                local_norm.scale(scale);
                local_corr.scale(scale);
                *local_max = energy;
            }
            let w = (energy - *local_max).exp();
            local_norm.add(w);
            local_corr.add(sign * w);
        };
        record(
            energy,
            spins[i] * spins[j],
            &mut local_max,
            &mut local_norm,
            &mut local_corr,
        );
        walk_block(start, block_len, |bit| {
            let row = bm.weights_row(bit);
            let field: f64 =
                bm.thresholds()[bit] + row.iter().zip(&spins).map(|(w, s)| w * s).sum::<f64>();
            energy -= 2.0 * spins[bit] * field;
            spins[bit] = -spins[bit];
            record(
                energy,
                spins[i] * spins[j],
                &mut local_max,
                &mut local_norm,
                &mut local_corr,
            );
        });
        // Fold the block into the running global shift.
        if local_max > max {
            let scale = if max.is_finite() {
                (max - local_max).exp()
            } else {
                0.0
            };
            norm.scale(scale);
            corr.scale(scale);
            max = local_max;
        }
        let rescale = (local_max - max).exp();
        norm.add(local_norm.value() * rescale);
        corr.add(local_corr.value() * rescale);
    }
    Ok(corr.value() / norm.value())
}

/// Raw power moments `<dH^n>` for `n = 0..=n_max` under the factorized
/// distribution of `state`, by full enumeration. Uses the general centered
/// form `dH = sum_{i<j} w_ij (s_i s_j - m_i m_j) + sum_i (theta_i - h_i)(s_i - m_i)`,
/// which reduces to the pure pair form whenever `h` solves the mean-field
/// equations.
pub fn brute_force_delta_h_moments(
    bm: &BoltzmannMachine,
    state: &MeanFieldState,
    n_max: usize,
) -> Result<MomentVector> {
    let n = bm.n();
    check_size(n)?;
    assert_eq!(state.h().len(), n, "state does not match the machine");
    let m = state.m();
    if let Some(bad) = m.iter().find(|mi| mi.abs() >= 1.0) {
        return Err(Error::InvalidMagnetization { value: *bad });
    }
    let residual_field: Vec<f64> = bm
        .thresholds()
        .iter()
        .zip(state.h())
        .map(|(t, h)| t - h)
        .collect();
    // Centering constants <pair> and <linear> under the reference.
    let mut c_pair = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            c_pair += bm.weight(i, j) * m[i] * m[j];
        }
    }
    let c_lin: f64 = residual_field.iter().zip(m).map(|(r, mi)| r * mi).sum();

    let (blocks, block_len) = block_layout(n);
    let mut totals = vec![CompensatedSum::new(); n_max + 1];
    for block in 0..blocks {
        let start = block * block_len;
        let mut spins = spins_for_gray(start ^ (start >> 1), n);
        let mut pair = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                pair += bm.weight(i, j) * spins[i] * spins[j];
            }
        }
        let mut lin: f64 = residual_field.iter().zip(&spins).map(|(r, s)| r * s).sum();
        let mut prob: f64 = spins
            .iter()
            .zip(m)
            .map(|(s, mi)| (1.0 + s * mi) / 2.0)
            .product();
        let mut local = vec![CompensatedSum::new(); n_max + 1];
        let accumulate = |pair: f64, lin: f64, prob: f64, local: &mut [CompensatedSum]| {
            let dh = (pair - c_pair) + (lin - c_lin);
            let mut power = prob;
            for acc in local.iter_mut() {
                acc.add(power);
                power *= dh;
            }
        };
        accumulate(pair, lin, prob, &mut local);
        walk_block(start, block_len, |bit| {
            let row = bm.weights_row(bit);
            let field: f64 = row.iter().zip(&spins).map(|(w, s)| w * s).sum();
            pair -= 2.0 * spins[bit] * field;
            lin -= 2.0 * spins[bit] * residual_field[bit];
            prob *= (1.0 - spins[bit] * m[bit]) / (1.0 + spins[bit] * m[bit]);
            spins[bit] = -spins[bit];
            accumulate(pair, lin, prob, &mut local);
        });
        for (total, part) in totals.iter_mut().zip(&local) {
            total.add(part.value());
        }
    }
    MomentVector::new(totals.iter().map(|t| t.value()).collect())
}

/// `log Z~` of the factorized reference distribution, including the centering
/// constant that makes `<dH> = 0`; with `h` solving the mean-field equations
/// the constant reduces to `-1/2 sum_ij w_ij m_i m_j`.
pub fn log_z_tilde(state: &MeanFieldState, bm: &BoltzmannMachine) -> f64 {
    let n = bm.n();
    let m = state.m();
    let mut constant = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            constant += bm.weight(i, j) * m[i] * m[j];
        }
    }
    for i in 0..n {
        constant += (bm.thresholds()[i] - state.h()[i]) * m[i];
    }
    let mut acc = constant;
    for &h in state.h() {
        acc += log_2cosh(h);
    }
    acc
}
