//! Corrected (connected) moments of single spins, and the vector of `<dH^n>`
//! averages consumed by the polynomial bounds.

use crate::error::{Error, Result};

/// Raw power moments `values[n] = <dH^n>` for `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    values: Vec<f64>,
}

impl MomentVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidMoments {
                reason: "empty moment vector".into(),
            });
        }
        if (values[0] - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidMoments {
                reason: format!("<dH^0> must be 1, got {}", values[0]),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMoments {
                reason: "non-finite moment".into(),
            });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, n: usize) -> f64 {
        self.values[n]
    }
}

/// Raw central moment `M_c = <(s - m)^c>` of a single spin with
/// `p(s = +1) = (1 + m) / 2`, in closed form.
fn raw_central_moment(m: f64, c: usize) -> f64 {
    let up = (1.0 + m) / 2.0 * (1.0 - m).powi(c as i32);
    let down = (1.0 - m) / 2.0 * (-(1.0 + m)).powi(c as i32);
    up + down
}

/// Number of set partitions of `c` elements whose block sizes match the
/// multiset `parts` (non-increasing): `c! / (prod parts! * prod mult!)`.
fn partition_count(c: usize, parts: &[usize]) -> u128 {
    let fact = |k: usize| -> u128 { (2..=k as u128).product::<u128>().max(1) };
    let mut denom: u128 = 1;
    let mut run = 1usize;
    for (idx, &p) in parts.iter().enumerate() {
        denom *= fact(p);
        if idx + 1 < parts.len() && parts[idx + 1] == p {
            run += 1;
        } else {
            denom *= fact(run);
            run = 1;
        }
    }
    fact(c) / denom
}

/// Visits every partition of `c` into at least two parts, each part >= 2,
/// in non-increasing part order.
fn for_each_partition(c: usize, visit: &mut impl FnMut(&[usize])) {
    fn descend(
        remaining: usize,
        max_part: usize,
        stack: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if remaining == 0 {
            if stack.len() >= 2 {
                visit(stack);
            }
            return;
        }
        let mut part = max_part.min(remaining);
        while part >= 2 {
            if remaining - part != 1 {
                stack.push(part);
                descend(remaining - part, part, stack, visit);
                stack.pop();
            }
            part -= 1;
        }
    }
    let mut stack = Vec::new();
    descend(c, c, &mut stack, visit);
}

/// Corrected moments `M'_1 ... M'_c_max` of a single spin with magnetization
/// `m`. Each `M'_c` is the raw central moment minus every combination of
/// lower corrected moments whose subscripts add up to `c` again, weighted by
/// the number of set partitions realising that combination; equivalently,
/// the cumulants of `s - m`.
pub fn corrected_moments(m: f64, c_max: usize) -> Result<Vec<f64>> {
    if m.abs() >= 1.0 || !m.is_finite() {
        return Err(Error::InvalidMagnetization { value: m });
    }
    if c_max < 1 {
        return Err(Error::InvalidMomentDegree { got: c_max });
    }
    let mut corrected = vec![0.0; c_max + 1]; // index by degree, [0] unused
    for c in 2..=c_max {
        let mut value = raw_central_moment(m, c);
        for_each_partition(c, &mut |parts| {
            let mut product = partition_count(c, parts) as f64;
            for &p in parts {
                product *= corrected[p];
            }
            value -= product;
        });
        corrected[c] = value;
    }
    Ok(corrected[1..].to_vec())
}
