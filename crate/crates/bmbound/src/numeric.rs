//! Small numeric helpers shared across modules.

/// Neumaier-compensated accumulator. Keeps a running error term so that long
/// sums of mixed-magnitude contributions stay accurate to a few ulps.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    /// Multiplies the accumulated total by `factor` (used when rescaling a
    /// shifted exponential sum onto a new maximum).
    pub fn scale(&mut self, factor: f64) {
        self.sum *= factor;
        self.compensation *= factor;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Streaming log-sum-exp accumulator: `value()` returns `ln(sum of exp(x))`
/// over everything added so far without ever materialising the exponentials
/// at full scale.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    shifted: CompensatedSum,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            shifted: CompensatedSum::new(),
        }
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        if x <= self.max {
            self.shifted.add((x - self.max).exp());
        } else {
            if self.max.is_finite() {
                self.shifted.scale((self.max - x).exp());
            }
            self.max = x;
            self.shifted.add(1.0);
        }
    }

    /// Merges another accumulator, as when state-space blocks are reduced in a
    /// fixed order.
    pub fn merge(&mut self, other: &LogSumExp) {
        let v = other.value();
        if v.is_finite() {
            // Re-add as a single shifted term; accurate because the per-block
            // totals are already compensated.
            self.add(v);
        }
    }

    pub fn value(&self) -> f64 {
        let s = self.shifted.value();
        if s <= 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + s.ln()
        }
    }
}

/// `ln(2 cosh x)` without overflow for large `|x|`.
pub fn log_2cosh(x: f64) -> f64 {
    x.abs() + (-2.0 * x.abs()).exp().ln_1p()
}

/// Factorial as f64; exact for `n <= 22`.
pub fn factorial(n: usize) -> f64 {
    let mut acc = 1.0;
    for k in 2..=n {
        acc *= k as f64;
    }
    acc
}

/// SplitMix64 step, used to derive per-task seeds deterministically.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic seed for a (base, lane, item) triple.
pub fn derive_seed(base: u64, lane: u64, item: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base ^ 0x5851_f42d_4c95_7f2d) ^ lane) ^ item)
}
