//! Compensated (Kahan) summation.
//!
//! Metric accumulations run in a fixed canonical order with error
//! compensation so results are bit-reproducible regardless of how the work
//! is scheduled.

/// Compensated accumulator (Kahan with the Neumaier correction, which
/// also recovers low-order bits when an addend exceeds the running sum).
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = KahanSum::new();
    for v in iter {
        acc.add(v);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensates_cancellation() {
        // 1 + 1e16 - 1e16 repeatedly loses the ones in naive summation.
        let values: Vec<f64> = (0..1000).flat_map(|_| [1.0, 1e16, -1e16]).collect();
        assert_eq!(kahan_sum(values.iter().copied()), 1000.0);
    }

    #[test]
    fn matches_naive_sum_on_exact_inputs() {
        let values = [1.0, 2.0, 3.5, -0.5];
        assert_eq!(kahan_sum(values.iter().copied()), 6.0);
    }
}
