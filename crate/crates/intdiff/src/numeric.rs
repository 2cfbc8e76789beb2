//! Compensated summation and small statistical reductions.
//!
//! Every reduction that feeds a reported number goes through `KahanSum` so
//! that results are reproducible to well below 1e-12 relative error even for
//! long accumulations.

/// Neumaier-compensated accumulator.
///
/// The correction term also covers the case where a new summand is larger
/// than the running sum, which plain Kahan summation loses.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice.
pub fn kahan_sum(xs: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Compensated arithmetic mean. Empty input yields NaN.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    kahan_sum(xs) / xs.len() as f64
}

/// Sample mean and standard error (ddof = 1). Needs at least two values.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 2, "mean_and_stderr needs at least two samples");
    let m = mean(xs);
    let mut dev = KahanSum::new();
    for &x in xs {
        let d = x - m;
        dev.add(d * d);
    }
    let var = dev.value() / (n as f64 - 1.0);
    (m, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_cancellation() {
        // 1 + 1e-16 repeated: plain f64 summation drops every tiny term.
        let mut acc = KahanSum::new();
        acc.add(1.0);
        for _ in 0..1000 {
            acc.add(1e-16);
        }
        let err = (acc.value() - (1.0 + 1000.0 * 1e-16)).abs();
        assert!(err < 1e-18, "err = {err:e}");
    }

    #[test]
    fn kahan_handles_large_late_summand() {
        let mut acc = KahanSum::new();
        acc.add(1.0);
        acc.add(1e100);
        acc.add(1.0);
        acc.add(-1e100);
        assert_eq!(acc.value(), 2.0);
    }

    #[test]
    fn mean_and_stderr_match_hand_values() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let (m, se) = mean_and_stderr(&xs);
        assert_eq!(m, 2.5);
        // var = (2.25+0.25+0.25+2.25)/3 = 5/3, se = sqrt(5/12)
        let expected = (5.0f64 / 12.0).sqrt();
        assert!((se - expected).abs() < 1e-15);
    }

    #[test]
    fn mean_of_empty_is_nan() {
        assert!(mean(&[]).is_nan());
    }
}
