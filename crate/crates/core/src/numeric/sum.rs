//! Compensated (Neumaier) summation and streaming mean/variance accumulators.
//!
//! The Birkhoff sums accumulate up to 2^16 cancellation-heavy terms; plain
//! f64 addition loses digits there, compensated addition does not.

/// Neumaier variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut k = Kahan::default();
    for x in xs {
        k.add(x);
    }
    k.value()
}

/// Streaming mean/variance with deterministic merging (merge order is the
/// caller's responsibility; all call sites fold chunks in index order).
#[derive(Clone, Copy, Debug, Default)]
pub struct MeanVar {
    n: u64,
    sum: Kahan,
    sumsq: Kahan,
}

impl MeanVar {
    #[inline]
    pub fn add(&mut self, x: f64) {
        self.n += 1;
        self.sum.add(x);
        self.sumsq.add(x * x);
    }

    pub fn merge(&mut self, other: &MeanVar) {
        self.n += other.n;
        self.sum.add(other.sum.value());
        self.sumsq.add(other.sumsq.value());
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        self.sum.value() / self.n as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        let n = self.n as f64;
        let m = self.mean();
        ((self.sumsq.value() - n * m * m) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_beats_naive_on_cancellation() {
        // 1 + 1e-16 added 10^6 times minus 1: naive drifts, compensated holds.
        let mut k = Kahan::default();
        k.add(1.0);
        for _ in 0..1_000_000 {
            k.add(1e-16);
        }
        k.add(-1.0);
        assert!((k.value() - 1e-10).abs() < 1e-18);
    }

    #[test]
    fn meanvar_matches_closed_form() {
        let mut mv = MeanVar::default();
        for i in 1..=100u64 {
            mv.add(i as f64);
        }
        assert_eq!(mv.count(), 100);
        assert!((mv.mean() - 50.5).abs() < 1e-12);
        // variance of 1..100 is n(n+1)/12 = 841.66...
        assert!((mv.variance() - 841.666_666_666_666_7).abs() < 1e-9);
    }

    #[test]
    fn merge_equals_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut whole = MeanVar::default();
        for &x in &xs {
            whole.add(x);
        }
        let mut a = MeanVar::default();
        let mut b = MeanVar::default();
        for &x in &xs[..400] {
            a.add(x);
        }
        for &x in &xs[400..] {
            b.add(x);
        }
        a.merge(&b);
        assert!((a.mean() - whole.mean()).abs() < 1e-15);
        assert!((a.variance() - whole.variance()).abs() < 1e-12);
    }
}
