//! Small numeric helpers shared across modules.

use statrs::function::gamma::ln_gamma;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

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

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// `ln(k!)`.
pub fn ln_factorial(k: u64) -> f64 {
    if k < 2 {
        0.0
    } else if k <= 20 {
        (2..=k).map(|i| i as f64).product::<f64>().ln()
    } else {
        ln_gamma(k as f64 + 1.0)
    }
}

/// Natural log of the number of descending length-`k` paths,
/// `ln((N^{n+1} - N^k) / (N - 1))`, without forming `N^{n+1}`.
pub fn ln_path_count(branching: u32, depth: u32, k: u32) -> f64 {
    let ln_n = (branching as f64).ln();
    if branching == 1 {
        return ((depth - k + 1) as f64).ln();
    }
    // N^{n+1} (1 - N^{k-n-1}) / (N - 1)
    let gap = (k as f64 - depth as f64 - 1.0) * ln_n;
    (depth as f64 + 1.0) * ln_n + (-gap.exp()).ln_1p() - ((branching - 1) as f64).ln()
}

/// True when `N p` is 1 up to rounding in `p`.
pub fn is_critical(branching: u32, p: f64) -> bool {
    (branching as f64 * p - 1.0).abs() <= 1e-12
}
