//! Empirical laws, intervals and distances between laws.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::montecarlo::SampleBatch;
use crate::numeric::KahanSum;
use crate::pmf::Pmf;

/// Absolute slack allowed when the reference is the `exp(-lambda)`
/// envelope rather than an exact law: its total-variation guarantee is far
/// above 1 at computable depths, so this margin is empirical.
pub const ENVELOPE_SLACK: f64 = 0.03;

/// Counts of observed values. The -1 sentinel is kept as an ordinary point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalLaw {
    pub counts: BTreeMap<i64, u64>,
    pub total: u64,
}

impl EmpiricalLaw {
    pub fn from_samples(samples: &[i64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::param("K", "empirical law of an empty batch"));
        }
        let mut counts = BTreeMap::new();
        for &s in samples {
            *counts.entry(s).or_insert(0u64) += 1;
        }
        Ok(EmpiricalLaw {
            counts,
            total: samples.len() as u64,
        })
    }

    pub fn count(&self, v: i64) -> u64 {
        self.counts.get(&v).copied().unwrap_or(0)
    }

    pub fn pmf(&self) -> Pmf {
        let k = self.total as f64;
        Pmf::new(self.counts.iter().map(|(&v, &c)| (v, c as f64 / k))).expect("empirical frequencies sum to one")
    }

    pub fn cdf(&self, v: i64) -> f64 {
        self.counts.range(..=v).map(|(_, &c)| c).sum::<u64>() as f64 / self.total as f64
    }

    /// Observations satisfying `pred`, as a count.
    pub fn count_where(&self, mut pred: impl FnMut(i64) -> bool) -> u64 {
        self.counts.iter().filter(|(&v, _)| pred(v)).map(|(_, &c)| c).sum()
    }
}

pub fn empirical_law(batch: &SampleBatch) -> Result<EmpiricalLaw> {
    EmpiricalLaw::from_samples(&batch.samples)
}

/// Mean and spread of integer samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub count: u64,
    pub mean: f64,
    /// Unbiased standard deviation (0 for a single sample).
    pub sd: f64,
    pub std_error: f64,
}

pub fn summarize(samples: &[i64]) -> Result<SampleSummary> {
    if samples.is_empty() {
        return Err(Error::param("K", "summary of an empty batch"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().map(|&s| s as f64).collect::<KahanSum>().value() / n;
    let ss = samples
        .iter()
        .map(|&s| (s as f64 - mean).powi(2))
        .collect::<KahanSum>()
        .value();
    let sd = if samples.len() > 1 {
        (ss / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(SampleSummary {
        count: samples.len() as u64,
        mean,
        sd,
        std_error: sd / n.sqrt(),
    })
}

/// Two-sided standard normal quantile for `confidence`.
pub fn normal_quantile(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::param("confidence", format!("out of (0,1): {confidence}")));
    }
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(std.inverse_cdf(0.5 + confidence / 2.0))
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::param("trials", "need at least one trial"));
    }
    if successes > trials {
        return Err(Error::param(
            "successes",
            format!("{successes} successes in {trials} trials"),
        ));
    }
    let z = normal_quantile(confidence)?;
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    Ok((lo, hi))
}

/// DKW half-width `sqrt(ln(2/delta) / (2K))` for an empirical CDF.
pub fn dkw_band(replicates: u64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", format!("out of (0,1): {delta}")));
    }
    if replicates == 0 {
        return Err(Error::param("K", "band for zero replicates"));
    }
    Ok(((2.0 / delta).ln() / (2.0 * replicates as f64)).sqrt())
}

/// Kolmogorov (sup of CDF differences) and total-variation distances.
pub fn law_distances(a: &Pmf, b: &Pmf) -> (f64, f64) {
    let support: std::collections::BTreeSet<i64> = a.support().chain(b.support()).collect();
    let (mut fa, mut fb) = (0.0, 0.0);
    let mut sup: f64 = 0.0;
    let mut l1 = KahanSum::new();
    for v in support {
        let (ma, mb) = (a.mass(v), b.mass(v));
        fa += ma;
        fb += mb;
        sup = sup.max((fa - fb).abs());
        l1.add((ma - mb).abs());
    }
    (sup.min(1.0), (0.5 * l1.value()).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub sup_distance: f64,
    pub tv_distance: f64,
    /// Empirical minus reference mass at every point of either support.
    pub deviations: BTreeMap<i64, f64>,
    pub replicates: u64,
    pub delta: f64,
    pub dkw_band: f64,
    pub slack: f64,
    /// `sup_distance <= dkw_band + slack`.
    pub pass: bool,
}

/// Confronts an empirical law with a reference law. `slack` absorbs the
/// reference's own error when it is an approximation (0 for exact laws).
pub fn compare_laws(empirical: &EmpiricalLaw, reference: &Pmf, delta: f64, slack: f64) -> Result<ComparisonReport> {
    let emp = empirical.pmf();
    let (sup, tv) = law_distances(&emp, reference);
    let band = dkw_band(empirical.total, delta)?;
    let deviations = emp
        .support()
        .chain(reference.support())
        .map(|v| (v, emp.mass(v) - reference.mass(v)))
        .collect();
    Ok(ComparisonReport {
        sup_distance: sup,
        tv_distance: tv,
        deviations,
        replicates: empirical.total,
        delta,
        dkw_band: band,
        slack,
        pass: sup <= band + slack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub depth: u32,
    /// `P(|X/n - limit| > epsilon)`.
    pub exceedance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub limit: f64,
    pub epsilon: f64,
    pub points: Vec<TrendPoint>,
    /// No step increases the exceedance by more than `tolerance`.
    pub nonincreasing: bool,
    pub final_exceedance: f64,
}

/// Exceedance masses of `X/n` around `limit` along a depth grid, with a
/// monotone-trend verdict. `laws` must be sorted by depth.
pub fn convergence_track(laws: &[(u32, Pmf)], limit: f64, epsilon: f64, tolerance: f64) -> Result<TrendReport> {
    if laws.len() < 3 {
        return Err(Error::param("grid", "need at least 3 depths"));
    }
    if laws.windows(2).any(|w| w[0].0 >= w[1].0) || laws[0].0 == 0 {
        return Err(Error::param("grid", "depths must be positive and increasing"));
    }
    let points: Vec<TrendPoint> = laws
        .iter()
        .map(|(n, law)| TrendPoint {
            depth: *n,
            exceedance: law.mass_where(|v| (v as f64 / *n as f64 - limit).abs() > epsilon),
        })
        .collect();
    let nonincreasing = points
        .windows(2)
        .all(|w| w[1].exceedance <= w[0].exceedance + tolerance);
    Ok(TrendReport {
        limit,
        epsilon,
        final_exceedance: points.last().unwrap().exceedance,
        points,
        nonincreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_examples() {
        let law = EmpiricalLaw::from_samples(&[0, 0, 1]).unwrap();
        let pmf = law.pmf();
        assert!((pmf.mass(0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((pmf.mass(1) - 1.0 / 3.0).abs() < 1e-15);
        let law = EmpiricalLaw::from_samples(&[4; 10]).unwrap();
        assert_eq!(law.pmf(), Pmf::point(4));
        assert!(EmpiricalLaw::from_samples(&[]).is_err());
        let law = EmpiricalLaw::from_samples(&[-1, 2, 2, 5]).unwrap();
        assert_eq!(law.count(-1), 1);
        assert_eq!(law.cdf(2), 0.75);
    }

    #[test]
    fn wilson_examples() {
        assert_eq!(wilson_interval(0, 100, 0.95).unwrap().0, 0.0);
        assert_eq!(wilson_interval(100, 100, 0.95).unwrap().1, 1.0);
        let (lo, hi) = wilson_interval(50, 100, 0.95).unwrap();
        assert!((lo - 0.40383).abs() < 1e-4 && (hi - 0.59617).abs() < 1e-4, "{lo} {hi}");
        assert!(wilson_interval(5, 4, 0.95).is_err());
        assert!(wilson_interval(0, 0, 0.95).is_err());
        assert!(wilson_interval(1, 4, 1.0).is_err());
    }

    #[test]
    fn distances() {
        let a = Pmf::point(0);
        assert_eq!(law_distances(&a, &a), (0.0, 0.0));
        assert_eq!(law_distances(&a, &Pmf::point(1)), (1.0, 1.0));
        let b = Pmf::new([(0, 0.5), (1, 0.5)]).unwrap();
        assert_eq!(law_distances(&a, &b), (0.5, 0.5));
    }

    #[test]
    fn dkw_scales_as_inverse_root() {
        let one = dkw_band(1000, 0.01).unwrap();
        let two = dkw_band(2000, 0.01).unwrap();
        assert!((one / two - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn compare_passes_on_exact_match() {
        let law = EmpiricalLaw::from_samples(&[0, 1, 1, 2]).unwrap();
        let reference = Pmf::new([(0, 0.25), (1, 0.5), (2, 0.25)]).unwrap();
        let report = compare_laws(&law, &reference, 0.01, 0.0).unwrap();
        assert_eq!(report.sup_distance, 0.0);
        assert!(report.pass);
        assert_eq!(report.deviations.len(), 3);
    }

    #[test]
    fn summary() {
        let s = summarize(&[1, 2, 3, 4]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(summarize(&[7]).unwrap().sd, 0.0);
    }

    #[test]
    fn trend_examples() {
        let laws: Vec<(u32, Pmf)> = [10u32, 20, 40].iter().map(|&n| (n, Pmf::point(n as i64 / 2))).collect();
        let r = convergence_track(&laws, 0.5, 0.05, 0.0).unwrap();
        assert!(r.points.iter().all(|p| p.exceedance == 0.0));
        assert!(r.nonincreasing);
        assert!(convergence_track(&laws[..2], 0.5, 0.05, 0.0).is_err());
    }

    #[test]
    fn longest_run_trend_from_dp() {
        let law = |n, p| crate::dp::longest_open_pmf(&crate::ModelParams::new(2, n, p).unwrap()).unwrap();
        let grid = |p| [100, 300, 500].map(|n| (n, law(n, p))).to_vec();
        let limit = -(2f64.ln()) / 0.2f64.ln();
        let r = convergence_track(&grid(0.2), limit, 0.05, 0.0).unwrap();
        assert!(r.nonincreasing && r.final_exceedance < 0.05, "{r:?}");
        let r = convergence_track(&grid(0.6), 1.0, 0.05, 0.0).unwrap();
        assert!(r.nonincreasing, "{r:?}");
    }
}
