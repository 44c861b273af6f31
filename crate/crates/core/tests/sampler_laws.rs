//! Simulated laws against exact laws, within a DKW band at delta = 1e-3.

use treepath::montecarlo::{run_batch, BatchConfig, Statistic};
use treepath::stats::{compare_laws, EmpiricalLaw};
use treepath::{dp, oracle, ModelParams, Pmf};

fn agrees(prm: &ModelParams, stat: Statistic, exact: &Pmf, seed: u64) {
    let batch = run_batch(prm, stat, None, 20_000, seed, &BatchConfig::default()).unwrap();
    let law = EmpiricalLaw::from_samples(&batch.samples).unwrap();
    let cmp = compare_laws(&law, exact, 1e-3, 0.0).unwrap();
    assert!(
        cmp.pass,
        "{stat:?} at {prm:?}: sup {} > band {}",
        cmp.sup_distance, cmp.dkw_band
    );
}

#[test]
fn longest_increasing_small_trees() {
    for (nb, n) in [(2, 2), (3, 1), (2, 1)] {
        let prm = ModelParams::continuous(nb, n).unwrap();
        let exact = oracle::increasing_pmf_bruteforce(&prm).unwrap();
        agrees(&prm, Statistic::LongestIncreasing, &exact, 100 + n as u64);
    }
}

#[test]
fn open_path_statistics() {
    for (nb, n, p) in [(2, 6, 0.6), (3, 4, 0.4)] {
        let prm = ModelParams::new(nb, n, p).unwrap();
        agrees(&prm, Statistic::Theta, &dp::theta_pmf(&prm).unwrap(), 200);
        agrees(&prm, Statistic::LongestOpen, &dp::longest_open_pmf(&prm).unwrap(), 300);
    }
}
