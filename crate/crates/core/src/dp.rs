//! Exact laws of `Theta_n` (open root-to-leaf paths) and `L_{N,n}` (longest
//! open descending run anywhere) by recursion over depth.
//!
//! Both recursions view a depth-`d` tree as a root with `N` independent
//! depth-`(d-1)` subtrees, so nothing of size `N^n` is ever built.

use crate::error::{Error, Result};
use crate::model::{validate, ModelParams};
use crate::pmf::{Pmf, NO_PATH};

/// Largest `N^n` (support size of `Theta_n`) accepted by [`theta_pmf`].
pub const MAX_THETA_SUPPORT: u64 = 100_000;
/// Largest depth accepted by [`longest_open_pmf`].
pub const MAX_RUN_DEPTH: u32 = 2_000;

/// Differences of CDF values below this magnitude are rounding, not mass.
const ROUNDING_FLOOR: f64 = 1e-14;

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    while out.len() > 1 && *out.last().unwrap() == 0.0 {
        out.pop();
    }
    out
}

/// Exact law of `Theta_n`: zero when the root is closed, otherwise the
/// `N`-fold convolution of the subtree law.
pub fn theta_pmf(params: &ModelParams) -> Result<Pmf> {
    validate(params, None)?;
    let p = params.prob()?;
    let support = params.level_size(params.depth).unwrap_or(u64::MAX);
    if support > MAX_THETA_SUPPORT {
        return Err(Error::ScaleGuard {
            what: "Theta support N^n",
            limit: MAX_THETA_SUPPORT,
            actual: support,
        });
    }
    let mut law = vec![1.0 - p, p];
    for _ in 0..params.depth {
        let mut sum = law.clone();
        for _ in 1..params.branching {
            sum = convolve(&sum, &law);
        }
        law = sum.into_iter().map(|m| p * m).collect();
        law[0] += 1.0 - p;
    }
    Pmf::new(law.into_iter().enumerate().map(|(v, m)| (v as i64, m)))
}

/// `G(r, k) = P(R <= r, L < k)` for a depth-`n` tree, where `R` is the
/// longest open run starting at the root (`-1` if the root is closed) and
/// `L` the longest open run anywhere (`-1` if every vertex is closed).
/// Runs are measured in edges.
///
/// Stored as `1 - G`: in the upper tail `G` is within far less than one ulp
/// of 1, and the `N`-th powers in the recursion would erase it.
#[derive(Debug, Clone, PartialEq)]
pub struct JointRunTable {
    depth: u32,
    cols: usize,
    h: Vec<f64>,
}

impl JointRunTable {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// `1 - G(r, k)` for any `r >= -1`, `k >= 0` (values beyond the tree's
    /// reach saturate).
    pub fn complement(&self, r: i64, k: i64) -> f64 {
        debug_assert!(r >= -1 && k >= 0);
        let n = self.depth as i64;
        let r = r.min(n);
        let k = k.min(n + 1);
        self.h[(r + 1) as usize * self.cols + k as usize]
    }

    pub fn get(&self, r: i64, k: i64) -> f64 {
        1.0 - self.complement(r, k)
    }

    /// `P(L < k)`.
    pub fn longest_below(&self, k: i64) -> f64 {
        self.get(self.depth as i64, k)
    }

    /// `P(L >= k)`.
    pub fn longest_at_least(&self, k: i64) -> f64 {
        self.complement(self.depth as i64, k)
    }
}

/// `1 - (1 - h)^N` without cancellation.
fn complement_pow(h: f64, nb: f64) -> f64 {
    -(nb * (-h).ln_1p()).exp_m1()
}

/// Builds the joint table by recursion on depth:
/// `G_d(r, k) = p G_{d-1}(r' - 1, k)^N + (1 - p) G_{d-1}(n, k)^N` with
/// `r' = min(r, k - 1)` (the open-root term vanishes when `r' < 0`).
pub fn joint_run_table(params: &ModelParams) -> Result<JointRunTable> {
    validate(params, None)?;
    let p = params.prob()?;
    let n = params.depth;
    if n > MAX_RUN_DEPTH {
        return Err(Error::ScaleGuard {
            what: "longest-run depth",
            limit: MAX_RUN_DEPTH as u64,
            actual: n as u64,
        });
    }
    let nb = params.branching as f64;
    let cols = n as usize + 2; // k in 0..=n+1
    let rows = n as usize + 2; // r in -1..=n
    let idx = |r: i64, k: usize| (r + 1) as usize * cols + k;

    // depth 0: (R, L) = (-1, -1) w.p. 1-p, (0, 0) w.p. p
    let mut cur = vec![0.0; rows * cols];
    for r in -1..=0i64 {
        for k in 0..=1usize {
            cur[idx(r, k)] = if r >= 0 && k >= 1 { 0.0 } else { p };
        }
    }
    let mut next = cur.clone();
    let mut col_pow = vec![0.0; rows];

    // At depth d only r in -1..=d and k in 0..=d+1 are distinct; larger
    // indices repeat the boundary and are read through clamping.
    for d in 1..=n as i64 {
        let prev_d = d - 1;
        let read = |t: &Vec<f64>, r: i64, k: i64| t[idx(r.min(prev_d), k.min(prev_d + 1) as usize)];
        for k in 0..=(d + 1) {
            for r in -1..=prev_d {
                col_pow[(r + 1) as usize] = complement_pow(read(&cur, r, k), nb);
            }
            let closed = (1.0 - p) * col_pow[(prev_d + 1) as usize];
            for r in -1..=d {
                let rr = r.min(k - 1);
                let open = if rr >= 0 {
                    p * col_pow[((rr - 1).min(prev_d) + 1) as usize]
                } else {
                    p
                };
                next[idx(r, k as usize)] = open + closed;
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }

    Ok(JointRunTable { depth: n, cols, h: cur })
}

/// Exact law of `L_{N,n}`, with [`NO_PATH`] for the all-closed tree.
pub fn longest_open_pmf(params: &ModelParams) -> Result<Pmf> {
    let table = joint_run_table(params)?;
    let n = params.depth as i64;
    let mut points = Vec::with_capacity(n as usize + 2);
    points.push((NO_PATH, table.longest_below(0)));
    for k in 0..=n {
        let m = table.longest_at_least(k) - table.longest_at_least(k + 1);
        points.push((k, clean_difference(m)?));
    }
    Pmf::new(points)
}

fn clean_difference(m: f64) -> Result<f64> {
    if m >= 0.0 {
        Ok(m)
    } else if m > -ROUNDING_FLOOR {
        Ok(0.0)
    } else {
        Err(Error::Numerical(format!("negative mass {m} in longest-run law")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(nb: u32, n: u32, p: f64) -> ModelParams {
        ModelParams::new(nb, n, p).unwrap()
    }

    fn assert_pmf(pmf: &Pmf, want: &[(i64, f64)], tol: f64) {
        for &(v, m) in want {
            assert!((pmf.mass(v) - m).abs() < tol, "mass at {v}: {} vs {m}", pmf.mass(v));
        }
        assert!((pmf.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn theta_examples() {
        assert_pmf(&theta_pmf(&params(3, 0, 0.3)).unwrap(), &[(0, 0.7), (1, 0.3)], 1e-15);
        assert_pmf(
            &theta_pmf(&params(2, 1, 0.5)).unwrap(),
            &[(0, 0.625), (1, 0.25), (2, 0.125)],
            1e-15,
        );
    }

    #[test]
    fn theta_zero_mass_is_q() {
        for nb in [2, 3] {
            for p in [0.3, 0.5, 0.7] {
                let curve = crate::exact::q_recursion(nb, p, 6).unwrap();
                for n in 1..=6 {
                    let pmf = theta_pmf(&params(nb, n, p)).unwrap();
                    let q = curve.q(n as usize).unwrap();
                    assert!((pmf.mass(0) - q).abs() < 1e-12, "N={nb} p={p} n={n}");
                }
            }
        }
    }

    #[test]
    fn theta_guard() {
        assert!(matches!(theta_pmf(&params(2, 17, 0.5)), Err(Error::ScaleGuard { .. })));
    }

    #[test]
    fn longest_examples() {
        assert_pmf(
            &longest_open_pmf(&params(2, 0, 0.4)).unwrap(),
            &[(-1, 0.6), (0, 0.4)],
            1e-15,
        );
        assert_pmf(
            &longest_open_pmf(&params(2, 1, 0.5)).unwrap(),
            &[(-1, 0.125), (0, 0.5), (1, 0.375)],
            1e-15,
        );
    }

    #[test]
    fn head_runs_with_one_child() {
        // N = 1, n = 2: three coin flips, longest run of heads minus one
        let pmf = longest_open_pmf(&params(1, 2, 0.5)).unwrap();
        // HHH:2; HHT,THH:1; HTH,HTT,THT,TTH:0; TTT:-1
        assert_pmf(&pmf, &[(-1, 0.125), (0, 0.5), (1, 0.25), (2, 0.125)], 1e-15);
    }

    #[test]
    fn joint_table_is_monotone() {
        let t = joint_run_table(&params(3, 6, 0.45)).unwrap();
        for r in -1..=6 {
            for k in 0..=7 {
                assert!(t.get(r, k + 1) >= t.get(r, k) - 1e-15);
                assert!(t.get(r + 1, k) >= t.get(r, k) - 1e-15);
            }
        }
        assert!((t.get(6, 7) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn longest_tail_is_stochastically_monotone() {
        let tail = |nb: u32, n: u32, p: f64, k: i64| {
            let pmf = longest_open_pmf(&params(nb, n, p)).unwrap();
            pmf.mass_where(|v| v >= k)
        };
        for k in 0..6 {
            for n in 1..8 {
                assert!(tail(2, n + 1, 0.4, k) >= tail(2, n, 0.4, k) - 1e-12);
            }
            for p in [0.2, 0.4, 0.6] {
                assert!(tail(2, 7, p + 0.1, k) >= tail(2, 7, p, k) - 1e-12);
            }
        }
    }

    #[test]
    fn concentration_at_depth_500() {
        let pmf = longest_open_pmf(&params(2, 500, 0.2)).unwrap();
        let limit = -(2f64.ln()) / 0.2f64.ln();
        let inside = pmf.mass_where(|l| (l as f64 / 500.0 - limit).abs() <= 0.05);
        assert!(inside > 0.95, "{inside}");
        let pmf = longest_open_pmf(&params(2, 500, 0.6)).unwrap();
        assert!(pmf.median().unwrap() as f64 / 500.0 > 0.9);
    }

    #[test]
    fn depth_guard() {
        assert!(matches!(
            joint_run_table(&params(2, 2001, 0.5)),
            Err(Error::ScaleGuard { .. })
        ));
    }
}
