//! Moments of the spanning count, the no-path recursion, and the open-path
//! variance bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{require_branching, require_prob, validate, ModelParams, PathQuery};
use crate::numeric::{is_critical, ln_path_count};

/// Iteration cap for the fixed point of `x -> p x^N + 1 - p`.
pub const FIXED_POINT_MAX_ITERS: u64 = 10_000_000;
/// Successive-iterate tolerance for that fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-14;

/// `E(Theta_n) = N^n p^{n+1}`, evaluated in log space.
pub fn expected_theta(params: &ModelParams) -> Result<f64> {
    validate(params, None)?;
    let p = params.prob()?;
    let (nb, n) = (params.branching as f64, params.depth as f64);
    Ok((n * nb.ln() + (n + 1.0) * p.ln()).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub first_moment: f64,
    pub second_moment: f64,
    /// `S(N, p)`; undefined at the critical point `p = 1/N`.
    pub s_correction: Option<f64>,
    /// Second-moment lower bound `(E Theta)^2 / E(Theta^2)` on `P(Theta >= 1)`.
    pub lower_bound: f64,
}

/// `(1 - x^{m}) / (1 - x)` without cancellation near `x = 1`.
fn geometric_ratio(x: f64, m: u32) -> f64 {
    if x == 1.0 {
        return m as f64;
    }
    -((m as f64) * (x - 1.0).ln_1p()).exp_m1() / (1.0 - x)
}

/// Second moment of `Theta_n` and the resulting lower bound on the
/// spanning probability. Requires `N >= 2`, `n >= 1`.
pub fn theta_second_moment(params: &ModelParams) -> Result<MomentReport> {
    validate(params, None)?;
    params.require_theory()?;
    let p = params.prob()?;
    let n = params.depth;
    if n < 1 {
        return Err(Error::param("n", "second moment needs n >= 1"));
    }
    let nb = params.branching as f64;
    let e = expected_theta(params)?;

    if is_critical(params.branching, p) {
        let second = p + n as f64 * p * (1.0 - 1.0 / nb);
        return Ok(MomentReport {
            first_moment: e,
            second_moment: second,
            s_correction: None,
            lower_bound: p / (1.0 + n as f64 * (1.0 - 1.0 / nb)),
        });
    }

    let x = nb * p;
    let g = geometric_ratio(x, n - 1);
    // (N-1)/N * N^{n+1} p^{n+2} (1 - (Np)^{n-1}) / (1 - Np)
    let cross = (nb - 1.0) / nb * ((n as f64 + 1.0) * nb.ln() + (n as f64 + 2.0) * p.ln()).exp() * g;
    let second = e + (nb - 1.0) / x * e * e + cross;
    // S(N,p) = (N-1)/N (Np - (Np)^n)/(1 - Np)
    let s = (nb - 1.0) * p * g;
    let lower_bound = e / (1.0 + (nb - 1.0) * e / x + s);
    Ok(MomentReport {
        first_moment: e,
        second_moment: second,
        s_correction: Some(s),
        lower_bound,
    })
}

/// `Q_1..Q_upto` of the no-path recursion together with its limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    /// `q_values[i]` is `Q_{i+1}`.
    pub q_values: Vec<f64>,
    pub limit_q: f64,
    pub survival: f64,
}

impl SurvivalCurve {
    /// `Q_n` for `n >= 1`.
    pub fn q(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.q_values.get(i).copied())
    }
}

#[inline]
fn q_step(branching: u32, p: f64, q: f64) -> f64 {
    p * q.powi(branching as i32) + 1.0 - p
}

/// Iterates `Q_{m+1} = p Q_m^N + 1 - p` from `Q_1 = p(1-p)^N + 1 - p`.
///
/// For `p <= 1/N` the map has the single fixed point 1 on `[0, 1]` and the
/// limit is reported as exactly 1 (at `p = 1/N` the iterates creep up like
/// `1 - 2/(m(N-1))`, far too slowly to iterate out). Above `1/N` the
/// iteration from `Q_1` converges to the smallest root.
pub fn q_recursion(branching: u32, p: f64, upto: usize) -> Result<SurvivalCurve> {
    require_branching(branching)?;
    require_prob(p)?;
    let mut q_values = Vec::with_capacity(upto);
    let mut q = 1.0 - p;
    for _ in 0..upto {
        q = q_step(branching, p, q);
        q_values.push(q);
    }
    let limit_q = if p <= 1.0 / branching as f64 || is_critical(branching, p) {
        1.0
    } else {
        fixed_point(branching, p)?
    };
    Ok(SurvivalCurve {
        q_values,
        limit_q,
        survival: 1.0 - limit_q,
    })
}

fn fixed_point(branching: u32, p: f64) -> Result<f64> {
    let mut q = q_step(branching, p, 1.0 - p);
    for _ in 0..FIXED_POINT_MAX_ITERS {
        let next = q_step(branching, p, q);
        if (next - q).abs() < FIXED_POINT_TOL {
            return Ok(next);
        }
        q = next;
    }
    Err(Error::Numerical(format!(
        "no-path recursion did not settle within {FIXED_POINT_MAX_ITERS} iterations (N = {branching}, p = {p})"
    )))
}

/// `lim P(Theta_n >= 1)`: zero at or below `p = 1/N`, else `1 - Q`.
pub fn survival_limit(branching: u32, p: f64) -> Result<f64> {
    Ok(q_recursion(branching, p, 0)?.survival)
}

/// The explicit lower bound `(Np - 1)/(N - 1)` on the survival limit
/// above criticality (0 otherwise).
pub fn survival_lower_bound(branching: u32, p: f64) -> Result<f64> {
    require_branching(branching)?;
    require_prob(p)?;
    let nb = branching as f64;
    Ok(((nb * p - 1.0) / (nb - 1.0)).max(0.0))
}

/// `E(T_{n,k}) = M p^{k+1}`.
pub fn expected_open_count(params: &ModelParams, k: u32) -> Result<f64> {
    validate(params, Some(&PathQuery::length(k)))?;
    let p = params.prob()?;
    Ok((ln_path_count(params.branching, params.depth, k) + (k as f64 + 1.0) * p.ln()).exp())
}

/// Upper bound on `Var(T_{n,k})` in the three regimes of `p` against `1/N`.
pub fn variance_bound_open(params: &ModelParams, k: u32) -> Result<f64> {
    params.require_theory()?;
    let e = expected_open_count(params, k)?;
    let p = params.prob()?;
    let x = params.branching as f64 * p;
    Ok(if is_critical(params.branching, p) {
        2.0 * (k as f64 + 1.0) * e
    } else if x < 1.0 {
        2.0 / (1.0 - x) * e
    } else {
        2.0 * x.powi(k as i32 + 1) / (x - 1.0) * e
    })
}

/// In-probability limit of `L_{N,n} / n`.
pub fn lln_limit(branching: u32, p: f64) -> Result<f64> {
    require_branching(branching)?;
    require_prob(p)?;
    let nb = branching as f64;
    Ok(if p < 1.0 / nb && !is_critical(branching, p) {
        -nb.ln() / p.ln()
    } else {
        1.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(nb: u32, n: u32, p: f64) -> ModelParams {
        ModelParams::new(nb, n, p).unwrap()
    }

    /// Exhaustive moments of Theta over all 2^V labelings (independent of
    /// the closed forms above).
    fn brute_theta_moments(nb: u32, n: u32, p: f64) -> (f64, f64) {
        let v = crate::model::vertex_count(nb, n).unwrap() as usize;
        let first_leaf = v - (nb as usize).pow(n);
        let (mut m1, mut m2) = (0.0, 0.0);
        for mask in 0u32..(1 << v) {
            let open = |i: usize| mask >> i & 1 == 1;
            let mut reach = vec![false; v];
            reach[0] = open(0);
            for i in 1..v {
                reach[i] = open(i) && reach[(i - 1) / nb as usize];
            }
            let theta = reach[first_leaf..].iter().filter(|&&r| r).count() as f64;
            let ones = mask.count_ones() as i32;
            let w = p.powi(ones) * (1.0 - p).powi(v as i32 - ones);
            m1 += w * theta;
            m2 += w * theta * theta;
        }
        (m1, m2)
    }

    #[test]
    fn first_moment_examples() {
        assert!((expected_theta(&params(2, 0, 0.7)).unwrap() - 0.7).abs() < 1e-15);
        assert!((expected_theta(&params(2, 1, 0.5)).unwrap() - 0.5).abs() < 1e-15);
        assert!((expected_theta(&params(2, 2, 0.5)).unwrap() - 0.5).abs() < 1e-15);
        let (m1, _) = brute_theta_moments(2, 2, 0.5);
        assert!((m1 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn second_moment_examples() {
        let r = theta_second_moment(&params(2, 1, 0.5)).unwrap();
        assert!((r.second_moment - 0.75).abs() < 1e-15);
        assert!((r.lower_bound - 1.0 / 3.0).abs() < 1e-15);
        assert!(r.s_correction.is_none());
        let r = theta_second_moment(&params(2, 1, 0.25)).unwrap();
        assert!((r.second_moment - 0.15625).abs() < 1e-15);
        let r = theta_second_moment(&params(2, 5, 0.5)).unwrap();
        assert!((r.second_moment - 1.75).abs() < 1e-14);
    }

    #[test]
    fn second_moment_matches_enumeration() {
        for (nb, n) in [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2)] {
            for p in [0.2, 0.3, 0.45, 0.6, 0.9] {
                let (m1, m2) = brute_theta_moments(nb, n, p);
                let r = theta_second_moment(&params(nb, n, p)).unwrap();
                assert!((r.first_moment - m1).abs() < 1e-12);
                assert!((r.second_moment - m2).abs() < 1e-12, "N={nb} n={n} p={p}");
                assert!((r.lower_bound - m1 * m1 / m2).abs() < 1e-12);
                assert!(r.second_moment >= r.first_moment.powi(2));
                assert!((0.0..=1.0).contains(&r.lower_bound));
            }
        }
    }

    #[test]
    fn second_moment_is_continuous_through_criticality() {
        let at = theta_second_moment(&params(2, 7, 0.5)).unwrap().second_moment;
        let near = theta_second_moment(&params(2, 7, 0.5 + 1e-9)).unwrap().second_moment;
        assert!((at - near).abs() < 1e-6);
    }

    #[test]
    fn theory_rejects_n_equals_one() {
        assert!(theta_second_moment(&params(1, 3, 0.5)).is_err());
        assert!(q_recursion(1, 0.5, 3).is_err());
    }

    #[test]
    fn q_recursion_examples() {
        let c = q_recursion(2, 0.5, 2).unwrap();
        assert_eq!(c.q(1), Some(0.625));
        assert_eq!(c.q(2), Some(0.6953125));
        assert_eq!(c.limit_q, 1.0);
        let c = q_recursion(2, 0.75, 5).unwrap();
        assert!((c.limit_q - 1.0 / 3.0).abs() < 1e-12);
        assert!((c.survival - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn q_is_monotone_and_limit_is_a_root() {
        for nb in [2, 3, 5] {
            for p in [0.1, 0.3, 0.5, 0.7, 0.95] {
                let c = q_recursion(nb, p, 200).unwrap();
                assert!(c.q_values.windows(2).all(|w| w[0] <= w[1]));
                assert!(c.q_values.iter().all(|&q| q > 0.0 && q <= 1.0));
                let q = c.limit_q;
                let f = p * q.powi(nb as i32) - q + 1.0 - p;
                assert!(f.abs() < 1e-12, "N={nb} p={p} f={f}");
            }
        }
    }

    #[test]
    fn survival_limit_examples() {
        assert_eq!(survival_limit(2, 0.5).unwrap(), 0.0);
        assert_eq!(survival_limit(2, 0.3).unwrap(), 0.0);
        assert!((survival_limit(2, 0.75).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        // 0.9 Q^3 - Q + 0.1 = 0 has smallest root 0.10092521257733155 (mpmath)
        let s = survival_limit(3, 0.9).unwrap();
        assert!((s - 0.899_074_787_422_668_4).abs() < 1e-12, "{s}");
        assert!(s >= 0.85);
    }

    #[test]
    fn survival_dominates_explicit_bound() {
        for nb in [2, 3, 5] {
            for p in [0.6, 0.75, 0.9] {
                let s = survival_limit(nb, p).unwrap();
                assert!(s >= survival_lower_bound(nb, p).unwrap());
            }
        }
    }

    #[test]
    fn variance_bound_branches() {
        let prm = params(2, 6, 0.25);
        let e = expected_open_count(&prm, 3).unwrap();
        assert!((variance_bound_open(&prm, 3).unwrap() - 4.0 * e).abs() < 1e-15);
        let prm = params(2, 6, 0.5);
        let e = expected_open_count(&prm, 3).unwrap();
        assert!((variance_bound_open(&prm, 3).unwrap() - 8.0 * e).abs() < 1e-15);
        let prm = params(2, 6, 0.75);
        let e = expected_open_count(&prm, 3).unwrap();
        let want = 2.0 * 1.5f64.powi(4) / 0.5 * e;
        assert!((variance_bound_open(&prm, 3).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn lln_limit_examples() {
        assert!((lln_limit(2, 0.25).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(lln_limit(2, 0.5).unwrap(), 1.0);
        assert!((lln_limit(2, 0.2).unwrap() - 0.43068).abs() < 5e-6);
    }

    #[test]
    fn first_moment_rate() {
        // ln E(T_{n,k_n}) = k_n ln p + n ln N + O(1) for k_n = [(-ln N/ln p + eps) n];
        // the O(1) term is ln((N - N^{k-n})/(N-1)) + ln p.
        let eps = 0.05;
        for (nb, p) in [(2u32, 0.2f64), (2, 0.3), (2, 0.4), (3, 0.2), (3, 0.3)] {
            let slope = -(nb as f64).ln() / p.ln() + eps;
            for n in (10..=1000).step_by(10) {
                let k = (slope * n as f64).floor() as u32;
                if k > n {
                    continue;
                }
                let e = expected_open_count(&params(nb, n, p), k).unwrap();
                let dev = e.ln() - (k as f64 * p.ln() + n as f64 * (nb as f64).ln());
                let slack = (nb as f64 / (nb as f64 - 1.0)).ln() + 1.0;
                assert!(dev.abs() <= slack, "N={nb} p={p} n={n}: {dev}");
            }
        }
    }
}
