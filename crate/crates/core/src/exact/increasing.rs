//! Increasing paths under continuous fitnesses: expected counts, the
//! Lambert-type centering `f_{N,n}`, the Poisson envelope for the longest
//! increasing path, and its error terms.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};

use num_bigint::BigUint;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::exact::counts::path_count;
use crate::model::{require_branching, validate, ModelParams, PathQuery};
use crate::numeric::{ln_factorial, ln_path_count};
use crate::pmf::{Pmf, NO_PATH};

/// `E(T~_{n,k}) = M / (k+1)!`, via logs. Zero for `k > n`.
pub fn expected_increasing_count(params: &ModelParams, k: u32) -> Result<f64> {
    validate(params, Some(&PathQuery::length(k)))?;
    Ok(lambda(params.branching, params.depth, k as i64))
}

/// `M / (k+1)!` as an exact rational.
pub fn expected_increasing_count_exact(params: &ModelParams, k: u32) -> Result<BigRational> {
    let m = path_count(params.branching, params.depth, k)?;
    let fact: BigUint = (1..=k as u64 + 1).map(BigUint::from).product();
    Ok(BigRational::new(m.into(), fact.into()))
}

/// `lambda(k) = E(T~_{n,k})`, extended by `+inf` for `k < 0` (so that
/// `exp(-lambda) = P(L~ < k) = 0`) and `0` for `k > n`.
pub(crate) fn lambda(branching: u32, depth: u32, k: i64) -> f64 {
    if k < 0 {
        f64::INFINITY
    } else if k > depth as i64 {
        0.0
    } else {
        let k = k as u32;
        (ln_path_count(branching, depth, k) - ln_factorial(k as u64 + 1)).exp()
    }
}

/// Solution of `b e^b = e^{-1} n ln N` and the centering
/// `f = n ln N / b - 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Centering {
    pub b: f64,
    pub f: f64,
    /// `f - floor(f)`.
    pub frac: f64,
    pub floor: i64,
}

/// Bisection to bracket, then Newton polish on `g(b) = b e^b - target`.
pub fn solve_b_f(branching: u32, depth: u32) -> Result<Centering> {
    require_branching(branching)?;
    if depth < 1 {
        return Err(Error::param("n", "need n >= 1"));
    }
    let log_mass = depth as f64 * (branching as f64).ln();
    let target = log_mass / E;
    let g = |b: f64| b * b.exp() - target;

    // x e^x is increasing on [0, inf); g(0) < 0 and g(hi) >= 0.
    let mut lo = 0.0;
    let mut hi = target.ln_1p().max(1.0);
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-6 * hi {
            break;
        }
    }
    let mut b = 0.5 * (lo + hi);
    for _ in 0..50 {
        let step = g(b) / ((b + 1.0) * b.exp());
        b -= step;
        if step.abs() <= f64::EPSILON * b {
            break;
        }
    }
    // settle on the representable neighbour with the smallest residual
    let mut best = b;
    let mut cand = b;
    for _ in 0..4 {
        cand = cand.next_down();
        if g(cand).abs() < g(best).abs() {
            best = cand;
        }
    }
    cand = b;
    for _ in 0..4 {
        cand = cand.next_up();
        if g(cand).abs() < g(best).abs() {
            best = cand;
        }
    }
    let b = best;
    if g(b).abs() >= 1e-10 * (1.0 + target) {
        return Err(Error::Numerical(format!(
            "b e^b = {target} solved only to residual {}",
            g(b)
        )));
    }
    let f = log_mass / b - 0.5;
    let floor = f.floor();
    Ok(Centering {
        b,
        f,
        frac: f - floor,
        floor: floor as i64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaRatio {
    /// `N^n / Gamma(f + x + 1)`.
    pub exact_ratio: f64,
    /// `exp(-x ln(f + x)) / sqrt(2 pi)`.
    pub stirling_equivalent: f64,
}

pub fn gamma_ratio(branching: u32, depth: u32, x: f64) -> Result<GammaRatio> {
    let c = solve_b_f(branching, depth)?;
    let y = c.f + x;
    if y.is_nan() || y <= 0.0 {
        return Err(Error::param("x", format!("need f + x > 0, got f = {}, x = {x}", c.f)));
    }
    let ln_num = depth as f64 * (branching as f64).ln();
    Ok(GammaRatio {
        exact_ratio: (ln_num - ln_gamma(y + 1.0)).exp(),
        stirling_equivalent: (-x * y.ln()).exp() / (2.0 * PI).sqrt(),
    })
}

/// `q = 8N/(2k+3)` and the total-variation bound
/// `D(N,k) = (k+2) N^k/(k+1)! + 4N/((k+2)(1-q))` between `T~_{n,k}` and a
/// Poisson law with the same mean. Reported as-is even when it exceeds 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvBound {
    pub q: f64,
    pub d: f64,
}

pub fn tv_bound(branching: u32, k: u32) -> Result<TvBound> {
    require_branching(branching)?;
    let nb = branching as f64;
    let kf = k as f64;
    let q = 8.0 * nb / (2.0 * kf + 3.0);
    if q >= 1.0 {
        return Err(Error::Undefined(format!(
            "bound undefined at this k: q = 8N/(2k+3) = {q} >= 1 (N = {branching}, k = {k})"
        )));
    }
    let first = ((kf + 2.0).ln() + kf * nb.ln() - ln_factorial(k as u64 + 1)).exp();
    let second = 4.0 * nb / ((kf + 2.0) * (1.0 - q));
    Ok(TvBound { q, d: first + second })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorollarySide {
    /// `{f} -> 0`: mass splits between `[f]-1` and `[f]`.
    Low,
    /// `{f} -> 1`: mass splits between `[f]` and `[f]+1`.
    High,
}

/// The two-point limit law along a subsequence with `{f}` near 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorollaryLaw {
    pub side: CorollarySide,
    pub a: f64,
    /// `(value, mass)` of the lower support point relative to `[f]`:
    /// offset -1 on the low side, 0 on the high side.
    pub lower_offset: i64,
    pub lower_mass: f64,
    pub upper_mass: f64,
}

/// Low side: `P(L~ = [f]-1) = exp(-N e^a / (sqrt(2 pi)(N-1)))`.
/// High side: `P(L~ = [f]) = exp(-N e^{-a} / (sqrt(2 pi)(N-1)))`.
pub fn corollary_mass(branching: u32, a: f64, side: CorollarySide) -> Result<f64> {
    require_branching(branching)?;
    if a.is_nan() || a < 0.0 {
        return Err(Error::param("a", format!("need a in [0, inf], got {a}")));
    }
    let nb = branching as f64;
    let scale = nb / ((2.0 * PI).sqrt() * (nb - 1.0));
    let rate = match side {
        CorollarySide::Low => scale * a.exp(),
        CorollarySide::High => scale * (-a).exp(),
    };
    Ok((-rate).exp())
}

pub fn corollary_law(branching: u32, a: f64, side: CorollarySide) -> Result<CorollaryLaw> {
    let lower_mass = corollary_mass(branching, a, side)?;
    Ok(CorollaryLaw {
        side,
        a,
        lower_offset: match side {
            CorollarySide::Low => -1,
            CorollarySide::High => 0,
        },
        lower_mass,
        upper_mass: 1.0 - lower_mass,
    })
}

/// Poisson-envelope prediction for the longest increasing path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncreasingPrediction {
    pub branching: u32,
    pub depth: u32,
    pub b: f64,
    pub f: f64,
    pub frac: f64,
    /// `k -> lambda(k)` for `k` in `[f]-2 ..= [f]+3` (non-negative `k` only).
    pub lambda_at: BTreeMap<i64, f64>,
    /// `k -> (q, D(N,k))` where the bound is defined.
    pub tv_bound_at: BTreeMap<i64, TvBound>,
    /// `([f]-1, [f], [f]+1)`.
    pub window: (i64, i64, i64),
    /// `exp(-lambda([f]+2)) - exp(-lambda([f]-1))`.
    pub window_mass: f64,
    /// Predicted `P(L~ = k) = exp(-lambda(k+1)) - exp(-lambda(k))` for `k`
    /// in `[f]-2 ..= [f]+2`.
    pub point_masses: BTreeMap<i64, f64>,
    /// `a` of the nearer two-point limit: `{f} ln f` (low side) when
    /// `{f} < 1/2`, else `(1 - {f}) ln f` (high side).
    pub corollary: Option<(CorollarySide, f64)>,
}

impl IncreasingPrediction {
    /// Envelope value of `P(L~ < k)`.
    pub fn below(&self, k: i64) -> f64 {
        (-lambda(self.branching, self.depth, k)).exp()
    }
}

pub fn increasing_window_prediction(branching: u32, depth: u32) -> Result<IncreasingPrediction> {
    require_branching(branching)?;
    if depth < 2 {
        return Err(Error::param("n", "window prediction needs n >= 2"));
    }
    let c = solve_b_f(branching, depth)?;
    let fl = c.floor;
    let lam = |k: i64| lambda(branching, depth, k);
    let below = |k: i64| (-lam(k)).exp();

    let lambda_at = ((fl - 2)..=(fl + 3)).filter(|&k| k >= 0).map(|k| (k, lam(k))).collect();
    let tv_bound_at = ((fl - 2)..=(fl + 3))
        .filter(|&k| k >= 0)
        .filter_map(|k| tv_bound(branching, k as u32).ok().map(|t| (k, t)))
        .collect();
    let point_masses = ((fl - 2)..=(fl + 2))
        .filter(|&k| k >= 0)
        .map(|k| (k, below(k + 1) - below(k)))
        .collect();
    let corollary = (c.f > 1.0).then(|| {
        if c.frac < 0.5 {
            (CorollarySide::Low, c.frac * c.f.ln())
        } else {
            (CorollarySide::High, (1.0 - c.frac) * c.f.ln())
        }
    });
    Ok(IncreasingPrediction {
        branching,
        depth,
        b: c.b,
        f: c.f,
        frac: c.frac,
        lambda_at,
        tv_bound_at,
        window: (fl - 1, fl, fl + 1),
        window_mass: below(fl + 2) - below(fl - 1),
        point_masses,
        corollary,
    })
}

/// The whole envelope law `P(L~ = k) = exp(-lambda(k+1)) - exp(-lambda(k))`
/// on `0..=n`. Its defect `exp(-lambda(0)) = exp(-V)` (the envelope's
/// `P(L~ < 0)`) sits on the [`NO_PATH`] sentinel.
pub fn increasing_envelope_pmf(branching: u32, depth: u32) -> Result<Pmf> {
    require_branching(branching)?;
    let lam = |k: i64| lambda(branching, depth, k);
    let below = |k: i64| (-lam(k)).exp();
    let mut points = vec![(NO_PATH, below(0))];
    points.extend((0..=depth as i64).map(|k| (k, below(k + 1) - below(k))));
    Pmf::new(points)
}

/// `(2k+2-s-t)! / ((2k+2-s)! (k+1-s)! (k+1-t)!)` for `0 <= s <= t <= k`.
///
/// Closed form offered for the joint-increase probability of two
/// overlapping length-`k` paths. It disagrees with exhaustive rank enumeration (e.g.
/// `(k,s,t) = (1,0,0)` gives 1/4 where two edges out of a shared start
/// are jointly increasing with probability 1/3); callers that need the
/// true value should use the rank-order oracle.
pub fn pair_increasing_closed_form(k: u32, s: u32, t: u32) -> Result<f64> {
    if s > t || t > k {
        return Err(Error::param(
            "s,t",
            format!("need s <= t <= k, got s = {s}, t = {t}, k = {k}"),
        ));
    }
    let lf = |x: u32| ln_factorial(x as u64);
    let ln = lf(2 * k + 2 - s - t) - lf(2 * k + 2 - s) - lf(k + 1 - s) - lf(k + 1 - t);
    Ok(ln.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn expected_increasing_examples() {
        let p = ModelParams::continuous(2, 2).unwrap();
        assert!(close(expected_increasing_count(&p, 1).unwrap(), 3.0, 1e-14));
        let exact = expected_increasing_count_exact(&p, 1).unwrap();
        assert_eq!(exact, BigRational::from_integer(3.into()));
        let p = ModelParams::continuous(3, 4).unwrap();
        assert!(close(expected_increasing_count(&p, 0).unwrap(), 121.0, 1e-11));
        // (2^17 - 2^8) / 9! = 130816 / 362880
        let p = ModelParams::continuous(2, 16).unwrap();
        let got = expected_increasing_count(&p, 8).unwrap();
        assert!(close(got, 130816.0 / 362880.0, 1e-14), "{got}");
    }

    #[test]
    fn centering_examples() {
        let c = solve_b_f(2, 16).unwrap();
        // mpmath lambertw: b = 1.2129885835161411, f = 8.6430002224844079
        assert!(close(c.b, 1.212_988_583_516_141, 1e-12));
        assert!(close(c.f, 8.643_000_222_484_408, 1e-11));
        assert_eq!(c.floor, 8);
        let c = solve_b_f(2, 1_000_000).unwrap();
        assert!(close(c.b, 10.133_182_229_329_088, 1e-12));
        assert!(close(c.f, 68_403.202_299_335_65, 1e-7));
    }

    #[test]
    fn centering_residual_and_monotonicity() {
        for nb in [2u32, 3] {
            let mut prev = 0.0;
            let mut n = 4u32;
            while n <= 1_000_000 {
                let c = solve_b_f(nb, n).unwrap();
                let target = n as f64 * (nb as f64).ln() / E;
                assert!((c.b * c.b.exp() - target).abs() < 1e-9, "N={nb} n={n}");
                assert!(c.b > prev);
                assert!((0.0..1.0).contains(&c.frac));
                prev = c.b;
                n = (n as f64 * 1.37).ceil() as u32;
            }
        }
    }

    #[test]
    fn gamma_ratio_trends() {
        let ns = [100u32, 1_000, 10_000, 100_000];
        let plus: Vec<f64> = ns
            .iter()
            .map(|&n| gamma_ratio(2, n, 0.5).unwrap().exact_ratio)
            .collect();
        let minus: Vec<f64> = ns
            .iter()
            .map(|&n| gamma_ratio(2, n, -0.5).unwrap().exact_ratio)
            .collect();
        assert!(plus.windows(2).all(|w| w[1] < w[0]));
        assert!(minus.windows(2).all(|w| w[1] > w[0]));
        // mpmath: 0.0736213, 36.9967
        assert!(close(plus[0], 0.073_621_284_201_555_61, 1e-10));
        assert!(close(minus[3], 36.996_707_474_934_475, 1e-7));
        let mid = gamma_ratio(2, 1_000_000, 0.0).unwrap();
        let limit = 1.0 / (2.0 * PI).sqrt();
        assert!(((mid.exact_ratio - limit) / limit).abs() < 0.05);
        assert_eq!(mid.stirling_equivalent, limit);
        assert!(gamma_ratio(2, 16, -20.0).is_err());
    }

    #[test]
    fn tv_bound_examples() {
        let t = tv_bound(2, 10).unwrap();
        assert!(close(t.q, 16.0 / 23.0, 1e-15));
        assert!(close(t.d, 2.190_784_030_784_030_7, 1e-12));
        assert!(matches!(tv_bound(2, 6), Err(Error::Undefined(_))));
        let ds: Vec<f64> = [20u32, 50, 100, 1000, 10_000]
            .iter()
            .map(|&k| tv_bound(2, k).unwrap().d)
            .collect();
        assert!(ds.windows(2).all(|w| w[1] < w[0]));
        assert!(*ds.last().unwrap() < 0.01);
    }

    #[test]
    fn window_prediction_example() {
        let w = increasing_window_prediction(2, 16).unwrap();
        assert_eq!(w.window, (7, 8, 9));
        assert!(close(w.lambda_at[&7], 3.247_619_047_619_047_6, 1e-12));
        assert!(close(w.lambda_at[&8], 0.360_493_827_160_493_83, 1e-13));
        assert!(close(w.lambda_at[&9], 0.035_978_835_978_835_98, 1e-14));
        assert!(close(w.lambda_at[&10], 0.003_257_976_591_309_924_7, 1e-15));
        assert!(close(w.window_mass, 0.957_880_687_489_859, 1e-12));
        assert!(close(w.point_masses[&7], 0.658_465_242_241_819_8, 1e-12));
        assert!(close(w.point_masses[&8], 0.267_328_829_759_257_3, 1e-12));
        assert!(close(w.point_masses[&9], 0.032_086_615_488_781_89, 1e-12));
        let lams: Vec<f64> = w.lambda_at.values().copied().collect();
        assert!(lams.windows(2).all(|p| p[1] < p[0]));
        assert!(w.tv_bound_at.contains_key(&7) && !w.tv_bound_at.contains_key(&6));
        assert!((0.0..=1.0).contains(&w.window_mass));
        assert_eq!(w.corollary.map(|c| c.0), Some(CorollarySide::High));
    }

    #[test]
    fn envelope_pmf_is_a_law() {
        for (nb, n) in [(2u32, 16u32), (3, 6), (2, 3)] {
            let pmf = increasing_envelope_pmf(nb, n).unwrap();
            assert!((pmf.total() - 1.0).abs() < 1e-12);
        }
        let pmf = increasing_envelope_pmf(2, 16).unwrap();
        let w = increasing_window_prediction(2, 16).unwrap();
        assert!(close(pmf.mass(8), w.point_masses[&8], 1e-15));
    }

    #[test]
    fn corollary_examples() {
        let m = corollary_mass(2, 0.0, CorollarySide::Low).unwrap();
        assert!(close(m, (-2.0 / (2.0 * PI).sqrt()).exp(), 1e-15));
        assert!(close(m, 0.450_280_498_321_850_5, 1e-12));
        assert_eq!(corollary_mass(2, f64::INFINITY, CorollarySide::Low).unwrap(), 0.0);
        assert_eq!(corollary_mass(3, f64::INFINITY, CorollarySide::High).unwrap(), 1.0);
        let law = corollary_law(2, 0.0, CorollarySide::Low).unwrap();
        assert!(close(law.lower_mass + law.upper_mass, 1.0, 1e-15));
        assert!(corollary_mass(2, -1.0, CorollarySide::Low).is_err());
    }

    #[test]
    fn pair_closed_form_examples() {
        assert!(close(pair_increasing_closed_form(1, 0, 0).unwrap(), 0.25, 1e-15));
        assert!(pair_increasing_closed_form(1, 1, 0).is_err());
        // nonincreasing in t
        for k in 1..6 {
            for s in 0..=k {
                let vals: Vec<f64> = (s..=k).map(|t| pair_increasing_closed_form(k, s, t).unwrap()).collect();
                assert!(vals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
            }
        }
    }
}
