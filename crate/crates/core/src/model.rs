//! Tree addressing, parameter validation, path enumeration and the
//! per-replicate randomness contract.
//!
//! No tree is ever materialized. A vertex is the pair `(level, index)` with
//! `index < N^level`; the children of `(l, i)` are `(l + 1, N*i + c)` for
//! `c in 0..N`. Samplers walk this address space depth-first and draw a
//! vertex's label at the moment they first visit it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of descending paths `enumerate_paths` will materialize.
pub const MAX_ENUMERATED_PATHS: u64 = 1_000_000;

/// The random tree: branching factor `N`, depth `n`, and (for Bernoulli
/// labels) the probability `p` that a vertex is open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub branching: u32,
    pub depth: u32,
    /// `None` for continuous-fitness experiments.
    pub open_prob: Option<f64>,
}

impl ModelParams {
    /// Bernoulli-labelled tree.
    pub fn new(branching: u32, depth: u32, open_prob: f64) -> Result<Self> {
        let params = ModelParams {
            branching,
            depth,
            open_prob: Some(open_prob),
        };
        validate(&params, None)
    }

    /// Tree with i.i.d. uniform fitnesses; no `p`.
    pub fn continuous(branching: u32, depth: u32) -> Result<Self> {
        let params = ModelParams {
            branching,
            depth,
            open_prob: None,
        };
        validate(&params, None)
    }

    pub fn prob(&self) -> Result<f64> {
        self.open_prob
            .ok_or_else(|| Error::param("p", "required for Bernoulli labels"))
    }

    /// Rejects `N = 1`; the asymptotic theory is stated for `N >= 2`.
    pub fn require_theory(&self) -> Result<()> {
        require_branching(self.branching)
    }

    /// `N^level`, if it fits in a `u64`.
    pub fn level_size(&self, level: u32) -> Option<u64> {
        (self.branching as u64).checked_pow(level)
    }

    /// `(N^{n+1} - 1) / (N - 1)`, if it fits in a `u64`.
    pub fn vertex_count(&self) -> Option<u64> {
        vertex_count(self.branching, self.depth)
    }

    pub fn checked_vertex_count(&self) -> Result<u64> {
        self.vertex_count().ok_or_else(|| {
            Error::Overflow(format!(
                "N = {}, n = {} has more than 2^64 vertices",
                self.branching, self.depth
            ))
        })
    }
}

pub(crate) fn require_branching(branching: u32) -> Result<()> {
    if branching < 2 {
        return Err(Error::param("N", "theory requires N >= 2"));
    }
    Ok(())
}

pub(crate) fn require_prob(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", format!("p out of (0,1): {p}")));
    }
    Ok(())
}

/// Number of vertices of the depth-`depth` tree, or `None` on overflow.
pub fn vertex_count(branching: u32, depth: u32) -> Option<u64> {
    let n = branching as u64;
    if n == 1 {
        return (depth as u64).checked_add(1);
    }
    let mut total: u64 = 0;
    let mut level: u64 = 1;
    for l in 0..=depth {
        total = total.checked_add(level)?;
        if l < depth {
            level = level.checked_mul(n)?;
        }
    }
    Some(total)
}

/// Path-class descriptor: length `k` plus optional start level and overlap data.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathQuery {
    pub length: u32,
    pub start_level: Option<u32>,
    pub overlap: Option<u32>,
    pub overlap_pair: Option<(u32, u32)>,
}

impl PathQuery {
    pub fn length(k: u32) -> Self {
        PathQuery {
            length: k,
            ..Default::default()
        }
    }
}

/// Checks every invariant of `params` (and `query`, if given) and returns
/// the accepted parameters, or the first violated invariant. Tree size is
/// checked by the operations that address vertices, via
/// [`ModelParams::checked_vertex_count`] or their own scale guards.
pub fn validate(params: &ModelParams, query: Option<&PathQuery>) -> Result<ModelParams> {
    if params.branching < 1 {
        return Err(Error::param("N", "branching must be >= 1"));
    }
    if let Some(p) = params.open_prob {
        require_prob(p)?;
    }

    if let Some(q) = query {
        let (n, k) = (params.depth, q.length);
        if k > n {
            return Err(Error::param("k", format!("k > n ({k} > {n})")));
        }
        if let Some(j) = q.start_level {
            if j + k > n {
                return Err(Error::param("j", format!("j + k > n ({j} + {k} > {n})")));
            }
        }
        if let Some(m) = q.overlap {
            if m < 1 || m > k + 1 {
                return Err(Error::param("m", format!("m out of [1, k+1]: {m}")));
            }
        }
        if let Some((s, t)) = q.overlap_pair {
            if s > t || t > k {
                return Err(Error::param(
                    "s,t",
                    format!("need s <= t <= k, got s = {s}, t = {t}, k = {k}"),
                ));
            }
        }
    }
    Ok(*params)
}

/// A vertex of the tree by level and position within its level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexAddr {
    pub level: u32,
    pub index: u64,
}

impl VertexAddr {
    pub const ROOT: VertexAddr = VertexAddr { level: 0, index: 0 };

    pub fn parent(self, branching: u32) -> Option<VertexAddr> {
        (self.level > 0).then(|| VertexAddr {
            level: self.level - 1,
            index: self.index / branching as u64,
        })
    }

    pub fn child(self, branching: u32, choice: u32) -> VertexAddr {
        debug_assert!(choice < branching);
        VertexAddr {
            level: self.level + 1,
            index: self.index * branching as u64 + choice as u64,
        }
    }

    pub fn children(self, branching: u32) -> impl Iterator<Item = VertexAddr> {
        (0..branching).map(move |c| self.child(branching, c))
    }

    /// Position in level order (root = 0). Panics on overflow, which
    /// `validate` rules out for in-range addresses.
    pub fn flat_id(self, branching: u32) -> u64 {
        let n = branching as u64;
        let before = if n == 1 {
            self.level as u64
        } else {
            (n.pow(self.level) - 1) / (n - 1)
        };
        before + self.index
    }
}

/// A descending path: a start vertex and the child chosen at each step.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Path {
    pub start: VertexAddr,
    pub choices: Vec<u32>,
}

impl Path {
    /// Length in edges.
    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    pub fn vertices(&self, branching: u32) -> Vec<VertexAddr> {
        let mut out = Vec::with_capacity(self.choices.len() + 1);
        let mut v = self.start;
        out.push(v);
        for &c in &self.choices {
            v = v.child(branching, c);
            out.push(v);
        }
        out
    }
}

/// All descending paths with exactly `k` edges, ordered by start level,
/// then start index, then the child choices lexicographically.
pub fn enumerate_paths(params: &ModelParams, k: u32) -> Result<Vec<Path>> {
    validate(params, Some(&PathQuery::length(k)))?;
    let (nb, n) = (params.branching, params.depth);
    let count = crate::exact::path_count_u128(nb, n, k).unwrap_or(u128::MAX);
    if count > MAX_ENUMERATED_PATHS as u128 {
        return Err(Error::ScaleGuard {
            what: "descending paths",
            limit: MAX_ENUMERATED_PATHS,
            actual: count.min(u64::MAX as u128) as u64,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut digits = vec![0u32; k as usize];
    for level in 0..=(n - k) {
        let width = (nb as u64).pow(level);
        for index in 0..width {
            let start = VertexAddr { level, index };
            digits.iter_mut().for_each(|d| *d = 0);
            loop {
                out.push(Path {
                    start,
                    choices: digits.clone(),
                });
                // odometer increment, last digit fastest
                let mut wrapped = true;
                for d in digits.iter_mut().rev() {
                    *d += 1;
                    if *d < nb {
                        wrapped = false;
                        break;
                    }
                    *d = 0;
                }
                if wrapped {
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Seed material for one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub base_seed: u64,
    pub replicate_index: u64,
}

/// The randomness source of one replicate.
///
/// ChaCha8 keyed by `base_seed` (via `seed_from_u64`) with the stream id set
/// to `replicate_index`, so every replicate reads its own independent
/// keystream no matter which worker runs it. Uniforms are 53-bit doubles in
/// `[0, 1)`; a Bernoulli(p) draw consumes one uniform and is `u < p`.
#[derive(Debug, Clone)]
pub struct ReplicateRng {
    inner: ChaCha8Rng,
}

impl ReplicateRng {
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

pub fn rng_stream(stream: RngSpec) -> ReplicateRng {
    let mut inner = ChaCha8Rng::seed_from_u64(stream.base_seed);
    inner.set_stream(stream.replicate_index);
    ReplicateRng { inner }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(nb: u32, n: u32) -> ModelParams {
        ModelParams::new(nb, n, 0.5).unwrap()
    }

    #[test]
    fn validate_examples() {
        assert!(ModelParams::new(2, 3, 0.5).is_ok());
        let err = ModelParams::new(2, 3, 1.2).unwrap_err();
        assert!(err.to_string().contains("p out of (0,1)"), "{err}");
        let err = validate(&p(2, 3), Some(&PathQuery::length(5))).unwrap_err();
        assert!(err.to_string().contains("k > n"), "{err}");
    }

    #[test]
    fn validate_rejects_query_violations() {
        let q = PathQuery {
            length: 2,
            start_level: Some(2),
            ..Default::default()
        };
        assert!(validate(&p(2, 3), Some(&q)).is_err());
        let q = PathQuery {
            length: 2,
            overlap: Some(4),
            ..Default::default()
        };
        assert!(validate(&p(2, 3), Some(&q)).is_err());
        let q = PathQuery {
            length: 2,
            overlap_pair: Some((2, 1)),
            ..Default::default()
        };
        assert!(validate(&p(2, 3), Some(&q)).is_err());
        assert!(ModelParams::new(2, 64, 0.5).is_ok());
        assert!(matches!(
            ModelParams::new(2, 64, 0.5).unwrap().checked_vertex_count(),
            Err(Error::Overflow(_))
        ));
        assert!(ModelParams::new(0, 3, 0.5).is_err());
        assert!(ModelParams::new(1, 3, 0.5).unwrap().require_theory().is_err());
    }

    #[test]
    fn enumerate_small_trees() {
        let paths = enumerate_paths(&p(2, 1), 1).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].choices, vec![0]);
        assert_eq!(paths[1].choices, vec![1]);
        assert_eq!(enumerate_paths(&p(2, 2), 1).unwrap().len(), 6);
        assert_eq!(enumerate_paths(&p(2, 2), 2).unwrap().len(), 4);
        assert_eq!(enumerate_paths(&p(3, 2), 0).unwrap().len(), 13);
    }

    #[test]
    fn enumeration_order_is_lexicographic() {
        let paths = enumerate_paths(&p(3, 3), 2).unwrap();
        assert!(paths.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn enumeration_guard() {
        let big = ModelParams::new(2, 25, 0.5).unwrap();
        assert!(matches!(enumerate_paths(&big, 3), Err(Error::ScaleGuard { .. })));
    }

    #[test]
    fn path_count_identity() {
        for nb in 2..=3u32 {
            for n in 0..=5u32 {
                for k in 0..=n {
                    let got = enumerate_paths(&p(nb, n), k).unwrap().len() as u64;
                    let nb64 = nb as u64;
                    let want = (nb64.pow(n + 1) - nb64.pow(k)) / (nb64 - 1);
                    assert_eq!(got, want, "N={nb} n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn address_algebra_round_trips() {
        for nb in 2..=4u32 {
            for level in 1..=6u32 {
                for index in 0..(nb as u64).pow(level) {
                    let v = VertexAddr { level, index };
                    let parent = v.parent(nb).unwrap();
                    assert!(parent.children(nb).any(|c| c == v));
                    assert_eq!(parent.child(nb, (index % nb as u64) as u32), v);
                }
            }
        }
        assert_eq!(VertexAddr::ROOT.parent(2), None);
    }

    #[test]
    fn flat_ids_are_level_order() {
        let nb = 3;
        let mut expected = 0;
        for level in 0..=4u32 {
            for index in 0..3u64.pow(level) {
                assert_eq!(VertexAddr { level, index }.flat_id(nb), expected);
                expected += 1;
            }
        }
        assert_eq!(vertex_count(3, 4), Some(expected));
        assert_eq!(vertex_count(1, 9), Some(10));
    }

    #[test]
    fn rng_is_deterministic_and_streams_differ() {
        let stream = RngSpec {
            base_seed: 42,
            replicate_index: 3,
        };
        let a: Vec<f64> = {
            let mut r = rng_stream(stream);
            (0..64).map(|_| r.uniform()).collect()
        };
        let b: Vec<f64> = {
            let mut r = rng_stream(stream);
            (0..64).map(|_| r.uniform()).collect()
        };
        assert_eq!(a, b);
        let mut other = rng_stream(RngSpec {
            replicate_index: 4,
            ..stream
        });
        let c: Vec<f64> = (0..64).map(|_| other.uniform()).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_mean_within_clt_band() {
        let mut r = rng_stream(RngSpec {
            base_seed: 1,
            replicate_index: 0,
        });
        let k = 1_000_000;
        let mean = (0..k).map(|_| r.uniform()).sum::<f64>() / k as f64;
        assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
    }

    #[test]
    fn independent_streams_are_uncorrelated() {
        let mut a = rng_stream(RngSpec {
            base_seed: 9,
            replicate_index: 0,
        });
        let mut b = rng_stream(RngSpec {
            base_seed: 9,
            replicate_index: 1,
        });
        let k = 200_000;
        let cov = (0..k).map(|_| (a.uniform() - 0.5) * (b.uniform() - 0.5)).sum::<f64>() / k as f64;
        // sd of the product mean is (1/12)/sqrt(k) ~ 1.9e-4
        assert!(cov.abs() < 1e-3, "cov {cov}");
    }
}
