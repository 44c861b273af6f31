//! Exhaustive ground truth at tiny scale.
//!
//! Open-path quantities sum over all `2^V` open/closed assignments;
//! increasing-path quantities average over all `V!` rank orderings of the
//! fitnesses, which is exact because only their relative order matters.
//! Vertices are numbered in level order, so vertex `i > 0` has parent
//! `(i - 1) / N` and every child has a larger number than its parent.

use std::collections::{BTreeMap, HashMap};

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::model::{enumerate_paths, validate, ModelParams, PathQuery, VertexAddr};
use crate::numeric::KahanSum;
use crate::pmf::Pmf;

/// Largest vertex count for assignment enumeration.
pub const MAX_ASSIGNMENT_VERTICES: u64 = 22;
/// Largest vertex count for rank-ordering enumeration of a whole tree.
pub const MAX_ORDERING_VERTICES: u64 = 9;
/// Largest path count for the ordered-pair scan.
pub const MAX_PAIR_SCAN_PATHS: u64 = 3000;
/// Largest number of distinct vertices in a pair of paths.
pub const MAX_PAIR_UNION: usize = 10;
/// Largest `rows x paths` for a [`PathIndicatorTable`].
pub const MAX_INDICATOR_CELLS: u64 = 10_000_000;

fn guarded_vertices(params: &ModelParams, limit: u64, what: &'static str) -> Result<usize> {
    validate(params, None)?;
    let v = params.vertex_count().unwrap_or(u64::MAX);
    if v > limit {
        return Err(Error::ScaleGuard { what, limit, actual: v });
    }
    Ok(v as usize)
}

#[inline]
fn parent_id(id: usize, nb: usize) -> usize {
    (id - 1) / nb
}

/// Length of the open run ending at each vertex (-1 where closed), for
/// the assignment whose bit `i` marks vertex `i` open.
fn open_runs(mask: u32, nb: usize, ending: &mut [i64]) {
    for id in 0..ending.len() {
        ending[id] = if mask >> id & 1 == 1 {
            let above = if id == 0 { -1 } else { ending[parent_id(id, nb)] };
            above + 1
        } else {
            -1
        };
    }
}

/// Law of `stat(runs)` over all assignments, weighted by
/// `p^{#open} (1-p)^{#closed}` and summed with compensation.
fn assignment_law(params: &ModelParams, stat: impl Fn(&[i64]) -> i64) -> Result<Pmf> {
    let v = guarded_vertices(params, MAX_ASSIGNMENT_VERTICES, "vertices for 2^V enumeration")?;
    let p = params.prob()?;
    let nb = params.branching as usize;
    let weight: Vec<f64> = (0..=v)
        .map(|open| p.powi(open as i32) * (1.0 - p).powi((v - open) as i32))
        .collect();
    let mut sums: BTreeMap<i64, KahanSum> = BTreeMap::new();
    let mut ending = vec![0i64; v];
    for mask in 0u32..(1u32 << v) {
        open_runs(mask, nb, &mut ending);
        sums.entry(stat(&ending))
            .or_default()
            .add(weight[mask.count_ones() as usize]);
    }
    Pmf::new(sums.into_iter().map(|(k, s)| (k, s.value())))
}

/// Exact law of `Theta_n`: leaves whose run from the root is open.
pub fn theta_pmf_bruteforce(params: &ModelParams) -> Result<Pmf> {
    let n = params.depth as i64;
    let leaves = params.level_size(params.depth).unwrap_or(u64::MAX) as usize;
    assignment_law(params, |ending| {
        let first_leaf = ending.len() - leaves;
        ending[first_leaf..].iter().filter(|&&r| r == n).count() as i64
    })
}

/// Exact law of `L_{N,n}`: the longest run ending anywhere, -1 if none.
pub fn longest_open_pmf_bruteforce(params: &ModelParams) -> Result<Pmf> {
    assignment_law(params, |ending| ending.iter().copied().max().unwrap_or(-1))
}

/// Exact law of `T_{n,k}`: a length-`k` open path ends at each vertex
/// whose open run is at least `k`.
pub fn open_count_pmf_bruteforce(params: &ModelParams, k: u32) -> Result<Pmf> {
    validate(params, Some(&PathQuery::length(k)))?;
    let k = k as i64;
    assignment_law(params, |ending| ending.iter().filter(|&&r| r >= k).count() as i64)
}

/// Calls `f` once for every permutation of `0..n` (Heap's algorithm).
fn for_each_permutation(n: usize, mut f: impl FnMut(&[u8])) {
    let mut a: Vec<u8> = (0..n as u8).collect();
    let mut c = vec![0usize; n];
    f(&a);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(&a);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Exact counts of `stat(ranks)` over all `V!` orderings, and `V!`.
fn ordering_counts(params: &ModelParams, stat: impl Fn(&[u8]) -> i64) -> Result<(BTreeMap<i64, u64>, u64)> {
    let v = guarded_vertices(params, MAX_ORDERING_VERTICES, "vertices for V! enumeration")?;
    let mut counts = BTreeMap::new();
    for_each_permutation(v, |rank| *counts.entry(stat(rank)).or_insert(0) += 1);
    Ok((counts, factorial(v)))
}

/// Longest increasing path over a rank ordering.
fn longest_increasing(rank: &[u8], nb: usize) -> i64 {
    let v = rank.len();
    let mut s = vec![0i64; v];
    for id in (0..v).rev() {
        let mut best = 0;
        for c in (nb * id + 1)..(nb * id + nb + 1).min(v) {
            if rank[c] > rank[id] {
                best = best.max(s[c] + 1);
            }
        }
        s[id] = best;
    }
    s.into_iter().max().unwrap_or(0)
}

/// Exact law of `L~_{N,n}` as counts over the `V!` orderings.
pub fn increasing_law_counts(params: &ModelParams) -> Result<(BTreeMap<i64, u64>, u64)> {
    let nb = params.branching as usize;
    ordering_counts(params, |rank| longest_increasing(rank, nb))
}

/// Exact law of `L~_{N,n}` in double precision.
pub fn increasing_pmf_bruteforce(params: &ModelParams) -> Result<Pmf> {
    let (counts, total) = increasing_law_counts(params)?;
    Pmf::new(counts.into_iter().map(|(v, c)| (v, c as f64 / total as f64)))
}

/// Number of length-`k` increasing paths under a rank ordering.
fn increasing_count(rank: &[u8], nb: usize, k: i64) -> i64 {
    let mut run = vec![0i64; rank.len()];
    let mut count = i64::from(k == 0);
    for id in 1..rank.len() {
        let up = parent_id(id, nb);
        run[id] = if rank[id] > rank[up] { run[up] + 1 } else { 0 };
        count += i64::from(run[id] >= k);
    }
    count
}

/// `E(T~_{n,k})` exactly, by averaging over all orderings.
pub fn increasing_count_mean_bruteforce(params: &ModelParams, k: u32) -> Result<Ratio<u64>> {
    validate(params, Some(&PathQuery::length(k)))?;
    let nb = params.branching as usize;
    let (counts, total) = ordering_counts(params, |rank| increasing_count(rank, nb, k as i64))?;
    let sum: u64 = counts.iter().map(|(&v, &c)| v as u64 * c).sum();
    Ok(Ratio::new(sum, total))
}

/// Ordered pairs of length-`k` paths by shared-vertex count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapPairs {
    /// `a[m-1]` = pairs sharing exactly `m` vertices, `1 <= m <= k+1`.
    pub a: Vec<u64>,
    pub disjoint: u64,
    pub path_count: u64,
}

fn path_vertex_sets(params: &ModelParams, k: u32) -> Result<Vec<Vec<u64>>> {
    let m = crate::exact::path_count_u128(params.branching, params.depth, k).unwrap_or(u128::MAX);
    if m > MAX_PAIR_SCAN_PATHS as u128 {
        return Err(Error::ScaleGuard {
            what: "paths for the M^2 pair scan",
            limit: MAX_PAIR_SCAN_PATHS,
            actual: m.min(u64::MAX as u128) as u64,
        });
    }
    let nb = params.branching;
    Ok(enumerate_paths(params, k)?
        .iter()
        .map(|path| path.vertices(nb).iter().map(|v| v.flat_id(nb)).collect())
        .collect())
}

/// Paths are ascending in flat id, so the intersection is a merge.
fn shared_count(a: &[u64], b: &[u64]) -> usize {
    let (mut i, mut j, mut shared) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    shared
}

/// Scans all `M^2` ordered pairs of length-`k` paths.
pub fn enumerate_overlap_pairs(params: &ModelParams, k: u32) -> Result<OverlapPairs> {
    let sets = path_vertex_sets(params, k)?;
    let mut hist = vec![0u64; k as usize + 2];
    for a in &sets {
        for b in &sets {
            hist[shared_count(a, b)] += 1;
        }
    }
    Ok(OverlapPairs {
        disjoint: hist[0],
        a: hist[1..].to_vec(),
        path_count: sets.len() as u64,
    })
}

/// Exact `Var(T_{n,k})`. Small trees use the assignment law of `T_{n,k}`;
/// larger ones use `E(T^2) = sum over ordered pairs of p^{|P u P~|}`, a
/// pair scan that never touches the closed forms.
pub fn variance_bruteforce(params: &ModelParams, k: u32) -> Result<f64> {
    validate(params, Some(&PathQuery::length(k)))?;
    let v = params.vertex_count().unwrap_or(u64::MAX);
    if v <= MAX_ASSIGNMENT_VERTICES {
        open_count_pmf_bruteforce(params, k).map(|law| law.variance())
    } else {
        variance_by_pairs(params, k)
    }
}

/// `Var(T_{n,k})` from the ordered-pair scan alone.
pub fn variance_by_pairs(params: &ModelParams, k: u32) -> Result<f64> {
    let p = params.prob()?;
    let pairs = enumerate_overlap_pairs(params, k)?;
    let size = 2 * (k as i32 + 1);
    let mut second = KahanSum::new();
    second.add(pairs.disjoint as f64 * p.powi(size));
    for (i, &count) in pairs.a.iter().enumerate() {
        second.add(count as f64 * p.powi(size - (i as i32 + 1)));
    }
    let first = pairs.path_count as f64 * p.powi(k as i32 + 1);
    Ok(second.value() - first * first)
}

/// Per-realization indicators of every length-`k` path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathIndicatorTable {
    pub length: u32,
    pub path_count: usize,
    /// Probability of each row's realization.
    pub weights: Vec<f64>,
    /// `rows[r][i]`: path `i` (in [`enumerate_paths`] order) is open, or
    /// increasing, in realization `r`.
    pub rows: Vec<Vec<bool>>,
}

impl PathIndicatorTable {
    /// The path count in each realization.
    pub fn totals(&self) -> Vec<i64> {
        self.rows
            .iter()
            .map(|r| r.iter().filter(|&&b| b).count() as i64)
            .collect()
    }
}

fn indicator_guard(rows: u64, paths: usize) -> Result<()> {
    let cells = rows.saturating_mul(paths as u64);
    if cells > MAX_INDICATOR_CELLS {
        return Err(Error::ScaleGuard {
            what: "indicator table cells",
            limit: MAX_INDICATOR_CELLS,
            actual: cells,
        });
    }
    Ok(())
}

/// Open indicators over all assignments.
pub fn open_indicator_table(params: &ModelParams, k: u32) -> Result<PathIndicatorTable> {
    let v = guarded_vertices(params, MAX_ASSIGNMENT_VERTICES, "vertices for 2^V enumeration")?;
    let p = params.prob()?;
    let nb = params.branching;
    let paths: Vec<Vec<u64>> = enumerate_paths(params, k)?
        .iter()
        .map(|path| path.vertices(nb).iter().map(|x| x.flat_id(nb)).collect())
        .collect();
    indicator_guard(1 << v, paths.len())?;
    let mut weights = Vec::with_capacity(1 << v);
    let mut rows = Vec::with_capacity(1 << v);
    for mask in 0u32..(1u32 << v) {
        let open = mask.count_ones() as i32;
        weights.push(p.powi(open) * (1.0 - p).powi(v as i32 - open));
        rows.push(
            paths
                .iter()
                .map(|ids| ids.iter().all(|&i| mask >> i & 1 == 1))
                .collect(),
        );
    }
    Ok(PathIndicatorTable {
        length: k,
        path_count: paths.len(),
        weights,
        rows,
    })
}

/// Increasing indicators over all rank orderings, each of weight `1/V!`.
pub fn increasing_indicator_table(params: &ModelParams, k: u32) -> Result<PathIndicatorTable> {
    let v = guarded_vertices(params, MAX_ORDERING_VERTICES, "vertices for V! enumeration")?;
    let nb = params.branching;
    let paths: Vec<Vec<u64>> = enumerate_paths(params, k)?
        .iter()
        .map(|path| path.vertices(nb).iter().map(|x| x.flat_id(nb)).collect())
        .collect();
    let total = factorial(v);
    indicator_guard(total, paths.len())?;
    let mut rows = Vec::with_capacity(total as usize);
    for_each_permutation(v, |rank| {
        rows.push(
            paths
                .iter()
                .map(|ids| ids.windows(2).all(|w| rank[w[0] as usize] < rank[w[1] as usize]))
                .collect(),
        );
    });
    Ok(PathIndicatorTable {
        length: k,
        path_count: paths.len(),
        weights: vec![1.0 / total as f64; total as usize],
        rows,
    })
}

/// The distinct vertices of two paths and each path as indices into them.
fn pair_union(a: &[VertexAddr], b: &[VertexAddr]) -> Result<(usize, Vec<usize>, Vec<usize>)> {
    let mut ids: HashMap<VertexAddr, usize> = HashMap::new();
    let mut index = |v: VertexAddr| {
        let next = ids.len();
        *ids.entry(v).or_insert(next)
    };
    let ia: Vec<usize> = a.iter().map(|&v| index(v)).collect();
    let ib: Vec<usize> = b.iter().map(|&v| index(v)).collect();
    for path in [&ia, &ib] {
        let mut seen = path.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != path.len() {
            return Err(Error::param("path", "a path repeats a vertex"));
        }
    }
    let u = ids.len();
    if u > MAX_PAIR_UNION {
        return Err(Error::ScaleGuard {
            what: "distinct vertices in a path pair",
            limit: MAX_PAIR_UNION as u64,
            actual: u as u64,
        });
    }
    Ok((u, ia, ib))
}

/// `P(both paths increasing)` exactly: orderings of the distinct vertices
/// under which both sequences increase, over `|union|!`.
pub fn pair_increasing_bruteforce(a: &[VertexAddr], b: &[VertexAddr]) -> Result<Ratio<u64>> {
    let (u, ia, ib) = pair_union(a, b)?;
    let increasing = |rank: &[u8], path: &[usize]| path.windows(2).all(|w| rank[w[0]] < rank[w[1]]);
    let mut hits = 0u64;
    for_each_permutation(u, |rank| {
        if increasing(rank, &ia) && increasing(rank, &ib) {
            hits += 1;
        }
    });
    Ok(Ratio::new(hits, factorial(u)))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    (1..=m)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=m {
                    let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `P(both paths increasing)` as the volume of
/// `{x in [0,1]^U : x_u < x_v for every step u -> v of either path}`.
///
/// In a tree the steps of two descending paths form a forest (a vertex's
/// only possible predecessor is its parent), so the volume factors as
/// `F(v, x) = prod over successors c of int_x^1 F(c, y) dy`, integrated
/// from each root. Each `F` is a polynomial of degree below `U`, so
/// Gauss-Legendre with `ceil(U/2)` nodes per level is exact up to rounding.
pub fn pair_increasing_integral(a: &[VertexAddr], b: &[VertexAddr]) -> Result<f64> {
    let (u, ia, ib) = pair_union(a, b)?;
    let mut parent: Vec<Option<usize>> = vec![None; u];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); u];
    for path in [&ia, &ib] {
        for w in path.windows(2) {
            match parent[w[1]] {
                Some(q) if q == w[0] => continue,
                Some(_) => {
                    return Err(Error::param("path", "order constraints do not form a forest"));
                }
                None => {
                    parent[w[1]] = Some(w[0]);
                    succ[w[0]].push(w[1]);
                }
            }
        }
    }
    let rule = gauss_legendre(u.div_ceil(2).max(1));

    fn tail(v: usize, x: f64, succ: &[Vec<usize>], rule: &[(f64, f64)]) -> f64 {
        succ[v]
            .iter()
            .map(|&c| {
                let half = (1.0 - x) / 2.0;
                rule.iter()
                    .map(|&(t, w)| w * half * tail(c, x + half * (t + 1.0), succ, rule))
                    .sum::<f64>()
            })
            .product()
    }

    Ok((0..u)
        .filter(|&v| parent[v].is_none())
        .map(|r| {
            rule.iter()
                .map(|&(t, w)| 0.5 * w * tail(r, 0.5 * (t + 1.0), &succ, &rule))
                .sum::<f64>()
        })
        .product())
}

/// Two length-`k` paths in a binary tree in the `(s, t)` arrangement:
/// `P = x_0..x_k` runs down the leftmost line from the root, and `P~`
/// starts at `x_{t-s}`, shares `x_{t-s}..x_t` (`s + 1` vertices) and then
/// leaves `P`.
pub fn pair_geometry(k: u32, s: u32, t: u32) -> Result<(Vec<VertexAddr>, Vec<VertexAddr>)> {
    if s > t || t > k {
        return Err(Error::param(
            "s,t",
            format!("need s <= t <= k, got s = {s}, t = {t}, k = {k}"),
        ));
    }
    let line = |from: VertexAddr, steps: u32, first: u32| {
        let mut out = vec![from];
        let mut v = from;
        for i in 0..steps {
            v = v.child(2, if i == 0 { first } else { 0 });
            out.push(v);
        }
        out
    };
    let a = line(VertexAddr::ROOT, k, 0);
    let mut b = line(a[(t - s) as usize], s, 0);
    if s < k {
        // leave P at x_{t+1}, or continue below its end when t = k
        let branch = if t < k { 1 } else { 0 };
        let tail = line(*b.last().unwrap(), k - s, branch);
        b.extend_from_slice(&tail[1..]);
    }
    Ok((a, b))
}

/// Every distinct way two length-`k` paths can sit in a tree, with at most
/// `max_union` distinct vertices: one representative per pattern of
/// shared positions, found by scanning ordered pairs in a binary tree deep
/// enough to hold two disjoint paths.
pub fn overlap_configurations(k: u32, max_union: usize) -> Result<Vec<(Vec<VertexAddr>, Vec<VertexAddr>)>> {
    let params = ModelParams::continuous(2, 2 * k + 1)?;
    let paths: Vec<Vec<VertexAddr>> = enumerate_paths(&params, k)?.iter().map(|p| p.vertices(2)).collect();
    let mut seen: HashMap<Vec<Option<usize>>, ()> = HashMap::new();
    let mut out = Vec::new();
    for a in &paths {
        for b in &paths {
            let pattern: Vec<Option<usize>> = b.iter().map(|v| a.iter().position(|w| w == v)).collect();
            let union = a.len() + pattern.iter().filter(|x| x.is_none()).count();
            if union <= max_union && seen.insert(pattern, ()).is_none() {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    Ok(out)
}
