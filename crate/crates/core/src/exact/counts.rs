//! Exact path and overlapping-pair counts.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive};

use crate::error::Result;
use crate::model::{validate, ModelParams, PathQuery};

fn big_pow(base: u32, exp: u32) -> BigUint {
    num_traits::pow(BigUint::from(base), exp as usize)
}

/// `M = (N^{n+1} - N^k)/(N - 1)`, the number of descending paths with `k`
/// edges (`n - k + 1` for `N = 1`).
pub fn path_count(branching: u32, depth: u32, k: u32) -> Result<BigUint> {
    let params = ModelParams {
        branching,
        depth,
        open_prob: None,
    };
    validate(&params, Some(&PathQuery::length(k)))?;
    Ok(path_count_big(branching, depth, k))
}

fn path_count_big(branching: u32, depth: u32, k: u32) -> BigUint {
    (k..=depth).map(|j| big_pow(branching, j)).sum()
}

/// `M` as a `u128`, or `None` on overflow. No validation.
pub fn path_count_u128(branching: u32, depth: u32, k: u32) -> Option<u128> {
    if k > depth {
        return Some(0);
    }
    let mut total: u128 = 0;
    for j in k..=depth {
        total = total.checked_add((branching as u128).checked_pow(j)?)?;
    }
    Some(total)
}

/// Overlap statistics of ordered pairs of length-`k` paths.
#[derive(Debug, Clone, PartialEq)]
pub struct CountReport {
    pub branching: u32,
    pub depth: u32,
    pub length: u32,
    pub path_count: BigUint,
    /// `overlap_counts[m-1] = a_m`: ordered pairs `(P, P~)` sharing exactly
    /// `m` vertices, `P = P~` allowed (so `a_{k+1} = M`).
    pub overlap_counts: Vec<BigUint>,
    /// `profile[m-1][j] = B(m, j)`: for one fixed path starting at level
    /// `j`, how many paths share exactly `m` vertices with it.
    pub profile: Vec<Vec<BigUint>>,
}

impl CountReport {
    /// `a_m` for `1 <= m <= k+1`.
    pub fn a(&self, m: u32) -> &BigUint {
        &self.overlap_counts[m as usize - 1]
    }

    /// The pair-count bound `2 M N^{k-m+1}`.
    pub fn bound(&self, m: u32) -> BigUint {
        BigUint::from(2u32) * &self.path_count * big_pow(self.branching, self.length + 1 - m)
    }
}

/// `B(m, j)` for a path `x_0..x_k` with `|x_0| = j`.
///
/// A path sharing exactly `m <= k` vertices either starts on `x_d` and
/// leaves it after `m` shared vertices (`d` ranges up to `k - m + 1`, capped
/// by the room `n - k - j` below), or starts `e >= 1` levels above `x_0`
/// on its ancestor line (`e` capped by `j`). When neither cap binds this is
/// `(k-m)(N-1)N^{k-m} + 2N^{k-m+1}`; near the top or bottom of the tree the
/// corresponding terms drop out.
pub fn overlap_profile_entry(branching: u32, depth: u32, k: u32, m: u32, j: u32) -> BigUint {
    debug_assert!(m >= 1 && m <= k + 1 && j + k <= depth);
    if m == k + 1 {
        return BigUint::one();
    }
    let nb = BigUint::from(branching);
    let free = k - m;
    let room_below = depth - k - j;
    let diverge = (&nb - 1u32) * big_pow(branching, free);

    // starts on x_0..x_{min(free, room_below)} and diverges while P continues
    let mut total = BigUint::from(free.min(room_below) + 1) * &diverge;
    // starts on x_{free+1} and runs past the end of P
    if free < room_below {
        total += big_pow(branching, free + 1);
    }
    // starts e = 1..min(j, free) levels above x_0 and diverges inside P
    let e_max = j.min(free);
    total += big_pow(branching, free) - big_pow(branching, free - e_max);
    // starts free + 1 levels above x_0 and ends inside P
    if free < j {
        total += 1u32;
    }
    total
}

/// `M`, the `B(m, j)` table, and `a_m = sum_j N^{k+j} B(m, j)`.
pub fn overlap_counts(params: &ModelParams, k: u32) -> Result<CountReport> {
    validate(params, Some(&PathQuery::length(k)))?;
    let (nb, n) = (params.branching, params.depth);
    let profile: Vec<Vec<BigUint>> = (1..=k + 1)
        .map(|m| (0..=n - k).map(|j| overlap_profile_entry(nb, n, k, m, j)).collect())
        .collect();
    let overlap_counts = profile
        .iter()
        .map(|row| row.iter().enumerate().map(|(j, b)| big_pow(nb, k + j as u32) * b).sum())
        .collect();
    Ok(CountReport {
        branching: nb,
        depth: n,
        length: k,
        path_count: path_count_big(nb, n, k),
        overlap_counts,
        profile,
    })
}

/// Summed closed form
/// `a_m = (N^{n+k-m+2} - N^{2k-m+1})/(N-1) + (N^{n+k-m+1} - N^{2k-m+1})/(N-1) - (2k-2m+1) N^{2k-m}`
/// for `1 <= m <= k`, and `M` for `m = k + 1`.
///
/// The formula sums the three per-level regimes of `B(m, j)` as if they
/// partitioned `0..=n-k`; that only holds for `n >= 2k - m`. Outside that
/// range it no longer counts pairs and `None` is returned.
pub fn overlap_count_closed_form(branching: u32, depth: u32, k: u32, m: u32) -> Option<BigInt> {
    if branching < 2 || k > depth || m < 1 || m > k + 1 {
        return None;
    }
    if m == k + 1 {
        return Some(path_count_big(branching, depth, k).into());
    }
    if depth + m < 2 * k {
        return None;
    }
    let pw = |e: u32| BigInt::from(big_pow(branching, e));
    let nm1 = BigInt::from(branching - 1);
    let (n, k, m) = (depth, k, m);
    let first = (pw(n + k - m + 2) - pw(2 * k - m + 1)) / &nm1;
    let second = (pw(n + k - m + 1) - pw(2 * k - m + 1)) / &nm1;
    let third = BigInt::from(2 * (k - m) + 1) * pw(2 * k - m);
    Some(first + second - third)
}

/// Lossy conversion for reporting.
pub fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}
