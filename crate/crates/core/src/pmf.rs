//! Probability mass functions over the integers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::KahanSum;

/// Support point meaning "no qualifying path or vertex".
pub const NO_PATH: i64 = -1;

/// Total-mass tolerance enforced at construction.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A finite law on the integers, sorted by support value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    masses: BTreeMap<i64, f64>,
}

impl Pmf {
    /// Builds a pmf, merging repeated support points. Masses must be
    /// non-negative and sum to 1 within [`MASS_TOLERANCE`]; no
    /// renormalization is applied.
    pub fn new(points: impl IntoIterator<Item = (i64, f64)>) -> Result<Self> {
        let mut masses = BTreeMap::new();
        for (v, m) in points {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::Numerical(format!("mass {m} at {v}")));
            }
            *masses.entry(v).or_insert(0.0) += m;
        }
        let pmf = Pmf { masses };
        let total = pmf.total();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Numerical(format!(
                "total mass {total} differs from 1 by more than {MASS_TOLERANCE:e}"
            )));
        }
        Ok(pmf)
    }

    pub fn point(v: i64) -> Self {
        Pmf {
            masses: BTreeMap::from([(v, 1.0)]),
        }
    }

    pub fn mass(&self, v: i64) -> f64 {
        self.masses.get(&v).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.masses.iter().map(|(&v, &m)| (v, m))
    }

    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.masses.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.masses.values().copied().collect::<KahanSum>().value()
    }

    /// `P(X <= v)`.
    pub fn cdf(&self, v: i64) -> f64 {
        self.masses.range(..=v).map(|(_, &m)| m).collect::<KahanSum>().value()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn moment(&self, order: i32) -> f64 {
        self.iter()
            .map(|(v, m)| (v as f64).powi(order) * m)
            .collect::<KahanSum>()
            .value()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.iter()
            .map(|(v, m)| (v as f64 - mu).powi(2) * m)
            .collect::<KahanSum>()
            .value()
    }

    /// Smallest `v` with `P(X <= v) >= q`.
    pub fn quantile(&self, q: f64) -> Option<i64> {
        let mut acc = KahanSum::new();
        for (v, m) in self.iter() {
            acc.add(m);
            if acc.value() >= q {
                return Some(v);
            }
        }
        self.masses.keys().next_back().copied()
    }

    pub fn median(&self) -> Option<i64> {
        self.quantile(0.5)
    }

    /// Mass of the set `{v : pred(v)}`.
    pub fn mass_where(&self, mut pred: impl FnMut(i64) -> bool) -> f64 {
        self.iter()
            .filter(|&(v, _)| pred(v))
            .map(|(_, m)| m)
            .collect::<KahanSum>()
            .value()
    }

    /// Largest absolute per-point difference over the union of supports.
    pub fn max_abs_diff(&self, other: &Pmf) -> f64 {
        self.support()
            .chain(other.support())
            .map(|v| (self.mass(v) - other.mass(v)).abs())
            .fold(0.0, f64::max)
    }
}
