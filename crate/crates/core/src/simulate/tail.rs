//! Per-replication tail summaries.

use serde::{Deserialize, Serialize};

use super::{Path, SimulationBatch};
use crate::error::{Error, Result};

/// Fraction of each path kept by default in streaming runs.
pub const DEFAULT_KEEP_FRACTION: f64 = 0.1;

/// Which series a summary describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Series {
    Sigma,
    X,
    AbsX,
}

/// The values of one path above `cutoff`, with their time indices in
/// increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSample {
    pub len: usize,
    pub cutoff: f64,
    pub max: f64,
    pub exceedances: Vec<(u32, f64)>,
}

impl TailSample {
    /// Keeps the largest `⌈keep_fraction · len⌉` values (all of them when
    /// `keep_fraction = 1`).
    pub fn from_values(values: &[f64], keep_fraction: f64) -> Self {
        let len = values.len();
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let keep = ((keep_fraction * len as f64).ceil() as usize).max(1);
        let cutoff = if keep >= len {
            f64::NEG_INFINITY
        } else {
            let mut scratch = values.to_vec();
            // the (keep+1)-th largest value
            let idx = len - keep - 1;
            *scratch.select_nth_unstable_by(idx, f64::total_cmp).1
        };
        let exceedances = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > cutoff)
            .map(|(t, v)| (t as u32, *v))
            .collect();
        Self { len, cutoff, max, exceedances }
    }

    pub fn from_path(path: &Path, series: Series, keep_fraction: f64) -> Self {
        match series {
            Series::Sigma => Self::from_values(&path.sigma, keep_fraction),
            Series::X => Self::from_values(&path.x, keep_fraction),
            Series::AbsX => Self::from_values(&path.series(Series::AbsX), keep_fraction),
        }
    }

    fn value_at(&self, t: usize) -> Option<f64> {
        let t = u32::try_from(t).ok()?;
        self.exceedances
            .binary_search_by_key(&t, |e| e.0)
            .ok()
            .map(|i| self.exceedances[i].1)
    }

    /// `(X_t, X_{t+h})` for every `t` with both values retained.
    fn retained_pairs(&self, h: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.exceedances.iter().filter_map(move |&(t, v)| {
            let s = t as usize + h;
            if s >= self.len {
                return None;
            }
            self.value_at(s).map(|w| (v, w))
        })
    }
}

/// Tail summaries of all replications of one series.
#[derive(Debug, Clone, PartialEq)]
pub struct TailData {
    pub series: Series,
    pub samples: Vec<TailSample>,
}

impl TailData {
    /// Exact summaries that keep every value.
    pub fn from_batch(batch: &SimulationBatch, series: Series) -> Self {
        Self {
            series,
            samples: batch
                .paths
                .iter()
                .map(|p| TailSample::from_path(p, series, 1.0))
                .collect(),
        }
    }

    /// Exact summaries of given series, one per replication.
    pub fn from_series(series: Series, values: &[Vec<f64>]) -> Self {
        Self {
            series,
            samples: values.iter().map(|v| TailSample::from_values(v, 1.0)).collect(),
        }
    }

    /// Number of observations `M`.
    pub fn total_len(&self) -> usize {
        self.samples.iter().map(|s| s.len).sum()
    }

    /// Number of lag-`h` pairs `N`.
    pub fn pair_count(&self, h: usize) -> usize {
        self.samples.iter().map(|s| s.len.saturating_sub(h)).sum()
    }

    /// Thresholds at or above this are fully covered by the summaries.
    pub fn coverage(&self) -> f64 {
        self.samples.iter().map(|s| s.cutoff).fold(f64::NEG_INFINITY, f64::max)
    }

    fn check_covered(&self, x: f64, what: &str) -> Result<()> {
        let c = self.coverage();
        if x > c || (x == c && c == f64::NEG_INFINITY) {
            Ok(())
        } else {
            Err(Error::InsufficientData(format!(
                "{what} threshold {x} lies below the retained range (cutoff {c}); keep a larger fraction"
            )))
        }
    }

    /// All retained values, largest first.
    pub fn marginal_desc(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .samples
            .iter()
            .flat_map(|s| s.exceedances.iter().map(|e| e.1))
            .collect();
        v.sort_unstable_by(|a, b| b.total_cmp(a));
        v
    }

    /// Retained values of `min(X_t, X_{t+h})`, largest first. Every value of
    /// the min-series above [`coverage`](Self::coverage) is included.
    pub fn pair_min_desc(&self, h: usize) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .samples
            .iter()
            .flat_map(|s| s.retained_pairs(h).map(|(a, b)| a.min(b)))
            .collect();
        v.sort_unstable_by(|a, b| b.total_cmp(a));
        v
    }

    /// The `k`-th largest (1-based) of a descending list, checked against
    /// the coverage.
    pub(crate) fn order_stat(&self, desc: &[f64], k: usize, what: &str) -> Result<f64> {
        let v = *desc.get(k - 1).ok_or_else(|| {
            Error::InsufficientData(format!("{what}: only {} values retained, need {k}", desc.len()))
        })?;
        self.check_covered(v, what)?;
        Ok(v)
    }

    /// Empirical `u`-quantile of the marginal: the `(M - ⌈uM⌉ + 1)`-th
    /// largest value.
    pub fn marginal_quantile(&self, u: f64) -> Result<f64> {
        check_level(u)?;
        let m = self.total_len();
        let k = m - ceil_level(u, m) + 1;
        self.order_stat(&self.marginal_desc(), k, "marginal quantile")
    }

    /// `#{t : X_t > x}`.
    pub fn count_above(&self, x: f64) -> Result<usize> {
        self.check_covered(x, "marginal count")?;
        Ok(self
            .samples
            .iter()
            .map(|s| s.exceedances.iter().filter(|e| e.1 > x).count())
            .sum())
    }

    /// `#{t : X_t > x_0, X_{t+h} > x_1}`.
    pub fn count_joint(&self, h: usize, x0: f64, x1: f64) -> Result<usize> {
        self.check_covered(x0.min(x1), "joint count")?;
        Ok(self
            .samples
            .iter()
            .map(|s| s.retained_pairs(h).filter(|(a, b)| *a > x0 && *b > x1).count())
            .sum())
    }

    /// `#{t < len - h : X_t > x}`, the lag-`h` conditioning count.
    pub fn count_above_leading(&self, h: usize, x: f64) -> Result<usize> {
        self.check_covered(x, "marginal count")?;
        Ok(self
            .samples
            .iter()
            .map(|s| {
                s.exceedances
                    .iter()
                    .filter(|e| e.1 > x && (e.0 as usize) + h < s.len)
                    .count()
            })
            .sum())
    }
}

/// `⌈u n⌉`, ignoring rounding noise in `u n`.
pub(crate) fn ceil_level(u: f64, n: usize) -> usize {
    ((u * n as f64) - 1e-9).ceil().max(0.0) as usize
}

pub(crate) fn check_level(u: f64) -> Result<()> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidInput(format!("quantile level {u} outside (0, 1)")));
    }
    Ok(())
}
