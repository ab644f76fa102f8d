//! Reduction of an infinite program to a finite one.
//!
//! Let `t = 1/(2/sup a + 2/sup b)`. Any column with `a_i ≤ t` and `b_i ≤ t`
//! is dominated: feasibility needs at least one constraint row to gain from
//! it, and spending on it costs more than twice the best single column of
//! each row. Such columns carry zero weight in every optimal solution, so
//! the program may be cut after the last column exceeding `t`.

use super::TailLp;
use crate::error::{Error, Result};

/// Upper limit on the scan length of [`reduce_infinite`].
pub const MAX_REDUCTION_LEN: usize = 1 << 20;

/// A non-negative sequence with a certified bound on its tail suprema.
pub trait DecayingSequence {
    fn value(&self, i: usize) -> f64;

    /// An upper bound on `sup_{j ≥ i} value(j)`, non-increasing in `i`.
    fn tail_bound(&self, i: usize) -> f64;
}

/// Finitely many values followed by zeros.
#[derive(Debug, Clone, Copy)]
pub struct FiniteSequence<'a>(pub &'a [f64]);

impl DecayingSequence for FiniteSequence<'_> {
    fn value(&self, i: usize) -> f64 {
        self.0.get(i).copied().unwrap_or(0.0)
    }

    fn tail_bound(&self, i: usize) -> f64 {
        self.0.get(i..).map_or(0.0, |s| s.iter().cloned().fold(0.0, f64::max))
    }
}

/// `scale · ratio^i`.
#[derive(Debug, Clone, Copy)]
pub struct Geometric {
    pub scale: f64,
    pub ratio: f64,
}

impl DecayingSequence for Geometric {
    fn value(&self, i: usize) -> f64 {
        self.scale * self.ratio.powi(i as i32)
    }

    fn tail_bound(&self, i: usize) -> f64 {
        self.value(i)
    }
}

/// Explicit prefix, then `c · i^{-θ}`.
#[derive(Debug, Clone)]
pub struct PowerLaw {
    pub prefix: Vec<f64>,
    pub c: f64,
    pub theta: f64,
}

impl DecayingSequence for PowerLaw {
    fn value(&self, i: usize) -> f64 {
        match self.prefix.get(i) {
            Some(v) => *v,
            None => self.c * (i as f64).powf(-self.theta),
        }
    }

    fn tail_bound(&self, i: usize) -> f64 {
        let head = self.prefix.get(i..).map_or(0.0, |s| s.iter().cloned().fold(0.0, f64::max));
        let start = i.max(self.prefix.len()).max(1) as f64;
        head.max(self.c * start.powf(-self.theta))
    }
}

/// `inner(i - shift)`, zero for `i < shift`.
#[derive(Debug, Clone, Copy)]
pub struct LagShift<'a, S: ?Sized> {
    pub inner: &'a S,
    pub shift: usize,
}

impl<S: DecayingSequence + ?Sized> DecayingSequence for LagShift<'_, S> {
    fn value(&self, i: usize) -> f64 {
        i.checked_sub(self.shift).map_or(0.0, |j| self.inner.value(j))
    }

    fn tail_bound(&self, i: usize) -> f64 {
        self.inner.tail_bound(i.saturating_sub(self.shift))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    /// The retained leading columns.
    pub lp: TailLp,
    /// Number of retained columns.
    pub len: usize,
    pub threshold: f64,
}

/// Scans for the supremum: stops once the running maximum dominates the
/// remaining tail bound.
fn supremum<S: DecayingSequence + ?Sized>(s: &S, max_len: usize) -> Result<f64> {
    let mut best = 0.0f64;
    for i in 0..max_len {
        let v = s.value(i);
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidInput(format!("coefficient {i} = {v} is not a finite non-negative number")));
        }
        best = best.max(v);
        if best > 0.0 && s.tail_bound(i + 1) <= best {
            return Ok(best);
        }
    }
    Err(Error::InvalidInput(format!(
        "supremum not certified within {max_len} terms"
    )))
}

/// Cuts an infinite program `(a, b)` to its first `len` columns, where
/// every later column is dominated.
pub fn reduce_infinite<A, B>(a: &A, b: &B, max_len: usize) -> Result<Reduction>
where
    A: DecayingSequence + ?Sized,
    B: DecayingSequence + ?Sized,
{
    let sup_a = supremum(a, max_len)?;
    let sup_b = supremum(b, max_len)?;
    let threshold = 1.0 / (2.0 / sup_a + 2.0 / sup_b);
    let horizon = (0..=max_len)
        .find(|&i| a.tail_bound(i) <= threshold && b.tail_bound(i) <= threshold)
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "coefficients do not fall below {threshold} within {max_len} terms"
            ))
        })?;
    let len = (0..horizon)
        .rev()
        .find(|&i| a.value(i).max(b.value(i)) > threshold)
        .map_or(0, |i| i + 1);
    let lp = TailLp::new(
        (0..len).map(|i| a.value(i)).collect(),
        (0..len).map(|i| b.value(i)).collect(),
    )?;
    Ok(Reduction { lp, len, threshold })
}

#[cfg(test)]
mod tests {
    use super::super::solve_lp;
    use super::*;

    #[test]
    fn ar1_half_lag_one_keeps_three_columns() {
        let alpha = Geometric { scale: 1.0, ratio: 0.5 };
        let a = LagShift { inner: &alpha, shift: 1 };
        let r = reduce_infinite(&a, &alpha, MAX_REDUCTION_LEN).unwrap();
        assert_eq!(r.threshold, 0.25);
        assert_eq!(r.len, 3);
        let s = solve_lp(&r.lp);
        assert!((s.objective - 1.5).abs() < 1e-15);
    }

    #[test]
    fn finite_sequence_reduction_matches_full_program() {
        let v = [1.0, 0.7, 0.1, 0.05, 0.02];
        let seq = FiniteSequence(&v);
        for h in 1..4 {
            let a = LagShift { inner: &seq, shift: h };
            let r = reduce_infinite(&a, &seq, 100).unwrap();
            let full = TailLp::new(
                (0..v.len() + h).map(|i| a.value(i)).collect(),
                (0..v.len() + h).map(|i| seq.value(i)).collect(),
            )
            .unwrap();
            assert_eq!(solve_lp(&r.lp).objective, solve_lp(&full).objective);
            assert!(r.len <= full.len());
        }
    }

    #[test]
    fn power_law_tail() {
        let p = PowerLaw { prefix: vec![1.0, 0.6], c: 2.0, theta: 2.0 };
        assert_eq!(p.value(4), 0.125);
        assert!(p.tail_bound(2) >= p.value(2));
        let a = LagShift { inner: &p, shift: 1 };
        let r = reduce_infinite(&a, &p, 10_000).unwrap();
        assert!(r.len >= 2);
    }

    #[test]
    fn slow_decay_hits_scan_limit() {
        let g = Geometric { scale: 1.0, ratio: 1.0 - 1e-9 };
        assert!(reduce_infinite(&g, &g, 1000).is_err());
    }
}
